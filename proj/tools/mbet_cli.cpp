// Command-line front end: simulate, bounds, verify, sweep, preset.
//
// Exit codes: 0 success, 1 validation or usage error, 2 bound violation
// (verify), 3 runtime or numerics failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mbet/mbet.hpp"

namespace {

using namespace mbet;

constexpr int kExitValidation = 1;
constexpr int kExitViolation = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> perturb_seed;
    std::string estimator;
    std::string policy;
    std::optional<double> p;
    std::optional<std::uint64_t> seed;
    std::optional<int> M;
    std::optional<double> tmax;
    std::string out;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "Scenario JSON file (default: vehicle preset)");
    cmd->add_option("--perturb-seed", o.perturb_seed, "Perturbation seed for the vehicle preset");
    cmd->add_option("--estimator", o.estimator, "Estimator override: mb or zoh");
    cmd->add_option("--policy", o.policy, "Channel mode override: always, worst, bernoulli, scripted");
    cmd->add_option("--p", o.p, "Drop probability override (bernoulli)");
    cmd->add_option("--seed", o.seed, "Channel seed override (bernoulli)");
    cmd->add_option("--M", o.M, "Dropout cap override (at most M-1 successive drops)");
    cmd->add_option("--tmax", o.tmax, "Simulation horizon override");
    cmd->add_option("--out", o.out, "Output file (default: stdout)");
}

Scenario build_scenario(const CommonOptions& o) {
    Scenario scn;
    if (!o.config.empty()) {
        if (o.perturb_seed) throw ValidationError("--perturb-seed applies to the vehicle preset only, not --config");
        scn = load_scenario(o.config);
    } else {
        scn = vehicle_preset(o.perturb_seed);
    }
    if (!o.estimator.empty()) {
        const auto kind = estimator_from_string(o.estimator);
        if (!kind) throw ValidationError("--estimator: must be mb or zoh");
        scn.estimator = *kind;
    }
    if (!o.policy.empty()) {
        const auto mode = channel_mode_from_string(o.policy);
        if (!mode) throw ValidationError("--policy: must be always, worst, bernoulli or scripted");
        scn.channel.mode = *mode;
    }
    if (o.p) scn.channel.p = *o.p;
    if (o.seed) scn.channel.seed = *o.seed;
    if (o.M) scn.channel.M = *o.M;
    if (o.tmax) scn.t_max = *o.tmax;
    validate(scn);
    return scn;
}

/// Writes `text` to `path`, or to stdout when path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("--out: cannot write " + path);
    out << text;
}

/// One-line human summary: stdout when data goes to a file, stderr otherwise.
std::ostream& summary_stream(const std::string& out_path) { return out_path.empty() ? std::cerr : std::cout; }

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("n/a"); }

int run_simulate(const CommonOptions& o, const std::string& summary_path) {
    const Scenario scn = build_scenario(o);
    const Trace tr = simulate(scn);
    const SummaryStats st = summarize(tr, scn.trigger);
    if (o.format == "json") {
        emit(o.out, trace_to_json(tr).dump() + "\n");
    } else {
        std::ostringstream csv;
        write_trace_csv(csv, tr);
        emit(o.out, csv.str());
    }
    if (!summary_path.empty()) emit(summary_path, to_json(st).dump(2) + "\n");
    summary_stream(o.out) << "simulate: estimator=" << to_string(scn.estimator) << " channel=" << to_string(scn.channel.mode)
                          << " triggers=" << st.trigger_count << " deliveries=" << st.delivery_count
                          << " min_inter_event=" << fmt(st.min_inter_event) << " final_norm=" << fmt(st.final_state_norm)
                          << '\n';
    return 0;
}

json subspace_json(const Scenario& scn) {
    try {
        return to_json(stable_subspace_residual(scn.plant, scn.model, scn.gain, scn.x0));
    } catch (const std::exception& e) {
        return {{"error", e.what()}};
    }
}

Scenario worst_case(Scenario scn) {
    scn.channel.mode = ChannelMode::WorstCase;
    return scn;
}

int run_bounds(const CommonOptions& o, const std::optional<double>& eta, const std::optional<double>& zeta,
               const std::optional<double>& gamma) {
    const Scenario scn = build_scenario(o);
    const bool manual = eta || zeta || gamma;
    if (manual && !(eta && zeta && gamma)) throw ValidationError("--eta, --zeta and --gamma must be given together");
    json doc;
    std::ostringstream line;
    if (scn.estimator == EstimatorKind::ModelBased) {
        BoundsReport rep;
        if (manual) {
            rep = analyze_model_based_manual(scn, *eta, *zeta, *gamma);
        } else {
            const Scenario wc = worst_case(scn);
            const Trace tr = simulate(wc);
            rep = analyze_model_based(wc, &tr);
        }
        doc = {{"mode", manual ? "manual" : "worst_case_trace"}, {"bounds", to_json(rep)}};
        line << "bounds: estimator=mb Delta=" << fmt(rep.Delta) << " miet=" << fmt(rep.miet);
    } else {
        if (manual) throw ValidationError("--eta/--zeta/--gamma apply to the model-based estimator only");
        const Scenario wc = worst_case(scn);
        const Trace tr = simulate(wc);
        const ZohBoundsReport rep = analyze_zoh(wc, &tr);
        doc = {{"mode", "worst_case_trace"}, {"zoh_bounds", to_json(rep)}};
        line << "bounds: estimator=zoh Delta_zoh=" << fmt(rep.Delta_zoh);
    }
    doc["subspace"] = subspace_json(scn);
    emit(o.out, doc.dump(2) + "\n");
    summary_stream(o.out) << line.str() << '\n';
    return 0;
}

int run_verify(const CommonOptions& o) {
    const Scenario scn = worst_case(build_scenario(o));
    const Trace tr = simulate(scn);
    const SummaryStats st = summarize(tr, scn.trigger);
    json doc = {{"summary", to_json(st)}};
    bool ok = true;
    std::ostringstream line;
    if (scn.estimator == EstimatorKind::ModelBased) {
        const BoundsReport rep = analyze_model_based(scn, &tr);
        const BoundCheck chk = verify_ec_bound(tr, rep.Delta, scn.trigger);
        const bool miet_ok = !st.min_inter_event || rep.miet <= *st.min_inter_event;
        ok = chk.ok && miet_ok;
        doc["bounds"] = to_json(rep);
        doc["ec_bound"] = {{"ok", chk.ok}, {"worst_ratio", chk.worst_ratio}, {"worst_t", chk.worst_t}};
        doc["miet_check"] = {{"ok", miet_ok}, {"miet", rep.miet}, {"min_inter_event", optional_to_json(st.min_inter_event)}};
        line << "verify: estimator=mb Delta=" << fmt(rep.Delta) << " worst_ratio=" << fmt(chk.worst_ratio)
             << " miet=" << fmt(rep.miet) << " min_inter_event=" << fmt(st.min_inter_event);
    } else {
        const ZohBoundsReport rep = analyze_zoh(scn, &tr);
        const BoundCheck chk = verify_ec_bound(tr, rep.Delta_zoh, scn.trigger);
        ok = chk.ok;
        doc["zoh_bounds"] = to_json(rep);
        doc["ec_bound"] = {{"ok", chk.ok}, {"worst_ratio", chk.worst_ratio}, {"worst_t", chk.worst_t}};
        line << "verify: estimator=zoh Delta_zoh=" << fmt(rep.Delta_zoh) << " worst_ratio=" << fmt(chk.worst_ratio);
    }
    doc["ok"] = ok;
    if (!o.out.empty()) emit(o.out, doc.dump(2) + "\n");
    std::cout << line.str() << (ok ? " PASS" : " FAIL") << '\n';
    return ok ? 0 : kExitViolation;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void apply_param(Scenario& scn, const std::string& param, double value) {
    if (param == "channel.p") {
        scn.channel.p = value;
    } else if (param == "trigger.beta") {
        scn.trigger.beta = value;
    } else if (param == "trigger.alpha") {
        scn.trigger.alpha = value;
    } else if (param == "channel.M") {
        scn.channel.M = static_cast<int>(value);
        if (static_cast<double>(scn.channel.M) != value) throw ValidationError("--values: channel.M needs integers");
    } else if (param == "sim.t_max") {
        scn.t_max = value;
    } else {
        throw ValidationError("--param: must be channel.p, channel.M, trigger.beta, trigger.alpha or sim.t_max");
    }
}

int run_sweep(const CommonOptions& o, const std::string& param, const std::string& values, int repeats,
              const std::string& estimators) {
    if (repeats < 1) throw ValidationError("--repeats: must be >= 1");
    const Scenario base = build_scenario(o);
    std::vector<double> vals;
    const std::vector<std::string> tokens = split_list(values);
    for (const auto& v : tokens) {
        std::size_t used = 0;
        double x = 0.0;
        try {
            x = std::stod(v, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != v.size()) throw ValidationError("--values: '" + v + "' is not a number");
        vals.push_back(x);
    }
    if (vals.empty()) throw ValidationError("--values: at least one value is required");
    std::vector<EstimatorKind> kinds;
    for (const auto& e : split_list(estimators)) {
        const auto kind = estimator_from_string(e);
        if (!kind) throw ValidationError("--estimator: entries must be mb or zoh");
        kinds.push_back(*kind);
    }
    if (kinds.empty()) kinds.push_back(base.estimator);

    std::ostringstream csv;
    csv << "param,value,repeat,estimator,channel,channel_seed,trigger_count,delivery_count,min_inter_event,"
           "mean_inter_event,min_receive_interval,mean_receive_interval,final_state_norm,empirical_delta\n";
    const auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    std::size_t runs = 0;
    for (std::size_t vi = 0; vi < vals.size(); ++vi) {
        const double v = vals[vi];
        for (int r = 0; r < repeats; ++r) {
            for (EstimatorKind kind : kinds) {
                // Runs of the same (value, repeat) share the channel seed, so the
                // k-th offer meets the same drop decision under either estimator.
                Scenario scn = base;
                apply_param(scn, param, v);
                scn.estimator = kind;
                scn.channel.seed = base.channel.seed + static_cast<std::uint64_t>(r);
                validate(scn);
                const SummaryStats st = summarize(simulate(scn), scn.trigger);
                csv << param << ',' << tokens[vi] << ',' << r << ',' << to_string(kind) << ','
                    << to_string(scn.channel.mode) << ',' << scn.channel.seed << ',' << st.trigger_count << ','
                    << st.delivery_count << ',' << opt(st.min_inter_event) << ',' << opt(st.mean_inter_event) << ','
                    << opt(st.min_receive_interval) << ',' << opt(st.mean_receive_interval) << ','
                    << format_double(st.final_state_norm) << ',' << format_double(st.empirical_delta) << '\n';
                ++runs;
            }
        }
    }
    emit(o.out, csv.str());
    summary_stream(o.out) << "sweep: param=" << param << " values=" << vals.size() << " runs=" << runs << '\n';
    return 0;
}

int run_preset(const CommonOptions& o) {
    const Scenario scn = build_scenario(o);
    emit(o.out, scenario_to_json(scn).dump(2) + "\n");
    summary_stream(o.out) << "preset: n=" << scn.plant.n() << " m=" << scn.plant.m()
                          << (o.perturb_seed ? " perturbed" : " nominal") << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Event-triggered control simulator and bound calculator"};
    app.require_subcommand(1);

    CommonOptions sim_opt, bnd_opt, ver_opt, swp_opt, pre_opt;
    std::string summary_path;
    std::optional<double> eta, zeta, gamma;
    std::string param = "channel.p", values, estimators;
    int repeats = 1;

    auto* sim = app.add_subcommand("simulate", "Simulate a scenario and write its trace");
    add_common(sim, sim_opt);
    sim->add_option("--format", sim_opt.format, "Trace format")->check(CLI::IsMember({"csv", "json"}));
    sim->add_option("--summary", summary_path, "Write summary statistics JSON to this file");

    auto* bnd = app.add_subcommand("bounds", "Compute the analytical bounds (JSON)");
    add_common(bnd, bnd_opt);
    bnd->add_option("--eta", eta, "Manual eta for every interval");
    bnd->add_option("--zeta", zeta, "Manual zeta for every interval");
    bnd->add_option("--gamma", gamma, "Manual growth rate gamma");

    auto* ver = app.add_subcommand("verify", "Check the bounds on a worst-case run (exit 2 on violation)");
    add_common(ver, ver_opt);

    auto* swp = app.add_subcommand("sweep", "Run a parameter sweep and write one CSV row per run");
    add_common(swp, swp_opt);
    swp->add_option("--param", param, "Swept key: channel.p, channel.M, trigger.beta, trigger.alpha, sim.t_max");
    swp->add_option("--values", values, "Comma-separated values")->required();
    swp->add_option("--repeats", repeats, "Runs per value, with channel seeds seed, seed+1, ...");
    swp->remove_option(swp->get_option("--estimator"));
    swp->add_option("--estimator", estimators, "Comma-separated estimators, e.g. mb,zoh");

    auto* pre = app.add_subcommand("preset", "Write the vehicle preset scenario (JSON)");
    add_common(pre, pre_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    }

    try {
        if (sim->parsed()) return run_simulate(sim_opt, summary_path);
        if (bnd->parsed()) return run_bounds(bnd_opt, eta, zeta, gamma);
        if (ver->parsed()) return run_verify(ver_opt);
        if (swp->parsed()) return run_sweep(swp_opt, param, values, repeats, estimators);
        if (pre->parsed()) return run_preset(pre_opt);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitValidation;
}
