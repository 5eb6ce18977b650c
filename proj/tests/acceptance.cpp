// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mbet/mbet.hpp"
#include "oracles.hpp"

using namespace mbet;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

Scenario with_channel(Scenario s, EstimatorKind kind, ChannelMode mode, double p = 0.0) {
    s.estimator = kind;
    s.channel.mode = mode;
    s.channel.p = p;
    return s;
}

/// Perturbation seeds of the vehicle whose open loop has an exponentially
/// unstable mode, plus the seeds passed over on the way.
struct SeedFamily {
    std::vector<std::uint64_t> qualifying;
    std::vector<std::uint64_t> skipped;
};

SeedFamily seed_family(std::size_t count) {
    SeedFamily f;
    for (std::uint64_t seed = 1; f.qualifying.size() < count; ++seed) {
        (has_unstable_mode(vehicle_preset(seed).plant.A) ? f.qualifying : f.skipped).push_back(seed);
    }
    return f;
}

std::string seed_list(const std::vector<std::uint64_t>& seeds) {
    std::string s;
    for (auto v : seeds) s += (s.empty() ? "" : " ") + std::to_string(v);
    return s;
}

Verdict criterion_1(const SeedFamily& fam) {
    Verdict o;
    const auto t0 = Clock::now();
    const Scenario nominal = with_channel(vehicle_preset(), EstimatorKind::ModelBased, ChannelMode::WorstCase);
    const Trace tr = simulate(nominal);
    const BoundsReport rep = analyze_model_based(nominal, &tr);
    const BoundCheck chk = verify_ec_bound(tr, rep.Delta, nominal.trigger);
    const double elapsed = seconds_since(t0);
    o.pass = chk.ok && elapsed < 10.0;
    o.detail = "nominal: Delta=" + fmt("%.6g", rep.Delta) + " worst_ratio=" + fmt("%.3g", chk.worst_ratio) +
               " trivial_cycles=" + std::to_string(rep.trivial_cycles) + "/" + std::to_string(rep.cycles) +
               " time=" + fmt("%.2fs", elapsed);

    // Perturbed draws exercise the bound with non-trivial cycles.
    double worst = 0.0, max_delta = 0.0;
    for (std::size_t k = 0; k < 5; ++k) {
        const Scenario s =
            with_channel(vehicle_preset(fam.qualifying[k]), EstimatorKind::ModelBased, ChannelMode::WorstCase);
        const Trace t = simulate(s);
        const BoundsReport r = analyze_model_based(s, &t);
        const BoundCheck c = verify_ec_bound(t, r.Delta, s.trigger);
        o.pass = o.pass && c.ok;
        worst = std::max(worst, c.worst_ratio);
        max_delta = std::max(max_delta, r.Delta);
    }
    o.detail += "; 5 perturbed draws: max Delta=" + fmt("%.4g", max_delta) + " worst_ratio=" + fmt("%.3g", worst);
    return o;
}

struct FamilyResult {
    Verdict zeno;
    Verdict stability;
};

FamilyResult criteria_2_3(const SeedFamily& fam) {
    FamilyResult res;
    const auto t0 = Clock::now();
    double min_miet = std::numeric_limits<double>::infinity();
    double min_margin = std::numeric_limits<double>::infinity();  // measured gap / miet
    double worst_final = 0.0, worst_env = 0.0;
    std::size_t runs = 0;

    const auto check_stability = [&](const Scenario& s, const Trace& tr, const BoundsReport* rep) {
        const double ratio = tr.samples.back().x.norm() / s.x0.norm();
        worst_final = std::max(worst_final, ratio);
        if (!(ratio <= 0.01)) res.stability.pass = false;
        if (rep == nullptr) return;
        const double env = rep->stability_envelope(s.trigger);
        for (const auto& smp : tr.samples) {
            const double r = smp.x.norm() * std::exp(s.trigger.alpha * smp.t) / env;
            worst_env = std::max(worst_env, r);
            if (r > 1.0 + 1e-9) res.stability.pass = false;
        }
    };

    for (std::uint64_t seed : fam.qualifying) {
        const Scenario base = vehicle_preset(seed);
        const Scenario wc = with_channel(base, EstimatorKind::ModelBased, ChannelMode::WorstCase);
        const Trace wtr = simulate(wc);
        const BoundsReport wrep = analyze_model_based(wc, &wtr);
        std::vector<std::pair<Scenario, Trace>> family{{wc, wtr}};
        for (double p : {0.0, 0.5, 0.9}) {
            Scenario s = with_channel(base, EstimatorKind::ModelBased, ChannelMode::Bernoulli, p);
            s.channel.seed = seed;
            family.emplace_back(s, simulate(s));
        }
        for (const auto& [s, tr] : family) {
            ++runs;
            // Delta instantiated on the worst-case trace and on this run's own cycles.
            BoundsReport rep = analyze_model_based(s, &tr);
            if (wrep.Delta > rep.Delta) {
                const MietReport m = min_inter_event_time(s.plant, s.model, s.gain, s.trigger, s.channel.M, wrep.Delta,
                                                          s.x0.norm(), rep.plant_envelope);
                rep.Delta = wrep.Delta;
                rep.miet = m.miet;
            }
            if (!(rep.miet > 0.0)) res.zeno.pass = false;
            min_miet = std::min(min_miet, rep.miet);
            const SummaryStats st = summarize(tr, s.trigger);
            if (st.min_inter_event) {
                min_margin = std::min(min_margin, *st.min_inter_event / rep.miet);
                if (*st.min_inter_event < rep.miet) res.zeno.pass = false;
            }
            if (!verify_ec_bound(tr, rep.Delta, s.trigger).ok) res.stability.pass = false;
            check_stability(s, tr, &rep);
        }
    }
    const double elapsed = seconds_since(t0);

    std::size_t skipped_runs = 0;
    for (std::uint64_t seed : fam.skipped) {
        const Scenario base = vehicle_preset(seed);
        check_stability(base, simulate(with_channel(base, EstimatorKind::ModelBased, ChannelMode::WorstCase)), nullptr);
        for (double p : {0.0, 0.5, 0.9}) {
            Scenario s = with_channel(base, EstimatorKind::ModelBased, ChannelMode::Bernoulli, p);
            s.channel.seed = seed;
            check_stability(s, simulate(s), nullptr);
        }
        skipped_runs += 4;
    }

    res.zeno.pass = res.zeno.pass && elapsed < 120.0;
    res.zeno.detail = std::to_string(fam.qualifying.size()) + " draws x {worst, p=0, 0.5, 0.9}: min miet=" +
                      fmt("%.4g", min_miet) + " min(gap/miet)=" + fmt("%.4g", min_margin) +
                      " time=" + fmt("%.1fs", elapsed) + "; skipped seeds (no unstable mode): " +
                      seed_list(fam.skipped);
    res.stability.detail = std::to_string(runs) + " bounded runs + " + std::to_string(skipped_runs) +
                           " runs on skipped seeds: max ||x(60)||/||x0||=" + fmt("%.3g", worst_final) +
                           " max ||x||e^{at}/envelope=" + fmt("%.3g", worst_env);
    return res;
}

Verdict criterion_4(const SeedFamily& fam) {
    Verdict o;
    std::vector<Scenario> cases{with_channel(vehicle_preset(), EstimatorKind::ZeroOrderHold, ChannelMode::WorstCase)};
    for (std::uint64_t seed : fam.qualifying) {
        cases.push_back(with_channel(vehicle_preset(seed), EstimatorKind::ZeroOrderHold, ChannelMode::WorstCase));
    }
    double worst = 0.0, nominal_delta = 0.0, max_delta = 0.0;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const Trace tr = simulate(cases[k]);
        const ZohBoundsReport rep = analyze_zoh(cases[k], &tr);
        const BoundCheck chk = verify_ec_bound(tr, rep.Delta_zoh, cases[k].trigger);
        o.pass = o.pass && chk.ok;
        worst = std::max(worst, chk.worst_ratio);
        if (k == 0) nominal_delta = rep.Delta_zoh;
        max_delta = std::max(max_delta, rep.Delta_zoh);
    }
    o.detail = "nominal Delta_zoh=" + fmt("%.5g", nominal_delta) + ", " + std::to_string(cases.size()) +
               " runs: max Delta_zoh=" + fmt("%.5g", max_delta) + " worst_ratio=" + fmt("%.3g", worst);
    return o;
}

Verdict criterion_5(const SeedFamily& fam) {
    Verdict o;
    int wins = 0;
    std::size_t mb_total = 0, zoh_total = 0;
    for (std::size_t k = 0; k < 20; ++k) {
        const Scenario base = vehicle_preset(fam.qualifying[k]);
        const auto script = make_drop_script(0.5, 1000 + k, base.channel.M, 20000);
        Scenario mb = with_channel(base, EstimatorKind::ModelBased, ChannelMode::Scripted);
        mb.channel.script = script;
        Scenario zoh = mb;
        zoh.estimator = EstimatorKind::ZeroOrderHold;
        const std::size_t m = simulate(mb).triggers.size();
        const std::size_t z = simulate(zoh).triggers.size();
        mb_total += m;
        zoh_total += z;
        if (z >= m) ++wins;
    }
    o.pass = wins >= 18;
    o.detail = "ZOH >= MB in " + std::to_string(wins) + "/20 pairs; total triggers MB=" + std::to_string(mb_total) +
               " ZOH=" + std::to_string(zoh_total);
    return o;
}

Scenario random_scenario(std::mt19937_64& rng) {
    for (;;) {
        Scenario s;
        const Matrix a_hat = oracle::random_matrix(rng, 3, 3, 0.8);
        const Matrix b_hat = oracle::random_matrix(rng, 3, 2);
        s.model = {a_hat, b_hat};
        s.plant = {a_hat + oracle::random_matrix(rng, 3, 3, 0.05), b_hat + oracle::random_matrix(rng, 3, 2, 0.05)};
        s.gain = {Matrix(-2.0 * b_hat.transpose())};
        s.estimator = rng() % 2 == 0 ? EstimatorKind::ModelBased : EstimatorKind::ZeroOrderHold;
        s.trigger = {std::uniform_real_distribution<double>(0.05, 0.5)(rng),
                     std::uniform_real_distribution<double>(0.05, 0.3)(rng)};
        s.channel.M = std::uniform_int_distribution<int>(2, 6)(rng);
        s.channel.mode = static_cast<ChannelMode>(rng() % 3);
        s.channel.p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        s.channel.seed = rng();
        s.x0 = oracle::random_matrix(rng, 3, 1);
        s.t_max = 6.0;
        s.sample_dt = 1e-2;
        s.event_tol = 1e-10;
        if (scenario_issues(s).empty()) return s;
    }
}

/// Number of protocol violations in one trace.
std::size_t protocol_violations(const Scenario& s, const Trace& tr) {
    std::size_t bad = 0;
    const auto expect = [&](bool ok) { bad += ok ? 0 : 1; };
    int drops = 0;
    bool window_open = true;
    for (std::size_t i = 0; i < tr.samples.size(); ++i) {
        const Sample& smp = tr.samples[i];
        const bool pre_row = i + 1 < tr.samples.size() && tr.samples[i + 1].triggered;
        if (smp.delivered) expect(smp.triggered);
        if (smp.triggered) {
            const Sample& pre = tr.samples[i - 1];
            expect(pre.t == smp.t && pre.x == smp.x);
            expect(smp.x_s == smp.x);
            if (smp.delivered) {
                expect(smp.x_c == smp.x);
                drops = 0;
                window_open = true;
            } else {
                expect(smp.x_c == pre.x_c);
                ++drops;
                window_open = false;
                expect(drops <= s.channel.M - 1);
            }
        } else if (!pre_row) {
            expect(smp.es_norm <= smp.threshold);
            if (window_open) expect(smp.x_c == smp.x_s);
        }
    }
    expect(std::includes(tr.triggers.begin(), tr.triggers.end(), tr.deliveries.begin(), tr.deliveries.end()));
    return bad;
}

Verdict criterion_6() {
    Verdict o;
    std::mt19937_64 rng(606);
    std::size_t offers = 0, channel_bad = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const int M = std::uniform_int_distribution<int>(2, 9)(rng);
        const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        const auto mode = static_cast<ChannelMode>(trial % 4);
        ChannelPolicy policy{M, mode, p, rng(), {}};
        if (mode == ChannelMode::Scripted) policy.script = make_drop_script(p, rng(), M, 500);
        ChannelState state = ChannelState::initial(policy);
        int run = 0;
        for (int k = 0; k < 500; ++k, ++offers) {
            const OfferResult r = channel_offer(policy, state);
            state = r.next;
            run = r.outcome == Outcome::Dropped ? run + 1 : 0;
            if (run > M - 1) ++channel_bad;
        }
    }
    std::size_t sim_bad = 0, triggers = 0;
    for (int k = 0; k < 50; ++k) {
        const Scenario s = k % 5 == 0 ? vehicle_preset(static_cast<std::uint64_t>(k + 1)) : random_scenario(rng);
        Scenario run = s;
        if (k % 5 == 0) run.t_max = 20.0;
        const Trace tr = simulate(run);
        triggers += tr.triggers.size();
        sim_bad += protocol_violations(run, tr);
    }
    o.pass = offers >= 10000 && channel_bad == 0 && sim_bad == 0;
    o.detail = std::to_string(offers) + " offers, " + std::to_string(channel_bad) + " MANSD violations; 50 simulations (" +
               std::to_string(triggers) + " triggers), " + std::to_string(sim_bad) + " protocol violations";
    return o;
}

bool decay_envelope_holds(const Matrix& m, std::mt19937_64& rng) {
    const DecayEnvelope env = decay_envelope(m);
    std::uniform_real_distribution<double> tdist(0.0, 40.0 / env.rate);
    for (int k = 0; k < 200; ++k) {
        const double t = tdist(rng);
        const double lhs = oracle::taylor_expm(m, t).jacobiSvd().singularValues()(0);
        if (lhs > env.c * std::exp(-env.rate * t) * (1.0 + 1e-9)) return false;
    }
    return true;
}

bool growth_envelope_holds(const Matrix& gamma, const Vector& x0, std::mt19937_64& rng) {
    const GrowthEstimator est(gamma, default_growth_horizon(gamma));
    const GrowthEnvelope env = est(x0);
    const Index n = x0.size();
    std::uniform_real_distribution<double> tdist(0.5 * est.horizon(), est.horizon());
    for (int k = 0; k < 50; ++k) {
        const double t = tdist(rng);
        const Matrix phi = oracle::taylor_expm(gamma, t);
        const double lhs = ((phi.topLeftCorner(n, n) + phi.topRightCorner(n, n)) * x0).norm();
        if (lhs < env.eta * std::exp(env.gamma * t)) return false;
    }
    return true;
}

Verdict criterion_7(const SeedFamily& fam) {
    Verdict o;
    std::mt19937_64 rng(707);

    double worst_expm = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Matrix m = oracle::random_matrix(rng, 4, 4);
        const Matrix ref = oracle::taylor_expm(m);
        worst_expm = std::max(worst_expm, (mat_exp(m) - ref).norm() / ref.norm());
    }
    const bool expm_ok = worst_expm <= 1e-8;

    std::size_t env_cases = 0, env_bad = 0;
    for (int i = 0; i < 20; ++i) {
        Matrix m = oracle::random_matrix(rng, 4, 4);
        m -= (spectral_abscissa(m) + std::uniform_real_distribution<double>(0.05, 1.0)(rng)) * Matrix::Identity(4, 4);
        ++env_cases;
        if (!decay_envelope_holds(m, rng)) ++env_bad;
    }
    double min_residual = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed : fam.qualifying) {
        const Scenario s = vehicle_preset(seed);
        for (const Matrix& m : {plant_closed_loop(s.plant, s.gain), model_closed_loop(s.model, s.gain)}) {
            ++env_cases;
            if (!decay_envelope_holds(m, rng)) ++env_bad;
        }
        for (const Matrix& g : {gamma_matrix(s.plant, s.model, s.gain), gamma_zoh(s.plant, s.gain)}) {
            ++env_cases;
            if (!growth_envelope_holds(g, s.x0, rng)) ++env_bad;
        }
        min_residual = std::min(min_residual, stable_subspace_residual(s.plant, s.model, s.gain, s.x0).residual);
    }
    const Scenario nominal = vehicle_preset();
    const double nominal_residual = stable_subspace_residual(nominal.plant, nominal.model, nominal.gain, nominal.x0).residual;

    // Scaling covariance on random three-state loops with one unstable mode.
    double worst_scaling = 0.0;
    for (int i = 0; i < 20; ++i) {
        const Matrix a_hat = oracle::with_eigenvalues(rng, {0.5, -1.0, -2.0});
        const Matrix b_hat = Matrix::Identity(3, 3) + 0.2 * oracle::random_matrix(rng, 3, 3);
        const Matrix closed = oracle::with_eigenvalues(rng, {-1.5, -2.5, -3.5});
        const NominalModel model{a_hat, b_hat};
        const Gain gain{b_hat.inverse() * (closed - a_hat)};
        const Plant plant{a_hat + 0.2 * oracle::random_matrix(rng, 3, 3), b_hat};
        const Vector x0 = oracle::random_matrix(rng, 3, 1);
        const double c = std::uniform_real_distribution<double>(-5.0, 5.0)(rng);
        const double r1 = stable_subspace_residual(plant, model, gain, x0).residual;
        const double rc = stable_subspace_residual(plant, model, gain, c * x0).residual;
        worst_scaling = std::max(worst_scaling, std::abs(rc - std::abs(c) * r1) / std::max(1e-300, std::abs(c) * r1));
    }

    o.pass = expm_ok && env_bad == 0 && min_residual > 1e-6 && worst_scaling <= 1e-9;
    o.detail = "expm max rel err=" + fmt("%.2e", worst_expm) + "; envelopes " + std::to_string(env_cases - env_bad) +
               "/" + std::to_string(env_cases) + " hold; residual min over perturbed draws=" +
               fmt("%.3g", min_residual) + " (nominal " + fmt("%.1e", nominal_residual) +
               "); scaling rel err=" + fmt("%.1e", worst_scaling);
    return o;
}

std::string csv_of(const Scenario& s) {
    std::ostringstream out;
    write_trace_csv(out, simulate(s));
    return out.str();
}

Verdict criterion_8() {
    Verdict o;
    std::vector<Scenario> cases;
    Scenario b = vehicle_preset(3);
    b.channel.seed = 17;
    cases.push_back(b);
    cases.push_back(with_channel(vehicle_preset(3), EstimatorKind::ZeroOrderHold, ChannelMode::Bernoulli, 0.9));
    cases.push_back(with_channel(vehicle_preset(), EstimatorKind::ModelBased, ChannelMode::WorstCase));
    std::size_t bytes = 0;
    for (const auto& s : cases) {
        const std::string first = csv_of(s);
        const std::string second = csv_of(s);
        bytes += first.size();
        if (first != second) o.pass = false;
    }
    o.detail = std::to_string(cases.size()) + " seeded scenarios, " + std::to_string(bytes) + " bytes compared";
    return o;
}

}  // namespace

int main() {
    const SeedFamily fam = seed_family(50);
    bool all = true;
    const auto report = [&](int id, const char* name, const Verdict& o) {
        std::printf("criterion %d %s: %s (%s)\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    };
    const auto guarded = [&](int id, const char* name, auto&& fn) {
        try {
            report(id, name, fn());
        } catch (const std::exception& e) {
            report(id, name, Verdict{false, std::string("exception: ") + e.what()});
        }
    };

    guarded(1, "model-based e_c bound, worst-case channel", [&] { return criterion_1(fam); });
    try {
        const FamilyResult fr = criteria_2_3(fam);
        report(2, "minimum inter-event time", fr.zeno);
        report(3, "asymptotic stability envelope", fr.stability);
    } catch (const std::exception& e) {
        report(2, "minimum inter-event time", Verdict{false, std::string("exception: ") + e.what()});
        report(3, "asymptotic stability envelope", Verdict{false, "not evaluated"});
    }
    guarded(4, "zero-order-hold e_c bound, worst-case channel", [&] { return criterion_4(fam); });
    guarded(5, "ZOH triggers at least as often as MB", [&] { return criterion_5(fam); });
    guarded(6, "dropout cap and protocol invariants", [] { return criterion_6(); });
    guarded(7, "numerics oracles", [&] { return criterion_7(fam); });
    guarded(8, "deterministic trace files", [] { return criterion_8(); });
    return all ? 0 : 1;
}
