#pragma once

// Scenario files (JSON), the lane-following vehicle preset, trace files (CSV)
// and report serialization.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "mbet/bounds.hpp"
#include "mbet/error.hpp"
#include "mbet/simulator.hpp"

namespace mbet {

using json = nlohmann::json;

/// Lane-following vehicle with state (V, r, psi, Y_g): lateral velocity, yaw
/// rate, yaw angle and lateral position of the centre of gravity.
///
/// The steering law u = [[0, 0, -K, K/d], [0, 0, -K, K/d]] x is read as a full
/// state feedback on the 4-vector with scalar gain K = 1 (the "KL = 1" value),
/// look-ahead d = 40 and speed U = -12. The nominal b2 = 13.1429 is treated as
/// the model entry b_hat_2.
///
/// With a perturbation seed, the true a_ij receive independent uniform offsets
/// in [-0.1, 0.1] and b_1, b_2 offsets in [-0.05, 0.05], drawn from SplitMix64
/// in the order a11, a12, a21, a22, b1, b2. Without a seed the plant equals the
/// nominal model.
///
/// x0 = (0, 0, 0.2, 1) and t_max = 60 are defaults of this preset, not
/// published values.
inline Scenario vehicle_preset(std::optional<std::uint64_t> perturbation_seed = std::nullopt) {
    constexpr double a11 = -1.6579, a12 = 10.4500, a21 = 0.4886, a22 = -2.7180;
    constexpr double b1 = -12.1053, b2 = 13.1429;
    constexpr double d = 40.0, U = -12.0, K = 1.0;

    const auto make_a = [&](double p11, double p12, double p21, double p22) {
        Matrix A(4, 4);
        A << p11, p12, 0, 0,
             p21, p22, 0, 0,
             0, 1, 0, 0,
             1, 0, U, 0;
        return A;
    };
    const auto make_b = [](double q1, double q2) {
        Matrix B(4, 2);
        B << q1, 0,
             0, q2,
             0, 0,
             0, 0;
        return B;
    };

    Scenario scn;
    scn.model.A_hat = make_a(a11, a12, a21, a22);
    scn.model.B_hat = make_b(b1, b2);
    if (perturbation_seed) {
        SplitMix64 rng(*perturbation_seed);
        const double p11 = a11 + rng.uniform(-0.1, 0.1);
        const double p12 = a12 + rng.uniform(-0.1, 0.1);
        const double p21 = a21 + rng.uniform(-0.1, 0.1);
        const double p22 = a22 + rng.uniform(-0.1, 0.1);
        const double q1 = b1 + rng.uniform(-0.05, 0.05);
        const double q2 = b2 + rng.uniform(-0.05, 0.05);
        scn.plant.A = make_a(p11, p12, p21, p22);
        scn.plant.B = make_b(q1, q2);
    } else {
        scn.plant.A = scn.model.A_hat;
        scn.plant.B = scn.model.B_hat;
    }
    scn.gain.K.resize(2, 4);
    scn.gain.K << 0, 0, -K, K / d,
                  0, 0, -K, K / d;
    scn.estimator = EstimatorKind::ModelBased;
    scn.trigger = {0.5, 0.25};
    scn.channel.M = 5;
    scn.channel.mode = ChannelMode::Bernoulli;
    scn.channel.p = 0.7;
    scn.channel.seed = 1;
    scn.x0 = Vector(4);
    scn.x0 << 0.0, 0.0, 0.2, 1.0;
    scn.t_max = 60.0;
    scn.sample_dt = 1e-3;
    scn.event_tol = 1e-9;
    return scn;
}

// JSON helpers ------------------------------------------------------------

inline json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

namespace detail {

class SchemaReader {
public:
    std::vector<std::string> issues;

    const json* child(const json& parent, const char* key, const std::string& path) {
        if (!parent.is_object() || !parent.contains(key)) {
            issues.push_back(path + ": missing");
            return nullptr;
        }
        return &parent.at(key);
    }

    const json* section(const json& root, const char* key) {
        const json* s = child(root, key, key);
        if (s != nullptr && !s->is_object()) {
            issues.push_back(std::string(key) + ": must be an object");
            return nullptr;
        }
        return s;
    }

    std::optional<double> number(const json* node, const std::string& path) {
        if (node == nullptr) return std::nullopt;
        if (!node->is_number()) {
            issues.push_back(path + ": must be a number");
            return std::nullopt;
        }
        return node->get<double>();
    }

    std::optional<Matrix> matrix(const json* node, const std::string& path) {
        if (node == nullptr) return std::nullopt;
        if (!node->is_array() || node->empty() || !(*node)[0].is_array()) {
            issues.push_back(path + ": must be a non-empty array of rows");
            return std::nullopt;
        }
        const std::size_t cols = (*node)[0].size();
        Matrix m(static_cast<Index>(node->size()), static_cast<Index>(cols));
        for (std::size_t i = 0; i < node->size(); ++i) {
            const json& row = (*node)[i];
            if (!row.is_array() || row.size() != cols) {
                issues.push_back(path + ": row " + std::to_string(i) + " has inconsistent length");
                return std::nullopt;
            }
            for (std::size_t j = 0; j < cols; ++j) {
                if (!row[j].is_number()) {
                    issues.push_back(path + ": entry [" + std::to_string(i) + "][" + std::to_string(j) +
                                     "] is not a number");
                    return std::nullopt;
                }
                m(static_cast<Index>(i), static_cast<Index>(j)) = row[j].get<double>();
            }
        }
        return m;
    }

    std::optional<Vector> vector(const json* node, const std::string& path) {
        if (node == nullptr) return std::nullopt;
        if (!node->is_array() || node->empty()) {
            issues.push_back(path + ": must be a non-empty array of numbers");
            return std::nullopt;
        }
        Vector v(static_cast<Index>(node->size()));
        for (std::size_t i = 0; i < node->size(); ++i) {
            if (!(*node)[i].is_number()) {
                issues.push_back(path + ": entry " + std::to_string(i) + " is not a number");
                return std::nullopt;
            }
            v(static_cast<Index>(i)) = (*node)[i].get<double>();
        }
        return v;
    }
};

inline std::optional<ChannelMode> parse_mode(const std::string& s) {
    if (s == "always") return ChannelMode::AlwaysDeliver;
    if (s == "worst") return ChannelMode::WorstCase;
    if (s == "bernoulli") return ChannelMode::Bernoulli;
    if (s == "scripted") return ChannelMode::Scripted;
    return std::nullopt;
}

}  // namespace detail

inline std::optional<ChannelMode> channel_mode_from_string(const std::string& s) { return detail::parse_mode(s); }

inline std::optional<EstimatorKind> estimator_from_string(const std::string& s) {
    if (s == "mb") return EstimatorKind::ModelBased;
    if (s == "zoh") return EstimatorKind::ZeroOrderHold;
    return std::nullopt;
}

/// Parses and validates a scenario document. Throws ValidationError listing
/// every problem, each naming its key.
inline Scenario scenario_from_json(const json& root) {
    detail::SchemaReader rd;
    Scenario scn;
    if (!root.is_object()) throw ValidationError("scenario: top level must be a JSON object");

    if (const json* plant = rd.section(root, "plant")) {
        if (auto A = rd.matrix(rd.child(*plant, "A", "plant.A"), "plant.A")) scn.plant.A = *A;
        if (auto B = rd.matrix(rd.child(*plant, "B", "plant.B"), "plant.B")) scn.plant.B = *B;
    }
    if (const json* model = rd.section(root, "model")) {
        if (auto A = rd.matrix(rd.child(*model, "A_hat", "model.A_hat"), "model.A_hat")) scn.model.A_hat = *A;
        if (auto B = rd.matrix(rd.child(*model, "B_hat", "model.B_hat"), "model.B_hat")) scn.model.B_hat = *B;
    }
    if (const json* gain = rd.section(root, "gain")) {
        if (auto K = rd.matrix(rd.child(*gain, "K", "gain.K"), "gain.K")) scn.gain.K = *K;
    }
    if (const json* est = rd.child(root, "estimator", "estimator")) {
        const auto kind = est->is_string() ? estimator_from_string(est->get<std::string>()) : std::nullopt;
        if (kind) {
            scn.estimator = *kind;
        } else {
            rd.issues.push_back("estimator: must be \"mb\" or \"zoh\"");
        }
    }
    if (const json* trig = rd.section(root, "trigger")) {
        if (auto b = rd.number(rd.child(*trig, "beta", "trigger.beta"), "trigger.beta")) scn.trigger.beta = *b;
        if (auto a = rd.number(rd.child(*trig, "alpha", "trigger.alpha"), "trigger.alpha")) scn.trigger.alpha = *a;
    }
    if (const json* ch = rd.section(root, "channel")) {
        if (const json* m = rd.child(*ch, "M", "channel.M")) {
            if (m->is_number_integer()) {
                scn.channel.M = m->get<int>();
            } else {
                rd.issues.push_back("channel.M: must be an integer");
            }
        }
        if (const json* mode = rd.child(*ch, "mode", "channel.mode")) {
            const auto parsed = mode->is_string() ? detail::parse_mode(mode->get<std::string>()) : std::nullopt;
            if (parsed) {
                scn.channel.mode = *parsed;
            } else {
                rd.issues.push_back("channel.mode: must be one of always, worst, bernoulli, scripted");
            }
        }
        if (scn.channel.mode == ChannelMode::Bernoulli) {
            if (auto p = rd.number(rd.child(*ch, "p", "channel.p"), "channel.p")) scn.channel.p = *p;
        }
        if (ch->contains("seed")) {
            const json& seed = ch->at("seed");
            if (seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<long long>() >= 0)) {
                scn.channel.seed = seed.get<std::uint64_t>();
            } else {
                rd.issues.push_back("channel.seed: must be a non-negative integer");
            }
        }
        if (scn.channel.mode == ChannelMode::Scripted) {
            const json* script = rd.child(*ch, "script", "channel.script");
            if (script != nullptr) {
                if (!script->is_array()) {
                    rd.issues.push_back("channel.script: must be an array of 0/1 or booleans");
                } else {
                    for (const auto& e : *script) {
                        if (e.is_boolean()) {
                            scn.channel.script.push_back(e.get<bool>());
                        } else if (e.is_number_integer() && (e.get<int>() == 0 || e.get<int>() == 1)) {
                            scn.channel.script.push_back(e.get<int>() == 1);
                        } else {
                            rd.issues.push_back("channel.script: entries must be 0/1 or booleans");
                            break;
                        }
                    }
                }
            }
        }
    }
    if (const json* sim = rd.section(root, "sim")) {
        if (auto x0 = rd.vector(rd.child(*sim, "x0", "sim.x0"), "sim.x0")) scn.x0 = *x0;
        if (sim->contains("t_max")) {
            if (auto v = rd.number(&sim->at("t_max"), "sim.t_max")) scn.t_max = *v;
        }
        if (sim->contains("sample_dt")) {
            if (auto v = rd.number(&sim->at("sample_dt"), "sim.sample_dt")) scn.sample_dt = *v;
        }
        if (sim->contains("event_tol")) {
            if (auto v = rd.number(&sim->at("event_tol"), "sim.event_tol")) scn.event_tol = *v;
        }
    }

    if (rd.issues.empty()) {
        try {
            auto more = scenario_issues(scn);
            rd.issues.insert(rd.issues.end(), more.begin(), more.end());
        } catch (const std::exception& e) {
            rd.issues.push_back(std::string("gain.K: ") + e.what());
        }
    }
    if (!rd.issues.empty()) throw ValidationError(std::move(rd.issues));
    return scn;
}

inline json scenario_to_json(const Scenario& scn) {
    json ch = {{"M", scn.channel.M}, {"mode", to_string(scn.channel.mode)}};
    if (scn.channel.mode == ChannelMode::Bernoulli) {
        ch["p"] = scn.channel.p;
        ch["seed"] = scn.channel.seed;
    }
    if (scn.channel.mode == ChannelMode::Scripted) {
        json script = json::array();
        for (bool d : scn.channel.script) script.push_back(d ? 1 : 0);
        ch["script"] = std::move(script);
    }
    return {
        {"plant", {{"A", matrix_to_json(scn.plant.A)}, {"B", matrix_to_json(scn.plant.B)}}},
        {"model", {{"A_hat", matrix_to_json(scn.model.A_hat)}, {"B_hat", matrix_to_json(scn.model.B_hat)}}},
        {"gain", {{"K", matrix_to_json(scn.gain.K)}}},
        {"estimator", to_string(scn.estimator)},
        {"trigger", {{"beta", scn.trigger.beta}, {"alpha", scn.trigger.alpha}}},
        {"channel", std::move(ch)},
        {"sim",
         {{"x0", vector_to_json(scn.x0)},
          {"t_max", scn.t_max},
          {"sample_dt", scn.sample_dt},
          {"event_tol", scn.event_tol}}},
    };
}

namespace detail {

/// 1-based line of the deepest segment of a dotted key ("channel.script")
/// found by scanning for each quoted segment in turn; 0 when absent.
inline std::size_t key_line(const std::string& text, const std::string& dotted) {
    std::size_t pos = 0;
    std::size_t found = std::string::npos;
    std::size_t start = 0;
    while (start <= dotted.size()) {
        const std::size_t dot = dotted.find('.', start);
        const std::string seg = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        const std::size_t hit = text.find('"' + seg + '"', pos);
        if (hit == std::string::npos) break;
        found = hit;
        pos = hit + seg.size() + 2;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (found == std::string::npos) return 0;
    return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(found), '\n')) + 1;
}

}  // namespace detail

/// Parses a scenario document. Every reported problem is prefixed with the
/// line of the offending key when it can be located.
inline Scenario parse_scenario(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
    }
    try {
        return scenario_from_json(root);
    } catch (const ValidationError& e) {
        std::vector<std::string> anchored;
        for (const auto& issue : e.issues()) {
            const std::string key = issue.substr(0, issue.find(':'));
            const std::size_t line = detail::key_line(text, key);
            anchored.push_back(line > 0 ? "line " + std::to_string(line) + ": " + issue : issue);
        }
        throw ValidationError(std::move(anchored));
    }
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario: cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

inline bool operator==(const Scenario& a, const Scenario& b) {
    const auto same = [](const auto& x, const auto& y) {
        return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    const bool script_matters = a.channel.mode == ChannelMode::Scripted;
    const bool bernoulli = a.channel.mode == ChannelMode::Bernoulli;
    return same(a.plant.A, b.plant.A) && same(a.plant.B, b.plant.B) && same(a.model.A_hat, b.model.A_hat) &&
           same(a.model.B_hat, b.model.B_hat) && same(a.gain.K, b.gain.K) && a.estimator == b.estimator &&
           a.trigger.beta == b.trigger.beta && a.trigger.alpha == b.trigger.alpha && a.channel.M == b.channel.M &&
           a.channel.mode == b.channel.mode && (!bernoulli || (a.channel.p == b.channel.p && a.channel.seed == b.channel.seed)) &&
           (!script_matters || a.channel.script == b.channel.script) && same(a.x0, b.x0) && a.t_max == b.t_max &&
           a.sample_dt == b.sample_dt && a.event_tol == b.event_tol;
}

// Trace CSV ---------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string trace_csv_header(Index n) {
    std::string h = "t";
    for (const char* prefix : {"x_", "xs_", "xc_"}) {
        for (Index i = 0; i < n; ++i) h += "," + std::string(prefix) + std::to_string(i);
    }
    h += ",es_norm,ec_norm,threshold,triggered,delivered";
    return h;
}

inline void write_trace_csv(std::ostream& out, const Trace& tr) {
    const Index n = tr.n();
    out << trace_csv_header(n) << '\n';
    std::string line;
    for (const auto& s : tr.samples) {
        line = format_double(s.t);
        for (const Vector* v : {&s.x, &s.x_s, &s.x_c}) {
            for (Index i = 0; i < n; ++i) {
                line += ',';
                line += format_double((*v)(i));
            }
        }
        line += ',' + format_double(s.es_norm) + ',' + format_double(s.ec_norm) + ',' + format_double(s.threshold);
        line += s.triggered ? ",1" : ",0";
        line += s.delivered ? ",1" : ",0";
        out << line << '\n';
    }
}

inline Trace read_trace_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ValidationError("trace: empty file");
    const auto columns = static_cast<Index>(std::count(header.begin(), header.end(), ',') + 1);
    if (columns < 9 || (columns - 6) % 3 != 0) throw ValidationError("trace: unexpected header");
    const Index n = (columns - 6) / 3;
    if (header != trace_csv_header(n)) throw ValidationError("trace: header mismatch");

    Trace tr;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(columns));
        const char* p = line.c_str();
        while (true) {
            char* end = nullptr;
            const double v = std::strtod(p, &end);
            if (end == p) throw ValidationError("trace: line " + std::to_string(lineno) + ": malformed number");
            vals.push_back(v);
            if (*end == ',') {
                p = end + 1;
            } else if (*end == '\0' || *end == '\r') {
                break;
            } else {
                throw ValidationError("trace: line " + std::to_string(lineno) + ": unexpected character");
            }
        }
        if (static_cast<Index>(vals.size()) != columns) {
            throw ValidationError("trace: line " + std::to_string(lineno) + ": expected " + std::to_string(columns) +
                                  " fields");
        }
        Sample s;
        s.t = vals[0];
        s.x = Eigen::Map<const Vector>(vals.data() + 1, n);
        s.x_s = Eigen::Map<const Vector>(vals.data() + 1 + n, n);
        s.x_c = Eigen::Map<const Vector>(vals.data() + 1 + 2 * n, n);
        s.es_norm = vals[static_cast<std::size_t>(1 + 3 * n)];
        s.ec_norm = vals[static_cast<std::size_t>(2 + 3 * n)];
        s.threshold = vals[static_cast<std::size_t>(3 + 3 * n)];
        s.triggered = vals[static_cast<std::size_t>(4 + 3 * n)] != 0.0;
        s.delivered = vals[static_cast<std::size_t>(5 + 3 * n)] != 0.0;
        if (s.triggered) tr.triggers.push_back(s.t);
        if (s.delivered) tr.deliveries.push_back(s.t);
        tr.samples.push_back(std::move(s));
    }
    return tr;
}

inline json trace_to_json(const Trace& tr) {
    json samples = json::array();
    for (const auto& s : tr.samples) {
        samples.push_back({{"t", s.t},
                           {"x", vector_to_json(s.x)},
                           {"x_s", vector_to_json(s.x_s)},
                           {"x_c", vector_to_json(s.x_c)},
                           {"es_norm", s.es_norm},
                           {"ec_norm", s.ec_norm},
                           {"threshold", s.threshold},
                           {"triggered", s.triggered},
                           {"delivered", s.delivered}});
    }
    return {{"samples", std::move(samples)}, {"triggers", tr.triggers}, {"deliveries", tr.deliveries}};
}

// Reports -----------------------------------------------------------------

inline json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json to_json(const SummaryStats& st) {
    return {{"trigger_count", st.trigger_count},
            {"delivery_count", st.delivery_count},
            {"min_inter_event", optional_to_json(st.min_inter_event)},
            {"mean_inter_event", optional_to_json(st.mean_inter_event)},
            {"min_receive_interval", optional_to_json(st.min_receive_interval)},
            {"mean_receive_interval", optional_to_json(st.mean_receive_interval)},
            {"final_state_norm", st.final_state_norm},
            {"empirical_delta", st.empirical_delta}};
}

inline json to_json(const BoundsReport& r) {
    json intervals = json::array();
    for (const auto& iv : r.intervals) intervals.push_back({{"eta", iv.eta}, {"zeta", iv.zeta}, {"t", iv.t}});
    return {{"Delta", r.Delta},
            {"delta_bar", r.delta_bar},
            {"delta_tilde", r.delta_tilde},
            {"miet", r.miet},
            {"F_bar", r.F_bar},
            {"F_cap", r.F_cap},
            {"F_bold", r.F_bold},
            {"a_hat", r.a_hat},
            {"a_tilde", r.a_tilde},
            {"envelopes",
             {{"c", r.plant_envelope.c},
              {"alpha_bar", r.plant_envelope.rate},
              {"zeta", r.model_envelope.c},
              {"kappa", r.model_envelope.rate}}},
            {"gamma", r.gamma},
            {"intervals", std::move(intervals)},
            {"x0_norm", r.x0_norm},
            {"bk_norm", r.bk_norm},
            {"cycle_start", r.cycle_start},
            {"cycles", r.cycles},
            {"trivial_cycles", r.trivial_cycles}};
}

inline json to_json(const ZohBoundsReport& r) {
    return {{"Delta_zoh", r.Delta_zoh},
            {"delta_bar_zoh", r.delta_bar_zoh},
            {"growth", {{"eta", r.eta}, {"gamma", r.gamma}}},
            {"state_norms", r.state_norms},
            {"cycle_start", r.cycle_start},
            {"cycles", r.cycles},
            {"trivial_cycles", r.trivial_cycles}};
}

inline json to_json(const SubspaceReport& r) { return {{"residual", r.residual}, {"basis_dim", r.basis_dim}}; }

}  // namespace mbet
