#pragma once

// Hybrid simulation of the event-triggered loop: exact matrix-exponential flow
// between events, bisection localisation of threshold crossings, trigger and
// delivery jumps, and trace recording.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mbet/error.hpp"
#include "mbet/numerics.hpp"
#include "mbet/system_model.hpp"
#include "mbet/trigger_channel.hpp"

namespace mbet {

struct Scenario {
    Plant plant;
    NominalModel model;
    Gain gain;
    EstimatorKind estimator = EstimatorKind::ModelBased;
    TriggerConfig trigger;
    ChannelPolicy channel;
    Vector x0;
    double t_max = 60.0;
    double sample_dt = 1e-3;
    double event_tol = 1e-9;
};

/// Every violated invariant, each prefixed with its scenario-file key.
inline std::vector<std::string> scenario_issues(const Scenario& scn) {
    std::vector<std::string> issues = dimension_issues(scn.plant, scn.model, scn.gain);
    if (issues.empty()) {
        auto g = gain_issues(scn.plant, scn.model, scn.gain);
        issues.insert(issues.end(), g.begin(), g.end());
    }
    auto t = trigger_issues(scn.trigger);
    issues.insert(issues.end(), t.begin(), t.end());
    auto c = channel_issues(scn.channel);
    issues.insert(issues.end(), c.begin(), c.end());

    if (scn.x0.size() != scn.plant.A.rows()) issues.push_back("sim.x0: length must equal the state dimension");
    if (!scn.x0.allFinite()) issues.push_back("sim.x0: entries must be finite");
    if (!(scn.t_max > 0.0) || !std::isfinite(scn.t_max)) issues.push_back("sim.t_max: must be a finite value > 0");
    if (!(scn.sample_dt > 0.0) || !(scn.sample_dt <= scn.t_max / 10.0)) {
        issues.push_back("sim.sample_dt: must satisfy 0 < sample_dt <= t_max/10");
    }
    if (!(scn.event_tol > 0.0) || !(scn.event_tol <= scn.sample_dt / 100.0)) {
        issues.push_back("sim.event_tol: must satisfy 0 < event_tol <= sample_dt/100");
    }
    return issues;
}

inline void validate(const Scenario& scn) {
    auto issues = scenario_issues(scn);
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

struct Sample {
    double t = 0.0;
    Vector x;
    Vector x_s;
    Vector x_c;
    double es_norm = 0.0;
    double ec_norm = 0.0;
    double threshold = 0.0;
    bool triggered = false;  // set on the post-jump row of a trigger instant
    bool delivered = false;

    bool operator==(const Sample& o) const {
        return t == o.t && x == o.x && x_s == o.x_s && x_c == o.x_c && es_norm == o.es_norm &&
               ec_norm == o.ec_norm && threshold == o.threshold && triggered == o.triggered &&
               delivered == o.delivered;
    }
};

/// Samples on the sample_dt grid plus a pre-jump and a post-jump row at every
/// trigger instant (the two rows share a time stamp).
struct Trace {
    std::vector<Sample> samples;
    std::vector<double> triggers;
    std::vector<double> deliveries;

    Index n() const { return samples.empty() ? 0 : samples.front().x.size(); }

    bool operator==(const Trace&) const = default;
};

/// Applies e^{G tau} to a stacked (x, x_s, x_c) vector. x_s and x_c share the
/// same diagonal block so that equal estimator states stay bitwise equal.
class Propagator {
public:
    Propagator(const Matrix& generator, double tau) : phi_(mat_exp(generator, tau)), n_(generator.rows() / 3) {}

    Vector apply(const Vector& s) const {
        const Index n = n_;
        Vector out(3 * n);
        const auto x = s.head(n);
        const auto xs = s.segment(n, n);
        const auto xc = s.tail(n);
        out.head(n).noalias() = phi_.block(0, 0, n, n) * x + phi_.block(0, 2 * n, n, n) * xc;
        const auto model_block = phi_.block(n, n, n, n);
        out.segment(n, n).noalias() = model_block * xs;
        out.tail(n).noalias() = model_block * xc;
        return out;
    }

    const Matrix& matrix() const { return phi_; }

private:
    Matrix phi_;
    Index n_;
};

/// Exact flow from a fixed origin (t0, s0) and the crossing function
/// g(t) = ||e_s(t)|| - beta e^{-alpha t}.
class FlowContext {
public:
    FlowContext(Matrix generator, Vector origin, double t0, TriggerConfig cfg)
        : generator_(std::move(generator)), origin_(std::move(origin)), t0_(t0), cfg_(cfg) {
        if (generator_.rows() != origin_.size() || generator_.rows() % 3 != 0) {
            throw ValidationError("FlowContext: generator must be 3n x 3n matching the stacked state");
        }
    }

    Vector state_at(double t) const {
        if (t == t0_) return origin_;
        return Propagator(generator_, t - t0_).apply(origin_);
    }

    double crossing(double t) const {
        const Vector s = state_at(t);
        const Index n = s.size() / 3;
        return (s.segment(n, n) - s.head(n)).norm() - threshold_value(t, cfg_);
    }

    double t0() const { return t0_; }

private:
    Matrix generator_;
    Vector origin_;
    double t0_;
    TriggerConfig cfg_;
};

/// Bisects g on (t_lo, t_hi] and returns the right end of the final bracket, so
/// the strict trigger inequality holds at the returned instant.
inline double locate_event(const FlowContext& flow, double t_lo, double t_hi, double tol) {
    const double g_lo = flow.crossing(t_lo);
    const double g_hi = flow.crossing(t_hi);
    if (!(g_lo <= 0.0 && g_hi > 0.0)) {
        throw NumericsError("locate_event: bracket violation, g(t_lo)=" + std::to_string(g_lo) +
                            " g(t_hi)=" + std::to_string(g_hi));
    }
    if (g_lo == 0.0) {
        // g(t_lo) = 0 is not a trigger; treat as <= 0 by nudging the left end.
        t_lo = std::nextafter(t_lo, t_hi);
        if (flow.crossing(t_lo) > 0.0) return t_lo;
    }
    const Bracket b = bisect_bracket([&](double t) { return flow.crossing(t); }, t_lo, t_hi, tol);
    if (b.lo == b.hi) {
        // Landed on g = 0 exactly; the first instant after it with g > 0 is the event.
        double t = b.hi;
        while (t < t_hi && !(flow.crossing(t) > 0.0)) t = std::nextafter(t, t_hi);
        return t;
    }
    return b.hi;
}

inline constexpr double kZenoGuard = 1e-12;

inline Trace simulate(const Scenario& scn) {
    validate(scn);
    const Index n = scn.plant.n();
    const Matrix generator = augmented_generator(scn.plant, scn.model, scn.gain, scn.estimator);
    const double dt = scn.sample_dt;
    const Propagator grid_step(generator, dt);

    Trace tr;
    auto record = [&](const AugmentedState& s, bool triggered, bool delivered) {
        Sample smp;
        smp.t = s.t;
        smp.x = s.x;
        smp.x_s = s.x_s;
        smp.x_c = s.x_c;
        smp.es_norm = (s.x_s - s.x).norm();
        smp.ec_norm = (s.x_c - s.x).norm();
        smp.threshold = threshold_value(s.t, scn.trigger);
        smp.triggered = triggered;
        smp.delivered = delivered;
        tr.samples.push_back(std::move(smp));
    };

    AugmentedState state{0.0, scn.x0, scn.x0, scn.x0};
    ChannelState channel = ChannelState::initial(scn.channel);
    record(state, false, false);

    long long k = 0;  // index of the last grid point reached
    bool on_grid = true;
    double last_trigger = -std::numeric_limits<double>::infinity();

    while (state.t < scn.t_max) {
        const double grid_next = static_cast<double>(k + 1) * dt;
        const double t_next = std::min(grid_next, scn.t_max);
        const bool full_step = on_grid && grid_next <= scn.t_max;

        const Vector origin = state.stacked();
        const Vector next = full_step ? grid_step.apply(origin) : Propagator(generator, t_next - state.t).apply(origin);
        const double g_next = (next.segment(n, n) - next.head(n)).norm() - threshold_value(t_next, scn.trigger);

        if (g_next > 0.0) {
            const FlowContext flow(generator, origin, state.t, scn.trigger);
            const double t_event = locate_event(flow, state.t, t_next, scn.event_tol);
            if (t_event - last_trigger < kZenoGuard) {
                throw SimulationError("simulate: inter-event interval below " + std::to_string(kZenoGuard) +
                                      " at t=" + std::to_string(t_event) + " (numerically degenerate scenario)");
            }
            const AugmentedState pre = AugmentedState::from_stacked(t_event, flow.state_at(t_event));
            record(pre, false, false);

            AugmentedState post = jump_on_trigger(pre);
            const OfferResult offer = channel_offer(scn.channel, channel);
            channel = offer.next;
            const bool delivered = offer.outcome == Outcome::Delivered;
            tr.triggers.push_back(t_event);
            if (delivered) {
                post = jump_on_delivery(post);
                tr.deliveries.push_back(t_event);
            }
            record(post, true, delivered);

            state = post;
            last_trigger = t_event;
            on_grid = false;
            if (t_event >= t_next) {
                // The post-jump row stands in for the grid sample.
                ++k;
                on_grid = true;
            }
        } else {
            state = AugmentedState::from_stacked(t_next, next);
            ++k;
            on_grid = true;
            record(state, false, false);
        }
    }
    return tr;
}

struct SummaryStats {
    std::size_t trigger_count = 0;
    std::size_t delivery_count = 0;
    std::optional<double> min_inter_event;
    std::optional<double> mean_inter_event;
    std::optional<double> min_receive_interval;
    std::optional<double> mean_receive_interval;
    double final_state_norm = 0.0;
    double empirical_delta = 0.0;  // max over samples of ||e_c|| e^{alpha t} / beta
};

namespace detail {

struct IntervalStats {
    std::optional<double> min;
    std::optional<double> mean;
};

inline IntervalStats interval_stats(const std::vector<double>& times) {
    if (times.size() < 2) return {};
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < times.size(); ++i) lo = std::min(lo, times[i] - times[i - 1]);
    return {lo, (times.back() - times.front()) / static_cast<double>(times.size() - 1)};
}

}  // namespace detail

inline SummaryStats summarize(const Trace& tr, const TriggerConfig& cfg) {
    SummaryStats st;
    st.trigger_count = tr.triggers.size();
    st.delivery_count = tr.deliveries.size();
    const auto ie = detail::interval_stats(tr.triggers);
    st.min_inter_event = ie.min;
    st.mean_inter_event = ie.mean;
    const auto rx = detail::interval_stats(tr.deliveries);
    st.min_receive_interval = rx.min;
    st.mean_receive_interval = rx.mean;
    if (!tr.samples.empty()) st.final_state_norm = tr.samples.back().x.norm();
    for (const auto& s : tr.samples) {
        st.empirical_delta = std::max(st.empirical_delta, s.ec_norm * std::exp(cfg.alpha * s.t) / cfg.beta);
    }
    return st;
}

}  // namespace mbet
