#pragma once

// Event-trigger law and the acknowledgement-free lossy channel with a hard cap
// of M-1 successive dropouts.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mbet/error.hpp"

namespace mbet {

struct TriggerConfig {
    double beta = 0.5;
    double alpha = 0.25;
};

inline std::vector<std::string> trigger_issues(const TriggerConfig& cfg) {
    std::vector<std::string> issues;
    if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) issues.push_back("trigger.beta: must be a finite value > 0");
    if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) issues.push_back("trigger.alpha: must be a finite value > 0");
    return issues;
}

/// beta * e^{-alpha t}
inline double threshold_value(double t, const TriggerConfig& cfg) { return cfg.beta * std::exp(-cfg.alpha * t); }

/// Strict crossing: equality with the threshold does not trigger.
inline bool should_trigger(double e_s_norm, double t, const TriggerConfig& cfg) {
    return e_s_norm > threshold_value(t, cfg);
}

/// SplitMix64 (Steele, Lea & Flood 2014). Fixed algorithm so traces are
/// reproducible across platforms and standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Independent child stream seeded from this stream's next output.
    SplitMix64 split() { return SplitMix64(next()); }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

enum class ChannelMode { AlwaysDeliver, WorstCase, Bernoulli, Scripted };

inline const char* to_string(ChannelMode m) {
    switch (m) {
        case ChannelMode::AlwaysDeliver: return "always";
        case ChannelMode::WorstCase: return "worst";
        case ChannelMode::Bernoulli: return "bernoulli";
        case ChannelMode::Scripted: return "scripted";
    }
    return "?";
}

struct ChannelPolicy {
    int M = 5;  // at most M-1 successive dropouts
    ChannelMode mode = ChannelMode::WorstCase;
    double p = 0.0;                  // drop probability (Bernoulli)
    std::uint64_t seed = 0;          // Bernoulli
    std::vector<bool> script;        // true = drop (Scripted)
};

inline std::vector<std::string> channel_issues(const ChannelPolicy& policy) {
    std::vector<std::string> issues;
    if (policy.M <= 1) issues.push_back("channel.M: must be an integer > 1");
    if (policy.mode == ChannelMode::Bernoulli && !(policy.p >= 0.0 && policy.p <= 1.0)) {
        issues.push_back("channel.p: must lie in [0, 1]");
    }
    if (policy.mode == ChannelMode::Scripted && policy.M > 1) {
        int run = 0;
        for (std::size_t i = 0; i < policy.script.size(); ++i) {
            run = policy.script[i] ? run + 1 : 0;
            if (run >= policy.M) {
                issues.push_back("channel.script: " + std::to_string(policy.M) +
                                 " consecutive drops ending at entry " + std::to_string(i) +
                                 " exceed the allowed M-1");
                break;
            }
        }
    }
    return issues;
}

struct ChannelState {
    int consecutive_drops = 0;
    std::uint64_t offers_made = 0;
    std::uint64_t rng_state = 0;

    static ChannelState initial(const ChannelPolicy& policy) { return {0, 0, policy.seed}; }

    bool operator==(const ChannelState&) const = default;
};

enum class Outcome { Delivered, Dropped };

struct OfferResult {
    Outcome outcome;
    ChannelState next;
};

/// Offers one packet. The M-th successive offer after a delivery is always
/// delivered. Bernoulli mode draws once per offer, override or not, so the
/// draw sequence depends only on the offer index.
inline OfferResult channel_offer(const ChannelPolicy& policy, const ChannelState& state) {
    bool drop = false;
    ChannelState next = state;
    switch (policy.mode) {
        case ChannelMode::AlwaysDeliver:
            drop = false;
            break;
        case ChannelMode::WorstCase:
            drop = true;
            break;
        case ChannelMode::Bernoulli: {
            SplitMix64 rng(state.rng_state);
            drop = rng.uniform() < policy.p;
            next.rng_state = rng.state();
            break;
        }
        case ChannelMode::Scripted:
            if (state.offers_made >= policy.script.size()) {
                throw SimulationError("channel: scripted drop list exhausted after " +
                                      std::to_string(policy.script.size()) + " offers");
            }
            drop = policy.script[static_cast<std::size_t>(state.offers_made)];
            break;
    }
    if (state.consecutive_drops >= policy.M - 1) drop = false;

    next.offers_made = state.offers_made + 1;
    next.consecutive_drops = drop ? state.consecutive_drops + 1 : 0;
    return {drop ? Outcome::Dropped : Outcome::Delivered, next};
}

/// Drop decisions (true = drop) of `length` successive offers under a
/// Bernoulli(p) channel with the M-1 dropout cap applied, for replaying the
/// same losses against different estimators.
inline std::vector<bool> make_drop_script(double p, std::uint64_t seed, int M, std::size_t length) {
    const ChannelPolicy policy{M, ChannelMode::Bernoulli, p, seed, {}};
    auto issues = channel_issues(policy);
    if (!issues.empty()) throw ValidationError(std::move(issues));
    std::vector<bool> script;
    script.reserve(length);
    ChannelState state = ChannelState::initial(policy);
    for (std::size_t i = 0; i < length; ++i) {
        const OfferResult r = channel_offer(policy, state);
        script.push_back(r.outcome == Outcome::Dropped);
        state = r.next;
    }
    return script;
}

}  // namespace mbet
