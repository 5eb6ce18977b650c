#pragma once

// Analytical error and inter-event bounds for the model-based and the
// zero-order-hold loops, the stable-subspace membership test for the
// augmented (x, x_c) system, and trace-grounded instantiation of the
// per-interval constants.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mbet/error.hpp"
#include "mbet/numerics.hpp"
#include "mbet/simulator.hpp"
#include "mbet/system_model.hpp"
#include "mbet/trigger_channel.hpp"

namespace mbet {

/// Lower envelope ||x(t)|| >= eta e^{gamma t}.
struct GrowthEnvelope {
    double eta = 0.0;
    double gamma = 0.0;
};

namespace detail {

/// Real parts below this (scaled by the matrix size) count as marginal, not
/// unstable: defective zero eigenvalues split by O(sqrt(eps)) in floating point.
inline double unstable_threshold(const Matrix& m) { return 1e-6 * std::max(1.0, m.norm()); }

struct UnstableModes {
    Index count = 0;
    double min_real = 0.0;  // smallest positive real part among unstable eigenvalues
    Matrix left_rows;       // real rows spanning the unstable left eigenvectors
};

/// Rows annihilate exactly the invariant subspace of the non-unstable
/// eigenvalues (valid while the unstable eigenvalues are semisimple).
inline UnstableModes unstable_modes(const Matrix& m) {
    const EigenDecomposition left = eigendecompose(m.transpose());
    const double tol = unstable_threshold(m);
    UnstableModes out;
    out.min_real = std::numeric_limits<double>::infinity();
    std::vector<Vector> rows;
    for (Index i = 0; i < left.values.size(); ++i) {
        const auto lambda = left.values(i);
        if (lambda.real() <= tol) continue;
        ++out.count;
        out.min_real = std::min(out.min_real, lambda.real());
        if (lambda.imag() < 0.0) continue;  // conjugate partner contributes the same real span
        const ComplexVector u = left.vectors.col(i);
        rows.push_back(u.real());
        if (lambda.imag() > 0.0) rows.push_back(u.imag());
    }
    out.left_rows.resize(static_cast<Index>(rows.size()), m.rows());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double nr = rows[r].norm();
        out.left_rows.row(static_cast<Index>(r)) = rows[r].transpose() / (nr > 0.0 ? nr : 1.0);
    }
    return out;
}

inline Vector duplicate(const Vector& x) {
    Vector z(2 * x.size());
    z << x, x;
    return z;
}

}  // namespace detail

/// Whether m has an eigenvalue with positive real part (marginal, possibly
/// defective, zero eigenvalues excluded).
inline bool has_unstable_mode(const Matrix& m) { return detail::unstable_modes(m).count > 0; }

/// Horizon used for growth estimation when none is given: ten time constants
/// of the slowest unstable mode.
inline double default_growth_horizon(const Matrix& gamma_mat) {
    const auto modes = detail::unstable_modes(gamma_mat);
    if (modes.count == 0) {
        throw ValidationError(
            "growth: no eigenvalue with positive real part, the growth-based bounds need an exponentially unstable "
            "open loop");
    }
    return 10.0 / modes.min_real;
}

/// Caches [I 0] e^{Gamma t} [I; I] on the estimation grid (200 points on
/// [h/2, h]) and on a disjoint validation grid so that many initial states can
/// be evaluated against one augmented matrix.
class GrowthEstimator {
public:
    static constexpr int kGrid = 200;

    GrowthEstimator(const Matrix& gamma_mat, double horizon) : horizon_(horizon) {
        detail::require_square(gamma_mat, "growth_constants");
        if (gamma_mat.rows() % 2 != 0) throw ValidationError("growth_constants: expected a 2n x 2n matrix");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("growth_constants: horizon must be > 0");
        const auto modes = detail::unstable_modes(gamma_mat);
        if (modes.count == 0) throw ValidationError("growth_constants: augmented matrix has no unstable eigenvalue");
        gamma_ = 0.99 * modes.min_real;
        unstable_rows_ = modes.left_rows;
        n_ = gamma_mat.rows() / 2;

        const auto project = [&](double t) {
            const Matrix phi = mat_exp(gamma_mat, t);
            return Matrix(phi.block(0, 0, n_, n_) + phi.block(0, n_, n_, n_));
        };
        const double lo = 0.5 * horizon;
        const double step = (horizon - lo) / (kGrid - 1);
        for (int k = 0; k < kGrid; ++k) {
            const double t = lo + step * k;
            estimation_.push_back({t, project(t)});
            if (k + 1 < kGrid) validation_.push_back({t + 0.5 * step, project(t + 0.5 * step)});
        }
    }

    double gamma() const { return gamma_; }
    double horizon() const { return horizon_; }

    /// ||L [x0; x0]|| / ||[x0; x0]|| for the unstable left-eigenvector rows L;
    /// zero iff [x0; x0] lies in the stable invariant subspace.
    double unstable_fraction(const Vector& x0) const {
        const Vector z = detail::duplicate(x0);
        return (unstable_rows_ * z).norm() / z.norm();
    }

    GrowthEnvelope operator()(const Vector& x0) const {
        if (x0.size() != n_) throw ValidationError("growth_constants: x0 has the wrong dimension");
        if (!(x0.norm() > 0.0)) throw ValidationError("growth_constants: x0 must be nonzero");
        if (!(unstable_fraction(x0) > 1e-9)) {
            throw ValidationError("growth_constants: [x0; x0] lies in the stable subspace, no growth bound exists");
        }
        auto scaled_min = [&](const std::vector<Node>& grid) {
            double lo = std::numeric_limits<double>::infinity();
            for (const auto& node : grid) lo = std::min(lo, (node.map * x0).norm() * std::exp(-gamma_ * node.t));
            return lo;
        };
        GrowthEnvelope env{0.95 * scaled_min(estimation_), gamma_};
        const double check = scaled_min(validation_);
        if (check < env.eta) env.eta = 0.95 * check;
        if (!(env.eta > 0.0)) throw NumericsError("growth_constants: degenerate (zero) growth envelope");
        return env;
    }

    /// Whether ||[I 0] e^{Gamma t}[I; I] x0|| >= eta e^{gamma t} holds on `times`.
    bool holds(const Matrix& gamma_mat, const Vector& x0, const GrowthEnvelope& env, std::span<const double> times) const {
        for (double t : times) {
            const Matrix phi = mat_exp(gamma_mat, t);
            const double lhs = ((phi.block(0, 0, n_, n_) + phi.block(0, n_, n_, n_)) * x0).norm();
            if (lhs < env.eta * std::exp(env.gamma * t)) return false;
        }
        return true;
    }

private:
    struct Node {
        double t;
        Matrix map;
    };

    Index n_ = 0;
    double gamma_ = 0.0;
    double horizon_ = 0.0;
    Matrix unstable_rows_;
    std::vector<Node> estimation_;
    std::vector<Node> validation_;
};

inline GrowthEnvelope growth_constants(const Matrix& gamma_mat, const Vector& x0, double horizon) {
    return GrowthEstimator(gamma_mat, horizon)(x0);
}

/// Upper bound on the gap between successive triggers after a drop:
/// ln((zeta + beta e^{-alpha t_j}) / eta) / (gamma + min(kappa, alpha)).
inline double delta_bar(double eta, double zeta, double gamma, double kappa, const TriggerConfig& cfg, double t_j) {
    if (!(eta > 0.0)) throw ValidationError("delta_bar: eta must be > 0");
    if (!(zeta >= eta)) throw ValidationError("delta_bar: zeta must be >= eta");
    if (!(gamma > 0.0) || !(kappa > 0.0)) throw ValidationError("delta_bar: gamma and kappa must be > 0");
    const double rate = kappa >= cfg.alpha ? gamma + cfg.alpha : gamma + kappa;
    return std::log((zeta + cfg.beta * std::exp(-cfg.alpha * t_j)) / eta) / rate;
}

struct IntervalConstants {
    double eta = 0.0;
    double zeta = 0.0;
    double t = 0.0;  // trigger instant t_{i*+j}
};

struct DeltaFragment {
    double Delta = 1.0;
    std::vector<double> delta_bar;
    std::vector<double> delta_tilde;  // delta_tilde[k-1] = sum_{j=k}^{M-1} delta_bar_j
};

/// sup over a 400-point uniform grid of [0, horizon] of ||e^{closed s}||.
inline double sup_propagator_norm(const Matrix& closed, double horizon) {
    constexpr int kGrid = 400;
    if (!(horizon > 0.0)) return 1.0;
    if (!std::isfinite(horizon)) throw NumericsError("sup_propagator_norm: infinite horizon");
    const Matrix step = mat_exp(closed, horizon / (kGrid - 1));
    Matrix p = Matrix::Identity(closed.rows(), closed.cols());
    double sup = 1.0;
    for (int k = 1; k < kGrid; ++k) {
        p = p * step;
        sup = std::max(sup, op_norm(p));
    }
    return sup;
}

/// Delta = 1 + sum_{k=1}^{M-1} e^{alpha dt_k} sup_{s in [0, dt_k]} ||e^{(A_hat + B_hat K) s}||.
inline DeltaFragment compute_Delta(const NominalModel& model, const Gain& gain, const TriggerConfig& cfg, int M,
                                   std::span<const IntervalConstants> per_interval, double gamma, double kappa) {
    if (M < 1) throw ValidationError("compute_Delta: M must be >= 1");
    if (per_interval.size() != static_cast<std::size_t>(M - 1)) {
        throw ValidationError("compute_Delta: expected M-1 = " + std::to_string(M - 1) + " interval constants, got " +
                              std::to_string(per_interval.size()));
    }
    DeltaFragment out;
    for (const auto& c : per_interval) out.delta_bar.push_back(delta_bar(c.eta, c.zeta, gamma, kappa, cfg, c.t));

    out.delta_tilde.assign(out.delta_bar.size(), 0.0);
    double suffix = 0.0;
    for (std::size_t k = out.delta_bar.size(); k-- > 0;) {
        suffix += out.delta_bar[k];
        out.delta_tilde[k] = suffix;
    }

    if (out.delta_bar.empty()) return out;
    const Matrix closed = model_closed_loop(model, gain);
    for (double dt : out.delta_tilde) {
        out.Delta += std::exp(cfg.alpha * dt) * sup_propagator_norm(closed, dt);
    }
    return out;
}

struct BoundCheck {
    bool ok = true;
    double worst_ratio = 0.0;  // max ||e_c|| / (Delta beta e^{-alpha t})
    double worst_t = 0.0;
};

inline BoundCheck verify_ec_bound(const Trace& tr, double Delta, const TriggerConfig& cfg) {
    BoundCheck out;
    for (const auto& s : tr.samples) {
        const double bound = Delta * cfg.beta * std::exp(-cfg.alpha * s.t);
        const double ratio = s.ec_norm / bound;
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_t = s.t;
        }
        if (s.ec_norm > bound + 1e-9) out.ok = false;
    }
    return out;
}

struct MietReport {
    double miet = 0.0;    // lower bound on t_{i+1} - t_i
    double F_cap = 0.0;   // (1 + a_tilde c / (alpha_bar - alpha)) beta Delta ||BK||
    double F_bar = 0.0;   // a_tilde c (x0 - beta Delta ||BK|| / (alpha_bar - alpha)), clamped at 0
    double F_bar_raw = 0.0;
    double F_bold = 0.0;  // F_bar / (a_hat + alpha_bar) + F_cap / (a_hat + alpha) at t_i = 0
    double a_hat = 0.0;
    double a_tilde = 0.0;
    double bk_norm = 0.0;
    DecayEnvelope plant_envelope;  // (c, alpha_bar) of A + BK
};

inline MietReport min_inter_event_time(const Plant& plant, const NominalModel& model, const Gain& gain,
                                       const TriggerConfig& cfg, int M, double Delta, double x0_norm,
                                       const DecayEnvelope& plant_envelope) {
    if (M < 1) throw ValidationError("min_inter_event_time: M must be >= 1");
    const double alpha_bar = plant_envelope.rate;
    if (!(cfg.alpha < alpha_bar)) {
        throw ValidationError("min_inter_event_time: alpha=" + std::to_string(cfg.alpha) +
                              " must be below alpha_bar=" + std::to_string(alpha_bar));
    }
    MietReport r;
    r.plant_envelope = plant_envelope;
    r.a_hat = a_hat(model, gain);
    r.a_tilde = a_tilde(plant, model, gain);
    r.bk_norm = op_norm(plant.B * gain.K);
    const double c = plant_envelope.c;
    const double gap = alpha_bar - cfg.alpha;
    r.F_bar_raw = r.a_tilde * c * (x0_norm - cfg.beta * Delta * r.bk_norm / gap);
    r.F_bar = std::max(0.0, r.F_bar_raw);
    r.F_cap = (1.0 + r.a_tilde * c / gap) * cfg.beta * Delta * r.bk_norm;
    r.F_bold = r.F_bar / (r.a_hat + alpha_bar) + r.F_cap / (r.a_hat + cfg.alpha);
    r.miet = std::log1p(cfg.beta / r.F_bold) / (r.a_hat + alpha_bar);
    if (!(r.miet > 0.0)) throw NumericsError("min_inter_event_time: bound is not positive");
    return r;
}

inline MietReport min_inter_event_time(const Plant& plant, const NominalModel& model, const Gain& gain,
                                       const TriggerConfig& cfg, int M, double Delta, double x0_norm) {
    return min_inter_event_time(plant, model, gain, cfg, M, Delta, x0_norm,
                                decay_envelope(plant_closed_loop(plant, gain)));
}

struct ZohInterval {
    double eta = 0.0;
    double state_norm = 0.0;  // ||x(t_{i*+j})||
};

struct ZohBoundsReport {
    double Delta_zoh = 1.0;
    std::vector<double> delta_bar_zoh;
    std::vector<double> eta;  // eta^zoh_j
    double gamma = 0.0;       // gamma^zoh
    std::vector<double> state_norms;
    double cycle_start = 0.0;
    std::size_t cycles = 0;
    std::size_t trivial_cycles = 0;
};

/// Solves eta_j e^{gamma d} - ||x_j|| = beta e^{-alpha d} for each interval and
/// sums Delta_zoh = sum_{k=1}^{M} e^{alpha dt_k}.
inline ZohBoundsReport compute_delta_zoh(const TriggerConfig& cfg, int M, std::span<const ZohInterval> intervals,
                                         double gamma) {
    if (M < 1) throw ValidationError("compute_delta_zoh: M must be >= 1");
    if (intervals.size() != static_cast<std::size_t>(M - 1)) {
        throw ValidationError("compute_delta_zoh: expected M-1 interval entries");
    }
    if (!(gamma > 0.0)) throw ValidationError("compute_delta_zoh: gamma must be > 0");
    ZohBoundsReport out;
    out.gamma = gamma;
    for (const auto& iv : intervals) {
        if (!(iv.eta > 0.0) || iv.eta > iv.state_norm) {
            throw ValidationError("compute_delta_zoh: need 0 < eta_j <= ||x(t_j)||");
        }
        const auto f = [&](double d) {
            return iv.eta * std::exp(gamma * d) - iv.state_norm - cfg.beta * std::exp(-cfg.alpha * d);
        };
        const double cap = std::log((iv.state_norm + cfg.beta) / iv.eta) / gamma + 1.0;
        const double scale = std::max(1.0, cap);
        out.delta_bar_zoh.push_back(bisect_root(f, 0.0, cap, 1e-13 * scale));
        out.eta.push_back(iv.eta);
        out.state_norms.push_back(iv.state_norm);
    }
    double suffix = 0.0;
    out.Delta_zoh = 1.0;  // k = M: empty sum
    for (std::size_t k = out.delta_bar_zoh.size(); k-- > 0;) {
        suffix += out.delta_bar_zoh[k];
        out.Delta_zoh += std::exp(cfg.alpha * suffix);
    }
    return out;
}

struct SubspaceReport {
    double residual = 0.0;  // ||[x0; x0] - P_Rs [x0; x0]||
    Index basis_dim = 0;    // 2n - n_u
};

/// Basis of R_s: [w; 0] for w in the non-unstable invariant subspace of A, and
/// [(lambda I - A)^{-1} BK chi; chi] for each eigenpair of A_hat + B_hat K.
/// Complex pairs contribute their real and imaginary parts.
inline Matrix stable_subspace_basis(const Plant& plant, const NominalModel& model, const Gain& gain) {
    require_dimensions(plant, model, gain);
    const Index n = plant.n();
    const Matrix bk = plant.B * gain.K;

    const auto a_modes = detail::unstable_modes(plant.A);
    const Index n_u = a_modes.count;
    if (n_u < 1) throw ValidationError("stable_subspace_residual: A has no unstable eigenvalue");

    // Non-unstable invariant subspace of A = kernel of its unstable left eigenvectors.
    Eigen::JacobiSVD<Matrix> svd(a_modes.left_rows, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv.size() < n_u || sv(n_u - 1) < 1e-8 * std::max(1.0, sv(0))) {
        throw NumericsError("stable_subspace_residual: defective unstable eigenstructure of A");
    }
    const Matrix stable_a = svd.matrixV().rightCols(n - n_u);

    const EigenDecomposition closed = eigendecompose(model_closed_loop(model, gain));
    const EigenDecomposition a_eig = eigendecompose(plant.A);
    const double scale = std::max(1.0, plant.A.norm());
    const ComplexMatrix a_c = plant.A.cast<std::complex<double>>();
    const ComplexMatrix bk_c = bk.cast<std::complex<double>>();

    std::vector<Vector> columns;
    for (Index c = 0; c < n - n_u; ++c) {
        Vector v = Vector::Zero(2 * n);
        v.head(n) = stable_a.col(c);
        columns.push_back(v);
    }
    for (Index i = 0; i < n; ++i) {
        const auto lambda = closed.values(i);
        if (lambda.imag() < 0.0) continue;
        for (Index j = 0; j < n; ++j) {
            if (std::abs(lambda - a_eig.values(j)) < 1e-9 * scale) {
                throw NumericsError("stable_subspace_residual: resolvent (lambda I - A) is singular");
            }
        }
        const ComplexVector chi = closed.vectors.col(i);
        const ComplexMatrix shifted = lambda * ComplexMatrix::Identity(n, n) - a_c;
        const ComplexVector mu = shifted.fullPivLu().solve(bk_c * chi);
        ComplexVector v(2 * n);
        v << mu, chi;
        columns.push_back(v.real());
        if (lambda.imag() > 0.0) columns.push_back(v.imag());
    }

    Matrix basis(2 * n, static_cast<Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) basis.col(static_cast<Index>(c)) = columns[c];
    if (basis.cols() != 2 * n - n_u) throw NumericsError("stable_subspace_residual: unexpected basis size");

    Eigen::JacobiSVD<Matrix> check(basis);
    const auto& bs = check.singularValues();
    if (bs(bs.size() - 1) < 1e-10 * std::max(1.0, bs(0))) {
        throw NumericsError("stable_subspace_residual: defective eigenstructure, basis is rank deficient");
    }
    return basis;
}

/// Least-squares distance of [x0; x0] from R_s. A positive residual certifies
/// that the unstable modes are excited, so the state eventually grows.
inline SubspaceReport stable_subspace_residual(const Plant& plant, const NominalModel& model, const Gain& gain,
                                               const Vector& x0) {
    if (x0.size() != plant.n()) throw ValidationError("stable_subspace_residual: x0 has the wrong dimension");
    const Matrix basis = stable_subspace_basis(plant, model, gain);
    const Vector z = detail::duplicate(x0);
    const Eigen::HouseholderQR<Matrix> qr(basis);
    const Matrix q = qr.householderQ() * Matrix::Identity(basis.rows(), basis.cols());
    SubspaceReport out;
    out.residual = (z - q * (q.transpose() * z)).norm();
    out.basis_dim = basis.cols();
    return out;
}

// Trace-grounded instantiation -------------------------------------------

struct AnalysisOptions {
    double growth_horizon = 0.0;  // <= 0 selects default_growth_horizon
};

struct BoundsReport {
    double Delta = 1.0;
    std::vector<double> delta_bar;
    std::vector<double> delta_tilde;
    double miet = 0.0;
    double F_bar = 0.0;
    double F_cap = 0.0;
    double F_bold = 0.0;
    double a_hat = 0.0;
    double a_tilde = 0.0;
    DecayEnvelope plant_envelope;  // (c, alpha_bar)
    DecayEnvelope model_envelope;  // (zeta, kappa)
    double gamma = 0.0;
    std::vector<IntervalConstants> intervals;  // constants of the cycle attaining Delta
    double x0_norm = 0.0;
    double bk_norm = 0.0;
    double cycle_start = 0.0;
    std::size_t cycles = 0;
    std::size_t trivial_cycles = 0;  // no trigger after the update within the trace

    /// c x0 + beta c Delta ||BK|| / (alpha_bar - alpha): bound on ||x(t)|| e^{alpha t}.
    double stability_envelope(const TriggerConfig& cfg) const {
        const double c = plant_envelope.c;
        return c * x0_norm + cfg.beta * c * Delta * bk_norm / (plant_envelope.rate - cfg.alpha);
    }
};

struct CycleState {
    double t = 0.0;
    Vector x;
};

struct UpdateCycle {
    double start = 0.0;  // t_{i*}
    std::vector<CycleState> states;  // j = 1 .. M-1
    std::size_t observed = 0;        // triggers of the cycle that occur within the trace
};

/// For each successful update (t = 0 included) the states at the next M-1
/// trigger instants, delivered or not. Cycles cut short by the horizon repeat
/// their last available state.
inline std::vector<UpdateCycle> update_cycles(const Scenario& scn, const Trace& tr, int M) {
    std::vector<std::size_t> starts{0};  // index into `all` of the cycle start
    std::vector<CycleState> all{{0.0, scn.x0}};
    for (const auto& s : tr.samples) {
        if (!s.triggered) continue;
        all.push_back({s.t, s.x});
        if (s.delivered) starts.push_back(all.size() - 1);
    }
    std::vector<UpdateCycle> cycles;
    for (std::size_t start : starts) {
        UpdateCycle cyc{all[start].t, {}, 0};
        for (int j = 1; j <= M - 1; ++j) {
            const std::size_t idx = std::min(start + static_cast<std::size_t>(j), all.size() - 1);
            if (idx > start) cyc.observed = static_cast<std::size_t>(idx - start);
            cyc.states.push_back(all[idx]);
        }
        cycles.push_back(std::move(cyc));
    }
    return cycles;
}

/// Model-based bounds. Per-interval constants: eta_j from the growth envelope
/// of Gamma at the state x(t_{i*+j}), zeta_j = max(c_model ||x(t_{i*+j})||, eta_j).
/// Delta is the largest over all update cycles of the trace, or the x0-only
/// instantiation when `trace` is null.
///
/// A cycle with no trigger after its update inside the trace is trivial: on
/// that window x_c = x_s, so ||e_c|| = ||e_s|| stays below the threshold and
/// any Delta >= 1 holds there. Such cycles need no growth envelope (which may
/// not exist, e.g. when [x; x] lies in the stable subspace).
inline BoundsReport analyze_model_based(const Scenario& scn, const Trace* trace, const AnalysisOptions& opt = {}) {
    validate(scn);
    const int M = scn.channel.M;
    BoundsReport rep;
    rep.plant_envelope = decay_envelope(plant_closed_loop(scn.plant, scn.gain));
    rep.model_envelope = decay_envelope(model_closed_loop(scn.model, scn.gain));
    rep.x0_norm = scn.x0.norm();

    const Matrix gamma_mat = gamma_matrix(scn.plant, scn.model, scn.gain);
    const double horizon = opt.growth_horizon > 0.0 ? opt.growth_horizon : default_growth_horizon(gamma_mat);
    const GrowthEstimator growth(gamma_mat, horizon);
    rep.gamma = growth.gamma();

    std::vector<UpdateCycle> cycles;
    if (trace != nullptr) {
        cycles = update_cycles(scn, *trace, M);
    } else {
        cycles.push_back({0.0, std::vector<CycleState>(static_cast<std::size_t>(M - 1), CycleState{0.0, scn.x0})});
    }
    rep.cycles = cycles.size();

    bool first = true;
    for (const auto& cyc : cycles) {
        if (trace != nullptr && cyc.observed == 0) {
            ++rep.trivial_cycles;
            continue;
        }
        std::vector<IntervalConstants> ivs;
        for (const auto& cs : cyc.states) {
            const double eta = growth(cs.x).eta;
            ivs.push_back({eta, std::max(rep.model_envelope.c * cs.x.norm(), eta), cs.t});
        }
        DeltaFragment frag = compute_Delta(scn.model, scn.gain, scn.trigger, M, ivs, rep.gamma, rep.model_envelope.rate);
        if (first || frag.Delta > rep.Delta) {
            rep.Delta = frag.Delta;
            rep.delta_bar = std::move(frag.delta_bar);
            rep.delta_tilde = std::move(frag.delta_tilde);
            rep.intervals = std::move(ivs);
            rep.cycle_start = cyc.start;
            first = false;
        }
    }

    if (first) rep.cycle_start = 0.0;  // every cycle trivial: Delta = 1

    const MietReport miet = min_inter_event_time(scn.plant, scn.model, scn.gain, scn.trigger, M, rep.Delta,
                                                 rep.x0_norm, rep.plant_envelope);
    rep.miet = miet.miet;
    rep.F_bar = miet.F_bar;
    rep.F_cap = miet.F_cap;
    rep.F_bold = miet.F_bold;
    rep.a_hat = miet.a_hat;
    rep.a_tilde = miet.a_tilde;
    rep.bk_norm = miet.bk_norm;
    return rep;
}

/// Model-based bounds from user-supplied (eta, zeta, gamma), applied to every interval at t_j = 0.
inline BoundsReport analyze_model_based_manual(const Scenario& scn, double eta, double zeta, double gamma) {
    validate(scn);
    const int M = scn.channel.M;
    BoundsReport rep;
    rep.plant_envelope = decay_envelope(plant_closed_loop(scn.plant, scn.gain));
    rep.model_envelope = decay_envelope(model_closed_loop(scn.model, scn.gain));
    rep.x0_norm = scn.x0.norm();
    rep.gamma = gamma;
    rep.intervals.assign(static_cast<std::size_t>(M - 1), IntervalConstants{eta, zeta, 0.0});
    rep.cycles = 1;
    DeltaFragment frag = compute_Delta(scn.model, scn.gain, scn.trigger, M, rep.intervals, gamma, rep.model_envelope.rate);
    rep.Delta = frag.Delta;
    rep.delta_bar = std::move(frag.delta_bar);
    rep.delta_tilde = std::move(frag.delta_tilde);
    const MietReport miet = min_inter_event_time(scn.plant, scn.model, scn.gain, scn.trigger, M, rep.Delta,
                                                 rep.x0_norm, rep.plant_envelope);
    rep.miet = miet.miet;
    rep.F_bar = miet.F_bar;
    rep.F_cap = miet.F_cap;
    rep.F_bold = miet.F_bold;
    rep.a_hat = miet.a_hat;
    rep.a_tilde = miet.a_tilde;
    rep.bk_norm = miet.bk_norm;
    return rep;
}

/// Zero-order-hold bounds. eta_j = min(growth eta of Gamma_zoh at x(t_{i*+j}), ||x(t_{i*+j})||).
inline ZohBoundsReport analyze_zoh(const Scenario& scn, const Trace* trace, const AnalysisOptions& opt = {}) {
    validate(scn);
    const int M = scn.channel.M;
    const Matrix gamma_mat = gamma_zoh(scn.plant, scn.gain);
    const double horizon = opt.growth_horizon > 0.0 ? opt.growth_horizon : default_growth_horizon(gamma_mat);
    const GrowthEstimator growth(gamma_mat, horizon);

    std::vector<UpdateCycle> cycles;
    if (trace != nullptr) {
        cycles = update_cycles(scn, *trace, M);
    } else {
        cycles.push_back({0.0, std::vector<CycleState>(static_cast<std::size_t>(M - 1), CycleState{0.0, scn.x0})});
    }

    ZohBoundsReport best;
    best.gamma = growth.gamma();
    bool first = true;
    for (const auto& cyc : cycles) {
        if (trace != nullptr && cyc.observed == 0) {
            ++best.trivial_cycles;
            continue;
        }
        std::vector<ZohInterval> ivs;
        for (const auto& cs : cyc.states) {
            const double norm = cs.x.norm();
            ivs.push_back({std::min(growth(cs.x).eta, norm), norm});
        }
        ZohBoundsReport rep = compute_delta_zoh(scn.trigger, M, ivs, growth.gamma());
        if (first || rep.Delta_zoh > best.Delta_zoh) {
            const std::size_t trivial = best.trivial_cycles;
            best = std::move(rep);
            best.trivial_cycles = trivial;
            best.cycle_start = cyc.start;
            first = false;
        }
    }
    best.cycles = cycles.size();
    return best;
}

}  // namespace mbet
