#pragma once

// Dense linear-algebra kernels: matrix exponential, eigendecomposition,
// exponential decay envelopes and scalar bracketing root-finders.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <string>
#include <vector>

#include "mbet/error.hpp"

namespace mbet {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

namespace tolerance {
inline constexpr double kExpm = 1e-10;
inline constexpr double kEigenResidual = 1e-8;
}  // namespace tolerance

/// Induced 2-norm (largest singular value).
inline double op_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

namespace detail {

inline void require_square(const Matrix& m, const char* op) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw ValidationError(std::string(op) + ": expected a non-empty square matrix, got " +
                              std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

inline void require_finite(const Matrix& m, const char* op) {
    if (!m.allFinite()) throw ValidationError(std::string(op) + ": matrix has non-finite entries");
}

inline double one_norm(const Matrix& m) { return m.cwiseAbs().colwise().sum().maxCoeff(); }

// Pade approximant of degree 3, 5, 7, 9 or 13 with scaling and squaring
// (Higham 2005 backward-error thresholds).
inline Matrix expm_pade(const Matrix& a) {
    const Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    const double norm = one_norm(a);

    constexpr double theta3 = 1.495585217958292e-2;
    constexpr double theta5 = 2.539398330063230e-1;
    constexpr double theta7 = 9.504178996162932e-1;
    constexpr double theta9 = 2.097847961257068e0;
    constexpr double theta13 = 5.371920351148152e0;

    Matrix u;
    Matrix v;
    int squarings = 0;

    if (norm <= theta9) {
        const Matrix a2 = a * a;
        if (norm <= theta3) {
            constexpr double b[] = {120.0, 60.0, 12.0, 1.0};
            u = a * (b[3] * a2 + b[1] * id);
            v = b[2] * a2 + b[0] * id;
        } else if (norm <= theta5) {
            constexpr double b[] = {30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
            const Matrix a4 = a2 * a2;
            u = a * (b[5] * a4 + b[3] * a2 + b[1] * id);
            v = b[4] * a4 + b[2] * a2 + b[0] * id;
        } else if (norm <= theta7) {
            constexpr double b[] = {17297280.0, 8648640.0, 1995840.0, 277200.0,
                                    25200.0,    1512.0,    56.0,      1.0};
            const Matrix a4 = a2 * a2;
            const Matrix a6 = a4 * a2;
            u = a * (b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
            v = b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
        } else {
            constexpr double b[] = {17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                    30270240.0,    2162160.0,    110880.0,     3960.0,
                                    90.0,          1.0};
            const Matrix a4 = a2 * a2;
            const Matrix a6 = a4 * a2;
            const Matrix a8 = a6 * a2;
            u = a * (b[9] * a8 + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
            v = b[8] * a8 + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
        }
    } else {
        constexpr double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                670442572800.0,      33522128640.0,       1323241920.0,
                                40840800.0,          960960.0,            16380.0,
                                182.0,               1.0};
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / theta13))));
        const Matrix as = a * std::ldexp(1.0, -squarings);
        const Matrix a2 = as * as;
        const Matrix a4 = a2 * a2;
        const Matrix a6 = a4 * a2;
        u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 +
                  b[1] * id);
        v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
            b[0] * id;
    }

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

}  // namespace detail

/// e^{M t} by scaling and squaring. `t` may be negative.
inline Matrix mat_exp(const Matrix& m, double t = 1.0) {
    detail::require_square(m, "mat_exp");
    detail::require_finite(m, "mat_exp");
    if (!std::isfinite(t)) throw ValidationError("mat_exp: time argument is not finite");
    Matrix r = detail::expm_pade(m * t);
    if (!r.allFinite()) throw NumericsError("mat_exp: result overflowed");
    return r;
}

struct EigenDecomposition {
    ComplexVector values;   // sorted by descending real part
    ComplexMatrix vectors;  // unit-norm right eigenvectors, column i pairs with values(i)

    /// Number of eigenvalues with strictly positive real part.
    Index unstable_count(double tol = 0.0) const {
        return std::count_if(values.data(), values.data() + values.size(),
                             [tol](const std::complex<double>& z) { return z.real() > tol; });
    }
};

inline EigenDecomposition eigendecompose(const Matrix& m) {
    detail::require_square(m, "eigendecompose");
    detail::require_finite(m, "eigendecompose");

    Eigen::EigenSolver<Matrix> solver(m, true);
    if (solver.info() != Eigen::Success) throw NumericsError("eigendecompose: QR iteration did not converge");

    const ComplexVector raw_values = solver.eigenvalues();
    const ComplexMatrix raw_vectors = solver.eigenvectors();
    const Index n = m.rows();

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        const auto za = raw_values(a);
        const auto zb = raw_values(b);
        if (za.real() != zb.real()) return za.real() > zb.real();
        return za.imag() > zb.imag();
    });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    const ComplexMatrix mc = m.cast<std::complex<double>>();
    const double scale = std::max(1.0, m.norm());
    for (Index i = 0; i < n; ++i) {
        const Index src = order[static_cast<std::size_t>(i)];
        ComplexVector v = raw_vectors.col(src);
        const double vn = v.norm();
        if (!(vn > 0.0)) throw NumericsError("eigendecompose: zero eigenvector returned");
        v /= vn;
        const double residual = (mc * v - raw_values(src) * v).norm();
        if (!(residual <= tolerance::kEigenResidual * scale)) {
            throw NumericsError("eigendecompose: eigenpair residual " + std::to_string(residual) +
                                " exceeds tolerance");
        }
        out.values(i) = raw_values(src);
        out.vectors.col(i) = v;
    }
    return out;
}

inline double spectral_abscissa(const Matrix& m) { return eigendecompose(m).values(0).real(); }

/// Pair (c, rate) with ||e^{Mt}|| <= c e^{-rate t} for t >= 0.
struct DecayEnvelope {
    double c = 1.0;
    double rate = 0.0;
};

inline DecayEnvelope decay_envelope(const Matrix& m) {
    detail::require_square(m, "decay_envelope");
    const double abscissa = spectral_abscissa(m);
    if (!(abscissa < 0.0)) {
        throw ValidationError("decay_envelope: matrix is not Hurwitz (spectral abscissa " +
                              std::to_string(abscissa) + ")");
    }

    DecayEnvelope env;
    env.rate = 0.99 * (-abscissa);

    auto weighted = [&](double t) { return op_norm(mat_exp(m, t)) * std::exp(env.rate * t); };

    // Geometric grid over [0, 20/rate], 400 points including t = 0.
    constexpr int kGrid = 400;
    const double t_hi = 20.0 / env.rate;
    const double t_lo = 1e-4 * t_hi;
    double sup = weighted(0.0);
    for (int k = 0; k < kGrid - 1; ++k) {
        const double t = t_lo * std::pow(t_hi / t_lo, static_cast<double>(k) / (kGrid - 2));
        sup = std::max(sup, weighted(t));
    }
    env.c = 1.05 * sup;

    // Independent uniform validation grid on [0, 40/rate]; raise c if the
    // estimate missed a peak between geometric nodes.
    constexpr int kValidation = 1000;
    double worst = 0.0;
    for (int k = 0; k < kValidation; ++k) {
        const double t = (40.0 / env.rate) * (k + 0.5) / kValidation;
        worst = std::max(worst, weighted(t));
    }
    if (worst > env.c) env.c = 1.05 * worst;
    return env;
}

struct Bracket {
    double lo;
    double hi;
};

/// Shrinks a sign-change bracket of `f` to width <= tol. The returned bracket
/// keeps the sign of f(lo) at `lo` and the opposite sign at `hi`.
template <class F>
Bracket bisect_bracket(F&& f, double lo, double hi, double tol) {
    if (!(tol > 0.0)) throw ValidationError("bisect: tolerance must be positive");
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw ValidationError("bisect: invalid interval");
    }
    const double f_lo = f(lo);
    const double f_hi = f(hi);
    if (f_lo == 0.0) return {lo, lo};
    if (f_hi == 0.0) return {hi, hi};
    if (std::signbit(f_lo) == std::signbit(f_hi)) {
        throw NumericsError("bisect: no sign change on [" + std::to_string(lo) + ", " +
                            std::to_string(hi) + "]");
    }
    const bool lo_negative = std::signbit(f_lo);
    while (hi - lo > tol) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
        const double fm = f(mid);
        if (fm == 0.0) return {mid, mid};
        if (std::signbit(fm) == lo_negative) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

template <class F>
double bisect_root(F&& f, double lo, double hi, double tol) {
    const Bracket b = bisect_bracket(std::forward<F>(f), lo, hi, tol);
    return b.lo + 0.5 * (b.hi - b.lo);
}

}  // namespace mbet
