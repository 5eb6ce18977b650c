#pragma once

// Plant, nominal model and gain of the networked loop, and the flow/jump
// maps of the stacked state (x, x_s, x_c).

#include <string>
#include <vector>

#include "mbet/error.hpp"
#include "mbet/numerics.hpp"

namespace mbet {

/// True dynamics x' = A x + B u.
struct Plant {
    Matrix A;
    Matrix B;

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
};

/// The (A_hat, B_hat) pair run by both the sensor and the controller model.
struct NominalModel {
    Matrix A_hat;
    Matrix B_hat;
};

/// State feedback u = K x_c.
struct Gain {
    Matrix K;
};

enum class EstimatorKind { ModelBased, ZeroOrderHold };

inline const char* to_string(EstimatorKind k) { return k == EstimatorKind::ModelBased ? "mb" : "zoh"; }

struct AugmentedState {
    double t = 0.0;
    Vector x;
    Vector x_s;
    Vector x_c;

    Vector e_s() const { return x_s - x; }
    Vector e_c() const { return x_c - x; }

    Vector stacked() const {
        Vector s(3 * x.size());
        s << x, x_s, x_c;
        return s;
    }

    static AugmentedState from_stacked(double t, const Vector& s) {
        const Index n = s.size() / 3;
        return {t, s.head(n), s.segment(n, n), s.tail(n)};
    }
};

/// Dimension problems, each prefixed with the offending field name.
inline std::vector<std::string> dimension_issues(const Plant& plant, const NominalModel& model, const Gain& gain) {
    std::vector<std::string> issues;
    const Index n = plant.A.rows();
    const Index m = plant.B.cols();
    if (n < 1 || plant.A.cols() != n) issues.push_back("plant.A: must be square with n >= 1");
    if (plant.B.rows() != n || m < 1) issues.push_back("plant.B: must be n x m with m >= 1");
    if (model.A_hat.rows() != n || model.A_hat.cols() != n) issues.push_back("model.A_hat: must match plant.A dimensions");
    if (model.B_hat.rows() != n || model.B_hat.cols() != m) issues.push_back("model.B_hat: must match plant.B dimensions");
    if (gain.K.rows() != m || gain.K.cols() != n) issues.push_back("gain.K: must be m x n");
    const auto finite = [&](const Matrix& mat, const char* name) {
        if (!mat.allFinite()) issues.push_back(std::string(name) + ": entries must be finite");
    };
    finite(plant.A, "plant.A");
    finite(plant.B, "plant.B");
    finite(model.A_hat, "model.A_hat");
    finite(model.B_hat, "model.B_hat");
    finite(gain.K, "gain.K");
    return issues;
}

inline void require_dimensions(const Plant& plant, const NominalModel& model, const Gain& gain) {
    auto issues = dimension_issues(plant, model, gain);
    if (!issues.empty()) throw ValidationError(std::move(issues));
}

inline Matrix model_closed_loop(const NominalModel& model, const Gain& gain) {
    return model.A_hat + model.B_hat * gain.K;
}

inline Matrix plant_closed_loop(const Plant& plant, const Gain& gain) { return plant.A + plant.B * gain.K; }

/// Both closed loops must be Hurwitz for the gain to be admissible.
inline std::vector<std::string> gain_issues(const Plant& plant, const NominalModel& model, const Gain& gain) {
    std::vector<std::string> issues;
    if (spectral_abscissa(model_closed_loop(model, gain)) >= 0.0) {
        issues.push_back("gain.K: A_hat + B_hat K is not Hurwitz");
    }
    if (spectral_abscissa(plant_closed_loop(plant, gain)) >= 0.0) {
        issues.push_back("gain.K: A + B K is not Hurwitz");
    }
    return issues;
}

/// a_hat = ||A_hat + B_hat K||.
inline double a_hat(const NominalModel& model, const Gain& gain) { return op_norm(model_closed_loop(model, gain)); }

/// a_tilde = ||(A - A_hat) + (B - B_hat) K||.
inline double a_tilde(const Plant& plant, const NominalModel& model, const Gain& gain) {
    return op_norm((plant.A - model.A_hat) + (plant.B - model.B_hat) * gain.K);
}

/// Generator of the stacked flow (x, x_s, x_c) between jumps.
inline Matrix augmented_generator(const Plant& plant, const NominalModel& model, const Gain& gain, EstimatorKind kind) {
    require_dimensions(plant, model, gain);
    const Index n = plant.n();
    Matrix g = Matrix::Zero(3 * n, 3 * n);
    g.block(0, 0, n, n) = plant.A;
    g.block(0, 2 * n, n, n) = plant.B * gain.K;
    if (kind == EstimatorKind::ModelBased) {
        const Matrix closed = model_closed_loop(model, gain);
        g.block(n, n, n, n) = closed;
        g.block(2 * n, 2 * n, n, n) = closed;
    }
    return g;
}

/// [[A, BK], [0, A_hat + B_hat K]]: the (x, x_c) flow of the model-based loop.
inline Matrix gamma_matrix(const Plant& plant, const NominalModel& model, const Gain& gain) {
    require_dimensions(plant, model, gain);
    const Index n = plant.n();
    Matrix g = Matrix::Zero(2 * n, 2 * n);
    g.block(0, 0, n, n) = plant.A;
    g.block(0, n, n, n) = plant.B * gain.K;
    g.block(n, n, n, n) = model_closed_loop(model, gain);
    return g;
}

/// [[A, BK], [0, 0]]: the (x, x_c) flow with a held controller state.
inline Matrix gamma_zoh(const Plant& plant, const Gain& gain) {
    const Index n = plant.n();
    if (plant.A.cols() != n || plant.B.rows() != n || gain.K.rows() != plant.B.cols() || gain.K.cols() != n) {
        throw ValidationError("gamma_zoh: dimension mismatch");
    }
    Matrix g = Matrix::Zero(2 * n, 2 * n);
    g.block(0, 0, n, n) = plant.A;
    g.block(0, n, n, n) = plant.B * gain.K;
    return g;
}

inline AugmentedState jump_on_trigger(AugmentedState s) {
    s.x_s = s.x;
    return s;
}

inline AugmentedState jump_on_delivery(AugmentedState s) {
    s.x_c = s.x;
    return s;
}

}  // namespace mbet
