#include <catch_amalgamated.hpp>

#include "mbet/scenario_io.hpp"
#include "mbet/system_model.hpp"

using namespace mbet;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
    Index i = 0;
    for (const auto& r : rows) {
        Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool mentions(const std::vector<std::string>& issues, const std::string& key) {
    for (const auto& s : issues) {
        if (s.rfind(key, 0) == 0) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("dimension checks name the offending field", "[system_model]") {
    const Plant plant{mat({{1, 0}, {0, 2}}), mat({{1}, {0}})};
    const NominalModel model{plant.A, plant.B};
    CHECK(dimension_issues(plant, model, Gain{mat({{-3, 0}})}).empty());
    CHECK(mentions(dimension_issues(plant, model, Gain{mat({{-3, 0, 1}})}), "gain.K"));
    CHECK(mentions(dimension_issues(Plant{mat({{1, 0}}), plant.B}, model, Gain{mat({{1, 1}})}), "plant.A"));
    CHECK(mentions(dimension_issues(plant, NominalModel{mat({{1}}), plant.B}, Gain{mat({{1, 1}})}), "model.A_hat"));
    CHECK(mentions(dimension_issues(plant, NominalModel{plant.A, mat({{1, 1}, {0, 0}})}, Gain{mat({{1, 1}})}),
                   "model.B_hat"));
    Plant nan_plant = plant;
    nan_plant.B(0, 0) = std::nan("");
    CHECK(mentions(dimension_issues(nan_plant, model, Gain{mat({{1, 1}})}), "plant.B"));
    CHECK_THROWS_AS(require_dimensions(plant, model, Gain{mat({{1}})}), ValidationError);
}

TEST_CASE("gain admissibility requires both closed loops Hurwitz", "[system_model]") {
    const Plant plant{mat({{1}}), mat({{1}})};
    CHECK(gain_issues(plant, NominalModel{mat({{1}}), mat({{1}})}, Gain{mat({{-2}})}).empty());
    const auto model_bad = gain_issues(plant, NominalModel{mat({{3}}), mat({{1}})}, Gain{mat({{-2}})});
    REQUIRE(model_bad.size() == 1);
    CHECK_THAT(model_bad[0], ContainsSubstring("A_hat + B_hat K"));
    const auto plant_bad = gain_issues(Plant{mat({{3}}), mat({{1}})}, NominalModel{mat({{1}}), mat({{1}})}, Gain{mat({{-2}})});
    REQUIRE(plant_bad.size() == 1);
    CHECK_THAT(plant_bad[0], ContainsSubstring("A + B K"));
}

TEST_CASE("augmented generators have the documented block structure", "[system_model]") {
    const Plant plant{mat({{0.5, 1}, {0, -1}}), mat({{0}, {1}})};
    const NominalModel model{mat({{0.4, 1}, {0, -1.1}}), mat({{0}, {0.9}})};
    const Gain gain{mat({{-2, -3}})};
    const Index n = 2;
    const Matrix bk = plant.B * gain.K;
    const Matrix closed = model.A_hat + model.B_hat * gain.K;

    const Matrix mb = augmented_generator(plant, model, gain, EstimatorKind::ModelBased);
    CHECK(mb.block(0, 0, n, n) == plant.A);
    CHECK(mb.block(0, n, n, n).isZero(0.0));
    CHECK(mb.block(0, 2 * n, n, n) == bk);
    CHECK(mb.block(n, n, n, n) == closed);
    CHECK(mb.block(2 * n, 2 * n, n, n) == closed);
    CHECK(mb.block(n, 0, n, n).isZero(0.0));
    CHECK(mb.block(2 * n, n, n, n).isZero(0.0));

    const Matrix zoh = augmented_generator(plant, model, gain, EstimatorKind::ZeroOrderHold);
    CHECK(zoh.block(0, 0, n, 3 * n) == mb.block(0, 0, n, 3 * n));
    CHECK(zoh.block(n, 0, 2 * n, 3 * n).isZero(0.0));

    const Matrix g = gamma_matrix(plant, model, gain);
    CHECK(g.block(0, 0, n, n) == plant.A);
    CHECK(g.block(0, n, n, n) == bk);
    CHECK(g.block(n, n, n, n) == closed);
    CHECK(g.block(n, 0, n, n).isZero(0.0));

    const Matrix gz = gamma_zoh(plant, gain);
    CHECK(gz.block(0, 0, n, 2 * n) == g.block(0, 0, n, 2 * n));
    CHECK(gz.block(n, 0, n, 2 * n).isZero(0.0));
}

TEST_CASE("a_hat and a_tilde are operator norms", "[system_model]") {
    const Plant plant{mat({{1.2, 0}, {0, -1}}), mat({{1}, {0.1}})};
    const NominalModel model{mat({{1, 0}, {0, -1}}), mat({{1}, {0}})};
    const Gain gain{mat({{-2, 0}})};
    // A - A_hat + (B - B_hat) K = [[0.2, 0], [-0.2, 0]] has norm 0.2 sqrt(2).
    CHECK_THAT(a_tilde(plant, model, gain), WithinAbs(0.2 * std::sqrt(2.0), 1e-14));
    // A_hat + B_hat K = diag(-1, -1)
    CHECK_THAT(a_hat(model, gain), WithinAbs(1.0, 1e-14));
    CHECK(a_tilde(Plant{model.A_hat, model.B_hat}, model, gain) == 0.0);
}

TEST_CASE("jumps reset the estimator copies exactly", "[system_model]") {
    AugmentedState s{1.5, Vector::Constant(3, 2.0), Vector::Constant(3, -1.0), Vector::Constant(3, 7.0)};
    const AugmentedState trig = jump_on_trigger(s);
    CHECK(trig.x_s == s.x);
    CHECK(trig.x_c == s.x_c);
    CHECK(trig.t == s.t);
    const AugmentedState del = jump_on_delivery(trig);
    CHECK(del.x_c == s.x);
    CHECK(del.e_c().isZero(0.0));
    CHECK(del.e_s().isZero(0.0));

    const AugmentedState back = AugmentedState::from_stacked(s.t, s.stacked());
    CHECK(back.x == s.x);
    CHECK(back.x_s == s.x_s);
    CHECK(back.x_c == s.x_c);
}

TEST_CASE("vehicle preset matrices", "[system_model]") {
    const Scenario scn = vehicle_preset();
    CHECK(scn.model.A_hat(0, 0) == -1.6579);
    CHECK(scn.model.A_hat(0, 1) == 10.45);
    CHECK(scn.model.A_hat(1, 0) == 0.4886);
    CHECK(scn.model.A_hat(1, 1) == -2.718);
    CHECK(scn.model.B_hat(0, 0) == -12.1053);
    CHECK(scn.model.B_hat(1, 1) == 13.1429);
    CHECK(scn.model.A_hat(3, 2) == -12.0);
    CHECK(scn.model.A_hat(2, 1) == 1.0);
    CHECK(scn.model.A_hat(3, 0) == 1.0);
    CHECK(scn.gain.K(0, 2) == -1.0);
    CHECK(scn.gain.K(1, 3) == 1.0 / 40.0);
    CHECK(gain_issues(scn.plant, scn.model, scn.gain).empty());
    CHECK(spectral_abscissa(scn.plant.A) > 0.1);
}
