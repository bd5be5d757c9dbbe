#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/model.hpp"
#include "qudit_anneal/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

using namespace qudit;

namespace {

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    return es.eigenvalues();
}

// Tunneling form written out entry by entry.
Eigen::Matrix4d tunneling_by_hand(const std::array<double, 4>& e, double k01, double k03, double k21, double k23) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    for (int l = 0; l < 4; ++l) h(l, l) = e[l];
    h(0, 1) = h(1, 0) = k01;
    h(0, 3) = h(3, 0) = k03;
    h(2, 1) = h(1, 2) = k21;
    h(2, 3) = h(3, 2) = k23;
    return h;
}

}  // namespace

TEST_CASE("problem validation") {
    CHECK_THROWS_AS(IsingProblem(2, {0.0}, {}), ConfigError);
    CHECK_THROWS_AS(IsingProblem(2, {0, 0}, {{1, 0, 1.0}}), ConfigError);
    CHECK_THROWS_AS(IsingProblem(2, {0, 0}, {{0, 2, 1.0}}), ConfigError);
    CHECK_THROWS_AS(IsingProblem(3, {0, 0, 0}, {{0, 1, 1.0}, {0, 1, 2.0}}), ConfigError);
    CHECK_NOTHROW(IsingProblem(3, {0, 0, 0}, {{0, 1, 1.0}, {1, 2, 2.0}}));
}

TEST_CASE("two-state single qubit") {
    SUBCASE("delta 0, E 2: eigenvalues -2, 2 with ground |0>") {
        const auto m = build_two_state(IsingProblem(1, {1.0}, {}), 0.0, 2.0).to_dense();
        CHECK(m(0, 0) == -2.0);
        CHECK(m(1, 1) == 2.0);
        CHECK(m(0, 1) == 0.0);
    }
    SUBCASE("h 0, delta 3: gap 3") {
        const auto ev = sorted_eigenvalues(build_two_state(IsingProblem(1, {0.0}, {}), 3.0, 5.0).to_dense());
        CHECK(ev(1) - ev(0) == doctest::Approx(3.0).epsilon(1e-14));
    }
    SUBCASE("h 1, delta 1, E 1: gap sqrt 5") {
        const auto ev = sorted_eigenvalues(build_two_state(IsingProblem(1, {1.0}, {}), 1.0, 1.0).to_dense());
        CHECK(ev(1) - ev(0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
    }
}

TEST_CASE("two-state couplings appear once per pair") {
    const IsingProblem p(2, {0.0, 0.0}, {{0, 1, 0.5}});
    const auto m = build_two_state(p, 0.0, 2.0).to_dense();
    // ZZ eigenvalue +1 on 00 and 11, -1 on 01 and 10
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 1) == -1.0);
    CHECK(m(3, 3) == 1.0);
}

TEST_CASE("four-state single qudit equals the effective two-qubit matrix") {
    CounterRng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const double h = rng.uniform(-1, 1);
        SchedulePoint pt{0.3, rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(1, 10), rng.uniform(-1, 1),
                         rng.uniform(-1, 1)};
        const auto m = build_four_state(IsingProblem(1, {h}, {}), pt).to_dense();
        const SingleQuditParams q{-2.0 * pt.e * h, pt.delta, pt.omega_p, pt.kappa_xz, pt.kappa_xx};
        CHECK((m - qudit_to_effective_matrix(q)).cwiseAbs().maxCoeff() <= 1e-15);
    }
}

TEST_CASE("four-state spectrum matches the tunneling form minus its mean") {
    CounterRng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const double eps = rng.uniform(-2, 2), wp = rng.uniform(1, 8), delta = rng.uniform(0, 2);
        const double kxz = rng.uniform(-1, 1), kxx = rng.uniform(-1, 1), shift = rng.uniform(-50, 50);
        const double k01 = -delta / 2, k23 = kxz + k01, k03 = kxx / 2;
        const std::array<double, 4> e{shift + eps / 2 - wp / 2, shift - eps / 2 - wp / 2, shift + eps / 2 + wp / 2,
                                      shift - eps / 2 + wp / 2};
        const Eigen::Matrix4d t = tunneling_by_hand(e, k01, k03, k03, k23);
        // single qudit with h chosen so -2 E h = eps
        const double eh = 1.5;
        SchedulePoint pt{0.5, delta, eh, wp, kxz, kxx};
        const auto four = build_four_state(IsingProblem(1, {-eps / (2 * eh)}, {}), pt).to_dense();
        const auto a = sorted_eigenvalues(four);
        const auto b = sorted_eigenvalues(t);
        for (int i = 0; i < 4; ++i) CHECK(std::abs(a(i) - (b(i) - shift)) <= 1e-12);
    }
}

TEST_CASE("four-state decoupling with zero delta and kappas") {
    const IsingProblem p(2, {1.0 / 7, -3.0 / 7}, {{0, 1, 2.0 / 7}});
    SchedulePoint pt{1.0, 0.0, 2.0, 5.0, 0.0, 0.0};
    const auto m = build_four_state(p, pt).to_dense();
    const auto ev = sorted_eigenvalues(m);
    // classical minimum of h.s + J s0 s1 over s in {-1, 1}^2
    double best = 1e9;
    for (int b = 0; b < 4; ++b) {
        const double s0 = (b & 1) ? 1 : -1, s1 = (b & 2) ? 1 : -1;
        best = std::min(best, p.h()[0] * s0 + p.h()[1] * s1 + 2.0 / 7 * s0 * s1);
    }
    CHECK(ev(0) == doctest::Approx(2.0 * best - 5.0).epsilon(1e-14));
    CHECK((m - m.diagonal().asDiagonal().toDenseMatrix()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("four-state n=1, h=0, zero kappas: two-state spectrum shifted by +-omega_p/2") {
    SchedulePoint pt{0.4, 1.3, 1.0, 4.0, 0.0, 0.0};
    const auto ev = sorted_eigenvalues(build_four_state(IsingProblem(1, {0.0}, {}), pt).to_dense());
    CHECK(ev(0) == doctest::Approx(-0.65 - 2.0));
    CHECK(ev(1) == doctest::Approx(0.65 - 2.0));
    CHECK(ev(2) == doctest::Approx(-0.65 + 2.0));
    CHECK(ev(3) == doctest::Approx(0.65 + 2.0));
}

TEST_CASE("qudit record count must match") {
    const IsingProblem p(2, {0, 0}, {});
    CHECK_THROWS_AS(build_four_state(p, SchedulePoint{}, QuditParams(1)), ConfigError);
    CHECK_THROWS_AS(qudit_params_at(SchedulePoint{}, 2, std::vector<QuditOverride>(3)), ConfigError);
}

TEST_CASE("qudit overrides scale per qubit") {
    SchedulePoint pt{0.5, 1, 1, 4, 0.5, 1};
    const auto q = qudit_params_at(pt, 2, {{1, 1, 1}, {2, 0, 3}});
    CHECK(q[0].omega_p == 4);
    CHECK(q[1].omega_p == 8);
    CHECK(q[1].kappa_xz == 0);
    CHECK(q[1].kappa_xx == 3);
}

TEST_CASE("tunneling to qudit: worked example") {
    TunnelingHamiltonian t{{0.5, -0.5, 3.5, 2.5}, Eigen::MatrixXd(2, 2)};
    t.tunneling << -0.25, 0.2, 0.2, 0.1;
    const auto p = tunneling_to_qudit(t);
    CHECK(p.epsilon == doctest::Approx(1.0));
    CHECK(p.omega_p == doctest::Approx(3.0));
    CHECK(p.delta == doctest::Approx(0.5));
    CHECK(p.kappa_xz == doctest::Approx(0.35));
    CHECK(p.kappa_xx == doctest::Approx(0.4));
}

TEST_CASE("tunneling to qudit: no tunneling") {
    TunnelingHamiltonian t{{0, 0, 7, 7}, Eigen::MatrixXd::Zero(2, 2)};
    const auto p = tunneling_to_qudit(t);
    CHECK(p.epsilon == 0.0);
    CHECK(p.omega_p == 7.0);
    CHECK(p.delta == 0.0);
    CHECK(p.kappa_xz == 0.0);
    CHECK(p.kappa_xx == 0.0);
}

TEST_CASE("tunneling to qudit: identity violations are named") {
    TunnelingHamiltonian bad{{0, -1, 3, 1}, Eigen::MatrixXd::Zero(2, 2)};
    try {
        tunneling_to_qudit(bad);
        FAIL("expected a consistency error");
    } catch (const ConsistencyError& e) {
        CHECK(e.identity() == "E0-E1=E2-E3");
    }
    TunnelingHamiltonian k{{0, 0, 1, 1}, Eigen::MatrixXd(2, 2)};
    k.tunneling << 0.1, 0.2, 0.3, 0.1;
    try {
        tunneling_to_qudit(k);
        FAIL("expected a consistency error");
    } catch (const ConsistencyError& e) {
        CHECK(e.identity() == "K03=K12");
    }
    CHECK_THROWS_AS(tunneling_to_qudit(TunnelingHamiltonian{{0, 0}, Eigen::MatrixXd::Zero(1, 1)}), ConfigError);
}

TEST_CASE("effective matrix examples") {
    CHECK(qudit_to_effective_matrix({}).isZero(0.0));
    const auto m = qudit_to_effective_matrix({1.0, 0, 0, 0, 0});
    CHECK(m(0, 0) == 0.5);
    CHECK(m(1, 1) == -0.5);
    CHECK(m(2, 2) == 0.5);
    CHECK(m(3, 3) == -0.5);
    CHECK((m - m.diagonal().asDiagonal().toDenseMatrix()).isZero(0.0));
}

TEST_CASE("tunneling matrix layout") {
    TunnelingHamiltonian t{{1, 2, 3, 4}, Eigen::MatrixXd(2, 2)};
    t.tunneling << 0.1, 0.3, 0.2, 0.4;
    const auto m = t.to_matrix();
    CHECK(m(0, 1) == 0.1);
    CHECK(m(0, 3) == 0.3);
    CHECK(m(2, 1) == 0.2);
    CHECK(m(2, 3) == 0.4);
    CHECK(m(0, 2) == 0.0);
    CHECK(m(1, 3) == 0.0);
    CHECK((m - m.transpose()).isZero(0.0));
}

TEST_CASE("schedule validation") {
    CHECK_NOTHROW(AnnealSchedule::synthetic());
    CHECK_THROWS_AS(AnnealSchedule({{0.1, 1, 0, 1, 0, 0}, {1, 0, 1, 1, 0, 0}}), ConfigError);
    CHECK_THROWS_AS(AnnealSchedule({{0, 1, 0, 1, 0, 0}, {0.9, 0, 1, 1, 0, 0}}), ConfigError);
    CHECK_THROWS_AS(AnnealSchedule({{0, 1, 0, 1, 0, 0}, {0.5, 1.1, 0.5, 1, 0, 0}, {1, 0, 1, 1, 0, 0}}),
                    ConfigError);
    CHECK_THROWS_AS(AnnealSchedule({{0, 1, 1, 1, 0, 0}, {0.5, 0.5, 0.5, 1, 0, 0}, {1, 0, 1, 1, 0, 0}}),
                    ConfigError);
    CHECK_THROWS_AS(AnnealSchedule({{0, 1, 0, 1, 0, 0}, {1, 0, 1, 1, 0.1, 0}}), ConfigError);
    CHECK_THROWS_AS(AnnealSchedule({{0, 1, 0, 1, 0, 0}, {0.5, 0.5, 0.5, 1, 0, 0}, {0.5, 0.4, 0.6, 1, 0, 0},
                                    {1, 0, 1, 1, 0, 0}}),
                    ConfigError);
}

TEST_CASE("omega_p may be non-monotonic") {
    CHECK_NOTHROW(AnnealSchedule({{0, 1, 0, 5, 1, 1}, {0.5, 0.5, 0.5, 2, 0.3, 0.3}, {1, 0, 1, 6, 0, 0}}));
}

TEST_CASE("schedule interpolation is piecewise linear and exact at knots") {
    const auto s = AnnealSchedule::synthetic(11);
    const auto k = s.evaluate(0.3);
    CHECK(k.delta == doctest::Approx(10 * 0.49));
    const auto mid = s.evaluate(0.35);
    CHECK(mid.delta == doctest::Approx(0.5 * (10 * 0.49 + 10 * 0.36)));
    CHECK(mid.e == doctest::Approx(3.5));
    CHECK(s.evaluate(1.0).delta == 0.0);
    CHECK_THROWS_AS(s.evaluate(1.1), ConfigError);
    CHECK_THROWS_AS(s.evaluate(-0.1), ConfigError);
    const auto scaled = s.with_omega_scale(4.0);
    CHECK(scaled.evaluate(0.35).omega_p == doctest::Approx(4 * mid.omega_p));
    CHECK(scaled.evaluate(0.35).kappa_xx == doctest::Approx(mid.kappa_xx));
}

TEST_CASE("synthetic schedule shape") {
    const auto s = AnnealSchedule::synthetic();
    CHECK(s.knots().size() == 101);
    CHECK(s.evaluate(0.0).delta == 10.0);
    CHECK(s.evaluate(1.0).e == 10.0);
    CHECK(s.evaluate(1.0).omega_p == 30.0);
    CHECK(s.evaluate(0.0).omega_p == 6.0);
    CHECK(s.evaluate(0.0).kappa_xz == 0.5);
    CHECK(s.evaluate(0.0).kappa_xx == 1.0);
}

TEST_CASE("model kind parsing") {
    CHECK(parse_model_kind("two") == ModelKind::TwoState);
    CHECK(parse_model_kind("four_state") == ModelKind::FourState);
    CHECK_THROWS_AS(parse_model_kind("three"), ConfigError);
    CHECK(to_string(ModelKind::FourState) == "four_state");
}

TEST_CASE("negated biases") {
    const IsingProblem p(2, {0.5, -1}, {{0, 1, 0.25}});
    const auto q = p.negated_biases();
    CHECK(q.h() == std::vector<double>{-0.5, 1});
    CHECK(q.couplings() == p.couplings());
}
