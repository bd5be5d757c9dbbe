#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/io.hpp"
#include "qudit_anneal/squid.hpp"

#include <doctest.h>

#include <cmath>

using namespace qudit;
using namespace qudit::squid;

namespace {

DeviceConfig sample_config() { return io::read_device_config(std::string(QUDIT_SOURCE_DIR) + "/configs/sample_device.json"); }

SquidParams device_at(double phi2x) {
    SquidParams p = sample_config().device;
    p.phi2x = phi2x;
    return p;
}

// Minima of the phi2-pinned reduced potential on a fine 1D grid.
int reduced_minimum_count(const SquidParams& p) {
    const int n = 200001;
    std::vector<double> u(n);
    for (int i = 0; i < n; ++i) {
        const double x = p.phi1x - 1.0 + 2.0 * i / (n - 1);
        u[i] = p.inductive_ghz(1) * (x - p.phi1x) * (x - p.phi1x) -
               2.0 * p.josephson_ghz() * std::cos(constants::pi * p.phi2x) * std::cos(2 * constants::pi * x);
    }
    int count = 0;
    for (int i = 1; i + 1 < n; ++i) count += u[i] < u[i - 1] && u[i] < u[i + 1];
    return count;
}

ScheduleOptions quick_options() {
    ScheduleOptions o;
    o.grid_points1 = o.grid_points2 = 64;
    return o;
}

}  // namespace

TEST_CASE("physical scales") {
    const SquidParams p = device_at(0.3);
    // 1 / (2 pi sqrt(L C)) for 300 pH, 190 fF
    CHECK(p.oscillator_ghz(1) == doctest::Approx(1.0 / (2 * constants::pi * std::sqrt(300e-12 * 190e-15)) / 1e9));
    // hbar omega = sqrt(2 t k) with k = 2 a for the bare parabola
    CHECK(std::sqrt(2 * p.kinetic_ghz(1) * 2 * p.inductive_ghz(1)) == doctest::Approx(p.oscillator_ghz(1)).epsilon(1e-12));
    CHECK(p.josephson_ghz() == doctest::Approx(1.5e-6 * constants::flux_quantum / (2 * constants::pi) / constants::planck / 1e9));
}

TEST_CASE("potential without junction energy is a parabola") {
    SquidParams p = device_at(0.3);
    p.ic_ua = 0.0;
    CHECK(potential(p.phi1x, p.phi2x, p) == 0.0);
    CHECK(potential(p.phi1x + 0.01, p.phi2x, p) > 0.0);
    const auto mins = classical_minima(p);
    REQUIRE(mins.size() == 1);
    CHECK(mins[0].phi1 == doctest::Approx(p.phi1x).epsilon(1e-10));
    CHECK(mins[0].phi2 == doctest::Approx(p.phi2x).epsilon(1e-10));
}

TEST_CASE("symmetric double well at phi1x = 1/2") {
    const SquidParams p = device_at(0.34);
    for (double d : {0.01, 0.1, 0.23})
        for (double phi2 : {0.3, 0.34, 0.37}) CHECK(potential(0.5 + d, phi2, p) == doctest::Approx(potential(0.5 - d, phi2, p)).epsilon(1e-12));
    const auto mins = classical_minima(p);
    REQUIRE(mins.size() == 2);
    CHECK(mins[0].phi1 - 0.5 == doctest::Approx(0.5 - mins[1].phi1).epsilon(1e-8));
    CHECK(mins[0].energy == doctest::Approx(mins[1].energy).epsilon(1e-10));
}

TEST_CASE("bistability agrees with the reduced 1D minimum count") {
    for (double phi2x : {0.25, 0.3, 0.34, 0.36, 0.4, 0.42, 0.45}) {
        const SquidParams p = device_at(phi2x);
        const double beta = p.beta();
        if (std::abs(beta - 1.0) < 0.05) continue;
        INFO("phi2x " << phi2x << " beta " << beta);
        const int oracle = reduced_minimum_count(p);
        CHECK(oracle == (beta > 1.0 ? 2 : 1));
        CHECK(static_cast<int>(classical_minima(p).size()) == oracle);
    }
}

TEST_CASE("auto grid covers the minima and is symmetric") {
    const SquidParams p = device_at(0.34);
    const FluxGrid g = auto_grid(p, 40, 40);
    CHECK(g.phi1.count == 64);
    CHECK(g.phi2.count == 64);
    CHECK(0.5 * (g.phi1.min + g.phi1.max) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_NOTHROW(validate_grid(g, p));
    FluxGrid shifted = g;
    shifted.phi1.min = 0.49;
    CHECK_THROWS_AS(validate_grid(shifted, p), ConfigError);
    FluxGrid coarse = g;
    coarse.phi2.count = 16;
    CHECK_THROWS_AS(validate_grid(coarse, p), ConfigError);
}

TEST_CASE("decoupled loops reproduce the harmonic ladder") {
    SquidParams p = device_at(0.3);
    p.ic_ua = 0.0;
    const FluxGrid g = auto_grid(p, 128, 128);
    const auto gs = solve_grid(p, g, 4);
    const double w1 = p.oscillator_ghz(1), w2 = p.oscillator_ghz(2);
    std::vector<double> ladder;
    for (int j = 0; j < 6; ++j)
        for (int k = 0; k < 3; ++k) ladder.push_back(w1 * (j + 0.5) + w2 * (k + 0.5));
    std::sort(ladder.begin(), ladder.end());
    for (int i = 0; i < 4; ++i) CHECK(std::abs(gs.energies[i] - ladder[i]) / ladder[i] < 5e-3);
    CHECK(gs.boundary_weight < 1e-4);
    const Eigen::MatrixXd gram = gs.states.transpose() * gs.states;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("level count validation") {
    const SquidParams p = device_at(0.34);
    const FluxGrid g = auto_grid(p, 64, 64);
    CHECK_THROWS_AS(solve_grid(p, g, 3), ConfigError);
    CHECK_THROWS_AS(solve_grid(p, g, 0), ConfigError);
    CHECK_THROWS_AS(solve_grid(p, g, 200), ConfigError);
}

TEST_CASE("symmetric bias: eigenstates have definite parity about 1/2") {
    const SquidParams p = device_at(0.35);
    const FluxGrid g = auto_grid(p, 96, 64);
    const auto gs = solve_grid(p, g, 4);
    for (int c = 0; c < 4; ++c) {
        double even = 0.0, odd = 0.0;
        for (std::size_t i = 0; i < g.phi1.count; ++i)
            for (std::size_t j = 0; j < g.phi2.count; ++j) {
                const double a = gs.states(static_cast<Eigen::Index>(g.index(i, j)), c);
                const double b = gs.states(static_cast<Eigen::Index>(g.index(g.phi1.count - 1 - i, j)), c);
                even = std::max(even, std::abs(a - b));
                odd = std::max(odd, std::abs(a + b));
            }
        CHECK(std::min(even, odd) < 1e-6);
    }
}

TEST_CASE("grid doubling moves the lowest levels by under 0.5%") {
    const SquidParams p = device_at(0.34);
    CHECK(grid_doubling_shift(p, auto_grid(p, 64, 64), 4) < 5e-3);
}

TEST_CASE("M = 2 localization and extraction in a symmetric well") {
    const SquidParams p = device_at(0.36);
    const FluxGrid g = auto_grid(p, 96, 64);
    const auto gs = solve_grid(p, g, 2);
    const auto lb = localize(gs, g, 0.5);
    CHECK(lb.left_count == 1);
    CHECK(lb.right_count == 1);
    CHECK(lb.induced[0] == doctest::Approx(-lb.induced[1]).epsilon(1e-8));
    // (|E0> +- |E1>) / sqrt 2 up to gauge
    for (int c = 0; c < 2; ++c) {
        CHECK(std::abs(lb.coefficients(0, c)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
        CHECK(std::abs(lb.coefficients(1, c)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
    }
    const auto ex = extract_tunneling(lb, gs.energies);
    REQUIRE(ex.tunneling);
    const auto& t = *ex.tunneling;
    CHECK(std::abs(t.energies[0] - t.energies[1]) < 1e-9);
    CHECK(std::abs(2.0 * t.tunneling(0, 0)) == doctest::Approx(gs.energies[1] - gs.energies[0]).epsilon(1e-9));
    CHECK(ex.reconstruction_error < 1e-9);
}

TEST_CASE("M = 4 symmetric case splits 2 + 2 and reconstructs the spectrum") {
    const SquidParams p = device_at(0.35);
    const FluxGrid g = auto_grid(p, 96, 64);
    const auto gs = solve_grid(p, g, 4);
    const auto lb = localize(gs, g, 0.5);
    CHECK(lb.left_count == 2);
    CHECK(lb.right_count == 2);
    const Eigen::MatrixXd gram = lb.states.transpose() * lb.states;
    CHECK((gram - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() < 1e-8);
    for (std::size_t i = 0; i < 4; ++i) CHECK((lb.wells[i] == Well::Left) == (lb.induced[i] < 0));
    const auto ex = extract_tunneling(lb, gs.energies);
    REQUIRE(ex.tunneling);
    CHECK(ex.reconstruction_error < 1e-9);
    CHECK(ex.intra_well_max < 1e-12);
    const auto q = tunneling_to_qudit(*ex.tunneling, 1e-4);
    CHECK(std::abs(q.epsilon) < 1e-6);
    CHECK(q.omega_p > 0.0);
    CHECK(q.delta > 0.0);
}

TEST_CASE("ambiguous localization is reported") {
    const SquidParams p = device_at(0.35);
    const FluxGrid g = auto_grid(p, 64, 64);
    const auto gs = solve_grid(p, g, 2);
    CHECK_THROWS_AS(localize(gs, g, 0.5, 10.0), NumericalError);
}

TEST_CASE("strong tilt gives unequal wells and no qudit mapping") {
    bool seen = false;
    for (double tilt : {0.001, 0.003, 0.005}) {
        SquidParams p = device_at(0.32);
        p.phi1x = 0.5 + tilt;
        const FluxGrid g = auto_grid(p, 96, 64);
        const auto gs = solve_grid(p, g, 4);
        const auto lb = localize(gs, g, p.phi1x);
        CHECK(lb.left_count + lb.right_count == 4);
        const auto ex = extract_tunneling(lb, gs.energies);
        CHECK(ex.reconstruction_error < 1e-9);
        if (!lb.balanced()) {
            seen = true;
            CHECK(!ex.tunneling);
        }
    }
    CHECK(seen);
}

TEST_CASE("schedule from the sample device") {
    DeviceConfig c = sample_config();
    c.waveform.samples = 5;
    const auto build = build_schedule(c, quick_options());
    const auto& k = build.schedule.knots();
    REQUIRE(k.size() == 5);
    CHECK(k.front().delta > k.front().e);
    CHECK(k.back().delta == 0.0);
    CHECK(k.back().kappa_xz == 0.0);
    CHECK(k.back().kappa_xx == 0.0);
    for (std::size_t i = 1; i < k.size(); ++i) {
        CHECK(k[i].delta <= k[i - 1].delta);
        CHECK(k[i].e >= k[i - 1].e);
    }
    for (const auto& d : build.samples) {
        CHECK(std::abs(d.qudit.epsilon) < 1e-6);
        CHECK(std::abs(d.level_energies[0] - d.level_energies[1]) < 1e-6);
        CHECK(std::abs(d.level_energies[2] - d.level_energies[3]) < 1e-6);
        CHECK(d.reconstruction_error < 1e-9);
        CHECK(d.e_scale > 0.0);
    }
}

TEST_CASE("schedule results do not depend on the thread count") {
    DeviceConfig c = sample_config();
    c.waveform.samples = 3;
    ScheduleOptions one = quick_options(), many = quick_options();
    many.threads = 3;
    CHECK(io::schedule_csv(build_schedule(c, one).schedule) == io::schedule_csv(build_schedule(c, many).schedule));
}

TEST_CASE("lost bistability names s") {
    DeviceConfig c = sample_config();
    c.waveform = {0.32, 0.45, 3};
    try {
        build_schedule(c, quick_options());
        FAIL("expected a bistability error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("s = 0.5") != std::string::npos);
    }
}

TEST_CASE("general even M extraction") {
    const auto x = extract_sample(sample_config(), 0.5, 6, quick_options());
    CHECK(x.grid_states.energies.size() == 6);
    CHECK(x.basis.left_count + x.basis.right_count == 6);
    CHECK(x.extraction.reconstruction_error < 1e-9);
}
