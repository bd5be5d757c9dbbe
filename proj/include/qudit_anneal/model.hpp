#pragma once

// Problem instances, annealing schedules, and the qubit / qudit Hamiltonians.
//
// Qubit layout for the four-state (qudit) model: logical qubit i is index i,
// its ancilla is index n + i. All energies are in GHz (E/h).

#include "qudit_anneal/operators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qudit {

struct Coupling {
    unsigned i = 0;
    unsigned j = 0;
    double value = 0.0;

    bool operator==(const Coupling&) const = default;
};

// Dimensionless biases h_i and couplings J_ij (one entry per unordered pair, i < j).
class IsingProblem {
public:
    IsingProblem() = default;
    // Throws ConfigError when indices are out of range, i >= j, or a pair repeats.
    IsingProblem(unsigned n, std::vector<double> h, std::vector<Coupling> couplings,
                 std::optional<std::uint64_t> seed = std::nullopt);

    unsigned n() const noexcept { return n_; }
    const std::vector<double>& h() const noexcept { return h_; }
    const std::vector<Coupling>& couplings() const noexcept { return couplings_; }
    const std::optional<std::uint64_t>& seed() const noexcept { return seed_; }

    // Global spin flip: h -> -h, J unchanged.
    IsingProblem negated_biases() const;

    bool operator==(const IsingProblem&) const = default;

private:
    unsigned n_ = 0;
    std::vector<double> h_;
    std::vector<Coupling> couplings_;
    std::optional<std::uint64_t> seed_;
};

struct SchedulePoint {
    double s = 0.0;
    double delta = 0.0;     // transverse-field scale
    double e = 0.0;         // problem-Hamiltonian scale
    double omega_p = 0.0;   // intra-well level spacing
    double kappa_xz = 0.0;
    double kappa_xx = 0.0;

    bool operator==(const SchedulePoint&) const = default;
};

// Tabulated schedule on s in [0, 1], piecewise-linear between knots.
class AnnealSchedule {
public:
    // Throws ConfigError unless: s strictly increasing from exactly 0 to exactly 1,
    // delta non-increasing, e non-decreasing, delta = kappa_xz = kappa_xx = 0 at s = 1.
    explicit AnnealSchedule(std::vector<SchedulePoint> knots);

    // Built-in synthetic schedule sampled on `knots` uniform points:
    // delta = 10(1-s)^2, e = 10s, omega_p = 30s + 6(1-s), kappa_xz = 0.5(1-s), kappa_xx = 1-s.
    static AnnealSchedule synthetic(std::size_t knots = 101);

    // Two-knot schedule delta = 1-s, e = s with constant omega_p and zero kappas.
    static AnnealSchedule linear(double omega_p = 3.0);

    const std::vector<SchedulePoint>& knots() const noexcept { return knots_; }

    // Throws ConfigError for s outside [0, 1].
    SchedulePoint evaluate(double s) const;

    // Copy with omega_p multiplied by `factor` at every knot.
    AnnealSchedule with_omega_scale(double factor) const;

private:
    std::vector<SchedulePoint> knots_;
};

// Human-readable description of the first invariant the knots violate, if any.
std::optional<std::string> schedule_violation(const std::vector<SchedulePoint>& knots);

struct QuditRecord {
    double omega_p = 0.0;
    double kappa_xz = 0.0;
    double kappa_xx = 0.0;
};

using QuditParams = std::vector<QuditRecord>;

// Per-qubit multiplicative overrides on top of a uniform schedule.
struct QuditOverride {
    double omega_p_scale = 1.0;
    double kappa_xz_scale = 1.0;
    double kappa_xx_scale = 1.0;
};

// Uniform qudit parameters from a schedule point, with optional per-qubit overrides.
// Throws ConfigError if `overrides` is non-empty and its size is not n.
QuditParams qudit_params_at(const SchedulePoint& point, unsigned n,
                            const std::vector<QuditOverride>& overrides = {});

enum class ModelKind { TwoState, FourState };

std::string_view to_string(ModelKind kind) noexcept;
// Accepts "two", "four", "two_state", "four_state". Throws ConfigError otherwise.
ModelKind parse_model_kind(std::string_view text);

// delta * (-1/2 sum X_i) + e * (sum h_i Z_i + sum J_ij Z_i Z_j).
HamiltonianOperator build_two_state(const IsingProblem& problem, double delta, double e);

// Two-state terms on the logical qubits plus, per qudit i,
// 1/2 [omega_p tau_z + kappa_xz sigma_x (1 + tau_z) + kappa_xx sigma_x tau_x].
// Throws ConfigError when qudits.size() != problem.n().
HamiltonianOperator build_four_state(const IsingProblem& problem, const SchedulePoint& point,
                                     const QuditParams& qudits);
// Uniform qudits taken from `point`.
HamiltonianOperator build_four_state(const IsingProblem& problem, const SchedulePoint& point);

// Level energies E_l (even l: left well, odd l: right well) and inter-well
// tunneling amplitudes K(n, m) = K_{2n, 2m+1}.
struct TunnelingHamiltonian {
    std::vector<double> energies;
    Eigen::MatrixXd tunneling;

    std::size_t levels() const noexcept { return energies.size(); }
    // Dense M x M matrix. Throws ConfigError on inconsistent shapes or odd M.
    Eigen::MatrixXd to_matrix() const;
};

struct SingleQuditParams {
    double epsilon = 0.0;
    double delta = 0.0;
    double omega_p = 0.0;
    double kappa_xz = 0.0;
    double kappa_xx = 0.0;
};

// Four-level tunneling Hamiltonian -> effective two-qubit parameters. Requires
// E0-E1 = E2-E3, E2-E0 = E3-E1 and K03 = K12 within `tolerance` GHz; otherwise
// throws ConsistencyError naming the violated identity.
SingleQuditParams tunneling_to_qudit(const TunnelingHamiltonian& t, double tolerance = 1e-6);

// H_eff = -1/2(eps sz + Delta sx) + 1/2[wp tz + kxz sx(1 + tz) + kxx sx tx] in the
// basis |x1 x0>, index 2*x1 + x0, where x0 is the logical qubit.
Eigen::Matrix4d qudit_to_effective_matrix(const SingleQuditParams& p);

}  // namespace qudit
