#pragma once

// Two-loop rf-SQUID: finite-difference solution on a flux grid, localization of
// the low-energy states into the two wells, and extraction of the tunneling /
// qudit parameters along an annealing waveform.
//
// Fluxes are in units of the flux quantum Phi0, energies in GHz (E/h).

#include "qudit_anneal/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qudit::squid {

namespace constants {
inline constexpr double planck = 6.62607015e-34;            // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double hbar = planck / (2.0 * pi);
inline constexpr double flux_quantum = planck / (2.0 * elementary_charge);  // Wb
}  // namespace constants

struct SquidParams {
    double l1_ph = 0.0;
    double l2_ph = 0.0;
    double c1_ff = 0.0;
    double c2_ff = 0.0;
    double ic_ua = 0.0;
    double phi1x = 0.5;
    double phi2x = 0.0;

    // Throws ConfigError unless L and C are positive and Ic is non-negative (Ic = 0 decouples the loops).
    void validate() const;

    double josephson_ghz() const;                 // E_J = Ic Phi0 / 2pi
    double inductive_ghz(int loop) const;         // Phi0^2 / (2 L h), per Phi0^2
    double kinetic_ghz(int loop) const;           // hbar^2 / (2 C Phi0^2 h), per Phi0^-2
    double oscillator_ghz(int loop) const;        // 1 / (2 pi sqrt(L C))
    // Small-L2 bistability parameter 2 pi L1 (2 Ic) |cos(pi phi2x)| / Phi0.
    double beta() const;
};

// U(phi1, phi2) in GHz.
double potential(double phi1, double phi2, const SquidParams& p);

struct ClassicalMinimum {
    double phi1;
    double phi2;
    double energy;
    double curvature1;  // d2U/dphi1^2, GHz per Phi0^2
    double curvature2;
};

// Local minima of U with phi1 in [phi1x - 1, phi1x + 1] and phi2 in
// [phi2x - 1/2, phi2x + 1/2], sorted by phi1.
std::vector<ClassicalMinimum> classical_minima(const SquidParams& p);

struct Axis {
    double min = 0.0;
    double max = 0.0;
    std::size_t count = 0;
    double spacing() const noexcept { return (max - min) / static_cast<double>(count - 1); }
    double point(std::size_t i) const noexcept { return min + spacing() * static_cast<double>(i); }
};

struct FluxGrid {
    Axis phi1;
    Axis phi2;
    std::size_t size() const noexcept { return phi1.count * phi2.count; }
    // Flattened index; phi2 varies fastest.
    std::size_t index(std::size_t i1, std::size_t i2) const noexcept { return i1 * phi2.count + i2; }
};

// Box = classical minima +- `margin` harmonic lengths per axis. The phi1 axis is
// made exactly symmetric about phi1x when the minima are. Throws NumericalError
// when no minimum is found.
FluxGrid auto_grid(const SquidParams& p, std::size_t points1, std::size_t points2, double margin = 4.0);

// Throws ConfigError when an axis has fewer than 32 points or the box misses a minimum.
void validate_grid(const FluxGrid& grid, const SquidParams& p);

struct GridSolveOptions {
    double tolerance_ghz = 1e-8;     // residual target per eigenpair
    std::size_t max_iterations = 400;
    std::uint64_t seed = 17;
};

struct GridStates {
    std::vector<double> energies;    // ascending, GHz
    Eigen::MatrixXd states;          // grid size x M, orthonormal columns
    std::vector<double> residuals;
    double boundary_weight = 0.0;    // largest probability on the box edge
    double potential_min = 0.0;
    std::size_t iterations = 0;
};

// Lowest M eigenpairs of the finite-difference Hamiltonian (second-order
// central differences, Dirichlet box). Shift-invert subspace iteration with a
// sparse LDL^T factorization. Throws ConfigError for odd M or M too large for
// the grid, NumericalError on non-convergence or when the states reach the box edge.
GridStates solve_grid(const SquidParams& p, const FluxGrid& grid, std::size_t levels,
                      const GridSolveOptions& options = {});

// Largest relative change of (E_n - U_min) over the lowest `levels` states when
// both axis counts are doubled.
double grid_doubling_shift(const SquidParams& p, const FluxGrid& grid, std::size_t levels,
                           const GridSolveOptions& options = {});

enum class Well { Left, Right };

struct LocalizedBasis {
    Eigen::MatrixXd energy_states;  // grid x M (input)
    Eigen::MatrixXd coefficients;   // M x M, localized state i = energy_states * column i
    Eigen::MatrixXd states;         // grid x M
    std::vector<double> flux;       // eigenvalues of Phi1 in the subspace
    std::vector<double> induced;    // flux - phi1x
    std::vector<Well> wells;
    std::size_t left_count = 0;
    std::size_t right_count = 0;
    bool balanced() const noexcept { return left_count == right_count; }
};

// Diagonalizes Phi1 in the span of `states`. Throws NumericalError("monostable
// or ambiguous") when any induced flux is within `flux_tolerance` of zero, or a
// well ends up empty.
LocalizedBasis localize(const GridStates& states, const FluxGrid& grid, double phi1x,
                        double flux_tolerance = 1e-4);

struct TunnelingExtraction {
    std::vector<double> left_energies;   // ascending
    std::vector<double> right_energies;  // ascending
    Eigen::MatrixXd cross;               // <L_n|H|R_m>
    std::optional<TunnelingHamiltonian> tunneling;  // balanced wells only
    double intra_well_max = 0.0;          // largest |<L_a|H|L_b>|, |<R_a|H|R_b>|, a != b
    double reconstruction_error = 0.0;    // spectrum of assembled matrix vs input energies
};

// Re-diagonalizes H separately inside the left and right subspaces; interleaved tunneling form
// when both wells hold M/2 states.
TunnelingExtraction extract_tunneling(const LocalizedBasis& basis, const std::vector<double>& energies);

struct Waveform {
    double phi2x_start = 0.0;
    double phi2x_end = 0.0;
    std::size_t samples = 0;
};

struct DeviceConfig {
    SquidParams device;          // phi2x ignored; taken from the waveform
    Waveform waveform;
    double bias_unit_phi0 = 1.5e-3;  // flux bias corresponding to |h| = 1

    void validate() const;
};

struct ScheduleOptions {
    std::size_t grid_points1 = 128;
    std::size_t grid_points2 = 128;
    double margin = 4.0;
    double bias_step_phi0 = 1e-4;     // central difference for E(s)
    double clamp_floor_ghz = 1e-6;
    double identity_tolerance_ghz = 1e-4;
    bool check_convergence = false;   // grid doubling at the first and last sample
    unsigned threads = 1;
    GridSolveOptions solve;
};

struct SampleDiagnostics {
    double s = 0.0;
    double phi2x = 0.0;
    FluxGrid grid;
    std::vector<double> grid_energies;
    std::vector<double> level_energies;       // E_l, interleaved
    Eigen::MatrixXd tunneling;                // K_{2n,2m+1}
    SingleQuditParams qudit;
    double epsilon_plus = 0.0;
    double epsilon_minus = 0.0;
    double depsilon_dphi = 0.0;               // GHz per Phi0
    double e_scale = 0.0;
    double reconstruction_error = 0.0;
    double intra_well_max = 0.0;
    double max_residual = 0.0;
    double boundary_weight = 0.0;
    std::optional<double> grid_shift;
    std::vector<double> induced_flux;
};

struct ScheduleBuild {
    AnnealSchedule schedule;
    std::vector<SampleDiagnostics> samples;
};

// Runs grid solve -> localize -> extract -> qudit mapping at each waveform
// sample (phi2x linear in s, phi1x at the device value) and assembles the
// four-level schedule. Throws NumericalError naming s when bistability is lost
// or the wells do not split 2 + 2.
ScheduleBuild build_schedule(const DeviceConfig& config, const ScheduleOptions& options = {});

// General even-M extraction at one waveform sample.
struct SampleExtraction {
    double s = 0.0;
    double phi2x = 0.0;
    GridStates grid_states;
    LocalizedBasis basis;
    TunnelingExtraction extraction;
};
SampleExtraction extract_sample(const DeviceConfig& config, double s, std::size_t levels,
                                const ScheduleOptions& options = {});

}  // namespace qudit::squid
