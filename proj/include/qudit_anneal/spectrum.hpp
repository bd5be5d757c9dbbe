#pragma once

#include "qudit_anneal/model.hpp"
#include "qudit_anneal/operators.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace qudit {

enum class SolverKind { Auto, Dense, Lanczos };

std::string_view to_string(SolverKind kind) noexcept;
SolverKind parse_solver_kind(std::string_view text);

struct SolverSettings {
    SolverKind kind = SolverKind::Auto;
    // Auto switches from the dense path to Lanczos above this dimension.
    std::size_t dense_max_dim = 256;
    // Residual target relative to HamiltonianOperator::spectral_scale().
    double relative_tolerance = 1e-9;
    // Cap on matrix-vector products for the iterative path.
    std::size_t max_iterations = 5000;
    // Krylov basis size before a thick restart (0: automatic).
    std::size_t basis_size = 0;
    std::uint64_t seed = 0x5eed;
};

struct EigenResult {
    std::vector<double> values;      // ascending
    std::vector<StateVector> vectors;
    std::vector<double> residuals;   // ||H v - lambda v||
    std::size_t matvecs = 0;
    std::string method;              // "diagonal", "dense" or "lanczos"
};

// Lowest k eigenpairs. Diagonal operators are sorted directly; otherwise the
// dense route uses a full symmetric eigensolve and the iterative route a
// thick-restart Lanczos with full reorthogonalization started from a seeded
// random vector. Throws NumericalError (carrying the best residuals) when
// Lanczos does not converge within max_iterations matrix-vector products.
EigenResult lowest_eigenpairs(const HamiltonianOperator& h, std::size_t k, const SolverSettings& settings = {});

struct SweepContext {
    const AnnealSchedule* schedule = nullptr;
    const IsingProblem* problem = nullptr;
    ModelKind model = ModelKind::TwoState;
    std::vector<QuditOverride> overrides;  // four-state only; empty means uniform
};

HamiltonianOperator build_model(const SweepContext& ctx, double s);

// lambda_1 - lambda_0 of the model Hamiltonian at s. `stream` selects the
// random start vector of the iterative solver.
double gap_at(const SweepContext& ctx, double s, const SolverSettings& settings = {}, std::uint64_t stream = 0);

struct GapSample {
    double s;
    double gap;
};

struct GapSweepResult {
    std::vector<GapSample> samples;  // coarse grid, ascending s
    double s_star = 0.0;
    double g_min = 0.0;
    std::size_t refine_iterations = 0;
    double bracket_width = 0.0;
};

struct SweepSettings {
    std::size_t grid_points = 201;
    double refine_tol = 1e-5;
    unsigned threads = 1;
};

// Coarse uniform grid followed by golden-section refinement of the bracket
// around the coarse minimum. Coarse samples may run in parallel; results do
// not depend on the thread count.
GapSweepResult min_gap_sweep(const SweepContext& ctx, const SweepSettings& sweep = {},
                             const SolverSettings& solver = {});

// Golden-section minimization of f on [a, b] until the bracket is narrower
// than tol. Returns the best evaluated point.
struct GoldenResult {
    double x;
    double fx;
    std::size_t iterations;
    double width;
};
GoldenResult golden_section_minimize(const std::function<double(double)>& f, double a, double b, double tol);

// Exhaustive classical ground state of the Ising cost sum h_i s_i + sum J_ij s_i s_j
// with s_i = -1 for bit 0 and +1 for bit 1. Energies are exact integers in units
// of 1/7; every h and J must be an integer multiple of 1/7.
struct ClassicalGround {
    std::int64_t energy_units = 0;            // minimum energy * 7
    std::vector<std::uint32_t> minimizers;    // bit i = qubit i
    std::int64_t first_gap_units = 0;         // (next distinct level - minimum) * 7, 0 if none
    std::size_t degeneracy() const noexcept { return minimizers.size(); }
    double energy() const noexcept { return static_cast<double>(energy_units) / 7.0; }
    double first_gap() const noexcept { return static_cast<double>(first_gap_units) / 7.0; }
};

constexpr unsigned kMaxEnumerationQubits = 30;

// Throws ConfigError for n > 30 or values off the 1/7 grid.
ClassicalGround classical_ground(const IsingProblem& problem);

}  // namespace qudit
