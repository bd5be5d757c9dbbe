#include "qudit_anneal/squid.hpp"

#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/parallel.hpp"
#include "qudit_anneal/rng.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qudit::squid {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using constants::pi;

namespace {

constexpr double kGiga = 1e9;

std::string fmt(double v) {
    std::ostringstream o;
    o << v;
    return o.str();
}

}  // namespace

void SquidParams::validate() const {
    for (double v : {l1_ph, l2_ph, c1_ff, c2_ff})
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("inductances and capacitances must be positive");
    if (!(ic_ua >= 0.0) || !std::isfinite(ic_ua)) throw ConfigError("critical current must be non-negative");
    if (!std::isfinite(phi1x) || !std::isfinite(phi2x)) throw ConfigError("external fluxes must be finite");
}

double SquidParams::josephson_ghz() const {
    return ic_ua * 1e-6 * constants::flux_quantum / (2.0 * pi) / constants::planck / kGiga;
}

double SquidParams::inductive_ghz(int loop) const {
    const double l = (loop == 1 ? l1_ph : l2_ph) * 1e-12;
    return constants::flux_quantum * constants::flux_quantum / (2.0 * l) / constants::planck / kGiga;
}

double SquidParams::kinetic_ghz(int loop) const {
    const double c = (loop == 1 ? c1_ff : c2_ff) * 1e-15;
    return constants::hbar * constants::hbar / (2.0 * c * constants::flux_quantum * constants::flux_quantum) /
           constants::planck / kGiga;
}

double SquidParams::oscillator_ghz(int loop) const {
    const double l = (loop == 1 ? l1_ph : l2_ph) * 1e-12;
    const double c = (loop == 1 ? c1_ff : c2_ff) * 1e-15;
    return 1.0 / (2.0 * pi * std::sqrt(l * c)) / kGiga;
}

double SquidParams::beta() const {
    return 2.0 * pi * l1_ph * 1e-12 * 2.0 * ic_ua * 1e-6 * std::abs(std::cos(pi * phi2x)) / constants::flux_quantum;
}

double potential(double phi1, double phi2, const SquidParams& p) {
    const double d1 = phi1 - p.phi1x;
    const double d2 = phi2 - p.phi2x;
    return p.inductive_ghz(1) * d1 * d1 + p.inductive_ghz(2) * d2 * d2 -
           2.0 * p.josephson_ghz() * std::cos(pi * phi2) * std::cos(2.0 * pi * phi1);
}

namespace {

struct Derivatives {
    Eigen::Vector2d gradient;
    Eigen::Matrix2d hessian;
};

Derivatives derivatives(double x1, double x2, const SquidParams& p) {
    const double a1 = p.inductive_ghz(1);
    const double a2 = p.inductive_ghz(2);
    const double ej = p.josephson_ghz();
    const double c2 = std::cos(pi * x2), s2 = std::sin(pi * x2);
    const double c1 = std::cos(2.0 * pi * x1), s1 = std::sin(2.0 * pi * x1);
    Derivatives d;
    d.gradient << 2.0 * a1 * (x1 - p.phi1x) + 4.0 * pi * ej * c2 * s1,
        2.0 * a2 * (x2 - p.phi2x) + 2.0 * pi * ej * s2 * c1;
    d.hessian(0, 0) = 2.0 * a1 + 8.0 * pi * pi * ej * c2 * c1;
    d.hessian(1, 1) = 2.0 * a2 + 2.0 * pi * pi * ej * c2 * c1;
    d.hessian(0, 1) = d.hessian(1, 0) = -4.0 * pi * pi * ej * s2 * s1;
    return d;
}

std::optional<ClassicalMinimum> polish(double x1, double x2, const SquidParams& p) {
    for (int it = 0; it < 100; ++it) {
        const Derivatives d = derivatives(x1, x2, p);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(d.hessian);
        if (es.eigenvalues().minCoeff() <= 0.0) return std::nullopt;
        const Eigen::Vector2d step = d.hessian.ldlt().solve(d.gradient);
        x1 -= step(0);
        x2 -= step(1);
        if (step.norm() < 1e-14) break;
    }
    const Derivatives d = derivatives(x1, x2, p);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(d.hessian);
    if (es.eigenvalues().minCoeff() <= 0.0 || d.gradient.norm() > 1e-6 * (1.0 + p.inductive_ghz(2)))
        return std::nullopt;
    return ClassicalMinimum{x1, x2, potential(x1, x2, p), d.hessian(0, 0), d.hessian(1, 1)};
}

// Lowest minimum strictly left / right of phi1x.
std::pair<std::optional<ClassicalMinimum>, std::optional<ClassicalMinimum>> well_minima(const SquidParams& p) {
    std::optional<ClassicalMinimum> left, right;
    for (const auto& m : classical_minima(p)) {
        auto& slot = m.phi1 < p.phi1x ? left : right;
        if (!slot || m.energy < slot->energy) slot = m;
    }
    return {left, right};
}

double harmonic_length(double kinetic, double curvature) { return std::pow(2.0 * kinetic / curvature, 0.25); }

}  // namespace

std::vector<ClassicalMinimum> classical_minima(const SquidParams& p) {
    p.validate();
    constexpr int n1 = 401, n2 = 201;
    const double lo1 = p.phi1x - 1.0, lo2 = p.phi2x - 0.5;
    const double h1 = 2.0 / (n1 - 1), h2 = 1.0 / (n2 - 1);
    std::vector<double> u(static_cast<std::size_t>(n1 * n2));
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) u[static_cast<std::size_t>(i * n2 + j)] = potential(lo1 + i * h1, lo2 + j * h2, p);
    std::vector<ClassicalMinimum> out;
    for (int i = 1; i + 1 < n1; ++i)
        for (int j = 1; j + 1 < n2; ++j) {
            const double c = u[static_cast<std::size_t>(i * n2 + j)];
            bool is_min = true;
            for (int di = -1; di <= 1 && is_min; ++di)
                for (int dj = -1; dj <= 1; ++dj)
                    if ((di || dj) && u[static_cast<std::size_t>((i + di) * n2 + j + dj)] <= c) {
                        is_min = false;
                        break;
                    }
            if (!is_min) continue;
            auto m = polish(lo1 + i * h1, lo2 + j * h2, p);
            if (!m) continue;
            const bool dup = std::any_of(out.begin(), out.end(), [&](const ClassicalMinimum& o) {
                return std::abs(o.phi1 - m->phi1) < 1e-7 && std::abs(o.phi2 - m->phi2) < 1e-7;
            });
            if (!dup) out.push_back(*m);
        }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.phi1 < b.phi1; });
    return out;
}

FluxGrid auto_grid(const SquidParams& p, std::size_t points1, std::size_t points2, double margin) {
    auto [left, right] = well_minima(p);
    std::vector<ClassicalMinimum> mins;
    if (left) mins.push_back(*left);
    if (right) mins.push_back(*right);
    if (mins.empty()) throw NumericalError("no classical minimum of the SQUID potential found");
    const double t1 = p.kinetic_ghz(1), t2 = p.kinetic_ghz(2);
    double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1, lo2 = lo1, hi2 = -lo1;
    for (const auto& m : mins) {
        const double l1 = harmonic_length(t1, m.curvature1), l2 = harmonic_length(t2, m.curvature2);
        lo1 = std::min(lo1, m.phi1 - margin * l1);
        hi1 = std::max(hi1, m.phi1 + margin * l1);
        lo2 = std::min(lo2, m.phi2 - margin * l2);
        hi2 = std::max(hi2, m.phi2 + margin * l2);
    }
    if (mins.size() == 2 && std::abs(0.5 * (mins[0].phi1 + mins[1].phi1) - p.phi1x) < 1e-6) {
        const double half = std::max(p.phi1x - lo1, hi1 - p.phi1x);
        lo1 = p.phi1x - half;
        hi1 = p.phi1x + half;
    }
    FluxGrid g;
    g.phi1 = {lo1, hi1, std::max<std::size_t>(points1, 64)};
    g.phi2 = {lo2, hi2, std::max<std::size_t>(points2, 64)};
    return g;
}

void validate_grid(const FluxGrid& grid, const SquidParams& p) {
    if (grid.phi1.count < 32 || grid.phi2.count < 32) throw ConfigError("flux grid needs at least 32 points per axis");
    if (!(grid.phi1.max > grid.phi1.min) || !(grid.phi2.max > grid.phi2.min))
        throw ConfigError("flux grid axes must have max > min");
    auto [left, right] = well_minima(p);
    for (const auto& m : {left, right}) {
        if (!m) continue;
        if (m->phi1 <= grid.phi1.min || m->phi1 >= grid.phi1.max || m->phi2 <= grid.phi2.min ||
            m->phi2 >= grid.phi2.max)
            throw ConfigError("flux grid does not contain the potential minimum at (" + fmt(m->phi1) + ", " +
                              fmt(m->phi2) + ")");
    }
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

SparseMatrix grid_hamiltonian(const SquidParams& p, const FluxGrid& g, double* umin) {
    const std::size_t n1 = g.phi1.count, n2 = g.phi2.count;
    const double k1 = p.kinetic_ghz(1) / (g.phi1.spacing() * g.phi1.spacing());
    const double k2 = p.kinetic_ghz(2) / (g.phi2.spacing() * g.phi2.spacing());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.size() * 5);
    *umin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t j = 0; j < n2; ++j) {
            const auto r = static_cast<Index>(g.index(i, j));
            const double u = potential(g.phi1.point(i), g.phi2.point(j), p);
            *umin = std::min(*umin, u);
            trip.emplace_back(r, r, u + 2.0 * k1 + 2.0 * k2);
            if (i > 0) trip.emplace_back(r, static_cast<Index>(g.index(i - 1, j)), -k1);
            if (i + 1 < n1) trip.emplace_back(r, static_cast<Index>(g.index(i + 1, j)), -k1);
            if (j > 0) trip.emplace_back(r, static_cast<Index>(g.index(i, j - 1)), -k2);
            if (j + 1 < n2) trip.emplace_back(r, static_cast<Index>(g.index(i, j + 1)), -k2);
        }
    SparseMatrix h(static_cast<Index>(g.size()), static_cast<Index>(g.size()));
    h.setFromTriplets(trip.begin(), trip.end());
    return h;
}

double boundary_weight(const MatrixXd& states, const FluxGrid& g) {
    double worst = 0.0;
    const std::size_t n1 = g.phi1.count, n2 = g.phi2.count;
    for (Index c = 0; c < states.cols(); ++c) {
        double w = 0.0;
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j)
                if (i == 0 || j == 0 || i + 1 == n1 || j + 1 == n2) {
                    const double a = states(static_cast<Index>(g.index(i, j)), c);
                    w += a * a;
                }
        worst = std::max(worst, w);
    }
    return worst;
}

void fix_gauge(Eigen::Ref<VectorXd> state, Eigen::Ref<VectorXd> coefficients) {
    Index at = 0;
    state.cwiseAbs().maxCoeff(&at);
    if (state(at) < 0.0) {
        state = -state;
        coefficients = -coefficients;
    }
}

}  // namespace

GridStates solve_grid(const SquidParams& p, const FluxGrid& grid, std::size_t levels, const GridSolveOptions& options) {
    p.validate();
    if (levels < 2 || levels % 2 != 0) throw ConfigError("level count M must be even and >= 2");
    if (grid.phi1.count < 32 || grid.phi2.count < 32) throw ConfigError("flux grid needs at least 32 points per axis");
    const std::size_t block = 2 * levels + 8;
    if (block * 16 > grid.size())
        throw ConfigError("M = " + std::to_string(levels) + " exceeds the reliable level count for a " +
                          std::to_string(grid.phi1.count) + " x " + std::to_string(grid.phi2.count) + " grid");

    double umin = 0.0;
    const SparseMatrix h = grid_hamiltonian(p, grid, &umin);
    const double shift = umin - 1.0;
    SparseMatrix shifted = h;
    for (Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= shift;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
    if (ldlt.info() != Eigen::Success) throw NumericalError("sparse factorization of the grid Hamiltonian failed");

    const auto n = static_cast<Index>(grid.size());
    const auto b = static_cast<Index>(block);
    CounterRng rng(options.seed, grid.size());
    MatrixXd x(n, b);
    for (Index c = 0; c < b; ++c)
        for (Index r = 0; r < n; ++r) x(r, c) = rng.uniform(-1.0, 1.0);

    GridStates out;
    out.potential_min = umin;
    std::vector<double> best(levels, std::numeric_limits<double>::infinity());
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        MatrixXd y = ldlt.solve(x);
        Eigen::HouseholderQR<MatrixXd> qr(y);
        y = qr.householderQ() * MatrixXd::Identity(n, b);
        const MatrixXd hy = h * y;
        MatrixXd g = y.transpose() * hy;
        g = 0.5 * (g + g.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
        x = y * es.eigenvectors();
        const MatrixXd hx = hy * es.eigenvectors();
        bool done = true;
        for (std::size_t i = 0; i < levels; ++i) {
            const auto c = static_cast<Index>(i);
            const double r = (hx.col(c) - es.eigenvalues()(c) * x.col(c)).norm();
            best[i] = r;
            done = done && r <= options.tolerance_ghz;
        }
        if (done) {
            out.iterations = it;
            out.states = x.leftCols(static_cast<Index>(levels));
            for (std::size_t i = 0; i < levels; ++i) out.energies.push_back(es.eigenvalues()(static_cast<Index>(i)));
            out.residuals = best;
            out.boundary_weight = boundary_weight(out.states, grid);
            if (out.boundary_weight > 1e-4)
                throw NumericalError("grid states reach the box edge (weight " + fmt(out.boundary_weight) +
                                     "); enlarge the flux box");
            return out;
        }
    }
    throw NumericalError("grid eigensolve did not converge in " + std::to_string(options.max_iterations) +
                             " iterations",
                         best);
}

double grid_doubling_shift(const SquidParams& p, const FluxGrid& grid, std::size_t levels,
                           const GridSolveOptions& options) {
    FluxGrid fine = grid;
    fine.phi1.count = 2 * grid.phi1.count - 1;
    fine.phi2.count = 2 * grid.phi2.count - 1;
    const GridStates coarse = solve_grid(p, grid, levels, options);
    const GridStates refined = solve_grid(p, fine, levels, options);
    auto [left, right] = well_minima(p);
    double floor = std::numeric_limits<double>::infinity();
    for (const auto& m : {left, right})
        if (m) floor = std::min(floor, m->energy);
    double worst = 0.0;
    for (std::size_t i = 0; i < levels; ++i) {
        const double a = coarse.energies[i] - floor;
        const double b = refined.energies[i] - floor;
        worst = std::max(worst, std::abs(a - b) / std::abs(b));
    }
    return worst;
}

LocalizedBasis localize(const GridStates& states, const FluxGrid& grid, double phi1x, double flux_tolerance) {
    const Index m = states.states.cols();
    if (m < 2) throw ConfigError("localization needs at least two states");
    const auto n = static_cast<Index>(grid.size());
    VectorXd phi1(n);
    for (std::size_t i = 0; i < grid.phi1.count; ++i)
        for (std::size_t j = 0; j < grid.phi2.count; ++j)
            phi1(static_cast<Index>(grid.index(i, j))) = grid.phi1.point(i);
    MatrixXd f = states.states.transpose() * phi1.asDiagonal() * states.states;
    f = 0.5 * (f + f.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(f);

    LocalizedBasis lb;
    lb.energy_states = states.states;
    lb.coefficients = es.eigenvectors();
    lb.states = states.states * lb.coefficients;
    for (Index i = 0; i < m; ++i) {
        fix_gauge(lb.states.col(i), lb.coefficients.col(i));
        const double chi = es.eigenvalues()(i);
        const double d = chi - phi1x;
        if (std::abs(d) < flux_tolerance)
            throw NumericalError("monostable or ambiguous: induced flux " + fmt(d) + " Phi0 within tolerance " +
                                 fmt(flux_tolerance));
        lb.flux.push_back(chi);
        lb.induced.push_back(d);
        lb.wells.push_back(d < 0.0 ? Well::Left : Well::Right);
        ++(d < 0.0 ? lb.left_count : lb.right_count);
    }
    if (lb.left_count == 0 || lb.right_count == 0)
        throw NumericalError("monostable or ambiguous: all localized states fall in one well");
    return lb;
}

TunnelingExtraction extract_tunneling(const LocalizedBasis& basis, const std::vector<double>& energies) {
    const Index m = basis.coefficients.cols();
    if (static_cast<Index>(energies.size()) != m) throw ConfigError("energy count does not match the basis");
    double mean = 0.0;
    for (double e : energies) mean += e;
    mean /= static_cast<double>(m);
    VectorXd centered(m);
    for (Index i = 0; i < m; ++i) centered(i) = energies[static_cast<std::size_t>(i)] - mean;

    std::vector<Index> li, ri;
    for (Index i = 0; i < m; ++i) (basis.wells[static_cast<std::size_t>(i)] == Well::Left ? li : ri).push_back(i);
    if (li.empty() || ri.empty()) throw NumericalError("both wells must hold at least one state");

    // Within-well diagonalization in energy-basis coordinates.
    auto rediagonalize = [&](const std::vector<Index>& idx) {
        MatrixXd c(m, static_cast<Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) c.col(static_cast<Index>(k)) = basis.coefficients.col(idx[k]);
        MatrixXd hw = c.transpose() * centered.asDiagonal() * c;
        hw = 0.5 * (hw + hw.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(hw);
        MatrixXd rotated = c * es.eigenvectors();
        for (Index k = 0; k < rotated.cols(); ++k) {
            VectorXd grid_state = basis.energy_states * rotated.col(k);
            fix_gauge(grid_state, rotated.col(k));
        }
        return rotated;
    };
    const MatrixXd cl = rediagonalize(li);
    const MatrixXd cr = rediagonalize(ri);
    const Index nl = cl.cols(), nr = cr.cols();
    MatrixXd full(m, m);
    full << cl, cr;
    MatrixXd hn = full.transpose() * centered.asDiagonal() * full;
    hn = 0.5 * (hn + hn.transpose());

    TunnelingExtraction ex;
    for (Index i = 0; i < nl; ++i) ex.left_energies.push_back(hn(i, i) + mean);
    for (Index i = 0; i < nr; ++i) ex.right_energies.push_back(hn(nl + i, nl + i) + mean);
    ex.cross = hn.block(0, nl, nl, nr);
    for (Index a = 0; a < m; ++a)
        for (Index b = 0; b < m; ++b)
            if (a != b && ((a < nl) == (b < nl))) ex.intra_well_max = std::max(ex.intra_well_max, std::abs(hn(a, b)));

    MatrixXd assembled = MatrixXd::Zero(m, m);
    for (Index i = 0; i < m; ++i) assembled(i, i) = hn(i, i);
    assembled.block(0, nl, nl, nr) = ex.cross;
    assembled.block(nl, 0, nr, nl) = ex.cross.transpose();
    if (nl == nr) {
        TunnelingHamiltonian t;
        t.energies.resize(static_cast<std::size_t>(m));
        for (Index i = 0; i < nl; ++i) {
            t.energies[static_cast<std::size_t>(2 * i)] = ex.left_energies[static_cast<std::size_t>(i)];
            t.energies[static_cast<std::size_t>(2 * i + 1)] = ex.right_energies[static_cast<std::size_t>(i)];
        }
        t.tunneling = ex.cross;
        ex.tunneling = t;
        assembled = t.to_matrix();
        for (Index i = 0; i < m; ++i) assembled(i, i) -= mean;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> check(assembled);
    std::vector<double> sorted(centered.data(), centered.data() + m);
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < m; ++i)
        ex.reconstruction_error =
            std::max(ex.reconstruction_error, std::abs(check.eigenvalues()(i) - sorted[static_cast<std::size_t>(i)]));
    return ex;
}

void DeviceConfig::validate() const {
    device.validate();
    if (waveform.samples < 2) throw ConfigError("waveform needs at least 2 samples");
    if (!std::isfinite(waveform.phi2x_start) || !std::isfinite(waveform.phi2x_end))
        throw ConfigError("waveform fluxes must be finite");
    if (!(bias_unit_phi0 > 0.0)) throw ConfigError("bias unit must be positive");
}

namespace {

SquidParams params_at(const DeviceConfig& c, double s) {
    SquidParams p = c.device;
    p.phi2x = c.waveform.phi2x_start + s * (c.waveform.phi2x_end - c.waveform.phi2x_start);
    return p;
}

void require_bistable(const SquidParams& p, double s) {
    auto [left, right] = well_minima(p);
    if (!left || !right) throw NumericalError("bistability lost at s = " + fmt(s) + " (phi2x = " + fmt(p.phi2x) + ")");
}

double epsilon_at(const SquidParams& p, const FluxGrid& grid, const ScheduleOptions& o, double s) {
    const GridStates gs = solve_grid(p, grid, 4, o.solve);
    const LocalizedBasis lb = localize(gs, grid, p.phi1x);
    if (!lb.balanced())
        throw NumericalError("wells do not split 2 + 2 at s = " + fmt(s) + " under bias offset");
    const TunnelingExtraction ex = extract_tunneling(lb, gs.energies);
    return ex.left_energies[0] - ex.right_energies[0];
}

}  // namespace

SampleExtraction extract_sample(const DeviceConfig& config, double s, std::size_t levels,
                                const ScheduleOptions& options) {
    config.validate();
    SampleExtraction out;
    out.s = s;
    const SquidParams p = params_at(config, s);
    out.phi2x = p.phi2x;
    require_bistable(p, s);
    const FluxGrid grid = auto_grid(p, options.grid_points1, options.grid_points2, options.margin);
    out.grid_states = solve_grid(p, grid, levels, options.solve);
    out.basis = localize(out.grid_states, grid, p.phi1x);
    out.extraction = extract_tunneling(out.basis, out.grid_states.energies);
    return out;
}

ScheduleBuild build_schedule(const DeviceConfig& config, const ScheduleOptions& options) {
    config.validate();
    const std::size_t count = config.waveform.samples;
    std::vector<SampleDiagnostics> diags(count);
    parallel_for(count, options.threads, [&](std::size_t k) {
        const double s = k + 1 == count ? 1.0 : static_cast<double>(k) / static_cast<double>(count - 1);
        SampleDiagnostics& d = diags[k];
        d.s = s;
        const SquidParams p = params_at(config, s);
        d.phi2x = p.phi2x;
        require_bistable(p, s);
        d.grid = auto_grid(p, options.grid_points1, options.grid_points2, options.margin);
        const GridStates gs = solve_grid(p, d.grid, 4, options.solve);
        d.grid_energies = gs.energies;
        d.max_residual = *std::max_element(gs.residuals.begin(), gs.residuals.end());
        d.boundary_weight = gs.boundary_weight;
        const LocalizedBasis lb = localize(gs, d.grid, p.phi1x);
        d.induced_flux = lb.induced;
        if (!lb.balanced())
            throw NumericalError("wells do not split 2 + 2 at s = " + fmt(s) + " (" + std::to_string(lb.left_count) +
                                 " left, " + std::to_string(lb.right_count) + " right)");
        const TunnelingExtraction ex = extract_tunneling(lb, gs.energies);
        d.level_energies = ex.tunneling->energies;
        d.tunneling = ex.tunneling->tunneling;
        d.reconstruction_error = ex.reconstruction_error;
        d.intra_well_max = ex.intra_well_max;
        d.qudit = tunneling_to_qudit(*ex.tunneling, options.identity_tolerance_ghz);

        SquidParams plus = p, minus = p;
        plus.phi1x += options.bias_step_phi0;
        minus.phi1x -= options.bias_step_phi0;
        d.epsilon_plus = epsilon_at(plus, d.grid, options, s);
        d.epsilon_minus = epsilon_at(minus, d.grid, options, s);
        d.depsilon_dphi = (d.epsilon_plus - d.epsilon_minus) / (2.0 * options.bias_step_phi0);
        d.e_scale = 0.5 * config.bias_unit_phi0 * std::abs(d.depsilon_dphi);

        if (options.check_convergence && (k == 0 || k + 1 == count)) {
            d.grid_shift = grid_doubling_shift(p, d.grid, 4, options.solve);
            if (*d.grid_shift > 5e-3)
                throw NumericalError("grid doubling shifts energies by " + fmt(100.0 * *d.grid_shift) +
                                     "% at s = " + fmt(s));
        }
    });

    std::vector<SchedulePoint> points;
    auto clamp = [&](double v) { return std::abs(v) < options.clamp_floor_ghz ? 0.0 : v; };
    for (const auto& d : diags)
        points.push_back({d.s, clamp(d.qudit.delta), d.e_scale, d.qudit.omega_p, clamp(d.qudit.kappa_xz),
                          clamp(d.qudit.kappa_xx)});
    if (auto why = schedule_violation(points)) throw NumericalError("extracted schedule is invalid: " + *why);
    return ScheduleBuild{AnnealSchedule(std::move(points)), std::move(diags)};
}

}  // namespace qudit::squid
