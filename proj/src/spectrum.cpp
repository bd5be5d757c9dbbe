#include "qudit_anneal/spectrum.hpp"

#include "qudit_anneal/errors.hpp"
#include "qudit_anneal/parallel.hpp"
#include "qudit_anneal/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace qudit {

std::string_view to_string(SolverKind kind) noexcept {
    switch (kind) {
        case SolverKind::Dense: return "dense";
        case SolverKind::Lanczos: return "lanczos";
        default: return "auto";
    }
}

SolverKind parse_solver_kind(std::string_view text) {
    if (text == "auto") return SolverKind::Auto;
    if (text == "dense") return SolverKind::Dense;
    if (text == "lanczos") return SolverKind::Lanczos;
    throw ConfigError("unknown solver '" + std::string(text) + "' (expected dense, lanczos or auto)");
}

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double residual_norm(const HamiltonianOperator& h, const StateVector& v, double lambda) {
    const StateVector hv = h.matvec(v);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double r = hv[i] - lambda * v[i];
        acc += r * r;
    }
    return std::sqrt(acc);
}

EigenResult solve_diagonal(const HamiltonianOperator& h, std::size_t k) {
    const StateVector d = h.diagonal();
    std::vector<std::size_t> order(d.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t take = std::min(k, d.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) { return d[a] < d[b] || (d[a] == d[b] && a < b); });
    EigenResult r;
    r.method = "diagonal";
    for (std::size_t i = 0; i < take; ++i) {
        r.values.push_back(d[order[i]]);
        StateVector v(d.size(), 0.0);
        v[order[i]] = 1.0;
        r.vectors.push_back(std::move(v));
        r.residuals.push_back(0.0);
    }
    return r;
}

EigenResult solve_dense(const HamiltonianOperator& h, std::size_t k) {
    const MatrixXd m = h.to_dense(std::max<std::size_t>(h.dimension(), HamiltonianOperator::kDefaultDenseCap));
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolve failed");
    EigenResult r;
    r.method = "dense";
    const std::size_t take = std::min(k, h.dimension());
    for (std::size_t i = 0; i < take; ++i) {
        const Index c = static_cast<Index>(i);
        r.values.push_back(es.eigenvalues()(c));
        const VectorXd& col = es.eigenvectors().col(c);
        StateVector v(col.data(), col.data() + col.size());
        r.residuals.push_back(residual_norm(h, v, r.values.back()));
        r.vectors.push_back(std::move(v));
    }
    r.matvecs = take;
    return r;
}

void fill_random_unit(Eigen::Ref<VectorXd> v, CounterRng& rng) {
    for (Index i = 0; i < v.size(); ++i) v(i) = rng.uniform(-1.0, 1.0);
    v /= v.norm();
}

// Thick-restart Lanczos with two-pass classical Gram-Schmidt against the whole
// basis at every step. The projected matrix is kept as the full Rayleigh
// quotient V^T H V, so after a restart it is the usual arrowhead-plus-tridiagonal.
EigenResult solve_lanczos(const HamiltonianOperator& h, std::size_t k, const SolverSettings& settings) {
    const std::size_t dim = h.dimension();
    const double scale = h.spectral_scale();
    const double tol = settings.relative_tolerance * scale;
    const double breakdown = 1e-13 * scale;

    std::size_t m = settings.basis_size ? settings.basis_size : std::max<std::size_t>(2 * k + 20, 32);
    m = std::min(m, dim);
    if (m <= k) m = std::min(dim, k + 1);

    CounterRng rng(settings.seed, 0x1a2c205ULL);
    MatrixXd basis(static_cast<Index>(dim), static_cast<Index>(m + 1));
    MatrixXd proj = MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(m));
    VectorXd w(static_cast<Index>(dim));
    std::vector<double> beta(m, 0.0);
    fill_random_unit(basis.col(0), rng);

    std::size_t start = 0;
    std::size_t matvecs = 0;
    std::vector<double> best(k, std::numeric_limits<double>::infinity());

    for (;;) {
        std::size_t size = m;
        bool invariant = false;
        for (std::size_t j = start; j < m; ++j) {
            const Index jj = static_cast<Index>(j);
            h.matvec_into(std::span<const double>(basis.col(jj).data(), dim), std::span<double>(w.data(), dim));
            ++matvecs;
            auto vj = basis.leftCols(jj + 1);
            const double before = w.norm();
            VectorXd c = vj.transpose() * w;
            w.noalias() -= vj * c;
            // Second pass only when cancellation was severe (DGKS criterion).
            if (w.norm() < 0.7071 * before) {
                const VectorXd c2 = vj.transpose() * w;
                w.noalias() -= vj * c2;
                c += c2;
            }
            for (Index i = 0; i <= jj; ++i) proj(i, jj) = proj(jj, i) = c(i);
            beta[j] = w.norm();
            if (beta[j] <= breakdown) {
                if (j + 1 >= k || j + 1 == dim) {
                    size = j + 1;
                    invariant = true;
                    beta[j] = 0.0;
                    break;
                }
                // Invariant subspace smaller than k: continue from a fresh direction.
                VectorXd fresh(static_cast<Index>(dim));
                fill_random_unit(fresh, rng);
                for (int pass = 0; pass < 2; ++pass) fresh.noalias() -= vj * (vj.transpose() * fresh);
                basis.col(jj + 1) = fresh / fresh.norm();
                beta[j] = 0.0;
                continue;
            }
            basis.col(jj + 1) = w / beta[j];
        }

        const Index sz = static_cast<Index>(size);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(proj.topLeftCorner(sz, sz));
        if (es.info() != Eigen::Success) throw NumericalError("projected eigensolve failed");
        const VectorXd& theta = es.eigenvalues();
        const MatrixXd& y = es.eigenvectors();
        const double beta_last = invariant ? 0.0 : beta[size - 1];
        const std::size_t kk = std::min(k, size);

        bool converged = true;
        for (std::size_t i = 0; i < kk; ++i) {
            const double est = std::abs(beta_last * y(sz - 1, static_cast<Index>(i)));
            best[i] = std::min(best[i], est);
            converged = converged && est <= tol;
        }

        if (converged) {
            EigenResult r;
            r.method = "lanczos";
            const MatrixXd ritz = basis.leftCols(sz) * y.leftCols(static_cast<Index>(kk));
            bool accurate = true;
            for (std::size_t i = 0; i < kk; ++i) {
                const Index ci = static_cast<Index>(i);
                StateVector v(ritz.col(ci).data(), ritz.col(ci).data() + dim);
                r.values.push_back(theta(ci));
                r.residuals.push_back(residual_norm(h, v, theta(ci)));
                ++matvecs;
                accurate = accurate && r.residuals.back() <= 10.0 * tol;
                r.vectors.push_back(std::move(v));
            }
            r.matvecs = matvecs;
            if (accurate || invariant) return r;
        }

        if (matvecs >= settings.max_iterations) {
            std::ostringstream msg;
            msg << "Lanczos did not converge in " << matvecs << " matrix-vector products (tolerance " << tol
                << ", best residual estimates";
            for (double b : best) msg << ' ' << b;
            msg << ')';
            throw NumericalError(msg.str(), best);
        }

        // Keep the lowest `keep` Ritz vectors plus the residual direction.
        const std::size_t keep = std::min(size - 1, k + (size - k) / 2);
        const Index kp = static_cast<Index>(keep);
        const MatrixXd kept = basis.leftCols(sz) * y.leftCols(kp);
        basis.leftCols(kp) = kept;
        basis.col(kp) = basis.col(sz);
        proj.setZero();
        for (Index i = 0; i < kp; ++i) proj(i, i) = theta(i);
        start = keep;
    }
}

}  // namespace

EigenResult lowest_eigenpairs(const HamiltonianOperator& h, std::size_t k, const SolverSettings& settings) {
    if (k == 0) throw ConfigError("requested zero eigenpairs");
    if (k > h.dimension())
        throw ConfigError("requested " + std::to_string(k) + " eigenpairs of a " + std::to_string(h.dimension()) +
                          "-dimensional operator");
    if (settings.kind != SolverKind::Dense && h.is_diagonal()) return solve_diagonal(h, k);
    const bool dense = settings.kind == SolverKind::Dense ||
                       (settings.kind == SolverKind::Auto && h.dimension() <= settings.dense_max_dim) ||
                       h.dimension() <= k + 2;
    return dense ? solve_dense(h, k) : solve_lanczos(h, k, settings);
}

HamiltonianOperator build_model(const SweepContext& ctx, double s) {
    if (!ctx.schedule || !ctx.problem) throw ConfigError("sweep context needs a schedule and a problem");
    const SchedulePoint p = ctx.schedule->evaluate(s);
    if (ctx.model == ModelKind::TwoState) return build_two_state(*ctx.problem, p.delta, p.e);
    return build_four_state(*ctx.problem, p, qudit_params_at(p, ctx.problem->n(), ctx.overrides));
}

double gap_at(const SweepContext& ctx, double s, const SolverSettings& settings, std::uint64_t stream) {
    const HamiltonianOperator h = build_model(ctx, s);
    SolverSettings local = settings;
    local.seed = CounterRng::mix(settings.seed ^ CounterRng::mix(stream + 1));
    const EigenResult r = lowest_eigenpairs(h, 2, local);
    return std::max(0.0, r.values[1] - r.values[0]);
}

GoldenResult golden_section_minimize(const std::function<double(double)>& f, double a, double b, double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    std::size_t it = 0;
    while (b - a > tol && it < 200) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++it;
    }
    return fc < fd ? GoldenResult{c, fc, it, b - a} : GoldenResult{d, fd, it, b - a};
}

GapSweepResult min_gap_sweep(const SweepContext& ctx, const SweepSettings& sweep, const SolverSettings& solver) {
    if (sweep.grid_points < 3) throw ConfigError("gap sweep needs at least 3 grid points");
    if (!(sweep.refine_tol > 0.0)) throw ConfigError("refinement tolerance must be positive");
    const std::size_t n = sweep.grid_points;
    GapSweepResult out;
    out.samples.resize(n);
    parallel_for(n, sweep.threads, [&](std::size_t i) {
        const double s = i + 1 == n ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out.samples[i] = {s, gap_at(ctx, s, solver, i)};
    });

    std::size_t imin = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (out.samples[i].gap < out.samples[imin].gap) imin = i;
    out.s_star = out.samples[imin].s;
    out.g_min = out.samples[imin].gap;

    const double lo = out.samples[imin == 0 ? 0 : imin - 1].s;
    const double hi = out.samples[std::min(imin + 1, n - 1)].s;
    std::uint64_t stream = n;
    const GoldenResult g = golden_section_minimize(
        [&](double s) { return gap_at(ctx, s, solver, stream++); }, lo, hi, sweep.refine_tol);
    out.refine_iterations = g.iterations;
    out.bracket_width = g.width;
    if (g.fx < out.g_min) {
        out.g_min = g.fx;
        out.s_star = g.x;
    }
    return out;
}

ClassicalGround classical_ground(const IsingProblem& problem) {
    const unsigned n = problem.n();
    if (n > kMaxEnumerationQubits)
        throw ConfigError("classical enumeration limited to " + std::to_string(kMaxEnumerationQubits) +
                          " qubits, got " + std::to_string(n));
    auto to_units = [](double v) {
        const double scaled = 7.0 * v;
        const double r = std::nearbyint(scaled);
        if (std::abs(scaled - r) > 1e-9)
            throw ConfigError("value " + std::to_string(v) + " is not an integer multiple of 1/7");
        return static_cast<std::int64_t>(r);
    };
    std::vector<std::int64_t> h(n);
    for (unsigned i = 0; i < n; ++i) h[i] = to_units(problem.h()[i]);
    std::vector<std::vector<std::pair<unsigned, std::int64_t>>> adj(n);
    for (const auto& c : problem.couplings()) {
        const std::int64_t j = to_units(c.value);
        adj[c.i].emplace_back(c.j, j);
        adj[c.j].emplace_back(c.i, j);
    }

    // Start from all bits 0 (all spins -1) and walk the Gray code.
    std::vector<int> spin(n, -1);
    std::int64_t energy = 0;
    for (unsigned i = 0; i < n; ++i) energy -= h[i];
    for (const auto& c : problem.couplings()) energy += to_units(c.value);

    ClassicalGround g;
    g.energy_units = energy;
    g.minimizers = {0};
    std::int64_t second = std::numeric_limits<std::int64_t>::max();
    std::uint32_t bits = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t step = 1; step < total; ++step) {
        const unsigned q = static_cast<unsigned>(std::countr_zero(step));
        std::int64_t field = h[q];
        for (const auto& [other, j] : adj[q]) field += j * spin[other];
        energy -= 2 * spin[q] * field;
        spin[q] = -spin[q];
        bits ^= std::uint32_t{1} << q;
        if (energy < g.energy_units) {
            second = g.energy_units;
            g.energy_units = energy;
            g.minimizers.assign(1, bits);
        } else if (energy == g.energy_units) {
            g.minimizers.push_back(bits);
        } else if (energy < second) {
            second = energy;
        }
    }
    std::sort(g.minimizers.begin(), g.minimizers.end());
    g.first_gap_units = second == std::numeric_limits<std::int64_t>::max() ? 0 : second - g.energy_units;
    return g;
}

}  // namespace qudit
