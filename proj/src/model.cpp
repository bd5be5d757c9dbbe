#include "qudit_anneal/model.hpp"

#include "qudit_anneal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace qudit {

IsingProblem::IsingProblem(unsigned n, std::vector<double> h, std::vector<Coupling> couplings,
                           std::optional<std::uint64_t> seed)
    : n_(n), h_(std::move(h)), couplings_(std::move(couplings)), seed_(seed) {
    if (h_.size() != n_)
        throw ConfigError("problem has n = " + std::to_string(n_) + " but " + std::to_string(h_.size()) +
                          " biases");
    std::set<std::pair<unsigned, unsigned>> seen;
    for (const auto& c : couplings_) {
        if (c.i >= c.j)
            throw ConfigError("coupling (" + std::to_string(c.i) + ", " + std::to_string(c.j) +
                              ") must have i < j");
        if (c.j >= n_)
            throw ConfigError("coupling index " + std::to_string(c.j) + " out of range for n = " +
                              std::to_string(n_));
        if (!seen.emplace(c.i, c.j).second)
            throw ConfigError("duplicate coupling (" + std::to_string(c.i) + ", " + std::to_string(c.j) + ")");
    }
    for (double v : h_)
        if (!std::isfinite(v)) throw ConfigError("non-finite bias");
    for (const auto& c : couplings_)
        if (!std::isfinite(c.value)) throw ConfigError("non-finite coupling");
}

IsingProblem IsingProblem::negated_biases() const {
    std::vector<double> h = h_;
    for (auto& v : h) v = -v;
    return IsingProblem(n_, std::move(h), couplings_, seed_);
}

std::optional<std::string> schedule_violation(const std::vector<SchedulePoint>& knots) {
    if (knots.size() < 2) return "schedule needs at least two knots";
    if (knots.front().s != 0.0) return "schedule must start at s = 0";
    if (knots.back().s != 1.0) return "schedule must end at s = 1";
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const auto& p = knots[k];
        for (double v : {p.s, p.delta, p.e, p.omega_p, p.kappa_xz, p.kappa_xx})
            if (!std::isfinite(v)) return "non-finite value in knot " + std::to_string(k);
        if (k == 0) continue;
        const auto& q = knots[k - 1];
        std::ostringstream where;
        where << " between s = " << q.s << " and s = " << p.s;
        if (!(p.s > q.s)) return "s not strictly increasing" + where.str();
        if (p.delta > q.delta) return "delta increases" + where.str();
        if (p.e < q.e) return "e decreases" + where.str();
    }
    const auto& last = knots.back();
    if (last.delta != 0.0 || last.kappa_xz != 0.0 || last.kappa_xx != 0.0)
        return "delta, kappa_xz and kappa_xx must vanish at s = 1";
    return std::nullopt;
}

AnnealSchedule::AnnealSchedule(std::vector<SchedulePoint> knots) : knots_(std::move(knots)) {
    if (auto why = schedule_violation(knots_)) throw ConfigError("invalid schedule: " + *why);
}

AnnealSchedule AnnealSchedule::synthetic(std::size_t knots) {
    if (knots < 2) throw ConfigError("synthetic schedule needs at least two knots");
    std::vector<SchedulePoint> pts;
    pts.reserve(knots);
    for (std::size_t k = 0; k < knots; ++k) {
        const double s = k + 1 == knots ? 1.0 : static_cast<double>(k) / static_cast<double>(knots - 1);
        const double r = 1.0 - s;
        pts.push_back({s, 10.0 * r * r, 10.0 * s, 30.0 * s + 6.0 * r, 0.5 * r, 1.0 * r});
    }
    return AnnealSchedule(std::move(pts));
}

AnnealSchedule AnnealSchedule::linear(double omega_p) {
    return AnnealSchedule({{0.0, 1.0, 0.0, omega_p, 0.0, 0.0}, {1.0, 0.0, 1.0, omega_p, 0.0, 0.0}});
}

SchedulePoint AnnealSchedule::evaluate(double s) const {
    if (!(s >= 0.0 && s <= 1.0)) throw ConfigError("schedule parameter s = " + std::to_string(s) + " outside [0, 1]");
    auto hi = std::lower_bound(knots_.begin(), knots_.end(), s,
                               [](const SchedulePoint& p, double v) { return p.s < v; });
    if (hi->s == s) return *hi;
    auto lo = hi - 1;
    const double t = (s - lo->s) / (hi->s - lo->s);
    auto lerp = [t](double a, double b) { return a + t * (b - a); };
    return {s,
            lerp(lo->delta, hi->delta),
            lerp(lo->e, hi->e),
            lerp(lo->omega_p, hi->omega_p),
            lerp(lo->kappa_xz, hi->kappa_xz),
            lerp(lo->kappa_xx, hi->kappa_xx)};
}

AnnealSchedule AnnealSchedule::with_omega_scale(double factor) const {
    auto pts = knots_;
    for (auto& p : pts) p.omega_p *= factor;
    return AnnealSchedule(std::move(pts));
}

QuditParams qudit_params_at(const SchedulePoint& point, unsigned n, const std::vector<QuditOverride>& overrides) {
    if (!overrides.empty() && overrides.size() != n)
        throw ConfigError("qudit override table has " + std::to_string(overrides.size()) + " rows for " +
                          std::to_string(n) + " qubits");
    QuditParams q(n, QuditRecord{point.omega_p, point.kappa_xz, point.kappa_xx});
    for (std::size_t i = 0; i < overrides.size(); ++i) {
        q[i].omega_p *= overrides[i].omega_p_scale;
        q[i].kappa_xz *= overrides[i].kappa_xz_scale;
        q[i].kappa_xx *= overrides[i].kappa_xx_scale;
    }
    return q;
}

std::string_view to_string(ModelKind kind) noexcept {
    return kind == ModelKind::TwoState ? "two_state" : "four_state";
}

ModelKind parse_model_kind(std::string_view text) {
    if (text == "two" || text == "two_state") return ModelKind::TwoState;
    if (text == "four" || text == "four_state") return ModelKind::FourState;
    throw ConfigError("unknown model '" + std::string(text) + "' (expected two or four)");
}

namespace {

void append_ising_terms(const IsingProblem& problem, double delta, double e, std::vector<PauliTerm>& terms) {
    for (unsigned i = 0; i < problem.n(); ++i) {
        terms.emplace_back(-0.5 * delta, std::initializer_list<std::pair<unsigned, Pauli>>{{i, Pauli::X}});
        terms.emplace_back(e * problem.h()[i], std::initializer_list<std::pair<unsigned, Pauli>>{{i, Pauli::Z}});
    }
    for (const auto& c : problem.couplings())
        terms.emplace_back(e * c.value,
                           std::initializer_list<std::pair<unsigned, Pauli>>{{c.i, Pauli::Z}, {c.j, Pauli::Z}});
}

}  // namespace

HamiltonianOperator build_two_state(const IsingProblem& problem, double delta, double e) {
    std::vector<PauliTerm> terms;
    append_ising_terms(problem, delta, e, terms);
    return HamiltonianOperator(problem.n(), std::move(terms));
}

HamiltonianOperator build_four_state(const IsingProblem& problem, const SchedulePoint& point,
                                     const QuditParams& qudits) {
    const unsigned n = problem.n();
    if (qudits.size() != n)
        throw ConfigError("four-state model needs " + std::to_string(n) + " qudit records, got " +
                          std::to_string(qudits.size()));
    std::vector<PauliTerm> terms;
    append_ising_terms(problem, point.delta, point.e, terms);
    for (unsigned i = 0; i < n; ++i) {
        const unsigned a = n + i;
        const auto& q = qudits[i];
        using F = std::initializer_list<std::pair<unsigned, Pauli>>;
        terms.emplace_back(0.5 * q.omega_p, F{{a, Pauli::Z}});
        terms.emplace_back(0.5 * q.kappa_xz, F{{i, Pauli::X}});
        terms.emplace_back(0.5 * q.kappa_xz, F{{i, Pauli::X}, {a, Pauli::Z}});
        terms.emplace_back(0.5 * q.kappa_xx, F{{i, Pauli::X}, {a, Pauli::X}});
    }
    return HamiltonianOperator(2 * n, std::move(terms));
}

HamiltonianOperator build_four_state(const IsingProblem& problem, const SchedulePoint& point) {
    return build_four_state(problem, point, qudit_params_at(point, problem.n()));
}

Eigen::MatrixXd TunnelingHamiltonian::to_matrix() const {
    const auto m = static_cast<Eigen::Index>(energies.size());
    if (m < 2 || m % 2 != 0) throw ConfigError("tunneling Hamiltonian needs an even level count >= 2");
    if (tunneling.rows() != m / 2 || tunneling.cols() != m / 2)
        throw ConfigError("tunneling matrix must be (M/2) x (M/2)");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index l = 0; l < m; ++l) h(l, l) = energies[static_cast<std::size_t>(l)];
    for (Eigen::Index a = 0; a < m / 2; ++a)
        for (Eigen::Index b = 0; b < m / 2; ++b) {
            h(2 * a, 2 * b + 1) = tunneling(a, b);
            h(2 * b + 1, 2 * a) = tunneling(a, b);
        }
    return h;
}

SingleQuditParams tunneling_to_qudit(const TunnelingHamiltonian& t, double tolerance) {
    if (t.levels() != 4) throw ConfigError("qudit mapping needs M = 4 levels, got " + std::to_string(t.levels()));
    if (t.tunneling.rows() != 2 || t.tunneling.cols() != 2) throw ConfigError("tunneling matrix must be 2 x 2");
    const auto& e = t.energies;
    auto check = [tolerance](double lhs, double rhs, const char* identity) {
        if (std::abs(lhs - rhs) > tolerance) {
            std::ostringstream msg;
            msg << "identity " << identity << " violated: " << lhs << " != " << rhs << " (tolerance " << tolerance
                << " GHz)";
            throw ConsistencyError(identity, msg.str());
        }
    };
    check(e[0] - e[1], e[2] - e[3], "E0-E1=E2-E3");
    check(e[2] - e[0], e[3] - e[1], "E2-E0=E3-E1");
    const double k01 = t.tunneling(0, 0);
    const double k03 = t.tunneling(0, 1);
    const double k21 = t.tunneling(1, 0);
    const double k23 = t.tunneling(1, 1);
    check(k03, k21, "K03=K12");
    SingleQuditParams p;
    p.epsilon = e[0] - e[1];
    p.omega_p = e[2] - e[0];
    p.delta = -2.0 * k01;
    p.kappa_xz = k23 - k01;
    p.kappa_xx = 2.0 * k03;
    return p;
}

Eigen::Matrix4d qudit_to_effective_matrix(const SingleQuditParams& p) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    for (int l = 0; l < 4; ++l) {
        const double sz = (l & 1) ? 1.0 : -1.0;
        const double tz = (l & 2) ? 1.0 : -1.0;
        h(l, l) = -0.5 * p.epsilon * sz + 0.5 * p.omega_p * tz;
        // sigma_x (flip x0) with weight -Delta/2 + kxz/2 (1 + tz)
        h(l ^ 1, l) += -0.5 * p.delta + 0.5 * p.kappa_xz * (1.0 + tz);
        // sigma_x tau_x
        h(l ^ 3, l) += 0.5 * p.kappa_xx;
    }
    return h;
}

}  // namespace qudit
