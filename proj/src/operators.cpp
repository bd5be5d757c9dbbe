#include "qudit_anneal/operators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

namespace qudit {

namespace {

unsigned log2_exact(std::size_t n) {
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("state vector length " + std::to_string(n) + " is not a power of two");
    return static_cast<unsigned>(std::countr_zero(n));
}

}  // namespace

PauliTerm::PauliTerm(double coefficient, std::initializer_list<std::pair<unsigned, Pauli>> factors)
    : PauliTerm(coefficient, std::span<const std::pair<unsigned, Pauli>>(factors.begin(), factors.size())) {}

PauliTerm::PauliTerm(double coefficient, std::span<const std::pair<unsigned, Pauli>> factors)
    : coefficient_(coefficient) {
    for (const auto& [qubit, op] : factors) {
        if (qubit >= 64) throw std::invalid_argument("qubit index " + std::to_string(qubit) + " exceeds 63");
        const std::uint64_t bit = std::uint64_t{1} << qubit;
        if ((x_mask_ | z_mask_) & bit)
            throw std::invalid_argument("qubit index " + std::to_string(qubit) + " repeated in Pauli term");
        (op == Pauli::X ? x_mask_ : z_mask_) |= bit;
    }
}

PauliTerm PauliTerm::from_chars(double coefficient, std::span<const std::pair<unsigned, char>> factors) {
    std::vector<std::pair<unsigned, Pauli>> typed;
    typed.reserve(factors.size());
    for (const auto& [qubit, c] : factors) {
        if (c == 'X' || c == 'x')
            typed.emplace_back(qubit, Pauli::X);
        else if (c == 'Z' || c == 'z')
            typed.emplace_back(qubit, Pauli::Z);
        else
            throw std::invalid_argument(std::string("unsupported Pauli factor '") + c + "' (only X and Z)");
    }
    return PauliTerm(coefficient, typed);
}

unsigned PauliTerm::span_qubits() const noexcept {
    const std::uint64_t all = x_mask_ | z_mask_;
    return all == 0 ? 0U : 64U - static_cast<unsigned>(std::countl_zero(all));
}

std::vector<std::pair<unsigned, Pauli>> PauliTerm::factors() const {
    std::vector<std::pair<unsigned, Pauli>> out;
    for (unsigned q = 0; q < span_qubits(); ++q) {
        const std::uint64_t bit = std::uint64_t{1} << q;
        if (x_mask_ & bit) out.emplace_back(q, Pauli::X);
        if (z_mask_ & bit) out.emplace_back(q, Pauli::Z);
    }
    return out;
}

StateVector apply_term(const PauliTerm& term, std::span<const double> v) {
    const unsigned n = log2_exact(v.size());
    if (term.span_qubits() > n)
        throw std::invalid_argument("Pauli term touches qubit " + std::to_string(term.span_qubits() - 1) +
                                    " but the state has " + std::to_string(n) + " qubits");
    StateVector out(v.size(), 0.0);
    const std::uint64_t x = term.x_mask();
    const std::uint64_t z = term.z_mask();
    const double c = term.coefficient();
    for (std::uint64_t b = 0; b < v.size(); ++b) out[b ^ x] = c * z_sign(z, b) * v[b];
    return out;
}

HamiltonianOperator::HamiltonianOperator(unsigned n_qubits, std::vector<PauliTerm> terms) : n_qubits_(n_qubits) {
    if (n_qubits > 40) throw std::invalid_argument("operators on more than 40 qubits are not supported");
    for (const auto& t : terms) {
        if (t.span_qubits() > n_qubits)
            throw std::invalid_argument("Pauli term touches qubit " + std::to_string(t.span_qubits() - 1) +
                                        " of a " + std::to_string(n_qubits) + "-qubit operator");
    }
    std::stable_sort(terms.begin(), terms.end(), [](const PauliTerm& a, const PauliTerm& b) {
        return std::tie(a.x_mask_, a.z_mask_) < std::tie(b.x_mask_, b.z_mask_);
    });
    for (const auto& t : terms) {
        if (!terms_.empty() && terms_.back().x_mask_ == t.x_mask_ && terms_.back().z_mask_ == t.z_mask_)
            terms_.back().coefficient_ += t.coefficient_;
        else
            terms_.push_back(t);
    }
    std::erase_if(terms_, [](const PauliTerm& t) { return t.coefficient_ == 0.0; });

    for (const auto& t : terms_) {
        if (t.x_mask_ == 0) {
            diag_parts_.push_back({t.z_mask_, t.coefficient_});
            continue;
        }
        if (groups_.empty() || groups_.back().x_mask != t.x_mask_) groups_.push_back({t.x_mask_, {}});
        groups_.back().parts.push_back({t.z_mask_, t.coefficient_});
    }
    if (n_qubits_ <= 24 && !diag_parts_.empty()) {
        diag_cache_.resize(dimension());
        for (std::uint64_t b = 0; b < dimension(); ++b) diag_cache_[b] = diagonal_element(b);
    }
}

bool HamiltonianOperator::is_diagonal() const noexcept { return groups_.empty(); }

double HamiltonianOperator::spectral_scale() const noexcept {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.coefficient_);
    return s;
}

double HamiltonianOperator::diagonal_element(std::uint64_t basis) const noexcept {
    double d = 0.0;
    for (const auto& p : diag_parts_) d += p.coefficient * z_sign(p.z_mask, basis);
    return d;
}

StateVector HamiltonianOperator::diagonal() const {
    if (!diag_cache_.empty()) return diag_cache_;
    StateVector d(dimension(), 0.0);
    if (!diag_parts_.empty())
        for (std::uint64_t b = 0; b < dimension(); ++b) d[b] = diagonal_element(b);
    return d;
}

StateVector HamiltonianOperator::matvec(std::span<const double> v) const {
    StateVector out(v.size());
    matvec_into(v, out);
    return out;
}

void HamiltonianOperator::matvec_into(std::span<const double> v, std::span<double> out) const {
    const std::size_t dim = dimension();
    if (v.size() != dim || out.size() != dim)
        throw std::invalid_argument("matvec dimension mismatch: operator " + std::to_string(dim) + ", vectors " +
                                    std::to_string(v.size()) + "/" + std::to_string(out.size()));
    if (!diag_cache_.empty()) {
        for (std::size_t b = 0; b < dim; ++b) out[b] = diag_cache_[b] * v[b];
    } else if (!diag_parts_.empty()) {
        for (std::size_t b = 0; b < dim; ++b) out[b] = diagonal_element(b) * v[b];
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
    // (P v)[b] = c * zsign(b ^ x) * v[b ^ x]. With L the lowest set bit of x,
    // aligned blocks of length L map to contiguous source blocks, and the Z
    // sign is constant over a block when no Z factor sits below L.
    for (const auto& g : groups_) {
        const std::uint64_t x = g.x_mask;
        const std::size_t len = std::size_t{1} << std::countr_zero(x);
        std::uint64_t z_all = 0;
        for (const auto& p : g.parts) z_all |= p.z_mask;
        if ((z_all & (len - 1)) == 0) {
            for (std::size_t b0 = 0; b0 < dim; b0 += len) {
                const std::uint64_t src0 = b0 ^ x;
                double c = 0.0;
                for (const auto& p : g.parts) c += p.coefficient * z_sign(p.z_mask, src0);
                const double* in = v.data() + src0;
                double* o = out.data() + b0;
                for (std::size_t t = 0; t < len; ++t) o[t] += c * in[t];
            }
            continue;
        }
        for (std::size_t b = 0; b < dim; ++b) {
            const std::uint64_t src = b ^ x;
            double c = 0.0;
            for (const auto& p : g.parts) c += p.coefficient * z_sign(p.z_mask, src);
            out[b] += c * v[src];
        }
    }
}

Eigen::MatrixXd HamiltonianOperator::to_dense(std::size_t cap) const {
    const std::size_t dim = dimension();
    if (dim > cap)
        throw std::invalid_argument("dense materialization of dimension " + std::to_string(dim) +
                                    " exceeds cap " + std::to_string(cap));
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (const auto& t : terms_) {
        for (std::uint64_t b = 0; b < dim; ++b)
            m(static_cast<Eigen::Index>(b ^ t.x_mask_), static_cast<Eigen::Index>(b)) +=
                t.coefficient_ * z_sign(t.z_mask_, b);
    }
    return m;
}

}  // namespace qudit
