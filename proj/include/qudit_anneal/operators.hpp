#pragma once

// Many-qubit operators as weighted X/Z Pauli strings.
//
// Basis convention: bit q of a basis index is the state of qubit q, and
// Z|0> = -|0>, Z|1> = +|1>. X flips the bit. All operators built from X and Z
// with real coefficients are real symmetric in this basis.

#include <Eigen/Dense>

#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

namespace qudit {

using StateVector = std::vector<double>;

enum class Pauli : char { X = 'X', Z = 'Z' };

class PauliTerm {
public:
    PauliTerm() = default;

    // Throws std::invalid_argument on repeated qubit indices or indices >= 64.
    PauliTerm(double coefficient, std::initializer_list<std::pair<unsigned, Pauli>> factors);
    PauliTerm(double coefficient, std::span<const std::pair<unsigned, Pauli>> factors);

    // Character form ('X', 'Z'); anything else, including 'Y', is rejected.
    static PauliTerm from_chars(double coefficient, std::span<const std::pair<unsigned, char>> factors);

    double coefficient() const noexcept { return coefficient_; }
    std::uint64_t x_mask() const noexcept { return x_mask_; }
    std::uint64_t z_mask() const noexcept { return z_mask_; }
    // One past the highest qubit index touched (0 for the identity).
    unsigned span_qubits() const noexcept;

    std::vector<std::pair<unsigned, Pauli>> factors() const;

    bool operator==(const PauliTerm&) const = default;

private:
    PauliTerm(double c, std::uint64_t x, std::uint64_t z) : coefficient_(c), x_mask_(x), z_mask_(z) {}
    friend class HamiltonianOperator;

    double coefficient_ = 0.0;
    std::uint64_t x_mask_ = 0;
    std::uint64_t z_mask_ = 0;
};

// +1 or -1: eigenvalue of the Z-string `z_mask` on basis state `basis`.
inline double z_sign(std::uint64_t z_mask, std::uint64_t basis) noexcept {
    return (std::popcount(z_mask & ~basis) & 1U) ? -1.0 : 1.0;
}

// coefficient * (Pauli string) applied to v. |v| must be a power of two that
// covers every qubit the term touches.
StateVector apply_term(const PauliTerm& term, std::span<const double> v);

class HamiltonianOperator {
public:
    static constexpr std::size_t kDefaultDenseCap = 8192;

    explicit HamiltonianOperator(unsigned n_qubits, std::vector<PauliTerm> terms = {});

    unsigned n_qubits() const noexcept { return n_qubits_; }
    std::size_t dimension() const noexcept { return std::size_t{1} << n_qubits_; }

    // Canonical term list: sorted by (x mask, z mask), duplicates merged,
    // exact zeros dropped.
    const std::vector<PauliTerm>& terms() const noexcept { return terms_; }

    bool is_diagonal() const noexcept;
    // Sum of |coefficients|; an upper bound on the operator norm.
    double spectral_scale() const noexcept;

    StateVector matvec(std::span<const double> v) const;
    // out = H v. `out` must not alias `v`.
    void matvec_into(std::span<const double> v, std::span<double> out) const;

    // Diagonal in the computational basis.
    StateVector diagonal() const;

    Eigen::MatrixXd to_dense(std::size_t cap = kDefaultDenseCap) const;

private:
    struct ZPart {
        std::uint64_t z_mask;
        double coefficient;
    };
    struct Group {
        std::uint64_t x_mask;
        std::vector<ZPart> parts;
    };

    double diagonal_element(std::uint64_t basis) const noexcept;

    unsigned n_qubits_;
    std::vector<PauliTerm> terms_;
    std::vector<Group> groups_;   // off-diagonal groups, ascending x mask
    std::vector<ZPart> diag_parts_;
    std::vector<double> diag_cache_;  // filled for moderate dimensions
};

}  // namespace qudit
