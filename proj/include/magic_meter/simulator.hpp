#pragma once

// Dense statevector simulation and exact Pauli expectation values.
//
// Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of an
// amplitude index: |b_0 b_1 ... b_{n-1}>  <->  index sum_q b_q 2^(n-1-q).

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "magic_meter/circuit.hpp"
#include "magic_meter/core/parallel.hpp"

namespace magic_meter {

using Complex = std::complex<double>;

inline constexpr std::uint32_t kDefaultMaxQubits = 14;
inline constexpr std::uint32_t kDefaultMaxPauliQubits = 10;

struct Statevector {
    std::uint32_t n_qubits = 0;
    std::vector<Complex> amplitudes;

    static Statevector zero(std::uint32_t n) {
        Statevector s;
        s.n_qubits = n;
        s.amplitudes.assign(std::size_t{1} << n, Complex{0.0, 0.0});
        s.amplitudes[0] = 1.0;
        return s;
    }

    std::size_t dim() const noexcept { return amplitudes.size(); }

    double norm_squared() const noexcept {
        double s = 0.0;
        for (const auto& a : amplitudes) s += std::norm(a);
        return s;
    }
};

/// Amplitude-index bit of qubit q.
constexpr std::uint64_t qubit_bit(std::uint32_t n, std::uint32_t q) noexcept {
    return std::uint64_t{1} << (n - 1 - q);
}

/// Reverses the low n bits; maps qubit-indexed masks to amplitude-index masks
/// and back.
constexpr std::uint64_t reverse_bits(std::uint64_t mask, std::uint32_t n) noexcept {
    std::uint64_t out = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (mask >> i & 1) out |= std::uint64_t{1} << (n - 1 - i);
    }
    return out;
}

/// n-qubit Pauli string; bit q of x_mask / z_mask puts an X / Z factor on
/// qubit q (both set: Y).
struct PauliString {
    std::uint32_t n_qubits = 0;
    std::uint64_t x_mask = 0;
    std::uint64_t z_mask = 0;

    std::uint32_t weight() const noexcept {
        return static_cast<std::uint32_t>(std::popcount(x_mask | z_mask));
    }

    /// 0=I, 1=X, 2=Y, 3=Z on qubit q.
    int factor(std::uint32_t q) const noexcept {
        const bool x = x_mask >> q & 1;
        const bool z = z_mask >> q & 1;
        return x ? (z ? 2 : 1) : (z ? 3 : 0);
    }

    void set_factor(std::uint32_t q, int p) {
        const std::uint64_t bit = std::uint64_t{1} << q;
        x_mask &= ~bit;
        z_mask &= ~bit;
        if (p == 1 || p == 2) x_mask |= bit;
        if (p == 2 || p == 3) z_mask |= bit;
    }

    /// Parses strings such as "XIZ" (qubit 0 first). '_' is accepted for I.
    static PauliString parse(std::string_view text) {
        PauliString p;
        p.n_qubits = static_cast<std::uint32_t>(text.size());
        for (std::uint32_t q = 0; q < p.n_qubits; ++q) {
            switch (text[q]) {
                case 'I': case '_': break;
                case 'X': p.set_factor(q, 1); break;
                case 'Y': p.set_factor(q, 2); break;
                case 'Z': p.set_factor(q, 3); break;
                default: throw std::invalid_argument("bad Pauli character in '" + std::string(text) + "'");
            }
        }
        return p;
    }

    std::string str() const {
        std::string s;
        for (std::uint32_t q = 0; q < n_qubits; ++q) s += "IXYZ"[factor(q)];
        return s;
    }

    /// Canonical index: base-4 digits (I=0, X=1, Y=2, Z=3), qubit 0 most
    /// significant.
    std::uint64_t canonical_index() const noexcept {
        std::uint64_t k = 0;
        for (std::uint32_t q = 0; q < n_qubits; ++q) k = k * 4 + static_cast<std::uint64_t>(factor(q));
        return k;
    }

    static PauliString from_canonical_index(std::uint32_t n, std::uint64_t k) {
        PauliString p;
        p.n_qubits = n;
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint32_t q = n - 1 - i;
            p.set_factor(q, static_cast<int>(k & 3));
            k >>= 2;
        }
        return p;
    }

    bool operator==(const PauliString&) const = default;
};

// Gate kernels. Each touches every amplitude once.

inline void apply_rotation(Statevector& s, GateKind kind, std::uint32_t q, double angle) {
    const std::uint64_t bit = qubit_bit(s.n_qubits, q);
    const double c = std::cos(angle / 2);
    const double sn = std::sin(angle / 2);
    Complex m00, m01, m10, m11;
    switch (kind) {
        case GateKind::RX:
            m00 = c; m01 = Complex(0, -sn); m10 = Complex(0, -sn); m11 = c;
            break;
        case GateKind::RY:
            m00 = c; m01 = -sn; m10 = sn; m11 = c;
            break;
        case GateKind::RZ:
            m00 = Complex(c, -sn); m01 = 0; m10 = 0; m11 = Complex(c, sn);
            break;
        default:
            throw std::invalid_argument("not a rotation gate");
    }
    auto* a = s.amplitudes.data();
    const std::size_t dim = s.dim();
    for (std::size_t i = 0; i < dim; ++i) {
        if (i & bit) continue;
        const Complex a0 = a[i];
        const Complex a1 = a[i | bit];
        a[i] = m00 * a0 + m01 * a1;
        a[i | bit] = m10 * a0 + m11 * a1;
    }
}

/// Applies a single-qubit unitary given as a row-major 2x2 matrix.
inline void apply_matrix(Statevector& s, std::uint32_t q, const std::array<Complex, 4>& m) {
    const std::uint64_t bit = qubit_bit(s.n_qubits, q);
    auto* a = s.amplitudes.data();
    for (std::size_t i = 0; i < s.dim(); ++i) {
        if (i & bit) continue;
        const Complex a0 = a[i];
        const Complex a1 = a[i | bit];
        a[i] = m[0] * a0 + m[1] * a1;
        a[i | bit] = m[2] * a0 + m[3] * a1;
    }
}

inline void apply_cnot(Statevector& s, std::uint32_t control, std::uint32_t target) {
    const std::uint64_t cb = qubit_bit(s.n_qubits, control);
    const std::uint64_t tb = qubit_bit(s.n_qubits, target);
    auto* a = s.amplitudes.data();
    for (std::size_t i = 0; i < s.dim(); ++i) {
        if ((i & cb) && !(i & tb)) std::swap(a[i], a[i | tb]);
    }
}

inline void apply_gate(Statevector& s, const Gate& g) {
    if (g.kind == GateKind::CNOT) {
        apply_cnot(s, g.qubits[0], g.qubits[1]);
    } else {
        apply_rotation(s, g.kind, g.qubits[0], *g.angle);
    }
}

/// Final state of the circuit applied to |0...0>. No renormalization.
inline Statevector simulate(const Circuit& c, std::uint32_t max_qubits = kDefaultMaxQubits) {
    if (c.n_qubits > max_qubits) {
        throw std::invalid_argument("circuit has " + std::to_string(c.n_qubits) +
                                    " qubits; simulator cap is " + std::to_string(max_qubits));
    }
    validate(c, {1, max_qubits});
    Statevector s = Statevector::zero(c.n_qubits);
    for (const auto& g : c.gates) apply_gate(s, g);
    return s;
}

namespace detail {

/// <psi| X^x Z^z |psi> with amplitude-index masks, before the i^{|x&z|} phase:
/// sum_b conj(psi[b^x]) psi[b] (-1)^{|z&b|}.
inline Complex masked_overlap(const Statevector& s, std::uint64_t x, std::uint64_t z) {
    Complex acc = 0.0;
    const auto* a = s.amplitudes.data();
    for (std::size_t b = 0; b < s.dim(); ++b) {
        const Complex t = std::conj(a[b ^ x]) * a[b];
        acc += (std::popcount(z & b) & 1) ? -t : t;
    }
    return acc;
}

/// Applies the i^{|x&z|} factor from Y = iXZ and keeps the (real) result.
inline double apply_y_phase(Complex overlap, std::uint64_t x, std::uint64_t z) {
    switch (std::popcount(x & z) & 3) {
        case 0: return overlap.real();
        case 1: return -overlap.imag();
        case 2: return -overlap.real();
        default: return overlap.imag();
    }
}

}  // namespace detail

/// <psi|P|psi>, O(2^n). The identity string gives exactly 1 (the state is
/// taken to be normalized; norm drift is checked separately).
inline double pauli_expectation(const Statevector& s, const PauliString& p) {
    if (p.n_qubits != s.n_qubits) {
        throw std::invalid_argument("Pauli string and state have different qubit counts");
    }
    if (p.weight() == 0) return 1.0;
    const auto x = reverse_bits(p.x_mask, s.n_qubits);
    const auto z = reverse_bits(p.z_mask, s.n_qubits);
    return detail::apply_y_phase(detail::masked_overlap(s, x, z), x, z);
}

/// All 4^n expectations in canonical order. O(8^n); rows of fixed X part are
/// independent and may run in parallel without changing the output.
inline std::vector<double> all_pauli_expectations(const Statevector& s, unsigned threads = 1,
                                                  std::uint32_t max_qubits = kDefaultMaxPauliQubits) {
    const std::uint32_t n = s.n_qubits;
    if (n > max_qubits) {
        throw std::invalid_argument("all-Pauli expansion of " + std::to_string(n) +
                                    " qubits exceeds cap of " + std::to_string(max_qubits));
    }
    const std::size_t dim = s.dim();
    std::vector<double> out(dim * dim);

    // Canonical digit of each qubit's (x, z) pair, accumulated per mask.
    std::vector<std::uint64_t> x_index(dim), z_index(dim), y_index(dim);
    for (std::uint64_t m = 0; m < dim; ++m) {
        std::uint64_t xi = 0, zi = 0;
        for (std::uint32_t q = 0; q < n; ++q) {
            const bool bit = m & qubit_bit(n, q);
            const std::uint64_t place = std::uint64_t{1} << (2 * (n - 1 - q));
            if (bit) {
                xi += 1 * place;
                zi += 3 * place;
            }
        }
        x_index[m] = xi;
        z_index[m] = zi;
    }
    // Digit for (x=1, z=1) is Y=2, not X+Z=4; correct with 2 per shared bit.
    for (std::uint64_t m = 0; m < dim; ++m) {
        std::uint64_t yi = 0;
        for (std::uint32_t q = 0; q < n; ++q) {
            if (m & qubit_bit(n, q)) yi += std::uint64_t{2} << (2 * (n - 1 - q));
        }
        y_index[m] = yi;
    }

    parallel_for(dim, threads, [&](std::size_t x) {
        thread_local std::vector<double> re, im;  // per-worker scratch, reused across calls
        re.resize(dim);
        im.resize(dim);
        const auto* a = s.amplitudes.data();
        for (std::size_t b = 0; b < dim; ++b) {
            const Complex t = std::conj(a[b ^ x]) * a[b];
            re[b] = t.real();
            im[b] = t.imag();
        }
        for (std::size_t z = 0; z < dim; ++z) {
            const int phase = std::popcount(x & z) & 3;
            const auto& part = (phase & 1) ? im : re;
            double acc = 0.0;
            for (std::size_t b = 0; b < dim; ++b) {
                acc += (std::popcount(z & b) & 1) ? -part[b] : part[b];
            }
            double v;
            switch (phase) {
                case 0: v = acc; break;
                case 1: v = -acc; break;
                case 2: v = -acc; break;
                default: v = acc; break;
            }
            out[x_index[x] + z_index[z] - y_index[x & z]] = v;
        }
    });
    out[0] = 1.0;  // identity string, for a normalized state
    return out;
}

}  // namespace magic_meter
