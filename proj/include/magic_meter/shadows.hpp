#pragma once

// Classical shadows under the local Clifford ensemble.
//
// Each snapshot draws an independent single-qubit Clifford U_q per qubit,
// applies U = (x)_q U_q to the state and measures every qubit in the
// computational basis. Inverting the measurement channel qubit by qubit,
// M^-1(A) = 3A - Tr(A) I, gives the single-snapshot estimator of a Pauli
// string P with support S:
//
//     prod_{q in S} 3 <b_q| U_q sigma_q U_q^dag |b_q>   in {-3^|S|, 0, +3^|S|}
//
// which is unbiased for <psi|P|psi>.
//
// Clifford enumeration (24 elements, modulo global phase):
//     index k = 4*b + a,  U_k = P_a * B_b
//     P_a in (I, X, Y, Z),  B_b in (I, H, S, H*S, S*H, H*S*H)
// The B_b cover the six permutations of the Pauli axes and P_a the signs.
// Only the induced measurement basis matters for the channel, so the full
// group gives the same estimator statistics as the six-element basis subset.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "magic_meter/core/parallel.hpp"
#include "magic_meter/core/random.hpp"
#include "magic_meter/simulator.hpp"

namespace magic_meter {

inline constexpr std::size_t kNumCliffords = 24;
inline constexpr std::uint32_t kMaxShadowQubits = 16;
inline constexpr std::uint32_t kPaddedQubits = 6;

using Matrix2 = std::array<Complex, 4>;

namespace detail {

inline Matrix2 mul(const Matrix2& a, const Matrix2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

inline Matrix2 adjoint(const Matrix2& a) {
    return {std::conj(a[0]), std::conj(a[2]), std::conj(a[1]), std::conj(a[3])};
}

inline const std::array<Matrix2, 4>& paulis() {
    static const std::array<Matrix2, 4> p = {
        Matrix2{1, 0, 0, 1},
        Matrix2{0, 1, 1, 0},
        Matrix2{0, Complex(0, -1), Complex(0, 1), 0},
        Matrix2{1, 0, 0, -1},
    };
    return p;
}

}  // namespace detail

/// The 24 single-qubit Cliffords in canonical order.
inline const std::array<Matrix2, kNumCliffords>& clifford_table() {
    static const auto table = [] {
        const double r = 1.0 / std::sqrt(2.0);
        const Matrix2 id{1, 0, 0, 1};
        const Matrix2 h{r, r, r, -r};
        const Matrix2 s{1, 0, 0, Complex(0, 1)};
        using detail::mul;
        const std::array<Matrix2, 6> cosets = {id, h, s, mul(h, s), mul(s, h), mul(h, mul(s, h))};
        std::array<Matrix2, kNumCliffords> out{};
        for (std::size_t b = 0; b < 6; ++b) {
            for (std::size_t a = 0; a < 4; ++a) {
                out[4 * b + a] = mul(detail::paulis()[a], cosets[b]);
            }
        }
        return out;
    }();
    return table;
}

/// z_weight()[k][p] = Tr(Z U_k sigma_p U_k^dag) / 2 in {-1, 0, +1}, for
/// p = 1, 2, 3 (X, Y, Z); entry 0 is unused. The measured outcome b then
/// contributes 3 * z_weight * (-1)^b.
inline const std::array<std::array<int, 4>, kNumCliffords>& z_weight() {
    static const auto table = [] {
        std::array<std::array<int, 4>, kNumCliffords> out{};
        for (std::size_t k = 0; k < kNumCliffords; ++k) {
            const auto& u = clifford_table()[k];
            for (int p = 1; p < 4; ++p) {
                const auto conj = detail::mul(u, detail::mul(detail::paulis()[p], detail::adjoint(u)));
                const double tr = (conj[0] - conj[3]).real() / 2.0;
                out[k][p] = static_cast<int>(std::lround(tr));
            }
        }
        return out;
    }();
    return table;
}

struct Snapshot {
    std::array<std::uint8_t, kMaxShadowQubits> clifford{};  // per-qubit Clifford index
    std::uint64_t outcome = 0;                               // bit q = measured bit of qubit q

    bool operator==(const Snapshot&) const = default;
};

struct Shadow {
    std::uint32_t n_qubits = 0;
    std::uint64_t seed = 0;
    std::vector<Snapshot> snapshots;

    std::size_t size() const noexcept { return snapshots.size(); }
};

/// Snapshot i uses its own stream derive_seed(seed, i), so the result does
/// not depend on `threads`.
inline Shadow collect_shadow(const Statevector& state, std::size_t shots, std::uint64_t seed,
                             unsigned threads = 1) {
    if (shots < 1) throw std::invalid_argument("shadow size must be at least 1");
    const std::uint32_t n = state.n_qubits;
    if (n < 1 || n > kMaxShadowQubits) {
        throw std::invalid_argument("shadow collection supports 1.." +
                                    std::to_string(kMaxShadowQubits) + " qubits");
    }
    Shadow shadow;
    shadow.n_qubits = n;
    shadow.seed = seed;
    shadow.snapshots.resize(shots);
    const auto& table = clifford_table();
    parallel_for(shots, threads, [&](std::size_t i) {
        Rng rng(derive_seed(seed, i));
        Snapshot& snap = shadow.snapshots[i];
        Statevector rotated = state;
        for (std::uint32_t q = 0; q < n; ++q) {
            snap.clifford[q] = static_cast<std::uint8_t>(uniform_index(rng, kNumCliffords));
            apply_matrix(rotated, q, table[snap.clifford[q]]);
        }
        const double u = uniform01(rng) * rotated.norm_squared();
        double cumulative = 0.0;
        std::size_t index = rotated.dim() - 1;
        for (std::size_t b = 0; b < rotated.dim(); ++b) {
            cumulative += std::norm(rotated.amplitudes[b]);
            if (u < cumulative) {
                index = b;
                break;
            }
        }
        snap.outcome = reverse_bits(index, n);
    });
    return shadow;
}

/// Single-snapshot estimate of <P>.
inline double snapshot_estimate(const Snapshot& snap, const PauliString& p) {
    double value = 1.0;
    const auto& w = z_weight();
    for (std::uint32_t q = 0; q < p.n_qubits; ++q) {
        const int f = p.factor(q);
        if (f == 0) continue;
        const int z = w[snap.clifford[q]][f];
        if (z == 0) return 0.0;
        value *= (snap.outcome >> q & 1) ? -3.0 * z : 3.0 * z;
    }
    return value;
}

struct EstimatorOptions {
    /// 0 or 1: plain mean. K > 1: median of K batch means.
    std::size_t median_of_means_batches = 0;
};

inline double estimate_pauli(const Shadow& shadow, const PauliString& p,
                             const EstimatorOptions& opts = {}) {
    if (p.n_qubits != shadow.n_qubits) {
        throw std::invalid_argument("Pauli string and shadow have different qubit counts");
    }
    if (p.weight() == 0) {
        throw std::invalid_argument("identity string has no shadow estimate");
    }
    const std::size_t n = shadow.size();
    const std::size_t k = std::min(std::max<std::size_t>(opts.median_of_means_batches, 1), n);
    std::vector<double> means;
    means.reserve(k);
    for (std::size_t b = 0; b < k; ++b) {
        const std::size_t begin = n * b / k;
        const std::size_t end = n * (b + 1) / k;
        double sum = 0.0;
        for (std::size_t i = begin; i < end; ++i) sum += snapshot_estimate(shadow.snapshots[i], p);
        means.push_back(sum / static_cast<double>(end - begin));
    }
    if (k == 1) return means.front();
    std::sort(means.begin(), means.end());
    return k % 2 ? means[k / 2] : 0.5 * (means[k / 2 - 1] + means[k / 2]);
}

/// Number of Pauli strings of weight 1 or 2 on n qubits: 3n + 9 C(n, 2).
constexpr std::size_t local_feature_count(std::uint32_t n) noexcept {
    return 3 * std::size_t{n} + 9 * (std::size_t{n} * (n - 1) / 2);
}

/// Weight-1 strings (qubit ascending, X<Y<Z), then weight-2 strings (pairs
/// i<j lexicographic, then XX, XY, XZ, YX, ..., ZZ).
inline std::vector<PauliString> local_observables(std::uint32_t n) {
    std::vector<PauliString> out;
    out.reserve(local_feature_count(n));
    for (std::uint32_t q = 0; q < n; ++q) {
        for (int a = 1; a < 4; ++a) {
            PauliString p{n, 0, 0};
            p.set_factor(q, a);
            out.push_back(p);
        }
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = i + 1; j < n; ++j) {
            for (int a = 1; a < 4; ++a) {
                for (int b = 1; b < 4; ++b) {
                    PauliString p{n, 0, 0};
                    p.set_factor(i, a);
                    p.set_factor(j, b);
                    out.push_back(p);
                }
            }
        }
    }
    return out;
}

/// Sparse label of a local string, e.g. "X0", "Z1Y3".
inline std::string local_label(const PauliString& p) {
    std::string s;
    for (std::uint32_t q = 0; q < p.n_qubits; ++q) {
        const int f = p.factor(q);
        if (f) {
            s += "IXYZ"[f];
            s += std::to_string(q);
        }
    }
    return s;
}

enum class ShadowMode { Exact, Sampled };

struct ShadowConfig {
    ShadowMode mode = ShadowMode::Sampled;
    std::size_t shots = 10000;
    std::uint64_t seed = 0;
    EstimatorOptions estimator;
};

/// Values of every 1- and 2-local Pauli string, in local_observables order.
/// Exact mode evaluates the state directly; sampled mode estimates all of
/// them from one shared shadow of config.shots snapshots.
inline std::vector<double> shadow_features(const Statevector& state, const ShadowConfig& config,
                                           unsigned threads = 1) {
    if (state.n_qubits < 2) throw std::invalid_argument("shadow features need at least 2 qubits");
    const auto observables = local_observables(state.n_qubits);
    std::vector<double> out(observables.size());
    if (config.mode == ShadowMode::Exact) {
        for (std::size_t i = 0; i < observables.size(); ++i) {
            out[i] = pauli_expectation(state, observables[i]);
        }
        return out;
    }
    const Shadow shadow = collect_shadow(state, config.shots, config.seed, threads);
    parallel_for(observables.size(), threads, [&](std::size_t i) {
        out[i] = estimate_pauli(shadow, observables[i], config.estimator);
    });
    return out;
}

/// Embeds an n-qubit feature vector into the n_max layout by global qubit
/// index; positions touching qubits >= n are zero.
inline std::vector<double> pad_shadow_features(const std::vector<double>& values, std::uint32_t n,
                                               std::uint32_t n_max = kPaddedQubits) {
    if (n > n_max) throw std::invalid_argument("cannot pad to fewer qubits");
    if (values.size() != local_feature_count(n)) {
        throw std::invalid_argument("shadow feature vector has wrong length");
    }
    const auto small = local_observables(n);
    const auto large = local_observables(n_max);
    std::vector<double> out(large.size(), 0.0);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < large.size() && cursor < small.size(); ++i) {
        const auto& p = large[i];
        if (p.x_mask == small[cursor].x_mask && p.z_mask == small[cursor].z_mask) {
            out[i] = values[cursor++];
        }
    }
    return out;
}

}  // namespace magic_meter
