#pragma once

// epsilon-insensitive support vector regression.
//
// The dual is solved in the 2l-variable form
//
//     min  1/2 a^T Q a + p^T a    s.t.  y^T a = 0,  0 <= a_t <= C
//
// with a = (alpha, alpha*), y = (+1..., -1...), p = (eps - z, eps + z) and
// Q_ts = y_t y_s K(x_t mod l, x_s mod l). Each iteration picks the maximal
// violating pair (or, optionally, the second-order pair) and solves the
// two-variable subproblem analytically. The loop stops when
//
//     max_{t in I_up} -y_t G_t  -  min_{t in I_low} -y_t G_t  <  tol
//
// or when max_iterations is reached; the model records which happened and the
// violation it ended with. Features are standardized inside the model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#if defined(__GNUC__) && defined(__x86_64__)
#include <immintrin.h>
#endif

#include "magic_meter/core/matrix.hpp"
#include "magic_meter/core/parallel.hpp"
#include "magic_meter/features.hpp"

namespace magic_meter {

enum class KernelKind { Rbf, Linear, Poly };

inline std::string kernel_name(KernelKind k) {
    switch (k) {
        case KernelKind::Rbf: return "rbf";
        case KernelKind::Linear: return "linear";
        case KernelKind::Poly: return "poly";
    }
    return "?";
}

inline KernelKind parse_kernel(std::string_view s) {
    if (s == "rbf") return KernelKind::Rbf;
    if (s == "linear") return KernelKind::Linear;
    if (s == "poly") return KernelKind::Poly;
    throw std::invalid_argument("unknown kernel '" + std::string(s) + "'");
}

struct KernelSpec {
    KernelKind kind = KernelKind::Rbf;
    double gamma = 0.0;  // <= 0: 1 / (d * variance of the standardized training matrix)
    int degree = 3;
    double coef0 = 0.0;

    bool operator==(const KernelSpec&) const = default;
};

struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    KernelSpec kernel;
    double tol = 1e-3;
    std::size_t max_iterations = 10'000'000;
    bool second_order = false;

    bool operator==(const SvrParams&) const = default;
};

/// A kernel with its gamma resolved.
struct Kernel {
    KernelKind kind = KernelKind::Rbf;
    double gamma = 1.0;
    int degree = 3;
    double coef0 = 0.0;

    double operator()(std::span<const double> a, std::span<const double> b) const {
        if (kind == KernelKind::Rbf) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double d = a[k] - b[k];
                d2 += d * d;
            }
            return std::exp(-gamma * d2);
        }
        double dot = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
        if (kind == KernelKind::Linear) return dot;
        return std::pow(gamma * dot + coef0, degree);
    }

    bool operator==(const Kernel&) const = default;
};

inline double scale_gamma(const Matrix& z) {
    const double n = static_cast<double>(z.data().size());
    if (n == 0) return 1.0;
    double m = 0.0;
    for (double v : z.data()) m += v;
    m /= n;
    double var = 0.0;
    for (double v : z.data()) var += (v - m) * (v - m);
    var /= n;
    return var > 0.0 ? 1.0 / (static_cast<double>(z.cols()) * var) : 1.0;
}

/// Lazily computed kernel rows over a fixed training matrix, with LRU
/// eviction. Valid for every fit on the same (matrix, kernel) pair, so one
/// cache serves a whole C/epsilon sweep.
class KernelCache {
  public:
    KernelCache(const Matrix& z, const Kernel& kernel, std::size_t budget_bytes = std::size_t{512} << 20)
        : z_(z), kernel_(kernel) {
        const std::size_t row_bytes = std::max<std::size_t>(1, z.rows()) * sizeof(double);
        capacity_ = std::max<std::size_t>(2, budget_bytes / row_bytes);
        diag_.resize(z.rows());
        for (std::size_t i = 0; i < z.rows(); ++i) diag_[i] = kernel(z.row(i), z.row(i));
    }

    const Matrix& matrix() const noexcept { return z_; }
    const Kernel& kernel() const noexcept { return kernel_; }
    double diag(std::size_t i) const { return diag_[i]; }

    const std::vector<double>& row(std::size_t i) {
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        std::vector<double> values;
        if (index_.size() >= capacity_) {
            auto last = std::prev(lru_.end());
            values = std::move(last->second);
            index_.erase(last->first);
            lru_.pop_back();
        }
        values.resize(z_.rows());
        const auto xi = z_.row(i);
        for (std::size_t j = 0; j < z_.rows(); ++j) values[j] = kernel_(xi, z_.row(j));
        lru_.emplace_front(i, std::move(values));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

  private:
    const Matrix& z_;
    Kernel kernel_;
    std::size_t capacity_;
    std::vector<double> diag_;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

/// Prediction-only form of the support vectors, folded through the
/// standardizer so that a raw query row is used as is:
///
///   z . s_i = sum_j x_j (s_ij / scale_j) - sum_j mean_j s_ij / scale_j
///
/// Columns are stored feature-major and padded to a multiple of kTile, so the
/// dot products for all support vectors are one pass over the query's nonzero
/// entries with the accumulators held in registers. Derived state; it
/// compares equal to any other compilation.
struct SvrCompiled {
    static constexpr std::size_t kTile = 16;

    std::size_t stride = 0;       // padded support-vector count
    std::vector<double> columns;  // [j * stride + i] = s_ij / scale_j
    std::vector<double> offset;   // sum_j mean_j s_ij / scale_j
    std::vector<double> sq_norm;  // |s_i|^2
    std::vector<double> coef;     // alpha - alpha*, zero in the padding
    std::vector<double> inv_scale;

    bool operator==(const SvrCompiled&) const { return true; }
};

namespace detail {

// out[i] = sum_k val[k] * cols[idx[k] * stride + i] for i < stride.
template <std::size_t Tile>
#if defined(__GNUC__)
__attribute__((always_inline))  // so the AVX2 wrapper gets an AVX2 body
#endif
inline void sparse_column_dots(const double* cols, std::size_t stride, const std::uint32_t* idx,
                               const double* val, std::size_t nnz, double* out) {
    for (std::size_t i0 = 0; i0 < stride; i0 += Tile) {
        double acc[Tile] = {};
        for (std::size_t k = 0; k < nnz; ++k) {
            const double v = val[k];
            const double* c = cols + idx[k] * stride + i0;
            for (std::size_t t = 0; t < Tile; ++t) acc[t] += v * c[t];
        }
        for (std::size_t t = 0; t < Tile; ++t) out[i0 + t] = acc[t];
    }
}

#if defined(__GNUC__) && defined(__x86_64__)
__attribute__((target("avx2,fma"))) inline void sparse_column_dots_avx2(
    const double* cols, std::size_t stride, const std::uint32_t* idx, const double* val, std::size_t nnz,
    double* out) {
    sparse_column_dots<SvrCompiled::kTile>(cols, stride, idx, val, nnz, out);
}

inline bool cpu_has_avx2_fma() {
    static const bool has = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return has;
}
#endif

inline void dispatch_column_dots(const double* cols, std::size_t stride, const std::uint32_t* idx,
                                 const double* val, std::size_t nnz, double* out) {
#if defined(__GNUC__) && defined(__x86_64__)
    if (cpu_has_avx2_fma()) {
        sparse_column_dots_avx2(cols, stride, idx, val, nnz, out);
        return;
    }
#endif
    sparse_column_dots<SvrCompiled::kTile>(cols, stride, idx, val, nnz, out);
}

// sum_i coef[i] * exp(-gamma * max(0, z_sq + sq_norm[i] - 2 (dot[i] - offset[i]))) over i < count.
inline double rbf_sum(const double* dot, const double* offset, const double* sq_norm, const double* coef,
                      std::size_t count, double z_sq, double gamma) {
    double s = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        s += coef[i] * std::exp(-gamma * std::max(0.0, z_sq + sq_norm[i] - 2.0 * (dot[i] - offset[i])));
    }
    return s;
}

#if defined(__GNUC__) && defined(__x86_64__)
// Four lanes of exp(x) for x <= 0: x = k ln2 + r with |r| <= ln2 / 2, a
// degree-12 Taylor polynomial for exp(r) (relative error below 1e-15) and the
// 2^k scaling through the exponent bits. Inputs below -700 give 0.
__attribute__((target("avx2,fma"))) inline __m256d exp_nonpositive_avx2(__m256d x) {
    const __m256d floor_mask = _mm256_cmp_pd(x, _mm256_set1_pd(-700.0), _CMP_GE_OQ);
    x = _mm256_max_pd(x, _mm256_set1_pd(-700.0));
    const __m256d k = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, _mm256_set1_pd(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(k, _mm256_set1_pd(1.90821492927058770002e-10), r);
    static constexpr double inv_fact[] = {1.0 / 479001600, 1.0 / 39916800, 1.0 / 3628800, 1.0 / 362880,
                                          1.0 / 40320,     1.0 / 5040,     1.0 / 720,     1.0 / 120,
                                          1.0 / 24,        1.0 / 6,        0.5,           1.0,
                                          1.0};
    __m256d p = _mm256_set1_pd(inv_fact[0]);
    for (std::size_t c = 1; c < std::size(inv_fact); ++c) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(inv_fact[c]));
    const __m128i k32 = _mm256_cvtpd_epi32(k);
    const __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k32), _mm256_set1_epi64x(1023)), 52);
    return _mm256_and_pd(_mm256_mul_pd(p, _mm256_castsi256_pd(bits)), floor_mask);
}

// rbf_sum over a count padded to a multiple of 4.
__attribute__((target("avx2,fma"))) inline double rbf_sum_avx2(const double* dot, const double* offset,
                                                               const double* sq_norm, const double* coef,
                                                               std::size_t count, double z_sq, double gamma) {
    const __m256d zq = _mm256_set1_pd(z_sq), neg_gamma = _mm256_set1_pd(-gamma), two = _mm256_set1_pd(2.0);
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < count; i += 4) {
        const __m256d zs = _mm256_sub_pd(_mm256_loadu_pd(dot + i), _mm256_loadu_pd(offset + i));
        __m256d d2 = _mm256_fnmadd_pd(two, zs, _mm256_add_pd(zq, _mm256_loadu_pd(sq_norm + i)));
        d2 = _mm256_max_pd(d2, _mm256_setzero_pd());
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(coef + i), exp_nonpositive_avx2(_mm256_mul_pd(neg_gamma, d2)), acc);
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}
#endif

inline double dispatch_rbf_sum(const double* dot, const double* offset, const double* sq_norm, const double* coef,
                               std::size_t padded, double z_sq, double gamma) {
#if defined(__GNUC__) && defined(__x86_64__)
    if (cpu_has_avx2_fma()) return rbf_sum_avx2(dot, offset, sq_norm, coef, padded, z_sq, gamma);
#endif
    return rbf_sum(dot, offset, sq_norm, coef, padded, z_sq, gamma);
}

}  // namespace detail

struct SvrModel {
    SvrParams params;
    Kernel kernel;
    Standardizer standardizer;
    Matrix support_vectors;  // standardized
    std::vector<double> coef;  // alpha - alpha*
    double bias = 0.0;
    bool converged = false;
    double violation = 0.0;
    std::size_t iterations = 0;
    SvrCompiled compiled;  // rebuilt by compile() whenever the fields above change

    std::size_t n_features() const noexcept { return standardizer.mean.size(); }

    void compile() {
        const std::size_t m = coef.size(), d = n_features();
        constexpr auto tile = SvrCompiled::kTile;
        compiled.stride = (m + tile - 1) / tile * tile;
        compiled.columns.assign(compiled.stride * d, 0.0);
        compiled.offset.assign(compiled.stride, 0.0);
        compiled.sq_norm.assign(compiled.stride, 0.0);
        compiled.coef.assign(compiled.stride, 0.0);
        std::copy(coef.begin(), coef.end(), compiled.coef.begin());
        compiled.inv_scale.resize(d);
        for (std::size_t j = 0; j < d; ++j) compiled.inv_scale[j] = 1.0 / standardizer.scale[j];
        for (std::size_t i = 0; i < m; ++i) {
            const auto s = support_vectors.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double w = s[j] / standardizer.scale[j];
                compiled.columns[j * compiled.stride + i] = w;
                compiled.offset[i] += standardizer.mean[j] * w;
                compiled.sq_norm[i] += s[j] * s[j];
            }
        }
    }

    double predict(std::span<const double> x) const {
        const std::size_t m = coef.size();
        if (compiled.coef.size() != compiled.stride || compiled.stride < m || compiled.inv_scale.size() != x.size()) {
            std::vector<double> z(x.begin(), x.end());
            standardizer.apply_inplace(z);
            return predict_standardized(z);
        }
        thread_local std::vector<double> dot, nz_val;
        thread_local std::vector<std::uint32_t> nz_idx;
        nz_val.clear();
        nz_idx.clear();
        double z_sq = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double z = (x[j] - standardizer.mean[j]) * compiled.inv_scale[j];
            z_sq += z * z;
            if (x[j] != 0.0) {
                nz_idx.push_back(static_cast<std::uint32_t>(j));
                nz_val.push_back(x[j]);
            }
        }
        dot.resize(compiled.stride);
        detail::dispatch_column_dots(compiled.columns.data(), compiled.stride, nz_idx.data(), nz_val.data(),
                                     nz_idx.size(), dot.data());
        if (kernel.kind == KernelKind::Rbf) {
            return bias + detail::dispatch_rbf_sum(dot.data(), compiled.offset.data(), compiled.sq_norm.data(),
                                                   compiled.coef.data(), compiled.stride, z_sq, kernel.gamma);
        }
        double s = bias;
        for (std::size_t i = 0; i < m; ++i) {
            const double zs = dot[i] - compiled.offset[i];
            s += coef[i] * (kernel.kind == KernelKind::Linear ? zs : std::pow(kernel.gamma * zs + kernel.coef0, kernel.degree));
        }
        return s;
    }

    /// Direct evaluation on an already standardized row.
    double predict_standardized(std::span<const double> z) const {
        double s = bias;
        for (std::size_t i = 0; i < coef.size(); ++i) s += coef[i] * kernel(z, support_vectors.row(i));
        return s;
    }

    std::vector<double> predict(const Matrix& x, unsigned threads = 1) const {
        if (x.cols() != n_features()) throw std::invalid_argument("svr: feature count mismatch");
        std::vector<double> out(x.rows());
        parallel_for(x.rows(), threads, [&](std::size_t i) { out[i] = predict(x.row(i)); });
        return out;
    }

    bool operator==(const SvrModel&) const = default;
};

/// Final dual variables of a fit, alpha then alpha*.
struct SvrDual {
    std::vector<double> alpha;
};

struct SvrFitOptions {
    /// Called after every pair update with all 2l dual variables.
    std::function<void(std::span<const double>)> observer;
    /// Shared kernel rows; must be built from the standardized training
    /// matrix (svr_prepare) and the same kernel.
    KernelCache* cache = nullptr;
    SvrDual* dual = nullptr;
};

/// Standardizer and resolved kernel a fit on x would use.
struct SvrPrepared {
    Standardizer standardizer;
    Matrix z;
    Kernel kernel;
};

inline SvrPrepared svr_prepare(const Matrix& x, const KernelSpec& spec) {
    SvrPrepared p;
    p.standardizer = Standardizer::fit(x);
    p.z = p.standardizer.apply(x);
    p.kernel.kind = spec.kind;
    p.kernel.gamma = spec.gamma > 0.0 ? spec.gamma : scale_gamma(p.z);
    p.kernel.degree = spec.degree;
    p.kernel.coef0 = spec.coef0;
    return p;
}

namespace detail {

inline SvrModel solve_svr(const SvrPrepared& prep, std::span<const double> y, const SvrParams& params,
                          const SvrFitOptions& opts) {
    const std::size_t l = prep.z.rows();
    const std::size_t n = 2 * l;
    const double C = params.C;
    std::unique_ptr<KernelCache> own;
    KernelCache* cache = opts.cache;
    if (!cache) {
        own = std::make_unique<KernelCache>(prep.z, prep.kernel);
        cache = own.get();
    }

    std::vector<double> a(n, 0.0), g(n);
    auto sign = [l](std::size_t t) { return t < l ? 1.0 : -1.0; };
    auto base = [l](std::size_t t) { return t < l ? t : t - l; };
    for (std::size_t i = 0; i < l; ++i) {
        g[i] = params.epsilon - y[i];
        g[i + l] = params.epsilon + y[i];
    }
    auto in_low = [&](std::size_t t) { return t < l ? a[t] > 0.0 : a[t] < C; };

    SvrModel model;
    model.params = params;
    model.kernel = prep.kernel;
    model.standardizer = prep.standardizer;

    constexpr double kTau = 1e-12;
    std::size_t iter = 0;
    double violation = std::numeric_limits<double>::infinity();
    while (true) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        // -y_t G_t is -G_t on the alpha half and +G_t on the alpha* half.
        for (std::size_t t = 0; t < l; ++t) {
            const double v = -g[t];
            if (a[t] < C && v > gmax) {
                gmax = v;
                i = t;
            }
            if (a[t] > 0.0 && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        for (std::size_t t = l; t < n; ++t) {
            const double v = g[t];
            if (a[t] > 0.0 && v > gmax) {
                gmax = v;
                i = t;
            }
            if (a[t] < C && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        violation = (i == n || j == n) ? 0.0 : gmax - gmin;
        if (violation < params.tol) {
            model.converged = true;
            break;
        }
        if (iter >= params.max_iterations) break;

        const auto& ki = cache->row(base(i));
        if (params.second_order) {
            double best = std::numeric_limits<double>::infinity();
            const double kii = cache->diag(base(i));
            for (std::size_t t = 0; t < n; ++t) {
                if (!in_low(t)) continue;
                const double b = gmax + sign(t) * g[t];
                if (b <= 0.0) continue;
                // Q_ii + Q_tt - 2 y_i y_t Q_it, in kernel terms.
                double quad = kii + cache->diag(base(t)) - 2.0 * ki[base(t)];
                if (quad <= 0.0) quad = kTau;
                const double obj = -(b * b) / quad;
                if (obj < best) {
                    best = obj;
                    j = t;
                }
            }
        }
        // Row i is the most recent entry, so fetching row j cannot evict it.
        const auto& kj = cache->row(base(j));

        const double yi = sign(i), yj = sign(j);
        const double qii = cache->diag(base(i)), qjj = cache->diag(base(j));
        const double qij = yi * yj * ki[base(j)];
        const double old_i = a[i], old_j = a[j];
        double ai = old_i, aj = old_j;
        if (yi != yj) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-g[i] - g[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0.0) {
                if (aj < 0.0) {
                    aj = 0.0;
                    ai = diff;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = -diff;
            }
            if (diff > 0.0) {
                if (ai > C) {
                    ai = C;
                    aj = C - diff;
                }
            } else if (aj > C) {
                aj = C;
                ai = C + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (g[i] - g[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) {
                    ai = C;
                    aj = sum - C;
                }
            } else if (aj < 0.0) {
                aj = 0.0;
                ai = sum;
            }
            if (sum > C) {
                if (aj > C) {
                    aj = C;
                    ai = sum - C;
                }
            } else if (ai < 0.0) {
                ai = 0.0;
                aj = sum;
            }
        }
        a[i] = std::clamp(ai, 0.0, C);
        a[j] = std::clamp(aj, 0.0, C);
        const double di = a[i] - old_i, dj = a[j] - old_j;
        const double wi = yi * di, wj = yj * dj;
        for (std::size_t t = 0; t < l; ++t) {
            const double u = wi * ki[t] + wj * kj[t];
            g[t] += u;
            g[t + l] -= u;
        }
        ++iter;
        if (opts.observer) opts.observer(a);
    }
    model.violation = violation;
    model.iterations = iter;

    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = sign(t) * g[t];
        if (a[t] >= C) {
            if (sign(t) < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (a[t] <= 0.0) {
            if (sign(t) > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    double rho;
    if (n_free > 0) rho = sum_free / static_cast<double>(n_free);
    else if (std::isfinite(ub) && std::isfinite(lb)) rho = 0.5 * (ub + lb);
    else rho = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);
    model.bias = -rho;

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < l; ++i) {
        const double c = a[i] - a[i + l];
        if (c != 0.0) {
            sv.push_back(i);
            model.coef.push_back(c);
        }
    }
    model.support_vectors = prep.z.select_rows(sv);
    model.compile();
    if (opts.dual) opts.dual->alpha = a;
    return model;
}

}  // namespace detail

inline void check(const SvrParams& p) {
    if (!(p.C > 0.0)) throw std::invalid_argument("SVR C must be positive");
    if (!(p.epsilon >= 0.0)) throw std::invalid_argument("SVR epsilon must be non-negative");
    if (!(p.tol > 0.0)) throw std::invalid_argument("SVR tolerance must be positive");
    if (p.kernel.kind == KernelKind::Poly && p.kernel.degree < 1) {
        throw std::invalid_argument("polynomial kernel degree must be at least 1");
    }
}

inline SvrModel fit_svr(const SvrPrepared& prep, std::span<const double> y, const SvrParams& params,
                        const SvrFitOptions& opts = {}) {
    check(params);
    if (prep.z.rows() == 0) throw std::invalid_argument("cannot fit SVR on zero rows");
    if (y.size() != prep.z.rows()) throw std::invalid_argument("label count does not match rows");
    if (opts.cache && (&opts.cache->matrix() != &prep.z || !(opts.cache->kernel() == prep.kernel))) {
        throw std::invalid_argument("kernel cache was built for a different matrix or kernel");
    }
    return detail::solve_svr(prep, y, params, opts);
}

inline SvrModel fit_svr(const Matrix& x, std::span<const double> y, const SvrParams& params,
                        const SvrFitOptions& opts = {}) {
    check(params);
    if (x.rows() == 0) throw std::invalid_argument("cannot fit SVR on zero rows");
    const auto prep = svr_prepare(x, params.kernel);
    if (opts.cache) throw std::invalid_argument("a shared kernel cache needs a prepared matrix");
    return fit_svr(prep, y, params, opts);
}

/// Per-row KKT violation of a fitted model on its own training data, given
/// the final dual variables. A converged fit keeps every entry below tol
/// (up to rounding in the decision values).
inline std::vector<double> svr_kkt_residuals(const SvrModel& model, const Matrix& x,
                                             std::span<const double> y, const SvrDual& dual) {
    const std::size_t l = x.rows();
    if (dual.alpha.size() != 2 * l) throw std::invalid_argument("dual size does not match rows");
    const double C = model.params.C, eps = model.params.epsilon;
    std::vector<double> out(l);
    for (std::size_t i = 0; i < l; ++i) {
        const double r = y[i] - model.predict(x.row(i));
        const double a = dual.alpha[i], as = dual.alpha[i + l];
        double v = 0.0;
        if (a > 0.0 && a < C) v = std::abs(r - eps);
        else if (a >= C) v = std::max(0.0, eps - r);
        if (as > 0.0 && as < C) v = std::max(v, std::abs(r + eps));
        else if (as >= C) v = std::max(v, r + eps);
        if (a <= 0.0 && as <= 0.0) v = std::max(0.0, std::abs(r) - eps);
        out[i] = v;
    }
    return out;
}

}  // namespace magic_meter
