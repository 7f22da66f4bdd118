#pragma once

// k-fold cross-validated grid search.
//
// The fold partition is one seeded shuffle shared by every grid cell. Fold f
// trains with seed derive_seed(seed, f + 1) whatever the cell, so identical
// cells score identically. The best cell minimizes mean validation MSE; ties
// go to the smaller model (fewer trees, smaller C), then to grid order. The
// winner is refit on all rows with `seed`.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "magic_meter/core/random.hpp"
#include "magic_meter/features.hpp"
#include "magic_meter/ml/metrics.hpp"
#include "magic_meter/ml/model.hpp"

namespace magic_meter {

struct GridSearchConfig {
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct CvRow {
    ModelParams params;
    std::vector<double> fold_mse;
    double mean_mse = 0.0;
    std::size_t unconverged_folds = 0;  // SVR fits that hit max_iterations
};

struct CvReport {
    std::size_t folds = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> fold_seeds;
    std::vector<CvRow> rows;
    std::size_t selected = 0;
};

struct GridSearchResult {
    Model model;
    CvReport report;
};

/// Fold index of every row.
inline std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("cross-validation needs at least 2 folds");
    if (n < k) {
        throw std::invalid_argument("cannot split " + std::to_string(n) + " rows into " +
                                    std::to_string(k) + " non-empty folds");
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(mix64(seed ^ 0xF01D5EEDULL));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
    std::vector<std::size_t> fold(n);
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t p = n * f / k; p < n * (f + 1) / k; ++p) fold[perm[p]] = f;
    }
    return fold;
}

inline std::size_t select_best(const std::vector<CvRow>& rows) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto key = [&](std::size_t r) {
            return std::make_tuple(rows[r].mean_mse, model_size(rows[r].params), r);
        };
        if (key(i) < key(best)) best = i;
    }
    return best;
}

inline GridSearchResult grid_search_cv(const Dataset& data, const std::vector<ModelParams>& grid,
                                       const GridSearchConfig& cfg) {
    if (grid.empty()) throw std::invalid_argument("hyperparameter grid is empty");
    const std::size_t n = data.size();
    const auto fold = fold_assignment(n, cfg.folds, cfg.seed);

    CvReport report;
    report.folds = cfg.folds;
    report.seed = cfg.seed;
    report.rows.resize(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        report.rows[c].params = grid[c];
        report.rows[c].fold_mse.assign(cfg.folds, 0.0);
    }
    for (std::size_t f = 0; f < cfg.folds; ++f) {
        const auto fold_seed = derive_seed(cfg.seed, f + 1);
        report.fold_seeds.push_back(fold_seed);
        std::vector<std::size_t> train, val;
        for (std::size_t i = 0; i < n; ++i) (fold[i] == f ? val : train).push_back(i);
        const Matrix xt = data.features.select_rows(train);
        const Matrix xv = data.features.select_rows(val);
        const auto yt = select<double>(data.labels, train);
        const auto yv = select<double>(data.labels, val);

        // SVR cells sharing a kernel reuse one standardization and kernel cache.
        struct Shared {
            SvrPrepared prep;
            std::unique_ptr<KernelCache> cache;
        };
        std::map<std::tuple<int, double, int, double>, Shared> shared;
        for (std::size_t c = 0; c < grid.size(); ++c) {
            std::vector<double> pred;
            if (const auto* fp = std::get_if<ForestParams>(&grid[c])) {
                pred = fit_rfr(xt, yt, *fp, fold_seed, cfg.threads).predict(xv, cfg.threads);
            } else {
                const auto& sp = std::get<SvrParams>(grid[c]);
                const auto key = std::make_tuple(static_cast<int>(sp.kernel.kind), sp.kernel.gamma,
                                                 sp.kernel.degree, sp.kernel.coef0);
                auto it = shared.find(key);
                if (it == shared.end()) {
                    it = shared.emplace(key, Shared{svr_prepare(xt, sp.kernel), nullptr}).first;
                    it->second.cache = std::make_unique<KernelCache>(it->second.prep.z, it->second.prep.kernel);
                }
                SvrFitOptions opts;
                opts.cache = it->second.cache.get();
                const auto model = fit_svr(it->second.prep, yt, sp, opts);
                report.rows[c].unconverged_folds += !model.converged;
                pred = model.predict(xv, cfg.threads);
            }
            report.rows[c].fold_mse[f] = mse(pred, yv);
        }
    }
    for (auto& row : report.rows) {
        row.mean_mse = std::accumulate(row.fold_mse.begin(), row.fold_mse.end(), 0.0) /
                       static_cast<double>(cfg.folds);
    }
    report.selected = select_best(report.rows);

    GridSearchResult result;
    result.model = fit_model(data, grid[report.selected], cfg.seed, cfg.threads);
    result.report = std::move(report);
    return result;
}

}  // namespace magic_meter
