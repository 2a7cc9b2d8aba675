#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "nrsi/corpus.hpp"
#include "nrsi/errors.hpp"
#include "nrsi/factorization.hpp"
#include "nrsi/numeric.hpp"

namespace nrsi {

// Cartesian grid over ranks and regularization weights.  rank_values and
// lambda_values are shared across the three axes unless a per-axis override
// is given.
struct GridSpec {
    std::vector<std::size_t> rank_values;
    std::vector<double> lambda_values;
    std::vector<std::size_t> subject_rank_values, object_rank_values, other_rank_values;
    std::vector<double> lambda_subject_values, lambda_object_values, lambda_other_values;

    static std::vector<std::size_t> default_rank_values() {
        std::vector<std::size_t> v;
        for (std::size_t r = 5; r <= 20; ++r) v.push_back(r);
        return v;
    }
    static std::vector<double> default_lambda_values() {
        std::vector<double> v;
        for (int i = 0; i <= 10; ++i) v.push_back(static_cast<double>(i) / 10.0);
        return v;
    }
};

struct GridCell {
    Ranks ranks;
    Regularizers reg;
    FitReport fit;
    std::uint64_t seed = 0;
    bool skipped = false;
    std::string note;
    double wall_seconds = 0.0;
};

struct GridResult {
    std::vector<GridCell> cells;
    std::size_t winner = 0;
};

// Per-cell seed, mixed from the master seed and the cell's lexicographic
// index so cells are reproducible independently of execution order.
inline std::uint64_t derive_cell_seed(std::uint64_t master_seed, std::size_t cell_index) {
    return mix_seed(master_seed, static_cast<std::uint64_t>(cell_index));
}

// The six effective axes of a grid after per-axis overrides and defaults.
struct GridAxes {
    std::vector<std::size_t> r1, r2, r3;
    std::vector<double> la, lb, lc;

    std::size_t cell_count() const {
        return r1.size() * r2.size() * r3.size() * la.size() * lb.size() * lc.size();
    }
};

inline GridAxes resolve_grid_axes(const GridSpec& spec) {
    GridAxes a;
    const auto ranks = spec.rank_values.empty() ? GridSpec::default_rank_values() : spec.rank_values;
    const auto lambdas =
        spec.lambda_values.empty() ? GridSpec::default_lambda_values() : spec.lambda_values;
    a.r1 = spec.subject_rank_values.empty() ? ranks : spec.subject_rank_values;
    a.r2 = spec.object_rank_values.empty() ? ranks : spec.object_rank_values;
    a.r3 = spec.other_rank_values.empty() ? ranks : spec.other_rank_values;
    a.la = spec.lambda_subject_values.empty() ? lambdas : spec.lambda_subject_values;
    a.lb = spec.lambda_object_values.empty() ? lambdas : spec.lambda_object_values;
    a.lc = spec.lambda_other_values.empty() ? lambdas : spec.lambda_other_values;
    for (const auto* axis : {&a.r1, &a.r2, &a.r3})
        for (std::size_t r : *axis)
            if (r < 1) throw config_error("grid rank values must be >= 1");
    for (const auto* axis : {&a.la, &a.lb, &a.lc})
        for (double l : *axis)
            if (!(l >= 0.0 && l <= 1.0))
                throw config_error("grid lambda values must lie in [0, 1]");
    return a;
}

// Enumerates every grid cell in lexicographic order (subject rank outermost,
// other-lambda innermost), skips cells whose ranks exceed the vocabulary
// sizes, runs the remaining ones, and picks the best AvgFIT.  Ties go to the
// lexicographically smallest cell.  Cells are independent; `threads` > 1
// runs them concurrently with results keyed by cell index.
inline GridResult grid_search(const BackoffTensors& t, const GridSpec& spec,
                              const SolveOptions& options, std::size_t threads = 1) {
    const GridAxes axes = resolve_grid_axes(spec);
    GridResult result;
    for (std::size_t r1 : axes.r1)
        for (std::size_t r2 : axes.r2)
            for (std::size_t r3 : axes.r3)
                for (double la : axes.la)
                    for (double lb : axes.lb)
                        for (double lc : axes.lc) {
                            GridCell cell;
                            cell.ranks = {r1, r2, r3};
                            cell.reg = {la, lb, lc};
                            cell.seed = derive_cell_seed(options.seed, result.cells.size());
                            result.cells.push_back(std::move(cell));
                        }

    auto run_cell = [&](GridCell& cell) {
        if (cell.ranks.subjects > t.vocab.n_subjects() ||
            cell.ranks.objects > t.vocab.n_objects() ||
            cell.ranks.others > t.vocab.n_others()) {
            cell.skipped = true;
            cell.note = "rank exceeds vocabulary size";
            return;
        }
        SolveOptions cell_options = options;
        cell_options.seed = cell.seed;
        const auto start = std::chrono::steady_clock::now();
        auto [factors, fit] = factorize(t, cell.ranks, cell.reg, cell_options);
        cell.wall_seconds = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - start).count();
        cell.fit = fit;
    };

    if (threads <= 1 || result.cells.size() <= 1) {
        for (GridCell& cell : result.cells) run_cell(cell);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            while (true) {
                const std::size_t idx = next.fetch_add(1);
                if (idx >= result.cells.size()) return;
                try {
                    run_cell(result.cells[idx]);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        const std::size_t n = std::min<std::size_t>(threads, result.cells.size());
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    bool found = false;
    for (std::size_t i = 0; i < result.cells.size(); ++i) {
        if (result.cells[i].skipped) continue;
        if (!found || result.cells[i].fit.avg_fit > result.cells[result.winner].fit.avg_fit) {
            result.winner = i;
            found = true;
        }
    }
    if (!found) throw config_error("grid_search: every grid cell was skipped");
    return result;
}

}  // namespace nrsi
