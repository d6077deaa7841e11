// Copyright 2026 The splitpoint Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "splitpoint/ocla.hpp"
#include "splitpoint/selectors.hpp"
#include "splitpoint/util.hpp"

namespace splitpoint {

/// Parameters of the underlying normal; the sample is its absolute
/// value. mean and sigma are in the units of the sampled quantity.
struct FoldedNormalParams {
    double mean = 0;
    double sigma = 0;
};

inline double sample_folded_normal(const FoldedNormalParams& p, std::mt19937_64& rng) {
    if (p.sigma < 0)
        throw std::invalid_argument("sigma must be nonnegative");
    if (p.sigma == 0) return std::abs(p.mean);
    std::normal_distribution<double> normal(p.mean, p.sigma);
    return std::abs(normal(rng));
}

/// Distribution of the time-varying resources: link rate and the
/// client/server speed ratio f_k/f_s are folded normals with means from
/// the scenario and standard deviations given as coefficient-of-variation
/// multiples of those means. The client speed itself is held fixed.
struct ResourceDistribution {
    double mean_rate = 20e6;                 // bits/s
    double rate_cv = 0;
    double mean_inverse_speed_ratio = 0.03;  // f_k / f_s
    double ratio_cv = 0;
    double client_flops_per_sec = 0;

    void validate() const {
        if (!(client_flops_per_sec > 0))
            throw std::invalid_argument("client speed must be positive");
        if (!(mean_rate > 0) || !(mean_inverse_speed_ratio > 0) ||
            mean_inverse_speed_ratio >= 1)
            throw std::invalid_argument("resource means must be positive with f_k/f_s < 1");
        if (rate_cv < 0 || ratio_cv < 0)
            throw std::invalid_argument("coefficients of variation must be nonnegative");
    }
};

/// One resource draw. The sampled speed ratio must land in (0, 1) for the
/// server to be the faster side; draws outside are rejected and redrawn,
/// with the count reported through `rejections` when given. Draw order is
/// fixed (rate first, then ratio) so seeded sequences are reproducible.
inline ResourceState sample_resource_state(const ResourceDistribution& dist,
                                           std::mt19937_64& rng,
                                           std::int64_t* rejections = nullptr) {
    dist.validate();
    double rate = 0;
    do {
        rate = sample_folded_normal({dist.mean_rate, dist.rate_cv * dist.mean_rate}, rng);
    } while (!(rate > 0));

    const FoldedNormalParams ratio_params{dist.mean_inverse_speed_ratio,
                                          dist.ratio_cv * dist.mean_inverse_speed_ratio};
    double inverse_ratio = 0;
    while (true) {
        inverse_ratio = sample_folded_normal(ratio_params, rng);
        if (inverse_ratio > 0 && inverse_ratio < 1) break;
        if (rejections) ++*rejections;
    }

    ResourceState res;
    res.client_flops_per_sec = dist.client_flops_per_sec;
    res.server_flops_per_sec = dist.client_flops_per_sec / inverse_ratio;
    res.link_bits_per_sec = rate;
    return res;
}

struct MonteCarloConfig {
    int iterations = 1000;             // independent repetitions per cell
    int samples_per_iteration = 300;   // resource draws scored per repetition
    std::vector<double> rate_cvs;      // grid axis for the link rate cv
    std::vector<double> ratio_cvs;     // grid axis for the speed-ratio cv
    double mean_rate = 20e6;
    double mean_inverse_speed_ratio = 0.03;
    double client_flops_per_sec = 0;
    int naive_layer = 3;
    std::uint64_t seed = 0;
    unsigned threads = 0;  // 0 picks the hardware concurrency

    void validate() const {
        if (iterations < 1 || samples_per_iteration < 1)
            throw std::invalid_argument("iterations and samples must be positive");
        if (rate_cvs.empty() || ratio_cvs.empty())
            throw std::invalid_argument("cv grid axes must be non-empty");
        for (double cv : rate_cvs)
            if (!(cv > 0)) throw std::invalid_argument("cv values must be positive");
        for (double cv : ratio_cvs)
            if (!(cv > 0)) throw std::invalid_argument("cv values must be positive");
    }
};

/// Fraction of predictions matching the ground truth.
inline double selection_rate(std::span<const int> predictions, std::span<const int> truths) {
    if (predictions.empty() || predictions.size() != truths.size())
        throw std::invalid_argument("selection_rate needs equal-length non-empty inputs");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truths[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

/// One grid cell of the evaluation. Selection rates are means over the
/// iterations; gain is their ratio and gain_stderr the standard error of
/// the per-iteration gains (iterations with a zero naive rate are skipped
/// there).
struct GainCell {
    double rate_cv = 0;
    double ratio_cv = 0;
    double a_ocla = 0;
    double a_naive = 0;
    double gain = 0;
    double gain_stderr = 0;
    std::int64_t scored_draws = 0;    // iterations x samples per iteration
    std::int64_t rejected_draws = 0;  // speed-ratio redraws, not scored
};

struct GainSurface {
    std::vector<GainCell> cells;  // row-major: rate cv outer, ratio cv inner
};

namespace detail {

struct IterationScore {
    double a_ocla = 0;
    double a_naive = 0;
    std::int64_t rejections = 0;
};

/// Scores one seeded iteration: J draws, three selectors, two rates.
inline IterationScore score_iteration(const NetworkProfile& profile,
                                      const SplitRegionTable& table,
                                      const MonteCarloConfig& cfg,
                                      const TrainingConfig& training,
                                      std::size_t cell_index, int iteration,
                                      double rate_cv, double ratio_cv) {
    std::mt19937_64 rng =
        make_rng(cfg.seed, 0x6d63u, cell_index, static_cast<std::uint64_t>(iteration));
    ResourceDistribution dist;
    dist.mean_rate = cfg.mean_rate;
    dist.rate_cv = rate_cv;
    dist.mean_inverse_speed_ratio = cfg.mean_inverse_speed_ratio;
    dist.ratio_cv = ratio_cv;
    dist.client_flops_per_sec = cfg.client_flops_per_sec;

    IterationScore score;
    int ocla_hits = 0, naive_hits = 0;
    for (int j = 0; j < cfg.samples_per_iteration; ++j) {
        const ResourceState res = sample_resource_state(dist, rng, &score.rejections);
        const int truth = exhaustive_optimal(profile, res, training).first;
        if (select_cut_layer(table, res) == truth) ++ocla_hits;
        if (cfg.naive_layer == truth) ++naive_hits;
    }
    score.a_ocla = static_cast<double>(ocla_hits) / cfg.samples_per_iteration;
    score.a_naive = static_cast<double>(naive_hits) / cfg.samples_per_iteration;
    return score;
}

}  // namespace detail

/// Runs the full evaluation grid. Each (cell, iteration) pair derives its
/// own generator from the seed, so the result is identical however the
/// iterations are scheduled across threads.
inline GainSurface run_gain_grid(const NetworkProfile& profile, const SplitRegionTable& table,
                                 const MonteCarloConfig& cfg) {
    cfg.validate();
    if (cfg.naive_layer < 1 || cfg.naive_layer >= profile.layer_count())
        throw std::invalid_argument("naive layer is out of range");

    // The exhaustive reference uses the literal batch ratio; batch size
    // cancels from the delay ordering, so one sample per batch serves.
    TrainingConfig training;
    training.dataset_size = table.dataset_size;
    training.batch_size = 1;
    training.batch_mode = BatchMode::exact;

    const std::size_t n_cells = cfg.rate_cvs.size() * cfg.ratio_cvs.size();
    const std::size_t n_tasks = n_cells * static_cast<std::size_t>(cfg.iterations);
    std::vector<detail::IterationScore> scores(n_tasks);

    std::atomic<std::size_t> cursor{0};
    const auto worker = [&] {
        for (std::size_t task = cursor.fetch_add(1); task < n_tasks;
             task = cursor.fetch_add(1)) {
            const std::size_t cell = task / cfg.iterations;
            const int iter = static_cast<int>(task % cfg.iterations);
            const double rate_cv = cfg.rate_cvs[cell / cfg.ratio_cvs.size()];
            const double ratio_cv = cfg.ratio_cvs[cell % cfg.ratio_cvs.size()];
            scores[task] = detail::score_iteration(profile, table, cfg, training, cell, iter,
                                                   rate_cv, ratio_cv);
        }
    };

    unsigned n_threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
    if (n_threads < 1) n_threads = 1;
    if (n_threads > n_tasks) n_threads = static_cast<unsigned>(n_tasks);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    GainSurface surface;
    surface.cells.reserve(n_cells);
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        GainCell out;
        out.rate_cv = cfg.rate_cvs[cell / cfg.ratio_cvs.size()];
        out.ratio_cv = cfg.ratio_cvs[cell % cfg.ratio_cvs.size()];
        out.scored_draws = static_cast<std::int64_t>(cfg.iterations) *
                           cfg.samples_per_iteration;
        double sum_ocla = 0, sum_naive = 0;
        std::vector<double> gains;
        gains.reserve(cfg.iterations);
        for (int i = 0; i < cfg.iterations; ++i) {
            const auto& s = scores[cell * cfg.iterations + i];
            sum_ocla += s.a_ocla;
            sum_naive += s.a_naive;
            out.rejected_draws += s.rejections;
            if (s.a_naive > 0) gains.push_back(s.a_ocla / s.a_naive);
        }
        out.a_ocla = sum_ocla / cfg.iterations;
        out.a_naive = sum_naive / cfg.iterations;
        out.gain = out.a_naive > 0 ? out.a_ocla / out.a_naive
                                   : std::numeric_limits<double>::infinity();
        if (gains.size() > 1) {
            double mean = 0;
            for (double g : gains) mean += g;
            mean /= static_cast<double>(gains.size());
            double var = 0;
            for (double g : gains) var += (g - mean) * (g - mean);
            var /= static_cast<double>(gains.size() - 1);
            out.gain_stderr = std::sqrt(var / static_cast<double>(gains.size()));
        }
        surface.cells.push_back(out);
    }
    return surface;
}

/// Picks the client speed that centers the expected bits-per-FLOP value
/// (1 - E[f_k/f_s]) * E[R] / f_k inside the target layer's region, at the
/// geometric midpoint of its boundaries (bounded regions) or a factor of
/// two away from the finite boundary otherwise.
inline double calibrate_client_speed(const SplitRegionTable& table, int target_layer,
                                     double mean_rate, double mean_inverse_speed_ratio) {
    if (!(mean_rate > 0) || !(mean_inverse_speed_ratio > 0) || mean_inverse_speed_ratio >= 1)
        throw std::invalid_argument("means must be positive with f_k/f_s < 1");
    const SplitRegion* region = nullptr;
    for (const auto& e : table.entries)
        if (e.layer == target_layer) region = &e;
    if (!region)
        throw std::invalid_argument("layer " + std::to_string(target_layer) +
                                    " has no split region");
    double target = 0;
    if (region->theta_low > 0 && std::isfinite(region->theta_high))
        target = std::sqrt(region->theta_low * region->theta_high);
    else if (region->theta_low > 0)
        target = 2.0 * region->theta_low;
    else
        target = region->theta_high / 2.0;
    return (1.0 - mean_inverse_speed_ratio) * mean_rate / target;
}

inline void write_surface_csv(const GainSurface& surface, std::ostream& out) {
    out << "r_cv,beta_cv,a_ocla,a_naive,gain,stderr\n";
    for (const auto& c : surface.cells) {
        out << format_double(c.rate_cv) << ',' << format_double(c.ratio_cv) << ','
            << format_double(c.a_ocla) << ',' << format_double(c.a_naive) << ','
            << format_double(c.gain) << ',' << format_double(c.gain_stderr) << '\n';
    }
}

}  // namespace splitpoint
