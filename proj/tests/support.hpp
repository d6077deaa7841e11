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

// Test-only reference implementations and generators. Everything here is
// deliberately independent of the library code paths it checks: the hull
// oracle works in exact integer arithmetic, the delay oracle compares all
// pairs, and expected profile numbers are spelled out.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "splitpoint/delay.hpp"
#include "splitpoint/profile.hpp"
#include "splitpoint/selectors.hpp"

namespace splitpoint::test {

inline const char* table2_json() {
    return R"({
      "input": {"len": 800, "channels": 2},
      "layers": [
        {"kind": "conv1d", "kernel": 8, "out_channels": 200, "bias": true},
        {"kind": "conv1d", "kernel": 8, "out_channels": 200, "bias": true},
        {"kind": "pool1d", "kernel": 8, "stride": 8},
        {"kind": "conv1d", "kernel": 8, "out_channels": 200, "bias": true},
        {"kind": "conv1d", "kernel": 8, "out_channels": 200, "bias": true},
        {"kind": "global_avg_pool"},
        {"kind": "dropout"},
        {"kind": "fully_connected", "out_features": 10, "bias": true}
      ]
    })";
}

inline ArchitectureSpec table2_architecture() { return parse_architecture(table2_json()); }

inline NetworkProfile table2_profile(int scalar_bits = 32) {
    return build_profile(table2_architecture(), FlopConvention{}, scalar_bits);
}

// Expected per-layer sequences for the network above under the default
// cost convention.
inline const std::vector<std::int64_t> kTable2Activations{
    158600, 157200, 19600, 18200, 16800, 200, 200, 10};
inline const std::vector<std::int64_t> kTable2LayerParams{
    3400, 320200, 0, 320200, 320200, 0, 0, 2010};
inline const std::vector<std::int64_t> kTable2CumulativeParams{
    3400, 323600, 323600, 643800, 964000, 964000, 964000, 966010};
inline const std::vector<double> kTable2LayerFlops{
    5075200, 503040000, 156800, 58240000, 53760000, 16800, 0, 4000};
inline const std::vector<double> kTable2CumulativeFlops{
    5075200, 508115200, 508272000, 566512000, 620272000, 620288800, 620288800, 620292800};

constexpr std::int64_t kTable2Dataset = 9992;

/// All-pairs delay minimizer with the documented tie-break (smaller
/// client load, then smaller index). Quadratic on purpose; checks the
/// library's linear scan.
inline int pairwise_optimal(const NetworkProfile& profile, const ResourceState& res,
                            const TrainingConfig& cfg) {
    const int last = profile.layer_count();
    std::vector<double> delays;
    for (int n = 1; n < last; ++n) delays.push_back(epoch_delay(profile, n, res, cfg).epoch_s);
    int best = 0;
    for (int i = 1; i < static_cast<int>(delays.size()); ++i) {
        bool beaten = false;
        for (int j = 0; j < static_cast<int>(delays.size()); ++j) {
            if (delays[j] < delays[i]) beaten = true;
        }
        if (beaten) continue;
        if (delays[i] < delays[best] ||
            (delays[i] == delays[best] &&
             (profile.client_load(i + 1) < profile.client_load(best + 1))))
            best = i;
    }
    return best + 1;
}

/// Exact strict lower convex hull of the points
/// (client load, activations * dataset + params) for the given layers.
/// Valid whenever the load values are integers, which holds under the
/// default cost convention; collinear interior points are dropped.
inline std::vector<int> lower_hull_layers(const NetworkProfile& profile,
                                          const std::vector<int>& layers,
                                          std::int64_t dataset_size) {
    struct Point {
        __int128 x, y;
        int layer;
    };
    std::vector<Point> points;
    for (int l : layers) {
        points.push_back({static_cast<__int128>(std::llround(profile.client_load(l))),
                          static_cast<__int128>(profile.activation_count(l)) * dataset_size +
                              profile.client_params(l),
                          l});
    }
    std::vector<Point> hull;
    for (const auto& p : points) {
        while (hull.size() >= 2) {
            const auto& o = hull[hull.size() - 2];
            const auto& a = hull[hull.size() - 1];
            const __int128 cross =
                (a.x - o.x) * (p.y - o.y) - (a.y - o.y) * (p.x - o.x);
            if (cross <= 0)  // turning right or straight: a is not strictly below chord o-p
                hull.pop_back();
            else
                break;
        }
        hull.push_back(p);
    }
    std::vector<int> result;
    for (const auto& p : hull) result.push_back(p.layer);
    return result;
}

/// Mean of |X| for X ~ Normal(mean, sigma^2).
inline double folded_normal_mean(double mean, double sigma) {
    if (sigma == 0) return std::abs(mean);
    const double phi = 0.5 * (1.0 + std::erf(-mean / (sigma * std::sqrt(2.0))));
    return sigma * std::sqrt(2.0 / M_PI) * std::exp(-mean * mean / (2.0 * sigma * sigma)) +
           mean * (1.0 - 2.0 * phi);
}

/// A resource state whose bits-per-FLOP value is (up to rounding) the
/// requested one, with the remaining degrees of freedom randomized.
inline ResourceState resource_for(double bits_per_flop, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> fk_exponent(8.0, 10.5);
    std::uniform_real_distribution<double> gain(0.05, 0.95);
    ResourceState res;
    res.client_flops_per_sec = std::pow(10.0, fk_exponent(rng));
    const double g = gain(rng);
    res.server_flops_per_sec = res.client_flops_per_sec / (1.0 - g);
    res.link_bits_per_sec = bits_per_flop * res.client_flops_per_sec / g;
    return res;
}

/// Random valid architecture with 3..15 layers. Shapes always chain; the
/// mix favors convolutions, matching the networks this tooling targets.
inline ArchitectureSpec random_architecture(std::mt19937_64& rng) {
    const auto pick = [&](std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
    };
    ArchitectureSpec arch;
    arch.input_len = pick(20, 200);
    arch.input_channels = pick(1, 4);
    const int target = static_cast<int>(pick(3, 15));
    std::int64_t len = arch.input_len;
    std::int64_t channels = arch.input_channels;
    for (int i = 1; i <= target; ++i) {
        std::vector<int> feasible{0, 0, 3, 4};  // conv twice, dropout, fc
        if (len >= 2) {
            feasible.push_back(1);  // pool
            feasible.push_back(2);  // global pool
        }
        LayerSpec spec;
        spec.index = i;
        switch (feasible[static_cast<std::size_t>(pick(0, std::ssize(feasible) - 1))]) {
            case 0: {
                spec.kind = LayerKind::conv1d;
                spec.kernel_size = pick(1, std::min<std::int64_t>(len, 8));
                spec.in_channels = channels;
                spec.output_channels = pick(1, 16);
                spec.output_len = len - spec.kernel_size + 1;
                spec.has_bias = pick(0, 1) == 1;
                break;
            }
            case 1: {
                spec.kind = LayerKind::pool1d;
                spec.kernel_size = pick(2, std::min<std::int64_t>(len, 6));
                const std::int64_t stride = pick(1, spec.kernel_size);
                spec.in_channels = channels;
                spec.output_channels = channels;
                spec.output_len = (len - spec.kernel_size) / stride + 1;
                break;
            }
            case 2: {
                spec.kind = LayerKind::global_avg_pool;
                spec.kernel_size = len;
                spec.in_channels = channels;
                spec.output_channels = channels;
                spec.output_len = 1;
                break;
            }
            case 3: {
                spec.kind = LayerKind::dropout;
                spec.in_channels = channels;
                spec.output_channels = channels;
                spec.output_len = len;
                break;
            }
            default: {
                spec.kind = LayerKind::fully_connected;
                spec.in_channels = len * channels;
                spec.output_channels = pick(2, 32);
                spec.output_len = 1;
                spec.has_bias = pick(0, 1) == 1;
                break;
            }
        }
        len = spec.output_len;
        channels = spec.output_channels;
        arch.layers.push_back(spec);
    }
    return arch;
}

}  // namespace splitpoint::test
