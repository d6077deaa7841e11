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

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitpoint/delay.hpp"
#include "splitpoint/profile.hpp"

namespace splitpoint {

/// Sentinel for the virtual layer past the deepest candidate. Its
/// cumulative activation, compute and parameter functions are all zero,
/// which makes the trade-off below the deepest candidate negative and
/// closes its region at zero.
inline constexpr int virtual_terminal = -1;

enum class PruneStage { profile_pruned, tradeoff_pruned };

/// Cut-layer candidates surviving a pruning stage. Ordered, strictly
/// increasing, never containing the final layer.
struct CandidateSet {
    std::vector<int> layers;
    PruneStage stage = PruneStage::profile_pruned;
};

/// First pruning step: a deeper layer whose total communication burden
/// (activations plus amortized sync parameters) is not strictly below
/// that of its surviving shallower neighbor can never win, because its
/// compute cost is higher. Scans once left to right, which reaches the
/// fixpoint of repeatedly applying the rule to surviving consecutive
/// pairs. Comparison is exact integer arithmetic: the rule
///   activations(j) + (params(j) - params(i)) / dataset >= activations(i)
/// is evaluated as activations * dataset + params on both sides.
inline CandidateSet prune_profile_function(const NetworkProfile& profile,
                                           std::int64_t dataset_size) {
    if (dataset_size < 1)
        throw std::invalid_argument("dataset size must be positive");
    const int last = profile.layer_count();
    if (last < 2)
        throw std::invalid_argument("a network needs at least two layers to be split");

    const auto burden = [&](int n) -> __int128 {
        return static_cast<__int128>(profile.activation_count(n)) * dataset_size +
               profile.client_params(n);
    };

    CandidateSet out;
    out.stage = PruneStage::profile_pruned;
    out.layers.push_back(1);
    for (int j = 2; j < last; ++j) {
        if (burden(j) < burden(out.layers.back()))
            out.layers.push_back(j);
    }
    return out;
}

/// Communication-computation trade-off between two candidate cut layers,
/// in bits per FLOP: the link bits saved per sample by cutting at the
/// deeper layer, per extra client FLOP taken on.
///
/// shallower == 0 is the input-side sentinel and yields +infinity: the
/// first layer is never outranked from above. deeper == virtual_terminal
/// uses the all-zero virtual layer. A zero compute difference yields
/// +/-infinity by the sign of the communication difference, keeping the
/// ordering total.
inline double tradeoff(const NetworkProfile& profile, int shallower, int deeper,
                       std::int64_t dataset_size) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (shallower == 0) return inf;

    const double d = static_cast<double>(dataset_size);
    double deep_act = 0, deep_params = 0, deep_load = 0;
    if (deeper != virtual_terminal) {
        deep_act = static_cast<double>(profile.activation_count(deeper));
        deep_params = static_cast<double>(profile.client_params(deeper));
        deep_load = profile.client_load(deeper);
    }
    const double numerator =
        (static_cast<double>(profile.activation_count(shallower)) - deep_act -
         (deep_params - static_cast<double>(profile.client_params(shallower))) / d) *
        static_cast<double>(profile.scalar_bits);
    const double denominator = deep_load - profile.client_load(shallower);
    if (denominator == 0.0) return numerator > 0 ? inf : -inf;
    return numerator / denominator;
}

/// Second pruning step: drop every candidate whose trade-off to its
/// shallower neighbor does not strictly exceed the trade-off to its
/// deeper neighbor, then recompute between the new neighbors and repeat
/// until the trade-off sequence is strictly decreasing. The fixpoint
/// equals the strict lower convex hull of the candidates in the
/// (client load, communication burden) plane.
inline CandidateSet prune_tradeoff(const CandidateSet& candidates,
                                   const NetworkProfile& profile,
                                   std::int64_t dataset_size) {
    if (candidates.stage != PruneStage::profile_pruned)
        throw std::invalid_argument("trade-off pruning expects the profile-pruned set");
    if (candidates.layers.empty())
        throw std::invalid_argument("candidate set is empty");

    std::vector<int> cur = candidates.layers;
    while (true) {
        std::vector<int> next;
        next.reserve(cur.size());
        for (std::size_t i = 0; i < cur.size(); ++i) {
            const int left = i == 0 ? 0 : cur[i - 1];
            const int right = i + 1 == cur.size() ? virtual_terminal : cur[i + 1];
            if (tradeoff(profile, left, cur[i], dataset_size) >
                tradeoff(profile, cur[i], right, dataset_size))
                next.push_back(cur[i]);
        }
        if (next.empty()) {
            // Only reachable when every surviving layer is free of compute
            // (an all-infinite trade-off chain); the deepest then dominates.
            next.push_back(cur.back());
        }
        if (next.size() == cur.size()) break;
        cur = std::move(next);
    }
    return CandidateSet{std::move(cur), PruneStage::tradeoff_pruned};
}

/// One candidate's half-open optimality interval [theta_low, theta_high)
/// in bits per FLOP.
struct SplitRegion {
    int layer = 0;
    double theta_low = 0;
    double theta_high = 0;
};

/// The offline product: each surviving candidate with the interval of
/// bits-per-FLOP values over which it is delay-optimal. Entries are
/// ordered shallow to deep; intervals partition (0, inf). Immutable once
/// built, so concurrent lookups are safe.
struct SplitRegionTable {
    std::uint64_t arch_hash = 0;
    std::int64_t dataset_size = 0;
    int scalar_bits = 32;
    std::vector<SplitRegion> entries;

    /// Entry whose interval contains the given bits-per-FLOP value. A
    /// value exactly on a boundary belongs to the interval whose lower
    /// end it is, i.e. the shallower layer, which among delay ties is the
    /// one with the smaller client-side load.
    int lookup(double bits_per_flop) const {
        if (entries.empty())
            throw std::logic_error("region table is empty");
        if (!(bits_per_flop > 0))
            throw std::invalid_argument("bits-per-FLOP value must be positive");
        for (const auto& e : entries)
            if (bits_per_flop >= e.theta_low) return e.layer;
        throw std::logic_error("region table does not cover the value");
    }

    void validate() const {
        if (entries.empty())
            throw std::logic_error("region table is empty");
        constexpr double inf = std::numeric_limits<double>::infinity();
        if (entries.front().theta_high != inf)
            throw std::logic_error("shallowest region must be unbounded above");
        if (entries.back().theta_low != 0.0)
            throw std::logic_error("deepest region must touch zero");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!(entries[i].theta_low < entries[i].theta_high))
                throw std::logic_error("region interval is empty");
            if (i > 0) {
                if (entries[i].layer <= entries[i - 1].layer)
                    throw std::logic_error("region layers must increase with depth");
                if (entries[i].theta_high != entries[i - 1].theta_low)
                    throw std::logic_error("regions must be contiguous");
            }
        }
    }
};

/// Builds the split-region table from the fully pruned candidate set.
/// Boundary k is the trade-off between survivors k and k+1; the deepest
/// interval is clamped to zero because its trade-off to the virtual
/// terminal is negative.
inline SplitRegionTable build_region_table(const CandidateSet& candidates,
                                           const NetworkProfile& profile,
                                           std::int64_t dataset_size,
                                           std::uint64_t arch_hash = 0) {
    if (candidates.stage != PruneStage::tradeoff_pruned)
        throw std::invalid_argument("region table expects the trade-off-pruned set");
    const auto& layers = candidates.layers;
    if (layers.empty())
        throw std::invalid_argument("candidate set is empty");

    SplitRegionTable table;
    table.arch_hash = arch_hash;
    table.dataset_size = dataset_size;
    table.scalar_bits = profile.scalar_bits;
    table.entries.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        table.entries[i].layer = layers[i];
        // The deepest survivor has the least communication burden of the
        // set, so it stays optimal all the way down to zero; its
        // trade-off against the virtual terminal is negative (or the
        // degenerate infinity when it carries no compute) and clamps out.
        table.entries[i].theta_low =
            i + 1 == layers.size()
                ? 0.0
                : std::max(tradeoff(profile, layers[i], layers[i + 1], dataset_size), 0.0);
        table.entries[i].theta_high =
            i == 0 ? std::numeric_limits<double>::infinity() : table.entries[i - 1].theta_low;
    }
    table.validate();
    return table;
}

/// Runs the whole offline phase: both pruning steps, then the table.
inline SplitRegionTable build_region_table(const NetworkProfile& profile,
                                           std::int64_t dataset_size,
                                           std::uint64_t arch_hash = 0) {
    const CandidateSet step1 = prune_profile_function(profile, dataset_size);
    const CandidateSet step2 = prune_tradeoff(step1, profile, dataset_size);
    return build_region_table(step2, profile, dataset_size, arch_hash);
}

/// Online phase: derive bits-per-FLOP from the live resources and locate
/// its region. Requires a server strictly faster than the client; the
/// pruning argument is meaningless otherwise.
inline int select_cut_layer(const SplitRegionTable& table, const ResourceState& res) {
    res.validate();
    if (!(res.speed_ratio() > 1.0))
        throw std::invalid_argument(
            "cut-layer selection requires a server faster than the client");
    return table.lookup(res.bits_per_flop());
}

// --- region-table persistence ----------------------------------------

/// File form: {"arch_hash": ..., "D_k": ..., "scalar_bits": ...,
/// "entries": [{"layer": n, "theta_low": x, "theta_high": y}, ...]}.
/// The unbounded upper end serializes as null.
inline nlohmann::json region_table_to_json(const SplitRegionTable& table) {
    nlohmann::json j;
    j["arch_hash"] = table.arch_hash;
    j["D_k"] = table.dataset_size;
    j["scalar_bits"] = table.scalar_bits;
    auto& entries = j["entries"] = nlohmann::json::array();
    for (const auto& e : table.entries) {
        nlohmann::json ej{{"layer", e.layer}, {"theta_low", e.theta_low}};
        if (std::isinf(e.theta_high))
            ej["theta_high"] = nullptr;
        else
            ej["theta_high"] = e.theta_high;
        entries.push_back(std::move(ej));
    }
    return j;
}

inline SplitRegionTable region_table_from_json(const nlohmann::json& j) {
    SplitRegionTable table;
    table.arch_hash = j.at("arch_hash").get<std::uint64_t>();
    table.dataset_size = j.at("D_k").get<std::int64_t>();
    table.scalar_bits = j.at("scalar_bits").get<int>();
    for (const auto& ej : j.at("entries")) {
        SplitRegion e;
        e.layer = ej.at("layer").get<int>();
        e.theta_low = ej.at("theta_low").get<double>();
        e.theta_high = ej.at("theta_high").is_null()
                           ? std::numeric_limits<double>::infinity()
                           : ej.at("theta_high").get<double>();
        table.entries.push_back(e);
    }
    table.validate();
    return table;
}

/// Writes through a temporary file and renames, so readers only ever see
/// a complete table.
inline void save_region_table(const SplitRegionTable& table, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out)
            throw std::runtime_error("cannot write region table: " + tmp);
        out << region_table_to_json(table).dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

inline SplitRegionTable load_region_table(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open region table: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("region table " + path + " is not valid JSON: " + e.what());
    }
    return region_table_from_json(j);
}

}  // namespace splitpoint
