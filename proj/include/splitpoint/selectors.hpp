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

#include <stdexcept>
#include <string>
#include <utility>

#include "splitpoint/delay.hpp"

namespace splitpoint {

/// Which cut-layer selection strategy to run.
struct SelectorKind {
    enum class Strategy { ocla, exhaustive, naive };
    Strategy strategy = Strategy::ocla;
    int fixed_layer = 0;  // naive only

    /// Accepts "ocla", "exhaustive" or "naive:<layer>".
    static SelectorKind parse(const std::string& text) {
        if (text == "ocla") return {Strategy::ocla, 0};
        if (text == "exhaustive") return {Strategy::exhaustive, 0};
        if (text.rfind("naive:", 0) == 0) {
            const std::string num = text.substr(6);
            try {
                std::size_t used = 0;
                const int layer = std::stoi(num, &used);
                if (used == num.size() && layer >= 1) return {Strategy::naive, layer};
            } catch (const std::exception&) {
            }
        }
        throw std::invalid_argument("unknown selector \"" + text +
                                    "\" (expected ocla, exhaustive or naive:<layer>)");
    }

    std::string name() const {
        switch (strategy) {
            case Strategy::ocla: return "ocla";
            case Strategy::exhaustive: return "exhaustive";
            case Strategy::naive: return "naive:" + std::to_string(fixed_layer);
        }
        return "?";
    }
};

/// Ground-truth reference: evaluates the epoch delay of every cut
/// position and returns the minimizer. Works for any positive resources,
/// including a server slower than the client. Delay ties resolve to the
/// smaller client-side load; loads tie only between layers with identical
/// delay profiles, where the smaller index wins. Both fall out of the
/// strict-improvement scan below, since client load never decreases with
/// depth.
inline std::pair<int, DelayBreakdown> exhaustive_optimal(const NetworkProfile& profile,
                                                         const ResourceState& res,
                                                         const TrainingConfig& cfg) {
    const int last = profile.layer_count();
    if (last < 2)
        throw std::invalid_argument("a network needs at least two layers to be split");
    int best = 1;
    DelayBreakdown best_delay = epoch_delay(profile, 1, res, cfg);
    for (int n = 2; n < last; ++n) {
        DelayBreakdown d = epoch_delay(profile, n, res, cfg);
        if (d.epoch_s < best_delay.epoch_s) {
            best = n;
            best_delay = d;
        }
    }
    return {best, best_delay};
}

/// The baseline that ignores resources entirely and always returns its
/// configured layer.
inline int naive_select(const SelectorKind& kind, const NetworkProfile& profile) {
    if (kind.strategy != SelectorKind::Strategy::naive)
        throw std::invalid_argument("naive_select requires a naive selector");
    if (kind.fixed_layer < 1 || kind.fixed_layer >= profile.layer_count())
        throw std::invalid_argument("naive layer " + std::to_string(kind.fixed_layer) +
                                    " is out of range");
    return kind.fixed_layer;
}

}  // namespace splitpoint
