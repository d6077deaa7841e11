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

#include <cassert>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "splitpoint/arch.hpp"
#include "splitpoint/util.hpp"

namespace splitpoint {

/// Per-output FLOP cost factors. A layer's compute load is the number of
/// output scalars times the per-output cost of its kind. The defaults
/// count a multiply-add as two FLOPs, one FLOP per pooling tap, and zero
/// for masking and activation functions; all factors are adjustable for
/// sensitivity studies.
struct FlopConvention {
    double mac_flops = 2.0;                  // conv1d and fully_connected, per tap
    double pool_flops_per_tap = 1.0;         // pool1d
    double gap_flops_per_input = 1.0;        // global_avg_pool
    double dropout_flops_per_output = 0.0;   // masking
    double activation_flops_per_output = 0.0;  // applied to conv1d and fully_connected outputs
};

struct LayerCost {
    double flops = 0;            // compute load per sample
    std::int64_t params = 0;     // learnable parameter scalars
};

/// Compute load and parameter count of a single layer.
///
/// conv1d: outputs x mac_flops x kernel x in_channels, params kernel x
/// in_channels x out_channels (+ out_channels with bias). fully_connected
/// uses the flattened input feature count the same way. pool1d costs one
/// tap per window element, global_avg_pool one per input element; neither
/// carries parameters, nor does dropout.
inline LayerCost layer_cost(const LayerSpec& layer, const FlopConvention& conv = {}) {
    const std::int64_t outputs = checked_mul(layer.output_len, layer.output_channels);
    LayerCost cost;
    switch (layer.kind) {
        case LayerKind::conv1d:
            cost.flops = static_cast<double>(outputs) *
                         (conv.mac_flops * static_cast<double>(checked_mul(layer.kernel_size, layer.in_channels)) +
                          conv.activation_flops_per_output);
            cost.params = checked_mul(checked_mul(layer.kernel_size, layer.in_channels), layer.output_channels);
            if (layer.has_bias) cost.params = checked_add(cost.params, layer.output_channels);
            break;
        case LayerKind::pool1d:
            cost.flops = static_cast<double>(outputs) * conv.pool_flops_per_tap *
                         static_cast<double>(layer.kernel_size);
            break;
        case LayerKind::global_avg_pool:
            cost.flops = static_cast<double>(outputs) * conv.gap_flops_per_input *
                         static_cast<double>(layer.kernel_size);
            break;
        case LayerKind::dropout:
            cost.flops = static_cast<double>(outputs) * conv.dropout_flops_per_output;
            break;
        case LayerKind::fully_connected:
            cost.flops = static_cast<double>(outputs) *
                         (conv.mac_flops * static_cast<double>(layer.in_channels) +
                          conv.activation_flops_per_output);
            cost.params = checked_mul(layer.in_channels, outputs);
            if (layer.has_bias) cost.params = checked_add(cost.params, outputs);
            break;
    }
    if (!std::isfinite(cost.flops) || cost.flops < 0)
        throw std::overflow_error("layer compute load is not finite");
    return cost;
}

/// The three per-layer profiling curves of a network, indexed by cut
/// position: cumulative client-side compute load per sample, activation
/// scalars crossing the link at each layer's output, and cumulative
/// client-side parameter scalars. All values are scalar counts or raw
/// FLOPs; conversion to bits happens downstream, so scalar_bits is
/// carried along without rescaling anything here.
struct NetworkProfile {
    std::vector<LayerKind> kinds;
    std::vector<double> layer_flops;              // per-layer load
    std::vector<double> cumulative_flops;         // client load through layer i
    std::vector<std::int64_t> activations;        // scalars at layer i output
    std::vector<std::int64_t> layer_params;       // per-layer parameters
    std::vector<std::int64_t> cumulative_params;  // client parameters through layer i
    double total_flops = 0;
    int scalar_bits = 32;

    int layer_count() const { return static_cast<int>(kinds.size()); }

    // 1-based accessors, matching cut-layer indexing.
    double client_load(int layer) const { return cumulative_flops[check(layer)]; }
    double server_load(int layer) const { return total_flops - client_load(layer); }
    std::int64_t activation_count(int layer) const { return activations[check(layer)]; }
    std::int64_t client_params(int layer) const { return cumulative_params[check(layer)]; }

  private:
    std::size_t check(int layer) const {
        assert(layer >= 1 && layer <= layer_count());
        return static_cast<std::size_t>(layer - 1);
    }
};

inline NetworkProfile build_profile(const ArchitectureSpec& arch,
                                    const FlopConvention& conv = {},
                                    int scalar_bits = 32) {
    if (arch.layers.empty())
        throw std::invalid_argument("cannot profile an empty architecture");
    if (scalar_bits < 1)
        throw std::invalid_argument("scalar_bits must be positive");

    NetworkProfile p;
    p.scalar_bits = scalar_bits;
    double flops_sum = 0;
    std::int64_t param_sum = 0;
    for (const auto& layer : arch.layers) {
        const LayerCost cost = layer_cost(layer, conv);
        flops_sum += cost.flops;
        param_sum = checked_add(param_sum, cost.params);
        p.kinds.push_back(layer.kind);
        p.layer_flops.push_back(cost.flops);
        p.cumulative_flops.push_back(flops_sum);
        p.activations.push_back(checked_mul(layer.output_len, layer.output_channels));
        p.layer_params.push_back(cost.params);
        p.cumulative_params.push_back(param_sum);
    }
    if (!std::isfinite(flops_sum))
        throw std::overflow_error("total compute load is not finite");
    p.total_flops = flops_sum;
    return p;
}

/// Hash keying derived artifacts (region-table files) to both the
/// architecture and the cost convention they were computed under.
inline std::uint64_t profile_key_hash(const ArchitectureSpec& arch,
                                      const FlopConvention& conv = {}) {
    std::string key = canonical_architecture(arch);
    key += '|';
    key += format_double(conv.mac_flops) + ',' + format_double(conv.pool_flops_per_tap) +
           ',' + format_double(conv.gap_flops_per_input) + ',' +
           format_double(conv.dropout_flops_per_output) + ',' +
           format_double(conv.activation_flops_per_output);
    return fnv1a64(key);
}

inline void write_profile_csv(const NetworkProfile& p, std::ostream& out) {
    out << "layer_index,kind,l_flops,L_k,N_k,N_p,N_c\n";
    for (int i = 1; i <= p.layer_count(); ++i) {
        const auto idx = static_cast<std::size_t>(i - 1);
        out << i << ',' << to_string(p.kinds[idx]) << ','
            << format_double(p.layer_flops[idx]) << ','
            << format_double(p.cumulative_flops[idx]) << ','
            << p.activations[idx] << ',' << p.layer_params[idx] << ','
            << p.cumulative_params[idx] << '\n';
    }
}

}  // namespace splitpoint
