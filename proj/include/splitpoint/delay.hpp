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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>

#include "splitpoint/profile.hpp"

namespace splitpoint {

/// Live system resources: client and server compute speeds in FLOPs/s,
/// link rate in bits/s. The link is treated as a reciprocal fixed-rate
/// pipe within one epoch.
struct ResourceState {
    double client_flops_per_sec = 0;  // f_k
    double server_flops_per_sec = 0;  // f_s
    double link_bits_per_sec = 0;     // R

    /// Server/client speed ratio.
    double speed_ratio() const { return server_flops_per_sec / client_flops_per_sec; }

    /// Fraction of client compute time saved per offloaded FLOP,
    /// (ratio - 1) / ratio. Positive only when the server is faster.
    double speed_gain() const {
        const double a = speed_ratio();
        return (a - 1.0) / a;
    }

    /// The scalar that fully determines the delay-optimal cut for a fixed
    /// profile: speed_gain * link rate / client speed, in bits per FLOP.
    double bits_per_flop() const {
        return speed_gain() * link_bits_per_sec / client_flops_per_sec;
    }

    void validate() const {
        if (!(client_flops_per_sec > 0) || !(server_flops_per_sec > 0))
            throw std::invalid_argument("compute speeds must be positive");
        if (!(link_bits_per_sec > 0))
            throw std::invalid_argument("link rate must be positive");
    }
};

/// How the number of batches per epoch is counted. `exact` uses the
/// literal ratio dataset/batch even when it is fractional; `whole` rounds
/// up to full batches, which is what a real training loop executes.
enum class BatchMode { exact, whole };

struct TrainingConfig {
    std::int64_t dataset_size = 0;  // samples per client
    std::int64_t batch_size = 0;    // samples per batch
    int clients = 1;
    int rounds = 1;
    int epochs_per_round = 1;
    BatchMode batch_mode = BatchMode::exact;

    void validate() const {
        if (dataset_size < 1 || batch_size < 1)
            throw std::invalid_argument("dataset and batch sizes must be positive");
        if (clients < 1 || rounds < 1 || epochs_per_round < 1)
            throw std::invalid_argument("clients, rounds and epochs must be positive");
    }
};

inline double batches_per_epoch(const TrainingConfig& cfg) {
    if (cfg.batch_mode == BatchMode::exact)
        return static_cast<double>(cfg.dataset_size) / static_cast<double>(cfg.batch_size);
    return static_cast<double>((cfg.dataset_size + cfg.batch_size - 1) / cfg.batch_size);
}

/// Per-epoch delay split into its four components, all in seconds.
/// epoch_s = 2 * batches * (client + transfer + server) + 2 * sync.
struct DelayBreakdown {
    int cut = 0;
    double client_compute_s = 0;       // one forward pass of the client segment, per batch
    double server_compute_s = 0;       // same for the server segment
    double activation_transfer_s = 0;  // cut-layer activations for one batch
    double sync_transfer_s = 0;        // client-side parameters, one direction
    double epoch_s = 0;
};

namespace detail {
inline void check_cut(const NetworkProfile& profile, int cut) {
    const int last = profile.layer_count();
    if (cut < 1 || cut >= last)
        throw std::invalid_argument(
            "cut layer must lie in [1, " + std::to_string(last - 1) +
            "]; the final layer would leave the whole model on the client");
}
}  // namespace detail

/// Client and server computation delays for one batch, in seconds.
inline std::pair<double, double> compute_delays(const NetworkProfile& profile, int cut,
                                                const ResourceState& res,
                                                const TrainingConfig& cfg) {
    detail::check_cut(profile, cut);
    res.validate();
    cfg.validate();
    const double batch = static_cast<double>(cfg.batch_size);
    const double client = profile.client_load(cut) * batch / res.client_flops_per_sec;
    const double server = profile.server_load(cut) * batch / res.server_flops_per_sec;
    return {client, server};
}

/// Activation transfer per batch and parameter-sync transfer per
/// direction, in seconds. Scalar counts convert to bits here.
inline std::pair<double, double> transmission_delays(const NetworkProfile& profile, int cut,
                                                     const ResourceState& res,
                                                     const TrainingConfig& cfg) {
    detail::check_cut(profile, cut);
    res.validate();
    cfg.validate();
    const double bits = static_cast<double>(profile.scalar_bits);
    const double activation = static_cast<double>(profile.activation_count(cut)) * bits *
                              static_cast<double>(cfg.batch_size) / res.link_bits_per_sec;
    const double sync = static_cast<double>(profile.client_params(cut)) * bits /
                        res.link_bits_per_sec;
    return {activation, sync};
}

inline DelayBreakdown epoch_delay(const NetworkProfile& profile, int cut,
                                  const ResourceState& res, const TrainingConfig& cfg) {
    const auto [client, server] = compute_delays(profile, cut, res, cfg);
    const auto [activation, sync] = transmission_delays(profile, cut, res, cfg);
    DelayBreakdown d;
    d.cut = cut;
    d.client_compute_s = client;
    d.server_compute_s = server;
    d.activation_transfer_s = activation;
    d.sync_transfer_s = sync;
    d.epoch_s = 2.0 * batches_per_epoch(cfg) * (client + activation + server) + 2.0 * sync;
    return d;
}

}  // namespace splitpoint
