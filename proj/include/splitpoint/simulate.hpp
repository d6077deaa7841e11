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

#include <cstdint>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "splitpoint/montecarlo.hpp"
#include "splitpoint/ocla.hpp"
#include "splitpoint/selectors.hpp"

namespace splitpoint {

enum class ResourceSourceKind { fixed, sampled, trace };

/// Where each epoch's resources come from: one fixed state, a fresh draw
/// per client epoch, or a prerecorded sequence.
struct ResourceSource {
    ResourceSourceKind kind = ResourceSourceKind::fixed;
    ResourceState fixed_state;
    ResourceDistribution distribution;   // sampled
    std::vector<ResourceState> trace;    // prerecorded, one per epoch
};

struct SimulationConfig {
    TrainingConfig training;
    SelectorKind selector;
    ResourceSource resources;
    std::uint64_t seed = 0;
};

struct TimelineEvent {
    int round = 0;
    int client = 0;
    int epoch = 0;
    int cut = 0;
    DelayBreakdown delay;
    double elapsed_s = 0;  // wall clock at the end of this epoch
};

struct Timeline {
    std::vector<TimelineEvent> events;
    std::vector<double> round_elapsed_s;  // wall clock at the end of each round
    double total_s = 0;
};

/// Dataset size that the per-epoch delay actually reflects: the literal
/// size under the exact batch ratio, or full batches rounded up when the
/// loop executes whole batches only.
inline std::int64_t effective_dataset_size(const TrainingConfig& cfg) {
    if (cfg.batch_mode == BatchMode::exact) return cfg.dataset_size;
    return checked_mul((cfg.dataset_size + cfg.batch_size - 1) / cfg.batch_size,
                       cfg.batch_size);
}

/// Sequential multi-client training: rounds iterate over clients, each
/// client trains for its epochs, resources are drawn once per client
/// epoch, and the configured selector picks that epoch's cut layer.
///
/// Every epoch pays the full per-epoch delay including both parameter
/// syncs, with two exceptions: the very first epoch skips the initial
/// download (there is nothing to synchronize yet) and the very last skips
/// the closing upload.
///
/// The region-table selector keys its lookup to the effective dataset
/// size, so in whole-batch mode the passed table is rebuilt if it was
/// built for a different size; the result is that each epoch's choice
/// minimizes the delay actually accumulated.
inline Timeline simulate_training(const NetworkProfile& profile,
                                  const SplitRegionTable& table,
                                  const SimulationConfig& cfg) {
    cfg.training.validate();
    const bool use_ocla = cfg.selector.strategy == SelectorKind::Strategy::ocla;

    SplitRegionTable rebuilt;
    const SplitRegionTable* regions = &table;
    if (use_ocla) {
        const std::int64_t effective = effective_dataset_size(cfg.training);
        if (table.entries.empty() || table.dataset_size != effective ||
            table.scalar_bits != profile.scalar_bits) {
            rebuilt = build_region_table(profile, effective, table.arch_hash);
            regions = &rebuilt;
        }
    }

    const std::int64_t total_epochs = static_cast<std::int64_t>(cfg.training.rounds) *
                                      cfg.training.clients * cfg.training.epochs_per_round;
    if (cfg.resources.kind == ResourceSourceKind::trace &&
        std::ssize(cfg.resources.trace) < total_epochs)
        throw std::invalid_argument(
            "resource trace provides " + std::to_string(cfg.resources.trace.size()) +
            " draws but the run needs " + std::to_string(total_epochs));

    Timeline timeline;
    timeline.events.reserve(static_cast<std::size_t>(total_epochs));
    double elapsed = 0;
    std::int64_t counter = 0;
    for (int round = 1; round <= cfg.training.rounds; ++round) {
        for (int client = 1; client <= cfg.training.clients; ++client) {
            for (int epoch = 1; epoch <= cfg.training.epochs_per_round; ++epoch) {
                ResourceState res;
                switch (cfg.resources.kind) {
                    case ResourceSourceKind::fixed:
                        res = cfg.resources.fixed_state;
                        break;
                    case ResourceSourceKind::sampled: {
                        std::mt19937_64 rng = make_rng(
                            cfg.seed, 0x73696du,
                            (static_cast<std::uint64_t>(round) << 32) |
                                static_cast<std::uint32_t>(client),
                            static_cast<std::uint64_t>(epoch));
                        res = sample_resource_state(cfg.resources.distribution, rng);
                        break;
                    }
                    case ResourceSourceKind::trace:
                        res = cfg.resources.trace[static_cast<std::size_t>(counter)];
                        break;
                }

                int cut = 0;
                switch (cfg.selector.strategy) {
                    case SelectorKind::Strategy::ocla:
                        cut = select_cut_layer(*regions, res);
                        break;
                    case SelectorKind::Strategy::exhaustive:
                        cut = exhaustive_optimal(profile, res, cfg.training).first;
                        break;
                    case SelectorKind::Strategy::naive:
                        cut = naive_select(cfg.selector, profile);
                        break;
                }

                DelayBreakdown d = epoch_delay(profile, cut, res, cfg.training);
                double spent = d.epoch_s;
                if (counter == 0) spent -= d.sync_transfer_s;
                if (counter == total_epochs - 1) spent -= d.sync_transfer_s;
                elapsed += spent;
                timeline.events.push_back({round, client, epoch, cut, d, elapsed});
                ++counter;
            }
        }
        timeline.round_elapsed_s.push_back(elapsed);
    }
    timeline.total_s = elapsed;
    return timeline;
}

/// Pairs an externally measured per-epoch series (loss or accuracy) with
/// the simulated wall clock, producing (seconds, value) rows. The series
/// must cover every epoch event; surplus entries are ignored.
inline std::vector<std::pair<double, double>> attach_loss_trace(
    const Timeline& timeline, std::span<const double> series) {
    if (series.size() < timeline.events.size())
        throw std::invalid_argument("series has " + std::to_string(series.size()) +
                                    " entries for " + std::to_string(timeline.events.size()) +
                                    " epoch events");
    std::vector<std::pair<double, double>> curve;
    curve.reserve(timeline.events.size());
    for (std::size_t i = 0; i < timeline.events.size(); ++i)
        curve.emplace_back(timeline.events[i].elapsed_s, series[i]);
    return curve;
}

inline void write_timeline_csv(const Timeline& timeline, std::ostream& out) {
    out << "round,client,cut,tau_k,tau_s,t0,tp,epoch_T,cum_T\n";
    for (const auto& e : timeline.events) {
        out << e.round << ',' << e.client << ',' << e.cut << ','
            << format_double(e.delay.client_compute_s) << ','
            << format_double(e.delay.server_compute_s) << ','
            << format_double(e.delay.activation_transfer_s) << ','
            << format_double(e.delay.sync_transfer_s) << ','
            << format_double(e.delay.epoch_s) << ',' << format_double(e.elapsed_s) << '\n';
    }
}

// --- file ingestion ---------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(std::istream& in,
                                                      const std::string& what) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        rows.push_back(std::move(fields));
    }
    if (rows.empty())
        throw std::invalid_argument(what + ": file is empty");
    return rows;
}

inline double parse_field(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(what + ": cannot parse \"" + s + "\" as a number");
    }
}

}  // namespace detail

/// Loss/accuracy series, CSV `epoch,loss,accuracy` with header.
struct LossTrace {
    std::vector<double> loss;
    std::vector<double> accuracy;
};

inline LossTrace read_loss_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open trace file: " + path);
    const auto rows = detail::read_csv(in, "loss trace " + path);
    if (rows[0].size() < 3 || rows[0][0] != "epoch")
        throw std::invalid_argument("loss trace " + path +
                                    ": expected header epoch,loss,accuracy");
    LossTrace trace;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 3)
            throw std::invalid_argument("loss trace " + path + ": short row " +
                                        std::to_string(i + 1));
        trace.loss.push_back(detail::parse_field(rows[i][1], "loss trace"));
        trace.accuracy.push_back(detail::parse_field(rows[i][2], "loss trace"));
    }
    return trace;
}

/// Prerecorded resources, CSV `fk,fs,rate` with header, one row per epoch.
inline std::vector<ResourceState> read_resource_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open resource trace: " + path);
    const auto rows = detail::read_csv(in, "resource trace " + path);
    if (rows[0].size() < 3 || rows[0][0] != "fk")
        throw std::invalid_argument("resource trace " + path + ": expected header fk,fs,rate");
    std::vector<ResourceState> states;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() < 3)
            throw std::invalid_argument("resource trace " + path + ": short row " +
                                        std::to_string(i + 1));
        ResourceState res;
        res.client_flops_per_sec = detail::parse_field(rows[i][0], "resource trace");
        res.server_flops_per_sec = detail::parse_field(rows[i][1], "resource trace");
        res.link_bits_per_sec = detail::parse_field(rows[i][2], "resource trace");
        res.validate();
        states.push_back(res);
    }
    return states;
}

// --- simulation config files ------------------------------------------

/// Everything a `simulate` run needs, as loaded from its JSON config.
struct SimulationScenario {
    ArchitectureSpec arch;
    int scalar_bits = 32;
    SimulationConfig config;
};

/// Schema:
///   {"arch": "table2.json", "scalar_bits": 32,
///    "dataset_size": 9992, "batch_size": 100,
///    "clients": 10, "rounds": 35, "epochs_per_round": 1,
///    "batch_mode": "whole" | "exact",
///    "selector": "ocla" | "exhaustive" | "naive:<k>",
///    "seed": 42,
///    "resources": {"mode": "fixed", "client_flops_per_sec": ...,
///                  "server_flops_per_sec": ..., "link_bits_per_sec": ...}
///               | {"mode": "sampled", "rate_cv": ..., "ratio_cv": ...,
///                  "mean_rate": ..., "mean_inverse_speed_ratio": ...,
///                  "client_flops_per_sec": ...}
///               | {"mode": "trace", "file": "resources.csv"}}
/// Relative paths resolve against the config file's directory.
inline SimulationScenario load_simulation_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open simulation config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("simulation config " + path + " is not valid JSON: " +
                                    e.what());
    }

    const auto base = std::filesystem::path(path).parent_path();
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp.string() : (base / fp).string();
    };

    SimulationScenario scenario;
    try {
        scenario.arch = load_architecture(resolve(j.at("arch").get<std::string>()));
        scenario.scalar_bits = j.value("scalar_bits", 32);

        auto& sim = scenario.config;
        sim.training.dataset_size = j.at("dataset_size").get<std::int64_t>();
        sim.training.batch_size = j.at("batch_size").get<std::int64_t>();
        sim.training.clients = j.value("clients", 1);
        sim.training.rounds = j.value("rounds", 1);
        sim.training.epochs_per_round = j.value("epochs_per_round", 1);
        const std::string mode = j.value("batch_mode", std::string("whole"));
        if (mode == "whole")
            sim.training.batch_mode = BatchMode::whole;
        else if (mode == "exact")
            sim.training.batch_mode = BatchMode::exact;
        else
            throw std::invalid_argument("batch_mode must be \"whole\" or \"exact\"");
        sim.selector = SelectorKind::parse(j.at("selector").get<std::string>());
        sim.seed = j.value("seed", std::uint64_t{0});

        const auto& rj = j.at("resources");
        const std::string rmode = rj.at("mode").get<std::string>();
        if (rmode == "fixed") {
            sim.resources.kind = ResourceSourceKind::fixed;
            sim.resources.fixed_state.client_flops_per_sec =
                rj.at("client_flops_per_sec").get<double>();
            sim.resources.fixed_state.server_flops_per_sec =
                rj.at("server_flops_per_sec").get<double>();
            sim.resources.fixed_state.link_bits_per_sec =
                rj.at("link_bits_per_sec").get<double>();
            sim.resources.fixed_state.validate();
        } else if (rmode == "sampled") {
            sim.resources.kind = ResourceSourceKind::sampled;
            auto& dist = sim.resources.distribution;
            dist.rate_cv = rj.at("rate_cv").get<double>();
            dist.ratio_cv = rj.at("ratio_cv").get<double>();
            dist.mean_rate = rj.value("mean_rate", 20e6);
            dist.mean_inverse_speed_ratio = rj.value("mean_inverse_speed_ratio", 0.03);
            dist.client_flops_per_sec = rj.at("client_flops_per_sec").get<double>();
            dist.validate();
        } else if (rmode == "trace") {
            sim.resources.kind = ResourceSourceKind::trace;
            sim.resources.trace = read_resource_trace(resolve(rj.at("file").get<std::string>()));
        } else {
            throw std::invalid_argument("resource mode must be fixed, sampled or trace");
        }
        sim.training.validate();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("simulation config " + path + ": " + e.what());
    }
    return scenario;
}

}  // namespace splitpoint
