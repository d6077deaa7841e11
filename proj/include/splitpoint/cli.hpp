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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitpoint/montecarlo.hpp"
#include "splitpoint/simulate.hpp"

namespace splitpoint::cli {

namespace detail {

inline void write_text_or_file(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out)
        throw std::runtime_error("cannot write output file: " + out_path);
    out << text;
}

inline std::optional<std::uint64_t> env_seed_override() {
    const char* env = std::getenv("SPLITPOINT_SEED");
    if (!env) return std::nullopt;
    std::uint64_t seed = 0;
    const std::string s(env);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw std::invalid_argument("SPLITPOINT_SEED is not an unsigned integer: " + s);
    return seed;
}

/// "lo:hi:n" into n evenly spaced values, inclusive.
inline std::vector<double> parse_grid(const std::string& spec) {
    double lo = 0, hi = 0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(spec);
    if (!(ss >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || !ss.eof() || n < 1 ||
        !(lo > 0) || hi < lo)
        throw std::invalid_argument("grid must be lo:hi:n with 0 < lo <= hi, n >= 1: " + spec);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n));
    if (n == 1) {
        values.push_back(lo);
        return values;
    }
    for (int i = 0; i < n; ++i)
        values.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
    return values;
}

struct ArchOptions {
    std::string arch_path;
    int scalar_bits = 32;
    FlopConvention convention;

    NetworkProfile profile() const {
        return build_profile(load_architecture(arch_path), convention, scalar_bits);
    }
    std::uint64_t key_hash() const {
        return profile_key_hash(load_architecture(arch_path), convention);
    }
};

inline void add_arch_flags(CLI::App* cmd, ArchOptions& opts, bool required = true) {
    auto* a = cmd->add_option("--arch", opts.arch_path, "architecture JSON file");
    if (required) a->required();
    cmd->add_option("--scalar-bits", opts.scalar_bits, "bits per transmitted scalar")
        ->default_val(32);
    cmd->add_option("--mac-flops", opts.convention.mac_flops,
                    "FLOPs per multiply-add (conv1d, fully_connected)");
    cmd->add_option("--pool-flops", opts.convention.pool_flops_per_tap,
                    "FLOPs per pooling tap");
    cmd->add_option("--gap-flops", opts.convention.gap_flops_per_input,
                    "FLOPs per global-average-pool input");
    cmd->add_option("--dropout-flops", opts.convention.dropout_flops_per_output,
                    "FLOPs per dropout output");
    cmd->add_option("--activation-flops", opts.convention.activation_flops_per_output,
                    "FLOPs per activation-function output");
}

}  // namespace detail

// --- subcommand runners -------------------------------------------------

inline int run_profile(const detail::ArchOptions& arch, const std::string& out_path,
                       bool json) {
    const NetworkProfile p = arch.profile();
    if (json) {
        nlohmann::json j;
        j["scalar_bits"] = p.scalar_bits;
        j["L_total"] = p.total_flops;
        auto& layers = j["layers"] = nlohmann::json::array();
        for (int i = 1; i <= p.layer_count(); ++i) {
            const auto idx = static_cast<std::size_t>(i - 1);
            layers.push_back({{"index", i},
                              {"kind", to_string(p.kinds[idx])},
                              {"l_flops", p.layer_flops[idx]},
                              {"L_k", p.cumulative_flops[idx]},
                              {"N_k", p.activations[idx]},
                              {"N_p", p.layer_params[idx]},
                              {"N_c", p.cumulative_params[idx]}});
        }
        detail::write_text_or_file(j.dump(2) + "\n", out_path);
    } else {
        std::ostringstream csv;
        write_profile_csv(p, csv);
        detail::write_text_or_file(csv.str(), out_path);
    }
    return 0;
}

inline int run_prune(const detail::ArchOptions& arch, std::int64_t dataset_size, bool json) {
    const NetworkProfile p = arch.profile();
    const CandidateSet step1 = prune_profile_function(p, dataset_size);
    const CandidateSet step2 = prune_tradeoff(step1, p, dataset_size);
    if (json) {
        nlohmann::json j{{"after_step1", step1.layers}, {"after_step2", step2.layers}};
        std::cout << j.dump(2) << '\n';
    } else {
        const auto print = [](const char* label, const std::vector<int>& layers) {
            std::cout << label;
            for (int l : layers) std::cout << ' ' << l;
            std::cout << '\n';
        };
        print("after_step1:", step1.layers);
        print("after_step2:", step2.layers);
    }
    return 0;
}

inline int run_regions(const detail::ArchOptions& arch, std::int64_t dataset_size,
                       const std::string& out_path, bool json) {
    const NetworkProfile p = arch.profile();
    const SplitRegionTable table = build_region_table(p, dataset_size, arch.key_hash());
    if (!out_path.empty()) save_region_table(table, out_path);
    if (json) {
        std::cout << region_table_to_json(table).dump(2) << '\n';
    } else {
        std::cout << "layer theta_low theta_high (bits/FLOP)\n";
        for (const auto& e : table.entries)
            std::cout << e.layer << ' ' << format_double(e.theta_low) << ' '
                      << format_double(e.theta_high) << '\n';
    }
    return 0;
}

struct SelectOptions {
    std::string table_path;
    std::int64_t dataset_size = 0;
    std::int64_t batch_size = 100;
    std::string strategy = "ocla";
    double theta = 0;
    double fk = 0, fs = 0, rate = 0;
};

inline int run_select(const detail::ArchOptions& arch, const SelectOptions& opts, bool json) {
    const SelectorKind kind = SelectorKind::parse(opts.strategy);
    const bool have_resources = opts.fk > 0 || opts.fs > 0 || opts.rate > 0;
    const bool have_theta = opts.theta > 0;
    if (have_resources && (!(opts.fk > 0) || !(opts.fs > 0) || !(opts.rate > 0)))
        throw std::invalid_argument("--fk, --fs and --rate must be given together");

    nlohmann::json j{{"strategy", kind.name()}};
    int layer = 0;
    switch (kind.strategy) {
        case SelectorKind::Strategy::ocla: {
            SplitRegionTable table;
            if (!opts.table_path.empty()) {
                table = load_region_table(opts.table_path);
            } else if (!arch.arch_path.empty() && opts.dataset_size > 0) {
                table = build_region_table(arch.profile(), opts.dataset_size, arch.key_hash());
            } else {
                throw std::invalid_argument("ocla needs --table, or --arch with --dk");
            }
            double theta = 0;
            if (have_theta && have_resources)
                throw std::invalid_argument("give either --theta or resource flags, not both");
            if (have_theta) {
                theta = opts.theta;
                layer = table.lookup(theta);
            } else if (have_resources) {
                const ResourceState res{opts.fk, opts.fs, opts.rate};
                layer = select_cut_layer(table, res);
                theta = res.bits_per_flop();
            } else {
                throw std::invalid_argument("ocla needs --theta or --fk/--fs/--rate");
            }
            j["theta"] = theta;
            break;
        }
        case SelectorKind::Strategy::exhaustive: {
            if (arch.arch_path.empty() || opts.dataset_size <= 0 || !have_resources)
                throw std::invalid_argument(
                    "exhaustive needs --arch, --dk and --fk/--fs/--rate");
            TrainingConfig cfg;
            cfg.dataset_size = opts.dataset_size;
            cfg.batch_size = opts.batch_size;
            const ResourceState res{opts.fk, opts.fs, opts.rate};
            const auto [best, delay] = exhaustive_optimal(arch.profile(), res, cfg);
            layer = best;
            j["epoch_s"] = delay.epoch_s;
            j["tau_k"] = delay.client_compute_s;
            j["tau_s"] = delay.server_compute_s;
            j["t0"] = delay.activation_transfer_s;
            j["tp"] = delay.sync_transfer_s;
            break;
        }
        case SelectorKind::Strategy::naive: {
            if (arch.arch_path.empty())
                throw std::invalid_argument("naive needs --arch to validate the layer");
            layer = naive_select(kind, arch.profile());
            break;
        }
    }
    j["layer"] = layer;
    if (json)
        std::cout << j.dump(2) << '\n';
    else
        std::cout << layer << '\n';
    return 0;
}

struct SimulateOptions {
    std::string config_path;
    std::string out_path;
    std::string trace_path;
    std::string metric = "loss";
    std::string curve_out;
};

inline int run_simulate(const SimulateOptions& opts, bool json) {
    SimulationScenario scenario = load_simulation_scenario(opts.config_path);
    if (const auto seed = detail::env_seed_override()) scenario.config.seed = *seed;

    const NetworkProfile profile =
        build_profile(scenario.arch, FlopConvention{}, scenario.scalar_bits);
    SplitRegionTable table;  // rebuilt inside the simulator when the selector needs it
    const Timeline timeline = simulate_training(profile, table, scenario.config);

    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        if (!out)
            throw std::runtime_error("cannot write timeline: " + opts.out_path);
        write_timeline_csv(timeline, out);
    }

    if (!opts.trace_path.empty()) {
        if (opts.curve_out.empty())
            throw std::invalid_argument("--trace needs --curve-out");
        const LossTrace trace = read_loss_trace(opts.trace_path);
        const auto& series = opts.metric == "accuracy" ? trace.accuracy : trace.loss;
        if (opts.metric != "loss" && opts.metric != "accuracy")
            throw std::invalid_argument("--metric must be loss or accuracy");
        const auto curve = attach_loss_trace(timeline, series);
        std::ofstream out(opts.curve_out);
        if (!out)
            throw std::runtime_error("cannot write curve: " + opts.curve_out);
        out << "seconds,value\n";
        for (const auto& [seconds, value] : curve)
            out << format_double(seconds) << ',' << format_double(value) << '\n';
    }

    if (json) {
        nlohmann::json j;
        j["selector"] = scenario.config.selector.name();
        j["seed"] = scenario.config.seed;
        j["epochs"] = timeline.events.size();
        j["total_s"] = timeline.total_s;
        j["round_elapsed_s"] = timeline.round_elapsed_s;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "epochs: " << timeline.events.size() << '\n'
                  << "total_s: " << format_double(timeline.total_s) << '\n';
    }
    return 0;
}

struct McGainOptions {
    std::int64_t dataset_size = 0;
    std::string grid = "0.01:0.5:10";
    std::string ratio_grid;  // defaults to --grid
    int iterations = 1000;
    int samples = 300;
    std::uint64_t seed = 0;
    int naive_layer = 3;
    double fk = 0;  // 0 = calibrate for the naive layer
    double mean_rate = 20e6;
    double mean_ratio = 0.03;
    unsigned threads = 0;
    std::string out_path;
};

inline int run_mc_gain(const detail::ArchOptions& arch, const McGainOptions& opts,
                       bool json) {
    const NetworkProfile profile = arch.profile();
    const SplitRegionTable table =
        build_region_table(profile, opts.dataset_size, arch.key_hash());

    MonteCarloConfig cfg;
    cfg.iterations = opts.iterations;
    cfg.samples_per_iteration = opts.samples;
    cfg.rate_cvs = detail::parse_grid(opts.grid);
    cfg.ratio_cvs = detail::parse_grid(opts.ratio_grid.empty() ? opts.grid : opts.ratio_grid);
    cfg.mean_rate = opts.mean_rate;
    cfg.mean_inverse_speed_ratio = opts.mean_ratio;
    cfg.naive_layer = opts.naive_layer;
    cfg.seed = opts.seed;
    cfg.threads = opts.threads;
    cfg.client_flops_per_sec =
        opts.fk > 0 ? opts.fk
                    : calibrate_client_speed(table, opts.naive_layer, opts.mean_rate,
                                             opts.mean_ratio);
    if (const auto seed = detail::env_seed_override()) cfg.seed = *seed;

    const GainSurface surface = run_gain_grid(profile, table, cfg);

    std::ostringstream csv;
    write_surface_csv(surface, csv);
    if (!opts.out_path.empty()) detail::write_text_or_file(csv.str(), opts.out_path);

    if (json) {
        nlohmann::json j;
        j["client_flops_per_sec"] = cfg.client_flops_per_sec;
        j["seed"] = cfg.seed;
        auto& cells = j["cells"] = nlohmann::json::array();
        for (const auto& c : surface.cells)
            cells.push_back({{"r_cv", c.rate_cv},
                             {"beta_cv", c.ratio_cv},
                             {"a_ocla", c.a_ocla},
                             {"a_naive", c.a_naive},
                             {"gain", c.gain},
                             {"stderr", c.gain_stderr},
                             {"scored_draws", c.scored_draws},
                             {"rejected_draws", c.rejected_draws}});
        std::cout << j.dump(2) << '\n';
    } else if (opts.out_path.empty()) {
        std::cout << csv.str();
    }
    return 0;
}

inline int run_calibrate_fk(const detail::ArchOptions& arch, std::int64_t dataset_size,
                            int layer, double mean_rate, double mean_ratio, bool json) {
    const SplitRegionTable table =
        build_region_table(arch.profile(), dataset_size, arch.key_hash());
    const double fk = calibrate_client_speed(table, layer, mean_rate, mean_ratio);
    if (json) {
        nlohmann::json j{{"client_flops_per_sec", fk},
                         {"target_layer", layer},
                         {"mean_rate", mean_rate},
                         {"mean_inverse_speed_ratio", mean_ratio}};
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << format_double(fk) << '\n';
    }
    return 0;
}

// --- entry point ----------------------------------------------------------

inline int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Cut-layer planning and training-delay simulation for split learning"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --json appear after the subcommand as well
    bool json = false;
    app.add_flag("--json", json, "machine-readable output")->configurable(false);

    detail::ArchOptions profile_arch;
    std::string profile_out;
    auto* profile_cmd = app.add_subcommand("profile", "per-layer load/activation/parameter curves");
    detail::add_arch_flags(profile_cmd, profile_arch);
    profile_cmd->add_option("--out", profile_out, "write CSV (or JSON with --json) here");

    detail::ArchOptions prune_arch;
    std::int64_t prune_dk = 0;
    auto* prune_cmd = app.add_subcommand("prune", "candidate cut layers after each pruning step");
    detail::add_arch_flags(prune_cmd, prune_arch);
    prune_cmd->add_option("--dk", prune_dk, "client dataset size, samples")->required();

    detail::ArchOptions regions_arch;
    std::int64_t regions_dk = 0;
    std::string regions_out;
    auto* regions_cmd = app.add_subcommand("regions", "split-region table over bits/FLOP");
    detail::add_arch_flags(regions_cmd, regions_arch);
    regions_cmd->add_option("--dk", regions_dk, "client dataset size, samples")->required();
    regions_cmd->add_option("--out", regions_out, "write the region-table JSON here");

    detail::ArchOptions select_arch;
    SelectOptions select_opts;
    auto* select_cmd = app.add_subcommand("select", "pick a cut layer");
    detail::add_arch_flags(select_cmd, select_arch, /*required=*/false);
    select_cmd->add_option("--table", select_opts.table_path, "region-table JSON file");
    select_cmd->add_option("--dk", select_opts.dataset_size, "client dataset size, samples");
    select_cmd->add_option("--bk", select_opts.batch_size, "batch size (exhaustive delays)");
    select_cmd->add_option("--strategy", select_opts.strategy,
                           "ocla | exhaustive | naive:<layer>");
    select_cmd->add_option("--theta", select_opts.theta, "bits/FLOP value to look up");
    select_cmd->add_option("--fk", select_opts.fk, "client speed, FLOPs/s");
    select_cmd->add_option("--fs", select_opts.fs, "server speed, FLOPs/s");
    select_cmd->add_option("--rate", select_opts.rate, "link rate, bits/s");

    SimulateOptions sim_opts;
    auto* sim_cmd = app.add_subcommand("simulate", "sequential multi-client training timeline");
    sim_cmd->add_option("--config", sim_opts.config_path, "simulation config JSON")->required();
    sim_cmd->add_option("--out", sim_opts.out_path, "write the timeline CSV here");
    sim_cmd->add_option("--trace", sim_opts.trace_path, "per-epoch loss/accuracy CSV");
    sim_cmd->add_option("--metric", sim_opts.metric, "trace column to plot: loss | accuracy");
    sim_cmd->add_option("--curve-out", sim_opts.curve_out, "write (seconds,value) CSV here");

    detail::ArchOptions mc_arch;
    McGainOptions mc_opts;
    auto* mc_cmd = app.add_subcommand("mc-gain", "selection-rate gain over a cv grid");
    detail::add_arch_flags(mc_cmd, mc_arch);
    mc_cmd->add_option("--dk", mc_opts.dataset_size, "client dataset size, samples")->required();
    mc_cmd->add_option("--grid", mc_opts.grid, "cv grid lo:hi:n (both axes)");
    mc_cmd->add_option("--ratio-grid", mc_opts.ratio_grid, "separate grid for the ratio cv");
    mc_cmd->add_option("--iterations", mc_opts.iterations, "Monte Carlo iterations per cell");
    mc_cmd->add_option("--samples", mc_opts.samples, "resource draws per iteration");
    mc_cmd->add_option("--seed", mc_opts.seed, "RNG seed");
    mc_cmd->add_option("--naive-layer", mc_opts.naive_layer, "baseline's fixed layer");
    mc_cmd->add_option("--fk", mc_opts.fk, "client speed; omit to calibrate automatically");
    mc_cmd->add_option("--mean-rate", mc_opts.mean_rate, "mean link rate, bits/s");
    mc_cmd->add_option("--mean-ratio", mc_opts.mean_ratio, "mean f_k/f_s");
    mc_cmd->add_option("--threads", mc_opts.threads, "worker threads (0 = hardware)");
    mc_cmd->add_option("--out", mc_opts.out_path, "write the surface CSV here");

    detail::ArchOptions cal_arch;
    std::int64_t cal_dk = 0;
    int cal_layer = 3;
    double cal_rate = 20e6, cal_ratio = 0.03;
    auto* cal_cmd = app.add_subcommand("calibrate-fk",
                                       "client speed centering bits/FLOP in a layer's region");
    detail::add_arch_flags(cal_cmd, cal_arch);
    cal_cmd->add_option("--dk", cal_dk, "client dataset size, samples")->required();
    cal_cmd->add_option("--layer", cal_layer, "target layer");
    cal_cmd->add_option("--mean-rate", cal_rate, "mean link rate, bits/s");
    cal_cmd->add_option("--mean-ratio", cal_ratio, "mean f_k/f_s");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (profile_cmd->parsed()) return run_profile(profile_arch, profile_out, json);
        if (prune_cmd->parsed()) return run_prune(prune_arch, prune_dk, json);
        if (regions_cmd->parsed()) return run_regions(regions_arch, regions_dk, regions_out, json);
        if (select_cmd->parsed()) return run_select(select_arch, select_opts, json);
        if (sim_cmd->parsed()) return run_simulate(sim_opts, json);
        if (mc_cmd->parsed()) return run_mc_gain(mc_arch, mc_opts, json);
        if (cal_cmd->parsed())
            return run_calibrate_fk(cal_arch, cal_dk, cal_layer, cal_rate, cal_ratio, json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace splitpoint::cli
