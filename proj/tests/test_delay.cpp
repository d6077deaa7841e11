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

#include <catch2/catch_amalgamated.hpp>

#include "splitpoint/delay.hpp"
#include "splitpoint/selectors.hpp"
#include "support.hpp"

using namespace splitpoint;
using Catch::Approx;

namespace {
TrainingConfig table1_config() {
    TrainingConfig cfg;
    cfg.dataset_size = test::kTable2Dataset;
    cfg.batch_size = 100;
    return cfg;
}
}  // namespace

TEST_CASE("computation delays") {
    const NetworkProfile p = test::table2_profile();
    const TrainingConfig cfg = table1_config();
    const ResourceState res{2.8e9, 9.3e10, 20e6};

    SECTION("plug-in value at the pooling layer") {
        const auto [client, server] = compute_delays(p, 3, res, cfg);
        CHECK(client == Approx(508272000.0 * 100 / 2.8e9).epsilon(1e-15));
        CHECK(server == Approx((620292800.0 - 508272000.0) * 100 / 9.3e10).epsilon(1e-15));
    }
    SECTION("zero-cost layer adds no client time") {
        const auto [at6, s6] = compute_delays(p, 6, res, cfg);
        const auto [at7, s7] = compute_delays(p, 7, res, cfg);
        CHECK(at6 == at7);
        CHECK(s6 == s7);
    }
    SECTION("an arbitrarily fast server removes the server term") {
        const auto [client, server] =
            compute_delays(p, 3, ResourceState{2.8e9, 1e300, 20e6}, cfg);
        CHECK(server < 1e-280);
        CHECK(client > 0);
    }
    SECTION("the final layer is not a cut") {
        CHECK_THROWS_AS(compute_delays(p, 8, res, cfg), std::invalid_argument);
        CHECK_THROWS_AS(compute_delays(p, 0, res, cfg), std::invalid_argument);
    }
}

TEST_CASE("transmission delays") {
    const NetworkProfile p = test::table2_profile();
    const TrainingConfig cfg = table1_config();

    SECTION("activation transfer at the global pool") {
        const auto [activation, sync] = transmission_delays(p, 6, ResourceState{1, 2, 20e6}, cfg);
        CHECK(activation == 0.032);  // 200 scalars * 32 bit * 100 samples / 20 Mbps
        CHECK(sync == Approx(964000.0 * 32 / 20e6).epsilon(1e-15));
    }
    SECTION("no parameters, no sync cost") {
        const auto arch = parse_architecture(
            R"({"input": {"len": 16, "channels": 1},
                "layers": [{"kind": "pool1d", "kernel": 2},
                           {"kind": "fully_connected", "out_features": 2}]})");
        const NetworkProfile pool_first = build_profile(arch);
        TrainingConfig small = cfg;
        small.dataset_size = 16;
        small.batch_size = 4;
        const auto [activation, sync] =
            transmission_delays(pool_first, 1, ResourceState{1, 2, 1e6}, small);
        CHECK(sync == 0.0);
        CHECK(activation > 0);
    }
    SECTION("doubling the rate halves both transfers") {
        const ResourceState base{1, 2, 20e6};
        const ResourceState fast{1, 2, 40e6};
        const auto [a1, s1] = transmission_delays(p, 4, base, cfg);
        const auto [a2, s2] = transmission_delays(p, 4, fast, cfg);
        CHECK(a2 == a1 / 2);
        CHECK(s2 == s1 / 2);
    }
    SECTION("nonpositive rate is rejected") {
        CHECK_THROWS_AS(transmission_delays(p, 3, ResourceState{1, 2, 0}, cfg),
                        std::invalid_argument);
        CHECK_THROWS_AS(transmission_delays(p, 3, ResourceState{1, 2, -5}, cfg),
                        std::invalid_argument);
    }
}

TEST_CASE("epoch delay assembly") {
    SECTION("formula instantiation: 0.1 s per batch, 100 batches, 0.5 s sync") {
        // Crafted so the batch terms sum to 0.1 s and sync is 0.5 s.
        NetworkProfile p;
        p.kinds = {LayerKind::conv1d, LayerKind::conv1d};
        p.layer_flops = {5e6, 4e6};
        p.cumulative_flops = {5e6, 9e6};
        p.activations = {1875, 10};
        p.layer_params = {3125000, 0};
        p.cumulative_params = {3125000, 3125000};
        p.total_flops = 9e6;
        TrainingConfig cfg;
        cfg.dataset_size = 10000;
        cfg.batch_size = 100;
        const ResourceState res{1e10, 2e10, 2e8};
        const DelayBreakdown d = epoch_delay(p, 1, res, cfg);
        CHECK(d.client_compute_s + d.activation_transfer_s + d.server_compute_s ==
              Approx(0.1).epsilon(1e-12));
        CHECK(d.sync_transfer_s == Approx(0.5).epsilon(1e-12));
        CHECK(d.epoch_s == Approx(21.0).epsilon(1e-12));
    }
    SECTION("one batch covers the whole dataset") {
        const NetworkProfile p = test::table2_profile();
        TrainingConfig cfg;
        cfg.dataset_size = 400;
        cfg.batch_size = 400;
        const ResourceState res{2.8e9, 9.3e10, 20e6};
        const DelayBreakdown d = epoch_delay(p, 2, res, cfg);
        CHECK(d.epoch_s ==
              2.0 * (d.client_compute_s + d.activation_transfer_s + d.server_compute_s) +
                  2.0 * d.sync_transfer_s);
    }
    SECTION("deep cut wins when the link is the bottleneck") {
        const NetworkProfile p = test::table2_profile();
        const TrainingConfig cfg = table1_config();
        // bits/FLOP of 1e-3 falls in the deepest region of this network
        const double fk = 2.8e9, gain = 0.5;
        const ResourceState res{fk, fk / (1.0 - gain), 1e-3 * fk / gain};
        CHECK(epoch_delay(p, 6, res, cfg).epoch_s < epoch_delay(p, 1, res, cfg).epoch_s);
    }
    SECTION("whole-batch mode rounds the batch count up") {
        const NetworkProfile p = test::table2_profile();
        TrainingConfig cfg = table1_config();
        CHECK(batches_per_epoch(cfg) == Approx(99.92));
        cfg.batch_mode = BatchMode::whole;
        CHECK(batches_per_epoch(cfg) == 100.0);
    }
}

TEST_CASE("delay ranking depends on resources only through bits/FLOP") {
    const NetworkProfile p = test::table2_profile();
    const TrainingConfig cfg = table1_config();
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> log_theta(-5.0, 2.0);

    SECTION("common scaling of all resources preserves the minimizer") {
        for (int trial = 0; trial < 200; ++trial) {
            const double theta = std::pow(10.0, log_theta(rng));
            const ResourceState res = test::resource_for(theta, rng);
            for (const double scale : {0.5, 3.0, 1000.0}) {
                const ResourceState scaled{res.client_flops_per_sec * scale,
                                           res.server_flops_per_sec * scale,
                                           res.link_bits_per_sec * scale};
                CHECK(exhaustive_optimal(p, res, cfg).first ==
                      exhaustive_optimal(p, scaled, cfg).first);
                CHECK(epoch_delay(p, 3, scaled, cfg).epoch_s ==
                      Approx(epoch_delay(p, 3, res, cfg).epoch_s / scale).epsilon(1e-12));
            }
        }
    }
    SECTION("states sharing bits/FLOP share the minimizer") {
        for (int trial = 0; trial < 200; ++trial) {
            const double theta = std::pow(10.0, log_theta(rng));
            const ResourceState a = test::resource_for(theta, rng);
            const ResourceState b = test::resource_for(theta, rng);
            CHECK(exhaustive_optimal(p, a, cfg).first == exhaustive_optimal(p, b, cfg).first);
        }
    }
}

TEST_CASE("delay decreases in every resource component") {
    const NetworkProfile p = test::table2_profile();
    const TrainingConfig cfg = table1_config();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> log_theta(-5.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        const ResourceState res = test::resource_for(std::pow(10.0, log_theta(rng)), rng);
        for (int cut : {1, 3, 6}) {
            const double base = epoch_delay(p, cut, res, cfg).epoch_s;
            ResourceState faster = res;
            faster.client_flops_per_sec *= 2;
            CHECK(epoch_delay(p, cut, faster, cfg).epoch_s < base);
            faster = res;
            faster.server_flops_per_sec *= 2;
            CHECK(epoch_delay(p, cut, faster, cfg).epoch_s < base);
            faster = res;
            faster.link_bits_per_sec *= 2;
            CHECK(epoch_delay(p, cut, faster, cfg).epoch_s < base);
        }
    }
}

TEST_CASE("delay breakdown satisfies the epoch identity") {
    const NetworkProfile p = test::table2_profile();
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> log_theta(-5.0, 2.0);
    for (const BatchMode mode : {BatchMode::exact, BatchMode::whole}) {
        TrainingConfig cfg = table1_config();
        cfg.batch_mode = mode;
        for (int trial = 0; trial < 100; ++trial) {
            const ResourceState res = test::resource_for(std::pow(10.0, log_theta(rng)), rng);
            for (int cut = 1; cut < p.layer_count(); ++cut) {
                const DelayBreakdown d = epoch_delay(p, cut, res, cfg);
                CHECK(d.epoch_s == 2.0 * batches_per_epoch(cfg) *
                                           (d.client_compute_s + d.activation_transfer_s +
                                            d.server_compute_s) +
                                       2.0 * d.sync_transfer_s);
                CHECK(d.client_compute_s >= 0);
                CHECK(d.server_compute_s >= 0);
                CHECK(d.activation_transfer_s >= 0);
                CHECK(d.sync_transfer_s >= 0);
            }
        }
    }
}
