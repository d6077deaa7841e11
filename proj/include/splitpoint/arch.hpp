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
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitpoint/util.hpp"

namespace splitpoint {

enum class LayerKind { conv1d, pool1d, global_avg_pool, dropout, fully_connected };

inline const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::conv1d: return "conv1d";
        case LayerKind::pool1d: return "pool1d";
        case LayerKind::global_avg_pool: return "global_avg_pool";
        case LayerKind::dropout: return "dropout";
        case LayerKind::fully_connected: return "fully_connected";
    }
    return "?";
}

/// One layer of a 1-D layered network, with its output shape already
/// resolved. The input is pseudo-layer 0 and never appears here.
///
/// kernel_size holds the pooling window for pool1d and the full input
/// length for global_avg_pool (a global pool is a pool whose window spans
/// the input). in_channels holds the flattened input feature count for
/// fully_connected layers.
struct LayerSpec {
    int index = 0;  // 1-based position
    LayerKind kind = LayerKind::conv1d;
    std::int64_t output_len = 0;
    std::int64_t output_channels = 0;
    std::int64_t kernel_size = 0;  // conv/pool/global pool only
    std::int64_t in_channels = 0;  // conv/fc only
    bool has_bias = false;
};

struct ArchitectureSpec {
    std::int64_t input_len = 0;
    std::int64_t input_channels = 0;
    std::vector<LayerSpec> layers;

    int layer_count() const { return static_cast<int>(layers.size()); }
};

namespace detail {

inline std::int64_t get_positive_int(const nlohmann::json& j, const char* key,
                                     const std::string& ctx) {
    if (!j.contains(key))
        throw std::invalid_argument(ctx + ": missing \"" + key + "\"");
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
        throw std::invalid_argument(ctx + ": \"" + key + "\" must be a positive integer");
    return v.get<std::int64_t>();
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> allowed,
                                const std::string& ctx) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw std::invalid_argument(ctx + ": unknown key \"" + it.key() + "\"");
    }
}

}  // namespace detail

/// Parses and validates an architecture document:
///
///   {"input": {"len": 800, "channels": 2},
///    "layers": [{"kind": "conv1d", "kernel": 8, "out_channels": 200, "bias": true},
///               {"kind": "pool1d", "kernel": 8, "stride": 8},
///               ...]}
///
/// Output shapes are chained from the input. A layer may declare an
/// explicit "out_len"; a declared value that disagrees with the chained
/// shape is a shape error. Throws std::invalid_argument on malformed
/// documents, unknown layer kinds, or inconsistent shapes.
inline ArchitectureSpec parse_architecture(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("architecture document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("architecture document must be a JSON object");
    detail::reject_unknown_keys(doc, {"input", "layers", "notes"}, "architecture");
    if (!doc.contains("input") || !doc.contains("layers"))
        throw std::invalid_argument("architecture: needs \"input\" and \"layers\"");

    const auto& input = doc.at("input");
    detail::reject_unknown_keys(input, {"len", "channels"}, "input");
    ArchitectureSpec arch;
    arch.input_len = detail::get_positive_int(input, "len", "input");
    arch.input_channels = detail::get_positive_int(input, "channels", "input");

    const auto& layers = doc.at("layers");
    if (!layers.is_array() || layers.empty())
        throw std::invalid_argument("architecture: \"layers\" must be a non-empty array");

    std::int64_t len = arch.input_len;
    std::int64_t channels = arch.input_channels;
    int index = 0;
    for (const auto& lj : layers) {
        ++index;
        const std::string ctx = "layer " + std::to_string(index);
        if (!lj.is_object() || !lj.contains("kind"))
            throw std::invalid_argument(ctx + ": each layer needs a \"kind\"");
        const std::string kind = lj.at("kind").get<std::string>();

        LayerSpec spec;
        spec.index = index;
        if (kind == "conv1d") {
            detail::reject_unknown_keys(lj, {"kind", "kernel", "out_channels", "bias", "stride", "out_len"}, ctx);
            spec.kind = LayerKind::conv1d;
            spec.kernel_size = detail::get_positive_int(lj, "kernel", ctx);
            spec.output_channels = detail::get_positive_int(lj, "out_channels", ctx);
            spec.in_channels = channels;
            spec.has_bias = lj.value("bias", true);
            if (lj.value("stride", std::int64_t{1}) != 1)
                throw std::invalid_argument(ctx + ": conv1d supports stride 1 only");
            if (spec.kernel_size > len)
                throw std::invalid_argument(ctx + ": kernel " + std::to_string(spec.kernel_size) +
                                            " exceeds input length " + std::to_string(len));
            spec.output_len = len - spec.kernel_size + 1;
        } else if (kind == "pool1d") {
            detail::reject_unknown_keys(lj, {"kind", "kernel", "stride", "out_len"}, ctx);
            spec.kind = LayerKind::pool1d;
            spec.kernel_size = detail::get_positive_int(lj, "kernel", ctx);
            const std::int64_t stride = lj.contains("stride")
                                            ? detail::get_positive_int(lj, "stride", ctx)
                                            : spec.kernel_size;
            if (spec.kernel_size > len)
                throw std::invalid_argument(ctx + ": pooling window " + std::to_string(spec.kernel_size) +
                                            " exceeds input length " + std::to_string(len));
            spec.in_channels = channels;
            spec.output_channels = channels;
            spec.output_len = (len - spec.kernel_size) / stride + 1;
        } else if (kind == "global_avg_pool") {
            detail::reject_unknown_keys(lj, {"kind", "out_len"}, ctx);
            spec.kind = LayerKind::global_avg_pool;
            spec.kernel_size = len;  // window spans the whole input
            spec.in_channels = channels;
            spec.output_channels = channels;
            spec.output_len = 1;
        } else if (kind == "dropout") {
            detail::reject_unknown_keys(lj, {"kind", "out_len"}, ctx);
            spec.kind = LayerKind::dropout;
            spec.in_channels = channels;
            spec.output_channels = channels;
            spec.output_len = len;
        } else if (kind == "fully_connected") {
            detail::reject_unknown_keys(lj, {"kind", "out_features", "bias", "out_len"}, ctx);
            spec.kind = LayerKind::fully_connected;
            spec.in_channels = checked_mul(len, channels);  // flattened
            spec.output_channels = detail::get_positive_int(lj, "out_features", ctx);
            spec.output_len = 1;
            spec.has_bias = lj.value("bias", true);
        } else {
            throw std::invalid_argument(ctx + ": unknown layer kind \"" + kind + "\"");
        }

        if (lj.contains("out_len")) {
            const std::int64_t declared = lj.at("out_len").get<std::int64_t>();
            if (declared != spec.output_len)
                throw std::invalid_argument(ctx + ": declared out_len " + std::to_string(declared) +
                                            " does not match chained length " +
                                            std::to_string(spec.output_len));
        }
        if (spec.output_len < 1 || spec.output_channels < 1)
            throw std::invalid_argument(ctx + ": layer produces an empty output");
        checked_mul(spec.output_len, spec.output_channels);

        len = spec.output_len;
        channels = spec.output_channels;
        arch.layers.push_back(spec);
    }
    return arch;
}

inline ArchitectureSpec load_architecture(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open architecture file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_architecture(buf.str());
}

/// Canonical serialized form, used for hashing. Shape-resolved, so two
/// documents describing the same network hash identically.
inline std::string canonical_architecture(const ArchitectureSpec& arch) {
    nlohmann::json j;
    j["input"] = {{"len", arch.input_len}, {"channels", arch.input_channels}};
    auto& layers = j["layers"] = nlohmann::json::array();
    for (const auto& l : arch.layers) {
        layers.push_back({{"kind", to_string(l.kind)},
                          {"out_len", l.output_len},
                          {"out_channels", l.output_channels},
                          {"kernel", l.kernel_size},
                          {"in_channels", l.in_channels},
                          {"bias", l.has_bias}});
    }
    return j.dump();
}

inline std::uint64_t architecture_hash(const ArchitectureSpec& arch) {
    return fnv1a64(canonical_architecture(arch));
}

}  // namespace splitpoint
