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

#include <charconv>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace splitpoint {

/// Overflow-checked int64 arithmetic. Profiles of absurdly sized networks
/// are rejected instead of silently wrapping.
inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("integer overflow in profile arithmetic");
    return r;
}

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r))
        throw std::overflow_error("integer overflow in profile arithmetic");
    return r;
}

/// FNV-1a over a byte string. Used to key region-table files to the
/// architecture document they were built from.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Deterministic engine derived from a seed plus up to three stream
/// indices. std::seed_seq consumes 32-bit words, so 64-bit inputs are
/// split to keep all bits significant.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t s1 = 0,
                                std::uint64_t s2 = 0, std::uint64_t s3 = 0) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(s1),   static_cast<std::uint32_t>(s1 >> 32),
        static_cast<std::uint32_t>(s2),   static_cast<std::uint32_t>(s2 >> 32),
        static_cast<std::uint32_t>(s3),   static_cast<std::uint32_t>(s3 >> 32)};
    return std::mt19937_64(seq);
}

/// Shortest round-trip decimal form of a double. Keeps CSV/JSON output
/// byte-stable across runs.
inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{})
        throw std::runtime_error("double formatting failed");
    return std::string(buf, p);
}

}  // namespace splitpoint
