#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace adnet {

using Rng = std::mt19937_64;

/// Independent engine for a tuple of integer tags, e.g. (seed, run, agent).
/// Equal tuples always yield identical streams.
inline Rng make_stream(std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * tags.size());
    for (std::uint64_t t : tags) {
        words.push_back(static_cast<std::uint32_t>(t));
        words.push_back(static_cast<std::uint32_t>(t >> 32));
    }
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Stream tags separating the purposes a seed is used for.
namespace stream {
inline constexpr std::uint64_t kSimulation = 0x53494d;   // per-run data streams
inline constexpr std::uint64_t kModel = 0x4d4f44;        // local minimizers, covariances
inline constexpr std::uint64_t kEvaluation = 0x45564c;   // frozen evaluation sets
inline constexpr std::uint64_t kNoiseCov = 0x4e4f49;     // gradient-noise covariance estimates
inline constexpr std::uint64_t kGraph = 0x475241;        // random topologies
}  // namespace stream

}  // namespace adnet
