#pragma once

#include <concepts>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace infomarket {

/// Anything that can hand out the two kinds of draws the decision rules use.
template <class D>
concept DrawSource = requires(D& d) {
    { d.uniform() } -> std::convertible_to<double>;
    { d.normal() } -> std::convertible_to<double>;
};

/// Identifies one random stream: a master seed plus a coordinate path such as
/// (session) or (session, run). The path length is part of the key, so
/// (s) and (s, 0) name different streams.
struct StreamKey {
    std::uint64_t master = 0;
    std::vector<std::uint64_t> path;

    [[nodiscard]] std::seed_seq seed_sequence() const {
        std::vector<std::uint32_t> words;
        words.reserve(3 + 2 * path.size());
        words.push_back(static_cast<std::uint32_t>(master));
        words.push_back(static_cast<std::uint32_t>(master >> 32));
        words.push_back(static_cast<std::uint32_t>(path.size()));
        for (auto c : path) {
            words.push_back(static_cast<std::uint32_t>(c));
            words.push_back(static_cast<std::uint32_t>(c >> 32));
        }
        return std::seed_seq(words.begin(), words.end());
    }
};

/// Single-consumer random stream. Never share one between threads.
class RngStream {
public:
    using engine_type = std::mt19937_64;

    explicit RngStream(const StreamKey& key) {
        auto seq = key.seed_sequence();
        engine_.seed(seq);
    }

    RngStream(std::uint64_t master, std::initializer_list<std::uint64_t> path)
        : RngStream(StreamKey{master, std::vector<std::uint64_t>(path)}) {}

    /// Uniform on [0, 1).
    double uniform() { return unit_(engine_); }

    /// Standard normal.
    double normal() { return normal_(engine_); }

    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    engine_type& engine() noexcept { return engine_; }

private:
    engine_type engine_;
    std::uniform_real_distribution<double> unit_{0.0, 1.0};
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Replays a fixed list of draws; used to trace the decision rules by hand.
class RecordedDraws {
public:
    RecordedDraws(std::vector<double> uniforms, std::vector<double> normals)
        : uniforms_(std::move(uniforms)), normals_(std::move(normals)) {}

    double uniform() { return uniforms_.at(next_uniform_++); }
    double normal() { return normals_.at(next_normal_++); }

    [[nodiscard]] std::size_t uniforms_used() const noexcept { return next_uniform_; }
    [[nodiscard]] std::size_t normals_used() const noexcept { return next_normal_; }

private:
    std::vector<double> uniforms_;
    std::vector<double> normals_;
    std::size_t next_uniform_ = 0;
    std::size_t next_normal_ = 0;
};

}  // namespace infomarket
