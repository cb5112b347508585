#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace ipdc {

// Counter-based generator (Philox4x32-10) keyed by (master_seed, stream_id).
//
// The 128-bit counter holds the stream id in its upper half and the draw
// position in its lower half, so every (seed, stream) pair addresses a
// disjoint sequence and any stream can be reconstructed without replaying
// its siblings. Satisfies UniformRandomBitGenerator.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    // Independent child stream, e.g. for cross-validation folds inside a
    // replicate whose main stream is already consumed by data generation.
    [[nodiscard]] RngStream substream(std::uint64_t tag) const;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    // Uniform on the open interval (0, 1), 53 bits of resolution.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();
    // Student t with `dof` degrees of freedom (integer dof, chi-square by summing squares).
    double student_t(int dof);
    bool bernoulli(double p) { return uniform() < p; }
    // Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    void refill();

    std::uint64_t master_seed_;
    std::uint64_t stream_id_;
    std::array<std::uint32_t, 2> key_{};
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

} // namespace ipdc
