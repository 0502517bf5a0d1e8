#pragma once

#include <cstdint>

namespace ancov {

// Deterministic per-replication random stream: (seed, streamId) fully determine
// the output, distinct streamIds give independent sequences, and no global
// state is involved, so replications can run on any worker in any order.
// Generator is xoshiro256++ seeded through splitmix64.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform();                       // (0, 1)
    double uniform(double lo, double hi);   // (lo, hi)
    double exponential(double rate);        // mean 1/rate
    std::uint64_t poisson(double mean);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

  private:
    std::uint64_t state_[4];
    std::uint64_t seed_, stream_id_;
};

}  // namespace ancov
