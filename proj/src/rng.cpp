#include "ancov/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ancov {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
    std::uint64_t s = seed ^ (0xd2b74407b1ce6e93ULL * (stream_id + 1));
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t RngStream::next_u64() {
    std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double RngStream::uniform() {
    // 53 random bits into (0,1); never returns 0 so log() is safe
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double RngStream::exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential: rate must be > 0");
    return -std::log(uniform()) / rate;
}

std::uint64_t RngStream::poisson(double mean) {
    if (!(mean >= 0)) throw std::invalid_argument("poisson: mean must be >= 0");
    std::uint64_t total = 0;
    // product-of-uniforms per chunk; chunking keeps exp(-chunk) well above underflow
    while (mean > 0) {
        double chunk = mean > 60.0 ? 60.0 : mean;
        mean -= chunk;
        double limit = std::exp(-chunk), prod = uniform();
        std::uint64_t k = 0;
        while (prod > limit) {
            ++k;
            prod *= uniform();
        }
        total += k;
    }
    return total;
}

}  // namespace ancov
