#include "wms/util/random.hpp"

#include <cmath>
#include <random>

namespace wms {

namespace {

std::uint64_t splitmix64(std::uint64_t& x)
{
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

std::string random_hex(std::size_t chars)
{
    thread_local std::mt19937_64 gen{[] {
        std::random_device rd;
        std::seed_seq seq{rd(), rd(), rd(), rd()};
        return std::mt19937_64(seq);
    }()};
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(chars);
    std::uint64_t bits = 0;
    int left = 0;
    for (std::size_t i = 0; i < chars; ++i) {
        if (left == 0) {
            bits = gen();
            left = 16;
        }
        out.push_back(digits[bits & 0xf]);
        bits >>= 4;
        --left;
    }
    return out;
}

Rng::Rng(std::uint64_t seed)
{
    for (auto& s : s_)
        s = splitmix64(seed);
}

std::uint64_t Rng::next()
{
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::exponential(double rate) { return -std::log(uniform_open0()) / rate; }

std::uint64_t Rng::below(std::uint64_t n)
{
    // Lemire's rejection keeps the result unbiased.
    for (;;) {
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        std::uint64_t low = static_cast<std::uint64_t>(m);
        if (low >= n || low >= (-n) % n)
            return static_cast<std::uint64_t>(m >> 64);
    }
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream)
{
    std::uint64_t x = base ^ (stream * 0xd1b54a32d192ed03ULL);
    splitmix64(x);
    return splitmix64(x);
}

} // namespace wms
