#include "grdr/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace grdr {
namespace {

// Philox4x32 multipliers and Weyl key increments (Salmon et al., SC'11).
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

void RngStream::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_),
      static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_),
      static_cast<std::uint32_t>(seed_ >> 32)};
  lane_ = philox4x32_10(ctr, key);
  ++block_;
  lane_pos_ = 0;
}

std::uint64_t RngStream::next_u64() {
  if (lane_pos_ > 2) refill();
  const std::uint64_t lo = lane_[lane_pos_];
  const std::uint64_t hi = lane_[lane_pos_ + 1];
  lane_pos_ += 2;
  return (hi << 32) | lo;
}

double RngStream::uniform() {
  // 53 random bits offset by half a step: range [2^-54, 1 - 2^-54].
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  double v1, v2, s;
  do {
    v1 = 2.0 * uniform() - 1.0;
    v2 = 2.0 * uniform() - 1.0;
    s = v1 * v1 + v2 * v2;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  cached_gaussian_ = v2 * scale;
  has_cached_gaussian_ = true;
  return v1 * scale;
}

Eigen::VectorXd standard_normal_vec(RngStream& stream, int k) {
  if (k < 1) throw std::invalid_argument("standard_normal_vec: k must be >= 1");
  Eigen::VectorXd out(k);
  for (int i = 0; i < k; ++i) out[i] = stream.gaussian();
  return out;
}

}  // namespace grdr
