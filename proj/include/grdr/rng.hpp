#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace grdr {

/// Counter-based pseudorandom stream (Philox4x32-10).
///
/// A stream is fully identified by (seed, stream_id): draws come from
/// encrypting a per-stream block counter, so streams with distinct ids are
/// independent by construction and any stream can be recreated from its
/// identifiers alone. Gaussian variates use the Marsaglia polar method.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  std::uint64_t next_u64();

  /// Uniform on the open interval (0,1); never returns 0 or 1.
  double uniform();

  /// One standard normal variate.
  double gaussian();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> lane_{};
  int lane_pos_ = 4;
  double cached_gaussian_ = 0.0;
  bool has_cached_gaussian_ = false;
};

/// k iid N(0,1) variates, advancing the stream deterministically.
Eigen::VectorXd standard_normal_vec(RngStream& stream, int k);

}  // namespace grdr
