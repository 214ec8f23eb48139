#pragma once

#include <cstdint>
#include <random>

namespace rfmfs {

// Seeded random stream. Identical (seed, stream_id) pairs reproduce
// identical draw sequences; replica loops give every replica its own
// stream_id so results do not depend on scheduling or thread count.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Uniform on [0, 1).
  double uniform();
  double normal();
  // Stream for a sub-task; deterministic in (seed, stream_id, child).
  RngStream child(std::uint64_t child_id) const;

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace rfmfs
