#pragma once

#include <array>
#include <cstdint>

namespace ars {

// Philox4x32-10 block function (Salmon et al., SC'11). Pure function of
// (counter, key); this is what makes every stream reproducible regardless
// of which thread draws from it.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

// Counter-based random stream keyed by (seed, stream_id). Copying a stream
// copies its position; fork() derives an independent child stream.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform() noexcept;

  RandomStream fork(std::uint64_t child) const noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // number of unconsumed 64-bit halves in buffer_
};

inline RandomStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return RandomStream(seed, stream_id);
}

}  // namespace ars
