#pragma once

#include <array>
#include <cstdint>

namespace tpe {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr std::uint32_t m0 = 0xD2511F53u;
  static constexpr std::uint32_t m1 = 0xCD9E8D57u;
  static constexpr std::uint32_t w0 = 0x9E3779B9u;
  static constexpr std::uint32_t w1 = 0xBB67AE85u;

  static constexpr Counter block(Counter c, Key k) noexcept {
    for (int r = 0; r < 10; ++r) {
      if (r > 0) {
        k[0] += w0;
        k[1] += w1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(m0) * c[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(m1) * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
    }
    return c;
  }
};

// 53-bit uniform in [0, 1) from two words.
constexpr double uniform53(std::uint32_t lo, std::uint32_t hi) noexcept {
  const std::uint64_t x = (static_cast<std::uint64_t>(hi) << 32) | lo;
  return static_cast<double>(x >> 11) * 0x1.0p-53;
}

// One stream per (seed, stream index); draw(step) is a pure function of its arguments.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  Philox4x32::Counter raw(std::uint64_t step) const noexcept {
    return Philox4x32::block(
        {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), stream_lo_, stream_hi_}, key_);
  }

  // Two independent uniforms in [0, 1) for one step.
  std::array<double, 2> uniforms(std::uint64_t step) const noexcept {
    const auto r = raw(step);
    return {uniform53(r[0], r[1]), uniform53(r[2], r[3])};
  }

 private:
  Philox4x32::Key key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
};

}  // namespace tpe
