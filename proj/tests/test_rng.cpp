#include <catch_amalgamated.hpp>

#include <set>

#include "tpe/rng.hpp"

using namespace tpe;

// Known-answer vectors for philox4x32-10 from the Random123 distribution (kat_vectors).
TEST_CASE("philox known-answer vectors", "[rng]") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  static_assert(Philox4x32::block({0, 0, 0, 0}, {0, 0})[0] == 0x6627e8d5u);
}

TEST_CASE("uniform53 range", "[rng]") {
  CHECK(uniform53(0, 0) == 0.0);
  CHECK(uniform53(0xffffffffu, 0xffffffffu) < 1.0);
  CHECK(uniform53(0xffffffffu, 0xffffffffu) == 1.0 - 0x1.0p-53);
  CHECK(uniform53(0, 0x80000000u) == 0.5);
}

TEST_CASE("counter streams", "[rng]") {
  const CounterRng a(42, 0), b(42, 1), c(43, 0);
  CHECK(a.raw(7) == CounterRng(42, 0).raw(7));
  CHECK(a.raw(7) != b.raw(7));
  CHECK(a.raw(7) != c.raw(7));
  CHECK(a.raw(7) != a.raw(8));
  // step occupies counter words 0-1, the stream words 2-3, the seed the key
  CHECK(a.raw(5) == Philox4x32::block({5, 0, 0, 0}, {42, 0}));
  CHECK(CounterRng(0x100000002ull, 0x300000004ull).raw(0x500000006ull) ==
        Philox4x32::block({6, 5, 4, 3}, {2, 1}));

  double sum = 0.0;
  std::set<double> seen;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    for (double u : a.uniforms(static_cast<std::uint64_t>(i))) {
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      sum += u;
      seen.insert(u);
    }
  }
  CHECK(seen.size() == 2u * n);
  // mean of 2n uniforms: sd = sqrt(1/12 / 2n) ~ 0.0014
  CHECK(std::abs(sum / (2.0 * n) - 0.5) < 0.01);
}
