#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oocs/random.hpp"

using oocs::Philox4x32;
using oocs::RandomStream;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST_CASE("philox known answers") {
  using B = Philox4x32::Block;
  CHECK(Philox4x32::bijection({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::bijection({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::bijection({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter and key layout") {
  const Philox4x32 g(0x0000000200000001ull, 0x0000000400000003ull);
  CHECK(g.block(0x0000000600000005ull) == Philox4x32::bijection({5, 6, 3, 4}, {1, 2}));
}

TEST_CASE("uniforms") {
  CHECK(Philox4x32::to_unit(0, 0) == 0.0);
  CHECK(Philox4x32::to_unit(0xffffffff, 0xffffffff) < 1.0);
  CHECK(Philox4x32::to_unit(0xffffffff, 0xffffffff) == 1.0 - 0x1p-53);

  RandomStream a(99), b(99), c(100);
  double sum = 0.0, sum2 = 0.0;
  bool differs = false;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = a.uniform();
    CHECK_FALSE((u < 0.0 || u >= 1.0));
    CHECK(u == b.uniform());
    differs = differs || u != c.uniform();
    sum += u;
    sum2 += u * u;
  }
  CHECK(differs);
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(sum2 / n - (sum / n) * (sum / n) == doctest::Approx(1.0 / 12.0).epsilon(0.01));
}

TEST_CASE("normals") {
  const Philox4x32 g(7);
  const int n = 400000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.normal_at(static_cast<std::uint64_t>(i));
    sum += x;
    sum2 += x * x;
  }
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(static_cast<double>(n)));
  CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.01));
  CHECK(g.normal_at(10) == g.normal_pair(5)[0]);
  CHECK(g.normal_at(11) == g.normal_pair(5)[1]);
}
