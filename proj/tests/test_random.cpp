#include <cmath>
#include <set>
#include <vector>

#include "casebase/parallel.hpp"
#include "casebase/random.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace casebase;

TEST_SUITE("random") {
  TEST_CASE("philox known-answer vectors") {
    using A4 = std::array<std::uint32_t, 4>;
    using A2 = std::array<std::uint32_t, 2>;
    CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  }

  TEST_CASE("seek reproduces any block") {
    CounterRng a(42, 7);
    std::vector<std::uint64_t> seq;
    for (int i = 0; i < 20; ++i) seq.push_back(a());
    CounterRng b(42, 7);
    b.seek(5);
    CHECK(b() == seq[10]);
    CHECK(b() == seq[11]);
  }

  TEST_CASE("streams and seeds are distinct") {
    CounterRng a(1, 0), b(1, 1), c(2, 0);
    const auto x = a(), y = b(), z = c();
    CHECK(x != y);
    CHECK(x != z);
    CHECK(y != z);
  }

  TEST_CASE("uniform draws pass a KS test and respect their ranges") {
    CounterRng rng(2024, streams::sampling);
    std::vector<double> u(20000);
    for (auto& v : u) {
      v = rng.uniform();
      REQUIRE(v >= 0.0);
      REQUIRE(v < 1.0);
    }
    CHECK(oracle::ks_uniform_pvalue(u) > 0.001);
    for (int i = 0; i < 10000; ++i) {
      const double w = rng.uniform_open_low();
      REQUIRE(w > 0.0);
      REQUIRE(w <= 1.0);
    }
  }

  TEST_CASE("exponential and normal moments") {
    CounterRng rng(9, 3);
    const int n = 100000;
    double se = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
      se += rng.exponential();
      const double z = rng.normal();
      sn += z;
      sn2 += z * z;
    }
    CHECK(std::abs(se / n - 1.0) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sn / n) < 4.0 / std::sqrt(n));
    CHECK(std::abs(sn2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  }

  TEST_CASE("below is unbiased over small ranges") {
    CounterRng rng(3, 3);
    std::vector<int> counts(6, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) ++counts[rng.below(6)];
    double chi = 0;
    for (int c : counts) chi += (c - n / 6.0) * (c - n / 6.0) / (n / 6.0);
    CHECK(chi < 20.5);  // chi-square(5) upper 0.001 point
  }

  TEST_CASE("parallel_for fills every slot and rethrows the lowest failure") {
    set_thread_count(3);
    std::vector<int> out(100, 0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i));
    try {
      parallel_for(50, [](std::size_t i) {
        if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
      });
      FAIL("expected exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()) == "7");
    }
    set_thread_count(1);
  }
}
