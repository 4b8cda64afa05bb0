#include <doctest.h>

#include <cmath>
#include <set>

#include "ease/common.hpp"
#include "ease/rng.hpp"
#include "ease/stats.hpp"

using namespace ease;

TEST_SUITE("stats") {
  TEST_CASE("normal quantile hits reference values") {
    CHECK(stats::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-10));
    CHECK(stats::normal_quantile(0.025) == doctest::Approx(-1.959963984540054).epsilon(1e-10));
    CHECK(stats::normal_quantile(0.8413447460685429) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(stats::normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-8));
    CHECK_THROWS_AS(stats::normal_quantile(0.0), ConfigError);
    CHECK_THROWS_AS(stats::normal_quantile(1.0), ConfigError);
  }

  TEST_CASE("quantile and cdf are inverse") {
    for (double p = 0.001; p < 0.9995; p += 0.0153) {
      CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
  }

  TEST_CASE("incomplete beta closed forms") {
    for (double x : {0.05, 0.3, 0.77}) {
      CHECK(stats::incomplete_beta(1.0, 1.0, x) == doctest::Approx(x).epsilon(1e-12));
      CHECK(stats::incomplete_beta(3.0, 1.0, x) == doctest::Approx(x * x * x).epsilon(1e-12));
      CHECK(stats::incomplete_beta(1.0, 2.0, x) ==
            doctest::Approx(1.0 - (1.0 - x) * (1.0 - x)).epsilon(1e-12));
    }
  }

  TEST_CASE("student t cdf reference values") {
    // df=1 is Cauchy, df=2 has the closed form 1/2 + t / (2 sqrt(2 + t^2))
    CHECK(stats::student_t_cdf(1.0, 1.0) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(stats::student_t_cdf(0.0, 5.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(stats::student_t_cdf(1.0, 2.0) ==
          doctest::Approx(0.5 + 1.0 / (2.0 * std::sqrt(3.0))).epsilon(1e-12));
    CHECK(stats::student_t_pvalue_two_sided(0.0, 7.3) == doctest::Approx(1.0));
    // large df approaches the normal
    CHECK(stats::student_t_pvalue_two_sided(1.96, 4000.0) ==
          doctest::Approx(0.05).epsilon(2e-3));
  }
}

TEST_SUITE("rng") {
  TEST_CASE("identical seeds give identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  }

  TEST_CASE("different seeds diverge") {
    Rng a(1), b(2);
    int diff = 0;
    for (int i = 0; i < 10; ++i) diff += (a.next_u64() != b.next_u64());
    CHECK(diff > 0);
  }

  TEST_CASE("normal draws have the right moments") {
    Rng rng(2024);
    const int n = 20000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.normal();
      s += z;
      s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.03);
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.05));
  }

  TEST_CASE("uniform_below is in range and deterministic") {
    Rng rng(5);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
      const auto v = rng.uniform_below(7);
      CHECK(v < 7);
      seen.insert(v);
    }
    CHECK(seen.size() == 7);
  }

  TEST_CASE("derive_seed separates streams") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t r = 0; r < 200; ++r) seeds.insert(derive_seed(123, 0x7265, r));
    CHECK(seeds.size() == 200);
    CHECK(derive_seed(123, 1, 2) != derive_seed(123, 2, 1));
  }
}
