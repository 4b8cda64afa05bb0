#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ease/kernels.hpp"
#include "ease/rng.hpp"
#include "ease/smoothing.hpp"

using namespace ease;

namespace {

// composite Simpson over [-12, 12]; gaussian-family tails are < 1e-30 there
double simpson_moment(const KernelSpec& spec, int power) {
  const double lo = spec.family == KernelFamily::kEpanechnikov ? -1.0 : -12.0;
  const double hi = -lo;
  const int n = 48000;  // even
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double z = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    acc += w * std::pow(z, power) * kernel_eval_univariate(spec, z);
  }
  return acc * h / 3.0;
}

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("gaussian at the origin is the standard normal density") {
    KernelSpec spec{KernelFamily::kGaussian, 2, 1};
    VectorXd z(1);
    z << 0.0;
    CHECK(kernel_eval(spec, z) == doctest::Approx(0.3989422804).epsilon(1e-9));
  }

  TEST_CASE("kernels are symmetric") {
    for (auto family : {KernelFamily::kGaussian, KernelFamily::kEpanechnikov}) {
      KernelSpec spec{family, 2, 1};
      VectorXd zp(1), zm(1);
      zp << 1.3;
      zm << -1.3;
      CHECK(kernel_eval(spec, zp) == kernel_eval(spec, zm));
    }
    KernelSpec ho{KernelFamily::kGaussianHigherOrder, 4, 1};
    VectorXd zp(1), zm(1);
    zp << 0.7;
    zm << -0.7;
    CHECK(kernel_eval(ho, zp) == kernel_eval(ho, zm));
  }

  TEST_CASE("fourth-order gaussian at the origin") {
    // closed form K4(z) = (3 - z^2) phi(z) / 2
    KernelSpec spec{KernelFamily::kGaussianHigherOrder, 4, 1};
    VectorXd z(1);
    z << 0.0;
    CHECK(kernel_eval(spec, z) == doctest::Approx(1.5 * 0.3989422804014327).epsilon(1e-12));
    CHECK(std::abs(simpson_moment(spec, 2)) < 1e-6);  // vanishing second moment
  }

  TEST_CASE("unit mass and moment structure per order") {
    struct Case {
      KernelSpec spec;
      int q;
    };
    const Case cases[] = {
        {{KernelFamily::kGaussian, 2, 1}, 2},
        {{KernelFamily::kGaussianHigherOrder, 4, 1}, 4},
        {{KernelFamily::kGaussianHigherOrder, 6, 1}, 6},
        {{KernelFamily::kEpanechnikov, 2, 1}, 2},
    };
    for (const auto& c : cases) {
      CAPTURE(c.q);
      CHECK(simpson_moment(c.spec, 0) == doctest::Approx(1.0).epsilon(1e-6));
      for (int j = 1; j < c.q; ++j) {
        CHECK(std::abs(simpson_moment(c.spec, j)) < 1e-6);
      }
      CHECK(std::abs(simpson_moment(c.spec, c.q)) > 0.1);
    }
  }

  TEST_CASE("product construction and dimension checks") {
    KernelSpec spec{KernelFamily::kGaussian, 2, 2};
    VectorXd z(2);
    z << 0.0, 0.0;
    CHECK(kernel_eval(spec, z) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
    VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(kernel_eval(spec, wrong), ConfigError);
  }

  TEST_CASE("kernel spec validation") {
    CHECK_THROWS_AS((KernelSpec{KernelFamily::kGaussian, 4, 1}).validate(), ConfigError);
    CHECK_THROWS_AS((KernelSpec{KernelFamily::kGaussianHigherOrder, 8, 1}).validate(), ConfigError);
    CHECK_THROWS_AS((KernelSpec{KernelFamily::kGaussian, 3, 1}).validate(), ConfigError);
    CHECK_THROWS_AS((KernelSpec{KernelFamily::kEpanechnikov, 4, 1}).validate(), ConfigError);
    CHECK_NOTHROW((KernelSpec{KernelFamily::kGaussianHigherOrder, 6, 3}).validate());
  }

  TEST_CASE("default grid is geometric around the optimal order") {
    const VectorXd grid = default_bandwidth_grid(400, 2, 2);
    REQUIRE(grid.size() == 13);
    const double center = std::pow(400.0, -1.0 / 6.0);
    CHECK(grid(6) == doctest::Approx(center).epsilon(1e-12));
    CHECK(grid(0) == doctest::Approx(center / 4.0).epsilon(1e-12));
    CHECK(grid(12) == doctest::Approx(center * 4.0).epsilon(1e-12));
    for (int i = 1; i < 13; ++i) {
      CHECK(grid(i) / grid(i - 1) == doctest::Approx(std::pow(4.0, 1.0 / 6.0)).epsilon(1e-10));
    }
  }

  TEST_CASE("constant outcomes tie every bandwidth; the largest wins") {
    Rng rng(3);
    MatrixXd x(40, 1);
    for (int i = 0; i < 40; ++i) x(i, 0) = rng.normal();
    const VectorXd y = VectorXd::Constant(40, 3.0);
    VectorXd grid(4);
    grid << 0.05, 0.2, 1.0, 2.5;
    const auto choice = select_bandwidth(x, y, identity_projection(1),
                                         KernelSpec{KernelFamily::kGaussian, 2, 1}, grid, 5, 7);
    CHECK(choice.h == 2.5);
    CHECK(choice.cv_error == 0.0);
  }

  TEST_CASE("bandwidth CV picks the middle scale for a sine signal") {
    // n=50, y = sin(4x) + noise(0.1), x uniform on [0,1]
    Rng rng(12345);
    MatrixXd x(50, 1);
    VectorXd y(50);
    for (int i = 0; i < 50; ++i) {
      x(i, 0) = rng.uniform();
      y(i) = std::sin(4.0 * x(i, 0)) + 0.1 * rng.normal();
    }
    VectorXd grid(3);
    grid << 0.01, 0.1, 1.0;
    const KernelSpec spec{KernelFamily::kGaussian, 2, 1};
    const auto choice = select_bandwidth(x, y, identity_projection(1), spec, grid, 5, 99);
    CHECK(choice.h == doctest::Approx(0.1));

    // oracle: recompute the CV error of each grid point from the public parts
    const auto cv = partition_folds(50, 5, 99);
    VectorXd sse = VectorXd::Zero(3);
    for (int s = 1; s <= 5; ++s) {
      const auto held = cv.fold_indices(s);
      const auto train = cv.complement_indices(s);
      const MatrixXd x_tr = select_rows(x, train);
      const VectorXd y_tr = select_rows(y, train);
      const MatrixXd x_he = select_rows(x, held);
      const VectorXd y_he = select_rows(y, held);
      for (int g = 0; g < 3; ++g) {
        const auto fit =
            SmootherFit::local_constant(x_tr, y_tr, identity_projection(1), spec, grid(g));
        sse(g) += (fit.predict_many(x_he) - y_he).squaredNorm();
      }
    }
    int best = 0;
    sse.minCoeff(&best);
    CHECK(grid(best) == choice.h);
    CHECK(choice.cv_error == doctest::Approx(sse(best) / 50.0).epsilon(1e-12));
  }

  TEST_CASE("bandwidth selection ignores grid ordering") {
    Rng rng(8);
    MatrixXd x(30, 1);
    VectorXd y(30);
    for (int i = 0; i < 30; ++i) {
      x(i, 0) = rng.normal();
      y(i) = x(i, 0) * x(i, 0) + 0.2 * rng.normal();
    }
    VectorXd g1(4), g2(4);
    g1 << 0.05, 0.3, 0.8, 2.0;
    g2 << 2.0, 0.05, 0.8, 0.3;
    const KernelSpec spec{KernelFamily::kGaussian, 2, 1};
    const auto a = select_bandwidth(x, y, identity_projection(1), spec, g1, 5, 4);
    const auto b = select_bandwidth(x, y, identity_projection(1), spec, g2, 5, 4);
    CHECK(a.h == b.h);
    CHECK(a.cv_error == b.cv_error);
    CHECK(a.grid == b.grid);
  }

  TEST_CASE("bandwidth grid validation") {
    MatrixXd x(10, 1);
    x.setOnes();
    const VectorXd y = VectorXd::Ones(10);
    const KernelSpec spec{KernelFamily::kGaussian, 2, 1};
    VectorXd empty(0), negative(2);
    negative << 0.5, -1.0;
    CHECK_THROWS_AS(select_bandwidth(x, y, identity_projection(1), spec, empty, 5, 1),
                    ConfigError);
    CHECK_THROWS_AS(select_bandwidth(x, y, identity_projection(1), spec, negative, 5, 1),
                    ConfigError);
    VectorXd ok(1);
    ok << 0.5;
    CHECK_THROWS_AS(select_bandwidth(x, y, identity_projection(1), spec, ok, 15, 1), ConfigError);
  }
}
