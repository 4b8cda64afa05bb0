#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ease/dimred.hpp"
#include "ease/linalg.hpp"
#include "ease/rng.hpp"

using namespace ease;

namespace {

double cos_angle(const VectorXd& a, const VectorXd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

MatrixXd random_rows(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
  Rng rng(seed);
  MatrixXd m(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal();
  }
  return m;
}

MatrixXd sample_cov(const MatrixXd& x) {
  const VectorXd mu = x.colwise().mean();
  const MatrixXd c = x.rowwise() - mu.transpose();
  return c.transpose() * c / static_cast<double>(x.rows() - 1);
}

}  // namespace

TEST_SUITE("dimred") {
  TEST_CASE("matrix_inv_sqrt on diagonal inputs") {
    CHECK(matrix_inv_sqrt(MatrixXd::Identity(3, 3), 1e-10)
              .isApprox(MatrixXd::Identity(3, 3), 1e-12));
    MatrixXd d(2, 2);
    d << 4.0, 0.0, 0.0, 9.0;
    MatrixXd expect(2, 2);
    expect << 0.5, 0.0, 0.0, 1.0 / 3.0;
    CHECK(matrix_inv_sqrt(d, 1e-10).isApprox(expect, 1e-12));
  }

  TEST_CASE("matrix_inv_sqrt clamps tiny eigenvalues at the floor") {
    MatrixXd d(2, 2);
    d << 1.0, 0.0, 0.0, 1e-16;
    const MatrixXd w = matrix_inv_sqrt(d, 1e-10);
    CHECK(w(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w(1, 1) == doctest::Approx(1e5).epsilon(1e-10));
    CHECK(std::abs(w(0, 1)) < 1e-12);
  }

  TEST_CASE("matrix_inv_sqrt squares back to the inverse") {
    MatrixXd m = random_rows(6, 6, 3);
    const MatrixXd spd = m * m.transpose() + 2.0 * MatrixXd::Identity(6, 6);
    const MatrixXd w = matrix_inv_sqrt(spd, 1e-12);
    CHECK((w * spd * w - MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("matrix_inv_sqrt rejects asymmetric input") {
    MatrixXd bad(2, 2);
    bad << 1.0, 0.5, 0.0, 1.0;
    CHECK_THROWS_AS(matrix_inv_sqrt(bad, 1e-10), NumericError);
  }

  TEST_CASE("sir recovers the driving direction of y = x1") {
    const Eigen::Index n = 5000;
    MatrixXd x = random_rows(n, 2, 71);
    const VectorXd y = x.col(0);
    const auto basis = sir_directions(x, y, 1, SliceScheme{SliceMode::kEqualWidth, 100});
    VectorXd e1(2);
    e1 << 1.0, 0.0;
    CHECK(cos_angle(basis.matrix.col(0), e1) > 0.95);
    CHECK_FALSE(basis.rank_deficient);
  }

  TEST_CASE("independent outcomes leave the slice-mean matrix near zero") {
    const Eigen::Index n = 5000;
    MatrixXd x = random_rows(n, 2, 72);
    const VectorXd y = random_rows(n, 1, 73).col(0);  // pure noise
    const auto basis = sir_directions(x, y, 1, SliceScheme{SliceMode::kEqualWidth, 100});
    REQUIRE(basis.eigenvalues.size() == 2);
    CHECK(basis.eigenvalues.maxCoeff() < 0.1);
  }

  TEST_CASE("degenerate slicing throws") {
    MatrixXd x = random_rows(30, 2, 74);
    const VectorXd y = VectorXd::Constant(30, 1.5);  // single slice only
    CHECK_THROWS_AS(sir_directions(x, y, 1, SliceScheme{SliceMode::kEqualWidth, 10}), DataError);
    CHECK_THROWS_AS(sir_directions(x, x.col(0), 1, SliceScheme{SliceMode::kEqualWidth, 1}),
                    ConfigError);
  }

  TEST_CASE("sir satisfies the whitening identity P' Sigma P = I") {
    MatrixXd x = random_rows(400, 4, 75);
    VectorXd y = x.col(0) + 0.5 * x.col(1).cwiseProduct(x.col(1));
    const auto basis = sir_directions(x, y, 2, SliceScheme{SliceMode::kEqualWidth, 20});
    const MatrixXd sigma = sample_cov(x);
    const MatrixXd gram = basis.matrix.transpose() * sigma * basis.matrix;
    CHECK((gram - MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }

  TEST_CASE("sir is invariant to row permutation") {
    MatrixXd x = random_rows(200, 3, 76);
    VectorXd y = x.col(0) - x.col(2);
    const auto a = sir_directions(x, y, 2, SliceScheme{SliceMode::kEqualWidth, 12});
    std::vector<Eigen::Index> perm(200);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(77);
    for (Eigen::Index i = 199; i > 0; --i) {
      std::swap(perm[static_cast<std::size_t>(i)],
                perm[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(i + 1)))]);
    }
    MatrixXd xp(200, 3);
    VectorXd yp(200);
    for (Eigen::Index i = 0; i < 200; ++i) {
      xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
      yp(i) = y(perm[static_cast<std::size_t>(i)]);
    }
    const auto b = sir_directions(xp, yp, 2, SliceScheme{SliceMode::kEqualWidth, 12});
    CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("ss-sir reduces exactly to sir without unlabeled rows") {
    MatrixXd x = random_rows(150, 3, 80);
    VectorXd y = x.col(1);
    const SliceScheme scheme{SliceMode::kEqualWidth, 10};
    const auto plain = sir_directions(x, y, 1, scheme);
    const auto ss = ss_sir_directions(x, y, MatrixXd(0, 3), 1, scheme);
    CHECK(ss.origin == ProjectionOrigin::kSsSir);
    CHECK((plain.matrix - ss.matrix).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("ss-sir matches a hand-built tiny-instance computation") {
    // 4 labeled points in 2-d, two slices, one unlabeled point that
    // coincides with labeled row 2 (slice 2)
    MatrixXd x(4, 2);
    x << 0.0, 0.0,
         1.0, 0.5,
         4.0, 1.0,
         5.0, 1.5;
    VectorXd y(4);
    y << 0.0, 1.0, 10.0, 11.0;
    MatrixXd u(1, 2);
    u << 4.0, 1.0;  // exact copy of labeled row 2
    const SliceScheme scheme{SliceMode::kEqualWidth, 2};
    const auto basis = ss_sir_directions(x, y, u, 1, scheme);

    // oracle: straight-line recomputation of the algorithm for this instance
    MatrixXd pooled(5, 2);
    pooled << x, u;
    const MatrixXd w = matrix_inv_sqrt_auto(sample_cov(pooled));
    const VectorXd mu = pooled.colwise().mean();
    const MatrixXd z_lab = (x.rowwise() - mu.transpose()) * w;
    const MatrixXd z_unl = (u.rowwise() - mu.transpose()) * w;
    // slices from labeled y on [0, 11]: rows 0,1 -> slice 1; rows 2,3 -> slice 2
    // the unlabeled point's nearest neighbour is row 2 (distance zero), its
    // imputed outcome 10 lands in slice 2
    const VectorXd m1 = (z_lab.row(0) + z_lab.row(1)).transpose() / 2.0;
    const VectorXd m2 = (z_lab.row(2) + z_lab.row(3) + z_unl.row(0)).transpose() / 3.0;
    const MatrixXd m_hat = 0.5 * m1 * m1.transpose() + 0.5 * m2 * m2.transpose();
    const auto eig = linalg::sym_eigen(m_hat);
    VectorXd expected = w * eig.vectors.col(0);
    if (expected(0) < 0.0) expected = -expected;  // sign convention
    CHECK((basis.matrix.col(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("nearest-neighbour ties resolve to the lower labeled index") {
    // rows 0 and 1 carry identical covariates (so their computed distances
    // tie bit-for-bit) but live in different slices; swapping their
    // outcomes must flip the imputation
    MatrixXd x(5, 2);
    x << 2.0, 1.0,
         2.0, 1.0,
         3.0, 0.2,
         -3.0, 1.1,
         1.0, 2.0;
    VectorXd y(5);
    y << 0.0, 10.0, 0.5, 9.5, 0.7;
    MatrixXd u(1, 2);
    u << 1.8, 0.9;  // nearest pair is rows 0 and 1
    const SliceScheme scheme{SliceMode::kEqualWidth, 2};
    const auto a = ss_sir_directions(x, y, u, 1, scheme);

    VectorXd y_swapped = y;
    std::swap(y_swapped(0), y_swapped(1));
    const auto b = ss_sir_directions(x, y_swapped, u, 1, scheme);
    CHECK((a.matrix - b.matrix).cwiseAbs().maxCoeff() > 1e-6);

    // determinism: identical reruns are bit-identical
    const auto a2 = ss_sir_directions(x, y, u, 1, scheme);
    CHECK((a.matrix - a2.matrix).cwiseAbs().maxCoeff() == 0.0);
  }

  TEST_CASE("pca finds dominant and degenerate structure") {
    Rng rng(90);
    MatrixXd x(500, 2);
    for (int i = 0; i < 500; ++i) {
      x(i, 0) = 3.0 * rng.normal();
      x(i, 1) = rng.normal();
    }
    const auto basis = pca_directions(x, 1);
    VectorXd e1(2);
    e1 << 1.0, 0.0;
    CHECK(cos_angle(basis.matrix.col(0), e1) > 0.99);
    CHECK(basis.matrix(0, 0) > 0.0);  // sign fixed toward +e1

    // exact line x2 = 2 x1: direction (1,2)/sqrt(5)
    MatrixXd line(100, 2);
    for (int i = 0; i < 100; ++i) {
      const double t = rng.normal();
      line(i, 0) = t;
      line(i, 1) = 2.0 * t;
    }
    const auto dir = pca_directions(line, 1);
    VectorXd expect(2);
    expect << 1.0 / std::sqrt(5.0), 2.0 / std::sqrt(5.0);
    CHECK((dir.matrix.col(0) - expect).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(pca_directions(line, 2), NumericError);  // rank 1 < r
  }

  TEST_CASE("pca orthonormality on isotropic data") {
    MatrixXd x = random_rows(300, 3, 91);
    const auto basis = pca_directions(x, 2);
    CHECK((basis.matrix.transpose() * basis.matrix - MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}
