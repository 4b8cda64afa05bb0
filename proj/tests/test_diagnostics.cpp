#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ease/diagnostics.hpp"
#include "ease/report.hpp"
#include "ease/rng.hpp"

using namespace ease;

namespace {

VectorXd normal_sample(Eigen::Index n, double mu, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = mu + rng.normal();
  return v;
}

}  // namespace

TEST_SUITE("diagnostics") {
  TEST_CASE("identical samples give t = 0 and p = 1") {
    const VectorXd a = normal_sample(40, 0.0, 1);
    const auto res = welch_t_test(a, a);
    CHECK(res.statistic == 0.0);
    CHECK(res.p_value == doctest::Approx(1.0));
  }

  TEST_CASE("welch p-value is symmetric in the samples") {
    const VectorXd a = normal_sample(30, 0.0, 2);
    const VectorXd b = normal_sample(50, 0.4, 3);
    const auto ab = welch_t_test(a, b);
    const auto ba = welch_t_test(b, a);
    CHECK(ab.statistic == -ba.statistic);
    CHECK(ab.p_value == ba.p_value);
    CHECK(ab.df == ba.df);
  }

  TEST_CASE("welch degrees of freedom follow Satterthwaite") {
    // equal variances and sizes: df = 2(n-1)
    VectorXd a(4), b(4);
    a << 0.0, 1.0, 2.0, 3.0;
    b << 10.0, 11.0, 12.0, 13.0;
    const auto res = welch_t_test(a, b);
    CHECK(res.df == doctest::Approx(6.0).epsilon(1e-12));
  }

  TEST_CASE("a unit mean shift at n=500 is decisively detected") {
    SemiSupervisedDataset ds;
    ds.labeled_x = normal_sample(500, 0.0, 4);
    ds.unlabeled_x = normal_sample(500, 1.0, 5);
    ds.labeled_y = VectorXd::Ones(500);
    const auto rep = mcar_tests(ds);
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].p_ttest < 0.001);
    CHECK(rep.rows[0].p_wilcoxon < 0.001);
    CHECK(rep.rows[0].p_ps < 0.001);
  }

  TEST_CASE("welch null p-values are close to uniform") {
    // 200 seeded null repetitions; compare against U(0,1) by KS distance
    std::vector<double> pvals;
    for (std::uint64_t s = 0; s < 200; ++s) {
      const VectorXd a = normal_sample(60, 0.0, 1000 + 2 * s);
      const VectorXd b = normal_sample(80, 0.0, 1001 + 2 * s);
      pvals.push_back(welch_t_test(a, b).p_value);
    }
    std::sort(pvals.begin(), pvals.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < pvals.size(); ++i) {
      const double ecdf_hi = static_cast<double>(i + 1) / 200.0;
      const double ecdf_lo = static_cast<double>(i) / 200.0;
      ks = std::max(ks, std::max(std::abs(ecdf_hi - pvals[i]), std::abs(pvals[i] - ecdf_lo)));
    }
    CHECK(ks < 0.12);
  }

  TEST_CASE("wilcoxon statistic is invariant under monotone transforms") {
    const VectorXd a = normal_sample(25, 0.0, 6);
    const VectorXd b = normal_sample(35, 0.3, 7);
    const auto raw = wilcoxon_rank_sum(a, b);
    const VectorXd ta = a.array().exp();
    const VectorXd tb = b.array().exp();
    const auto transformed = wilcoxon_rank_sum(ta, tb);
    CHECK(raw.statistic == transformed.statistic);
    CHECK(raw.p_value == transformed.p_value);
  }

  TEST_CASE("wilcoxon on a tiny hand-checked instance") {
    VectorXd a(2), b(2);
    a << 1.0, 2.0;
    b << 3.0, 4.0;
    const auto res = wilcoxon_rank_sum(a, b);
    CHECK(res.statistic == 0.0);  // U = ranksum 3 - 3
    // z = (0 - 2 + 0.5)/sqrt(5/3), two-sided normal p
    CHECK(res.z == doctest::Approx(-1.5 / std::sqrt(5.0 / 3.0)).epsilon(1e-12));
    CHECK(res.p_value == doctest::Approx(0.245278).epsilon(1e-4));
  }

  TEST_CASE("wilcoxon applies the tie correction") {
    VectorXd a(3), b(3);
    a << 1.0, 1.0, 2.0;
    b << 1.0, 3.0, 3.0;
    const auto res = wilcoxon_rank_sum(a, b);
    CHECK(std::isfinite(res.p_value));
    CHECK(res.p_value > 0.0);
    CHECK(res.p_value <= 1.0);
  }

  TEST_CASE("logistic regression recovers planted coefficients") {
    Rng rng(8);
    const Eigen::Index n = 4000;
    MatrixXd x(n, 3);
    VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = rng.normal();
      x(i, 2) = rng.normal();
      const double lin = 0.5 + 1.0 * x(i, 1) - 1.0 * x(i, 2);
      y(i) = rng.uniform() < 1.0 / (1.0 + std::exp(-lin)) ? 1.0 : 0.0;
    }
    const auto fit = logistic_regression(x, y);
    REQUIRE(fit.converged);
    CHECK_FALSE(fit.separation);
    CHECK(std::abs(fit.beta(0) - 0.5) < 3.5 * fit.se(0));
    CHECK(std::abs(fit.beta(1) - 1.0) < 3.5 * fit.se(1));
    CHECK(std::abs(fit.beta(2) + 1.0) < 3.5 * fit.se(2));
  }

  TEST_CASE("perfect separation is flagged") {
    MatrixXd x(8, 2);
    VectorXd y(8);
    for (int i = 0; i < 8; ++i) {
      x(i, 0) = 1.0;
      x(i, 1) = i < 4 ? -2.0 - i : 2.0 + i;
      y(i) = i < 4 ? 0.0 : 1.0;
    }
    const auto fit = logistic_regression(x, y);
    CHECK(fit.separation);
  }

  TEST_CASE("mcar battery marks degenerate covariates undefined") {
    Rng rng(9);
    SemiSupervisedDataset ds;
    ds.labeled_x.resize(30, 2);
    ds.unlabeled_x.resize(40, 2);
    for (Eigen::Index i = 0; i < 30; ++i) {
      ds.labeled_x(i, 0) = rng.normal();
      ds.labeled_x(i, 1) = 2.0;  // constant everywhere
    }
    for (Eigen::Index i = 0; i < 40; ++i) {
      ds.unlabeled_x(i, 0) = rng.normal();
      ds.unlabeled_x(i, 1) = 2.0;
    }
    ds.labeled_y = VectorXd::Ones(30);
    ds.covariate_names = {"ok", "flat"};
    const auto rep = mcar_tests(ds);
    REQUIRE(rep.rows.size() == 2);
    CHECK(std::isfinite(rep.rows[0].p_ttest));
    CHECK(std::isnan(rep.rows[1].p_ttest));
    CHECK(std::isnan(rep.rows[1].p_wilcoxon));
    CHECK(std::isnan(rep.rows[1].p_ps));
    CHECK(std::isfinite(rep.intercept_p));  // intercept row always reported
  }

  TEST_CASE("mcar battery needs both samples") {
    SemiSupervisedDataset ds;
    ds.labeled_x = normal_sample(10, 0.0, 10);
    ds.labeled_y = VectorXd::Ones(10);
    ds.unlabeled_x.resize(0, 1);
    CHECK_THROWS_AS(mcar_tests(ds), DataError);
  }

  TEST_CASE("mcar csv carries the table layout with an intercept row") {
    SemiSupervisedDataset ds;
    ds.labeled_x = normal_sample(50, 0.0, 11);
    ds.unlabeled_x = normal_sample(60, 0.1, 12);
    ds.labeled_y = VectorXd::Ones(50);
    ds.covariate_names = {"age"};
    const auto rep = mcar_tests(ds);
    const std::string csv = report::mcar_csv(rep);
    CHECK(csv.find("covariate,labeled_mean,labeled_sd,unlabeled_mean,unlabeled_sd,"
                   "p_ttest,p_wilcoxon,p_ps_model") == 0);
    CHECK(csv.find("age,") != std::string::npos);
    CHECK(csv.find("(Intercept),NA,NA,NA,NA,NA,NA,") != std::string::npos);
  }
}
