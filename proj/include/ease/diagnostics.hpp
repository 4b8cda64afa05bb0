#pragma once

#include <string>
#include <vector>

#include "ease/common.hpp"
#include "ease/data.hpp"

namespace ease {

struct WelchResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

struct WilcoxonResult {
  double statistic = 0.0;  // rank-sum U of the first sample
  double z = 0.0;
  double p_value = 1.0;
};

// Welch two-sample t-test with Satterthwaite degrees of freedom.
WelchResult welch_t_test(const VectorXd& a, const VectorXd& b);

// Wilcoxon rank-sum; normal approximation with midranks, tie correction and
// continuity correction.
WilcoxonResult wilcoxon_rank_sum(const VectorXd& a, const VectorXd& b);

struct LogisticFit {
  VectorXd beta;     // intercept first
  VectorXd se;
  VectorXd p_value;  // Wald, two-sided
  bool converged = false;
  bool separation = false;
  int iterations = 0;
};

// IRLS logistic regression of a binary response on an augmented design.
LogisticFit logistic_regression(const MatrixXd& x, const VectorXd& y01);

struct McarRow {
  std::string covariate;
  double labeled_mean = 0.0, labeled_sd = 0.0;
  double unlabeled_mean = 0.0, unlabeled_sd = 0.0;
  double p_ttest = 0.0, p_wilcoxon = 0.0, p_ps = 0.0;  // NaN when undefined
};

struct McarReport {
  std::vector<McarRow> rows;
  double intercept_p = 0.0;  // propensity-model intercept
  bool ps_converged = true;
  bool ps_separation = false;
};

// Per-covariate labeled-vs-unlabeled comparisons plus one joint logistic
// propensity model of the labeling indicator.
McarReport mcar_tests(const SemiSupervisedDataset& ds);

}  // namespace ease
