#include "ease/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ease/linalg.hpp"
#include "ease/stats.hpp"

namespace ease {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double sample_sd(const VectorXd& v) {
  if (v.size() < 2) return kNan;
  const double mu = v.mean();
  return std::sqrt((v.array() - mu).square().sum() / static_cast<double>(v.size() - 1));
}
}  // namespace

WelchResult welch_t_test(const VectorXd& a, const VectorXd& b) {
  if (a.size() < 2 || b.size() < 2) throw DataError("welch_t_test: need >= 2 values per sample");
  const double n1 = static_cast<double>(a.size());
  const double n2 = static_cast<double>(b.size());
  const double m1 = a.mean();
  const double m2 = b.mean();
  const double v1 = (a.array() - m1).square().sum() / (n1 - 1.0);
  const double v2 = (b.array() - m2).square().sum() / (n2 - 1.0);
  WelchResult res;
  const double q1 = v1 / n1;
  const double q2 = v2 / n2;
  if (q1 + q2 <= 0.0) {
    res.statistic = kNan;
    res.df = kNan;
    res.p_value = kNan;
    return res;
  }
  res.statistic = (m1 - m2) / std::sqrt(q1 + q2);
  res.df = (q1 + q2) * (q1 + q2) / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
  res.p_value = stats::student_t_pvalue_two_sided(res.statistic, res.df);
  return res;
}

WilcoxonResult wilcoxon_rank_sum(const VectorXd& a, const VectorXd& b) {
  const Eigen::Index n1 = a.size();
  const Eigen::Index n2 = b.size();
  if (n1 < 1 || n2 < 1) throw DataError("wilcoxon_rank_sum: empty sample");
  const Eigen::Index n = n1 + n2;
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n1; ++i) pooled.emplace_back(a(i), 0);
  for (Eigen::Index i = 0; i < n2; ++i) pooled.emplace_back(b(i), 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  // midranks, accumulating the tie correction sum(t^3 - t)
  double rank_sum1 = 0.0;
  double tie_sum = 0.0;
  std::size_t i = 0;
  while (i < pooled.size()) {
    std::size_t j = i;
    while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 0) rank_sum1 += midrank;
    }
    tie_sum += t * t * t - t;
    i = j;
  }

  WilcoxonResult res;
  const double dn1 = static_cast<double>(n1);
  const double dn2 = static_cast<double>(n2);
  const double dn = static_cast<double>(n);
  res.statistic = rank_sum1 - dn1 * (dn1 + 1.0) / 2.0;  // U statistic
  const double mean_u = dn1 * dn2 / 2.0;
  const double var_u = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_sum / (dn * (dn - 1.0)));
  if (!(var_u > 0.0)) {
    res.z = kNan;
    res.p_value = kNan;
    return res;
  }
  double num = res.statistic - mean_u;
  if (num > 0.5) {
    num -= 0.5;  // continuity correction toward the mean
  } else if (num < -0.5) {
    num += 0.5;
  } else {
    num = 0.0;
  }
  res.z = num / std::sqrt(var_u);
  res.p_value = stats::normal_pvalue_two_sided(res.z);
  return res;
}

LogisticFit logistic_regression(const MatrixXd& x, const VectorXd& y01) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (y01.size() != n) throw DataError("logistic_regression: response length mismatch");
  LogisticFit fit;
  fit.beta = VectorXd::Zero(d);

  constexpr int kMaxIter = 50;
  constexpr double kScoreTol = 1e-8;
  constexpr double kSeparationNorm = 1e3;

  MatrixXd xtwx(d, d);
  for (int it = 1; it <= kMaxIter; ++it) {
    fit.iterations = it;
    const VectorXd lin = x * fit.beta;
    const VectorXd prob = (1.0 / (1.0 + (-lin.array()).exp())).matrix();
    const VectorXd w = (prob.array() * (1.0 - prob.array())).matrix();
    const VectorXd score = x.transpose() * (y01 - prob) / static_cast<double>(n);
    if (score.lpNorm<Eigen::Infinity>() < kScoreTol) {
      fit.converged = true;
      // fitted probabilities pinned at 0/1 mean the likelihood ran off to a
      // separating direction before the norm guard could trigger
      if (prob.minCoeff() < 1e-12 || prob.maxCoeff() > 1.0 - 1e-12) {
        fit.separation = true;
      }
    }
    xtwx = x.transpose() * w.asDiagonal() * x;
    if (fit.converged) break;
    Eigen::LDLT<MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success) {
      fit.separation = true;
      break;
    }
    fit.beta += ldlt.solve(x.transpose() * (y01 - prob));
    if (fit.beta.norm() > kSeparationNorm) {
      fit.separation = true;
      break;
    }
  }
  if (fit.converged && !fit.separation) {
    Eigen::LDLT<MatrixXd> ldlt(xtwx);
    const MatrixXd cov = ldlt.solve(MatrixXd::Identity(d, d));
    fit.se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    fit.p_value.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      fit.p_value(j) = fit.se(j) > 0.0
                           ? stats::normal_pvalue_two_sided(fit.beta(j) / fit.se(j))
                           : kNan;
    }
  }
  return fit;
}

McarReport mcar_tests(const SemiSupervisedDataset& ds) {
  if (ds.n() < 2 || ds.big_n() < 2) {
    throw DataError("mcar_tests: need at least 2 labeled and 2 unlabeled rows");
  }
  const Eigen::Index p = ds.p();
  McarReport rep;

  MatrixXd pooled(ds.n() + ds.big_n(), p);
  pooled.topRows(ds.n()) = ds.labeled_x;
  pooled.bottomRows(ds.big_n()) = ds.unlabeled_x;

  std::vector<bool> degenerate(static_cast<std::size_t>(p), false);
  std::vector<Eigen::Index> live;
  for (Eigen::Index j = 0; j < p; ++j) {
    const double var = (pooled.col(j).array() - pooled.col(j).mean()).square().sum() /
                       static_cast<double>(pooled.rows() - 1);
    if (var > 0.0) {
      live.push_back(j);
    } else {
      degenerate[static_cast<std::size_t>(j)] = true;
    }
  }

  // one joint propensity model: labeling indicator on the non-degenerate covariates
  MatrixXd ps_design(pooled.rows(), static_cast<Eigen::Index>(live.size()));
  for (std::size_t c = 0; c < live.size(); ++c) {
    ps_design.col(static_cast<Eigen::Index>(c)) = pooled.col(live[c]);
  }
  VectorXd indicator = VectorXd::Zero(pooled.rows());
  indicator.head(ds.n()).setOnes();
  const LogisticFit ps = logistic_regression(linalg::augment_design(ps_design), indicator);
  rep.ps_converged = ps.converged;
  rep.ps_separation = ps.separation;
  const bool ps_ok = ps.converged && !ps.separation;
  rep.intercept_p = ps_ok ? ps.p_value(0) : kNan;
  std::vector<double> ps_p(static_cast<std::size_t>(p), kNan);
  if (ps_ok) {
    for (std::size_t c = 0; c < live.size(); ++c) {
      ps_p[static_cast<std::size_t>(live[c])] = ps.p_value(static_cast<Eigen::Index>(c) + 1);
    }
  }

  for (Eigen::Index j = 0; j < p; ++j) {
    McarRow row;
    row.covariate = ds.covariate_names.empty() ? "x" + std::to_string(j + 1)
                                               : ds.covariate_names[static_cast<std::size_t>(j)];
    const VectorXd lab = ds.labeled_x.col(j);
    const VectorXd unl = ds.unlabeled_x.col(j);
    row.labeled_mean = lab.mean();
    row.labeled_sd = sample_sd(lab);
    row.unlabeled_mean = unl.mean();
    row.unlabeled_sd = sample_sd(unl);

    if (degenerate[static_cast<std::size_t>(j)]) {
      row.p_ttest = kNan;
      row.p_wilcoxon = kNan;
      row.p_ps = kNan;
    } else {
      row.p_ttest = welch_t_test(lab, unl).p_value;
      row.p_wilcoxon = wilcoxon_rank_sum(lab, unl).p_value;
      row.p_ps = ps_p[static_cast<std::size_t>(j)];
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

}  // namespace ease
