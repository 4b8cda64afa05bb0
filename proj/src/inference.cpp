#include "ease/inference.hpp"

#include <cmath>

#include "ease/linalg.hpp"
#include "ease/stats.hpp"

namespace ease {

namespace {

MatrixXd pick_gamma(const SemiSupervisedDataset& ds, GammaChoice choice) {
  if (choice == GammaChoice::kUnlabeledGram) {
    if (ds.big_n() == 0) {
      throw ConfigError("influence estimation: unlabeled Gram requested but no unlabeled rows");
    }
    return linalg::assemble_gram(ds.unlabeled_x, linalg::GramSource::kUnlabeled).matrix;
  }
  return linalg::assemble_gram(ds.labeled_x, linalg::GramSource::kLabeled).matrix;
}

// rows_i = gamma^-1 (xvec_i * resid_i)
MatrixXd influence_rows(const MatrixXd& design, const VectorXd& resid, const MatrixXd& gamma) {
  const MatrixXd scaled = design.array().colwise() * resid.array();
  return linalg::solve_spd_multi(gamma, MatrixXd(scaled.transpose())).transpose();
}

}  // namespace

std::vector<VectorXd> double_cv_eta(const SemiSupervisedDataset& ds,
                                    const FoldSmoothers& smoothers, int jobs) {
  const auto& folds = smoothers.folds;
  const int k_folds = folds.k_folds;
  if (k_folds < 2) {
    throw ConfigError("double_cv_eta: unsupported for K=1, the construction needs held-out blocks");
  }
  // cross-fitted offsets, one pass
  VectorXd offsets(ds.n());
  for (int k = 1; k <= k_folds; ++k) {
    const auto idx = folds.fold_indices(k);
    if (idx.empty()) continue;
    const VectorXd pred =
        smoothers.fits[static_cast<std::size_t>(k - 1)].predict_many(select_rows(ds.labeled_x, idx), jobs);
    for (std::size_t i = 0; i < idx.size(); ++i) offsets(idx[i]) = pred(static_cast<Eigen::Index>(i));
  }
  const MatrixXd design = linalg::augment_design(ds.labeled_x);
  const VectorXd resid = ds.labeled_y - offsets;

  std::vector<VectorXd> etas;
  etas.reserve(static_cast<std::size_t>(k_folds));
  for (int k = 1; k <= k_folds; ++k) {
    const auto keep = folds.complement_indices(k);
    const MatrixXd d_k = select_rows(design, keep);
    const VectorXd r_k = select_rows(resid, keep);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(d_k);
    qr.setThreshold(1e-10);
    if (qr.rank() < d_k.cols()) {
      throw NumericError("double_cv_eta: rank-deficient design after removing fold " +
                         std::to_string(k));
    }
    etas.push_back(qr.solve(r_k));
  }
  return etas;
}

MatrixXd influence_ols(const SemiSupervisedDataset& ds, const ThetaEstimate& theta_ols,
                       GammaChoice gamma_choice) {
  const MatrixXd gamma = pick_gamma(ds, gamma_choice);
  const MatrixXd design = linalg::augment_design(ds.labeled_x);
  const VectorXd resid = ds.labeled_y - design * theta_ols.theta;
  return influence_rows(design, resid, gamma);
}

InfluenceEstimates estimate_influences(const SemiSupervisedDataset& ds,
                                       const ImputationModel& model,
                                       const ThetaEstimate& theta_ols,
                                       GammaChoice gamma_choice, int jobs) {
  InfluenceEstimates out;
  out.gamma_hat = pick_gamma(ds, gamma_choice);
  out.eta_k = double_cv_eta(ds, model.smoothers, jobs);

  const MatrixXd design = linalg::augment_design(ds.labeled_x);
  const VectorXd resid0 = ds.labeled_y - design * theta_ols.theta;
  out.psi0 = influence_rows(design, resid0, out.gamma_hat);

  const auto& folds = model.smoothers.folds;
  VectorXd mu_hat(ds.n());
  for (int k = 1; k <= folds.k_folds; ++k) {
    const auto idx = folds.fold_indices(k);
    if (idx.empty()) continue;
    const MatrixXd x_k = select_rows(ds.labeled_x, idx);
    const VectorXd m_k =
        model.smoothers.fits[static_cast<std::size_t>(k - 1)].predict_many(x_k, jobs);
    const VectorXd lin = linalg::augment_design(x_k) * out.eta_k[static_cast<std::size_t>(k - 1)];
    for (std::size_t i = 0; i < idx.size(); ++i) {
      mu_hat(idx[i]) = m_k(static_cast<Eigen::Index>(i)) + lin(static_cast<Eigen::Index>(i));
    }
  }
  const VectorXd resid_snp = ds.labeled_y - mu_hat;
  out.psi_snp = influence_rows(design, resid_snp, out.gamma_hat);
  return out;
}

MatrixXd estimate_sigma(const MatrixXd& psi_rows) {
  if (psi_rows.rows() < 1) throw DataError("estimate_sigma: need at least one row");
  return psi_rows.transpose() * psi_rows / static_cast<double>(psi_rows.rows());
}

VectorXd estimate_delta(const MatrixXd& psi0, const MatrixXd& psi_snp, double epsilon_n) {
  if (psi0.rows() != psi_snp.rows() || psi0.cols() != psi_snp.cols()) {
    throw ConfigError("estimate_delta: shape mismatch");
  }
  const double n = static_cast<double>(psi0.rows());
  VectorXd delta(psi0.cols());
  for (Eigen::Index l = 0; l < psi0.cols(); ++l) {
    const VectorXd diff = psi_snp.col(l) - psi0.col(l);
    const double sigma12 = -psi0.col(l).dot(diff) / n;
    const double sigma22 = diff.squaredNorm() / n;
    delta(l) = sigma12 / (sigma22 + epsilon_n);
  }
  return delta;
}

double default_epsilon_n(Eigen::Index n) {
  return std::pow(static_cast<double>(n), -0.25);
}

CovarianceReport confidence_report(const ThetaEstimate& theta, const InfluenceEstimates& infl,
                                   const VectorXd& delta, double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw ConfigError("confidence_report: level must lie in (0,1)");
  }
  if (delta.size() != theta.dim() || infl.psi0.cols() != theta.dim()) {
    throw ConfigError("confidence_report: dimension mismatch");
  }
  const Eigen::Index n = infl.psi0.rows();

  CovarianceReport rep;
  rep.level = level;
  rep.delta = delta;
  rep.epsilon_n = default_epsilon_n(n);
  rep.sigma_mu = estimate_sigma(infl.psi_snp);

  MatrixXd psi_comb = infl.psi0;
  for (Eigen::Index l = 0; l < delta.size(); ++l) {
    psi_comb.col(l) += delta(l) * (infl.psi_snp.col(l) - infl.psi0.col(l));
  }
  rep.sigma_ease = estimate_sigma(psi_comb);

  for (MatrixXd* m : {&rep.sigma_mu, &rep.sigma_ease}) {
    *m = 0.5 * (*m + m->transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(*m);
    const double floor = -1e-10 * std::max(m->trace(), 1.0);
    if (es.eigenvalues().minCoeff() < floor) {
      throw NumericError("confidence_report: covariance matrix not PSD, upstream corruption");
    }
  }

  const double z = stats::normal_quantile(0.5 + level / 2.0);
  rep.se = (rep.sigma_ease.diagonal() / static_cast<double>(n)).cwiseSqrt();
  rep.ci_lower = theta.theta - z * rep.se;
  rep.ci_upper = theta.theta + z * rep.se;
  return rep;
}

}  // namespace ease
