#include "ease/estimators.hpp"

#include <cmath>

#include "ease/rng.hpp"

namespace ease {

namespace {

// defining normal equations must hold to 1e-8 relative; the response scale
// anchors the tolerance when the solution itself is numerically zero
void verify_normal_equations(const MatrixXd& gram, const VectorXd& rhs, const VectorXd& theta,
                             double response_scale, const std::string& who) {
  const double resid = (gram * theta - rhs).norm();
  const double tol = 1e-8 * std::max(rhs.norm(), gram.norm() * theta.norm()) +
                     1e-12 * (1.0 + gram.norm()) * std::max(1.0, response_scale);
  if (!(resid <= tol)) {
    throw NumericError(who + ": normal-equation residual " + std::to_string(resid) +
                       " exceeds tolerance " + std::to_string(tol));
  }
}

VectorXd qr_solve_checked(const MatrixXd& design, const VectorXd& rhs, const std::string& who,
                          const std::vector<std::string>& names) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) {
    std::string msg = who + ": rank-deficient design; dependent columns:";
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < design.cols(); ++i) {
      const Eigen::Index col = perm(i);
      msg += " ";
      if (col == 0) {
        msg += "(intercept)";
      } else if (!names.empty() && static_cast<std::size_t>(col - 1) < names.size()) {
        msg += names[static_cast<std::size_t>(col - 1)];
      } else {
        msg += "x" + std::to_string(col);
      }
    }
    throw NumericError(msg);
  }
  return qr.solve(rhs);
}

}  // namespace

ThetaEstimate fit_ols(const MatrixXd& labeled_x, const VectorXd& labeled_y) {
  if (labeled_x.rows() != labeled_y.size() || labeled_x.rows() == 0) {
    throw DataError("fit_ols: mismatched or empty labeled data");
  }
  const MatrixXd design = linalg::augment_design(labeled_x);
  ThetaEstimate est;
  est.theta = qr_solve_checked(design, labeled_y, "fit_ols", {});
  est.method = "ols";
  est.gram_labeled = linalg::assemble_gram(labeled_x, linalg::GramSource::kLabeled).matrix;
  const VectorXd rhs = design.transpose() * labeled_y / static_cast<double>(labeled_x.rows());
  verify_normal_equations(est.gram_labeled, rhs, est.theta,
                          labeled_y.cwiseAbs().maxCoeff(), "fit_ols");
  return est;
}

ThetaEstimate fit_ols(const SemiSupervisedDataset& ds) {
  ThetaEstimate est = fit_ols(ds.labeled_x, ds.labeled_y);
  if (ds.big_n() > 0) {
    est.gram_unlabeled = linalg::assemble_gram(ds.unlabeled_x, linalg::GramSource::kUnlabeled).matrix;
  }
  return est;
}

ThetaEstimate fit_np(const SemiSupervisedDataset& ds, const NpOptions& opts) {
  ds.validate();
  if (ds.big_n() == 0) throw DataError("fit_np: no unlabeled rows to fit on");
  const auto p = static_cast<int>(ds.p());

  EstimateProvenance prov;
  prov.k_folds = 1;
  prov.projection = "identity";

  VectorXd imputed;
  if (opts.injected_mhat) {
    prov.smoother = "injected";
    imputed.resize(ds.big_n());
    for (Eigen::Index j = 0; j < ds.big_n(); ++j) {
      imputed(j) = opts.injected_mhat(ds.unlabeled_x.row(j).transpose());
    }
  } else {
    KernelSpec spec = opts.kernel;
    spec.dim = p;
    spec.validate();
    if (spec.order <= p) {
      prov.warnings.push_back("fit_np: kernel order q=" + std::to_string(spec.order) +
                              " does not exceed p=" + std::to_string(p) +
                              "; the full-dimensional route expects q > p");
    }
    prov.smoother = "ks";
    const double h =
        opts.bandwidth.value_or(std::pow(static_cast<double>(ds.n()),
                                         -1.0 / static_cast<double>(spec.order + p)));
    const SmootherFit mhat = SmootherFit::local_constant(
        ds.labeled_x, ds.labeled_y, identity_projection(ds.p()), spec, h);
    imputed = mhat.predict_many(ds.unlabeled_x, opts.jobs);
  }

  const MatrixXd design = linalg::augment_design(ds.unlabeled_x);
  ThetaEstimate est;
  est.theta = qr_solve_checked(design, imputed, "fit_np", ds.covariate_names);
  est.method = "np";
  est.gram_labeled = linalg::assemble_gram(ds.labeled_x, linalg::GramSource::kLabeled).matrix;
  est.gram_unlabeled = linalg::assemble_gram(ds.unlabeled_x, linalg::GramSource::kUnlabeled).matrix;
  est.provenance = prov;
  const VectorXd rhs = design.transpose() * imputed / static_cast<double>(ds.big_n());
  verify_normal_equations(est.gram_unlabeled, rhs, est.theta,
                          imputed.cwiseAbs().maxCoeff(), "fit_np");
  return est;
}

RefitCoefficients refit_eta(const SemiSupervisedDataset& ds, const FoldSmoothers& smoothers,
                            int jobs) {
  const auto& folds = smoothers.folds;
  if (static_cast<Eigen::Index>(folds.membership.size()) != ds.n()) {
    throw ConfigError("refit_eta: fold assignment does not match the dataset");
  }
  VectorXd offsets(ds.n());
  for (int k = 1; k <= folds.k_folds; ++k) {
    const auto idx = folds.fold_indices(k);
    if (idx.empty()) continue;
    const VectorXd pred =
        smoothers.fits[static_cast<std::size_t>(k - 1)].predict_many(select_rows(ds.labeled_x, idx), jobs);
    for (std::size_t i = 0; i < idx.size(); ++i) offsets(idx[i]) = pred(static_cast<Eigen::Index>(i));
  }
  const MatrixXd design = linalg::augment_design(ds.labeled_x);
  const VectorXd resid = ds.labeled_y - offsets;
  RefitCoefficients out;
  out.eta = qr_solve_checked(design, resid, "refit_eta", ds.covariate_names);
  const MatrixXd gram = linalg::assemble_gram(ds.labeled_x, linalg::GramSource::kLabeled).matrix;
  const VectorXd rhs = design.transpose() * resid / static_cast<double>(ds.n());
  verify_normal_equations(gram, rhs, out.eta, ds.labeled_y.cwiseAbs().maxCoeff(), "refit_eta");
  return out;
}

VectorXd impute_mu(const ImputationModel& model, const MatrixXd& rows, int jobs) {
  const int k_folds = model.smoothers.folds.k_folds;
  VectorXd acc = VectorXd::Zero(rows.rows());
  for (int k = 1; k <= k_folds; ++k) {
    acc += model.smoothers.fits[static_cast<std::size_t>(k - 1)].predict_many(rows, jobs);
  }
  acc /= static_cast<double>(k_folds);
  acc += linalg::augment_design(rows) * model.eta.eta;
  return acc;
}

SnpFit fit_snp_with_folds(const SemiSupervisedDataset& ds, const FoldAssignment& folds,
                          const SmootherPolicy& policy, const DimredPolicy& dimred,
                          std::uint64_t seed, int jobs) {
  ds.validate();
  if (ds.big_n() == 0) throw DataError("fit_snp: no unlabeled rows to fit on");

  SnpFit out;
  out.model.smoothers = fit_fold_smoothers(ds, folds, policy, dimred, seed, jobs);
  out.model.eta = refit_eta(ds, out.model.smoothers, jobs);

  const VectorXd mu = impute_mu(out.model, ds.unlabeled_x, jobs);
  const MatrixXd design = linalg::augment_design(ds.unlabeled_x);
  out.theta.theta = qr_solve_checked(design, mu, "fit_snp", ds.covariate_names);
  out.theta.method = "snp";
  out.theta.gram_labeled = linalg::assemble_gram(ds.labeled_x, linalg::GramSource::kLabeled).matrix;
  out.theta.gram_unlabeled =
      linalg::assemble_gram(ds.unlabeled_x, linalg::GramSource::kUnlabeled).matrix;
  out.theta.provenance.k_folds = folds.k_folds;
  out.theta.provenance.smoother = policy.method == SmootherMethod::kKernelRidge ? "km"
                                  : policy.method == SmootherMethod::kInjected  ? "injected"
                                                                                : "ks";
  out.theta.provenance.projection =
      to_string(out.model.smoothers.fits.front().projection().origin);
  if (folds.k_folds == 1) {
    out.theta.provenance.warnings.push_back(
        "fit_snp: K=1 skips cross-fitting; the single-fold route needs kernel order q > r/2 "
        "and can carry substantial finite-sample bias");
  }
  const VectorXd rhs = design.transpose() * mu / static_cast<double>(ds.big_n());
  verify_normal_equations(out.theta.gram_unlabeled, rhs, out.theta.theta,
                          mu.cwiseAbs().maxCoeff(), "fit_snp");
  return out;
}

SnpFit fit_snp(const SemiSupervisedDataset& ds, const SmootherPolicy& policy,
               const DimredPolicy& dimred, int k_folds, std::uint64_t seed, int jobs) {
  if (k_folds < 1) throw ConfigError("fit_snp: K must be >= 1");
  const FoldAssignment folds = partition_folds(ds.n(), k_folds, derive_seed(seed, 0xf01d5));
  return fit_snp_with_folds(ds, folds, policy, dimred, derive_seed(seed, 0x500f17), jobs);
}

ThetaEstimate combine_ease(const ThetaEstimate& ols, const ThetaEstimate& snp,
                           const VectorXd& delta) {
  if (ols.dim() != snp.dim() || delta.size() != ols.dim()) {
    throw ConfigError("combine_ease: dimension mismatch");
  }
  ThetaEstimate est;
  est.theta = ols.theta + delta.cwiseProduct(snp.theta - ols.theta);
  est.method = "ease";
  est.gram_labeled = ols.gram_labeled;
  est.gram_unlabeled = snp.gram_unlabeled;
  est.provenance = snp.provenance;
  return est;
}

}  // namespace ease
