#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ease/common.hpp"
#include "ease/data.hpp"
#include "ease/linalg.hpp"
#include "ease/smoothing.hpp"

namespace ease {

struct EstimateProvenance {
  int k_folds = 1;
  std::string smoother;    // "ks" | "km" | "injected" | ""
  std::string projection;  // origin string, "" when not applicable
  std::vector<std::string> warnings;
};

// A fitted coefficient vector (intercept first) together with the Gram
// matrices of the designs that defined it. Construction verifies the
// normal-equation residual to 1e-8 relative.
struct ThetaEstimate {
  VectorXd theta;
  std::string method;  // "ols" | "np" | "snp" | "ease"
  MatrixXd gram_labeled;     // empty when not applicable
  MatrixXd gram_unlabeled;
  EstimateProvenance provenance;

  Eigen::Index dim() const { return theta.size(); }
};

struct RefitCoefficients {
  VectorXd eta;                         // solves the cross-fitted offset normal equations
  std::vector<VectorXd> per_fold_eta;   // double-CV etas, filled by inference
};

struct ImputationModel {
  FoldSmoothers smoothers;
  RefitCoefficients eta;
};

ThetaEstimate fit_ols(const MatrixXd& labeled_x, const VectorXd& labeled_y);
ThetaEstimate fit_ols(const SemiSupervisedDataset& ds);

struct NpOptions {
  KernelSpec kernel;                 // q > p expected; violation only warns
  std::optional<double> bandwidth;   // default n^{-1/(q+p)} on standardized scale
  std::function<double(const VectorXd&)> injected_mhat;  // test seam
  int jobs = 1;
};

// Fully non-parametric route: p-dimensional local-constant smoothing of the
// labeled data, then a least-squares fit of the imputed unlabeled outcomes.
ThetaEstimate fit_np(const SemiSupervisedDataset& ds, const NpOptions& opts);

// Offset refit: eta solves
//   n^-1 sum_k sum_{i in fold k} xvec_i (y_i - mhat_k(x_i) - xvec_i' eta) = 0,
// with fold-k offsets from the smoother trained on the fold-k complement.
RefitCoefficients refit_eta(const SemiSupervisedDataset& ds, const FoldSmoothers& smoothers,
                            int jobs = 1);

// mu(x) = K^-1 sum_k mhat_k(x) + xvec' eta
VectorXd impute_mu(const ImputationModel& model, const MatrixXd& rows, int jobs = 1);

struct SnpFit {
  ThetaEstimate theta;
  ImputationModel model;
};

SnpFit fit_snp(const SemiSupervisedDataset& ds, const SmootherPolicy& policy,
               const DimredPolicy& dimred, int k_folds, std::uint64_t seed, int jobs = 1);

// Variant reusing an existing fold partition (so SNP/EASE variants in one
// replication share folds).
SnpFit fit_snp_with_folds(const SemiSupervisedDataset& ds, const FoldAssignment& folds,
                          const SmootherPolicy& policy, const DimredPolicy& dimred,
                          std::uint64_t seed, int jobs = 1);

// Coordinate-wise combination theta_ols + delta .* (theta_snp - theta_ols).
ThetaEstimate combine_ease(const ThetaEstimate& ols, const ThetaEstimate& snp,
                           const VectorXd& delta);

}  // namespace ease
