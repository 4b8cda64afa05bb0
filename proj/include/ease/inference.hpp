#pragma once

#include <vector>

#include "ease/common.hpp"
#include "ease/data.hpp"
#include "ease/estimators.hpp"

namespace ease {

enum class GammaChoice { kLabeledGram, kUnlabeledGram };

struct InfluenceEstimates {
  MatrixXd psi0;      // n x (p+1), OLS influence rows
  MatrixXd psi_snp;   // n x (p+1), SNP influence rows (row i uses its fold's smoother + eta)
  MatrixXd gamma_hat;
  std::vector<VectorXd> eta_k;  // double-CV refit coefficients
};

struct CovarianceReport {
  MatrixXd sigma_mu;    // second moment of the SNP influence rows
  MatrixXd sigma_ease;  // second moment of the combined rows psi0 + delta*(psi - psi0)
  VectorXd delta;
  double epsilon_n = 0.0;
  VectorXd se;
  VectorXd ci_lower, ci_upper;
  double level = 0.95;
};

// For each k, eta^k solves the score equations summed over the folds k' != k,
// each block's offsets from the smoother trained on that block's complement.
std::vector<VectorXd> double_cv_eta(const SemiSupervisedDataset& ds,
                                    const FoldSmoothers& smoothers, int jobs = 1);

// OLS influence rows psi0_i = gamma^-1 xvec_i (y_i - xvec_i' theta).
MatrixXd influence_ols(const SemiSupervisedDataset& ds, const ThetaEstimate& theta_ols,
                       GammaChoice gamma_choice);

InfluenceEstimates estimate_influences(const SemiSupervisedDataset& ds,
                                       const ImputationModel& model,
                                       const ThetaEstimate& theta_ols,
                                       GammaChoice gamma_choice, int jobs = 1);

// Uncentered second-moment matrix n^-1 sum psi psi'.
MatrixXd estimate_sigma(const MatrixXd& psi_rows);

// Per-coordinate combination weights delta_l = sigma12 / (sigma22 + eps_n).
VectorXd estimate_delta(const MatrixXd& psi0, const MatrixXd& psi_snp, double epsilon_n);

double default_epsilon_n(Eigen::Index n);

// SEs and normal CIs for a theta whose influence rows are
// psi0 + delta .* (psi_snp - psi0); delta = 0 reproduces the OLS report and
// delta = 1 the SNP report.
CovarianceReport confidence_report(const ThetaEstimate& theta, const InfluenceEstimates& infl,
                                   const VectorXd& delta, double level);

}  // namespace ease
