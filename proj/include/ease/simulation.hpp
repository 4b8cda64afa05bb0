#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ease/common.hpp"
#include "ease/data.hpp"
#include "ease/estimators.hpp"
#include "ease/inference.hpp"

namespace ease {

enum class DgpModel { kLinear, kNl1c, kNl2c, kNl3c, kP2Linear, kP2Nli, kP2Nlq };
enum class BChoice { kSetting1, kSetting2 };

std::string to_string(DgpModel m);
DgpModel dgp_model_from_string(const std::string& s);

// Covariates are N(0, I_p) redrawn until they land in [-trunc, trunc]^p;
// labeled outcomes are m(x) plus unit-variance Gaussian noise.
struct DgpSpec {
  DgpModel model = DgpModel::kLinear;
  int p = 10;
  BChoice b_choice = BChoice::kSetting1;
  double nl_param = 1.0;  // lambda (interaction) or gamma (quadratic) for the p=2 families
  double noise_sd = 1.0;
  double trunc = 5.0;

  void validate() const;
  double mean_function(const VectorXd& x) const;
  VectorXd b_vector() const;
};

struct GenStats {
  Eigen::Index redraws = 0;  // rows redrawn by the truncation rejection loop
};

SemiSupervisedDataset generate_data(const DgpSpec& spec, Eigen::Index n, Eigen::Index big_n,
                                    std::uint64_t seed, GenStats* stats = nullptr);

// The dataset seed a replication derives from its replication seed; exposed
// so tests can regenerate the same draw.
std::uint64_t replication_data_seed(std::uint64_t replication_seed);

struct TrueTheta {
  VectorXd theta;  // p+1
  VectorXd mc_se;  // per-coordinate Monte-Carlo standard error
};

// Population least-squares coefficient of the noiseless mean function,
// estimated on mc_size truncated-Gaussian draws.
TrueTheta true_theta(const DgpSpec& spec, Eigen::Index mc_size, std::uint64_t seed);

// Dedicated seed so cached true values never depend on the run's master seed.
inline constexpr std::uint64_t kTrueThetaSeed = 0x7472757468657461ULL;

// Draw count for the cached true values used by monte_carlo.
Eigen::Index true_theta_cache_draws();

enum class EstimatorId { kOls, kNp, kSnpKs, kSnpKm, kEaseKs, kEaseKm };

std::string to_string(EstimatorId id);
EstimatorId estimator_from_string(const std::string& s);

struct SimConfig {
  DgpSpec dgp;
  Eigen::Index n = 500;
  Eigen::Index big_n = 10000;
  int k_folds = 5;
  double level = 0.95;
  SmootherPolicy ks_policy;     // local-constant settings (kernel, grids)
  DimredPolicy ks_dimred;       // projection for the KS route
  SmootherPolicy km_policy;     // kernel-ridge settings
  KernelSpec np_kernel;         // full-dimensional route
  std::optional<double> np_bandwidth;
  GammaChoice gamma_choice = GammaChoice::kUnlabeledGram;
  int jobs = 1;

  static SimConfig defaults_for(const DgpSpec& spec);
};

struct ReplicationEstimate {
  VectorXd theta;
  VectorXd se;     // empty when inference is not defined for the estimator
  bool ok = false;
  std::string error;
};

using ReplicationResult = std::map<EstimatorId, ReplicationEstimate>;

// One dataset, every roster estimator fit on it; SNP and EASE share folds,
// smoothers and projections.
ReplicationResult run_replication(const SimConfig& cfg, const std::vector<EstimatorId>& roster,
                                  std::uint64_t seed);

struct EstimatorSummary {
  EstimatorId id = EstimatorId::kOls;
  Eigen::Index reps_used = 0;
  Eigen::Index failures = 0;
  VectorXd bias, ese, ase, covp;  // per coordinate
  double mse = 0.0;
  double re = 1.0;  // MSE(OLS) / MSE(this)
};

struct McSummary {
  DgpSpec spec;
  VectorXd theta0;
  VectorXd theta0_mc_se;
  Eigen::Index reps = 0;
  std::uint64_t master_seed = 0;
  std::vector<EstimatorSummary> estimators;
};

McSummary monte_carlo(const SimConfig& cfg, const std::vector<EstimatorId>& roster,
                      Eigen::Index reps, std::uint64_t master_seed);

enum class PredictorKind { kOls, kSnp, kEase, kMhat, kMuhat };

struct PredictorConfig {
  PredictorKind kind = PredictorKind::kOls;
  SmootherPolicy policy;   // for snp/ease/mhat/muhat
  DimredPolicy dimred;
  int k_folds = 5;
  GammaChoice gamma_choice = GammaChoice::kUnlabeledGram;
  int jobs = 1;
};

// Mean squared prediction error over random labeled holdouts of size m;
// each holdout refits on the remainder plus all unlabeled rows.
double prediction_error_cv(const SemiSupervisedDataset& ds, const PredictorConfig& cfg,
                           Eigen::Index holdout_m, int reps, std::uint64_t seed);

}  // namespace ease
