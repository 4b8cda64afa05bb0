#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "ease/common.hpp"
#include "ease/data.hpp"
#include "ease/dimred.hpp"
#include "ease/kernels.hpp"

namespace ease {

enum class SmootherMethod { kLocalConstantKs, kKernelRidge, kInjected };

struct KernelRidgeParams {
  double lambda = 1.0;  // raw penalty in (K + lambda I)
  double gamma = 1.0;   // RBF scale, k(x,x') = exp(-gamma ||x-x'||^2)
};

// A fitted per-fold conditional-mean estimator, evaluable at any p-vector.
// Local-constant fits project and whiten internally; predictions below the
// denominator trim floor fall back to the value at the nearest training
// point in projection space.
class SmootherFit {
 public:
  static SmootherFit local_constant(const MatrixXd& fold_x, const VectorXd& fold_y,
                                    const ProjectionBasis& projection,
                                    const KernelSpec& spec, double h);

  static SmootherFit kernel_ridge(const MatrixXd& fold_x, const VectorXd& fold_y,
                                  double lambda, double gamma);

  // Test seam: an arbitrary imputation function posing as a fitted smoother.
  static SmootherFit injected(std::function<double(const VectorXd&)> fn, Eigen::Index p);

  double predict(const VectorXd& x) const;
  VectorXd predict_many(const MatrixXd& rows, int jobs = 1) const;

  SmootherMethod method() const { return method_; }
  const ProjectionBasis& projection() const { return projection_; }
  double bandwidth() const { return h_; }
  KernelRidgeParams ridge_params() const { return ridge_; }
  double trim_floor() const { return trim_floor_; }
  Eigen::Index input_dim() const { return p_; }
  Eigen::Index training_rows() const {
    return method_ == SmootherMethod::kKernelRidge ? x_train_.rows() : z_train_.rows();
  }

 private:
  SmootherFit() = default;

  double clamp_to_range(double v) const;
  VectorXd project_rows_one(const VectorXd& x) const;
  MatrixXd project_rows(const MatrixXd& rows) const;
  void predict_block_nw(const MatrixXd& z_eval, double* out) const;
  void predict_block_krr(const MatrixXd& rows, double* out) const;
  double nw_at_projected(const VectorXd& z) const;

  SmootherMethod method_ = SmootherMethod::kLocalConstantKs;
  Eigen::Index p_ = 0;

  // local-constant state
  ProjectionBasis projection_;
  MatrixXd whiten_;        // r x r, unit-variance transform for projected coords
  MatrixXd z_train_;       // m x r projected+whitened training rows
  VectorXd y_train_;
  double y_mean_ = 0.0;    // predictions are computed in centered form
  double y_min_ = 0.0, y_max_ = 0.0;
  KernelSpec spec_;
  double h_ = 0.0;
  double trim_floor_ = 1e-8;
  bool gaussian_fast_path_ = true;

  // kernel ridge state
  MatrixXd x_train_;
  VectorXd coef_;
  double intercept_ = 0.0;
  KernelRidgeParams ridge_;

  // injected state
  std::function<double(const VectorXd&)> fn_;

  friend struct SmootherFitAccess;
};

struct SmootherPolicy {
  SmootherMethod method = SmootherMethod::kLocalConstantKs;
  KernelSpec kernel;                        // dim is overwritten by the projection's r
  std::optional<double> bandwidth;          // fixed h on the standardized scale
  std::optional<VectorXd> bandwidth_grid;   // overrides the default CV grid
  std::optional<KernelRidgeParams> ridge;   // fixed (lambda, gamma)
  int cv_folds = 5;
  // injection seam: one function used for every fold, or exactly K functions
  std::vector<std::function<double(const VectorXd&)>> injected;
};

struct DimredPolicy {
  ProjectionOrigin origin = ProjectionOrigin::kIdentity;
  int r = 2;
  SliceScheme slices;
  std::optional<MatrixXd> user_matrix;
};

struct FoldSmoothers {
  std::vector<SmootherFit> fits;  // K entries, fit k trained on the fold-k complement
  FoldAssignment folds;
};

// Tunes (lambda, gamma) for kernel ridge by least-squares CV over the
// pinned grids: lambda on 8 geometric points in [1e-3, 1e2] * n_fold and
// gamma on {1/4,1/2,1,2,4} / median pairwise squared distance.
KernelRidgeParams tune_kernel_ridge(const MatrixXd& fold_x, const VectorXd& fold_y,
                                    int cv_folds, std::uint64_t seed, int jobs = 1);

FoldSmoothers fit_fold_smoothers(const SemiSupervisedDataset& ds, const FoldAssignment& folds,
                                 const SmootherPolicy& policy, const DimredPolicy& dimred,
                                 std::uint64_t seed, int jobs = 1);

}  // namespace ease
