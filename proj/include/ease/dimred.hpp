#pragma once

#include <optional>
#include <string>

#include "ease/common.hpp"

namespace ease {

enum class ProjectionOrigin { kIdentity, kPca, kSir, kSsSir, kUser };

std::string to_string(ProjectionOrigin o);

// A p x r transformation of the covariates. SIR-family bases satisfy
// P' Sigma_hat P = I_r for the Sigma_hat of the data that built them.
struct ProjectionBasis {
  MatrixXd matrix;  // p x r, full column rank
  ProjectionOrigin origin = ProjectionOrigin::kIdentity;
  int slices_h = 0;               // SIR family only
  std::optional<int> per_fold;    // fold index when estimated per fold
  bool rank_deficient = false;    // eigen-noise warning from SIR extraction
  VectorXd eigenvalues;           // spectrum behind the directions (SIR family, PCA)

  Eigen::Index p() const { return matrix.rows(); }
  Eigen::Index r() const { return matrix.cols(); }
};

enum class SliceMode { kEqualWidth, kEqualCount };

struct SliceScheme {
  SliceMode mode = SliceMode::kEqualWidth;
  int h_slices = 100;
};

// Symmetric PSD inverse square root with eigenvalues clamped below at
// eigen_floor before inversion.
MatrixXd matrix_inv_sqrt(const MatrixXd& sigma, double eigen_floor);

// Relative floor used by the SIR/PCA callers: 1e-10 * (largest eigenvalue).
MatrixXd matrix_inv_sqrt_auto(const MatrixXd& sigma);

ProjectionBasis identity_projection(Eigen::Index p);
ProjectionBasis user_projection(MatrixXd matrix);

ProjectionBasis sir_directions(const MatrixXd& fold_x, const VectorXd& fold_y,
                               int r, const SliceScheme& scheme);

// Semi-supervised SIR: pooled standardization over fold + unlabeled rows,
// slices enriched with nearest-neighbour imputed unlabeled points.
ProjectionBasis ss_sir_directions(const MatrixXd& fold_x, const VectorXd& fold_y,
                                  const MatrixXd& unlabeled_x, int r,
                                  const SliceScheme& scheme);

ProjectionBasis pca_directions(const MatrixXd& pooled_x, int r);

}  // namespace ease
