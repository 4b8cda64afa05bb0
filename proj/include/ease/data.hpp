#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ease/common.hpp"

namespace ease {

// Labeled pairs (Y_i, X_i) plus unlabeled covariate rows. Immutable once
// built; every estimator in the library consumes this.
struct SemiSupervisedDataset {
  VectorXd labeled_y;   // n
  MatrixXd labeled_x;   // n x p
  MatrixXd unlabeled_x; // N x p (possibly 0 rows)
  std::vector<std::string> covariate_names;  // empty when synthetic
  std::string outcome_name;                  // set when loaded from text

  Eigen::Index n() const { return labeled_y.size(); }
  Eigen::Index big_n() const { return unlabeled_x.rows(); }
  Eigen::Index p() const { return labeled_x.cols(); }

  void validate() const;
};

struct FoldAssignment {
  int k_folds = 1;
  std::vector<int> membership;  // length n, fold ids in 1..K
  std::uint64_t seed = 0;

  // 0-based row indices of fold k (1-based k)
  std::vector<Eigen::Index> fold_indices(int k) const;
  // complement: indices outside fold k
  std::vector<Eigen::Index> complement_indices(int k) const;
};

struct StandardizationParams {
  VectorXd means;   // p
  VectorXd scales;  // p, strictly positive
};

enum class StandardizeScope { kLabeledOnly, kPooled };

struct DatasetSchema {
  std::string outcome_column;                 // by name; empty = first column
  std::vector<std::string> log1p_columns;     // applied to covariates at load
};

// Parses comma-delimited text with a header row. Rows with a blank outcome
// become unlabeled rows; blank/NA covariate cells are an error.
SemiSupervisedDataset load_dataset(std::istream& in, const DatasetSchema& schema);

// Appends covariate-only rows to the unlabeled side. The stream's header
// must carry the same covariate names (outcome column optional and blank).
void append_unlabeled(SemiSupervisedDataset& ds, std::istream& in,
                      const DatasetSchema& schema);

// Uniform random partition into K folds of near-equal size (remainder goes
// to the lowest-numbered folds). Deterministic given seed. K=1 puts every
// index in fold 1.
FoldAssignment partition_folds(Eigen::Index n, int k_folds, std::uint64_t seed);

std::pair<SemiSupervisedDataset, StandardizationParams>
standardize(const SemiSupervisedDataset& ds, StandardizeScope scope);

// Inverts a standardization exactly (covariates only).
SemiSupervisedDataset unstandardize(const SemiSupervisedDataset& ds,
                                    const StandardizationParams& params);

MatrixXd select_rows(const MatrixXd& m, const std::vector<Eigen::Index>& idx);
VectorXd select_rows(const VectorXd& v, const std::vector<Eigen::Index>& idx);

}  // namespace ease
