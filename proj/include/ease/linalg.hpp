#pragma once

#include <string>

#include "ease/common.hpp"

namespace ease::linalg {

// Neumaier-compensated running sum; reductions that feed test expectations
// go through this so results are identical across runs and thread counts.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(const double* x, std::size_t n);

enum class GramSource { kLabeled, kUnlabeled, kPooled };

struct GramMatrix {
  MatrixXd matrix;    // mean of augmented outer products, (p+1)x(p+1)
  GramSource source = GramSource::kLabeled;
  Eigen::Index count = 0;
};

// Mean of x_vec * x_vec' over rows of the raw covariate matrix, where
// x_vec = (1, x')'. Ordered compensated accumulation per entry.
GramMatrix assemble_gram(const MatrixXd& rows, GramSource source);

// SPD solve by Cholesky with an eigenvalue-based condition check
// (these systems are (p+1)-dimensional, so the check is cheap).
VectorXd solve_spd(const MatrixXd& a, const VectorXd& rhs);
MatrixXd solve_spd_multi(const MatrixXd& a, const MatrixXd& rhs);

struct SymEigen {
  VectorXd values;   // descending
  MatrixXd vectors;  // columns, orthonormal, sign-fixed
};

// Symmetric eigendecomposition with eigenvalues sorted descending and each
// eigenvector's first non-negligible entry made positive.
SymEigen sym_eigen(const MatrixXd& a);

// Appends 1 as leading column: (1, x')' per row.
MatrixXd augment_design(const MatrixXd& x);

void require_symmetric(const MatrixXd& a, double tol, const std::string& who);

}  // namespace ease::linalg
