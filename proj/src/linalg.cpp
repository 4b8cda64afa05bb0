#include "ease/linalg.hpp"

#include <cmath>
#include <vector>

namespace ease::linalg {

double compensated_sum(const double* x, std::size_t n) {
  CompensatedSum acc;
  for (std::size_t i = 0; i < n; ++i) acc.add(x[i]);
  return acc.value();
}

GramMatrix assemble_gram(const MatrixXd& rows, GramSource source) {
  if (rows.rows() < 1) throw DataError("assemble_gram: need at least one row");
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols() + 1;
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(d * d));
  VectorXd xv(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    xv(0) = 1.0;
    xv.tail(d - 1) = rows.row(i).transpose();
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = a; b < d; ++b) {
        acc[static_cast<std::size_t>(a * d + b)].add(xv(a) * xv(b));
      }
    }
  }
  GramMatrix g;
  g.matrix.resize(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a; b < d; ++b) {
      const double v = acc[static_cast<std::size_t>(a * d + b)].value() / static_cast<double>(n);
      g.matrix(a, b) = v;
      g.matrix(b, a) = v;
    }
  }
  g.source = source;
  g.count = n;
  return g;
}

void require_symmetric(const MatrixXd& a, double tol, const std::string& who) {
  if (a.rows() != a.cols()) throw NumericError(who + ": matrix not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol * scale) {
    throw NumericError(who + ": matrix not symmetric (asymmetry " + std::to_string(asym) + ")");
  }
}

MatrixXd solve_spd_multi(const MatrixXd& a, const MatrixXd& rhs) {
  require_symmetric(a, 1e-10, "solve_spd");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success) throw NumericError("solve_spd: eigendecomposition failed");
  const double lmax = es.eigenvalues().maxCoeff();
  const double lmin = es.eigenvalues().minCoeff();
  if (!(lmin > 0.0) || lmax / lmin > 1e12) {
    throw NumericError("solve_spd: system ill-conditioned or not positive definite");
  }
  Eigen::LLT<MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) throw NumericError("solve_spd: Cholesky failed");
  return llt.solve(rhs);
}

VectorXd solve_spd(const MatrixXd& a, const VectorXd& rhs) {
  return solve_spd_multi(a, MatrixXd(rhs)).col(0);
}

SymEigen sym_eigen(const MatrixXd& a) {
  require_symmetric(a, 1e-10, "sym_eigen");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (a + a.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("sym_eigen: eigendecomposition failed");
  const Eigen::Index d = a.rows();
  SymEigen out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  // Eigen returns ascending order; flip to descending
  for (Eigen::Index i = 0; i < d; ++i) {
    out.values(i) = es.eigenvalues()(d - 1 - i);
    out.vectors.col(i) = es.eigenvectors().col(d - 1 - i);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const double vmax = out.vectors.col(i).cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < d; ++j) {
      if (std::abs(out.vectors(j, i)) > 1e-12 * vmax) {
        if (out.vectors(j, i) < 0.0) out.vectors.col(i) = -out.vectors.col(i);
        break;
      }
    }
  }
  return out;
}

MatrixXd augment_design(const MatrixXd& x) {
  MatrixXd d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

}  // namespace ease::linalg
