#include "ease/dimred.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "ease/linalg.hpp"

namespace ease {

std::string to_string(ProjectionOrigin o) {
  switch (o) {
    case ProjectionOrigin::kIdentity: return "identity";
    case ProjectionOrigin::kPca: return "pca";
    case ProjectionOrigin::kSir: return "sir";
    case ProjectionOrigin::kSsSir: return "ss-sir";
    case ProjectionOrigin::kUser: return "user";
  }
  return "?";
}

MatrixXd matrix_inv_sqrt(const MatrixXd& sigma, double eigen_floor) {
  linalg::require_symmetric(sigma, 1e-10, "matrix_inv_sqrt");
  if (!(eigen_floor > 0.0)) throw ConfigError("matrix_inv_sqrt: eigen_floor must be positive");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  if (es.info() != Eigen::Success) throw NumericError("matrix_inv_sqrt: eigendecomposition failed");
  VectorXd lam = es.eigenvalues().cwiseMax(eigen_floor);
  return es.eigenvectors() * lam.cwiseSqrt().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

MatrixXd matrix_inv_sqrt_auto(const MatrixXd& sigma) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sigma + sigma.transpose()));
  const double lmax = std::max(es.eigenvalues().maxCoeff(), 1e-300);
  return matrix_inv_sqrt(sigma, 1e-10 * lmax);
}

ProjectionBasis identity_projection(Eigen::Index p) {
  ProjectionBasis b;
  b.matrix = MatrixXd::Identity(p, p);
  b.origin = ProjectionOrigin::kIdentity;
  return b;
}

ProjectionBasis user_projection(MatrixXd matrix) {
  ProjectionBasis b;
  b.matrix = std::move(matrix);
  b.origin = ProjectionOrigin::kUser;
  return b;
}

namespace {

MatrixXd sample_covariance(const MatrixXd& x) {
  if (x.rows() < 2) throw DataError("sample_covariance: need at least 2 rows");
  const VectorXd mu = x.colwise().mean();
  MatrixXd c = x.rowwise() - mu.transpose();
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

void fix_column_signs(MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double vmax = m.col(c).cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (std::abs(m(i, c)) > 1e-12 * vmax) {
        if (m(i, c) < 0.0) m.col(c) = -m.col(c);
        break;
      }
    }
  }
}

// slice id in [0, H) for each outcome; -1 never occurs
std::vector<int> assign_slices(const VectorXd& y, const SliceScheme& scheme) {
  const Eigen::Index n = y.size();
  std::vector<int> slice(static_cast<std::size_t>(n), 0);
  const int h = scheme.h_slices;
  if (h < 2) throw ConfigError("slice scheme: need at least 2 slices");
  if (scheme.mode == SliceMode::kEqualWidth) {
    const double lo = y.minCoeff();
    const double hi = y.maxCoeff();
    const double width = hi - lo;
    if (!(width > 0.0)) return slice;  // all outcomes identical: one slice
    for (Eigen::Index i = 0; i < n; ++i) {
      int s = static_cast<int>(std::floor((y(i) - lo) / width * h));
      slice[static_cast<std::size_t>(i)] = std::min(s, h - 1);
    }
  } else {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return y(a) < y(b); });
    for (Eigen::Index rank = 0; rank < n; ++rank) {
      const int s = static_cast<int>((rank * static_cast<Eigen::Index>(h)) / n);
      slice[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = s;
    }
  }
  return slice;
}

// returns slice boundaries applied to arbitrary values (equal-width only)
int slice_of_value(double v, double lo, double width, int h) {
  if (!(width > 0.0)) return 0;
  const int s = static_cast<int>(std::floor((v - lo) / width * h));
  return std::max(0, std::min(s, h - 1));
}

struct SliceStats {
  std::vector<double> weight;                       // labeled proportion per slice
  std::vector<std::vector<linalg::CompensatedSum>> mean_acc;  // per slice, per coord
  std::vector<Eigen::Index> count;                  // members averaged per slice
};

ProjectionBasis extract_directions(const std::vector<double>& probs,
                                   const std::vector<VectorXd>& means, Eigen::Index p,
                                   int r, const MatrixXd& sigma_inv_sqrt,
                                   ProjectionOrigin origin, int h_slices) {
  int non_empty = 0;
  MatrixXd m_hat = MatrixXd::Zero(p, p);
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (probs[s] <= 0.0) continue;
    ++non_empty;
    m_hat.noalias() += probs[s] * means[s] * means[s].transpose();
  }
  if (non_empty < r + 1) {
    throw DataError("degenerate slicing: only " + std::to_string(non_empty) +
                    " non-empty slices for r=" + std::to_string(r));
  }
  const linalg::SymEigen eig = linalg::sym_eigen(m_hat);
  ProjectionBasis basis;
  basis.matrix = sigma_inv_sqrt * eig.vectors.leftCols(r);
  fix_column_signs(basis.matrix);
  basis.origin = origin;
  basis.slices_h = h_slices;
  basis.eigenvalues = eig.values;
  basis.rank_deficient =
      eig.values(r - 1) <= 1e-10 * std::max(eig.values(0), 0.0) || eig.values(r - 1) <= 0.0;
  return basis;
}

}  // namespace

ProjectionBasis sir_directions(const MatrixXd& fold_x, const VectorXd& fold_y, int r,
                               const SliceScheme& scheme) {
  const Eigen::Index n = fold_x.rows();
  const Eigen::Index p = fold_x.cols();
  if (r < 1 || r > p) throw ConfigError("sir_directions: r out of range");
  if (n < r + 2) throw DataError("sir_directions: fold too small for r");

  const MatrixXd sigma = sample_covariance(fold_x);
  const MatrixXd w = matrix_inv_sqrt_auto(sigma);
  const VectorXd mu = fold_x.colwise().mean();
  const MatrixXd z = (fold_x.rowwise() - mu.transpose()) * w;  // standardized rows

  const std::vector<int> slice = assign_slices(fold_y, scheme);
  const int h = scheme.h_slices;
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(h), 0);
  std::vector<std::vector<linalg::CompensatedSum>> acc(
      static_cast<std::size_t>(h),
      std::vector<linalg::CompensatedSum>(static_cast<std::size_t>(p)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(slice[static_cast<std::size_t>(i)]);
    ++counts[s];
    for (Eigen::Index j = 0; j < p; ++j) acc[s][static_cast<std::size_t>(j)].add(z(i, j));
  }
  std::vector<double> probs(static_cast<std::size_t>(h), 0.0);
  std::vector<VectorXd> means(static_cast<std::size_t>(h), VectorXd::Zero(p));
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (counts[s] == 0) continue;
    probs[s] = static_cast<double>(counts[s]) / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) {
      means[s](j) = acc[s][static_cast<std::size_t>(j)].value() / static_cast<double>(counts[s]);
    }
  }
  return extract_directions(probs, means, p, r, w, ProjectionOrigin::kSir, h);
}

ProjectionBasis ss_sir_directions(const MatrixXd& fold_x, const VectorXd& fold_y,
                                  const MatrixXd& unlabeled_x, int r,
                                  const SliceScheme& scheme) {
  const Eigen::Index n = fold_x.rows();
  const Eigen::Index big_n = unlabeled_x.rows();
  const Eigen::Index p = fold_x.cols();
  if (big_n == 0) {
    ProjectionBasis b = sir_directions(fold_x, fold_y, r, scheme);
    b.origin = ProjectionOrigin::kSsSir;
    return b;
  }
  if (r < 1 || r > p) throw ConfigError("ss_sir_directions: r out of range");
  if (n < r + 2) throw DataError("ss_sir_directions: fold too small for r");

  MatrixXd pooled(n + big_n, p);
  pooled.topRows(n) = fold_x;
  pooled.bottomRows(big_n) = unlabeled_x;
  const MatrixXd sigma = sample_covariance(pooled);
  const MatrixXd w = matrix_inv_sqrt_auto(sigma);
  const VectorXd mu = pooled.colwise().mean();
  const MatrixXd z_lab = (fold_x.rowwise() - mu.transpose()) * w;
  const MatrixXd z_unl = (unlabeled_x.rowwise() - mu.transpose()) * w;

  // nearest labeled neighbour per unlabeled row; ties to the lower index
  std::vector<Eigen::Index> nearest(static_cast<std::size_t>(big_n));
  const VectorXd lab_norms = z_lab.rowwise().squaredNorm();
  parallel_for_chunks(static_cast<std::size_t>(big_n), 512, hardware_jobs(),
                      [&](std::size_t b, std::size_t e) {
                        for (std::size_t j = b; j < e; ++j) {
                          const auto jj = static_cast<Eigen::Index>(j);
                          const double un = z_unl.row(jj).squaredNorm();
                          VectorXd d = lab_norms.array() + un -
                                       2.0 * (z_lab * z_unl.row(jj).transpose()).array();
                          Eigen::Index best = 0;
                          double bestv = d(0);
                          for (Eigen::Index i = 1; i < n; ++i) {
                            if (d(i) < bestv) {
                              bestv = d(i);
                              best = i;
                            }
                          }
                          nearest[j] = best;
                        }
                      });

  const std::vector<int> slice = assign_slices(fold_y, scheme);
  const int h = scheme.h_slices;
  // imputed slice membership for unlabeled rows, via the labeled boundaries
  const double lo = fold_y.minCoeff();
  const double width = fold_y.maxCoeff() - lo;
  std::vector<Eigen::Index> counts_lab(static_cast<std::size_t>(h), 0);
  std::vector<Eigen::Index> counts_all(static_cast<std::size_t>(h), 0);
  std::vector<std::vector<linalg::CompensatedSum>> acc(
      static_cast<std::size_t>(h),
      std::vector<linalg::CompensatedSum>(static_cast<std::size_t>(p)));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(slice[static_cast<std::size_t>(i)]);
    ++counts_lab[s];
    ++counts_all[s];
    for (Eigen::Index j = 0; j < p; ++j) acc[s][static_cast<std::size_t>(j)].add(z_lab(i, j));
  }
  for (Eigen::Index jrow = 0; jrow < big_n; ++jrow) {
    const double y_star = fold_y(nearest[static_cast<std::size_t>(jrow)]);
    std::size_t s;
    if (scheme.mode == SliceMode::kEqualWidth) {
      s = static_cast<std::size_t>(slice_of_value(y_star, lo, width, h));
    } else {
      // equal-count scheme: inherit the neighbour's slice
      s = static_cast<std::size_t>(slice[static_cast<std::size_t>(nearest[static_cast<std::size_t>(jrow)])]);
    }
    ++counts_all[s];
    for (Eigen::Index j = 0; j < p; ++j) acc[s][static_cast<std::size_t>(j)].add(z_unl(jrow, j));
  }

  // proportions stay the labeled ones; means average labeled + imputed members
  std::vector<double> probs(static_cast<std::size_t>(h), 0.0);
  std::vector<VectorXd> means(static_cast<std::size_t>(h), VectorXd::Zero(p));
  for (std::size_t s = 0; s < probs.size(); ++s) {
    if (counts_lab[s] == 0) continue;
    probs[s] = static_cast<double>(counts_lab[s]) / static_cast<double>(n);
    for (Eigen::Index j = 0; j < p; ++j) {
      means[s](j) = acc[s][static_cast<std::size_t>(j)].value() / static_cast<double>(counts_all[s]);
    }
  }
  return extract_directions(probs, means, p, r, w, ProjectionOrigin::kSsSir, h);
}

ProjectionBasis pca_directions(const MatrixXd& pooled_x, int r) {
  const Eigen::Index p = pooled_x.cols();
  if (r < 1 || r > p) throw ConfigError("pca_directions: r out of range");
  if (pooled_x.rows() < r + 1) throw DataError("pca_directions: too few rows for r");
  const MatrixXd sigma = sample_covariance(pooled_x);
  const linalg::SymEigen eig = linalg::sym_eigen(sigma);
  if (eig.values(r - 1) <= 1e-12 * std::max(eig.values(0), 0.0)) {
    throw NumericError("pca_directions: covariance rank below r");
  }
  ProjectionBasis b;
  b.matrix = eig.vectors.leftCols(r);
  fix_column_signs(b.matrix);
  b.origin = ProjectionOrigin::kPca;
  b.eigenvalues = eig.values;
  return b;
}

}  // namespace ease
