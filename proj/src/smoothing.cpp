#include "ease/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ease/linalg.hpp"
#include "ease/rng.hpp"
#include "ease/simd.hpp"

namespace ease {

namespace {

constexpr std::size_t kPredictChunk = 512;

MatrixXd sample_covariance_rows(const MatrixXd& x) {
  const VectorXd mu = x.colwise().mean();
  MatrixXd c = x.rowwise() - mu.transpose();
  return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

// squared distances between row sets, d(i,j) = ||a_i - b_j||^2
MatrixXd squared_distances(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd d = -2.0 * a * b.transpose();
  d.colwise() += a.rowwise().squaredNorm();
  d.rowwise() += b.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

double median_pairwise_sqdist(const MatrixXd& x) {
  const Eigen::Index m = x.rows();
  if (m < 2) throw DataError("median_pairwise_sqdist: need at least 2 rows");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      d.push_back((x.row(i) - x.row(j)).squaredNorm());
    }
  }
  auto mid = d.begin() + (d.size() - 1) / 2;  // lower median, deterministic
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace

VectorXd SmootherFit::project_rows_one(const VectorXd& x) const {
  return whiten_ * (projection_.matrix.transpose() * x);
}

MatrixXd SmootherFit::project_rows(const MatrixXd& rows) const {
  return rows * projection_.matrix * whiten_;
}

SmootherFit SmootherFit::local_constant(const MatrixXd& fold_x, const VectorXd& fold_y,
                                        const ProjectionBasis& projection,
                                        const KernelSpec& spec, double h) {
  if (fold_x.rows() == 0) throw DataError("fit_local_constant: empty fold");
  if (!(h > 0.0)) throw ConfigError("fit_local_constant: bandwidth must be positive");
  if (projection.matrix.rows() != fold_x.cols()) {
    throw ConfigError("fit_local_constant: projection row dimension mismatch");
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(projection.matrix);
  if (qr.rank() < projection.matrix.cols()) {
    throw NumericError("fit_local_constant: projection is rank-deficient");
  }
  KernelSpec sp = spec;
  sp.dim = static_cast<int>(projection.matrix.cols());
  sp.validate();

  SmootherFit fit;
  fit.method_ = SmootherMethod::kLocalConstantKs;
  fit.p_ = fold_x.cols();
  fit.projection_ = projection;
  fit.spec_ = sp;
  fit.h_ = h;
  fit.gaussian_fast_path_ = (sp.family == KernelFamily::kGaussian) ||
                            (sp.family == KernelFamily::kGaussianHigherOrder && sp.order == 2);

  const MatrixXd xp = fold_x * projection.matrix;
  if (fold_x.rows() < 2) {
    fit.whiten_ = MatrixXd::Identity(xp.cols(), xp.cols());
  } else {
    const MatrixXd cov = sample_covariance_rows(xp);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    if (es.eigenvalues().maxCoeff() <= 0.0) {
      fit.whiten_ = MatrixXd::Identity(xp.cols(), xp.cols());
    } else {
      fit.whiten_ = matrix_inv_sqrt(cov, 1e-10 * es.eigenvalues().maxCoeff());
    }
  }
  fit.z_train_ = xp * fit.whiten_;
  fit.y_train_ = fold_y;
  fit.y_mean_ = fold_y.mean();
  fit.y_min_ = fold_y.minCoeff();
  fit.y_max_ = fold_y.maxCoeff();
  return fit;
}

SmootherFit SmootherFit::injected(std::function<double(const VectorXd&)> fn, Eigen::Index p) {
  SmootherFit fit;
  fit.method_ = SmootherMethod::kInjected;
  fit.p_ = p;
  fit.fn_ = std::move(fn);
  return fit;
}

// Local-constant predictions are clamped to the training outcome range.
// For the non-negative q=2 kernels this is a no-op (the ratio is a convex
// combination); higher-order kernels have signed weights whose ratios can
// explode where the design is thin.
double SmootherFit::clamp_to_range(double v) const {
  return std::min(std::max(v, y_min_), y_max_);
}

// local-constant value at an already projected+whitened point; centered form
// so a constant outcome is reproduced exactly
double SmootherFit::nw_at_projected(const VectorXd& z) const {
  const Eigen::Index m = z_train_.rows();
  VectorXd w(m);
  double k0;
  if (gaussian_fast_path_) {
    w = (z_train_.rowwise() - z.transpose()).rowwise().squaredNorm();
    simd::exp_scale_inplace(w.data(), static_cast<std::size_t>(w.size()),
                            -0.5 / (h_ * h_));
    k0 = 1.0;
  } else {
    const int r = static_cast<int>(z.size());
    for (Eigen::Index i = 0; i < m; ++i) {
      double prod = 1.0;
      for (int j = 0; j < r; ++j) {
        prod *= kernel_eval_univariate(spec_, (z_train_(i, j) - z(j)) / h_);
      }
      w(i) = prod;
    }
    k0 = std::pow(kernel_eval_univariate(spec_, 0.0), r);
  }
  const double den = w.sum() / static_cast<double>(m);
  if (std::abs(den) >= trim_floor_ * k0) {
    const double num =
        w.dot(VectorXd(y_train_.array() - y_mean_)) / static_cast<double>(m);
    return clamp_to_range(y_mean_ + num / den);
  }
  // fallback: value at the nearest training point
  Eigen::Index best;
  (z_train_.rowwise() - z.transpose()).rowwise().squaredNorm().minCoeff(&best);
  const VectorXd zb = z_train_.row(best).transpose();
  VectorXd wb(m);
  if (gaussian_fast_path_) {
    wb = (z_train_.rowwise() - zb.transpose()).rowwise().squaredNorm();
    simd::exp_scale_inplace(wb.data(), static_cast<std::size_t>(wb.size()),
                            -0.5 / (h_ * h_));
  } else {
    const int r = static_cast<int>(z.size());
    for (Eigen::Index i = 0; i < m; ++i) {
      double prod = 1.0;
      for (int j = 0; j < r; ++j) {
        prod *= kernel_eval_univariate(spec_, (z_train_(i, j) - zb(j)) / h_);
      }
      wb(i) = prod;
    }
  }
  const double den_b = wb.sum() / static_cast<double>(m);
  if (std::abs(den_b) < trim_floor_ * k0) return y_mean_;  // fully degenerate
  const double num_b =
      wb.dot(VectorXd(y_train_.array() - y_mean_)) / static_cast<double>(m);
  return clamp_to_range(y_mean_ + num_b / den_b);
}

void SmootherFit::predict_block_nw(const MatrixXd& z_eval, double* out) const {
  const Eigen::Index b = z_eval.rows();
  const Eigen::Index m = z_train_.rows();
  if (gaussian_fast_path_) {
    MatrixXd d = squared_distances(z_eval, z_train_);
    MatrixXd w = d;
    simd::exp_scale_inplace(w.data(), static_cast<std::size_t>(w.size()), -0.5 / (h_ * h_));
    const VectorXd yc = y_train_.array() - y_mean_;
    const VectorXd num = w * yc;
    const VectorXd den = w.rowwise().sum();
    const double scale = static_cast<double>(m);
    for (Eigen::Index i = 0; i < b; ++i) {
      if (std::abs(den(i)) / scale >= trim_floor_) {
        out[i] = clamp_to_range(y_mean_ + num(i) / den(i));
      } else {
        Eigen::Index best;
        d.row(i).minCoeff(&best);
        out[i] = nw_at_projected(z_train_.row(best).transpose());
      }
    }
  } else {
    for (Eigen::Index i = 0; i < b; ++i) {
      out[i] = nw_at_projected(z_eval.row(i).transpose());
    }
  }
}

void SmootherFit::predict_block_krr(const MatrixXd& rows, double* out) const {
  MatrixXd w = squared_distances(rows, x_train_);
  simd::exp_scale_inplace(w.data(), static_cast<std::size_t>(w.size()), -ridge_.gamma);
  const VectorXd f = (w * coef_).array() + intercept_;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[i] = f(i);
}

double SmootherFit::predict(const VectorXd& x) const {
  if (x.size() != p_) throw ConfigError("smoother predict: dimension mismatch");
  switch (method_) {
    case SmootherMethod::kInjected:
      return fn_(x);
    case SmootherMethod::kLocalConstantKs:
      return nw_at_projected(project_rows_one(x));
    case SmootherMethod::kKernelRidge: {
      double out;
      predict_block_krr(x.transpose(), &out);
      return out;
    }
  }
  throw NumericError("smoother predict: unreachable");
}

VectorXd SmootherFit::predict_many(const MatrixXd& rows, int jobs) const {
  if (rows.cols() != p_) throw ConfigError("smoother predict: dimension mismatch");
  VectorXd out(rows.rows());
  if (method_ == SmootherMethod::kInjected) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out(i) = fn_(rows.row(i).transpose());
    return out;
  }
  if (method_ == SmootherMethod::kLocalConstantKs) {
    const MatrixXd z = project_rows(rows);
    parallel_for_chunks(static_cast<std::size_t>(rows.rows()), kPredictChunk, jobs,
                        [&](std::size_t b, std::size_t e) {
                          predict_block_nw(z.middleRows(static_cast<Eigen::Index>(b),
                                                        static_cast<Eigen::Index>(e - b)),
                                           out.data() + b);
                        });
    return out;
  }
  parallel_for_chunks(static_cast<std::size_t>(rows.rows()), kPredictChunk, jobs,
                      [&](std::size_t b, std::size_t e) {
                        predict_block_krr(rows.middleRows(static_cast<Eigen::Index>(b),
                                                          static_cast<Eigen::Index>(e - b)),
                                          out.data() + b);
                      });
  return out;
}

SmootherFit SmootherFit::kernel_ridge(const MatrixXd& fold_x, const VectorXd& fold_y,
                                      double lambda, double gamma) {
  if (fold_x.rows() == 0) throw DataError("fit_kernel_ridge: empty fold");
  if (lambda < 0.0) throw ConfigError("fit_kernel_ridge: lambda must be >= 0");
  if (!(gamma > 0.0)) throw ConfigError("fit_kernel_ridge: gamma must be positive");
  const Eigen::Index m = fold_x.rows();

  MatrixXd gram = squared_distances(fold_x, fold_x);
  simd::exp_scale_inplace(gram.data(), static_cast<std::size_t>(gram.size()), -gamma);
  gram.diagonal().setOnes();
  MatrixXd sys = gram;
  sys.diagonal().array() += lambda;

  Eigen::LLT<MatrixXd> llt(sys);
  if (llt.info() != Eigen::Success) {
    throw NumericError("fit_kernel_ridge: singular regularized Gram system");
  }
  const double y_mean = fold_y.mean();
  const VectorXd yc = fold_y.array() - y_mean;
  const VectorXd u = llt.solve(yc);
  const VectorXd v = llt.solve(VectorXd::Ones(m));
  const double v_sum = v.sum();
  if (!(std::abs(v_sum) > 1e-14 * static_cast<double>(m))) {
    throw NumericError("fit_kernel_ridge: intercept system degenerate");
  }
  const double alpha_c = u.sum() / v_sum;

  SmootherFit fit;
  fit.method_ = SmootherMethod::kKernelRidge;
  fit.p_ = fold_x.cols();
  fit.x_train_ = fold_x;
  fit.coef_ = u - alpha_c * v;
  fit.intercept_ = y_mean + alpha_c;
  fit.ridge_ = KernelRidgeParams{lambda, gamma};
  return fit;
}

BandwidthChoice select_bandwidth(const MatrixXd& fold_x, const VectorXd& fold_y,
                                 const ProjectionBasis& projection, const KernelSpec& spec,
                                 const VectorXd& grid, int cv_folds, std::uint64_t seed) {
  if (grid.size() == 0) throw ConfigError("select_bandwidth: empty grid");
  if (grid.minCoeff() <= 0.0) throw ConfigError("select_bandwidth: grid values must be positive");
  const Eigen::Index m = fold_x.rows();
  if (m < cv_folds) throw ConfigError("select_bandwidth: fewer points than CV folds");

  VectorXd sorted = grid;
  std::sort(sorted.data(), sorted.data() + sorted.size());

  const FoldAssignment cv = partition_folds(m, cv_folds, seed);
  VectorXd sse = VectorXd::Zero(sorted.size());
  Eigen::Index evaluated = 0;
  for (int s = 1; s <= cv_folds; ++s) {
    const auto held = cv.fold_indices(s);
    const auto train = cv.complement_indices(s);
    if (held.empty() || train.empty()) continue;
    const MatrixXd x_tr = select_rows(fold_x, train);
    const VectorXd y_tr = select_rows(fold_y, train);
    const MatrixXd x_he = select_rows(fold_x, held);
    const VectorXd y_he = select_rows(fold_y, held);
    evaluated += static_cast<Eigen::Index>(held.size());
    for (Eigen::Index g = 0; g < sorted.size(); ++g) {
      const SmootherFit fit = SmootherFit::local_constant(x_tr, y_tr, projection, spec, sorted(g));
      const VectorXd pred = fit.predict_many(x_he);
      sse(g) += (pred - y_he).squaredNorm();
    }
  }
  if (evaluated == 0) throw NumericError("select_bandwidth: no valid bandwidth (no CV predictions)");

  // minimize; ties go to the largest h
  Eigen::Index best = sorted.size() - 1;
  for (Eigen::Index g = sorted.size() - 2; g >= 0; --g) {
    if (sse(g) < sse(best)) best = g;
  }
  BandwidthChoice choice;
  choice.h = sorted(best);
  choice.cv_error = sse(best) / static_cast<double>(evaluated);
  choice.grid = sorted;
  return choice;
}

KernelRidgeParams tune_kernel_ridge(const MatrixXd& fold_x, const VectorXd& fold_y,
                                    int cv_folds, std::uint64_t seed, int jobs) {
  const Eigen::Index m = fold_x.rows();
  if (m < cv_folds) throw ConfigError("tune_kernel_ridge: fewer points than CV folds");
  const double med = std::max(median_pairwise_sqdist(fold_x), 1e-300);

  std::vector<double> gammas;
  for (double g : {0.25, 0.5, 1.0, 2.0, 4.0}) gammas.push_back(g / med);
  std::vector<double> lambdas(8);
  for (int i = 0; i < 8; ++i) {
    // 8 geometric points on [1e-3, 1e2], scaled by the fold size. The
    // lower end stays away from interpolation; with a smaller floor the
    // CV-selected fits carry a smoothing-error variance share the
    // first-order influence SEs cannot see, which breaks CI calibration.
    lambdas[static_cast<std::size_t>(i)] =
        static_cast<double>(m) * std::pow(10.0, -3.0 + 5.0 * i / 7.0);
  }
  std::sort(lambdas.begin(), lambdas.end(), std::greater<double>());

  const FoldAssignment cv = partition_folds(m, cv_folds, seed);
  const MatrixXd dist = squared_distances(fold_x, fold_x);

  struct Split {
    std::vector<Eigen::Index> train, held;
    VectorXd y_tr, y_he;
  };
  std::vector<Split> splits;
  for (int s = 1; s <= cv_folds; ++s) {
    Split sp;
    sp.held = cv.fold_indices(s);
    sp.train = cv.complement_indices(s);
    if (sp.held.empty() || sp.train.empty()) continue;
    sp.y_tr = select_rows(fold_y, sp.train);
    sp.y_he = select_rows(fold_y, sp.held);
    splits.push_back(std::move(sp));
  }

  const std::size_t n_gamma = gammas.size();
  const std::size_t n_lambda = lambdas.size();
  std::vector<double> sse(n_gamma * n_lambda, 0.0);

  // evaluate one (gamma, split) block per task; accumulation order is fixed
  std::vector<std::vector<double>> partial(n_gamma * splits.size(),
                                           std::vector<double>(n_lambda, 0.0));
  parallel_for_chunks(n_gamma * splits.size(), 1, jobs, [&](std::size_t task, std::size_t) {
    const std::size_t gi = task / splits.size();
    const std::size_t si = task % splits.size();
    const Split& sp = splits[si];
    const auto tr_n = static_cast<Eigen::Index>(sp.train.size());
    const auto he_n = static_cast<Eigen::Index>(sp.held.size());
    MatrixXd k_tr(tr_n, tr_n);
    for (Eigen::Index a = 0; a < tr_n; ++a) {
      for (Eigen::Index b = 0; b < tr_n; ++b) k_tr(a, b) = dist(sp.train[static_cast<std::size_t>(a)], sp.train[static_cast<std::size_t>(b)]);
    }
    MatrixXd k_he(he_n, tr_n);
    for (Eigen::Index a = 0; a < he_n; ++a) {
      for (Eigen::Index b = 0; b < tr_n; ++b) k_he(a, b) = dist(sp.held[static_cast<std::size_t>(a)], sp.train[static_cast<std::size_t>(b)]);
    }
    simd::exp_scale_inplace(k_tr.data(), static_cast<std::size_t>(k_tr.size()), -gammas[gi]);
    simd::exp_scale_inplace(k_he.data(), static_cast<std::size_t>(k_he.size()), -gammas[gi]);
    k_tr.diagonal().setOnes();
    const double y_mean = sp.y_tr.mean();
    const VectorXd yc = sp.y_tr.array() - y_mean;
    const VectorXd ones = VectorXd::Ones(tr_n);
    for (std::size_t li = 0; li < n_lambda; ++li) {
      MatrixXd sys = k_tr;
      sys.diagonal().array() += lambdas[li];
      Eigen::LLT<MatrixXd> llt(sys);
      if (llt.info() != Eigen::Success) {
        partial[task][li] = std::numeric_limits<double>::infinity();
        continue;
      }
      const VectorXd u = llt.solve(yc);
      const VectorXd v = llt.solve(ones);
      const double alpha_c = u.sum() / v.sum();
      const VectorXd coef = u - alpha_c * v;
      const VectorXd pred = (k_he * coef).array() + (y_mean + alpha_c);
      partial[task][li] = (pred - sp.y_he).squaredNorm();
    }
  });
  for (std::size_t task = 0; task < partial.size(); ++task) {
    const std::size_t gi = task / splits.size();
    for (std::size_t li = 0; li < n_lambda; ++li) sse[gi * n_lambda + li] += partial[task][li];
  }

  std::size_t best_g = 0, best_l = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t gi = 0; gi < n_gamma; ++gi) {
    for (std::size_t li = 0; li < n_lambda; ++li) {
      if (sse[gi * n_lambda + li] < best) {
        best = sse[gi * n_lambda + li];
        best_g = gi;
        best_l = li;
      }
    }
  }
  if (!std::isfinite(best)) throw NumericError("tune_kernel_ridge: every candidate failed");
  return KernelRidgeParams{lambdas[best_l], gammas[best_g]};
}

FoldSmoothers fit_fold_smoothers(const SemiSupervisedDataset& ds, const FoldAssignment& folds,
                                 const SmootherPolicy& policy, const DimredPolicy& dimred,
                                 std::uint64_t seed, int jobs) {
  const int k_folds = folds.k_folds;
  FoldSmoothers out;
  out.folds = folds;
  out.fits.reserve(static_cast<std::size_t>(k_folds));

  if (policy.method == SmootherMethod::kInjected) {
    if (policy.injected.size() != 1 && policy.injected.size() != static_cast<std::size_t>(k_folds)) {
      throw ConfigError("fit_fold_smoothers: injected functions must number 1 or K");
    }
    for (int k = 1; k <= k_folds; ++k) {
      const auto& fn =
          policy.injected.size() == 1 ? policy.injected[0] : policy.injected[static_cast<std::size_t>(k - 1)];
      out.fits.push_back(SmootherFit::injected(fn, ds.p()));
    }
    return out;
  }

  // shared projections are computed once
  std::optional<ProjectionBasis> shared;
  if (policy.method == SmootherMethod::kKernelRidge) {
    shared = identity_projection(ds.p());  // KM smooths the raw covariates
  } else {
    switch (dimred.origin) {
      case ProjectionOrigin::kIdentity:
        shared = identity_projection(ds.p());
        break;
      case ProjectionOrigin::kUser:
        if (!dimred.user_matrix.has_value()) {
          throw ConfigError("dimred: user origin requires a matrix");
        }
        shared = user_projection(*dimred.user_matrix);
        break;
      case ProjectionOrigin::kPca: {
        MatrixXd pooled(ds.n() + ds.big_n(), ds.p());
        pooled.topRows(ds.n()) = ds.labeled_x;
        if (ds.big_n() > 0) pooled.bottomRows(ds.big_n()) = ds.unlabeled_x;
        shared = pca_directions(pooled, dimred.r);
        break;
      }
      default:
        break;  // SIR family: per fold below
    }
  }

  for (int k = 1; k <= k_folds; ++k) {
    const auto train = folds.complement_indices(k);
    if (train.empty()) throw DataError("fit_fold_smoothers: empty leave-one-fold-out set");
    const MatrixXd x_tr = select_rows(ds.labeled_x, train);
    const VectorXd y_tr = select_rows(ds.labeled_y, train);

    if (policy.method == SmootherMethod::kKernelRidge) {
      KernelRidgeParams params;
      if (policy.ridge.has_value()) {
        params = *policy.ridge;
      } else {
        params = tune_kernel_ridge(x_tr, y_tr, policy.cv_folds,
                                   derive_seed(seed, 0x6b6d, static_cast<std::uint64_t>(k)), jobs);
      }
      out.fits.push_back(SmootherFit::kernel_ridge(x_tr, y_tr, params.lambda, params.gamma));
      continue;
    }

    ProjectionBasis proj;
    if (shared.has_value()) {
      proj = *shared;
    } else if (dimred.origin == ProjectionOrigin::kSir) {
      proj = sir_directions(x_tr, y_tr, dimred.r, dimred.slices);
      proj.per_fold = k;
    } else {
      proj = ss_sir_directions(x_tr, y_tr, ds.unlabeled_x, dimred.r, dimred.slices);
      proj.per_fold = k;
    }

    KernelSpec spec = policy.kernel;
    spec.dim = static_cast<int>(proj.matrix.cols());
    double h;
    if (policy.bandwidth.has_value()) {
      h = *policy.bandwidth;
    } else {
      const VectorXd grid = policy.bandwidth_grid.has_value()
                                ? *policy.bandwidth_grid
                                : default_bandwidth_grid(x_tr.rows(), spec.order, spec.dim);
      h = select_bandwidth(x_tr, y_tr, proj, spec, grid, policy.cv_folds,
                           derive_seed(seed, 0x6277, static_cast<std::uint64_t>(k)))
              .h;
    }
    out.fits.push_back(SmootherFit::local_constant(x_tr, y_tr, proj, spec, h));
  }
  return out;
}

}  // namespace ease
