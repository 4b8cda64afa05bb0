#pragma once

#include <cstdint>

#include "ease/common.hpp"
#include "ease/dimred.hpp"

namespace ease {

enum class KernelFamily { kGaussian, kGaussianHigherOrder, kEpanechnikov };

// Product kernel over r coordinates built from a symmetric univariate
// kernel of even order q. Higher orders use the Gaussian-times-even-
// polynomial construction: K4(z) = (3 - z^2) phi(z) / 2 and
// K6(z) = (15 - 10 z^2 + z^4) phi(z) / 8.
struct KernelSpec {
  KernelFamily family = KernelFamily::kGaussian;
  int order = 2;
  int dim = 1;

  void validate() const;
};

double kernel_eval_univariate(const KernelSpec& spec, double z);
double kernel_eval(const KernelSpec& spec, const VectorXd& z);

struct BandwidthChoice {
  double h = 0.0;
  double cv_error = 0.0;
  VectorXd grid;  // ascending
};

// 13 geometric points spanning x1/4 .. x4 around n^{-1/(2q+r)}, the
// optimal-order bandwidth on the standardized projection scale.
VectorXd default_bandwidth_grid(Eigen::Index n_train, int q, int r);

// Least-squares cross-validated bandwidth for the local-constant smoother
// over the projected fold data. Ties break toward the largest h.
BandwidthChoice select_bandwidth(const MatrixXd& fold_x, const VectorXd& fold_y,
                                 const ProjectionBasis& projection,
                                 const KernelSpec& spec, const VectorXd& grid,
                                 int cv_folds, std::uint64_t seed);

}  // namespace ease
