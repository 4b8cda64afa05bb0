#include "ease/kernels.hpp"

#include <cmath>

namespace ease {

void KernelSpec::validate() const {
  if (order < 2 || order % 2 != 0) {
    throw ConfigError("kernel order must be an even integer >= 2");
  }
  if (dim < 1) throw ConfigError("kernel dim must be >= 1");
  switch (family) {
    case KernelFamily::kGaussian:
      if (order != 2) throw ConfigError("gaussian kernel has order 2; use gaussian-higher-order");
      break;
    case KernelFamily::kGaussianHigherOrder:
      if (order != 2 && order != 4 && order != 6) {
        throw ConfigError("gaussian-higher-order supports q in {2,4,6}");
      }
      break;
    case KernelFamily::kEpanechnikov:
      if (order != 2) throw ConfigError("epanechnikov kernel has order 2");
      break;
  }
}

namespace {
constexpr double kInvSqrt2Pi = 0.3989422804014326779399;

double phi(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }
}  // namespace

double kernel_eval_univariate(const KernelSpec& spec, double z) {
  switch (spec.family) {
    case KernelFamily::kGaussian:
      return phi(z);
    case KernelFamily::kGaussianHigherOrder:
      if (spec.order == 2) return phi(z);
      if (spec.order == 4) return 0.5 * (3.0 - z * z) * phi(z);
      return 0.125 * (15.0 - 10.0 * z * z + z * z * z * z) * phi(z);
    case KernelFamily::kEpanechnikov: {
      const double t = 1.0 - z * z;
      return t > 0.0 ? 0.75 * t : 0.0;
    }
  }
  return 0.0;
}

double kernel_eval(const KernelSpec& spec, const VectorXd& z) {
  spec.validate();
  if (z.size() != spec.dim) {
    throw ConfigError("kernel_eval: argument has dimension " + std::to_string(z.size()) +
                      ", spec says " + std::to_string(spec.dim));
  }
  if (!z.allFinite()) throw ConfigError("kernel_eval: non-finite argument");
  double v = 1.0;
  for (Eigen::Index j = 0; j < z.size(); ++j) v *= kernel_eval_univariate(spec, z(j));
  return v;
}

VectorXd default_bandwidth_grid(Eigen::Index n_train, int q, int r) {
  if (n_train < 2) throw ConfigError("default_bandwidth_grid: need n >= 2");
  const double center =
      std::pow(static_cast<double>(n_train), -1.0 / static_cast<double>(2 * q + r));
  VectorXd grid(13);
  for (int i = 0; i < 13; ++i) {
    grid(i) = center * std::pow(4.0, (i - 6) / 6.0);
  }
  return grid;
}

}  // namespace ease
