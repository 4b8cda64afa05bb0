#include "ease/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ease/linalg.hpp"
#include "ease/rng.hpp"
#include "ease/stats.hpp"

namespace ease {

std::string to_string(DgpModel m) {
  switch (m) {
    case DgpModel::kLinear: return "linear";
    case DgpModel::kNl1c: return "nl1c";
    case DgpModel::kNl2c: return "nl2c";
    case DgpModel::kNl3c: return "nl3c";
    case DgpModel::kP2Linear: return "p2-linear";
    case DgpModel::kP2Nli: return "p2-nli";
    case DgpModel::kP2Nlq: return "p2-nlq";
  }
  return "?";
}

DgpModel dgp_model_from_string(const std::string& s) {
  if (s == "linear") return DgpModel::kLinear;
  if (s == "nl1c") return DgpModel::kNl1c;
  if (s == "nl2c") return DgpModel::kNl2c;
  if (s == "nl3c") return DgpModel::kNl3c;
  if (s == "p2-linear") return DgpModel::kP2Linear;
  if (s == "p2-nli") return DgpModel::kP2Nli;
  if (s == "p2-nlq") return DgpModel::kP2Nlq;
  throw ConfigError("unknown model '" + s + "'");
}

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::kOls: return "ols";
    case EstimatorId::kNp: return "np";
    case EstimatorId::kSnpKs: return "snp-ks";
    case EstimatorId::kSnpKm: return "snp-km";
    case EstimatorId::kEaseKs: return "ease-ks";
    case EstimatorId::kEaseKm: return "ease-km";
  }
  return "?";
}

EstimatorId estimator_from_string(const std::string& s) {
  if (s == "ols") return EstimatorId::kOls;
  if (s == "np") return EstimatorId::kNp;
  if (s == "snp-ks" || s == "snp-ks-sir") return EstimatorId::kSnpKs;
  if (s == "snp-km") return EstimatorId::kSnpKm;
  if (s == "ease-ks" || s == "ease-ks-sir") return EstimatorId::kEaseKs;
  if (s == "ease-km") return EstimatorId::kEaseKm;
  throw ConfigError("unknown estimator '" + s + "'");
}

void DgpSpec::validate() const {
  if (p < 1) throw ConfigError("dgp: p must be >= 1");
  if (!(noise_sd > 0.0)) throw ConfigError("dgp: noise sd must be positive");
  if (!(trunc > 0.0)) throw ConfigError("dgp: truncation bound must be positive");
  const bool p2 = model == DgpModel::kP2Linear || model == DgpModel::kP2Nli ||
                  model == DgpModel::kP2Nlq;
  if (p2 && p != 2) throw ConfigError("dgp: the p2-* families require p = 2");
  if (model == DgpModel::kP2Nli && nl_param != 0.5 && nl_param != 1.0) {
    throw ConfigError("dgp: p2-nli interaction parameter must be 0.5 or 1");
  }
  if (model == DgpModel::kP2Nlq && nl_param != 0.3 && nl_param != 1.0) {
    throw ConfigError("dgp: p2-nlq quadratic parameter must be 0.3 or 1");
  }
  const bool needs_even = (!p2 && b_choice == BChoice::kSetting1) ||
                          model == DgpModel::kNl2c || model == DgpModel::kNl3c;
  if (needs_even && p % 2 != 0) {
    throw ConfigError("dgp: this model/setting combination requires even p");
  }
}

VectorXd DgpSpec::b_vector() const {
  VectorXd b = VectorXd::Ones(p);
  if (b_choice == BChoice::kSetting1) b.tail(p / 2).setZero();
  return b;
}

double DgpSpec::mean_function(const VectorXd& x) const {
  switch (model) {
    case DgpModel::kP2Linear:
      return x(0) + x(1);
    case DgpModel::kP2Nli:
      return x(0) + x(1) + nl_param * x(0) * x(1);
    case DgpModel::kP2Nlq:
      return x(0) + x(1) + nl_param * (x(0) * x(0) + x(1) * x(1));
    default:
      break;
  }
  const VectorXd b = b_vector();
  const double s = b.dot(x);
  switch (model) {
    case DgpModel::kLinear:
      return s;
    case DgpModel::kNl1c:
      return s + s * s;
    case DgpModel::kNl2c:
    case DgpModel::kNl3c: {
      double t = 0.0;
      for (int j = p / 2; j < p; ++j) t += x(j);  // delta_p = (0_{p/2}', 1_{p/2}')'
      double v = s * (1.0 + t);
      if (model == DgpModel::kNl3c) {
        double u = 0.0;
        for (int j = 0; j < p; j += 2) u += x(j);  // omega_p = (1,0,1,0,...)'
        v += u * u;
      }
      return v;
    }
    default:
      throw ConfigError("dgp: unhandled model");
  }
}

namespace {

void draw_truncated_row(Rng& rng, double trunc, VectorXd& row, Eigen::Index* redraws) {
  const Eigen::Index p = row.size();
  for (;;) {
    bool ok = true;
    for (Eigen::Index j = 0; j < p; ++j) {
      row(j) = rng.normal();
      if (std::abs(row(j)) > trunc) ok = false;
    }
    if (ok) return;
    if (redraws != nullptr) ++*redraws;
  }
}

}  // namespace

SemiSupervisedDataset generate_data(const DgpSpec& spec, Eigen::Index n, Eigen::Index big_n,
                                    std::uint64_t seed, GenStats* stats) {
  spec.validate();
  if (n < 1 || big_n < 0) throw ConfigError("generate_data: need n >= 1, N >= 0");
  SemiSupervisedDataset ds;
  ds.labeled_x.resize(n, spec.p);
  ds.labeled_y.resize(n);
  ds.unlabeled_x.resize(big_n, spec.p);
  Rng rng(seed);
  VectorXd row(spec.p);
  Eigen::Index* redraws = stats != nullptr ? &stats->redraws : nullptr;
  for (Eigen::Index i = 0; i < n; ++i) {
    draw_truncated_row(rng, spec.trunc, row, redraws);
    ds.labeled_x.row(i) = row.transpose();
    ds.labeled_y(i) = spec.mean_function(row) + spec.noise_sd * rng.normal();
  }
  for (Eigen::Index j = 0; j < big_n; ++j) {
    draw_truncated_row(rng, spec.trunc, row, redraws);
    ds.unlabeled_x.row(j) = row.transpose();
  }
  return ds;
}

std::uint64_t replication_data_seed(std::uint64_t replication_seed) {
  return derive_seed(replication_seed, 0xda7a);
}

TrueTheta true_theta(const DgpSpec& spec, Eigen::Index mc_size, std::uint64_t seed) {
  spec.validate();
  if (mc_size < 10000) throw ConfigError("true_theta: mc_size must be at least 10^4");
  const Eigen::Index d = spec.p + 1;

  // two streaming passes over the same deterministic draw sequence, so the
  // monte-carlo size is bounded by time, not memory
  MatrixXd gram = MatrixXd::Zero(d, d);
  VectorXd xm = VectorXd::Zero(d);
  {
    Rng rng(seed);
    VectorXd row(spec.p);
    VectorXd xv(d);
    for (Eigen::Index i = 0; i < mc_size; ++i) {
      draw_truncated_row(rng, spec.trunc, row, nullptr);
      xv(0) = 1.0;
      xv.tail(spec.p) = row;
      gram.noalias() += xv * xv.transpose();
      xm.noalias() += xv * spec.mean_function(row);
    }
  }
  gram /= static_cast<double>(mc_size);
  xm /= static_cast<double>(mc_size);

  TrueTheta out;
  out.theta = linalg::solve_spd(gram, xm);

  MatrixXd meat = MatrixXd::Zero(d, d);
  {
    Rng rng(seed);
    VectorXd row(spec.p);
    VectorXd xv(d);
    for (Eigen::Index i = 0; i < mc_size; ++i) {
      draw_truncated_row(rng, spec.trunc, row, nullptr);
      xv(0) = 1.0;
      xv.tail(spec.p) = row;
      const double resid = spec.mean_function(row) - xv.dot(out.theta);
      meat.noalias() += (resid * resid) * (xv * xv.transpose());
    }
  }
  meat /= static_cast<double>(mc_size);
  const MatrixXd bread = linalg::solve_spd_multi(gram, MatrixXd::Identity(d, d));
  const MatrixXd sigma = bread * meat * bread;
  out.mc_se = (sigma.diagonal() / static_cast<double>(mc_size)).cwiseSqrt();
  return out;
}

// The theta0 cache uses a large draw count: the reference tables' bias
// budgets are a few hundredths, and a 50k-draw oracle already carries
// per-coordinate errors of the same size for the strongly non-linear
// models (its residual variance is ~25 under the two-component model).
Eigen::Index true_theta_cache_draws() { return 2000000; }

SimConfig SimConfig::defaults_for(const DgpSpec& spec) {
  SimConfig cfg;
  cfg.dgp = spec;
  cfg.ks_policy.method = SmootherMethod::kLocalConstantKs;
  cfg.ks_policy.kernel = KernelSpec{KernelFamily::kGaussian, 2, 2};
  cfg.ks_policy.cv_folds = 5;
  if (spec.p > 2) {
    cfg.ks_dimred.origin = ProjectionOrigin::kSir;
    cfg.ks_dimred.r = 2;
    cfg.ks_dimred.slices = SliceScheme{SliceMode::kEqualWidth, 100};
  } else {
    cfg.ks_dimred.origin = ProjectionOrigin::kIdentity;
    cfg.ks_dimred.r = spec.p;
  }
  cfg.km_policy.method = SmootherMethod::kKernelRidge;
  cfg.km_policy.cv_folds = 5;
  cfg.np_kernel = KernelSpec{KernelFamily::kGaussianHigherOrder, spec.p < 4 ? 4 : 6, spec.p};
  return cfg;
}

namespace {

SnpFit snp_from_smoothers(const SemiSupervisedDataset& ds, FoldSmoothers smoothers,
                          const std::string& smoother_tag, int jobs) {
  SnpFit out;
  out.model.smoothers = std::move(smoothers);
  out.model.eta = refit_eta(ds, out.model.smoothers, jobs);
  const VectorXd mu = impute_mu(out.model, ds.unlabeled_x, jobs);
  const MatrixXd design = linalg::augment_design(ds.unlabeled_x);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols()) throw NumericError("fit_snp: rank-deficient unlabeled design");
  out.theta.theta = qr.solve(mu);
  out.theta.method = "snp";
  out.theta.gram_labeled = linalg::assemble_gram(ds.labeled_x, linalg::GramSource::kLabeled).matrix;
  out.theta.gram_unlabeled =
      linalg::assemble_gram(ds.unlabeled_x, linalg::GramSource::kUnlabeled).matrix;
  out.theta.provenance.k_folds = out.model.smoothers.folds.k_folds;
  out.theta.provenance.smoother = smoother_tag;
  out.theta.provenance.projection =
      to_string(out.model.smoothers.fits.front().projection().origin);
  return out;
}

}  // namespace

ReplicationResult run_replication(const SimConfig& cfg, const std::vector<EstimatorId>& roster,
                                  std::uint64_t seed) {
  cfg.dgp.validate();
  const SemiSupervisedDataset ds =
      generate_data(cfg.dgp, cfg.n, cfg.big_n, replication_data_seed(seed));
  const FoldAssignment folds = partition_folds(ds.n(), cfg.k_folds, derive_seed(seed, 0xf01d));

  const auto in_roster = [&](EstimatorId id) {
    return std::find(roster.begin(), roster.end(), id) != roster.end();
  };
  ReplicationResult out;
  for (EstimatorId id : roster) out[id] = ReplicationEstimate{};

  // OLS underpins EASE and the influence machinery; compute it once
  ThetaEstimate ols;
  MatrixXd psi0;
  bool have_ols = false;
  try {
    ols = fit_ols(ds);
    psi0 = influence_ols(ds, ols, cfg.gamma_choice);
    have_ols = true;
  } catch (const std::exception& e) {
    if (in_roster(EstimatorId::kOls)) {
      out[EstimatorId::kOls].error = e.what();
    }
  }
  if (have_ols && in_roster(EstimatorId::kOls)) {
    auto& r = out[EstimatorId::kOls];
    r.theta = ols.theta;
    const MatrixXd sigma0 = estimate_sigma(psi0);
    r.se = (sigma0.diagonal() / static_cast<double>(ds.n())).cwiseSqrt();
    r.ok = true;
  }

  if (in_roster(EstimatorId::kNp)) {
    auto& r = out[EstimatorId::kNp];
    try {
      NpOptions opts;
      opts.kernel = cfg.np_kernel;
      opts.bandwidth = cfg.np_bandwidth;
      opts.jobs = cfg.jobs;
      const ThetaEstimate np = fit_np(ds, opts);
      r.theta = np.theta;
      // plug-in SE from the efficient influence form with the full-data smoother
      KernelSpec spec = cfg.np_kernel;
      spec.dim = static_cast<int>(ds.p());
      const double h = cfg.np_bandwidth.value_or(
          std::pow(static_cast<double>(ds.n()), -1.0 / static_cast<double>(spec.order + ds.p())));
      const SmootherFit mhat = SmootherFit::local_constant(
          ds.labeled_x, ds.labeled_y, identity_projection(ds.p()), spec, h);
      const VectorXd resid = ds.labeled_y - mhat.predict_many(ds.labeled_x, cfg.jobs);
      const MatrixXd design = linalg::augment_design(ds.labeled_x);
      const MatrixXd gamma = cfg.gamma_choice == GammaChoice::kUnlabeledGram
                                 ? np.gram_unlabeled
                                 : np.gram_labeled;
      const MatrixXd scaled = design.array().colwise() * resid.array();
      const MatrixXd psi = linalg::solve_spd_multi(gamma, MatrixXd(scaled.transpose())).transpose();
      const MatrixXd sigma = estimate_sigma(psi);
      r.se = (sigma.diagonal() / static_cast<double>(ds.n())).cwiseSqrt();
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  }

  struct Branch {
    EstimatorId snp_id, ease_id;
    const SmootherPolicy* policy;
    std::uint64_t tag;
  };
  const DimredPolicy identity_dimred{};
  for (const Branch& br :
       {Branch{EstimatorId::kSnpKs, EstimatorId::kEaseKs, &cfg.ks_policy, 0x6b73},
        Branch{EstimatorId::kSnpKm, EstimatorId::kEaseKm, &cfg.km_policy, 0x6b6d}}) {
    const bool want_snp = in_roster(br.snp_id);
    const bool want_ease = in_roster(br.ease_id);
    if (!want_snp && !want_ease) continue;
    try {
      const DimredPolicy& dimred =
          br.policy->method == SmootherMethod::kKernelRidge ? identity_dimred : cfg.ks_dimred;
      FoldSmoothers smoothers =
          fit_fold_smoothers(ds, folds, *br.policy, dimred, derive_seed(seed, br.tag), cfg.jobs);
      const std::string tag = br.policy->method == SmootherMethod::kKernelRidge ? "km" : "ks";
      SnpFit snp = snp_from_smoothers(ds, std::move(smoothers), tag, cfg.jobs);

      InfluenceEstimates infl;
      bool have_infl = false;
      if (cfg.k_folds >= 2 && have_ols) {
        infl = estimate_influences(ds, snp.model, ols, cfg.gamma_choice, cfg.jobs);
        snp.model.eta.per_fold_eta = infl.eta_k;
        have_infl = true;
      }
      if (want_snp) {
        auto& r = out[br.snp_id];
        r.theta = snp.theta.theta;
        if (have_infl) {
          const MatrixXd sigma_mu = estimate_sigma(infl.psi_snp);
          r.se = (sigma_mu.diagonal() / static_cast<double>(ds.n())).cwiseSqrt();
        }
        r.ok = true;
      }
      if (want_ease) {
        auto& r = out[br.ease_id];
        if (!have_infl) {
          r.error = have_ols ? "ease requires K >= 2 for the double-CV influence estimates"
                             : "ease requires the OLS fit";
        } else {
          const VectorXd delta =
              estimate_delta(psi0, infl.psi_snp, default_epsilon_n(ds.n()));
          const ThetaEstimate ease = combine_ease(ols, snp.theta, delta);
          const CovarianceReport rep = confidence_report(ease, infl, delta, cfg.level);
          r.theta = ease.theta;
          r.se = rep.se;
          r.ok = true;
        }
      }
    } catch (const std::exception& e) {
      if (want_snp && !out[br.snp_id].ok) out[br.snp_id].error = e.what();
      if (want_ease && !out[br.ease_id].ok) out[br.ease_id].error = e.what();
    }
  }
  return out;
}

McSummary monte_carlo(const SimConfig& cfg, const std::vector<EstimatorId>& roster,
                      Eigen::Index reps, std::uint64_t master_seed) {
  if (reps < 2) throw ConfigError("monte_carlo: need at least 2 replications");
  const TrueTheta truth = true_theta(cfg.dgp, true_theta_cache_draws(), kTrueThetaSeed);
  const Eigen::Index d = truth.theta.size();

  std::vector<ReplicationResult> results(static_cast<std::size_t>(reps));
  SimConfig rep_cfg = cfg;
  rep_cfg.jobs = 1;  // replication-level parallelism only, keeps reductions indexed
  parallel_for_chunks(static_cast<std::size_t>(reps), 1, cfg.jobs,
                      [&](std::size_t r, std::size_t) {
                        results[r] = run_replication(rep_cfg, roster,
                                                     derive_seed(master_seed, 0x7265, r));
                      });

  McSummary summary;
  summary.spec = cfg.dgp;
  summary.theta0 = truth.theta;
  summary.theta0_mc_se = truth.mc_se;
  summary.reps = reps;
  summary.master_seed = master_seed;

  const double z = stats::normal_quantile(0.5 + cfg.level / 2.0);
  double mse_ols = std::numeric_limits<double>::quiet_NaN();

  for (EstimatorId id : roster) {
    EstimatorSummary es;
    es.id = id;
    std::vector<const ReplicationEstimate*> ok_reps;
    for (const auto& rr : results) {
      const auto it = rr.find(id);
      if (it != rr.end() && it->second.ok) {
        ok_reps.push_back(&it->second);
      } else {
        ++es.failures;
      }
    }
    es.reps_used = static_cast<Eigen::Index>(ok_reps.size());
    es.bias = VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
    es.ese = es.bias;
    es.ase = es.bias;
    es.covp = es.bias;
    es.mse = std::numeric_limits<double>::quiet_NaN();
    es.re = std::numeric_limits<double>::quiet_NaN();
    if (!ok_reps.empty()) {
      const double m = static_cast<double>(ok_reps.size());
      VectorXd mean = VectorXd::Zero(d);
      for (const auto* r : ok_reps) mean += r->theta;
      mean /= m;
      VectorXd var = VectorXd::Zero(d);
      VectorXd ase = VectorXd::Zero(d);
      VectorXd covp = VectorXd::Zero(d);
      linalg::CompensatedSum mse_acc;
      bool have_se = true;
      for (const auto* r : ok_reps) {
        var += (r->theta - mean).cwiseAbs2();
        mse_acc.add((r->theta - truth.theta).squaredNorm());
        if (r->se.size() == d) {
          ase += r->se;
          for (Eigen::Index j = 0; j < d; ++j) {
            if (std::abs(r->theta(j) - truth.theta(j)) <= z * r->se(j)) covp(j) += 1.0;
          }
        } else {
          have_se = false;
        }
      }
      es.bias = mean - truth.theta;
      es.ese = ok_reps.size() > 1 ? VectorXd((var / (m - 1.0)).cwiseSqrt())
                                  : VectorXd::Zero(d);
      es.mse = mse_acc.value() / m;
      if (have_se) {
        es.ase = ase / m;
        es.covp = covp / m;
      }
      if (id == EstimatorId::kOls) mse_ols = es.mse;
    }
    summary.estimators.push_back(std::move(es));
  }
  for (auto& es : summary.estimators) {
    if (es.id == EstimatorId::kOls) {
      es.re = 1.0;  // by definition
    } else if (std::isfinite(mse_ols) && std::isfinite(es.mse) && es.mse > 0.0) {
      es.re = mse_ols / es.mse;
    }
  }
  return summary;
}

double prediction_error_cv(const SemiSupervisedDataset& ds, const PredictorConfig& cfg,
                           Eigen::Index holdout_m, int reps, std::uint64_t seed) {
  if (holdout_m >= ds.n()) throw ConfigError("prediction_error_cv: holdout must be smaller than n");
  if (holdout_m < 1 || reps < 1) throw ConfigError("prediction_error_cv: need m >= 1, reps >= 1");

  linalg::CompensatedSum total;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(derive_seed(seed, 0x7065, static_cast<std::uint64_t>(rep)));
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(ds.n()));
    std::iota(perm.begin(), perm.end(), 0);
    for (Eigen::Index i = 0; i < holdout_m; ++i) {
      const auto j = static_cast<Eigen::Index>(
          i + static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(ds.n() - i))));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    std::vector<Eigen::Index> held(perm.begin(), perm.begin() + holdout_m);
    std::vector<Eigen::Index> rest(perm.begin() + holdout_m, perm.end());
    std::sort(held.begin(), held.end());
    std::sort(rest.begin(), rest.end());

    SemiSupervisedDataset train;
    train.labeled_x = select_rows(ds.labeled_x, rest);
    train.labeled_y = select_rows(ds.labeled_y, rest);
    train.unlabeled_x = ds.unlabeled_x;
    train.covariate_names = ds.covariate_names;

    const MatrixXd x_held = select_rows(ds.labeled_x, held);
    const VectorXd y_held = select_rows(ds.labeled_y, held);
    const std::uint64_t fit_seed = derive_seed(seed, 0xf17, static_cast<std::uint64_t>(rep));

    VectorXd pred;
    switch (cfg.kind) {
      case PredictorKind::kOls: {
        const ThetaEstimate est = fit_ols(train);
        pred = linalg::augment_design(x_held) * est.theta;
        break;
      }
      case PredictorKind::kSnp: {
        const SnpFit fit = fit_snp(train, cfg.policy, cfg.dimred, cfg.k_folds, fit_seed, cfg.jobs);
        pred = linalg::augment_design(x_held) * fit.theta.theta;
        break;
      }
      case PredictorKind::kEase: {
        const ThetaEstimate ols = fit_ols(train);
        const SnpFit fit = fit_snp(train, cfg.policy, cfg.dimred, cfg.k_folds, fit_seed, cfg.jobs);
        const InfluenceEstimates infl =
            estimate_influences(train, fit.model, ols, cfg.gamma_choice, cfg.jobs);
        const MatrixXd psi0 = influence_ols(train, ols, cfg.gamma_choice);
        const VectorXd delta = estimate_delta(psi0, infl.psi_snp, default_epsilon_n(train.n()));
        const ThetaEstimate ease = combine_ease(ols, fit.theta, delta);
        pred = linalg::augment_design(x_held) * ease.theta;
        break;
      }
      case PredictorKind::kMhat: {
        const FoldAssignment one = partition_folds(train.n(), 1, 0);
        const FoldSmoothers sm =
            fit_fold_smoothers(train, one, cfg.policy, cfg.dimred, fit_seed, cfg.jobs);
        pred = sm.fits.front().predict_many(x_held, cfg.jobs);
        break;
      }
      case PredictorKind::kMuhat: {
        const SnpFit fit = fit_snp(train, cfg.policy, cfg.dimred, cfg.k_folds, fit_seed, cfg.jobs);
        pred = impute_mu(fit.model, x_held, cfg.jobs);
        break;
      }
    }
    total.add((pred - y_held).squaredNorm() / static_cast<double>(holdout_m));
  }
  return total.value() / static_cast<double>(reps);
}

}  // namespace ease
