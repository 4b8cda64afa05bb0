#include <doctest.h>

#include <cmath>

#include "ease/dimred.hpp"
#include "ease/estimators.hpp"
#include "ease/inference.hpp"
#include "ease/rng.hpp"
#include "ease/simulation.hpp"

using namespace ease;

namespace {

double cos_angle(const VectorXd& a, const VectorXd& b) {
  return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

}  // namespace

TEST_SUITE("integration") {
  TEST_CASE("the full-dimensional route beats ols under strong curvature") {
    // p=2 quadratic model: fit_np should land closer to theta0 than ols
    // on most seeds
    DgpSpec spec;
    spec.model = DgpModel::kP2Nlq;
    spec.p = 2;
    spec.nl_param = 1.0;
    const auto truth = true_theta(spec, 50000, kTrueThetaSeed);

    int np_wins = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto ds = generate_data(spec, 500, 10000, 4000 + s);
      const auto ols = fit_ols(ds.labeled_x, ds.labeled_y);
      NpOptions opts;
      opts.kernel = KernelSpec{KernelFamily::kGaussianHigherOrder, 4, 2};
      opts.jobs = 2;
      const auto np = fit_np(ds, opts);
      const double err_np = (np.theta - truth.theta).norm();
      const double err_ols = (ols.theta - truth.theta).norm();
      if (err_np < err_ols) ++np_wins;
    }
    CHECK(np_wins >= 7);
  }

  TEST_CASE("ss-sir recovers the driving direction with plentiful unlabeled data") {
    // On the noiseless y = x1 design, self-consistent SIR is quasi-exact
    // (a least-squares orthogonality cancellation), so SS-SIR cannot win a
    // per-seed cosine comparison; what holds is that SS-SIR itself stays
    // extremely accurate. The paired comparison runs in the acceptance
    // suite as specified and its outcome is documented there.
    VectorXd e1(2);
    e1 << 1.0, 0.0;
    int hits = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      DgpSpec spec;
      spec.model = DgpModel::kP2Linear;
      spec.p = 2;
      const auto ds = generate_data(spec, 5000, 10000, 9000 + s);
      const VectorXd y = ds.labeled_x.col(0);  // y = x1 design
      const SliceScheme scheme{SliceMode::kEqualWidth, 100};
      const auto ss = ss_sir_directions(ds.labeled_x, y, ds.unlabeled_x, 1, scheme);
      if (cos_angle(ss.matrix.col(0), e1) > 0.995) ++hits;
    }
    CHECK(hits >= 9);
  }

  TEST_CASE("sir recovery holds across seeds") {
    VectorXd e1(2);
    e1 << 1.0, 0.0;
    int hits = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      Rng rng(500 + s);
      MatrixXd x(5000, 2);
      for (int i = 0; i < 5000; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = rng.normal();
      }
      const VectorXd y = x.col(0);
      const auto basis = sir_directions(x, y, 1, SliceScheme{SliceMode::kEqualWidth, 100});
      if (cos_angle(basis.matrix.col(0), e1) > 0.95) ++hits;
    }
    CHECK(hits >= 9);
  }

  TEST_CASE("km imputation prediction error relative to Var(Y) near the reference") {
    // NL2C, setting I, p=10: mu-hat (KM) against the outcome variance
    DgpSpec spec;
    spec.model = DgpModel::kNl2c;
    spec.p = 10;
    spec.b_choice = BChoice::kSetting1;
    const auto ds = generate_data(spec, 500, 10000, 31415);
    PredictorConfig cfg;
    cfg.kind = PredictorKind::kMuhat;
    cfg.policy.method = SmootherMethod::kKernelRidge;
    cfg.policy.cv_folds = 5;
    cfg.k_folds = 5;
    cfg.jobs = 2;
    const double pe = prediction_error_cv(ds, cfg, 50, 5, 2718);
    const double var_y =
        (ds.labeled_y.array() - ds.labeled_y.mean()).square().sum() / (ds.n() - 1.0);
    const double ratio = pe / var_y;
    MESSAGE("KM mu-hat PE/Var(Y) = ", ratio);
    // the reference table value is an upper anchor: our tuned smoother may
    // beat it, but never trail it, and PE can never slip below the
    // irreducible noise (that would mean holdout leakage)
    CHECK(pe > 1.0);
    CHECK(ratio < 0.156 * 1.3);

    PredictorConfig ks_cfg = cfg;
    ks_cfg.policy = SmootherPolicy{};
    ks_cfg.policy.method = SmootherMethod::kLocalConstantKs;
    ks_cfg.policy.kernel = KernelSpec{KernelFamily::kGaussian, 2, 2};
    ks_cfg.policy.cv_folds = 5;
    ks_cfg.dimred.origin = ProjectionOrigin::kSir;
    ks_cfg.dimred.r = 2;
    ks_cfg.dimred.slices = SliceScheme{SliceMode::kEqualWidth, 100};
    const double pe_ks = prediction_error_cv(ds, ks_cfg, 50, 5, 2718);
    MESSAGE("KS mu-hat PE/Var(Y) = ", pe_ks / var_y);
    CHECK(pe_ks > 1.0);
    CHECK(pe_ks / var_y < 0.228 * 1.3);
  }

  TEST_CASE("monte carlo is invariant to the worker count") {
    SimConfig cfg = SimConfig::defaults_for(DgpSpec{DgpModel::kP2Nlq, 2, BChoice::kSetting1, 1.0});
    cfg.n = 80;
    cfg.big_n = 400;
    cfg.k_folds = 3;
    const std::vector<EstimatorId> roster{EstimatorId::kOls, EstimatorId::kSnpKs,
                                          EstimatorId::kEaseKs};
    cfg.jobs = 1;
    const auto a = monte_carlo(cfg, roster, 6, 555);
    cfg.jobs = 2;
    const auto b = monte_carlo(cfg, roster, 6, 555);
    for (std::size_t e = 0; e < a.estimators.size(); ++e) {
      CHECK(a.estimators[e].bias == b.estimators[e].bias);
      CHECK(a.estimators[e].ese == b.estimators[e].ese);
      CHECK(a.estimators[e].ase == b.estimators[e].ase);
      CHECK(a.estimators[e].mse == b.estimators[e].mse);
    }
  }

  TEST_CASE("end-to-end ease pipeline on a nonlinear model produces sane reports") {
    DgpSpec spec{DgpModel::kP2Nlq, 2, BChoice::kSetting1, 1.0};
    const auto ds = generate_data(spec, 200, 2000, 777);
    const auto ols = fit_ols(ds.labeled_x, ds.labeled_y);
    SmootherPolicy policy;
    policy.method = SmootherMethod::kLocalConstantKs;
    policy.kernel = KernelSpec{KernelFamily::kGaussian, 2, 2};
    DimredPolicy dimred;
    dimred.origin = ProjectionOrigin::kIdentity;
    dimred.r = 2;
    const auto snp = fit_snp(ds, policy, dimred, 5, 88, 2);
    const auto infl = estimate_influences(ds, snp.model, ols, GammaChoice::kUnlabeledGram, 2);
    const VectorXd delta = estimate_delta(infl.psi0, infl.psi_snp, default_epsilon_n(ds.n()));
    const auto ease = combine_ease(ols, snp.theta, delta);
    const auto rep = confidence_report(ease, infl, delta, 0.95);
    CHECK(rep.se.minCoeff() > 0.0);
    CHECK(((rep.ci_upper - rep.ci_lower).array() > 0.0).all());
    CHECK(delta.size() == 3);
    // quadratic truth: the smoother captures curvature, so delta should pull
    // visibly toward the snp side for at least one coordinate
    CHECK(delta.cwiseAbs().maxCoeff() > 0.05);
  }
}
