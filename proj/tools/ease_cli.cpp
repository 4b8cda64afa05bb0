// Command-line front door: fit/predict on user data, simulation suites,
// MCAR diagnostics. Reports embed the fully resolved configuration so a
// rerun from the report reproduces it byte for byte.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ease/common.hpp"
#include "ease/data.hpp"
#include "ease/diagnostics.hpp"
#include "ease/estimators.hpp"
#include "ease/inference.hpp"
#include "ease/report.hpp"
#include "ease/rng.hpp"
#include "ease/simd.hpp"
#include "ease/simulation.hpp"
#include "ease/stats.hpp"

using nlohmann::json;
using namespace ease;

namespace {

constexpr std::uint64_t kDefaultSeed = 1729;

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed_flag) {
  if (seed_given) return seed_flag;
  if (const char* env = std::getenv("EASE_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("EASE_SEED is not an unsigned integer: '" + std::string(env) + "'");
    }
  }
  return kDefaultSeed;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : csv) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

SemiSupervisedDataset load_inputs(const std::string& labeled_path,
                                  const std::string& unlabeled_path,
                                  const DatasetSchema& schema) {
  std::ifstream lab(labeled_path);
  if (!lab) throw DataError("cannot open labeled file '" + labeled_path + "'");
  SemiSupervisedDataset ds = load_dataset(lab, schema);
  if (!unlabeled_path.empty()) {
    std::ifstream unl(unlabeled_path);
    if (!unl) throw DataError("cannot open unlabeled file '" + unlabeled_path + "'");
    append_unlabeled(ds, unl, schema);
  }
  return ds;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file '" + path + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path + "'");
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

// shared knobs for fit/predict/diagnose
struct PipelineOptions {
  std::string labeled, unlabeled, outcome;
  std::string method = "ease";
  std::string smoother = "ks";
  std::string dimred = "sir";
  int r = 2;
  int slices = 100;
  int k_folds = 5;
  std::string kernel_family = "gaussian";
  int kernel_order = 2;
  double bandwidth = 0.0;  // 0 = least-squares CV
  std::string bandwidth_grid;
  double level = 0.95;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  int jobs = 0;
  std::string out, format = "json";
  std::string log1p_cols;
  std::string standardize = "off";
  std::string gamma_choice = "unlabeled-gram";
  std::string config_file;

  void add_common(CLI::App* cmd, bool wants_method) {
    cmd->add_option("--labeled", labeled, "labeled CSV (header row; blank outcome = unlabeled)")
        ->required();
    cmd->add_option("--unlabeled", unlabeled, "extra covariate-only CSV");
    cmd->add_option("--outcome", outcome, "outcome column name (default: first column)");
    if (wants_method) {
      cmd->add_option("--method", method, "ols | snp | ease | all")->capture_default_str();
    }
    cmd->add_option("--smoother", smoother, "ks | km")->capture_default_str();
    cmd->add_option("--dimred", dimred, "identity | pca | sir | ss-sir")->capture_default_str();
    cmd->add_option("--r", r, "projection dimension")->capture_default_str();
    cmd->add_option("--slices", slices, "SIR slice count H")->capture_default_str();
    cmd->add_option("--folds", k_folds, "cross-fitting folds K")->capture_default_str();
    cmd->add_option("--kernel-family", kernel_family,
                    "gaussian | gaussian-higher-order | epanechnikov")
        ->capture_default_str();
    cmd->add_option("--kernel-order", kernel_order, "even kernel order q")->capture_default_str();
    cmd->add_option("--bandwidth", bandwidth, "fixed bandwidth (0 = least-squares CV)")
        ->capture_default_str();
    cmd->add_option("--bandwidth-grid", bandwidth_grid,
                    "comma-separated CV grid (default: 13 geometric points)");
    cmd->add_option("--level", level, "CI coverage level")->capture_default_str();
    cmd->add_option("--seed", seed, "RNG seed (else EASE_SEED, else default)")
        ->each([this](const std::string&) { seed_given = true; });
    cmd->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--out", out, "output path (default stdout)");
    cmd->add_option("--format", format, "json | csv")->capture_default_str();
    cmd->add_option("--log1p-cols", log1p_cols, "comma-separated columns to log(1+x) transform");
    cmd->add_option("--standardize", standardize, "off | labeled | pooled")->capture_default_str();
    cmd->add_option("--gamma-choice", gamma_choice, "unlabeled-gram | labeled-gram")
        ->capture_default_str();
    cmd->add_option("--config", config_file, "flat key=value config file (flags override it)");
  }

  void validate() const {
    if (method != "ols" && method != "snp" && method != "ease" && method != "all" &&
        method != "mhat" && method != "muhat") {
      throw ConfigError("unknown --method '" + method + "'");
    }
    if (smoother != "ks" && smoother != "km") throw ConfigError("--smoother must be ks or km");
    if (dimred != "identity" && dimred != "pca" && dimred != "sir" && dimred != "ss-sir") {
      throw ConfigError("unknown --dimred '" + dimred + "'");
    }
    if (r < 1) throw ConfigError("--r must be >= 1");
    if (slices < 2) throw ConfigError("--slices must be >= 2");
    if (k_folds < 1) throw ConfigError("--folds must be >= 1");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("--level must lie in (0,1)");
    if (bandwidth < 0.0) throw ConfigError("--bandwidth must be >= 0");
    if (jobs < 0) throw ConfigError("--jobs must be >= 0");
    if (format != "json" && format != "csv") throw ConfigError("--format must be json or csv");
    if (standardize != "off" && standardize != "labeled" && standardize != "pooled") {
      throw ConfigError("--standardize must be off, labeled or pooled");
    }
    if (gamma_choice != "unlabeled-gram" && gamma_choice != "labeled-gram") {
      throw ConfigError("--gamma-choice must be unlabeled-gram or labeled-gram");
    }
    KernelSpec spec{kernel_family_enum(), kernel_order, std::max(1, r)};
    spec.validate();
  }

  KernelFamily kernel_family_enum() const {
    if (kernel_family == "gaussian") return KernelFamily::kGaussian;
    if (kernel_family == "gaussian-higher-order") return KernelFamily::kGaussianHigherOrder;
    if (kernel_family == "epanechnikov") return KernelFamily::kEpanechnikov;
    throw ConfigError("unknown --kernel-family '" + kernel_family + "'");
  }

  ProjectionOrigin dimred_enum() const {
    if (dimred == "identity") return ProjectionOrigin::kIdentity;
    if (dimred == "pca") return ProjectionOrigin::kPca;
    if (dimred == "sir") return ProjectionOrigin::kSir;
    return ProjectionOrigin::kSsSir;
  }

  GammaChoice gamma_enum() const {
    return gamma_choice == "labeled-gram" ? GammaChoice::kLabeledGram
                                          : GammaChoice::kUnlabeledGram;
  }

  int resolved_jobs() const { return jobs == 0 ? hardware_jobs() : jobs; }

  SmootherPolicy smoother_policy(Eigen::Index p) const {
    SmootherPolicy policy;
    if (smoother == "km") {
      policy.method = SmootherMethod::kKernelRidge;
    } else {
      policy.method = SmootherMethod::kLocalConstantKs;
      policy.kernel = KernelSpec{kernel_family_enum(), kernel_order,
                                 static_cast<int>(std::min<Eigen::Index>(r, p))};
      if (bandwidth > 0.0) policy.bandwidth = bandwidth;
      if (!bandwidth_grid.empty()) {
        const auto cells = split_list(bandwidth_grid);
        VectorXd grid(static_cast<Eigen::Index>(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
          try {
            grid(static_cast<Eigen::Index>(i)) = std::stod(cells[i]);
          } catch (const std::exception&) {
            throw ConfigError("--bandwidth-grid entry '" + cells[i] + "' is not numeric");
          }
        }
        policy.bandwidth_grid = grid;
      }
    }
    policy.cv_folds = 5;
    return policy;
  }

  DimredPolicy dimred_policy(Eigen::Index p) const {
    DimredPolicy dp;
    dp.origin = dimred_enum();
    dp.r = static_cast<int>(std::min<Eigen::Index>(r, p));
    dp.slices = SliceScheme{SliceMode::kEqualWidth, slices};
    return dp;
  }

  json config_echo(const std::string& command) const {
    json j;
    j["command"] = command;
    j["labeled"] = labeled;
    j["unlabeled"] = unlabeled;
    j["outcome"] = outcome;
    j["method"] = method;
    j["smoother"] = smoother;
    j["dimred"] = dimred;
    j["r"] = r;
    j["slices"] = slices;
    j["folds"] = k_folds;
    j["kernel_family"] = kernel_family;
    j["kernel_order"] = kernel_order;
    j["bandwidth"] = bandwidth;
    j["bandwidth_grid"] = bandwidth_grid;
    j["level"] = level;
    j["seed"] = seed;
    j["log1p_cols"] = log1p_cols;
    j["standardize"] = standardize;
    j["gamma_choice"] = gamma_choice;
    return j;
  }
};

json estimate_block(const VectorXd& theta, const VectorXd& se, const VectorXd& lo,
                    const VectorXd& hi) {
  json j;
  j["theta"] = report::json_vector(theta);
  j["se"] = report::json_vector(se);
  j["ci_lower"] = report::json_vector(lo);
  j["ci_upper"] = report::json_vector(hi);
  return j;
}

struct FitArtifacts {
  ThetaEstimate ols;
  MatrixXd psi0;
  std::optional<SnpFit> snp;
  std::optional<InfluenceEstimates> infl;
  std::optional<ThetaEstimate> ease;
  std::optional<VectorXd> delta;
  FoldAssignment folds;
};

FitArtifacts run_fit_pipeline(const SemiSupervisedDataset& ds, const PipelineOptions& opt,
                              bool want_snp, bool want_ease) {
  FitArtifacts art;
  art.ols = fit_ols(ds);
  art.psi0 = influence_ols(ds, art.ols, opt.gamma_enum());
  if (!want_snp && !want_ease) return art;

  art.folds = partition_folds(ds.n(), opt.k_folds, derive_seed(opt.seed, 0xf01d));
  art.snp = fit_snp_with_folds(ds, art.folds, opt.smoother_policy(ds.p()),
                               opt.dimred_policy(ds.p()), derive_seed(opt.seed, 0x500f17),
                               opt.resolved_jobs());
  if (!want_ease) return art;
  if (opt.k_folds < 2) {
    throw ConfigError("method ease needs --folds >= 2 for the double-CV influence estimates");
  }
  art.infl =
      estimate_influences(ds, art.snp->model, art.ols, opt.gamma_enum(), opt.resolved_jobs());
  art.delta = estimate_delta(art.infl->psi0, art.infl->psi_snp, default_epsilon_n(ds.n()));
  art.ease = combine_ease(art.ols, art.snp->theta, *art.delta);
  return art;
}

int cmd_fit(const PipelineOptions& opt) {
  opt.validate();
  DatasetSchema schema;
  schema.outcome_column = opt.outcome;
  schema.log1p_columns = split_list(opt.log1p_cols);
  SemiSupervisedDataset ds = load_inputs(opt.labeled, opt.unlabeled, schema);
  StandardizationParams std_params;
  if (opt.standardize != "off") {
    auto [std_ds, params] = standardize(ds, opt.standardize == "pooled"
                                                ? StandardizeScope::kPooled
                                                : StandardizeScope::kLabeledOnly);
    ds = std::move(std_ds);
    std_params = std::move(params);
  }
  ds.validate();

  const bool want_snp = opt.method == "snp" || opt.method == "ease" || opt.method == "all";
  const bool want_ease = opt.method == "ease" || opt.method == "all";
  if (opt.method == "mhat" || opt.method == "muhat") {
    throw ConfigError("fit reports coefficient estimates; use predict for mhat/muhat");
  }
  if (want_snp && ds.big_n() == 0) {
    throw DataError("method " + opt.method + " needs unlabeled rows");
  }
  const FitArtifacts art = run_fit_pipeline(ds, opt, want_snp, want_ease);
  const Eigen::Index n = ds.n();
  const double z = stats::normal_quantile(0.5 + opt.level / 2.0);

  json rep;
  rep["schema"] = 1;
  rep["version"] = kVersion;
  rep["simd"] = simd::active_backend_name();
  rep["config"] = opt.config_echo("fit");
  rep["seed"] = opt.seed;
  rep["n"] = n;
  rep["big_n"] = ds.big_n();
  rep["p"] = ds.p();
  rep["covariates"] = ds.covariate_names;
  rep["folds"] = art.folds.membership;
  rep["epsilon_n"] = default_epsilon_n(n);

  json estimates;
  const MatrixXd sigma0 = estimate_sigma(art.psi0);
  const VectorXd se0 = (sigma0.diagonal() / static_cast<double>(n)).cwiseSqrt();
  estimates["ols"] =
      estimate_block(art.ols.theta, se0, art.ols.theta - z * se0, art.ols.theta + z * se0);
  estimates["ols"]["sigma"] = report::json_matrix(sigma0);
  json re;
  if (art.snp.has_value()) {
    json snp_block;
    if (art.infl.has_value()) {
      const MatrixXd sigma_mu = estimate_sigma(art.infl->psi_snp);
      const VectorXd se = (sigma_mu.diagonal() / static_cast<double>(n)).cwiseSqrt();
      snp_block = estimate_block(art.snp->theta.theta, se, art.snp->theta.theta - z * se,
                                 art.snp->theta.theta + z * se);
      snp_block["sigma"] = report::json_matrix(sigma_mu);
      re["snp"] = sigma0.trace() / sigma_mu.trace();
    } else {
      snp_block["theta"] = report::json_vector(art.snp->theta.theta);
    }
    snp_block["projection_origin"] = art.snp->theta.provenance.projection;
    snp_block["warnings"] = art.snp->theta.provenance.warnings;
    json fold_params = json::array();
    for (const auto& fit : art.snp->model.smoothers.fits) {
      json fp;
      if (fit.method() == SmootherMethod::kLocalConstantKs) {
        fp["bandwidth"] = fit.bandwidth();
        fp["projection"] = report::projection_json(fit.projection());
      } else if (fit.method() == SmootherMethod::kKernelRidge) {
        fp["lambda"] = fit.ridge_params().lambda;
        fp["gamma"] = fit.ridge_params().gamma;
      }
      fold_params.push_back(fp);
    }
    snp_block["fold_smoothers"] = fold_params;
    snp_block["eta"] = report::json_vector(art.snp->model.eta.eta);
    estimates["snp"] = snp_block;
  }
  if (art.ease.has_value()) {
    const auto cov_rep = confidence_report(*art.ease, *art.infl, *art.delta, opt.level);
    json ease_block =
        estimate_block(art.ease->theta, cov_rep.se, cov_rep.ci_lower, cov_rep.ci_upper);
    ease_block["delta"] = report::json_vector(*art.delta);
    ease_block["sigma_mu"] = report::json_matrix(cov_rep.sigma_mu);
    ease_block["sigma_ease"] = report::json_matrix(cov_rep.sigma_ease);
    estimates["ease"] = ease_block;
    re["ease"] = sigma0.trace() / cov_rep.sigma_ease.trace();
  }
  rep["estimates"] = estimates;
  rep["re_vs_ols"] = re;
  if (opt.standardize != "off") {
    rep["standardization"] = {{"means", report::json_vector(std_params.means)},
                              {"scales", report::json_vector(std_params.scales)}};
  }

  if (opt.format == "json") {
    emit(opt.out, rep.dump(2) + "\n");
  } else {
    std::string csv = "method,parameter,estimate,se,ci_lower,ci_upper,delta\n";
    const auto add_rows = [&](const std::string& name, const json& block) {
      if (!block.contains("theta")) return;
      const auto& th = block["theta"];
      for (std::size_t jx = 0; jx < th.size(); ++jx) {
        const auto cell = [&](const char* key) -> std::string {
          if (!block.contains(key) || block[key][jx].is_null()) return "NA";
          return report::format_double(block[key][jx].get<double>());
        };
        csv += name + "," + report::param_label(static_cast<Eigen::Index>(jx)) + "," +
               report::format_double(th[jx].get<double>()) + "," + cell("se") + "," +
               cell("ci_lower") + "," + cell("ci_upper") + "," + cell("delta") + "\n";
      }
    };
    for (const auto& name : {"ols", "snp", "ease"}) {
      if (estimates.contains(name)) add_rows(name, estimates[name]);
    }
    emit(opt.out, csv);
  }
  return 0;
}

int cmd_predict(const PipelineOptions& opt) {
  opt.validate();
  if (opt.unlabeled.empty()) throw ConfigError("predict needs --unlabeled rows to score");
  DatasetSchema schema;
  schema.outcome_column = opt.outcome;
  schema.log1p_columns = split_list(opt.log1p_cols);
  SemiSupervisedDataset ds = load_inputs(opt.labeled, opt.unlabeled, schema);
  ds.validate();
  if (ds.big_n() == 0) throw DataError("predict: no rows to score");

  VectorXd pred;
  if (opt.method == "ols") {
    const auto est = fit_ols(ds);
    pred = linalg::augment_design(ds.unlabeled_x) * est.theta;
  } else if (opt.method == "snp" || opt.method == "ease") {
    const FitArtifacts art = run_fit_pipeline(ds, opt, true, opt.method == "ease");
    const VectorXd theta = opt.method == "ease" ? art.ease->theta : art.snp->theta.theta;
    pred = linalg::augment_design(ds.unlabeled_x) * theta;
  } else if (opt.method == "mhat") {
    const FoldAssignment one = partition_folds(ds.n(), 1, 0);
    const auto sm =
        fit_fold_smoothers(ds, one, opt.smoother_policy(ds.p()), opt.dimred_policy(ds.p()),
                           derive_seed(opt.seed, 0x500f17), opt.resolved_jobs());
    pred = sm.fits.front().predict_many(ds.unlabeled_x, opt.resolved_jobs());
  } else if (opt.method == "muhat") {
    const FitArtifacts art = run_fit_pipeline(ds, opt, true, false);
    pred = impute_mu(art.snp->model, ds.unlabeled_x, opt.resolved_jobs());
  } else {
    throw ConfigError("predict supports --method ols | snp | ease | mhat | muhat");
  }

  if (opt.format == "json") {
    json j;
    j["schema"] = 1;
    j["config"] = opt.config_echo("predict");
    j["predictions"] = report::json_vector(pred);
    emit(opt.out, j.dump(2) + "\n");
  } else {
    std::string csv = "row,prediction\n";
    for (Eigen::Index i = 0; i < pred.size(); ++i) {
      csv += std::to_string(i + 1) + "," + report::format_double(pred(i)) + "\n";
    }
    emit(opt.out, csv);
  }
  return 0;
}

struct SimulateOptions {
  std::string model = "linear";
  int p = 10;
  int setting = 1;
  double nl_param = 1.0;
  Eigen::Index n = 500;
  Eigen::Index big_n = 10000;
  Eigen::Index reps = 500;
  std::string roster = "ols,snp-ks,ease-ks,snp-km,ease-km";
  int k_folds = 5;
  int slices = 100;
  int r = 2;
  std::string dimred = "sir";
  double level = 0.95;
  std::uint64_t seed = kDefaultSeed;
  bool seed_given = false;
  int jobs = 0;
  std::string out = "ease_sim";
  std::string format = "csv";
  std::string config_file;

  void bind(CLI::App* cmd) {
    cmd->add_option("--model", model, "linear|nl1c|nl2c|nl3c|p2-linear|p2-nli|p2-nlq")
        ->capture_default_str();
    cmd->add_option("--p", p, "covariate dimension")->capture_default_str();
    cmd->add_option("--setting", setting, "coefficient setting 1 or 2")->capture_default_str();
    cmd->add_option("--nl-param", nl_param, "lambda/gamma for the p=2 families")
        ->capture_default_str();
    cmd->add_option("--n", n, "labeled rows per replication")->capture_default_str();
    cmd->add_option("--big-n", big_n, "unlabeled rows per replication")->capture_default_str();
    cmd->add_option("--reps", reps, "Monte-Carlo replications")->capture_default_str();
    cmd->add_option("--roster", roster, "comma list of estimators")->capture_default_str();
    cmd->add_option("--folds", k_folds, "cross-fitting folds K")->capture_default_str();
    cmd->add_option("--slices", slices, "SIR slice count H")->capture_default_str();
    cmd->add_option("--r", r, "projection dimension for the KS route")->capture_default_str();
    cmd->add_option("--dimred", dimred, "identity | pca | sir | ss-sir")->capture_default_str();
    cmd->add_option("--level", level, "CI coverage level")->capture_default_str();
    cmd->add_option("--seed", seed, "master seed")->each([this](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--jobs", jobs, "worker threads (0 = all cores)")->capture_default_str();
    cmd->add_option("--out", out, "output basename")->capture_default_str();
    cmd->add_option("--format", format, "stdout echo: json | csv")->capture_default_str();
    cmd->add_option("--config", config_file, "flat key=value config file (flags override it)");
  }
};

int cmd_simulate(const SimulateOptions& opt) {
  DgpSpec spec;
  spec.model = dgp_model_from_string(opt.model);
  spec.p = opt.p;
  if (opt.setting != 1 && opt.setting != 2) throw ConfigError("--setting must be 1 or 2");
  spec.b_choice = opt.setting == 1 ? BChoice::kSetting1 : BChoice::kSetting2;
  spec.nl_param = opt.nl_param;
  spec.validate();
  if (!(opt.level > 0.0 && opt.level < 1.0)) throw ConfigError("--level must lie in (0,1)");
  if (opt.reps < 2) throw ConfigError("--reps must be >= 2");
  if (opt.format != "json" && opt.format != "csv") {
    throw ConfigError("--format must be json or csv");
  }

  std::vector<EstimatorId> roster;
  for (const auto& name : split_list(opt.roster)) roster.push_back(estimator_from_string(name));
  if (roster.empty()) throw ConfigError("--roster is empty");

  SimConfig cfg = SimConfig::defaults_for(spec);
  cfg.n = opt.n;
  cfg.big_n = opt.big_n;
  cfg.k_folds = opt.k_folds;
  cfg.level = opt.level;
  cfg.jobs = opt.jobs == 0 ? hardware_jobs() : opt.jobs;
  if (opt.dimred == "identity") {
    cfg.ks_dimred.origin = ProjectionOrigin::kIdentity;
  } else if (opt.dimred == "pca") {
    cfg.ks_dimred.origin = ProjectionOrigin::kPca;
  } else if (opt.dimred == "sir") {
    cfg.ks_dimred.origin = ProjectionOrigin::kSir;
  } else if (opt.dimred == "ss-sir") {
    cfg.ks_dimred.origin = ProjectionOrigin::kSsSir;
  } else {
    throw ConfigError("unknown --dimred '" + opt.dimred + "'");
  }
  cfg.ks_dimred.r = std::min(opt.r, opt.p);
  cfg.ks_dimred.slices = SliceScheme{SliceMode::kEqualWidth, opt.slices};

  const McSummary summary = monte_carlo(cfg, roster, opt.reps, opt.seed);

  json j = report::mc_json(summary);
  j["schema"] = 1;
  j["version"] = kVersion;
  j["simd"] = simd::active_backend_name();
  json config;
  config["command"] = "simulate";
  config["model"] = opt.model;
  config["p"] = opt.p;
  config["setting"] = opt.setting;
  config["nl_param"] = opt.nl_param;
  config["n"] = opt.n;
  config["big_n"] = opt.big_n;
  config["reps"] = opt.reps;
  config["roster"] = opt.roster;
  config["folds"] = opt.k_folds;
  config["slices"] = opt.slices;
  config["r"] = cfg.ks_dimred.r;
  config["dimred"] = opt.dimred;
  config["level"] = opt.level;
  config["seed"] = opt.seed;
  j["config"] = config;
  std::vector<std::uint64_t> rep_seeds;
  rep_seeds.reserve(static_cast<std::size_t>(opt.reps));
  for (Eigen::Index rix = 0; rix < opt.reps; ++rix) {
    rep_seeds.push_back(derive_seed(opt.seed, 0x7265, static_cast<std::uint64_t>(rix)));
  }
  j["replication_seeds"] = rep_seeds;

  const std::string re_csv = report::mc_re_csv(summary);
  write_text(opt.out + "_re.csv", re_csv);
  write_text(opt.out + "_coord.csv", report::mc_coord_csv(summary));
  write_text(opt.out + ".json", j.dump(2) + "\n");
  if (opt.format == "json") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << re_csv;
  }
  return 0;
}

int cmd_diagnose(const PipelineOptions& opt) {
  if (opt.format != "json" && opt.format != "csv") {
    throw ConfigError("--format must be json or csv");
  }
  DatasetSchema schema;
  schema.outcome_column = opt.outcome;
  schema.log1p_columns = split_list(opt.log1p_cols);
  const SemiSupervisedDataset ds = load_inputs(opt.labeled, opt.unlabeled, schema);
  const McarReport rep = mcar_tests(ds);
  if (opt.format == "json") {
    json j = report::mcar_json(rep);
    j["schema"] = 1;
    j["config"] = opt.config_echo("diagnose");
    emit(opt.out, j.dump(2) + "\n");
  } else {
    emit(opt.out, report::mcar_csv(rep));
  }
  return 0;
}

}  // namespace

namespace {

// Flat key=value config support: values for flags absent from the command
// line are appended as arguments, so explicit flags always win and unknown
// keys are rejected by the regular CLI parser.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      config_path = args[i + 1];
      break;
    }
  }
  if (config_path.empty()) return args;
  std::ifstream in(config_path);
  if (!in) throw DataError("cannot open config file '" + config_path + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    trimmed.erase(0, trimmed.find_first_not_of(" \t"));
    if (trimmed.empty() || trimmed[0] == '#') continue;
    const auto eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config file line " + std::to_string(line_no) + " is not key=value");
    }
    std::string key = trimmed.substr(0, eq);
    std::string value = trimmed.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    value.erase(0, value.find_first_not_of(" \t"));
    const std::string flag = "--" + key;
    bool given = false;
    for (const auto& a : args) {
      if (a == flag || a.rfind(flag + "=", 0) == 0) {
        given = true;
        break;
      }
    }
    if (!given) {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semi-supervised linear regression: OLS, SNP imputation and adaptive combination"};
  app.require_subcommand(1);

  PipelineOptions fit_opt;
  auto* fit = app.add_subcommand("fit", "fit estimators on labeled + unlabeled data");
  fit_opt.add_common(fit, true);

  PipelineOptions pred_opt;
  auto* predict = app.add_subcommand("predict", "fit, then score covariate rows");
  pred_opt.add_common(predict, true);

  SimulateOptions sim_opt;
  auto* simulate = app.add_subcommand("simulate", "Monte-Carlo benchmark of the estimators");
  sim_opt.bind(simulate);

  PipelineOptions diag_opt;
  auto* diagnose = app.add_subcommand("diagnose", "labeled-vs-unlabeled MCAR battery");
  diag_opt.add_common(diagnose, false);

  try {
    std::vector<std::string> args = merge_config_args(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help and friends
    }
    std::cerr << "error: kind=config reason=" << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: kind=config reason=" << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: kind=data reason=" << e.what() << "\n";
    return 3;
  }

  try {
    if (fit->parsed()) {
      fit_opt.seed = resolve_seed(fit_opt.seed_given, fit_opt.seed);
      return cmd_fit(fit_opt);
    }
    if (predict->parsed()) {
      pred_opt.seed = resolve_seed(pred_opt.seed_given, pred_opt.seed);
      return cmd_predict(pred_opt);
    }
    if (simulate->parsed()) {
      sim_opt.seed = resolve_seed(sim_opt.seed_given, sim_opt.seed);
      return cmd_simulate(sim_opt);
    }
    if (diagnose->parsed()) {
      diag_opt.seed = resolve_seed(diag_opt.seed_given, diag_opt.seed);
      return cmd_diagnose(diag_opt);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: kind=config reason=" << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: kind=data reason=" << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: kind=numeric reason=" << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=internal reason=" << e.what() << "\n";
    return 4;
  }
  return 2;
}
