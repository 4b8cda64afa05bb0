#include "ease/report.hpp"

#include <cmath>
#include <cstdio>

namespace ease::report {

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string param_label(Eigen::Index coord) {
  if (coord == 0) return "alpha0";
  char buf[16];
  std::snprintf(buf, sizeof(buf), "beta%02d", static_cast<int>(coord));
  return buf;
}

nlohmann::json json_vector(const VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isnan(v(i))) {
      arr.push_back(nullptr);
    } else {
      arr.push_back(v(i));
    }
  }
  return arr;
}

nlohmann::json json_matrix(const MatrixXd& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    arr.push_back(json_vector(m.row(i).transpose()));
  }
  return arr;
}

nlohmann::json projection_json(const ProjectionBasis& basis) {
  nlohmann::json j;
  j["origin"] = to_string(basis.origin);
  j["p"] = basis.p();
  j["r"] = basis.r();
  if (basis.slices_h > 0) j["slices"] = basis.slices_h;
  if (basis.per_fold.has_value()) j["fold"] = *basis.per_fold;
  j["rank_deficient"] = basis.rank_deficient;
  if (basis.eigenvalues.size() > 0) j["eigenvalues"] = json_vector(basis.eigenvalues);
  j["matrix"] = json_matrix(basis.matrix);
  return j;
}

std::string mc_re_csv(const McSummary& s) {
  std::string out = "estimator,reps_used,failures,mse,re\n";
  for (const auto& e : s.estimators) {
    out += to_string(e.id) + "," + std::to_string(e.reps_used) + "," +
           std::to_string(e.failures) + "," + format_double(e.mse) + "," + format_double(e.re) +
           "\n";
  }
  return out;
}

std::string mc_coord_csv(const McSummary& s) {
  std::string out = "estimator,parameter,theta0,bias,ese,ase,covp\n";
  for (const auto& e : s.estimators) {
    for (Eigen::Index j = 0; j < s.theta0.size(); ++j) {
      out += to_string(e.id) + "," + param_label(j) + "," + format_double(s.theta0(j)) + "," +
             format_double(e.bias(j)) + "," + format_double(e.ese(j)) + "," +
             format_double(e.ase(j)) + "," + format_double(e.covp(j)) + "\n";
    }
  }
  return out;
}

nlohmann::json mc_json(const McSummary& s) {
  nlohmann::json j;
  j["model"] = to_string(s.spec.model);
  j["p"] = s.spec.p;
  j["setting"] = s.spec.b_choice == BChoice::kSetting1 ? 1 : 2;
  j["nl_param"] = s.spec.nl_param;
  j["reps"] = s.reps;
  j["master_seed"] = s.master_seed;
  j["theta0"] = json_vector(s.theta0);
  j["theta0_mc_se"] = json_vector(s.theta0_mc_se);
  nlohmann::json ests = nlohmann::json::object();
  for (const auto& e : s.estimators) {
    nlohmann::json je;
    je["reps_used"] = e.reps_used;
    je["failures"] = e.failures;
    je["mse"] = std::isnan(e.mse) ? nlohmann::json(nullptr) : nlohmann::json(e.mse);
    je["re"] = std::isnan(e.re) ? nlohmann::json(nullptr) : nlohmann::json(e.re);
    je["bias"] = json_vector(e.bias);
    je["ese"] = json_vector(e.ese);
    je["ase"] = json_vector(e.ase);
    je["covp"] = json_vector(e.covp);
    ests[to_string(e.id)] = je;
  }
  j["estimators"] = ests;
  return j;
}

std::string mcar_csv(const McarReport& r) {
  std::string out =
      "covariate,labeled_mean,labeled_sd,unlabeled_mean,unlabeled_sd,p_ttest,p_wilcoxon,p_ps_model\n";
  for (const auto& row : r.rows) {
    out += row.covariate + "," + format_double(row.labeled_mean) + "," +
           format_double(row.labeled_sd) + "," + format_double(row.unlabeled_mean) + "," +
           format_double(row.unlabeled_sd) + "," + format_double(row.p_ttest) + "," +
           format_double(row.p_wilcoxon) + "," + format_double(row.p_ps) + "\n";
  }
  out += "(Intercept),NA,NA,NA,NA,NA,NA," + format_double(r.intercept_p) + "\n";
  return out;
}

nlohmann::json mcar_json(const McarReport& r) {
  nlohmann::json j;
  nlohmann::json rows = nlohmann::json::array();
  const auto num = [](double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  };
  for (const auto& row : r.rows) {
    nlohmann::json jr;
    jr["covariate"] = row.covariate;
    jr["labeled_mean"] = num(row.labeled_mean);
    jr["labeled_sd"] = num(row.labeled_sd);
    jr["unlabeled_mean"] = num(row.unlabeled_mean);
    jr["unlabeled_sd"] = num(row.unlabeled_sd);
    jr["p_ttest"] = num(row.p_ttest);
    jr["p_wilcoxon"] = num(row.p_wilcoxon);
    jr["p_ps_model"] = num(row.p_ps);
    rows.push_back(jr);
  }
  j["rows"] = rows;
  j["intercept_p"] = num(r.intercept_p);
  j["ps_converged"] = r.ps_converged;
  j["ps_separation"] = r.ps_separation;
  return j;
}

}  // namespace ease::report
