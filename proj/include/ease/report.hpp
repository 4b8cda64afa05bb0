#pragma once

#include <string>

#include <json.hpp>

#include "ease/common.hpp"
#include "ease/dimred.hpp"
#include "ease/diagnostics.hpp"
#include "ease/simulation.hpp"

namespace ease::report {

// CSV cells use %.10g; NaN renders as NA. Formats are frozen: tests and
// downstream tooling parse them.
std::string format_double(double v);

// alpha0, beta01, beta02, ... (two-digit zero padding)
std::string param_label(Eigen::Index coord);

nlohmann::json json_vector(const VectorXd& v);
nlohmann::json json_matrix(const MatrixXd& m);

// audit serialization of a projection basis (matrix + metadata)
nlohmann::json projection_json(const ProjectionBasis& basis);

// "estimator,reps_used,failures,mse,re" - one row per estimator
std::string mc_re_csv(const McSummary& s);

// "estimator,parameter,theta0,bias,ese,ase,covp" - one row per estimator x coordinate
std::string mc_coord_csv(const McSummary& s);

nlohmann::json mc_json(const McSummary& s);

// Table-style MCAR battery: means/sds per group plus three p-value columns,
// with a trailing (Intercept) row for the propensity model.
std::string mcar_csv(const McarReport& r);

nlohmann::json mcar_json(const McarReport& r);

}  // namespace ease::report
