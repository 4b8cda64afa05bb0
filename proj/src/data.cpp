#include "ease/data.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>

#include "ease/rng.hpp"

namespace ease {

void SemiSupervisedDataset::validate() const {
  if (labeled_x.rows() != labeled_y.size()) {
    throw DataError("dataset: labeled X row count does not match Y length");
  }
  if (unlabeled_x.rows() > 0 && unlabeled_x.cols() != labeled_x.cols()) {
    throw DataError("dataset: labeled and unlabeled covariate dimensions differ");
  }
  if (n() < p() + 2) {
    throw DataError("dataset: need n >= p+2 labeled rows for an estimable design");
  }
  if (!labeled_y.allFinite() || !labeled_x.allFinite() ||
      (unlabeled_x.size() > 0 && !unlabeled_x.allFinite())) {
    throw DataError("dataset: non-finite values present");
  }
}

std::vector<Eigen::Index> FoldAssignment::fold_indices(int k) const {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (membership[i] == k) idx.push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

std::vector<Eigen::Index> FoldAssignment::complement_indices(int k) const {
  std::vector<Eigen::Index> idx;
  if (k_folds == 1) {
    // K=1 convention: the complement is the whole set
    idx.resize(membership.size());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
  }
  for (std::size_t i = 0; i < membership.size(); ++i) {
    if (membership[i] != k) idx.push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN";
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(cell, &pos);
  } catch (const std::exception&) {
    throw DataError("parse error at row " + std::to_string(row) + ", column '" + col +
                    "': '" + cell + "' is not numeric");
  }
  if (pos != cell.size()) {
    throw DataError("parse error at row " + std::to_string(row) + ", column '" + col +
                    "': trailing characters in '" + cell + "'");
  }
  return v;
}

struct ParsedTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;      // covariates
  std::vector<double> outcomes;               // NaN = missing
  Eigen::Index outcome_idx = -1;              // -1 when absent
  std::string outcome_name;
};

ParsedTable parse_table(std::istream& in, const std::string& outcome_column,
                        bool outcome_required, bool default_to_first) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty input: missing header row");
  ParsedTable t;
  const auto header = split_csv_line(line);
  std::vector<std::string> names;
  for (const auto& h : header) names.push_back(trim(h));

  std::string outcome_name = outcome_column;
  if (outcome_name.empty() && default_to_first) {
    outcome_name = names.empty() ? "" : names.front();
  }
  t.outcome_name = outcome_name;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!outcome_name.empty() && names[j] == outcome_name) {
      t.outcome_idx = static_cast<Eigen::Index>(j);
      break;
    }
  }
  if (outcome_required && t.outcome_idx < 0) {
    throw DataError("outcome column '" + outcome_name + "' not found in header");
  }
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (static_cast<Eigen::Index>(j) != t.outcome_idx) t.names.push_back(names[j]);
  }

  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != names.size()) {
      throw DataError("row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) +
                      " cells, expected " + std::to_string(names.size()));
    }
    std::vector<double> covs;
    covs.reserve(t.names.size());
    double y = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const std::string cell = trim(cells[j]);
      if (static_cast<Eigen::Index>(j) == t.outcome_idx) {
        if (!is_missing(cell)) y = parse_number(cell, row_no, names[j]);
      } else {
        if (is_missing(cell)) {
          throw DataError("row " + std::to_string(row_no) + ", column '" + names[j] +
                          "': covariate missingness is not supported");
        }
        covs.push_back(parse_number(cell, row_no, names[j]));
      }
    }
    t.rows.push_back(std::move(covs));
    t.outcomes.push_back(y);
  }
  return t;
}

void apply_log1p(MatrixXd& x, const std::vector<std::string>& names,
                 const std::vector<std::string>& cols) {
  for (const auto& c : cols) {
    auto it = std::find(names.begin(), names.end(), c);
    if (it == names.end()) throw ConfigError("log1p column '" + c + "' not found");
    const Eigen::Index j = static_cast<Eigen::Index>(it - names.begin());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      if (x(i, j) <= -1.0) {
        throw DataError("log1p transform undefined for value " + std::to_string(x(i, j)) +
                        " in column '" + c + "'");
      }
      x(i, j) = std::log1p(x(i, j));
    }
  }
}

}  // namespace

SemiSupervisedDataset load_dataset(std::istream& in, const DatasetSchema& schema) {
  ParsedTable t = parse_table(in, schema.outcome_column, /*outcome_required=*/true,
                              /*default_to_first=*/true);
  const Eigen::Index p = static_cast<Eigen::Index>(t.names.size());
  std::vector<std::size_t> lab, unlab;
  for (std::size_t i = 0; i < t.outcomes.size(); ++i) {
    (std::isnan(t.outcomes[i]) ? unlab : lab).push_back(i);
  }
  if (lab.empty()) throw DataError("no labeled rows: every outcome cell is empty");

  SemiSupervisedDataset ds;
  ds.covariate_names = t.names;
  ds.outcome_name = t.outcome_name;
  ds.labeled_y.resize(static_cast<Eigen::Index>(lab.size()));
  ds.labeled_x.resize(static_cast<Eigen::Index>(lab.size()), p);
  for (std::size_t i = 0; i < lab.size(); ++i) {
    ds.labeled_y(static_cast<Eigen::Index>(i)) = t.outcomes[lab[i]];
    for (Eigen::Index j = 0; j < p; ++j) {
      ds.labeled_x(static_cast<Eigen::Index>(i), j) = t.rows[lab[i]][static_cast<std::size_t>(j)];
    }
  }
  ds.unlabeled_x.resize(static_cast<Eigen::Index>(unlab.size()), p);
  for (std::size_t i = 0; i < unlab.size(); ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      ds.unlabeled_x(static_cast<Eigen::Index>(i), j) = t.rows[unlab[i]][static_cast<std::size_t>(j)];
    }
  }
  apply_log1p(ds.labeled_x, ds.covariate_names, schema.log1p_columns);
  apply_log1p(ds.unlabeled_x, ds.covariate_names, schema.log1p_columns);
  return ds;
}

void append_unlabeled(SemiSupervisedDataset& ds, std::istream& in, const DatasetSchema& schema) {
  std::string outcome = schema.outcome_column.empty() ? ds.outcome_name : schema.outcome_column;
  ParsedTable t = parse_table(in, outcome, /*outcome_required=*/false,
                              /*default_to_first=*/false);
  if (t.names != ds.covariate_names) {
    throw DataError("unlabeled file covariate names do not match the labeled file");
  }
  for (std::size_t i = 0; i < t.outcomes.size(); ++i) {
    if (!std::isnan(t.outcomes[i])) {
      throw DataError("unlabeled file contains a non-empty outcome at data row " +
                      std::to_string(i + 1));
    }
  }
  MatrixXd extra(static_cast<Eigen::Index>(t.rows.size()), ds.p());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.p(); ++j) {
      extra(static_cast<Eigen::Index>(i), j) = t.rows[i][static_cast<std::size_t>(j)];
    }
  }
  apply_log1p(extra, ds.covariate_names, schema.log1p_columns);
  MatrixXd merged(ds.unlabeled_x.rows() + extra.rows(), ds.p());
  merged.topRows(ds.unlabeled_x.rows()) = ds.unlabeled_x;
  merged.bottomRows(extra.rows()) = extra;
  ds.unlabeled_x = std::move(merged);
}

FoldAssignment partition_folds(Eigen::Index n, int k_folds, std::uint64_t seed) {
  if (k_folds < 1) throw ConfigError("partition_folds: K must be >= 1");
  if (static_cast<Eigen::Index>(k_folds) > n) {
    throw ConfigError("partition_folds: infeasible partition, K=" + std::to_string(k_folds) +
                      " exceeds n=" + std::to_string(n));
  }
  FoldAssignment fa;
  fa.k_folds = k_folds;
  fa.seed = seed;
  fa.membership.assign(static_cast<std::size_t>(n), 1);
  if (k_folds == 1) return fa;

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(i + 1)));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  // remainder goes to the lowest-numbered folds
  const Eigen::Index base = n / k_folds;
  const Eigen::Index rem = n % k_folds;
  Eigen::Index pos = 0;
  for (int k = 1; k <= k_folds; ++k) {
    const Eigen::Index size_k = base + (k <= rem ? 1 : 0);
    for (Eigen::Index t = 0; t < size_k; ++t) {
      fa.membership[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = k;
    }
  }
  return fa;
}

std::pair<SemiSupervisedDataset, StandardizationParams>
standardize(const SemiSupervisedDataset& ds, StandardizeScope scope) {
  const Eigen::Index p = ds.p();
  MatrixXd ref;
  if (scope == StandardizeScope::kLabeledOnly || ds.big_n() == 0) {
    ref = ds.labeled_x;
  } else {
    ref.resize(ds.n() + ds.big_n(), p);
    ref.topRows(ds.n()) = ds.labeled_x;
    ref.bottomRows(ds.big_n()) = ds.unlabeled_x;
  }
  StandardizationParams params;
  params.means.resize(p);
  params.scales.resize(p);
  const double denom = static_cast<double>(ref.rows() - 1);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mu = ref.col(j).mean();
    const double var = (ref.col(j).array() - mu).square().sum() / denom;
    if (!(var > 0.0)) {
      const std::string name = ds.covariate_names.empty()
                                   ? "x" + std::to_string(j + 1)
                                   : ds.covariate_names[static_cast<std::size_t>(j)];
      throw DataError("degenerate column '" + name + "': zero variance in scope");
    }
    params.means(j) = mu;
    params.scales(j) = std::sqrt(var);
  }
  SemiSupervisedDataset out = ds;
  for (Eigen::Index j = 0; j < p; ++j) {
    out.labeled_x.col(j) = (ds.labeled_x.col(j).array() - params.means(j)) / params.scales(j);
    if (ds.big_n() > 0) {
      out.unlabeled_x.col(j) = (ds.unlabeled_x.col(j).array() - params.means(j)) / params.scales(j);
    }
  }
  return {std::move(out), std::move(params)};
}

SemiSupervisedDataset unstandardize(const SemiSupervisedDataset& ds,
                                    const StandardizationParams& params) {
  SemiSupervisedDataset out = ds;
  for (Eigen::Index j = 0; j < ds.p(); ++j) {
    out.labeled_x.col(j) = ds.labeled_x.col(j).array() * params.scales(j) + params.means(j);
    if (ds.big_n() > 0) {
      out.unlabeled_x.col(j) = ds.unlabeled_x.col(j).array() * params.scales(j) + params.means(j);
    }
  }
  return out;
}

MatrixXd select_rows(const MatrixXd& m, const std::vector<Eigen::Index>& idx) {
  MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  }
  return out;
}

VectorXd select_rows(const VectorXd& v, const std::vector<Eigen::Index>& idx) {
  VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = v(idx[i]);
  }
  return out;
}

}  // namespace ease
