#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ease/data.hpp"
#include "ease/rng.hpp"

using namespace ease;

TEST_SUITE("data_model") {
  TEST_CASE("presence of the outcome splits labeled from unlabeled") {
    std::istringstream in("y,x1,x2\n1.0,0.1,0.2\n,0.3,0.4\n2.0,0.5,0.6\n");
    const auto ds = load_dataset(in, {});
    CHECK(ds.n() == 2);
    CHECK(ds.big_n() == 1);
    CHECK(ds.p() == 2);
    CHECK(ds.labeled_y(0) == 1.0);
    CHECK(ds.labeled_y(1) == 2.0);
    CHECK(ds.unlabeled_x(0, 0) == 0.3);
  }

  TEST_CASE("header-only input is an empty-labeled error") {
    std::istringstream in("y,x1\n");
    CHECK_THROWS_AS(load_dataset(in, {}), DataError);
  }

  TEST_CASE("non-numeric covariate names row and column") {
    std::istringstream in("y,x1\n1.0,abc\n");
    try {
      load_dataset(in, {});
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("x1") != std::string::npos);
    }
  }

  TEST_CASE("covariate missingness is rejected") {
    std::istringstream in("y,x1\n1.0,\n");
    CHECK_THROWS_AS(load_dataset(in, {}), DataError);
  }

  TEST_CASE("outcome column can be chosen by name") {
    std::istringstream in("a,score,b\n0.1,3.5,0.2\n0.3,,0.4\n");
    DatasetSchema schema;
    schema.outcome_column = "score";
    const auto ds = load_dataset(in, schema);
    CHECK(ds.n() == 1);
    CHECK(ds.big_n() == 1);
    CHECK(ds.covariate_names == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("emr-scale shape: 355 labeled, 3499 unlabeled, 24 covariates") {
    std::ostringstream csv;
    csv << "y";
    for (int j = 1; j <= 24; ++j) csv << ",x" << j;
    csv << "\n";
    Rng rng(13);
    for (int i = 0; i < 3854; ++i) {
      if (i < 355) {
        csv << rng.normal();
      }
      for (int j = 0; j < 24; ++j) csv << "," << rng.normal();
      csv << "\n";
    }
    std::istringstream in(csv.str());
    const auto ds = load_dataset(in, {});
    CHECK(ds.n() == 355);
    CHECK(ds.big_n() == 3499);
    CHECK(ds.p() == 24);
  }

  TEST_CASE("append_unlabeled merges covariate-only rows") {
    std::istringstream lab("y,x1\n1.0,0.5\n2.0,0.7\n3.0,0.1\n");
    auto ds = load_dataset(lab, {});
    std::istringstream unl("x1\n0.9\n0.8\n");
    append_unlabeled(ds, unl, {});
    CHECK(ds.big_n() == 2);
    CHECK(ds.unlabeled_x(1, 0) == 0.8);

    std::istringstream bad("z1\n0.9\n");
    CHECK_THROWS_AS(append_unlabeled(ds, bad, {}), DataError);
  }

  TEST_CASE("fold sizes differ by at most one") {
    const auto even = partition_folds(10, 5, 1);
    for (int k = 1; k <= 5; ++k) CHECK(even.fold_indices(k).size() == 2);

    const auto uneven = partition_folds(11, 5, 1);
    std::vector<std::size_t> sizes;
    for (int k = 1; k <= 5; ++k) sizes.push_back(uneven.fold_indices(k).size());
    std::sort(sizes.begin(), sizes.end());
    CHECK(sizes == std::vector<std::size_t>{2, 2, 2, 2, 3});
    // the remainder lands on fold 1
    CHECK(uneven.fold_indices(1).size() == 3);
  }

  TEST_CASE("K=1 maps everything to fold one") {
    const auto fa = partition_folds(500, 1, 9);
    CHECK(fa.fold_indices(1).size() == 500);
    CHECK(fa.complement_indices(1).size() == 500);  // K=1 convention
  }

  TEST_CASE("fold membership is a bijection onto the index range") {
    const auto fa = partition_folds(101, 7, 3);
    std::vector<Eigen::Index> all;
    for (int k = 1; k <= 7; ++k) {
      const auto idx = fa.fold_indices(k);
      all.insert(all.end(), idx.begin(), idx.end());
    }
    std::sort(all.begin(), all.end());
    for (Eigen::Index i = 0; i < 101; ++i) CHECK(all[static_cast<std::size_t>(i)] == i);
  }

  TEST_CASE("partitions are seed-deterministic and seed-sensitive") {
    CHECK(partition_folds(500, 5, 42).membership == partition_folds(500, 5, 42).membership);
    int differing_pairs = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      if (partition_folds(500, 5, s).membership != partition_folds(500, 5, s + 1000).membership) {
        ++differing_pairs;
      }
    }
    CHECK(differing_pairs >= 1);
  }

  TEST_CASE("infeasible partition throws") {
    CHECK_THROWS_AS(partition_folds(3, 4, 1), ConfigError);
    CHECK_THROWS_AS(partition_folds(3, 0, 1), ConfigError);
  }

  TEST_CASE("standardize centers and scales, and inverts exactly") {
    SemiSupervisedDataset ds;
    ds.labeled_x.resize(3, 1);
    ds.labeled_x << 1.0, 2.0, 3.0;
    ds.labeled_y.resize(3);
    ds.labeled_y << 1.0, 2.0, 3.0;
    ds.unlabeled_x.resize(0, 1);
    const auto [std_ds, params] = standardize(ds, StandardizeScope::kLabeledOnly);
    CHECK(std_ds.labeled_x.col(0).mean() == doctest::Approx(0.0));
    const double sd = std::sqrt(std_ds.labeled_x.col(0).squaredNorm() / 2.0);
    CHECK(sd == doctest::Approx(1.0));
    CHECK(params.means(0) == doctest::Approx(2.0));
    CHECK(params.scales(0) == doctest::Approx(1.0));

    const auto back = unstandardize(std_ds, params);
    CHECK((back.labeled_x - ds.labeled_x).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("pooled standardization round-trips both sides") {
    Rng rng(5);
    SemiSupervisedDataset ds;
    ds.labeled_x.resize(20, 3);
    ds.unlabeled_x.resize(50, 3);
    ds.labeled_y.resize(20);
    for (Eigen::Index i = 0; i < 20; ++i) {
      ds.labeled_y(i) = rng.normal();
      for (int j = 0; j < 3; ++j) ds.labeled_x(i, j) = 2.0 + 3.0 * rng.normal();
    }
    for (Eigen::Index i = 0; i < 50; ++i) {
      for (int j = 0; j < 3; ++j) ds.unlabeled_x(i, j) = 2.0 + 3.0 * rng.normal();
    }
    const auto [std_ds, params] = standardize(ds, StandardizeScope::kPooled);
    MatrixXd pooled(70, 3);
    pooled << std_ds.labeled_x, std_ds.unlabeled_x;
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(pooled.col(j).mean()) < 1e-12);
      CHECK(pooled.col(j).squaredNorm() / 69.0 == doctest::Approx(1.0).epsilon(1e-12));
    }
    const auto back = unstandardize(std_ds, params);
    CHECK((back.labeled_x - ds.labeled_x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.unlabeled_x - ds.unlabeled_x).cwiseAbs().maxCoeff() < 1e-12);
  }

  TEST_CASE("constant columns are rejected by name") {
    SemiSupervisedDataset ds;
    ds.labeled_x.resize(3, 2);
    ds.labeled_x << 5.0, 1.0, 5.0, 2.0, 5.0, 3.0;
    ds.labeled_y.resize(3);
    ds.labeled_y << 1.0, 2.0, 3.0;
    ds.unlabeled_x.resize(0, 2);
    ds.covariate_names = {"flat", "ok"};
    try {
      standardize(ds, StandardizeScope::kLabeledOnly);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("flat") != std::string::npos);
    }
  }

  TEST_CASE("dataset validation") {
    SemiSupervisedDataset ds;
    ds.labeled_x.resize(3, 2);
    ds.labeled_x.setZero();
    ds.labeled_y.resize(3);
    ds.labeled_y.setZero();
    ds.unlabeled_x.resize(0, 2);
    CHECK_THROWS_AS(ds.validate(), DataError);  // n < p + 2
  }
}
