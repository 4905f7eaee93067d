#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>

#include "doctest.h"
#include "pqd/rng.hpp"
#include "pqd/svm.hpp"
#include "test_util.hpp"

using namespace pqd;

namespace {

struct BinaryProblem {
  std::vector<std::vector<double>> points;
  std::vector<int> labels;
};

BinaryProblem random_problem(std::uint64_t seed, std::size_t n, std::size_t dim) {
  Rng rng(seed);
  BinaryProblem pr;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(dim);
    int label = i % 2 == 0 ? 1 : -1;
    for (std::size_t d = 0; d < dim; ++d)
      x[d] = rng.normal(label * 1.0, 1.2);  // overlapping clusters
    pr.points.push_back(std::move(x));
    pr.labels.push_back(label);
  }
  return pr;
}

double train_error(const BinarySVM& m, const BinaryProblem& pr) {
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < pr.points.size(); ++i) {
    double f = decision_function(m, pr.points[i]);
    if ((f > 0 ? 1 : -1) != pr.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(pr.points.size());
}

}  // namespace

TEST_SUITE("svm") {

TEST_CASE("rbf kernel basics") {
  std::vector<double> x = {0.3, -1.2, 4.0, 0.0};
  CHECK(rbf_kernel(x, x, 2.5) == 1.0);
  std::vector<double> o = {0.0, 0.0, 0.0, 0.0}, e1 = {1.0, 0.0, 0.0, 0.0};
  CHECK(rbf_kernel(o, e1, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(rbf_kernel(o, e1, 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  std::vector<double> bad = {1.0, 2.0};
  CHECK_THROWS_AS(rbf_kernel(x, bad, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rbf_kernel(x, x, 0.0), std::invalid_argument);
}

TEST_CASE("two-point problem: symmetric margin") {
  std::vector<std::vector<double>> pts = {{-1.0}, {1.0}};
  std::vector<int> labels = {-1, 1};
  auto m = train_binary(pts, labels, {1000.0, 1.0});
  CHECK(m.converged);
  CHECK(m.support_vectors.size() == 2);
  CHECK(std::abs(m.bias) < 1e-3);
  CHECK(decision_function(m, {-1.0}) == doctest::Approx(-1.0).epsilon(2e-3));
  CHECK(decision_function(m, {1.0}) == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(decision_function(m, {0.0}) == doctest::Approx(0.0).epsilon(2e-3));
}

TEST_CASE("separated clusters train to zero error") {
  Rng rng(5);
  BinaryProblem pr;
  for (int i = 0; i < 30; ++i) {
    int label = i % 2 == 0 ? 1 : -1;
    pr.points.push_back({label * 5.0 + rng.normal(0.0, 0.3),
                         label * 5.0 + rng.normal(0.0, 0.3)});
    pr.labels.push_back(label);
  }
  auto m = train_binary(pr.points, pr.labels, {1000.0, 1.0});
  CHECK(m.converged);
  CHECK(train_error(m, pr) == 0.0);
}

TEST_CASE("single-class input is rejected") {
  std::vector<std::vector<double>> pts = {{0.0}, {1.0}};
  std::vector<int> labels = {1, 1};
  CHECK_THROWS_AS(train_binary(pts, labels, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("dual feasibility and KKT conditions hold after training") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto pr = random_problem(seed, 16, 3);
    SVMHyperparams hp{10.0, 0.7};
    auto m = train_binary(pr.points, pr.labels, hp);
    REQUIRE(m.converged);

    double coef_sum = 0.0;
    for (double cf : m.dual_coefs) {
      coef_sum += cf;
      CHECK(std::abs(cf) > 0.0);
      CHECK(std::abs(cf) <= hp.c * (1.0 + 1e-12));
    }
    CHECK(std::abs(coef_sum) < 1e-6);

    // alpha per training point: SVs carry |coef|, the rest are zero
    std::map<std::vector<double>, double> alpha_of;
    for (std::size_t s = 0; s < m.support_vectors.size(); ++s)
      alpha_of[m.support_vectors[s]] = std::abs(m.dual_coefs[s]);
    for (std::size_t i = 0; i < pr.points.size(); ++i) {
      double alpha = 0.0;
      auto it = alpha_of.find(pr.points[i]);
      if (it != alpha_of.end()) alpha = it->second;
      double margin = pr.labels[i] * decision_function(m, pr.points[i]);
      if (alpha < 1e-12) CHECK(margin >= 1.0 - 5e-3);
      else if (alpha < hp.c * (1.0 - 1e-9)) CHECK(margin == doctest::Approx(1.0).epsilon(5e-3));
      else CHECK(margin <= 1.0 + 5e-3);
    }
  }
}

TEST_CASE("SMO dual objective and decisions match the QP oracle") {
  Rng probe_rng(777);
  std::size_t agree = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::size_t n = 6 + (seed * 3) % 15;
    auto pr = random_problem(seed * 13 + 1, n, 3);
    SVMHyperparams hp{seed % 2 == 0 ? 100.0 : 1.0, seed % 3 == 0 ? 2.0 : 0.5};
    auto m = train_binary(pr.points, pr.labels, hp);
    auto oracle = testutil::qp_oracle(pr.points, pr.labels, hp);
    CHECK(std::abs(m.dual_objective - oracle.objective) <=
          1e-4 * std::max(1.0, std::abs(oracle.objective)));
    for (int p = 0; p < 100; ++p) {
      std::vector<double> probe = {probe_rng.normal(0.0, 2.0),
                                   probe_rng.normal(0.0, 2.0),
                                   probe_rng.normal(0.0, 2.0)};
      double a = decision_function(m, probe);
      double b = testutil::qp_decision(oracle, pr.points, pr.labels, hp, probe);
      ++total;
      if ((a > 0) == (b > 0) || std::abs(a - b) < 2e-3) ++agree;
    }
  }
  CHECK(static_cast<double>(agree) >= 0.99 * static_cast<double>(total));
}

TEST_CASE("kernel matrices are positive semi-definite") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed * 7);
    std::size_t n = 3 + seed % 8;
    std::vector<std::vector<double>> pts;
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back({rng.normal(), rng.normal(), rng.normal(), rng.normal()});
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) k[i][j] = rbf_kernel(pts[i], pts[j], 0.8);
    auto eig = testutil::jacobi_eigenvalues(k);
    for (double e : eig) CHECK(e >= -1e-8);
  }
}

TEST_CASE("larger C does not increase training error on a fixed noisy set") {
  auto pr = random_problem(99, 40, 2);
  auto loose = train_binary(pr.points, pr.labels, {0.1, 1.0});
  auto tight = train_binary(pr.points, pr.labels, {1e4, 1.0});
  CHECK(train_error(tight, pr) <= train_error(loose, pr));
}

TEST_CASE("multiclass: consistent on separable blobs, row order irrelevant") {
  auto data = testutil::make_blobs({1, 2, 3, 4, 5}, 8, 0.25, 11);
  SVMHyperparams hp{100.0, 0.5};
  auto model = train_multiclass(data, hp);
  CHECK(model.machines.size() == 10);  // 5 classes -> 10 pairs
  CHECK(model.all_converged);
  for (const auto& fv : data) CHECK(predict(model, fv) == fv.label);

  auto shuffled = data;
  Rng rng(4);
  rng.shuffle(shuffled);
  auto model2 = train_multiclass(shuffled, hp);
  for (const auto& fv : data) CHECK(predict(model2, fv) == fv.label);
}

TEST_CASE("three one-point classes each win their own point") {
  auto data = testutil::make_blobs({2, 9, 14}, 1, 1e-6, 21);
  auto model = train_multiclass(data, {50.0, 1.0});
  CHECK(model.machines.size() == 3);
  for (const auto& fv : data) CHECK(predict(model, fv) == fv.label);
}

TEST_CASE("prediction is invariant to support-vector storage order") {
  auto data = testutil::make_blobs({1, 2, 3}, 10, 0.3, 31);
  auto model = train_multiclass(data, {100.0, 0.5});
  auto reversed = model;
  for (auto& mach : reversed.machines) {
    std::reverse(mach.sv.begin(), mach.sv.end());
    std::reverse(mach.coef.begin(), mach.coef.end());
  }
  auto probes = testutil::make_blobs({1, 2, 3}, 30, 0.4, 32);
  for (const auto& p : probes) CHECK(predict(model, p) == predict(reversed, p));
}

TEST_CASE("confusion matrix arithmetic") {
  auto data = testutil::make_blobs({1, 2, 3, 4}, 6, 0.2, 41);
  auto model = train_multiclass(data, {100.0, 0.5});
  auto cm = evaluate(model, data);
  CHECK(cm.total() == 24);
  CHECK(cm.correct() == 24);
  CHECK(cm.accuracy() == 1.0);
  for (std::size_t i = 0; i < cm.classes.size(); ++i) {
    CHECK(cm.precision(i) == 1.0);
    CHECK(cm.recall(i) == 1.0);
  }

  // hand-built fixture: 600 predictions, 589 on the diagonal
  ConfusionMatrix fix;
  fix.classes = {DisturbanceClass::pure_sine, DisturbanceClass::sag};
  fix.counts = {{294, 6}, {5, 295}};
  CHECK(fix.total() == 600);
  CHECK(fix.correct() == 589);
  CHECK(fix.accuracy() == doctest::Approx(589.0 / 600.0).epsilon(1e-15));
}

TEST_CASE("model JSON round-trips machines and predictions exactly") {
  auto data = testutil::make_blobs({1, 5, 9, 13}, 6, 0.4, 51);
  auto stats = fit_normalizer(data);
  auto model = train_multiclass(apply_normalizer(stats, data), {10.0, 1.0});
  model.normalizer = stats;
  model.pipeline = PipelineMeta{};

  auto dir = testutil::tmp_dir("model");
  write_model_json(dir + "/m.json", model);
  auto loaded = read_model_json(dir + "/m.json");

  REQUIRE(loaded.machines.size() == model.machines.size());
  CHECK(loaded.sv_pool == model.sv_pool);
  for (std::size_t i = 0; i < model.machines.size(); ++i) {
    CHECK(loaded.machines[i].sv == model.machines[i].sv);
    CHECK(loaded.machines[i].coef == model.machines[i].coef);
    CHECK(loaded.machines[i].bias == model.machines[i].bias);
  }
  REQUIRE(loaded.normalizer.has_value());
  CHECK(loaded.normalizer->means == stats.means);
  REQUIRE(loaded.pipeline.has_value());
  CHECK(loaded.pipeline->grid.n_samples == model.pipeline->grid.n_samples);

  auto probes = testutil::make_blobs({1, 5, 9, 13}, 20, 0.6, 52);
  for (const auto& p : probes) {
    auto pn = apply_normalizer(stats, p);
    CHECK(predict(loaded, pn) == predict(model, pn));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("holdout accuracy equals the train-then-evaluate route") {
  auto train = testutil::make_blobs({1, 2, 3, 4, 5, 6}, 12, 1.0, 61);
  auto val = testutil::make_blobs({1, 2, 3, 4, 5, 6}, 5, 1.1, 62);
  auto geom = build_geometry(train, val);
  for (SVMHyperparams hp : {SVMHyperparams{1.0, 0.1}, SVMHyperparams{100.0, 2.0},
                            SVMHyperparams{5.0, 0.01}}) {
    double fast = holdout_accuracy(geom, hp);
    auto model = train_multiclass(train, hp);
    double slow = evaluate(model, val).accuracy();
    CHECK(fast == slow);  // bit-identical by construction
  }
}

TEST_CASE("smo handles duplicate points and all-identical columns") {
  std::vector<std::vector<double>> pts = {{1.0, 1.0}, {1.0, 1.0}, {-1.0, -1.0},
                                          {-1.0, -1.0}};
  std::vector<int> labels = {1, 1, -1, -1};
  auto m = train_binary(pts, labels, {10.0, 1.0});
  CHECK(m.converged);
  CHECK(decision_function(m, {1.0, 1.0}) > 0.0);
  CHECK(decision_function(m, {-1.0, -1.0}) < 0.0);
}

}  // TEST_SUITE
