#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pqd/features.hpp"
#include "pqd/signal.hpp"

namespace pqd {

struct SVMHyperparams {
  double c = 1.0;
  double gamma = 1.0;
};

constexpr double kSmoTolerance = 1e-3;
constexpr long kSmoMaxIterations = 100000;

// exp(-gamma * ||x - y||^2); throws on dimension mismatch or gamma <= 0.
double rbf_kernel(const std::vector<double>& x, const std::vector<double>& y,
                  double gamma);

struct BinarySVM {
  std::vector<std::vector<double>> support_vectors;
  std::vector<double> dual_coefs;  // alpha_i * o_i
  double bias = 0.0;
  SVMHyperparams hp;
  bool converged = true;
  long iterations = 0;
  double dual_objective = 0.0;
};

// Soft-margin dual via sequential minimal optimization with max-violating-pair
// working-set selection. Tie-breaks are by index, so the seed only labels the
// run; no random draws are consumed.
BinarySVM train_binary(const std::vector<std::vector<double>>& points,
                       const std::vector<int>& labels, SVMHyperparams hp,
                       std::uint64_t seed = 0);

double decision_function(const BinarySVM& m, const std::vector<double>& x);

struct PairMachine {
  int class_a = 0;  // lower id, mapped to +1
  int class_b = 0;  // higher id, mapped to -1
  std::vector<std::uint32_t> sv;  // indices into SVMModel::sv_pool
  std::vector<double> coef;
  double bias = 0.0;
  bool converged = true;
};

// Transform settings a model was trained under, persisted with the model so
// external waveforms can be pushed through the identical pipeline.
struct PipelineMeta {
  SamplingGrid grid;
  WindowCoefficients window;
  FreqMode freq_mode = FreqMode::normalized;
  ContourMode contour_mode = ContourMode::dominant_frequency;
};

struct SVMModel {
  SVMHyperparams hp;
  std::vector<DisturbanceClass> classes;
  std::vector<std::array<double, 4>> sv_pool;
  std::vector<PairMachine> machines;
  std::optional<NormalizationStats> normalizer;
  std::optional<PipelineMeta> pipeline;
  bool all_converged = true;
};

// One-vs-one over all class pairs present in the data. Expects normalized
// features. The seed labels the run; training itself is deterministic.
SVMModel train_multiclass(const std::vector<FeatureVector>& data, SVMHyperparams hp,
                          std::uint64_t seed = 0, int n_threads = 1);

// Majority vote; ties broken by the largest summed |decision| among the tied
// classes, then by the lowest class id.
DisturbanceClass predict(const SVMModel& model, const FeatureVector& fv);

struct ConfusionMatrix {
  std::vector<DisturbanceClass> classes;
  std::vector<std::vector<long>> counts;  // [true][predicted]

  long total() const;
  long correct() const;
  double accuracy() const;
  double precision(std::size_t class_index) const;
  double recall(std::size_t class_index) const;
  std::string to_text() const;
};

ConfusionMatrix evaluate(const SVMModel& model, const std::vector<FeatureVector>& test,
                         int n_threads = 1);

std::string model_to_json(const SVMModel& model);
SVMModel model_from_json(const std::string& text);
void write_model_json(const std::string& path, const SVMModel& model);
SVMModel read_model_json(const std::string& path);

// Precomputed squared distances for repeated trainings of the same split at
// different hyperparameters (the tuner's inner loop).
struct PairwiseGeometry {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::vector<std::array<double, 4>> train_pts;
  std::vector<DisturbanceClass> train_labels;
  std::vector<std::array<double, 4>> val_pts;
  std::vector<DisturbanceClass> val_labels;
  std::vector<double> d2_train;  // n_train x n_train
  std::vector<double> d2_val;    // n_val x n_train
};

PairwiseGeometry build_geometry(const std::vector<FeatureVector>& train,
                                const std::vector<FeatureVector>& val);

// Trains one-vs-one machines on the cached geometry and scores the validation
// points. Produces the same labels as train_multiclass + predict.
double holdout_accuracy(const PairwiseGeometry& geom, const SVMHyperparams& hp,
                        int n_threads = 1);

namespace detail {

struct SmoSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  bool converged = true;
  long iterations = 0;
  double objective = 0.0;  // maximized dual value
};

// K is the dense row-major kernel matrix of the subproblem; y in {-1, +1}.
SmoSolution smo_solve(const std::vector<double>& kernel, std::size_t n,
                      const std::vector<int>& y, double c,
                      double tol = kSmoTolerance, long max_iter = kSmoMaxIterations);

}  // namespace detail

}  // namespace pqd
