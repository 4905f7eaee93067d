#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pqd/features.hpp"
#include "pqd/optimize.hpp"
#include "pqd/signal.hpp"
#include "pqd/stransform.hpp"
#include "pqd/svm.hpp"

namespace pqd {

struct SplitResult {
  std::vector<FeatureVector> train;
  std::vector<FeatureVector> val;
  std::vector<FeatureVector> test;
};

// Stratified split with exact integer per-class counts. Requires equal
// per-class totals and ratios that divide them exactly.
SplitResult split_dataset(const std::vector<FeatureVector>& features,
                          const std::array<double, 3>& ratios, std::uint64_t seed);

struct KFoldResult {
  std::vector<double> fold_accuracies;
  double mean_accuracy = 0.0;
};

// Stratified k-fold over raw (unnormalized) features; each fold fits its own
// normalizer on the k-1 training folds.
KFoldResult kfold_validate(const std::vector<FeatureVector>& features, int k,
                           SVMHyperparams hp, std::uint64_t seed, int n_threads = 1);

struct ExperimentConfig {
  SamplingGrid grid;
  std::size_t n_per_class = 100;
  std::vector<std::optional<double>> snr_conditions = {std::nullopt, 30.0};
  std::array<double, 3> split_ratios = {0.7, 0.1, 0.2};
  int k_folds = 7;
  std::vector<std::string> algorithms = {"manual", "ga", "pso", "woa"};
  std::uint64_t seed = 1;
  WindowCoefficients window;
  FreqMode freq_mode = FreqMode::normalized;
  ContourMode contour_mode = ContourMode::dominant_frequency;
  int n_agents = 10;
  int max_iters = 100;
  int grid_per_dim = 10;
  int n_threads = 1;
  std::string out_dir = "out";

  void validate() const;
};

std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
void write_config_json(const std::string& path, const ExperimentConfig& cfg);
ExperimentConfig read_config_json(const std::string& path);

struct AlgoReport {
  std::string name;
  SVMHyperparams best_hp;
  std::vector<double> best_position;
  double val_accuracy = 0.0;
  long evaluations = 0;
  long non_finite_evals = 0;
  std::vector<double> convergence;
  ConfusionMatrix confusion;
  double test_accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
};

struct ConditionReport {
  std::string label;  // "clean" or "snr_<dB>"
  std::optional<double> snr_db;
  int n_train_per_class = 0;
  int n_val_per_class = 0;
  int n_test_per_class = 0;
  std::vector<AlgoReport> algos;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<ConditionReport> conditions;
};

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

// Full pipeline per noise condition: generate, transform, extract, split,
// normalize, tune each algorithm, train, evaluate on the held-out test set.
// Persists every artifact under config.out_dir and renders the report.
ExperimentReport run_experiment(const ExperimentConfig& config);

// Writes report.json, report.txt, and per-run confusion/convergence CSVs.
void report_render(const ExperimentReport& report, const std::string& out_dir);

struct ClassifyResult {
  DisturbanceClass predicted = DisturbanceClass::pure_sine;
  FeatureVector features_raw;
  FeatureVector features_normalized;
  std::vector<double> resampled;  // samples on the model's grid
  std::vector<double> magnitude_contour;
  std::vector<double> frequency_contour;
};

// Ingests a waveform CSV of (time,value) rows or a single raw sample column
// with a declared rate; resamples onto the model's grid, transforms with the
// model's stored pipeline, and predicts.
ClassifyResult classify_external(const std::string& csv_path, const SVMModel& model,
                                 std::optional<double> declared_rate_hz);

}  // namespace pqd
