#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pqd/features.hpp"
#include "pqd/svm.hpp"

namespace pqd {

enum class OptAlgorithm { woa, pso, ga };

std::string algorithm_name(OptAlgorithm a);
OptAlgorithm algorithm_from_name(const std::string& s);

enum class ScaleMode { linear, log10 };

// Box search domain in original units. Log-scaled dimensions are optimized as
// log10(value) internally and decoded back by exponentiation.
struct SearchSpace {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<ScaleMode> scale;

  std::size_t dims() const { return lower.size(); }
  void validate() const;
  double internal_lower(std::size_t d) const;
  double internal_upper(std::size_t d) const;
  std::vector<double> decode(const std::vector<double>& position) const;
  std::vector<double> encode(const std::vector<double>& values) const;

  // (c, gamma) box from the tuning bounds 0.01..200000.
  static SearchSpace hyperparam_box(bool log_scaled = true);
};

constexpr double kHyperparamLow = 0.01;
constexpr double kHyperparamHigh = 200000.0;

struct OptimizerConfig {
  OptAlgorithm algorithm = OptAlgorithm::woa;
  int n_agents = 10;
  int max_iters = 100;
  std::uint64_t seed = 1;
  int n_threads = 1;
  // WOA
  double woa_spiral_b = 1.0;
  // PSO
  double pso_inertia = 0.729;
  double pso_c1 = 1.49445;
  double pso_c2 = 1.49445;
  double pso_vmax_frac = 0.20;
  // GA
  double ga_crossover_rate = 0.9;
  double ga_mutation_rate = 0.1;
  double ga_mutation_sigma_frac = 0.05;

  void validate() const;
};

struct OptimizerRun {
  std::string algorithm;
  std::vector<double> best_position;  // internal (possibly log10) coordinates
  std::vector<double> best_decoded;   // original units
  double best_fitness = 0.0;
  std::vector<double> convergence;    // best-so-far per iteration, length max_iters
  long evaluations = 0;               // distinct fitness computations
  long non_finite_evals = 0;
  std::vector<double> woa_a_log;      // WOA only: a value per iteration
};

// Fitness receives the decoded position and is maximized. Non-finite values
// and thrown exceptions count as -inf and are tallied in non_finite_evals.
using FitnessFn = std::function<double(const std::vector<double>&)>;

OptimizerRun woa_optimize(const FitnessFn& fitness, const SearchSpace& space,
                          const OptimizerConfig& config);
OptimizerRun pso_optimize(const FitnessFn& fitness, const SearchSpace& space,
                          const OptimizerConfig& config);
OptimizerRun ga_optimize(const FitnessFn& fitness, const SearchSpace& space,
                         const OptimizerConfig& config);
OptimizerRun run_optimizer(const FitnessFn& fitness, const SearchSpace& space,
                           const OptimizerConfig& config);

// Fitness = holdout accuracy of an SVM trained on `train`, scored on `val`.
std::pair<SVMHyperparams, OptimizerRun> tune_svm(
    const std::vector<FeatureVector>& train, const std::vector<FeatureVector>& val,
    const OptimizerConfig& config,
    const SearchSpace& space = SearchSpace::hyperparam_box());

// Log-spaced per_dim x per_dim sweep over the same box; the returned run's
// convergence is the best-so-far across the scan order.
std::pair<SVMHyperparams, OptimizerRun> manual_grid_search(
    const std::vector<FeatureVector>& train, const std::vector<FeatureVector>& val,
    int per_dim = 10, int n_threads = 1,
    const SearchSpace& space = SearchSpace::hyperparam_box());

void write_convergence_csv(const std::string& path, const OptimizerRun& run);
std::string run_meta_to_json(const OptimizerRun& run, const OptimizerConfig& config,
                             double wall_time_s);

}  // namespace pqd
