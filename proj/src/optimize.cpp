#include "pqd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "pqd/csv.hpp"
#include "pqd/parallel.hpp"
#include "pqd/rng.hpp"

namespace pqd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Memoizing evaluator. Keys quantize internal coordinates to 6 significant
// digits so revisited candidates are not retrained; `evaluations` counts only
// distinct computations, which keeps the tally independent of thread count.
class FitnessCache {
public:
  FitnessCache(const FitnessFn& fn, const SearchSpace& space)
      : fn_(fn), space_(space) {}

  std::vector<double> eval_batch(const std::vector<std::vector<double>>& positions,
                                 int n_threads) {
    std::vector<std::string> keys(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) keys[i] = key(positions[i]);

    std::vector<std::size_t> fresh;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      if (cache_.count(keys[i])) continue;
      bool seen = false;
      for (std::size_t f : fresh)
        if (keys[f] == keys[i]) {
          seen = true;
          break;
        }
      if (!seen) fresh.push_back(i);
    }

    std::vector<double> fresh_vals(fresh.size());
    std::vector<char> fresh_bad(fresh.size(), 0);
    parallel_for(fresh.size(), n_threads, [&](std::size_t f) {
      double v;
      try {
        v = fn_(space_.decode(positions[fresh[f]]));
      } catch (const std::exception&) {
        v = kNegInf;
      }
      if (!std::isfinite(v)) {
        v = kNegInf;
        fresh_bad[f] = 1;
      }
      fresh_vals[f] = v;
    });
    for (std::size_t f = 0; f < fresh.size(); ++f) {
      cache_[keys[fresh[f]]] = fresh_vals[f];
      ++evaluations_;
      if (fresh_bad[f]) ++non_finite_;
    }

    std::vector<double> out(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) out[i] = cache_.at(keys[i]);
    return out;
  }

  long evaluations() const { return evaluations_; }
  long non_finite() const { return non_finite_; }

private:
  std::string key(const std::vector<double>& pos) const {
    std::string k;
    char buf[32];
    for (double v : pos) {
      std::snprintf(buf, sizeof(buf), "%.5e,", v);
      k += buf;
    }
    return k;
  }

  const FitnessFn& fn_;
  const SearchSpace& space_;
  std::unordered_map<std::string, double> cache_;
  long evaluations_ = 0;
  long non_finite_ = 0;
};

std::vector<std::vector<double>> init_population(const SearchSpace& space,
                                                 const OptimizerConfig& cfg) {
  std::vector<std::vector<double>> pop(static_cast<std::size_t>(cfg.n_agents));
  for (std::size_t a = 0; a < pop.size(); ++a) {
    Rng rng(mix_seed(cfg.seed, 0, a));
    pop[a].resize(space.dims());
    for (std::size_t d = 0; d < space.dims(); ++d)
      pop[a][d] = rng.uniform(space.internal_lower(d), space.internal_upper(d));
  }
  return pop;
}

void finish_run(OptimizerRun& run, const SearchSpace& space, const FitnessCache& cache,
                OptAlgorithm algo) {
  run.algorithm = algorithm_name(algo);
  run.best_decoded = space.decode(run.best_position);
  run.evaluations = cache.evaluations();
  run.non_finite_evals = cache.non_finite();
}

}  // namespace

std::string algorithm_name(OptAlgorithm a) {
  switch (a) {
    case OptAlgorithm::woa: return "woa";
    case OptAlgorithm::pso: return "pso";
    case OptAlgorithm::ga: return "ga";
  }
  throw std::invalid_argument("optimize: unknown algorithm");
}

OptAlgorithm algorithm_from_name(const std::string& s) {
  if (s == "woa") return OptAlgorithm::woa;
  if (s == "pso") return OptAlgorithm::pso;
  if (s == "ga") return OptAlgorithm::ga;
  throw std::invalid_argument("optimize: unknown algorithm '" + s + "'");
}

void SearchSpace::validate() const {
  if (lower.empty() || lower.size() != upper.size() || lower.size() != scale.size())
    throw std::invalid_argument("optimize: malformed search space");
  for (std::size_t d = 0; d < lower.size(); ++d) {
    if (!(lower[d] < upper[d]))
      throw std::invalid_argument("optimize: lower bound must be below upper");
    if (scale[d] == ScaleMode::log10 && !(lower[d] > 0.0))
      throw std::invalid_argument("optimize: log-scaled dimension needs lower > 0");
  }
}

double SearchSpace::internal_lower(std::size_t d) const {
  return scale[d] == ScaleMode::log10 ? std::log10(lower[d]) : lower[d];
}

double SearchSpace::internal_upper(std::size_t d) const {
  return scale[d] == ScaleMode::log10 ? std::log10(upper[d]) : upper[d];
}

std::vector<double> SearchSpace::decode(const std::vector<double>& position) const {
  if (position.size() != dims())
    throw std::invalid_argument("optimize: position dimension mismatch");
  std::vector<double> out(position.size());
  for (std::size_t d = 0; d < position.size(); ++d)
    out[d] = scale[d] == ScaleMode::log10 ? std::pow(10.0, position[d]) : position[d];
  return out;
}

std::vector<double> SearchSpace::encode(const std::vector<double>& values) const {
  if (values.size() != dims())
    throw std::invalid_argument("optimize: value dimension mismatch");
  std::vector<double> out(values.size());
  for (std::size_t d = 0; d < values.size(); ++d)
    out[d] = scale[d] == ScaleMode::log10 ? std::log10(values[d]) : values[d];
  return out;
}

SearchSpace SearchSpace::hyperparam_box(bool log_scaled) {
  SearchSpace s;
  s.lower = {kHyperparamLow, kHyperparamLow};
  s.upper = {kHyperparamHigh, kHyperparamHigh};
  ScaleMode m = log_scaled ? ScaleMode::log10 : ScaleMode::linear;
  s.scale = {m, m};
  return s;
}

void OptimizerConfig::validate() const {
  if (n_agents < 2) throw std::invalid_argument("optimize: need at least 2 agents");
  if (max_iters < 1) throw std::invalid_argument("optimize: need at least 1 iteration");
  if (!(woa_spiral_b > 0.0)) throw std::invalid_argument("optimize: spiral b must be > 0");
  auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in01(ga_crossover_rate) || !in01(ga_mutation_rate))
    throw std::invalid_argument("optimize: ga rates must lie in [0, 1]");
  if (!(pso_vmax_frac > 0.0) || !(ga_mutation_sigma_frac >= 0.0))
    throw std::invalid_argument("optimize: malformed velocity or mutation scale");
}

OptimizerRun woa_optimize(const FitnessFn& fitness, const SearchSpace& space,
                          const OptimizerConfig& cfg) {
  space.validate();
  cfg.validate();
  FitnessCache cache(fitness, space);
  std::size_t n = static_cast<std::size_t>(cfg.n_agents);
  std::size_t dims = space.dims();

  std::vector<std::vector<double>> pos = init_population(space, cfg);
  std::vector<double> fit = cache.eval_batch(pos, cfg.n_threads);

  OptimizerRun run;
  run.best_position = pos[0];
  run.best_fitness = fit[0];
  for (std::size_t a = 1; a < n; ++a) {
    if (fit[a] > run.best_fitness) {
      run.best_fitness = fit[a];
      run.best_position = pos[a];
    }
  }

  double t_max = static_cast<double>(cfg.max_iters);
  for (int t = 0; t < cfg.max_iters; ++t) {
    double a_val = 2.0 * (1.0 - static_cast<double>(t) / t_max);
    run.woa_a_log.push_back(a_val);
    std::vector<std::vector<double>> prev = pos;
    for (std::size_t ag = 0; ag < n; ++ag) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t) + 1, ag));
      double p = rng.uniform();
      if (p >= 0.5) {
        double l = rng.uniform(-1.0, 1.0);
        double swirl = std::exp(cfg.woa_spiral_b * l) * std::cos(kTwoPi * l);
        for (std::size_t d = 0; d < dims; ++d) {
          double dist = std::abs(run.best_position[d] - prev[ag][d]);
          pos[ag][d] = dist * swirl + run.best_position[d];
        }
      } else {
        bool have_rand = false;
        std::size_t rand_idx = 0;
        for (std::size_t d = 0; d < dims; ++d) {
          double r1 = rng.uniform();
          double r2 = rng.uniform();
          double big_a = 2.0 * a_val * r1 - a_val;
          double big_c = 2.0 * r2;
          if (std::abs(big_a) < 1.0) {
            double dist = std::abs(big_c * run.best_position[d] - prev[ag][d]);
            pos[ag][d] = run.best_position[d] - big_a * dist;
          } else {
            if (!have_rand) {
              rand_idx = static_cast<std::size_t>(rng.uniform_int(n));
              have_rand = true;
            }
            double dist = std::abs(big_c * prev[rand_idx][d] - prev[ag][d]);
            pos[ag][d] = prev[rand_idx][d] - big_a * dist;
          }
        }
      }
      for (std::size_t d = 0; d < dims; ++d)
        pos[ag][d] = clamp(pos[ag][d], space.internal_lower(d), space.internal_upper(d));
    }
    fit = cache.eval_batch(pos, cfg.n_threads);
    for (std::size_t ag = 0; ag < n; ++ag) {
      if (fit[ag] > run.best_fitness) {
        run.best_fitness = fit[ag];
        run.best_position = pos[ag];
      }
    }
    run.convergence.push_back(run.best_fitness);
  }
  finish_run(run, space, cache, OptAlgorithm::woa);
  return run;
}

OptimizerRun pso_optimize(const FitnessFn& fitness, const SearchSpace& space,
                          const OptimizerConfig& cfg) {
  space.validate();
  cfg.validate();
  FitnessCache cache(fitness, space);
  std::size_t n = static_cast<std::size_t>(cfg.n_agents);
  std::size_t dims = space.dims();

  std::vector<std::vector<double>> pos = init_population(space, cfg);
  std::vector<std::vector<double>> vel(n, std::vector<double>(dims, 0.0));
  std::vector<double> fit = cache.eval_batch(pos, cfg.n_threads);
  std::vector<std::vector<double>> pbest = pos;
  std::vector<double> pbest_fit = fit;

  OptimizerRun run;
  run.best_position = pbest[0];
  run.best_fitness = pbest_fit[0];
  for (std::size_t a = 1; a < n; ++a) {
    if (pbest_fit[a] > run.best_fitness) {
      run.best_fitness = pbest_fit[a];
      run.best_position = pbest[a];
    }
  }

  std::vector<double> vmax(dims);
  for (std::size_t d = 0; d < dims; ++d)
    vmax[d] = cfg.pso_vmax_frac * (space.internal_upper(d) - space.internal_lower(d));

  for (int t = 0; t < cfg.max_iters; ++t) {
    for (std::size_t ag = 0; ag < n; ++ag) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t) + 1, ag));
      for (std::size_t d = 0; d < dims; ++d) {
        double r1 = rng.uniform();
        double r2 = rng.uniform();
        double v = cfg.pso_inertia * vel[ag][d] +
                   cfg.pso_c1 * r1 * (pbest[ag][d] - pos[ag][d]) +
                   cfg.pso_c2 * r2 * (run.best_position[d] - pos[ag][d]);
        v = clamp(v, -vmax[d], vmax[d]);
        vel[ag][d] = v;
        pos[ag][d] = clamp(pos[ag][d] + v, space.internal_lower(d), space.internal_upper(d));
      }
    }
    fit = cache.eval_batch(pos, cfg.n_threads);
    for (std::size_t ag = 0; ag < n; ++ag) {
      if (fit[ag] > pbest_fit[ag]) {
        pbest_fit[ag] = fit[ag];
        pbest[ag] = pos[ag];
      }
    }
    for (std::size_t ag = 0; ag < n; ++ag) {
      if (pbest_fit[ag] > run.best_fitness) {
        run.best_fitness = pbest_fit[ag];
        run.best_position = pbest[ag];
      }
    }
    run.convergence.push_back(run.best_fitness);
  }
  finish_run(run, space, cache, OptAlgorithm::pso);
  return run;
}

OptimizerRun ga_optimize(const FitnessFn& fitness, const SearchSpace& space,
                         const OptimizerConfig& cfg) {
  space.validate();
  cfg.validate();
  FitnessCache cache(fitness, space);
  std::size_t n = static_cast<std::size_t>(cfg.n_agents);
  std::size_t dims = space.dims();

  std::vector<std::vector<double>> pop = init_population(space, cfg);
  std::vector<double> fit = cache.eval_batch(pop, cfg.n_threads);

  OptimizerRun run;
  run.best_position = pop[0];
  run.best_fitness = fit[0];
  for (std::size_t a = 1; a < n; ++a) {
    if (fit[a] > run.best_fitness) {
      run.best_fitness = fit[a];
      run.best_position = pop[a];
    }
  }

  for (int t = 0; t < cfg.max_iters; ++t) {
    std::vector<std::vector<double>> children(n);
    children[0] = run.best_position;  // elitism of one
    for (std::size_t ci = 1; ci < n; ++ci) {
      Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(t) + 1, ci));
      auto tournament = [&]() {
        std::size_t i1 = static_cast<std::size_t>(rng.uniform_int(n));
        std::size_t i2 = static_cast<std::size_t>(rng.uniform_int(n));
        return fit[i2] > fit[i1] ? i2 : i1;
      };
      std::size_t p1 = tournament();
      std::size_t p2 = tournament();
      std::vector<double> child = pop[p1];
      if (rng.uniform() < cfg.ga_crossover_rate) {
        for (std::size_t d = 0; d < dims; ++d) {
          double u = rng.uniform();
          child[d] = u * pop[p1][d] + (1.0 - u) * pop[p2][d];
        }
      }
      for (std::size_t d = 0; d < dims; ++d) {
        if (rng.uniform() < cfg.ga_mutation_rate) {
          double sigma = cfg.ga_mutation_sigma_frac *
                         (space.internal_upper(d) - space.internal_lower(d));
          child[d] += rng.normal(0.0, sigma);
        }
        child[d] = clamp(child[d], space.internal_lower(d), space.internal_upper(d));
      }
      children[ci] = std::move(child);
    }
    pop = std::move(children);
    fit = cache.eval_batch(pop, cfg.n_threads);
    for (std::size_t ag = 0; ag < n; ++ag) {
      if (fit[ag] > run.best_fitness) {
        run.best_fitness = fit[ag];
        run.best_position = pop[ag];
      }
    }
    run.convergence.push_back(run.best_fitness);
  }
  finish_run(run, space, cache, OptAlgorithm::ga);
  return run;
}

OptimizerRun run_optimizer(const FitnessFn& fitness, const SearchSpace& space,
                           const OptimizerConfig& cfg) {
  switch (cfg.algorithm) {
    case OptAlgorithm::woa: return woa_optimize(fitness, space, cfg);
    case OptAlgorithm::pso: return pso_optimize(fitness, space, cfg);
    case OptAlgorithm::ga: return ga_optimize(fitness, space, cfg);
  }
  throw std::invalid_argument("optimize: unknown algorithm");
}

std::pair<SVMHyperparams, OptimizerRun> tune_svm(const std::vector<FeatureVector>& train,
                                                 const std::vector<FeatureVector>& val,
                                                 const OptimizerConfig& cfg,
                                                 const SearchSpace& space) {
  if (space.dims() != 2)
    throw std::invalid_argument("optimize: hyperparameter space must be 2-D");
  PairwiseGeometry geom = build_geometry(train, val);
  FitnessFn fn = [&geom](const std::vector<double>& decoded) {
    return holdout_accuracy(geom, SVMHyperparams{decoded[0], decoded[1]}, 1);
  };
  OptimizerRun run = run_optimizer(fn, space, cfg);
  SVMHyperparams hp{run.best_decoded[0], run.best_decoded[1]};
  return {hp, run};
}

std::pair<SVMHyperparams, OptimizerRun> manual_grid_search(
    const std::vector<FeatureVector>& train, const std::vector<FeatureVector>& val,
    int per_dim, int n_threads, const SearchSpace& space) {
  if (per_dim < 2) throw std::invalid_argument("optimize: grid needs per_dim >= 2");
  if (space.dims() != 2)
    throw std::invalid_argument("optimize: hyperparameter space must be 2-D");
  space.validate();
  PairwiseGeometry geom = build_geometry(train, val);
  FitnessFn fn = [&geom](const std::vector<double>& decoded) {
    return holdout_accuracy(geom, SVMHyperparams{decoded[0], decoded[1]}, 1);
  };
  FitnessCache cache(fn, space);

  std::vector<std::vector<double>> points;
  points.reserve(static_cast<std::size_t>(per_dim) * static_cast<std::size_t>(per_dim));
  for (int i = 0; i < per_dim; ++i) {
    for (int j = 0; j < per_dim; ++j) {
      double step_c = static_cast<double>(i) / static_cast<double>(per_dim - 1);
      double step_g = static_cast<double>(j) / static_cast<double>(per_dim - 1);
      points.push_back(
          {space.internal_lower(0) + step_c * (space.internal_upper(0) - space.internal_lower(0)),
           space.internal_lower(1) + step_g * (space.internal_upper(1) - space.internal_lower(1))});
    }
  }
  std::vector<double> vals = cache.eval_batch(points, n_threads);

  OptimizerRun run;
  run.best_position = points[0];
  run.best_fitness = vals[0];
  run.convergence.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (vals[i] > run.best_fitness) {
      run.best_fitness = vals[i];
      run.best_position = points[i];
    }
    run.convergence.push_back(run.best_fitness);
  }
  finish_run(run, space, cache, OptAlgorithm::woa);
  run.algorithm = "manual";
  SVMHyperparams hp{run.best_decoded[0], run.best_decoded[1]};
  return {hp, run};
}

void write_convergence_csv(const std::string& path, const OptimizerRun& run) {
  csv::Writer w(path);
  w.write_row({"iteration", "best_fitness"});
  for (std::size_t i = 0; i < run.convergence.size(); ++i)
    w.write_row({std::to_string(i + 1), csv::format_double(run.convergence[i])});
}

std::string run_meta_to_json(const OptimizerRun& run, const OptimizerConfig& cfg,
                             double wall_time_s) {
  nlohmann::json j;
  j["algorithm"] = run.algorithm;
  j["seed"] = cfg.seed;
  nlohmann::json c;
  c["n_agents"] = cfg.n_agents;
  c["max_iters"] = cfg.max_iters;
  c["woa_spiral_b"] = cfg.woa_spiral_b;
  c["pso_inertia"] = cfg.pso_inertia;
  c["pso_c1"] = cfg.pso_c1;
  c["pso_c2"] = cfg.pso_c2;
  c["pso_vmax_frac"] = cfg.pso_vmax_frac;
  c["ga_crossover_rate"] = cfg.ga_crossover_rate;
  c["ga_mutation_rate"] = cfg.ga_mutation_rate;
  c["ga_mutation_sigma_frac"] = cfg.ga_mutation_sigma_frac;
  j["config"] = std::move(c);
  j["best_position"] = run.best_position;
  j["best_decoded"] = run.best_decoded;
  j["best_fitness"] = run.best_fitness;
  j["evaluations"] = run.evaluations;
  j["non_finite_evals"] = run.non_finite_evals;
  if (!run.woa_a_log.empty()) j["woa_a_log"] = run.woa_a_log;
  j["wall_time_s"] = wall_time_s;
  return j.dump(2);
}

}  // namespace pqd
