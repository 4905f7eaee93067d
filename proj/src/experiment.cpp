#include "pqd/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pqd/csv.hpp"
#include "pqd/parallel.hpp"
#include "pqd/rng.hpp"

namespace fs = std::filesystem;

namespace pqd {

namespace {

constexpr double kRatioTol = 1e-9;

std::map<DisturbanceClass, std::vector<std::size_t>> group_by_class(
    const std::vector<FeatureVector>& features) {
  std::map<DisturbanceClass, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < features.size(); ++i)
    groups[features[i].label].push_back(i);
  return groups;
}

std::string condition_label(std::optional<double> snr) {
  if (!snr) return "clean";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", *snr);
  std::string s = buf;
  for (char& c : s) {
    if (c == '.') c = 'p';
    if (c == '-') c = 'm';
  }
  return "snr_" + s;
}

// Fixed per-algorithm seed tags so reordering the algorithm list does not
// change any individual run.
std::uint64_t algo_tag(const std::string& name) {
  if (name == "manual") return 0;
  if (name == "ga") return 1;
  if (name == "pso") return 2;
  if (name == "woa") return 3;
  throw std::invalid_argument("experiment: unknown algorithm '" + name + "'");
}

nlohmann::json confusion_to_json(const ConfusionMatrix& cm) {
  nlohmann::json j;
  std::vector<int> ids;
  for (DisturbanceClass c : cm.classes) ids.push_back(class_id(c));
  j["classes"] = ids;
  j["counts"] = cm.counts;
  return j;
}

ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  ConfusionMatrix cm;
  for (int id : j.at("classes").get<std::vector<int>>())
    cm.classes.push_back(class_from_id(id));
  cm.counts = j.at("counts").get<std::vector<std::vector<long>>>();
  if (cm.counts.size() != cm.classes.size())
    throw std::runtime_error("experiment: malformed confusion matrix");
  return cm;
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
  csv::Writer w(path);
  std::vector<std::string> header = {"true_class"};
  for (DisturbanceClass c : cm.classes)
    header.push_back("pred_" + std::to_string(class_id(c)));
  w.write_row(header);
  for (std::size_t i = 0; i < cm.counts.size(); ++i) {
    std::vector<std::string> row = {std::to_string(class_id(cm.classes[i]))};
    for (long v : cm.counts[i]) row.push_back(std::to_string(v));
    w.write_row(row);
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("experiment: cannot write " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("experiment: cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SplitResult split_dataset(const std::vector<FeatureVector>& features,
                          const std::array<double, 3>& ratios, std::uint64_t seed) {
  if (features.empty()) throw std::invalid_argument("experiment: empty feature set");
  double ratio_sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(ratio_sum - 1.0) > kRatioTol)
    throw std::invalid_argument("experiment: split ratios must sum to 1");
  for (double r : ratios)
    if (!(r >= 0.0)) throw std::invalid_argument("experiment: negative split ratio");

  auto groups = group_by_class(features);
  std::size_t per_class = groups.begin()->second.size();
  for (const auto& [c, idxs] : groups) {
    if (idxs.size() != per_class)
      throw std::invalid_argument("experiment: per-class counts must be equal (class " +
                                  std::to_string(class_id(c)) + " differs)");
  }
  std::array<std::size_t, 3> counts{};
  std::size_t assigned = 0;
  for (int p = 0; p < 3; ++p) {
    double exact = ratios[p] * static_cast<double>(per_class);
    double rounded = std::round(exact);
    if (std::abs(exact - rounded) > kRatioTol)
      throw std::invalid_argument(
          "experiment: ratios do not divide the per-class count into integers");
    counts[p] = static_cast<std::size_t>(rounded);
    assigned += counts[p];
  }
  if (assigned != per_class)
    throw std::invalid_argument("experiment: split counts do not cover the class");

  SplitResult out;
  for (auto& [c, idxs] : groups) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(class_id(c))));
    rng.shuffle(idxs);
    std::size_t at = 0;
    for (int p = 0; p < 3; ++p) {
      auto& part = p == 0 ? out.train : (p == 1 ? out.val : out.test);
      for (std::size_t i = 0; i < counts[p]; ++i) part.push_back(features[idxs[at++]]);
    }
  }
  auto by_id = [](const FeatureVector& a, const FeatureVector& b) { return a.id < b.id; };
  std::sort(out.train.begin(), out.train.end(), by_id);
  std::sort(out.val.begin(), out.val.end(), by_id);
  std::sort(out.test.begin(), out.test.end(), by_id);
  return out;
}

KFoldResult kfold_validate(const std::vector<FeatureVector>& features, int k,
                           SVMHyperparams hp, std::uint64_t seed, int n_threads) {
  if (k < 2) throw std::invalid_argument("experiment: k must be >= 2");
  auto groups = group_by_class(features);
  for (const auto& [c, idxs] : groups) {
    if (idxs.size() < static_cast<std::size_t>(k))
      throw std::invalid_argument("experiment: class " + std::to_string(class_id(c)) +
                                  " has fewer samples than folds");
  }
  std::vector<int> fold_of(features.size(), -1);
  for (auto& [c, idxs] : groups) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(class_id(c))));
    rng.shuffle(idxs);
    for (std::size_t i = 0; i < idxs.size(); ++i)
      fold_of[idxs[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  }

  KFoldResult result;
  for (int f = 0; f < k; ++f) {
    std::vector<FeatureVector> train, val;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (fold_of[i] == f) val.push_back(features[i]);
      else train.push_back(features[i]);
    }
    NormalizationStats stats = fit_normalizer(train);
    SVMModel model = train_multiclass(apply_normalizer(stats, train), hp, 0, n_threads);
    ConfusionMatrix cm = evaluate(model, apply_normalizer(stats, val), n_threads);
    result.fold_accuracies.push_back(cm.accuracy());
  }
  double sum = 0.0;
  for (double a : result.fold_accuracies) sum += a;
  result.mean_accuracy = sum / static_cast<double>(k);
  return result;
}

void ExperimentConfig::validate() const {
  grid.validate();
  if (n_per_class == 0) throw std::invalid_argument("experiment: n_per_class must be >= 1");
  if (snr_conditions.empty())
    throw std::invalid_argument("experiment: need at least one noise condition");
  for (const auto& snr : snr_conditions)
    if (snr && !std::isfinite(*snr))
      throw std::invalid_argument("experiment: snr must be finite or clean");
  double rs = split_ratios[0] + split_ratios[1] + split_ratios[2];
  if (std::abs(rs - 1.0) > kRatioTol)
    throw std::invalid_argument("experiment: split ratios must sum to 1");
  if (k_folds < 2) throw std::invalid_argument("experiment: k_folds must be >= 2");
  if (algorithms.empty()) throw std::invalid_argument("experiment: empty algorithm list");
  for (const std::string& a : algorithms) algo_tag(a);
  if (n_agents < 2 || max_iters < 1)
    throw std::invalid_argument("experiment: optimizer budget too small");
  if (grid_per_dim < 2) throw std::invalid_argument("experiment: grid_per_dim must be >= 2");
  if (out_dir.empty()) throw std::invalid_argument("experiment: out_dir must be set");
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["grid"] = {{"sample_rate_hz", cfg.grid.sample_rate_hz},
               {"n_samples", cfg.grid.n_samples},
               {"fundamental_hz", cfg.grid.fundamental_hz},
               {"amplitude_pu", cfg.grid.amplitude_pu}};
  j["n_per_class"] = cfg.n_per_class;
  nlohmann::json snrs = nlohmann::json::array();
  for (const auto& snr : cfg.snr_conditions) {
    if (snr) snrs.push_back(*snr);
    else snrs.push_back("clean");
  }
  j["snr_conditions"] = std::move(snrs);
  j["split_ratios"] = cfg.split_ratios;
  j["k_folds"] = cfg.k_folds;
  j["algorithms"] = cfg.algorithms;
  j["seed"] = cfg.seed;
  j["window"] = {{"a", cfg.window.a}, {"b", cfg.window.b}, {"c", cfg.window.c}};
  j["freq_mode"] = freq_mode_name(cfg.freq_mode);
  j["contour_mode"] = contour_mode_name(cfg.contour_mode);
  j["n_agents"] = cfg.n_agents;
  j["max_iters"] = cfg.max_iters;
  j["grid_per_dim"] = cfg.grid_per_dim;
  j["n_threads"] = cfg.n_threads;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    cfg.grid.sample_rate_hz = g.value("sample_rate_hz", cfg.grid.sample_rate_hz);
    cfg.grid.n_samples = g.value("n_samples", cfg.grid.n_samples);
    cfg.grid.fundamental_hz = g.value("fundamental_hz", cfg.grid.fundamental_hz);
    cfg.grid.amplitude_pu = g.value("amplitude_pu", cfg.grid.amplitude_pu);
  }
  cfg.n_per_class = j.value("n_per_class", cfg.n_per_class);
  if (j.contains("snr_conditions")) {
    cfg.snr_conditions.clear();
    for (const auto& v : j.at("snr_conditions")) {
      if (v.is_string()) {
        if (v.get<std::string>() != "clean")
          throw std::runtime_error("experiment: snr entries must be numbers or 'clean'");
        cfg.snr_conditions.push_back(std::nullopt);
      } else {
        cfg.snr_conditions.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("split_ratios")) {
    auto r = j.at("split_ratios").get<std::vector<double>>();
    if (r.size() != 3) throw std::runtime_error("experiment: split_ratios needs 3 entries");
    std::copy(r.begin(), r.end(), cfg.split_ratios.begin());
  }
  cfg.k_folds = j.value("k_folds", cfg.k_folds);
  if (j.contains("algorithms"))
    cfg.algorithms = j.at("algorithms").get<std::vector<std::string>>();
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("window")) {
    const auto& w = j.at("window");
    cfg.window.a = w.value("a", cfg.window.a);
    cfg.window.b = w.value("b", cfg.window.b);
    cfg.window.c = w.value("c", cfg.window.c);
  }
  cfg.freq_mode = freq_mode_from_name(j.value("freq_mode", freq_mode_name(cfg.freq_mode)));
  cfg.contour_mode =
      contour_mode_from_name(j.value("contour_mode", contour_mode_name(cfg.contour_mode)));
  cfg.n_agents = j.value("n_agents", cfg.n_agents);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.grid_per_dim = j.value("grid_per_dim", cfg.grid_per_dim);
  cfg.n_threads = j.value("n_threads", cfg.n_threads);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

void write_config_json(const std::string& path, const ExperimentConfig& cfg) {
  write_text_file(path, config_to_json(cfg) + "\n");
}

ExperimentConfig read_config_json(const std::string& path) {
  return config_from_json(read_text_file(path));
}

std::string report_to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["config"] = nlohmann::json::parse(config_to_json(report.config));
  nlohmann::json conds = nlohmann::json::array();
  for (const ConditionReport& cond : report.conditions) {
    nlohmann::json c;
    c["label"] = cond.label;
    if (cond.snr_db) c["snr_db"] = *cond.snr_db;
    else c["snr_db"] = nullptr;
    c["n_train_per_class"] = cond.n_train_per_class;
    c["n_val_per_class"] = cond.n_val_per_class;
    c["n_test_per_class"] = cond.n_test_per_class;
    nlohmann::json algos = nlohmann::json::array();
    for (const AlgoReport& ar : cond.algos) {
      nlohmann::json a;
      a["name"] = ar.name;
      a["best_hp"] = {{"c", ar.best_hp.c}, {"gamma", ar.best_hp.gamma}};
      a["best_position"] = ar.best_position;
      a["val_accuracy"] = ar.val_accuracy;
      a["evaluations"] = ar.evaluations;
      a["non_finite_evals"] = ar.non_finite_evals;
      a["convergence"] = ar.convergence;
      a["confusion"] = confusion_to_json(ar.confusion);
      a["test_accuracy"] = ar.test_accuracy;
      a["precision"] = ar.precision;
      a["recall"] = ar.recall;
      algos.push_back(std::move(a));
    }
    c["algos"] = std::move(algos);
    conds.push_back(std::move(c));
  }
  j["conditions"] = std::move(conds);
  return j.dump(2);
}

ExperimentReport report_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ExperimentReport report;
  report.config = config_from_json(j.at("config").dump());
  for (const auto& c : j.at("conditions")) {
    ConditionReport cond;
    cond.label = c.at("label").get<std::string>();
    if (!c.at("snr_db").is_null()) cond.snr_db = c.at("snr_db").get<double>();
    cond.n_train_per_class = c.at("n_train_per_class").get<int>();
    cond.n_val_per_class = c.at("n_val_per_class").get<int>();
    cond.n_test_per_class = c.at("n_test_per_class").get<int>();
    for (const auto& a : c.at("algos")) {
      AlgoReport ar;
      ar.name = a.at("name").get<std::string>();
      ar.best_hp.c = a.at("best_hp").at("c").get<double>();
      ar.best_hp.gamma = a.at("best_hp").at("gamma").get<double>();
      ar.best_position = a.at("best_position").get<std::vector<double>>();
      ar.val_accuracy = a.at("val_accuracy").get<double>();
      ar.evaluations = a.at("evaluations").get<long>();
      ar.non_finite_evals = a.at("non_finite_evals").get<long>();
      ar.convergence = a.at("convergence").get<std::vector<double>>();
      ar.confusion = confusion_from_json(a.at("confusion"));
      ar.test_accuracy = a.at("test_accuracy").get<double>();
      ar.precision = a.at("precision").get<std::vector<double>>();
      ar.recall = a.at("recall").get<std::vector<double>>();
      cond.algos.push_back(std::move(ar));
    }
    report.conditions.push_back(std::move(cond));
  }
  return report;
}

void report_render(const ExperimentReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "report.json").string(),
                  report_to_json(report) + "\n");

  std::ostringstream txt;
  txt << "classification results\n";
  txt << "======================\n";
  for (const ConditionReport& cond : report.conditions) {
    txt << "\ncondition: " << cond.label << "  (test signals per class: "
        << cond.n_test_per_class << ")\n";
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s %-13s %-13s %-9s %-9s %s\n", "algo", "c",
                  "gamma", "val_acc", "test_acc", "correct");
    txt << line;
    for (const AlgoReport& ar : cond.algos) {
      char acc[24];
      std::snprintf(acc, sizeof(acc), "%.2f%%", 100.0 * ar.test_accuracy);
      std::snprintf(line, sizeof(line), "%-8s %-13.6g %-13.6g %-9.4f %-9s %ld/%ld\n",
                    ar.name.c_str(), ar.best_hp.c, ar.best_hp.gamma, ar.val_accuracy,
                    acc, ar.confusion.correct(), ar.confusion.total());
      txt << line;
    }
    for (const AlgoReport& ar : cond.algos) {
      txt << "\n[" << cond.label << " / " << ar.name << "] confusion matrix\n";
      txt << ar.confusion.to_text();
    }
  }
  write_text_file((fs::path(out_dir) / "report.txt").string(), txt.str());

  for (const ConditionReport& cond : report.conditions) {
    for (const AlgoReport& ar : cond.algos) {
      fs::path dir = fs::path(out_dir) / cond.label / ar.name;
      fs::create_directories(dir);
      write_confusion_csv((dir / "confusion.csv").string(), ar.confusion);
      OptimizerRun run;
      run.convergence = ar.convergence;
      write_convergence_csv((dir / "convergence.csv").string(), run);
    }
  }
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  write_config_json((fs::path(config.out_dir) / "config.json").string(), config);

  nlohmann::json timings;
  nlohmann::json audit;
  ExperimentReport report;
  report.config = config;

  auto stage_guard = [](const std::string& label, const std::string& name, auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      throw std::runtime_error("experiment: stage '" + label + "/" + name +
                               "' failed: " + e.what());
    }
  };

  for (std::size_t ci = 0; ci < config.snr_conditions.size(); ++ci) {
    std::optional<double> snr = config.snr_conditions[ci];
    std::string label = condition_label(snr);
    fs::path cond_dir = fs::path(config.out_dir) / label;
    fs::create_directories(cond_dir);

    auto t0 = std::chrono::steady_clock::now();
    std::vector<WaveformSignal> dataset = stage_guard(label, "generate", [&] {
      return generate_dataset(config.n_per_class, config.grid, snr,
                              mix_seed(config.seed, 1));
    });
    stage_guard(label, "generate", [&] {
      write_dataset_csv((cond_dir / "dataset.csv").string(), dataset);
      return 0;
    });
    timings[label]["generate_s"] = elapsed_s(t0);

    t0 = std::chrono::steady_clock::now();
    std::vector<FeatureVector> features(dataset.size());
    stage_guard(label, "transform_extract", [&] {
      parallel_for(dataset.size(), config.n_threads, [&](std::size_t i) {
        STMatrix st =
            sogw_st(dataset[i].samples, config.grid, config.window, config.freq_mode);
        features[i] =
            extract_features(st, dataset[i].label, config.contour_mode);
        features[i].id = static_cast<long>(i);
      });
      write_features_csv((cond_dir / "features_raw.csv").string(), features);
      return 0;
    });
    timings[label]["transform_extract_s"] = elapsed_s(t0);

    t0 = std::chrono::steady_clock::now();
    SplitResult split = stage_guard(label, "split", [&] {
      return split_dataset(features, config.split_ratios, mix_seed(config.seed, 2));
    });
    auto ids_of = [](const std::vector<FeatureVector>& fvs) {
      std::vector<long> ids;
      ids.reserve(fvs.size());
      for (const FeatureVector& fv : fvs) ids.push_back(fv.id);
      return ids;
    };
    std::vector<long> train_ids = ids_of(split.train);
    std::vector<long> val_ids = ids_of(split.val);
    std::vector<long> test_ids = ids_of(split.test);
    stage_guard(label, "split", [&] {
      nlohmann::json sj;
      sj["train_ids"] = train_ids;
      sj["val_ids"] = val_ids;
      sj["test_ids"] = test_ids;
      write_text_file((cond_dir / "split.json").string(), sj.dump(2) + "\n");
      return 0;
    });
    timings[label]["split_s"] = elapsed_s(t0);

    t0 = std::chrono::steady_clock::now();
    NormalizationStats stats = stage_guard(label, "normalize", [&] {
      return fit_normalizer(split.train);
    });
    std::vector<FeatureVector> train_n = apply_normalizer(stats, split.train);
    std::vector<FeatureVector> val_n = apply_normalizer(stats, split.val);
    std::vector<FeatureVector> test_n = apply_normalizer(stats, split.test);
    stage_guard(label, "normalize", [&] {
      write_normalizer_json((cond_dir / "normalizer.json").string(), stats);
      write_features_csv((cond_dir / "features_train.csv").string(), train_n);
      write_features_csv((cond_dir / "features_val.csv").string(), val_n);
      write_features_csv((cond_dir / "features_test.csv").string(), test_n);
      return 0;
    });
    timings[label]["normalize_s"] = elapsed_s(t0);

    nlohmann::json cond_audit;
    cond_audit["stages"]["normalizer_fit"] = train_ids;

    ConditionReport cond;
    cond.label = label;
    cond.snr_db = snr;
    cond.n_train_per_class = static_cast<int>(split.train.size()) / kNumClasses;
    cond.n_val_per_class = static_cast<int>(split.val.size()) / kNumClasses;
    cond.n_test_per_class = static_cast<int>(split.test.size()) / kNumClasses;

    for (const std::string& algo : config.algorithms) {
      fs::path algo_dir = cond_dir / algo;
      fs::create_directories(algo_dir);
      t0 = std::chrono::steady_clock::now();

      SVMHyperparams hp;
      OptimizerRun run;
      OptimizerConfig ocfg;
      ocfg.n_agents = config.n_agents;
      ocfg.max_iters = config.max_iters;
      ocfg.n_threads = config.n_threads;
      if (algo == "manual") {
        ocfg.seed = 0;
        std::tie(hp, run) = stage_guard(label, "tune_manual", [&] {
          return manual_grid_search(train_n, val_n, config.grid_per_dim,
                                    config.n_threads);
        });
      } else {
        ocfg.algorithm = algorithm_from_name(algo);
        ocfg.seed = mix_seed(config.seed, 3, algo_tag(algo));
        std::tie(hp, run) = stage_guard(label, "tune_" + algo, [&] {
          return tune_svm(train_n, val_n, ocfg);
        });
      }
      double tune_wall = elapsed_s(t0);
      std::vector<long> tune_rows = train_ids;
      tune_rows.insert(tune_rows.end(), val_ids.begin(), val_ids.end());
      cond_audit["stages"]["tune_" + algo] = tune_rows;

      t0 = std::chrono::steady_clock::now();
      SVMModel model = stage_guard(label, "train_" + algo, [&] {
        SVMModel m = train_multiclass(train_n, hp, 0, config.n_threads);
        m.normalizer = stats;
        m.pipeline = PipelineMeta{config.grid, config.window, config.freq_mode,
                                  config.contour_mode};
        write_model_json((algo_dir / "model.json").string(), m);
        return m;
      });
      cond_audit["stages"]["final_train_" + algo] = train_ids;
      double train_wall = elapsed_s(t0);

      t0 = std::chrono::steady_clock::now();
      ConfusionMatrix cm = stage_guard(label, "evaluate_" + algo, [&] {
        return evaluate(model, test_n, config.n_threads);
      });
      cond_audit["stages"]["test_evaluate_" + algo] = test_ids;
      double eval_wall = elapsed_s(t0);

      stage_guard(label, "persist_" + algo, [&] {
        write_convergence_csv((algo_dir / "convergence.csv").string(), run);
        write_confusion_csv((algo_dir / "confusion.csv").string(), cm);
        write_text_file((algo_dir / "run_meta.json").string(),
                        run_meta_to_json(run, ocfg, tune_wall) + "\n");
        return 0;
      });

      AlgoReport ar;
      ar.name = algo;
      ar.best_hp = hp;
      ar.best_position = run.best_position;
      ar.val_accuracy = run.best_fitness;
      ar.evaluations = run.evaluations;
      ar.non_finite_evals = run.non_finite_evals;
      ar.convergence = run.convergence;
      ar.confusion = cm;
      ar.test_accuracy = cm.accuracy();
      for (std::size_t k = 0; k < cm.classes.size(); ++k) {
        ar.precision.push_back(cm.precision(k));
        ar.recall.push_back(cm.recall(k));
      }
      cond.algos.push_back(std::move(ar));

      timings[label][algo] = {{"tune_s", tune_wall},
                              {"train_s", train_wall},
                              {"evaluate_s", eval_wall}};
    }

    // Leakage audit: no tuning/normalization/training stage may touch a test row.
    std::set<long> test_set(test_ids.begin(), test_ids.end());
    for (const auto& [stage_name, rows] : cond_audit["stages"].items()) {
      if (stage_name.rfind("test_evaluate_", 0) == 0) continue;
      for (long id : rows.get<std::vector<long>>()) {
        if (test_set.count(id))
          throw std::runtime_error("experiment: test row " + std::to_string(id) +
                                   " leaked into stage " + stage_name);
      }
    }
    cond_audit["test_ids"] = test_ids;
    cond_audit["leak_check"] = "passed";
    audit[label] = std::move(cond_audit);

    report.conditions.push_back(std::move(cond));
  }

  write_text_file((fs::path(config.out_dir) / "audit.json").string(),
                  audit.dump(2) + "\n");
  write_text_file((fs::path(config.out_dir) / "timings.json").string(),
                  timings.dump(2) + "\n");
  report_render(report, config.out_dir);
  return report;
}

ClassifyResult classify_external(const std::string& csv_path, const SVMModel& model,
                                 std::optional<double> declared_rate_hz) {
  if (!model.pipeline)
    throw std::runtime_error("classify: model file lacks pipeline metadata");
  if (!model.normalizer)
    throw std::runtime_error("classify: model file lacks a normalizer");
  const PipelineMeta& meta = *model.pipeline;
  meta.grid.validate();

  auto rows = csv::read_file(csv_path);
  std::vector<double> times, values;
  bool two_column = false;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.empty()) continue;
    double v0;
    try {
      v0 = csv::parse_double(row[0]);
    } catch (const std::exception&) {
      if (times.empty() && values.empty()) continue;  // header row
      throw;
    }
    if (row.size() >= 2) {
      double v1 = csv::parse_double(row[1]);
      times.push_back(v0);
      values.push_back(v1);
      two_column = true;
    } else {
      values.push_back(v0);
    }
  }
  if (values.size() < 2) throw std::runtime_error("classify: waveform too short");
  if (!two_column) {
    if (!declared_rate_hz || !(*declared_rate_hz > 0.0))
      throw std::runtime_error(
          "classify: raw sample input needs a declared sample rate");
    times.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
      times[i] = static_cast<double>(i) / *declared_rate_hz;
  }
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::runtime_error("classify: time column must be strictly increasing");

  double span = times.back() - times.front();
  double mean_dt = span / static_cast<double>(times.size() - 1);
  if (span + mean_dt < meta.grid.period_s() - 1e-12)
    throw std::runtime_error("classify: record shorter than one fundamental cycle");

  // Resample onto the model grid over the available span, then tile
  // periodically to fill the full record length.
  double dt = meta.grid.dt();
  std::size_t n_target = meta.grid.n_samples;
  std::size_t m = static_cast<std::size_t>(std::floor(span / dt + 1e-12)) + 1;
  if (m > n_target) m = n_target;
  std::vector<double> resampled(n_target);
  std::size_t seg = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double tt = times.front() + static_cast<double>(i) * dt;
    while (seg + 2 < times.size() && times[seg + 1] < tt) ++seg;
    double u = (tt - times[seg]) / (times[seg + 1] - times[seg]);
    u = std::min(std::max(u, 0.0), 1.0);
    resampled[i] = (1.0 - u) * values[seg] + u * values[seg + 1];
  }
  for (std::size_t i = m; i < n_target; ++i) resampled[i] = resampled[i % m];

  if (!(mean_square_power(resampled) > 0.0))
    throw std::runtime_error("classify: zero-power record, nothing to classify");

  STMatrix st = sogw_st(resampled, meta.grid, meta.window, meta.freq_mode);
  ClassifyResult out;
  out.resampled = std::move(resampled);
  out.magnitude_contour = magnitude_contour(st);
  out.frequency_contour = frequency_contour(st);
  out.features_raw = extract_features(st, DisturbanceClass::pure_sine, meta.contour_mode);
  out.features_normalized = apply_normalizer(*model.normalizer, out.features_raw);
  out.predicted = predict(model, out.features_normalized);
  return out;
}

}  // namespace pqd
