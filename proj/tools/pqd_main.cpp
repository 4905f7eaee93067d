#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pqd/csv.hpp"
#include "pqd/experiment.hpp"
#include "pqd/parallel.hpp"
#include "pqd/rng.hpp"

namespace fs = std::filesystem;
using namespace pqd;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string config_path;
  std::string snr = "clean";
  std::string window = "6,12,0.08";
  std::string freq_mode = "normalized";
  std::string contour_mode = "dominant_frequency";
  int threads = 1;
};

std::optional<double> parse_snr(const std::string& s) {
  if (s == "clean") return std::nullopt;
  return csv::parse_double(s);
}

WindowCoefficients parse_window(const std::string& s) {
  auto parts = csv::split_line(s);
  if (parts.size() != 3)
    throw std::invalid_argument("cli: --window expects three comma-separated values");
  WindowCoefficients w;
  w.a = csv::parse_double(parts[0]);
  w.b = csv::parse_double(parts[1]);
  w.c = csv::parse_double(parts[2]);
  return w;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cli: cannot write " + path);
  f << text;
}

std::string read_text(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cli: cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

void write_contour_csv(const std::string& path, const SamplingGrid& grid,
                       const std::vector<double>& mag, const std::vector<double>& freq) {
  csv::Writer w(path);
  w.write_row({"t_s", "magnitude", "frequency_hz"});
  for (std::size_t i = 0; i < mag.size(); ++i)
    w.write_row({csv::format_double(static_cast<double>(i) * grid.dt()),
                 csv::format_double(mag[i]), csv::format_double(freq[i])});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power-quality disturbance synthesis, transform and classification"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts g;
  app.add_option("--seed", g.seed, "master random seed");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--config", g.config_path, "experiment config JSON");
  app.add_option("--snr", g.snr, "noise condition: clean or SNR in dB");
  app.add_option("--window", g.window, "window coefficients a,b,c");
  app.add_option("--freq-mode", g.freq_mode, "hz or normalized");
  app.add_option("--contour-mode", g.contour_mode, "dominant_frequency or phase_angle");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");

  SamplingGrid grid;
  auto add_grid_opts = [&](CLI::App* sub) {
    sub->add_option("--sample-rate", grid.sample_rate_hz, "sample rate in Hz");
    sub->add_option("--n-samples", grid.n_samples, "record length in samples");
    sub->add_option("--fundamental", grid.fundamental_hz, "fundamental frequency in Hz");
    sub->add_option("--amplitude", grid.amplitude_pu, "base amplitude in pu");
  };

  // generate
  std::size_t n_per_class = 100;
  auto* cmd_gen = app.add_subcommand("generate", "synthesize a labeled waveform dataset");
  cmd_gen->add_option("--n-per-class", n_per_class, "signals per disturbance class");
  add_grid_opts(cmd_gen);

  // transform
  std::string in_path;
  long row_id = 0;
  auto* cmd_tr = app.add_subcommand("transform", "dump the ST magnitude/phase surfaces");
  cmd_tr->add_option("--input", in_path, "dataset CSV")->required();
  cmd_tr->add_option("--id", row_id, "row id to transform");
  add_grid_opts(cmd_tr);

  // features
  auto* cmd_feat = app.add_subcommand("features", "extract 4-d feature vectors");
  cmd_feat->add_option("--input", in_path, "dataset CSV")->required();
  add_grid_opts(cmd_feat);

  // split
  std::string ratios_text = "0.7,0.1,0.2";
  auto* cmd_split = app.add_subcommand("split", "stratified train/val/test partition");
  cmd_split->add_option("--input", in_path, "feature CSV")->required();
  cmd_split->add_option("--ratios", ratios_text, "train,val,test fractions");

  // tune
  std::string train_path, val_path, algo = "woa";
  int agents = 10, iters = 100, grid_per_dim = 10;
  auto* cmd_tune = app.add_subcommand("tune", "search SVM hyperparameters");
  cmd_tune->add_option("--train", train_path, "training feature CSV")->required();
  cmd_tune->add_option("--val", val_path, "validation feature CSV")->required();
  cmd_tune->add_option("--algo", algo, "manual, ga, pso or woa");
  cmd_tune->add_option("--agents", agents, "population size");
  cmd_tune->add_option("--iters", iters, "iteration budget");
  cmd_tune->add_option("--grid-per-dim", grid_per_dim, "manual grid resolution");

  // train
  double hp_c = 1.0, hp_gamma = 1.0;
  std::string normalizer_path;
  auto* cmd_train = app.add_subcommand("train", "train the multiclass SVM");
  cmd_train->add_option("--train", train_path, "training feature CSV")->required();
  cmd_train->add_option("--c", hp_c, "penalty parameter")->required();
  cmd_train->add_option("--gamma", hp_gamma, "RBF width")->required();
  cmd_train->add_option("--normalizer", normalizer_path, "existing normalizer JSON");
  add_grid_opts(cmd_train);

  // evaluate
  std::string model_path, test_path;
  auto* cmd_eval = app.add_subcommand("evaluate", "score a model on a feature CSV");
  cmd_eval->add_option("--model", model_path, "model JSON")->required();
  cmd_eval->add_option("--test", test_path, "test feature CSV")->required();

  // kfold
  int k_folds = 7;
  auto* cmd_kfold = app.add_subcommand("kfold", "stratified cross-validation");
  cmd_kfold->add_option("--input", in_path, "feature CSV")->required();
  cmd_kfold->add_option("--k", k_folds, "fold count");
  cmd_kfold->add_option("--c", hp_c, "penalty parameter")->required();
  cmd_kfold->add_option("--gamma", hp_gamma, "RBF width")->required();

  // classify
  std::string wave_path;
  double declared_rate = 0.0;
  auto* cmd_cls = app.add_subcommand("classify", "classify an external waveform CSV");
  cmd_cls->add_option("--input", wave_path, "waveform CSV: time,value rows or one sample per row")
      ->required();
  cmd_cls->add_option("--model", model_path, "model JSON")->required();
  cmd_cls->add_option("--rate", declared_rate, "sample rate in Hz for single-column input");

  // report
  std::string report_path;
  auto* cmd_rep = app.add_subcommand("report", "render a report JSON to files");
  cmd_rep->add_option("--input", report_path, "report JSON")->required();

  // experiment
  auto* cmd_exp = app.add_subcommand("experiment", "run the full pipeline");
  cmd_exp->add_option("--n-per-class", n_per_class, "signals per disturbance class");
  cmd_exp->add_option("--agents", agents, "population size");
  cmd_exp->add_option("--iters", iters, "iteration budget");
  add_grid_opts(cmd_exp);

  try {
    app.parse(argc, argv);

    WindowCoefficients window = parse_window(g.window);
    FreqMode fmode = freq_mode_from_name(g.freq_mode);
    ContourMode cmode = contour_mode_from_name(g.contour_mode);
    fs::create_directories(g.out);

    if (cmd_gen->parsed()) {
      auto dataset = generate_dataset(n_per_class, grid, parse_snr(g.snr), g.seed);
      std::string path = (fs::path(g.out) / "dataset.csv").string();
      write_dataset_csv(path, dataset);
      std::printf("wrote %zu signals to %s\n", dataset.size(), path.c_str());
    } else if (cmd_tr->parsed()) {
      auto dataset = read_dataset_csv(in_path, grid);
      if (row_id < 0 || static_cast<std::size_t>(row_id) >= dataset.size())
        throw std::invalid_argument("cli: --id out of range");
      const WaveformSignal& sig = dataset[static_cast<std::size_t>(row_id)];
      STMatrix st = sogw_st(sig.samples, sig.grid, window, fmode);
      write_st_magnitude_csv((fs::path(g.out) / "st_magnitude.csv").string(), st);
      write_st_phase_csv((fs::path(g.out) / "st_phase.csv").string(), st);
      write_contour_csv((fs::path(g.out) / "contour.csv").string(), sig.grid,
                        magnitude_contour(st), frequency_contour(st));
      std::printf("wrote ST surfaces for row %ld (class %d) to %s\n", row_id,
                  class_id(sig.label), g.out.c_str());
    } else if (cmd_feat->parsed()) {
      auto dataset = read_dataset_csv(in_path, grid);
      std::vector<FeatureVector> feats(dataset.size());
      parallel_for(dataset.size(), g.threads, [&](std::size_t i) {
        STMatrix st = sogw_st(dataset[i].samples, dataset[i].grid, window, fmode);
        feats[i] = extract_features(st, dataset[i].label, cmode);
        feats[i].id = static_cast<long>(i);
      });
      std::string path = (fs::path(g.out) / "features_raw.csv").string();
      write_features_csv(path, feats);
      std::printf("wrote %zu feature rows to %s\n", feats.size(), path.c_str());
    } else if (cmd_split->parsed()) {
      auto feats = read_features_csv(in_path);
      auto parts = csv::split_line(ratios_text);
      if (parts.size() != 3)
        throw std::invalid_argument("cli: --ratios expects three fractions");
      std::array<double, 3> ratios{csv::parse_double(parts[0]),
                                   csv::parse_double(parts[1]),
                                   csv::parse_double(parts[2])};
      SplitResult split = split_dataset(feats, ratios, g.seed);
      write_features_csv((fs::path(g.out) / "features_train.csv").string(), split.train);
      write_features_csv((fs::path(g.out) / "features_val.csv").string(), split.val);
      write_features_csv((fs::path(g.out) / "features_test.csv").string(), split.test);
      nlohmann::json sj;
      auto ids_of = [](const std::vector<FeatureVector>& fvs) {
        std::vector<long> ids;
        for (const auto& fv : fvs) ids.push_back(fv.id);
        return ids;
      };
      sj["train_ids"] = ids_of(split.train);
      sj["val_ids"] = ids_of(split.val);
      sj["test_ids"] = ids_of(split.test);
      write_text((fs::path(g.out) / "split.json").string(), sj.dump(2) + "\n");
      std::printf("split %zu rows into %zu/%zu/%zu under %s\n", feats.size(),
                  split.train.size(), split.val.size(), split.test.size(),
                  g.out.c_str());
    } else if (cmd_tune->parsed()) {
      auto train = read_features_csv(train_path);
      auto val = read_features_csv(val_path);
      NormalizationStats stats = fit_normalizer(train);
      auto train_n = apply_normalizer(stats, train);
      auto val_n = apply_normalizer(stats, val);
      write_normalizer_json((fs::path(g.out) / "normalizer.json").string(), stats);
      SVMHyperparams hp;
      OptimizerRun run;
      OptimizerConfig ocfg;
      ocfg.n_agents = agents;
      ocfg.max_iters = iters;
      ocfg.n_threads = g.threads;
      ocfg.seed = g.seed;
      auto t0 = std::chrono::steady_clock::now();
      if (algo == "manual") {
        std::tie(hp, run) = manual_grid_search(train_n, val_n, grid_per_dim, g.threads);
      } else {
        ocfg.algorithm = algorithm_from_name(algo);
        std::tie(hp, run) = tune_svm(train_n, val_n, ocfg);
      }
      double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_convergence_csv((fs::path(g.out) / "convergence.csv").string(), run);
      write_text((fs::path(g.out) / "run_meta.json").string(),
                 run_meta_to_json(run, ocfg, wall) + "\n");
      std::printf("%s best: c=%.17g gamma=%.17g val_accuracy=%.6f (%ld evaluations)\n",
                  algo.c_str(), hp.c, hp.gamma, run.best_fitness, run.evaluations);
    } else if (cmd_train->parsed()) {
      auto train = read_features_csv(train_path);
      NormalizationStats stats;
      std::vector<FeatureVector> train_n;
      if (!normalizer_path.empty()) {
        stats = read_normalizer_json(normalizer_path);
        train_n = apply_normalizer(stats, train);
      } else {
        stats = fit_normalizer(train);
        train_n = apply_normalizer(stats, train);
      }
      SVMHyperparams hp{hp_c, hp_gamma};
      SVMModel model = train_multiclass(train_n, hp, 0, g.threads);
      model.normalizer = stats;
      model.pipeline = PipelineMeta{grid, window, fmode, cmode};
      std::string path = (fs::path(g.out) / "model.json").string();
      write_model_json(path, model);
      std::printf("trained %zu pairwise machines on %zu rows -> %s\n",
                  model.machines.size(), train.size(), path.c_str());
    } else if (cmd_eval->parsed()) {
      SVMModel model = read_model_json(model_path);
      auto test = read_features_csv(test_path);
      std::vector<FeatureVector> test_n =
          model.normalizer ? apply_normalizer(*model.normalizer, test) : test;
      ConfusionMatrix cm = evaluate(model, test_n, g.threads);
      write_text((fs::path(g.out) / "confusion.txt").string(), cm.to_text());
      std::printf("%s", cm.to_text().c_str());
      std::printf("accuracy: %.2f%% (%ld/%ld)\n", 100.0 * cm.accuracy(), cm.correct(),
                  cm.total());
    } else if (cmd_kfold->parsed()) {
      auto feats = read_features_csv(in_path);
      KFoldResult kf =
          kfold_validate(feats, k_folds, SVMHyperparams{hp_c, hp_gamma}, g.seed,
                         g.threads);
      nlohmann::json j;
      j["fold_accuracies"] = kf.fold_accuracies;
      j["mean_accuracy"] = kf.mean_accuracy;
      write_text((fs::path(g.out) / "kfold.json").string(), j.dump(2) + "\n");
      for (std::size_t i = 0; i < kf.fold_accuracies.size(); ++i)
        std::printf("fold %zu: %.4f\n", i + 1, kf.fold_accuracies[i]);
      std::printf("mean accuracy: %.4f\n", kf.mean_accuracy);
    } else if (cmd_cls->parsed()) {
      SVMModel model = read_model_json(model_path);
      std::optional<double> rate;
      if (declared_rate > 0.0) rate = declared_rate;
      ClassifyResult res = classify_external(wave_path, model, rate);
      write_contour_csv((fs::path(g.out) / "contour.csv").string(),
                        model.pipeline->grid, res.magnitude_contour,
                        res.frequency_contour);
      std::printf("predicted class: %d (%s)\n", class_id(res.predicted),
                  class_name(res.predicted).c_str());
    } else if (cmd_rep->parsed()) {
      ExperimentReport report = report_from_json(read_text(report_path));
      report_render(report, g.out);
      std::printf("rendered report to %s\n", g.out.c_str());
    } else if (cmd_exp->parsed()) {
      ExperimentConfig cfg;
      if (!g.config_path.empty()) cfg = read_config_json(g.config_path);
      if (cmd_exp->count("--n-per-class")) cfg.n_per_class = n_per_class;
      if (cmd_exp->count("--agents")) cfg.n_agents = agents;
      if (cmd_exp->count("--iters")) cfg.max_iters = iters;
      if (app.count("--seed")) cfg.seed = g.seed;
      if (app.count("--out")) cfg.out_dir = g.out;
      if (app.count("--window")) cfg.window = window;
      if (app.count("--freq-mode")) cfg.freq_mode = fmode;
      if (app.count("--contour-mode")) cfg.contour_mode = cmode;
      if (app.count("--threads")) cfg.n_threads = g.threads;
      if (app.count("--snr")) cfg.snr_conditions = {parse_snr(g.snr)};
      if (cmd_exp->count("--sample-rate") || cmd_exp->count("--n-samples") ||
          cmd_exp->count("--fundamental") || cmd_exp->count("--amplitude"))
        cfg.grid = grid;
      if (cfg.out_dir.empty()) cfg.out_dir = g.out;
      ExperimentReport report = run_experiment(cfg);
      for (const auto& cond : report.conditions)
        for (const auto& ar : cond.algos)
          std::printf("[%s] %-8s test accuracy %.2f%% (%ld/%ld)\n", cond.label.c_str(),
                      ar.name.c_str(), 100.0 * ar.test_accuracy, ar.confusion.correct(),
                      ar.confusion.total());
    }
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pqd: %s\n", e.what());
    return 1;
  }
}
