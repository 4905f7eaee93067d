// Exit-gate suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Thresholds are pinned here, not configurable.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pqd/experiment.hpp"
#include "pqd/rng.hpp"
#include "test_util.hpp"

using namespace pqd;
namespace fs = std::filesystem;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) {
  return std::chrono::duration<double>(clk::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void run_criterion(int id, const char* label, const std::function<Outcome()>& body) {
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = std::string("exception: ") + e.what();
  }
  if (!out.pass) ++g_failures;
  std::printf("criterion %2d [%s] %s: %s\n", id, out.pass ? "PASS" : "FAIL", label,
              out.detail.c_str());
  std::fflush(stdout);
}

double rel_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += a[i] * a[i];
  }
  return std::sqrt(num) / std::sqrt(std::max(den, 1e-300));
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---- shared end-to-end runs (criteria 6-8) --------------------------------

ExperimentReport run_e2e(std::uint64_t seed, const std::vector<std::string>& algos,
                         const std::vector<std::optional<double>>& snrs) {
  ExperimentConfig cfg;  // library defaults: 100/class, 70:10:20, default window
  cfg.n_per_class = 100;
  cfg.snr_conditions = snrs;
  cfg.algorithms = algos;
  cfg.seed = seed;
  cfg.out_dir = testutil::tmp_dir("accept_e2e");
  auto rep = run_experiment(cfg);
  fs::remove_all(cfg.out_dir);
  return rep;
}

double algo_accuracy(const ConditionReport& cond, const std::string& name) {
  for (const auto& ar : cond.algos)
    if (ar.name == name) return ar.test_accuracy;
  throw std::runtime_error("acceptance: missing algorithm " + name);
}

// clean accuracies per seed from the criterion-6 workload
std::map<std::uint64_t, std::map<std::string, double>> g_clean;
double g_c6_runtime_s = 0.0;
bool g_c6_ran = false;

// bundled seed-1 run with all four algorithms, clean + 30 dB (criterion 7)
std::map<std::string, double> g_all4_clean;
std::map<std::string, double> g_all4_noisy;
bool g_c7_ran = false;

void ensure_c6_runs() {
  if (g_c6_ran) return;
  auto t0 = clk::now();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto rep = run_e2e(seed, {"manual", "woa"}, {std::nullopt});
    const auto& cond = rep.conditions.at(0);
    g_clean[seed]["manual"] = algo_accuracy(cond, "manual");
    g_clean[seed]["woa"] = algo_accuracy(cond, "woa");
    std::printf("    seed %llu clean: manual %.4f  woa %.4f  (%.0f s elapsed)\n",
                static_cast<unsigned long long>(seed), g_clean[seed]["manual"],
                g_clean[seed]["woa"], seconds_since(t0));
    std::fflush(stdout);
  }
  g_c6_runtime_s = seconds_since(t0);
  g_c6_ran = true;
}

void ensure_c7_run() {
  if (g_c7_ran) return;
  auto rep = run_e2e(1, {"manual", "ga", "pso", "woa"}, {std::nullopt, 30.0});
  for (const auto& cond : rep.conditions) {
    auto& dst = cond.label == "clean" ? g_all4_clean : g_all4_noisy;
    for (const auto& ar : cond.algos) dst[ar.name] = ar.test_accuracy;
  }
  g_c7_ran = true;
}

// ---- criteria --------------------------------------------------------------

Outcome criterion_invertibility() {
  auto t0 = clk::now();
  double worst = 0.0;
  SamplingGrid small{3200.0, 128, 50.0, 1.0};
  for (std::uint64_t s = 1; s <= 50; ++s) {
    Rng rng(s);
    std::vector<double> x(small.n_samples);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    worst = std::max(worst, rel_l2(inverse_check(sogw_st(x, small)), x));
  }
  SamplingGrid grid;
  for (int c = 1; c <= 15; ++c) {
    auto cls = class_from_id(c);
    auto sig = generate_signal(cls, sample_params(cls, grid, 1000 + c), grid);
    worst = std::max(worst, rel_l2(inverse_check(sogw_st(sig.samples, grid)), sig.samples));
  }
  double dt = seconds_since(t0);
  bool pass = worst < 1e-8 && dt < 10.0;
  return {pass, "max rel L2 " + fmt("%.2e", worst) + " over 65 signals (limit 1e-8), " +
                    fmt("%.1f", dt) + " s (limit 10 s)"};
}

Outcome criterion_transform_oracle() {
  auto t0 = clk::now();
  SamplingGrid grid{3200.0, 64, 50.0, 1.0};
  Rng rng(7);
  std::vector<double> noise(64);
  for (double& v : noise) v = rng.uniform(-1.0, 1.0);
  auto sine = generate_signal(DisturbanceClass::pure_sine, {}, grid).samples;

  double worst = 0.0;
  for (const auto& coeffs :
       {WindowCoefficients{6.0, 12.0, 0.08}, WindowCoefficients{0.0, 1.0, 0.0}}) {
    for (const auto& x : {noise, sine}) {
      auto fast = sogw_st(x, grid, coeffs, FreqMode::hz);
      auto direct = testutil::st_quadrature_oracle(x, grid, coeffs, FreqMode::hz);
      worst = std::max(worst, testutil::st_relative_error(fast, direct));
    }
  }
  double dt = seconds_since(t0);
  bool pass = worst <= 1e-6 && dt < 30.0;
  return {pass, "max entrywise rel err " + fmt("%.2e", worst) +
                    " (limit 1e-6) across (6,12,0.08) and (0,1,0), " + fmt("%.1f", dt) +
                    " s (limit 30 s)"};
}

Outcome criterion_standard_st_regression() {
  SamplingGrid grid;
  auto sine = generate_signal(DisturbanceClass::pure_sine, {}, grid).samples;
  auto st = sogw_st(sine, grid, {0.0, 1.0, 0.0}, FreqMode::hz);
  const std::size_t n = st.n_samples;
  const std::size_t margin = n / 10;
  std::size_t target = 0;
  for (std::size_t k = 0; k < st.n_voices; ++k)
    if (st.voice_freqs_hz[k] == 50.0) target = k;
  std::size_t hits = 0, cols = 0;
  for (std::size_t tau = margin; tau < n - margin; ++tau) {
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 0; k < st.n_voices; ++k) {
      double m = std::abs(st.at(k, tau));
      if (m > best_mag) {
        best_mag = m;
        best = k;
      }
    }
    ++cols;
    if (best == target) ++hits;
  }
  double frac = static_cast<double>(hits) / static_cast<double>(cols);
  return {frac >= 0.95, "50 Hz voice is column max at " + fmt("%.1f", 100.0 * frac) +
                            "% of interior columns (limit 95%)"};
}

Outcome criterion_svm_dual_oracle() {
  const double cs[] = {0.1, 1.0, 10.0, 100.0};
  const double gammas[] = {0.1, 0.5, 2.0};
  double worst_obj = 0.0;
  long agree = 0, probes = 0;
  for (int p = 0; p < 25; ++p) {
    Rng rng(400 + p);
    std::size_t n = 6 + static_cast<std::size_t>(rng.uniform_int(15));  // 6..20
    double sep = rng.uniform(0.5, 3.0);
    std::vector<std::vector<double>> pts;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
      int y = i % 2 ? 1 : -1;
      pts.push_back({y * sep + rng.normal(0.0, 1.0), rng.normal(0.0, 1.0)});
      labels.push_back(y);
    }
    SVMHyperparams hp{cs[p % 4], gammas[p % 3]};
    auto smo = train_binary(pts, labels, hp);
    auto qp = testutil::qp_oracle(pts, labels, hp);
    double rel = std::abs(smo.dual_objective - qp.objective) /
                 std::max(1.0, std::abs(qp.objective));
    worst_obj = std::max(worst_obj, rel);
    for (int q = 0; q < 100; ++q) {
      std::vector<double> probe{rng.uniform(-sep - 3.0, sep + 3.0), rng.normal(0.0, 2.0)};
      double a = decision_function(smo, probe);
      double b = testutil::qp_decision(qp, pts, labels, hp, probe);
      ++probes;
      if ((a >= 0.0) == (b >= 0.0)) ++agree;
    }
  }
  double frac = static_cast<double>(agree) / static_cast<double>(probes);
  bool pass = worst_obj <= 1e-4 && frac >= 0.99;
  return {pass, "worst dual objective rel diff " + fmt("%.2e", worst_obj) +
                    " (limit 1e-4), sign agreement " + fmt("%.2f", 100.0 * frac) +
                    "% of 2500 probes (limit 99%)"};
}

Outcome criterion_optimizer_sanity() {
  SearchSpace space;
  space.lower = {-5.0, -5.0};
  space.upper = {5.0, 5.0};
  space.scale = {ScaleMode::linear, ScaleMode::linear};
  auto sphere = [](const std::vector<double>& v) {
    return -(v[0] * v[0] + v[1] * v[1]);
  };
  std::string detail;
  bool pass = true;
  for (auto algo : {OptAlgorithm::woa, OptAlgorithm::pso, OptAlgorithm::ga}) {
    double need = algo == OptAlgorithm::ga ? -1e-1 : -1e-2;
    int hits = 0, monotone = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      OptimizerConfig cfg;
      cfg.algorithm = algo;
      cfg.seed = seed;
      auto run = run_optimizer(sphere, space, cfg);
      if (run.best_fitness >= need) ++hits;
      bool mono = true;
      for (std::size_t i = 1; i < run.convergence.size(); ++i)
        if (run.convergence[i] < run.convergence[i - 1]) mono = false;
      if (mono) ++monotone;
    }
    if (hits < 18 || monotone != 20) pass = false;
    detail += algorithm_name(algo) + " " + std::to_string(hits) + "/20 at " +
              fmt("%.0e", -need) + ", monotone " + std::to_string(monotone) + "/20; ";
  }
  return {pass, detail + "(limits: 18/20 reach target, 20/20 monotone)"};
}

Outcome criterion_end_to_end_accuracy() {
  ensure_c6_runs();
  int ok_seeds = 0;
  std::string per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double woa = g_clean[seed]["woa"], manual = g_clean[seed]["manual"];
    bool ok = woa >= 0.97 && woa >= manual;
    if (ok) ++ok_seeds;
    per_seed += "woa " + fmt("%.4f", woa) + " manual " + fmt("%.4f", manual) +
                (ok ? " [ok] " : " [miss] ");
  }
  bool pass = ok_seeds >= 4;
  return {pass, "woa>=97% and woa>=manual on " + std::to_string(ok_seeds) +
                    "/5 seeds (limit 4/5); woa vs manual: " + per_seed + "runtime " +
                    fmt("%.0f", g_c6_runtime_s) + " s (target 1800 s)"};
}

Outcome criterion_noise_robustness() {
  ensure_c7_run();
  bool pass = g_all4_noisy.at("woa") >= 0.94;
  std::string detail = "30 dB woa " + fmt("%.4f", g_all4_noisy.at("woa")) +
                       " (limit 0.94); clean>=noisy: ";
  for (const auto& name : {"manual", "ga", "pso", "woa"}) {
    bool ge = g_all4_clean.at(name) >= g_all4_noisy.at(name);
    if (!ge) pass = false;
    detail += std::string(name) + " " + fmt("%.4f", g_all4_clean.at(name)) + "/" +
              fmt("%.4f", g_all4_noisy.at(name)) + (ge ? " " : "(!) ");
  }
  return {pass, detail};
}

Outcome criterion_ordering() {
  ensure_c6_runs();
  ensure_c7_run();
  std::vector<double> manuals, woas;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    manuals.push_back(g_clean[seed]["manual"]);
    woas.push_back(g_clean[seed]["woa"]);
  }
  double med_manual = median_of(manuals), med_woa = median_of(woas);
  bool pass = med_manual <= med_woa;
  double m = g_all4_clean.at("manual"), g = g_all4_clean.at("ga"),
         p = g_all4_clean.at("pso"), w = g_all4_clean.at("woa");
  bool four_way = m <= g && g <= p && p <= w;
  return {pass, "median manual " + fmt("%.4f", med_manual) + " <= median woa " +
                    fmt("%.4f", med_woa) + " (gated); seed-1 four-way manual<=ga<=pso<=woa " +
                    (four_way ? "holds" : "does not hold") + " (" + fmt("%.4f", m) + ", " +
                    fmt("%.4f", g) + ", " + fmt("%.4f", p) + ", " + fmt("%.4f", w) +
                    ") (reported, not gated)"};
}

Outcome criterion_feature_separability() {
  SamplingGrid grid;
  double mean_interruption = 0.0, mean_swell = 0.0;
  for (int i = 0; i < 100; ++i) {
    for (auto cls : {DisturbanceClass::interruption, DisturbanceClass::swell}) {
      auto sig = generate_signal(cls, sample_params(cls, grid, 9000 + 31 * i), grid);
      auto fv = extract_features(sogw_st(sig.samples, grid, {}, FreqMode::normalized),
                                 cls, ContourMode::dominant_frequency);
      (cls == DisturbanceClass::interruption ? mean_interruption : mean_swell) +=
          fv.f2_energy_mag / 100.0;
    }
  }
  bool pass = mean_interruption < mean_swell;
  return {pass, "mean f2: interruption " + fmt("%.4f", mean_interruption) + " < swell " +
                    fmt("%.4f", mean_swell) + " over 100 signals/class"};
}

Outcome criterion_determinism() {
  auto dir = testutil::tmp_dir("accept_replay");
  ExperimentConfig cfg;
  cfg.n_per_class = 10;
  cfg.snr_conditions = {std::nullopt, 30.0};
  cfg.algorithms = {"manual", "woa"};
  cfg.n_agents = 4;
  cfg.max_iters = 5;
  cfg.grid_per_dim = 3;
  cfg.seed = 9;
  cfg.out_dir = dir;
  run_experiment(cfg);

  auto load_tree = [&dir]() {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      auto rel = fs::relative(entry.path(), dir).string();
      if (rel == "timings.json") continue;  // wall times only
      std::ifstream in(entry.path());
      std::stringstream ss;
      ss << in.rdbuf();
      std::string text = ss.str();
      if (entry.path().filename() == "run_meta.json") {
        // strip the wall-time line, keep everything else byte-exact
        std::stringstream kept, src(text);
        std::string line;
        while (std::getline(src, line))
          if (line.find("wall_time_s") == std::string::npos) kept << line << '\n';
        text = kept.str();
      }
      files[rel] = text;
    }
    return files;
  };

  auto baseline = load_tree();
  auto persisted = read_config_json(dir + "/config.json");
  int identical = 0;
  for (int r = 0; r < 3; ++r) {
    fs::remove_all(dir);
    run_experiment(persisted);
    if (load_tree() == baseline) ++identical;
  }
  fs::remove_all(dir);
  return {identical == 3, std::to_string(identical) +
                              "/3 replays byte-identical excluding wall-time fields "
                              "(limit 3/3, " +
                              std::to_string(baseline.size()) + " files compared)"};
}

}  // namespace

int main() {
  std::printf("acceptance: %d criteria, thresholds pinned in source\n", 10);
  std::fflush(stdout);
  run_criterion(1, "transform invertibility", criterion_invertibility);
  run_criterion(2, "transform quadrature oracle", criterion_transform_oracle);
  run_criterion(3, "standard-ST regression", criterion_standard_st_regression);
  run_criterion(4, "SVM dual oracle", criterion_svm_dual_oracle);
  run_criterion(5, "optimizer sanity", criterion_optimizer_sanity);
  run_criterion(6, "end-to-end accuracy", criterion_end_to_end_accuracy);
  run_criterion(7, "noise robustness", criterion_noise_robustness);
  run_criterion(8, "tuner ordering", criterion_ordering);
  run_criterion(9, "feature separability", criterion_feature_separability);
  run_criterion(10, "experiment determinism", criterion_determinism);
  if (g_failures == 0) {
    std::printf("acceptance: all 10 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria failed\n", g_failures);
  return 1;
}
