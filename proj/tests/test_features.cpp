#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "pqd/features.hpp"
#include "pqd/signal.hpp"
#include "pqd/stransform.hpp"
#include "test_util.hpp"

using namespace pqd;

namespace {

const SamplingGrid kGrid;

STMatrix transform_of(const std::vector<double>& x) {
  return sogw_st(x, kGrid, {}, FreqMode::normalized);
}

double mean_over(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  double s = 0.0;
  for (std::size_t i = lo; i < hi; ++i) s += v[i];
  return s / static_cast<double>(hi - lo);
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("pure sine magnitude contour is flat away from the edges") {
  auto sine = generate_signal(DisturbanceClass::pure_sine, {}, kGrid);
  auto mc = magnitude_contour(transform_of(sine.samples));
  REQUIRE(mc.size() == kGrid.n_samples);
  std::size_t lo = kGrid.n_samples / 10, hi = kGrid.n_samples - lo;
  double mean = mean_over(mc, lo, hi);
  double var = 0.0;
  for (std::size_t i = lo; i < hi; ++i) var += (mc[i] - mean) * (mc[i] - mean);
  var /= static_cast<double>(hi - lo);
  CHECK(std::sqrt(var) / mean < 0.05);

  // in the literal-units mode the window is flat and the contour is constant
  auto mc_hz = magnitude_contour(sogw_st(sine.samples, kGrid, {}, FreqMode::hz));
  for (double v : mc_hz) CHECK(v == doctest::Approx(mc_hz[0]).epsilon(1e-9));
}

TEST_CASE("zero signal: zero magnitude, tie-broken frequency floor") {
  std::vector<double> zero(kGrid.n_samples, 0.0);
  auto st = transform_of(zero);
  auto mc = magnitude_contour(st);
  auto fc = frequency_contour(st);
  double f_min = kGrid.sample_rate_hz / static_cast<double>(kGrid.n_samples);
  for (std::size_t i = 0; i < mc.size(); ++i) {
    CHECK(mc[i] == 0.0);
    CHECK(fc[i] == f_min);  // all-zero ties resolve to the first positive voice
  }
  auto fv = extract_features(st, DisturbanceClass::pure_sine);
  CHECK(fv.f1_std_mag == 0.0);
  CHECK(fv.f2_energy_mag == 0.0);
  CHECK(fv.f3_std_freq == 0.0);
  CHECK(fv.f4_energy_freq ==
        doctest::Approx(static_cast<double>(kGrid.n_samples) * f_min * f_min));
}

TEST_CASE("sag contour dips inside the event window") {
  DisturbanceParams p;
  p.alpha = 0.7;
  p.t1_s = 0.05;
  p.t2_s = 0.15;
  auto sag = generate_signal(DisturbanceClass::sag, p, kGrid);
  auto mc = magnitude_contour(transform_of(sag.samples));
  // samples 160..480 are inside; 0..130 and 510..640 are comfortably outside
  double inside = mean_over(mc, 200, 440);
  double outside = 0.5 * (mean_over(mc, 10, 130) + mean_over(mc, 510, 630));
  CHECK(inside < 0.6 * outside);
}

TEST_CASE("pure sine frequency contour sits at 50 Hz") {
  auto sine = generate_signal(DisturbanceClass::pure_sine, {}, kGrid);
  auto fc = frequency_contour(transform_of(sine.samples));
  for (double f : fc) CHECK(f == doctest::Approx(50.0));
}

TEST_CASE("oscillatory transient raises high-voice magnitude inside its window") {
  DisturbanceParams p;
  p.alpha = 0.8;
  p.t1_s = 0.05;
  p.t2_s = 0.11;
  p.tau_s = 0.02;
  p.osc_freq_hz = 600.0;
  auto sig = generate_signal(DisturbanceClass::oscillatory_transient, p, kGrid);
  auto st = transform_of(sig.samples);
  // peak |S| over voices at or above 250 Hz, inside vs outside the burst
  auto band_peak = [&](std::size_t col) {
    double best = 0.0;
    for (std::size_t k = 0; k < st.n_voices; ++k)
      if (st.voice_freqs_hz[k] >= 250.0) best = std::max(best, std::abs(st.at(k, col)));
    return best;
  };
  double inside = 0.0, outside = 0.0;
  for (std::size_t j = 176; j < 336; ++j) inside = std::max(inside, band_peak(j));
  for (std::size_t j = 420; j < 620; ++j) outside = std::max(outside, band_peak(j));
  CHECK(inside > 3.0 * outside);
}

TEST_CASE("feature homogeneity under amplitude scaling") {
  auto sig = generate_signal(DisturbanceClass::sag,
                             sample_params(DisturbanceClass::sag, kGrid, 5), kGrid);
  std::vector<double> doubled(sig.samples);
  for (double& v : doubled) v *= 2.0;
  auto f1 = extract_features(transform_of(sig.samples), sig.label);
  auto f2 = extract_features(transform_of(doubled), sig.label);
  CHECK(f2.f1_std_mag == doctest::Approx(2.0 * f1.f1_std_mag).epsilon(1e-9));
  CHECK(f2.f2_energy_mag == doctest::Approx(4.0 * f1.f2_energy_mag).epsilon(1e-9));
  CHECK(f2.f3_std_freq == doctest::Approx(f1.f3_std_freq).epsilon(1e-12));
  CHECK(f2.f4_energy_freq == doctest::Approx(f1.f4_energy_freq).epsilon(1e-12));
}

TEST_CASE("deeper dips raise contour variance") {
  auto sine = generate_signal(DisturbanceClass::pure_sine, {}, kGrid);
  DisturbanceParams p;
  p.alpha = 0.9;
  p.t1_s = 0.05;
  p.t2_s = 0.15;
  auto sag = generate_signal(DisturbanceClass::sag, p, kGrid);
  auto fs = extract_features(transform_of(sine.samples), DisturbanceClass::pure_sine);
  auto fg = extract_features(transform_of(sag.samples), DisturbanceClass::sag);
  CHECK(fg.f1_std_mag > fs.f1_std_mag);
}

TEST_CASE("tie-break picks the lower voice on a hand-built matrix") {
  STMatrix st;
  st.n_voices = 4;
  st.n_samples = 3;
  st.grid = kGrid;
  st.voice_freqs_hz = {0.0, 5.0, 10.0, 15.0};
  st.values.assign(st.n_voices * st.n_samples, {0.0, 0.0});
  st.at(1, 0) = {0.5, 0.0};
  st.at(3, 0) = {0.5, 0.0};  // exact tie with voice 1
  st.at(2, 1) = {0.0, -0.7};
  auto mc = magnitude_contour(st);
  auto fc = frequency_contour(st);
  CHECK(mc[0] == 0.5);
  CHECK(fc[0] == 5.0);
  CHECK(fc[1] == 10.0);
  CHECK(fc[2] == 5.0);  // all-zero column
}

TEST_CASE("contour statistics: translation shifts stds but not energies") {
  std::vector<double> base = {1.0, 2.0, 3.0, 4.0};
  std::vector<double> moved = {2.0, 3.0, 4.0, 5.0};
  CHECK(population_std(base) == doctest::Approx(population_std(moved)).epsilon(1e-14));
  CHECK(energy(moved) > energy(base));
  CHECK(population_std(base) == doctest::Approx(std::sqrt(1.25)).epsilon(1e-14));
  CHECK(energy(base) == doctest::Approx(30.0).epsilon(1e-14));
}

TEST_CASE("phase contour mode swaps features 3 and 4 sources") {
  auto sig = generate_signal(DisturbanceClass::sag,
                             sample_params(DisturbanceClass::sag, kGrid, 8), kGrid);
  auto st = transform_of(sig.samples);
  auto dom = extract_features(st, sig.label, ContourMode::dominant_frequency);
  auto ph = extract_features(st, sig.label, ContourMode::phase_angle);
  CHECK(dom.f1_std_mag == ph.f1_std_mag);
  CHECK(dom.f2_energy_mag == ph.f2_energy_mag);
  CHECK(dom.f4_energy_freq != ph.f4_energy_freq);
  auto pc = phase_contour(st);
  CHECK(ph.f3_std_freq == doctest::Approx(population_std(pc)).epsilon(1e-12));
}

TEST_CASE("normalizer: two-point symmetry and train-only statistics") {
  std::vector<FeatureVector> train(2);
  train[0].f1_std_mag = 0.0;
  train[0].f2_energy_mag = 10.0;
  train[0].f3_std_freq = -4.0;
  train[0].f4_energy_freq = 1.0;
  train[1].f1_std_mag = 2.0;
  train[1].f2_energy_mag = 30.0;
  train[1].f3_std_freq = 4.0;
  train[1].f4_energy_freq = 3.0;
  auto stats = fit_normalizer(train);
  auto norm = apply_normalizer(stats, train);
  for (int d = 0; d < 4; ++d) {
    CHECK(norm[0].point()[static_cast<std::size_t>(d)] == doctest::Approx(-1.0));
    CHECK(norm[1].point()[static_cast<std::size_t>(d)] == doctest::Approx(1.0));
  }
  FeatureVector probe;
  probe.f1_std_mag = 4.0;  // outside the train range: z = (4-1)/1 = 3
  probe.f2_energy_mag = 20.0;
  probe.f3_std_freq = 0.0;
  probe.f4_energy_freq = 2.0;
  auto pn = apply_normalizer(stats, probe);
  CHECK(pn.f1_std_mag == doctest::Approx(3.0));
  CHECK(pn.f2_energy_mag == doctest::Approx(0.0));
}

TEST_CASE("normalizer statistics are exact on a random batch") {
  auto batch = testutil::make_blobs({1, 2, 3}, 20, 1.5, 17);
  auto stats = fit_normalizer(batch);
  auto norm = apply_normalizer(stats, batch);
  for (std::size_t d = 0; d < 4; ++d) {
    double mean = 0.0;
    for (const auto& fv : norm) mean += fv.point()[d];
    mean /= static_cast<double>(norm.size());
    double var = 0.0;
    for (const auto& fv : norm) {
      double c = fv.point()[d] - mean;
      var += c * c;
    }
    var /= static_cast<double>(norm.size());
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(var) - 1.0) < 1e-10);
  }
}

TEST_CASE("constant feature columns are rejected") {
  std::vector<FeatureVector> train(5);
  for (auto& fv : train) {
    fv.f1_std_mag = 1.0;  // constant column
    fv.f2_energy_mag = 2.0;
    fv.f3_std_freq = 3.0;
    fv.f4_energy_freq = 4.0;
  }
  CHECK_THROWS_AS(fit_normalizer(train), std::runtime_error);
  CHECK_THROWS_AS(fit_normalizer({}), std::invalid_argument);
}

TEST_CASE("normalizer JSON and feature CSV round-trip") {
  auto batch = testutil::make_blobs({2, 7}, 4, 0.5, 3);
  auto stats = fit_normalizer(batch);
  auto dir = testutil::tmp_dir("feat");
  write_normalizer_json(dir + "/norm.json", stats);
  auto stats2 = read_normalizer_json(dir + "/norm.json");
  CHECK(stats2.means == stats.means);
  CHECK(stats2.stds == stats.stds);

  write_features_csv(dir + "/f.csv", batch);
  auto back = read_features_csv(dir + "/f.csv");
  REQUIRE(back.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(back[i].point() == batch[i].point());
    CHECK(back[i].label == batch[i].label);
    CHECK(back[i].id == batch[i].id);
  }
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
