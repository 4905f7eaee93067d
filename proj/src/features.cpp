#include "pqd/features.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "pqd/csv.hpp"

namespace pqd {

namespace {

// Index of the max-|S| voice among k >= 1 for one column; lower index wins ties.
std::size_t argmax_voice(const STMatrix& st, std::size_t col) {
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k < st.n_voices; ++k) {
    double mag = std::abs(st.at(k, col));
    if (mag > best_mag) {
      best_mag = mag;
      best = k;
    }
  }
  return best;
}

void require_voices(const STMatrix& st) {
  if (st.n_voices < 2 || st.n_samples == 0)
    throw std::invalid_argument("features: transform matrix has no positive voices");
}

}  // namespace

std::string contour_mode_name(ContourMode m) {
  return m == ContourMode::dominant_frequency ? "dominant_frequency" : "phase_angle";
}

ContourMode contour_mode_from_name(const std::string& s) {
  if (s == "dominant_frequency") return ContourMode::dominant_frequency;
  if (s == "phase_angle") return ContourMode::phase_angle;
  throw std::invalid_argument("features: unknown contour mode '" + s + "'");
}

std::vector<double> magnitude_contour(const STMatrix& st) {
  require_voices(st);
  std::vector<double> out(st.n_samples);
  for (std::size_t j = 0; j < st.n_samples; ++j)
    out[j] = std::abs(st.at(argmax_voice(st, j), j));
  return out;
}

std::vector<double> frequency_contour(const STMatrix& st) {
  require_voices(st);
  std::vector<double> out(st.n_samples);
  for (std::size_t j = 0; j < st.n_samples; ++j)
    out[j] = st.voice_freqs_hz[argmax_voice(st, j)];
  return out;
}

std::vector<double> phase_contour(const STMatrix& st) {
  require_voices(st);
  std::vector<double> out(st.n_samples);
  for (std::size_t j = 0; j < st.n_samples; ++j)
    out[j] = std::arg(st.at(argmax_voice(st, j), j));
  return out;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("features: std of empty vector");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double acc = 0.0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

double energy(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

FeatureVector extract_features(const STMatrix& st, DisturbanceClass label,
                               ContourMode mode) {
  std::vector<double> mag = magnitude_contour(st);
  std::vector<double> second = mode == ContourMode::dominant_frequency
                                   ? frequency_contour(st)
                                   : phase_contour(st);
  FeatureVector fv;
  fv.f1_std_mag = population_std(mag);
  fv.f2_energy_mag = energy(mag);
  fv.f3_std_freq = population_std(second);
  fv.f4_energy_freq = energy(second);
  fv.label = label;
  return fv;
}

NormalizationStats fit_normalizer(const std::vector<FeatureVector>& train) {
  if (train.empty()) throw std::invalid_argument("features: empty training set");
  NormalizationStats stats;
  double n = static_cast<double>(train.size());
  for (const FeatureVector& fv : train) {
    auto p = fv.point();
    for (int d = 0; d < 4; ++d) stats.means[d] += p[d];
  }
  for (int d = 0; d < 4; ++d) stats.means[d] /= n;
  for (const FeatureVector& fv : train) {
    auto p = fv.point();
    for (int d = 0; d < 4; ++d) {
      double diff = p[d] - stats.means[d];
      stats.stds[d] += diff * diff;
    }
  }
  for (int d = 0; d < 4; ++d) {
    stats.stds[d] = std::sqrt(stats.stds[d] / n);
    if (!(stats.stds[d] > 0.0))
      throw std::runtime_error("features: feature " + std::to_string(d + 1) +
                               " is constant on the training set");
  }
  return stats;
}

FeatureVector apply_normalizer(const NormalizationStats& stats, const FeatureVector& fv) {
  FeatureVector out = fv;
  auto p = fv.point();
  std::array<double, 4> z{};
  for (int d = 0; d < 4; ++d) z[d] = (p[d] - stats.means[d]) / stats.stds[d];
  out.f1_std_mag = z[0];
  out.f2_energy_mag = z[1];
  out.f3_std_freq = z[2];
  out.f4_energy_freq = z[3];
  return out;
}

std::vector<FeatureVector> apply_normalizer(const NormalizationStats& stats,
                                            const std::vector<FeatureVector>& fvs) {
  std::vector<FeatureVector> out;
  out.reserve(fvs.size());
  for (const FeatureVector& fv : fvs) out.push_back(apply_normalizer(stats, fv));
  return out;
}

std::string normalizer_to_json(const NormalizationStats& stats) {
  nlohmann::json j;
  j["means"] = stats.means;
  j["stds"] = stats.stds;
  return j.dump(2);
}

NormalizationStats normalizer_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  NormalizationStats stats;
  auto means = j.at("means").get<std::vector<double>>();
  auto stds = j.at("stds").get<std::vector<double>>();
  if (means.size() != 4 || stds.size() != 4)
    throw std::runtime_error("features: normalizer must carry 4 means and 4 stds");
  for (int d = 0; d < 4; ++d) {
    stats.means[d] = means[static_cast<std::size_t>(d)];
    stats.stds[d] = stds[static_cast<std::size_t>(d)];
    if (!(stats.stds[d] > 0.0))
      throw std::runtime_error("features: normalizer stds must be positive");
  }
  return stats;
}

void write_normalizer_json(const std::string& path, const NormalizationStats& stats) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("features: cannot write " + path);
  out << normalizer_to_json(stats) << '\n';
}

NormalizationStats read_normalizer_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("features: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return normalizer_from_json(text);
}

void write_features_csv(const std::string& path, const std::vector<FeatureVector>& fvs) {
  csv::Writer w(path);
  w.write_row({"id", "class_id", "f1", "f2", "f3", "f4"});
  for (const FeatureVector& fv : fvs) {
    w.write_row({std::to_string(fv.id), std::to_string(class_id(fv.label)),
                 csv::format_double(fv.f1_std_mag), csv::format_double(fv.f2_energy_mag),
                 csv::format_double(fv.f3_std_freq), csv::format_double(fv.f4_energy_freq)});
  }
}

std::vector<FeatureVector> read_features_csv(const std::string& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows.front().size() != 6 || rows.front()[0] != "id")
    throw std::runtime_error("features: bad feature file header in " + path);
  std::vector<FeatureVector> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 6)
      throw std::runtime_error("features: bad feature row in " + path);
    FeatureVector fv;
    fv.id = csv::parse_long(row[0]);
    fv.label = class_from_id(static_cast<int>(csv::parse_long(row[1])));
    fv.f1_std_mag = csv::parse_double(row[2]);
    fv.f2_energy_mag = csv::parse_double(row[3]);
    fv.f3_std_freq = csv::parse_double(row[4]);
    fv.f4_energy_freq = csv::parse_double(row[5]);
    out.push_back(fv);
  }
  return out;
}

}  // namespace pqd
