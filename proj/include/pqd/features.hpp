#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "pqd/signal.hpp"
#include "pqd/stransform.hpp"

namespace pqd {

// Which per-column trace feeds features 3 and 4: the dominant-frequency track
// or the phase angle at the dominant voice.
enum class ContourMode { dominant_frequency, phase_angle };

std::string contour_mode_name(ContourMode m);
ContourMode contour_mode_from_name(const std::string& s);

struct FeatureVector {
  double f1_std_mag = 0.0;
  double f2_energy_mag = 0.0;
  double f3_std_freq = 0.0;
  double f4_energy_freq = 0.0;
  DisturbanceClass label = DisturbanceClass::pure_sine;
  long id = -1;

  std::array<double, 4> point() const {
    return {f1_std_mag, f2_energy_mag, f3_std_freq, f4_energy_freq};
  }
};

struct NormalizationStats {
  std::array<double, 4> means{};
  std::array<double, 4> stds{};
};

// Per-column maximum of |S| over the positive voices (k >= 1).
std::vector<double> magnitude_contour(const STMatrix& st);

// Frequency (Hz) of the voice attaining that maximum; ties break toward the
// lower voice index.
std::vector<double> frequency_contour(const STMatrix& st);

// Phase angle (radians) of the entry attaining that maximum.
std::vector<double> phase_contour(const STMatrix& st);

double population_std(const std::vector<double>& v);
double energy(const std::vector<double>& v);

// f1/f2 = std/energy of the magnitude contour; f3/f4 = std/energy of the
// secondary contour selected by the mode.
FeatureVector extract_features(const STMatrix& st, DisturbanceClass label,
                               ContourMode mode = ContourMode::dominant_frequency);

// Training-set z-score statistics. Rejects constant feature columns.
NormalizationStats fit_normalizer(const std::vector<FeatureVector>& train);
FeatureVector apply_normalizer(const NormalizationStats& stats, const FeatureVector& fv);
std::vector<FeatureVector> apply_normalizer(const NormalizationStats& stats,
                                            const std::vector<FeatureVector>& fvs);

std::string normalizer_to_json(const NormalizationStats& stats);
NormalizationStats normalizer_from_json(const std::string& text);
void write_normalizer_json(const std::string& path, const NormalizationStats& stats);
NormalizationStats read_normalizer_json(const std::string& path);

// Row schema: id,class_id,f1,f2,f3,f4.
void write_features_csv(const std::string& path, const std::vector<FeatureVector>& fvs);
std::vector<FeatureVector> read_features_csv(const std::string& path);

}  // namespace pqd
