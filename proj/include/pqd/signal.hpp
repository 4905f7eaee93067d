#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pqd {

// Power-quality disturbance classes. Numeric values are the class ids used in
// datasets, model files, and reports.
enum class DisturbanceClass : int {
  pure_sine = 1,
  sag = 2,
  sag_harmonics = 3,
  swell = 4,
  swell_harmonics = 5,
  interruption = 6,
  interruption_harmonics = 7,
  oscillatory_transient = 8,
  flicker = 9,
  flicker_harmonics = 10,
  spike = 11,
  swell_interruption = 12,
  swell_sag = 13,
  sag_interruption = 14,
  sag_harmonics_interruption = 15,
};

constexpr int kNumClasses = 15;

std::vector<DisturbanceClass> all_classes();
std::string class_name(DisturbanceClass c);
DisturbanceClass class_from_id(int id);
int class_id(DisturbanceClass c);

bool class_has_harmonics(DisturbanceClass c);
bool class_has_second_event(DisturbanceClass c);

// Uniform sampling grid, locked to an integer number of samples per
// fundamental cycle so that event windows align identically in every cycle.
struct SamplingGrid {
  double sample_rate_hz = 3200.0;
  std::size_t n_samples = 640;
  double fundamental_hz = 50.0;
  double amplitude_pu = 1.0;

  double dt() const { return 1.0 / sample_rate_hz; }
  double duration_s() const { return static_cast<double>(n_samples) * dt(); }
  double period_s() const { return 1.0 / fundamental_hz; }
  std::size_t samples_per_cycle() const;

  // Throws std::invalid_argument on non-positive rates, fewer than 16 samples
  // per cycle, fractional samples per cycle, or a record length that is not a
  // whole number of cycles.
  void validate() const;
};

// Model parameters. Only the fields relevant to a class are meaningful; the
// boolean tags say which groups are active.
struct DisturbanceParams {
  // Primary amplitude event (sag/swell/interruption depth, transient or
  // spike magnitude, flicker depth).
  double alpha = 0.0;
  double t1_s = 0.0;
  double t2_s = 0.0;

  // Secondary amplitude event for the dual-disturbance classes.
  bool has_second_event = false;
  double alpha2 = 0.0;
  double t3_s = 0.0;
  double t4_s = 0.0;

  // Harmonic mixture; h1 is derived so the weights have unit energy.
  bool has_harmonics = false;
  double h1 = 0.0;
  double h3 = 0.0;
  double h5 = 0.0;
  double h7 = 0.0;

  // Flicker modulation.
  double flicker_alpha = 0.0;
  double flicker_freq_hz = 0.0;

  // Oscillatory transient extras.
  double tau_s = 0.0;
  double osc_freq_hz = 0.0;

  // Periodic spike train.
  double spike_k = 0.0;
  double spike_t1_s = 0.0;
  double spike_t2_s = 0.0;
};

struct WaveformSignal {
  DisturbanceClass label = DisturbanceClass::pure_sine;
  SamplingGrid grid;
  DisturbanceParams params;
  std::optional<double> snr_db;  // empty = noiseless
  std::vector<double> samples;
};

// Draws one parameter set for the given class from its documented ranges.
// Replays byte-identically for a fixed (class, seed).
DisturbanceParams sample_params(DisturbanceClass c, const SamplingGrid& grid,
                                std::uint64_t seed);

// Rejects parameters that are inconsistent with the class (inactive groups
// populated, active fields out of range, misordered event times).
void validate_params(DisturbanceClass c, const DisturbanceParams& p,
                     const SamplingGrid& grid);

// Evaluates the closed-form model for the class on the grid. Noiseless.
WaveformSignal generate_signal(DisturbanceClass c, const DisturbanceParams& p,
                               const SamplingGrid& grid);

// Adds white Gaussian noise scaled to the requested SNR (dB, mean-square
// signal power). Throws on zero-power input.
WaveformSignal add_noise(const WaveformSignal& s, double snr_db,
                         std::uint64_t seed);

// Balanced dataset: n_per_class signals for each of the 15 classes, in class
// order. Parameter draws and noise draws use sub-seeds derived from
// (master_seed, class, index), so any row can be regenerated in isolation.
std::vector<WaveformSignal> generate_dataset(std::size_t n_per_class,
                                             const SamplingGrid& grid,
                                             std::optional<double> snr_db,
                                             std::uint64_t master_seed);

std::string params_to_json(DisturbanceClass c, const DisturbanceParams& p);
DisturbanceParams params_from_json(const std::string& text);

// Row schema: id,class_id,snr_db,param_json,s0..s{n-1}. snr_db is the string
// "clean" for noiseless rows. Samples round-trip exactly.
void write_dataset_csv(const std::string& path,
                       const std::vector<WaveformSignal>& signals);
std::vector<WaveformSignal> read_dataset_csv(const std::string& path,
                                             const SamplingGrid& grid);

double mean_square_power(const std::vector<double>& samples);

}  // namespace pqd
