#include "pqd/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"
#include "pqd/csv.hpp"
#include "pqd/rng.hpp"

namespace pqd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kRangeTol = 1e-9;

// Closed-left unit step: u(0) = 1.
double unit_step(double x) { return x >= 0.0 ? 1.0 : 0.0; }

double window_fn(double t, double ta, double tb) {
  return unit_step(t - ta) - unit_step(t - tb);
}

double sign_fn(double x) {
  if (x > 0.0) return 1.0;
  if (x < 0.0) return -1.0;
  return 0.0;
}

struct ClassTraits {
  bool harmonics = false;
  bool second_event = false;
  // Envelope coefficient signs (0 = no envelope event).
  double sign1 = 0.0;
  double sign2 = 0.0;
  double alpha_lo = 0.0, alpha_hi = 0.0;
  double alpha2_lo = 0.0, alpha2_hi = 0.0;
  // Event durations in fundamental periods.
  double dur_lo = 0.0, dur_hi = 0.0;
};

ClassTraits traits_for(DisturbanceClass c) {
  ClassTraits t;
  switch (c) {
    case DisturbanceClass::pure_sine:
      break;
    case DisturbanceClass::sag:
      t.sign1 = -1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.9; t.dur_lo = 1.0; t.dur_hi = 9.0;
      break;
    case DisturbanceClass::sag_harmonics:
      t.harmonics = true;
      t.sign1 = -1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.9; t.dur_lo = 1.0; t.dur_hi = 9.0;
      break;
    case DisturbanceClass::swell:
      t.sign1 = 1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.8; t.dur_lo = 1.0; t.dur_hi = 9.0;
      break;
    case DisturbanceClass::swell_harmonics:
      t.harmonics = true;
      t.sign1 = 1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.9; t.dur_lo = 1.0; t.dur_hi = 9.0;
      break;
    case DisturbanceClass::interruption:
      t.sign1 = -1.0; t.alpha_lo = 0.9; t.alpha_hi = 1.0; t.dur_lo = 1.0; t.dur_hi = 9.0;
      break;
    case DisturbanceClass::interruption_harmonics:
      t.harmonics = true;
      t.sign1 = -1.0; t.alpha_lo = 0.9; t.alpha_hi = 1.0; t.dur_lo = 1.0; t.dur_hi = 9.0;
      break;
    case DisturbanceClass::oscillatory_transient:
      t.alpha_lo = 0.1; t.alpha_hi = 0.8; t.dur_lo = 0.5; t.dur_hi = 3.0;
      break;
    case DisturbanceClass::flicker:
    case DisturbanceClass::flicker_harmonics:
      t.harmonics = c == DisturbanceClass::flicker_harmonics;
      break;
    case DisturbanceClass::spike:
      break;
    case DisturbanceClass::swell_interruption:
      t.second_event = true;
      t.sign1 = 1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.8;
      t.sign2 = -1.0; t.alpha2_lo = 0.9; t.alpha2_hi = 1.0;
      t.dur_lo = 1.0; t.dur_hi = 4.0;
      break;
    case DisturbanceClass::swell_sag:
      t.second_event = true;
      t.sign1 = 1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.8;
      t.sign2 = -1.0; t.alpha2_lo = 0.1; t.alpha2_hi = 0.8;
      t.dur_lo = 1.0; t.dur_hi = 4.0;
      break;
    case DisturbanceClass::sag_interruption:
      t.second_event = true;
      t.sign1 = -1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.8;
      t.sign2 = -1.0; t.alpha2_lo = 0.9; t.alpha2_hi = 1.0;
      t.dur_lo = 1.0; t.dur_hi = 4.0;
      break;
    case DisturbanceClass::sag_harmonics_interruption:
      t.harmonics = true; t.second_event = true;
      t.sign1 = -1.0; t.alpha_lo = 0.1; t.alpha_hi = 0.8;
      t.sign2 = -1.0; t.alpha2_lo = 0.9; t.alpha2_hi = 1.0;
      t.dur_lo = 1.0; t.dur_hi = 4.0;
      break;
  }
  return t;
}

bool has_envelope_event(DisturbanceClass c) {
  return traits_for(c).sign1 != 0.0;
}

void draw_harmonics(Rng& rng, DisturbanceParams& p) {
  p.has_harmonics = true;
  p.h3 = rng.uniform(0.05, 0.15);
  p.h5 = rng.uniform(0.05, 0.15);
  p.h7 = rng.uniform(0.05, 0.15);
  p.h1 = std::sqrt(1.0 - p.h3 * p.h3 - p.h5 * p.h5 - p.h7 * p.h7);
}

void check_range(double v, double lo, double hi, const char* what) {
  if (!(v >= lo - kRangeTol && v <= hi + kRangeTol))
    throw std::invalid_argument(std::string("signal: ") + what + " out of range");
}

// Depths accept an exact zero so degenerate events collapse to the pure sine.
void check_depth(double v, double lo, double hi, const char* what) {
  if (v == 0.0) return;
  check_range(v, lo, hi, what);
}

void check_zero(bool active, double v, const char* what) {
  if (!active && v != 0.0)
    throw std::invalid_argument(std::string("signal: ") + what +
                                " set for a class that does not use it");
}

}  // namespace

std::vector<DisturbanceClass> all_classes() {
  std::vector<DisturbanceClass> out;
  out.reserve(kNumClasses);
  for (int i = 1; i <= kNumClasses; ++i) out.push_back(static_cast<DisturbanceClass>(i));
  return out;
}

std::string class_name(DisturbanceClass c) {
  switch (c) {
    case DisturbanceClass::pure_sine: return "pure_sine";
    case DisturbanceClass::sag: return "sag";
    case DisturbanceClass::sag_harmonics: return "sag_harmonics";
    case DisturbanceClass::swell: return "swell";
    case DisturbanceClass::swell_harmonics: return "swell_harmonics";
    case DisturbanceClass::interruption: return "interruption";
    case DisturbanceClass::interruption_harmonics: return "interruption_harmonics";
    case DisturbanceClass::oscillatory_transient: return "oscillatory_transient";
    case DisturbanceClass::flicker: return "flicker";
    case DisturbanceClass::flicker_harmonics: return "flicker_harmonics";
    case DisturbanceClass::spike: return "spike";
    case DisturbanceClass::swell_interruption: return "swell_interruption";
    case DisturbanceClass::swell_sag: return "swell_sag";
    case DisturbanceClass::sag_interruption: return "sag_interruption";
    case DisturbanceClass::sag_harmonics_interruption: return "sag_harmonics_interruption";
  }
  throw std::invalid_argument("signal: unknown class");
}

DisturbanceClass class_from_id(int id) {
  if (id < 1 || id > kNumClasses)
    throw std::invalid_argument("signal: class id must be 1..15");
  return static_cast<DisturbanceClass>(id);
}

int class_id(DisturbanceClass c) { return static_cast<int>(c); }

bool class_has_harmonics(DisturbanceClass c) { return traits_for(c).harmonics; }

bool class_has_second_event(DisturbanceClass c) { return traits_for(c).second_event; }

std::size_t SamplingGrid::samples_per_cycle() const {
  double spc = sample_rate_hz / fundamental_hz;
  return static_cast<std::size_t>(std::llround(spc));
}

void SamplingGrid::validate() const {
  if (!(sample_rate_hz > 0.0) || !(fundamental_hz > 0.0) || !(amplitude_pu > 0.0))
    throw std::invalid_argument("signal: grid rates and amplitude must be positive");
  if (n_samples == 0) throw std::invalid_argument("signal: empty grid");
  double spc = sample_rate_hz / fundamental_hz;
  double spc_round = std::round(spc);
  if (std::abs(spc - spc_round) > 1e-9 || spc_round < 16.0)
    throw std::invalid_argument(
        "signal: sample rate must be an integer multiple (>= 16) of the fundamental");
  std::size_t spc_i = static_cast<std::size_t>(spc_round);
  if (n_samples % spc_i != 0)
    throw std::invalid_argument("signal: record must span whole fundamental cycles");
}

DisturbanceParams sample_params(DisturbanceClass c, const SamplingGrid& grid,
                                std::uint64_t seed) {
  grid.validate();
  Rng rng(seed);
  DisturbanceParams p;
  ClassTraits tr = traits_for(c);
  double T = grid.period_s();
  double D = grid.duration_s();

  auto draw_event = [&](double& t_lo, double& t_hi, double lo_per, double hi_per,
                        double avail_start, double avail_end) {
    double lo = lo_per * T;
    double hi = std::min(hi_per * T, avail_end - avail_start);
    if (hi < lo - kRangeTol)
      throw std::invalid_argument("signal: record too short for the class event");
    double dur = rng.uniform(lo, std::max(lo, hi));
    double start = rng.uniform(avail_start, avail_end - dur);
    t_lo = start;
    t_hi = start + dur;
  };

  switch (c) {
    case DisturbanceClass::pure_sine:
      break;
    case DisturbanceClass::sag:
    case DisturbanceClass::sag_harmonics:
    case DisturbanceClass::swell:
    case DisturbanceClass::swell_harmonics:
    case DisturbanceClass::interruption:
    case DisturbanceClass::interruption_harmonics:
    case DisturbanceClass::oscillatory_transient: {
      p.alpha = rng.uniform(tr.alpha_lo, tr.alpha_hi);
      draw_event(p.t1_s, p.t2_s, tr.dur_lo, tr.dur_hi, 0.0, D);
      if (c == DisturbanceClass::oscillatory_transient) {
        p.tau_s = rng.uniform(0.008, 0.040);
        p.osc_freq_hz = rng.uniform(300.0, 900.0);
      }
      if (tr.harmonics) draw_harmonics(rng, p);
      break;
    }
    case DisturbanceClass::flicker:
    case DisturbanceClass::flicker_harmonics:
      p.flicker_alpha = rng.uniform(0.1, 0.2);
      p.flicker_freq_hz = rng.uniform(5.0, 20.0);
      if (tr.harmonics) draw_harmonics(rng, p);
      break;
    case DisturbanceClass::spike: {
      p.spike_k = rng.uniform(0.1, 0.4);
      // Resample until at least one sample instant falls inside the spike
      // window; widths down to 0.01 T can slip between samples.
      double dt = grid.dt();
      for (;;) {
        double width = rng.uniform(0.01 * T, 0.05 * T);
        double start = rng.uniform(0.0, 0.5 * T);
        double first_sample = std::ceil(start / dt - 1e-12) * dt;
        if (first_sample < start + width) {
          p.spike_t1_s = start;
          p.spike_t2_s = start + width;
          break;
        }
      }
      break;
    }
    case DisturbanceClass::swell_interruption:
    case DisturbanceClass::swell_sag:
    case DisturbanceClass::sag_interruption:
    case DisturbanceClass::sag_harmonics_interruption: {
      p.alpha = rng.uniform(tr.alpha_lo, tr.alpha_hi);
      p.has_second_event = true;
      p.alpha2 = rng.uniform(tr.alpha2_lo, tr.alpha2_hi);
      if (D < 2.0 * tr.dur_lo * T - kRangeTol)
        throw std::invalid_argument("signal: record too short for two events");
      draw_event(p.t1_s, p.t2_s, tr.dur_lo, tr.dur_hi, 0.0, D - tr.dur_lo * T);
      draw_event(p.t3_s, p.t4_s, tr.dur_lo, tr.dur_hi, p.t2_s, D);
      if (tr.harmonics) draw_harmonics(rng, p);
      break;
    }
  }
  return p;
}

void validate_params(DisturbanceClass c, const DisturbanceParams& p,
                     const SamplingGrid& grid) {
  grid.validate();
  ClassTraits tr = traits_for(c);
  double T = grid.period_s();
  double D = grid.duration_s();

  if (has_envelope_event(c) || c == DisturbanceClass::oscillatory_transient) {
    check_depth(p.alpha, tr.alpha_lo, tr.alpha_hi, "alpha");
    if (!(p.t1_s >= -kRangeTol && p.t1_s < p.t2_s && p.t2_s <= D + kRangeTol))
      throw std::invalid_argument("signal: event window outside the record");
    check_range(p.t2_s - p.t1_s, tr.dur_lo * T, tr.dur_hi * T, "event duration");
  } else {
    // Zero-depth sag degenerating to a pure sine is allowed only where the
    // class itself has no envelope event.
    check_zero(false, p.alpha, "alpha");
    check_zero(false, p.t1_s, "t1");
    check_zero(false, p.t2_s, "t2");
  }

  if (tr.second_event != p.has_second_event)
    throw std::invalid_argument("signal: second-event tag mismatched with class");
  if (tr.second_event) {
    check_depth(p.alpha2, tr.alpha2_lo, tr.alpha2_hi, "alpha2");
    if (!(p.t3_s >= p.t2_s - kRangeTol && p.t3_s < p.t4_s && p.t4_s <= D + kRangeTol))
      throw std::invalid_argument("signal: second event window misordered");
    check_range(p.t4_s - p.t3_s, tr.dur_lo * T, tr.dur_hi * T, "second event duration");
  } else {
    check_zero(false, p.alpha2, "alpha2");
    check_zero(false, p.t3_s, "t3");
    check_zero(false, p.t4_s, "t4");
  }

  if (tr.harmonics != p.has_harmonics)
    throw std::invalid_argument("signal: harmonics tag mismatched with class");
  if (tr.harmonics) {
    check_range(p.h3, 0.05, 0.15, "h3");
    check_range(p.h5, 0.05, 0.15, "h5");
    check_range(p.h7, 0.05, 0.15, "h7");
    double sum = p.h1 * p.h1 + p.h3 * p.h3 + p.h5 * p.h5 + p.h7 * p.h7;
    if (!(p.h1 > 0.0) || std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("signal: harmonic amplitudes must have unit energy");
  } else {
    check_zero(false, p.h1, "h1");
    check_zero(false, p.h3, "h3");
    check_zero(false, p.h5, "h5");
    check_zero(false, p.h7, "h7");
  }

  bool flick = c == DisturbanceClass::flicker || c == DisturbanceClass::flicker_harmonics;
  if (flick) {
    check_depth(p.flicker_alpha, 0.1, 0.2, "flicker alpha");
    check_range(p.flicker_freq_hz, 5.0, 20.0, "flicker frequency");
  } else {
    check_zero(false, p.flicker_alpha, "flicker alpha");
    check_zero(false, p.flicker_freq_hz, "flicker frequency");
  }

  if (c == DisturbanceClass::oscillatory_transient) {
    check_range(p.tau_s, 0.008, 0.040, "tau");
    check_range(p.osc_freq_hz, 300.0, 900.0, "oscillation frequency");
  } else {
    check_zero(false, p.tau_s, "tau");
    check_zero(false, p.osc_freq_hz, "oscillation frequency");
  }

  if (c == DisturbanceClass::spike) {
    check_depth(p.spike_k, 0.1, 0.4, "spike magnitude");
    check_range(p.spike_t1_s, 0.0, 0.5 * T, "spike start");
    check_range(p.spike_t2_s - p.spike_t1_s, 0.01 * T, 0.05 * T, "spike width");
  } else {
    check_zero(false, p.spike_k, "spike magnitude");
    check_zero(false, p.spike_t1_s, "spike start");
    check_zero(false, p.spike_t2_s, "spike end");
  }
}

WaveformSignal generate_signal(DisturbanceClass c, const DisturbanceParams& p,
                               const SamplingGrid& grid) {
  validate_params(c, p, grid);
  ClassTraits tr = traits_for(c);
  double omega = kTwoPi * grid.fundamental_hz;
  double T = grid.period_s();
  bool flick = c == DisturbanceClass::flicker || c == DisturbanceClass::flicker_harmonics;

  WaveformSignal out;
  out.label = c;
  out.grid = grid;
  out.params = p;
  out.samples.resize(grid.n_samples);

  for (std::size_t i = 0; i < grid.n_samples; ++i) {
    double t = static_cast<double>(i) * grid.dt();
    double fundamental = std::sin(omega * t);
    double v;
    if (c == DisturbanceClass::oscillatory_transient) {
      double burst = p.alpha * std::exp(-(t - p.t1_s) / p.tau_s) *
                     std::sin(kTwoPi * p.osc_freq_hz * (t - p.t1_s)) *
                     window_fn(t, p.t1_s, p.t2_s);
      v = fundamental + burst;
    } else if (c == DisturbanceClass::spike) {
      double train = 0.0;
      for (int n = 0; n < 10; ++n) {
        double shift = T * static_cast<double>(n);
        train += p.spike_k * window_fn(t, p.spike_t1_s + shift, p.spike_t2_s + shift);
      }
      v = fundamental + sign_fn(fundamental) * train;
    } else {
      double env = 1.0;
      if (tr.sign1 != 0.0) env += tr.sign1 * p.alpha * window_fn(t, p.t1_s, p.t2_s);
      if (tr.second_event) env += tr.sign2 * p.alpha2 * window_fn(t, p.t3_s, p.t4_s);
      if (flick) env *= 1.0 + p.flicker_alpha * std::sin(kTwoPi * p.flicker_freq_hz * t);
      v = env * fundamental;
      if (tr.harmonics) {
        double hsum = p.h1 * std::sin(omega * t) + p.h3 * std::sin(3.0 * omega * t) +
                      p.h5 * std::sin(5.0 * omega * t) + p.h7 * std::sin(7.0 * omega * t);
        v *= hsum;
      }
    }
    out.samples[i] = grid.amplitude_pu * v;
  }
  return out;
}

double mean_square_power(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples) acc += s * s;
  return acc / static_cast<double>(samples.size());
}

WaveformSignal add_noise(const WaveformSignal& s, double snr_db, std::uint64_t seed) {
  if (!std::isfinite(snr_db)) throw std::invalid_argument("signal: snr must be finite");
  double power = mean_square_power(s.samples);
  if (power <= 0.0)
    throw std::invalid_argument("signal: zero-power input, snr undefined");
  double noise_sd = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Rng rng(seed);
  WaveformSignal out = s;
  out.snr_db = snr_db;
  for (double& v : out.samples) v += rng.normal(0.0, noise_sd);
  return out;
}

std::vector<WaveformSignal> generate_dataset(std::size_t n_per_class,
                                             const SamplingGrid& grid,
                                             std::optional<double> snr_db,
                                             std::uint64_t master_seed) {
  if (n_per_class == 0) throw std::invalid_argument("signal: n_per_class must be >= 1");
  grid.validate();
  std::vector<WaveformSignal> out;
  out.reserve(n_per_class * static_cast<std::size_t>(kNumClasses));
  for (DisturbanceClass c : all_classes()) {
    for (std::size_t i = 0; i < n_per_class; ++i) {
      std::uint64_t param_seed =
          mix_seed(master_seed, static_cast<std::uint64_t>(class_id(c)), i, 0);
      DisturbanceParams p = sample_params(c, grid, param_seed);
      WaveformSignal sig = generate_signal(c, p, grid);
      if (snr_db.has_value()) {
        std::uint64_t noise_seed =
            mix_seed(master_seed, static_cast<std::uint64_t>(class_id(c)), i, 1);
        sig = add_noise(sig, *snr_db, noise_seed);
      }
      out.push_back(std::move(sig));
    }
  }
  return out;
}

std::string params_to_json(DisturbanceClass c, const DisturbanceParams& p) {
  nlohmann::json j = nlohmann::json::object();
  ClassTraits tr = traits_for(c);
  if (has_envelope_event(c) || c == DisturbanceClass::oscillatory_transient) {
    j["alpha"] = p.alpha;
    j["t1"] = p.t1_s;
    j["t2"] = p.t2_s;
  }
  if (tr.second_event) {
    j["alpha2"] = p.alpha2;
    j["t3"] = p.t3_s;
    j["t4"] = p.t4_s;
  }
  if (tr.harmonics) {
    j["h1"] = p.h1;
    j["h3"] = p.h3;
    j["h5"] = p.h5;
    j["h7"] = p.h7;
  }
  if (c == DisturbanceClass::flicker || c == DisturbanceClass::flicker_harmonics) {
    j["alpha_f"] = p.flicker_alpha;
    j["beta_hz"] = p.flicker_freq_hz;
  }
  if (c == DisturbanceClass::oscillatory_transient) {
    j["tau"] = p.tau_s;
    j["fn"] = p.osc_freq_hz;
  }
  if (c == DisturbanceClass::spike) {
    j["k"] = p.spike_k;
    j["spike_t1"] = p.spike_t1_s;
    j["spike_t2"] = p.spike_t2_s;
  }
  return j.dump();
}

DisturbanceParams params_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DisturbanceParams p;
  auto get = [&](const char* key, double& field) {
    if (j.contains(key)) field = j.at(key).get<double>();
  };
  get("alpha", p.alpha);
  get("t1", p.t1_s);
  get("t2", p.t2_s);
  get("alpha2", p.alpha2);
  get("t3", p.t3_s);
  get("t4", p.t4_s);
  get("h1", p.h1);
  get("h3", p.h3);
  get("h5", p.h5);
  get("h7", p.h7);
  get("alpha_f", p.flicker_alpha);
  get("beta_hz", p.flicker_freq_hz);
  get("tau", p.tau_s);
  get("fn", p.osc_freq_hz);
  get("k", p.spike_k);
  get("spike_t1", p.spike_t1_s);
  get("spike_t2", p.spike_t2_s);
  p.has_harmonics = j.contains("h1");
  p.has_second_event = j.contains("alpha2");
  return p;
}

void write_dataset_csv(const std::string& path,
                       const std::vector<WaveformSignal>& signals) {
  if (signals.empty()) throw std::invalid_argument("signal: empty dataset");
  std::size_t n = signals.front().samples.size();
  csv::Writer w(path);
  std::vector<std::string> header = {"id", "class_id", "snr_db", "param_json"};
  for (std::size_t i = 0; i < n; ++i) header.push_back("s" + std::to_string(i));
  w.write_row(header);
  for (std::size_t id = 0; id < signals.size(); ++id) {
    const WaveformSignal& s = signals[id];
    if (s.samples.size() != n)
      throw std::invalid_argument("signal: inconsistent sample counts in dataset");
    std::vector<std::string> row;
    row.reserve(n + 4);
    row.push_back(std::to_string(id));
    row.push_back(std::to_string(class_id(s.label)));
    row.push_back(s.snr_db ? csv::format_double(*s.snr_db) : "clean");
    row.push_back(params_to_json(s.label, s.params));
    for (double v : s.samples) row.push_back(csv::format_double(v));
    w.write_row(row);
  }
}

std::vector<WaveformSignal> read_dataset_csv(const std::string& path,
                                             const SamplingGrid& grid) {
  grid.validate();
  auto rows = csv::read_file(path);
  if (rows.size() < 2) throw std::runtime_error("signal: dataset file has no rows");
  const auto& header = rows.front();
  if (header.size() != grid.n_samples + 4 || header[0] != "id")
    throw std::runtime_error("signal: dataset header does not match the grid");
  std::vector<WaveformSignal> out;
  out.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != grid.n_samples + 4)
      throw std::runtime_error("signal: dataset row has wrong field count");
    WaveformSignal s;
    s.label = class_from_id(static_cast<int>(csv::parse_long(row[1])));
    s.grid = grid;
    if (row[2] != "clean") s.snr_db = csv::parse_double(row[2]);
    s.params = params_from_json(row[3]);
    s.samples.resize(grid.n_samples);
    for (std::size_t i = 0; i < grid.n_samples; ++i)
      s.samples[i] = csv::parse_double(row[i + 4]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pqd
