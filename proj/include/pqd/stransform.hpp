#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "pqd/signal.hpp"

namespace pqd {

// How the window-width rule reads the voice frequency: `hz` feeds physical
// hertz into sigma(f); `normalized` feeds cycles-per-sample, which keeps the
// default coefficients localized on short records (see README).
enum class FreqMode { hz, normalized };

std::string freq_mode_name(FreqMode m);
FreqMode freq_mode_from_name(const std::string& s);

struct WindowCoefficients {
  double a = 6.0;
  double b = 12.0;
  double c = 0.08;
};

// sigma(f) = (a f^2 + b f + c) / f; f > 0 in the units chosen by the caller.
double window_sigma(double f, const WindowCoefficients& coeffs);

// Unit-area Gaussian window of standard deviation sigma(f), evaluated at a
// time offset from the window center.
double time_window(double t_minus_tau, double f, const WindowCoefficients& coeffs);

struct STMatrix {
  std::size_t n_voices = 0;   // floor(N/2) + 1
  std::size_t n_samples = 0;  // N
  std::vector<std::complex<double>> values;  // row-major, voices x time
  std::vector<double> voice_freqs_hz;        // k * fs / N
  SamplingGrid grid;
  WindowCoefficients window;
  FreqMode freq_mode = FreqMode::hz;

  std::complex<double>& at(std::size_t voice, std::size_t col) {
    return values[voice * n_samples + col];
  }
  const std::complex<double>& at(std::size_t voice, std::size_t col) const {
    return values[voice * n_samples + col];
  }
};

// Discrete transform via the frequency-domain algorithm: spectral shift per
// voice, analytic Gaussian multiply, inverse DFT. Voice 0 is the signal mean.
// The default convention feeds sigma(f) the voice frequency in Hz; the
// normalized mode feeds it the dimensionless frequency k/N instead, which
// keeps the window width commensurate with the record and is what the
// experiment pipeline uses.
STMatrix sogw_st(const std::vector<double>& samples, const SamplingGrid& grid,
                 const WindowCoefficients& coeffs = {}, FreqMode mode = FreqMode::hz);
STMatrix sogw_st(const WaveformSignal& signal, const WindowCoefficients& coeffs = {},
                 FreqMode mode = FreqMode::hz);

// Reconstructs the input by collapsing each voice row to its spectrum value
// and inverting the DFT (conjugate extension over the upper half).
std::vector<double> inverse_check(const STMatrix& st);

// Magnitude and phase dumps: one row per time sample, one column per voice,
// header row carries the voice frequencies in Hz.
void write_st_magnitude_csv(const std::string& path, const STMatrix& st);
void write_st_phase_csv(const std::string& path, const STMatrix& st);

}  // namespace pqd
