#include "pqd/stransform.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "pqd/csv.hpp"

namespace pqd {

namespace {

constexpr double kTwoPiSq = 19.739208802178717237668981999752;  // 2*pi^2
constexpr double kSqrtTwoPi = 2.5066282746310005024157652848110;

// FFTW planning is not thread-safe; execution of independent plans is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct PlanGuard {
  fftw_plan plan = nullptr;
  PlanGuard(int n, fftw_complex* in, fftw_complex* out, int sign) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plan = fftw_plan_dft_1d(n, in, out, sign, FFTW_ESTIMATE);
    if (!plan) throw std::runtime_error("stransform: fftw plan creation failed");
  }
  ~PlanGuard() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(plan);
  }
  PlanGuard(const PlanGuard&) = delete;
  PlanGuard& operator=(const PlanGuard&) = delete;
};

struct ComplexBuffer {
  fftw_complex* data = nullptr;
  explicit ComplexBuffer(std::size_t n) {
    data = fftw_alloc_complex(n);
    if (!data) throw std::bad_alloc();
  }
  ~ComplexBuffer() { fftw_free(data); }
  ComplexBuffer(const ComplexBuffer&) = delete;
  ComplexBuffer& operator=(const ComplexBuffer&) = delete;
};

// Window standard deviation in samples for voice k of an N-point record.
double sigma_samples(std::size_t k, std::size_t n, const SamplingGrid& grid,
                     const WindowCoefficients& coeffs, FreqMode mode) {
  double nn = static_cast<double>(n);
  double kk = static_cast<double>(k);
  if (mode == FreqMode::hz) {
    double f_hz = kk * grid.sample_rate_hz / nn;
    return window_sigma(f_hz, coeffs) * grid.sample_rate_hz;
  }
  return window_sigma(kk / nn, coeffs);
}

}  // namespace

std::string freq_mode_name(FreqMode m) {
  return m == FreqMode::hz ? "hz" : "normalized";
}

FreqMode freq_mode_from_name(const std::string& s) {
  if (s == "hz") return FreqMode::hz;
  if (s == "normalized") return FreqMode::normalized;
  throw std::invalid_argument("stransform: unknown frequency mode '" + s + "'");
}

double window_sigma(double f, const WindowCoefficients& coeffs) {
  if (!(f > 0.0)) throw std::invalid_argument("stransform: sigma needs f > 0");
  double sigma = (coeffs.a * f * f + coeffs.b * f + coeffs.c) / f;
  if (!(sigma > 0.0))
    throw std::invalid_argument("stransform: window coefficients give sigma <= 0");
  return sigma;
}

double time_window(double t_minus_tau, double f, const WindowCoefficients& coeffs) {
  double sigma = window_sigma(f, coeffs);
  double z = t_minus_tau / sigma;
  return std::exp(-0.5 * z * z) / (sigma * kSqrtTwoPi);
}

STMatrix sogw_st(const std::vector<double>& samples, const SamplingGrid& grid,
                 const WindowCoefficients& coeffs, FreqMode mode) {
  std::size_t n = samples.size();
  if (n == 0) throw std::invalid_argument("stransform: empty signal");
  if (n != grid.n_samples)
    throw std::invalid_argument("stransform: sample count does not match the grid");

  STMatrix st;
  st.n_samples = n;
  st.n_voices = n / 2 + 1;
  st.grid = grid;
  st.window = coeffs;
  st.freq_mode = mode;
  st.values.assign(st.n_voices * n, {0.0, 0.0});
  st.voice_freqs_hz.resize(st.n_voices);
  for (std::size_t k = 0; k < st.n_voices; ++k)
    st.voice_freqs_hz[k] =
        static_cast<double>(k) * grid.sample_rate_hz / static_cast<double>(n);

  ComplexBuffer in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    in.data[i][0] = samples[i];
    in.data[i][1] = 0.0;
  }
  std::vector<std::complex<double>> spectrum(n);
  {
    PlanGuard fwd(static_cast<int>(n), in.data, out.data, FFTW_FORWARD);
    fftw_execute(fwd.plan);
    for (std::size_t i = 0; i < n; ++i) spectrum[i] = {out.data[i][0], out.data[i][1]};
  }

  double mean = spectrum[0].real() / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) st.at(0, j) = {mean, 0.0};

  // Signed bin frequencies in cycles/sample, squared, shared by all voices.
  std::vector<double> nu_sq(n);
  for (std::size_t m = 0; m < n; ++m) {
    double signed_m = m <= n / 2 ? static_cast<double>(m)
                                 : static_cast<double>(m) - static_cast<double>(n);
    double nu = signed_m / static_cast<double>(n);
    nu_sq[m] = nu * nu;
  }

  PlanGuard inv(static_cast<int>(n), in.data, out.data, FFTW_BACKWARD);
  double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t k = 1; k < st.n_voices; ++k) {
    double sig = sigma_samples(k, n, grid, coeffs, mode);
    double sig_sq = sig * sig;
    for (std::size_t m = 0; m < n; ++m) {
      std::complex<double> v = spectrum[(m + k) % n] * std::exp(-kTwoPiSq * nu_sq[m] * sig_sq);
      in.data[m][0] = v.real();
      in.data[m][1] = v.imag();
    }
    fftw_execute(inv.plan);
    for (std::size_t j = 0; j < n; ++j)
      st.at(k, j) = {out.data[j][0] * inv_n, out.data[j][1] * inv_n};
  }
  return st;
}

STMatrix sogw_st(const WaveformSignal& signal, const WindowCoefficients& coeffs,
                 FreqMode mode) {
  return sogw_st(signal.samples, signal.grid, coeffs, mode);
}

std::vector<double> inverse_check(const STMatrix& st) {
  std::size_t n = st.n_samples;
  std::vector<std::complex<double>> spectrum(n, {0.0, 0.0});
  for (std::size_t k = 0; k < st.n_voices; ++k) {
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) sum += st.at(k, j);
    if (k == 0) {
      spectrum[0] = sum;  // mean replicated n times is already X[0]
    } else {
      spectrum[k] = sum;
      if (k != n - k) spectrum[n - k] = std::conj(sum);
    }
  }
  ComplexBuffer in(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    in.data[i][0] = spectrum[i].real();
    in.data[i][1] = spectrum[i].imag();
  }
  PlanGuard inv(static_cast<int>(n), in.data, out.data, FFTW_BACKWARD);
  fftw_execute(inv.plan);
  std::vector<double> recon(n);
  for (std::size_t i = 0; i < n; ++i) recon[i] = out.data[i][0] / static_cast<double>(n);
  return recon;
}

namespace {

void write_st_csv(const std::string& path, const STMatrix& st, bool magnitude) {
  csv::Writer w(path);
  std::vector<std::string> header;
  header.reserve(st.n_voices + 1);
  header.push_back("t_s");
  for (double f : st.voice_freqs_hz) header.push_back(csv::format_double(f));
  w.write_row(header);
  for (std::size_t j = 0; j < st.n_samples; ++j) {
    std::vector<std::string> row;
    row.reserve(st.n_voices + 1);
    row.push_back(csv::format_double(static_cast<double>(j) * st.grid.dt()));
    for (std::size_t k = 0; k < st.n_voices; ++k) {
      const std::complex<double>& v = st.at(k, j);
      row.push_back(csv::format_double(magnitude ? std::abs(v) : std::arg(v)));
    }
    w.write_row(row);
  }
}

}  // namespace

void write_st_magnitude_csv(const std::string& path, const STMatrix& st) {
  write_st_csv(path, st, true);
}

void write_st_phase_csv(const std::string& path, const STMatrix& st) {
  write_st_csv(path, st, false);
}

}  // namespace pqd
