#include "spinex/lpc.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace spinex {

namespace {

// FFTW plan creation/destruction is not thread safe; execution is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct Fft2 {
  int h, w;
  std::vector<std::complex<double>> buf;
  fftw_plan fwd, inv;

  Fft2(int h_, int w_) : h(h_), w(w_), buf(static_cast<std::size_t>(h_) * w_) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    fwd = fftw_plan_dft_2d(h, w, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    inv = fftw_plan_dft_2d(h, w, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(inv);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;
};

constexpr double kMinWavelength = 6.0; // finest-scale wavelength in pixels
constexpr double kSigmaOnF = 0.65;     // radial log-Gabor bandwidth
constexpr double kThetaSpread = 1.5;   // orientation sigma = pi/M / kThetaSpread

} // namespace

void LpcParams::validate() const {
  if (n_scales < 2) throw std::invalid_argument("lpc: n_scales must be >= 2");
  if (n_orients < 1) throw std::invalid_argument("lpc: n_orients must be >= 1");
  if (!(stability_c > 0.0)) throw std::invalid_argument("lpc: stability_c must be > 0");
  if (!(rank_decay > 0.0)) throw std::invalid_argument("lpc: rank_decay must be > 0");
}

double lpc_si(const Grid& img, const LpcParams& p) {
  p.validate();
  if (p.n_scales < 3) {
    throw std::invalid_argument("lpc: the phase-prediction relation needs 3 scales");
  }
  if (img.rows() < 64 || img.cols() < 64) {
    throw std::invalid_argument("lpc: image must be at least 64x64");
  }

  const int h = grid_height(img), w = grid_width(img);
  const std::size_t n = static_cast<std::size_t>(h) * w;

  Fft2 fft(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) fft.buf[static_cast<std::size_t>(y) * w + x] = img(y, x) * 255.0;
  fftw_execute(fft.fwd);
  const std::vector<std::complex<double>> spectrum = fft.buf;

  // Precompute frequency radius/angle per bin.
  std::vector<double> freq(n), angle(n);
  for (int y = 0; y < h; ++y) {
    const double fy = (y <= h / 2 ? y : y - h) / static_cast<double>(h);
    for (int x = 0; x < w; ++x) {
      const double fx = (x <= w / 2 ? x : x - w) / static_cast<double>(w);
      freq[static_cast<std::size_t>(y) * w + x] = std::hypot(fx, fy);
      angle[static_cast<std::size_t>(y) * w + x] = std::atan2(fy, fx);
    }
  }

  const double log_sigma = std::log(kSigmaOnF);
  const double theta_sigma = M_PI / p.n_orients / kThetaSpread;

  // Responses of the first three scales for every orientation.
  std::vector<std::vector<std::complex<double>>> resp(
      3, std::vector<std::complex<double>>(n));

  std::vector<double> strength(n, 0.0);
  std::vector<double> weight_acc(n, 0.0);
  std::vector<double> coh_acc(n, 0.0);

  for (int j = 0; j < p.n_orients; ++j) {
    const double theta_j = j * M_PI / p.n_orients;
    for (int s = 0; s < 3; ++s) {
      const double f0 = 1.0 / (kMinWavelength * std::pow(2.0, s)); // ratio 1 : 1/2 : 1/4
      for (std::size_t i = 0; i < n; ++i) {
        double g = 0.0;
        if (freq[i] > 0.0) {
          const double lr = std::log(freq[i] / f0);
          double dt = std::fmod(std::abs(angle[i] - theta_j), M_PI);
          dt = std::min(dt, M_PI - dt); // orientation is pi-periodic
          g = std::exp(-lr * lr / (2.0 * log_sigma * log_sigma)) *
              std::exp(-dt * dt / (2.0 * theta_sigma * theta_sigma));
        }
        fft.buf[i] = spectrum[i] * g;
      }
      fftw_execute(fft.inv);
      const double inv_n = 1.0 / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) resp[s][i] = fft.buf[i] * inv_n;
    }

    // Phase coherence: residual phi1 - 3*phi2 + 2*phi3 vanishes for a
    // linear phase profile across center frequencies in ratio 1 : 1/2 : 1/4.
    for (std::size_t i = 0; i < n; ++i) {
      const std::complex<double> c1 = resp[0][i];
      const std::complex<double> c2 = resp[1][i];
      const std::complex<double> c3 = resp[2][i];
      const std::complex<double> z = c1 * std::conj(c2) * std::conj(c2) * std::conj(c2) * c3 * c3;
      const double mag = std::abs(z);
      const double coherence = mag > 0.0 ? z.real() / mag : 0.0;
      const double m1 = std::abs(c1);
      coh_acc[i] += m1 * coherence;
      weight_acc[i] += m1;
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    strength[i] = coh_acc[i] / (weight_acc[i] + p.stability_c);
  }

  // Rank-ordered pooling: the sharpest (largest) strengths dominate, with
  // weights decaying exponentially down the ranking.
  std::sort(strength.begin(), strength.end(), std::greater<double>());
  double num = 0.0, den = 0.0;
  const double k_total = static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    const double eta = std::exp(-(static_cast<double>(r) / k_total) / p.rank_decay);
    num += eta * strength[r];
    den += eta;
    if (eta < 1e-12) break; // remaining weights are negligible
  }
  return num / den;
}

} // namespace spinex
