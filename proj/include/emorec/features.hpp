// emorec/features.hpp

// Copyright 2026  The emorec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

/*  Frame-level features.

    MFCC stack: hamming window -> |FFT|^2 -> triangular mel pooling -> log
    (optionally raised to a power) -> orthonormal DCT-II -> sinusoidal lifter
    -> per-utterance mean normalization -> regression deltas and
    accelerations, giving 3 * num_ceps columns per frame.

    Prosody: derivatives of frame log energy and of its low-passed contour,
    normalized autocorrelation pitch (peak value, lag) with derivatives, and
    the median-filtered, low-passed lag contour.  */

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/audio_io.hpp"
#include "emorec/error.hpp"
#include "emorec/matrix.hpp"

namespace emorec {

/// Floor applied before every log of an energy (full scale is 1.0).
inline constexpr double kEnergyFloor = 1e-10;

// ---------------------------------------------------------------------------
// Windowing and spectra

/// Symmetric Hamming window, w[n] = 0.54 - 0.46 cos(2 pi n / (len - 1)).
inline std::vector<double> hamming_window(std::size_t length) {
  if (length < 2) fail(ErrorCode::InvalidArgument, "window length must be at least 2");
  std::vector<double> w(length);
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / denom);
  // cos() is not exactly symmetric in floating point; mirror the first half.
  for (std::size_t n = 0; n < length / 2; ++n) w[length - 1 - n] = w[n];
  return w;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

/// Real-input FFT of a fixed size returning |X_k|^2 for k = 0..N/2.
/// Owns an FFTW plan; one instance per thread.
class PowerSpectrum {
 public:
  explicit PowerSpectrum(std::size_t fft_size) : size_(fft_size) {
    if (!is_power_of_two(fft_size) || fft_size < 2)
      fail(ErrorCode::InvalidArgument, "fft_size must be a power of two >= 2");
    in_ = fftw_alloc_real(size_);
    out_ = fftw_alloc_complex(size_ / 2 + 1);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(size_), in_, out_, FFTW_ESTIMATE);
  }
  ~PowerSpectrum() {
    if (plan_ != nullptr) {
      std::lock_guard<std::mutex> lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  PowerSpectrum(const PowerSpectrum&) = delete;
  PowerSpectrum& operator=(const PowerSpectrum&) = delete;

  std::size_t fft_size() const noexcept { return size_; }
  std::size_t num_bins() const noexcept { return size_ / 2 + 1; }

  std::vector<double> operator()(std::span<const double> frame) {
    if (frame.size() > size_)
      fail(ErrorCode::InvalidArgument, "frame longer than fft_size");
    std::copy(frame.begin(), frame.end(), in_);
    std::fill(in_ + frame.size(), in_ + size_, 0.0);
    fftw_execute(plan_);
    std::vector<double> power(num_bins());
    for (std::size_t k = 0; k < power.size(); ++k)
      power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
    return power;
  }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::size_t size_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

inline std::vector<double> power_spectrum(std::span<const double> frame, std::size_t fft_size) {
  PowerSpectrum ps(fft_size);
  return ps(frame);
}

// ---------------------------------------------------------------------------
// Mel filterbank

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

struct MelFilterbank {
  std::size_t num_filters = 0;
  std::size_t fft_size = 0;
  int sample_rate = 0;
  double fmin = 0.0;
  double fmax = 0.0;
  std::vector<std::size_t> edge_bins;  // num_filters + 2 entries
  Matrix weights;                      // num_filters x (fft_size/2 + 1)

  std::size_t num_bins() const noexcept { return fft_size / 2 + 1; }
  std::size_t center_bin(std::size_t i) const { return edge_bins[i + 1]; }
};

/// Triangular filters whose num_filters + 2 edges are equally spaced in mel
/// between mel(fmin) and mel(fmax). Edge frequency f maps to FFT bin
/// floor((fft_size + 1) * f / sample_rate); filter i rises linearly from
/// edge i to 1 at edge i+1 and falls back to 0 at edge i+2.
inline MelFilterbank build_mel_filterbank(std::size_t num_filters, std::size_t fft_size,
                                          int sample_rate, double fmin, double fmax) {
  if (num_filters < 1) fail(ErrorCode::InvalidConfig, "num_filters must be >= 1");
  if (!is_power_of_two(fft_size)) fail(ErrorCode::InvalidConfig, "fft_size must be a power of two");
  if (sample_rate <= 0) fail(ErrorCode::InvalidConfig, "sample_rate must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0))
    fail(ErrorCode::InvalidConfig, "need 0 <= fmin < fmax <= sample_rate / 2");

  MelFilterbank bank;
  bank.num_filters = num_filters;
  bank.fft_size = fft_size;
  bank.sample_rate = sample_rate;
  bank.fmin = fmin;
  bank.fmax = fmax;

  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  const std::size_t num_bins = bank.num_bins();
  bank.edge_bins.resize(num_filters + 2);
  for (std::size_t i = 0; i < num_filters + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                    static_cast<double>(num_filters + 1);
    const double hz = mel_to_hz(mel);
    auto bin = static_cast<std::size_t>(std::floor(static_cast<double>(fft_size + 1) * hz / sample_rate));
    bank.edge_bins[i] = std::min(bin, num_bins - 1);
  }
  for (std::size_t i = 0; i + 1 < bank.edge_bins.size(); ++i) {
    if (bank.edge_bins[i] == bank.edge_bins[i + 1])
      fail(ErrorCode::DegenerateBand,
           "mel edges " + std::to_string(i) + " and " + std::to_string(i + 1) +
               " share FFT bin " + std::to_string(bank.edge_bins[i]) + "; fft_size " +
               std::to_string(fft_size) + " is too small for " + std::to_string(num_filters) +
               " filters");
  }

  bank.weights = Matrix(num_filters, num_bins);
  for (std::size_t i = 0; i < num_filters; ++i) {
    const double lo = static_cast<double>(bank.edge_bins[i]);
    const double mid = static_cast<double>(bank.edge_bins[i + 1]);
    const double hi = static_cast<double>(bank.edge_bins[i + 2]);
    for (std::size_t k = bank.edge_bins[i]; k <= bank.edge_bins[i + 2]; ++k) {
      const double kk = static_cast<double>(k);
      bank.weights(i, k) = kk <= mid ? (kk - lo) / (mid - lo) : (hi - kk) / (hi - mid);
    }
  }
  return bank;
}

// ---------------------------------------------------------------------------
// Cepstra

struct MfccConfig {
  std::size_t num_ceps = 13;
  std::size_t num_filters = 26;
  std::size_t lifter_len = 22;     // 0 disables liftering
  double log_power_exponent = 1.0; // >= 1; values of 2-3 damp low-energy bands
  bool include_c0 = false;         // false: c0 is replaced by log frame energy
  std::size_t delta_window = 2;
  bool cmn = true;
  double low_freq = 0.0;
  double high_freq = 0.0;          // 0 means sample_rate / 2

  void validate() const {
    if (num_ceps < 1) fail(ErrorCode::InvalidConfig, "num_ceps must be >= 1");
    if (num_filters < 1) fail(ErrorCode::InvalidConfig, "num_filters must be >= 1");
    if (num_ceps > num_filters)
      fail(ErrorCode::InvalidConfig, "num_ceps must not exceed num_filters");
    if (!(log_power_exponent >= 1.0))
      fail(ErrorCode::InvalidConfig, "log_power_exponent must be >= 1");
    if (delta_window < 1) fail(ErrorCode::InvalidConfig, "delta_window must be >= 1");
    if (low_freq < 0.0 || high_freq < 0.0)
      fail(ErrorCode::InvalidConfig, "filterbank frequencies must be non-negative");
  }

  friend bool operator==(const MfccConfig&, const MfccConfig&) = default;
};

/// Orthonormal DCT-II: c_n = s_n * sum_i x_i cos(pi n (i + 1/2) / N),
/// s_0 = sqrt(1/N), s_n = sqrt(2/N). Returns the first `keep` coefficients.
inline std::vector<double> dct_ii(std::span<const double> x, std::size_t keep) {
  const std::size_t n_in = x.size();
  keep = std::min(keep, n_in);
  std::vector<double> c(keep, 0.0);
  const double nn = static_cast<double>(n_in);
  for (std::size_t n = 0; n < keep; ++n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i)
      acc += x[i] * std::cos(std::numbers::pi * static_cast<double>(n) *
                             (static_cast<double>(i) + 0.5) / nn);
    c[n] = acc * std::sqrt((n == 0 ? 1.0 : 2.0) / nn);
  }
  return c;
}

inline std::vector<double> dct_ii(std::span<const double> x) { return dct_ii(x, x.size()); }

/// Transpose of the orthonormal DCT-II (i.e. its inverse).
inline std::vector<double> inverse_dct_ii(std::span<const double> c) {
  const std::size_t n = c.size();
  const double nn = static_cast<double>(n);
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k)
      acc += c[k] * std::sqrt((k == 0 ? 1.0 : 2.0) / nn) *
             std::cos(std::numbers::pi * static_cast<double>(k) * (static_cast<double>(i) + 0.5) / nn);
    x[i] = acc;
  }
  return x;
}

/// Sinusoidal lifter: c_n *= 1 + (L/2) sin(pi n / L).
inline void apply_lifter(std::span<double> ceps, std::size_t lifter_len) {
  if (lifter_len == 0) return;
  const double len = static_cast<double>(lifter_len);
  for (std::size_t n = 0; n < ceps.size(); ++n)
    ceps[n] *= 1.0 + 0.5 * len * std::sin(std::numbers::pi * static_cast<double>(n) / len);
}

/// Cepstra of one frame's power spectrum.
inline std::vector<double> mfcc_frame(std::span<const double> power_spec, const MelFilterbank& bank,
                                      const MfccConfig& cfg) {
  if (power_spec.size() != bank.num_bins())
    fail(ErrorCode::DimensionMismatch, "power spectrum has " + std::to_string(power_spec.size()) +
                                           " bins, filterbank expects " +
                                           std::to_string(bank.num_bins()));
  std::vector<double> log_mel(bank.num_filters);
  for (std::size_t i = 0; i < bank.num_filters; ++i) {
    double e = 0.0;
    // Only the triangle's support is nonzero.
    for (std::size_t k = bank.edge_bins[i]; k <= bank.edge_bins[i + 2]; ++k)
      e += bank.weights(i, k) * power_spec[k];
    double m = std::log(std::max(e, kEnergyFloor));
    if (cfg.log_power_exponent > 1.0)
      m = std::copysign(std::pow(std::abs(m), cfg.log_power_exponent), m);
    log_mel[i] = m;
  }
  auto ceps = dct_ii(log_mel, cfg.num_ceps);
  apply_lifter(ceps, cfg.lifter_len);
  return ceps;
}

/// Regression deltas over +-window frames with edge replication:
/// d_t = sum_{k=1..W} k (c_{t+k} - c_{t-k}) / (2 sum_{k=1..W} k^2).
inline Matrix delta(const Matrix& seq, std::size_t window) {
  if (window < 1) fail(ErrorCode::InvalidArgument, "delta window must be >= 1");
  const std::size_t frames = seq.rows();
  const std::size_t dims = seq.cols();
  Matrix out(frames, dims);
  if (frames == 0) return out;
  double norm = 0.0;
  for (std::size_t k = 1; k <= window; ++k) norm += static_cast<double>(k * k);
  norm *= 2.0;
  const auto last = static_cast<std::ptrdiff_t>(frames) - 1;
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 1; k <= window; ++k) {
      const auto ti = static_cast<std::ptrdiff_t>(t);
      const auto kk = static_cast<std::ptrdiff_t>(k);
      const auto fwd = static_cast<std::size_t>(std::min(ti + kk, last));
      const auto bwd = static_cast<std::size_t>(std::max<std::ptrdiff_t>(ti - kk, 0));
      for (std::size_t d = 0; d < dims; ++d)
        out(t, d) += static_cast<double>(k) * (seq(fwd, d) - seq(bwd, d));
    }
    for (std::size_t d = 0; d < dims; ++d) out(t, d) /= norm;
  }
  return out;
}

inline std::vector<double> delta(std::span<const double> seq, std::size_t window) {
  Matrix m(seq.size(), 1);
  std::copy(seq.begin(), seq.end(), m.data().begin());
  const Matrix d = delta(m, window);
  return {d.data().begin(), d.data().end()};
}

inline Matrix cepstral_mean_normalize(const Matrix& seq) {
  Matrix out = seq;
  if (seq.rows() == 0) return out;
  const double count = static_cast<double>(seq.rows());
  for (std::size_t d = 0; d < seq.cols(); ++d) {
    double mean = 0.0;
    for (std::size_t t = 0; t < seq.rows(); ++t) mean += seq(t, d);
    mean /= count;
    for (std::size_t t = 0; t < seq.rows(); ++t) out(t, d) -= mean;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature matrices

enum class FeatureKind { Mfcc39, Prosody, Combined };

inline std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Mfcc39: return "mfcc39";
    case FeatureKind::Prosody: return "prosody";
    case FeatureKind::Combined: return "combined";
  }
  return "unknown";
}

inline FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "mfcc39") return FeatureKind::Mfcc39;
  if (s == "prosody") return FeatureKind::Prosody;
  if (s == "combined") return FeatureKind::Combined;
  fail(ErrorCode::SchemaMismatch, "unknown feature kind '" + s + "'");
}

struct FeatureMatrix {
  Matrix vectors;  // T x D
  double frame_rate = 0.0;
  FeatureKind kind = FeatureKind::Mfcc39;

  std::size_t dim() const noexcept { return vectors.cols(); }
  std::size_t num_frames() const noexcept { return vectors.rows(); }

  bool all_finite() const {
    return std::all_of(vectors.data().begin(), vectors.data().end(),
                       [](double v) { return std::isfinite(v); });
  }
};

/// Static cepstra (T x num_ceps) before mean normalization and deltas.
inline Matrix extract_static_cepstra(const AudioClip& clip, const FrameConfig& frame_cfg,
                                     const MfccConfig& cfg) {
  cfg.validate();
  frame_cfg.validate(clip.sample_rate);
  const FrameMatrix fm = frame_signal(pre_emphasize(clip, frame_cfg.pre_emphasis), frame_cfg);

  const std::size_t fft_size = next_power_of_two(fm.frame_len);
  const double fmax = cfg.high_freq > 0.0 ? cfg.high_freq : clip.sample_rate / 2.0;
  const MelFilterbank bank =
      build_mel_filterbank(cfg.num_filters, fft_size, clip.sample_rate, cfg.low_freq, fmax);
  const auto window = hamming_window(fm.frame_len);
  PowerSpectrum spectrum(fft_size);

  Matrix statics(fm.num_frames(), cfg.num_ceps);
  std::vector<double> windowed(fm.frame_len);
  for (std::size_t t = 0; t < fm.num_frames(); ++t) {
    const auto frame = fm.frames.row(t);
    double energy = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      energy += frame[n] * frame[n];
      windowed[n] = frame[n] * window[n];
    }
    auto ceps = mfcc_frame(spectrum(windowed), bank, cfg);
    if (!cfg.include_c0) ceps[0] = std::log(std::max(energy, kEnergyFloor));
    std::copy(ceps.begin(), ceps.end(), statics.row(t).begin());
  }
  return statics;
}

/// Per-frame [statics | deltas | accelerations], 3 * num_ceps columns
/// (39 with the defaults).
inline FeatureMatrix extract_mfcc39(const AudioClip& clip, const FrameConfig& frame_cfg,
                                    const MfccConfig& cfg) {
  Matrix statics = extract_static_cepstra(clip, frame_cfg, cfg);
  if (cfg.cmn) statics = cepstral_mean_normalize(statics);
  const Matrix d1 = delta(statics, cfg.delta_window);
  const Matrix d2 = delta(d1, cfg.delta_window);

  const std::size_t k = cfg.num_ceps;
  FeatureMatrix out;
  out.kind = FeatureKind::Mfcc39;
  out.frame_rate = clip.sample_rate / static_cast<double>(frame_cfg.hop_length(clip.sample_rate));
  out.vectors = Matrix(statics.rows(), 3 * k);
  for (std::size_t t = 0; t < statics.rows(); ++t) {
    auto row = out.vectors.row(t);
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = statics(t, j);
      row[k + j] = d1(t, j);
      row[2 * k + j] = d2(t, j);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Contour smoothing

/// Running median over an odd-width window with edge replication.
inline std::vector<double> median_filter(std::span<const double> seq, std::size_t width) {
  if (width < 1 || width % 2 == 0)
    fail(ErrorCode::InvalidArgument, "median width must be odd and >= 1");
  const auto n = static_cast<std::ptrdiff_t>(seq.size());
  const auto half = static_cast<std::ptrdiff_t>(width / 2);
  std::vector<double> out(seq.size());
  std::vector<double> win(width);
  for (std::ptrdiff_t t = 0; t < n; ++t) {
    for (std::ptrdiff_t k = -half; k <= half; ++k)
      win[static_cast<std::size_t>(k + half)] = seq[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(t + k, 0, n - 1))];
    std::nth_element(win.begin(), win.begin() + half, win.end());
    out[static_cast<std::size_t>(t)] = win[static_cast<std::size_t>(half)];
  }
  return out;
}

/// Zero-phase one-pole low-pass: y = (1-a) x + a y[-1] run forward, then the
/// same recursion backward, with a = exp(-2 pi cutoff / frame_rate). Both
/// passes start in steady state so constants pass through unchanged.
inline std::vector<double> lowpass_contour(std::span<const double> seq, double cutoff_hz,
                                           double frame_rate) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < frame_rate / 2.0))
    fail(ErrorCode::InvalidConfig, "contour cutoff must lie in (0, frame_rate / 2)");
  std::vector<double> y(seq.begin(), seq.end());
  if (y.empty()) return y;
  const double a = std::exp(-2.0 * std::numbers::pi * cutoff_hz / frame_rate);
  const double b = 1.0 - a;
  double state = y.front();
  for (double& v : y) v = state = b * v + a * state;
  state = y.back();
  for (auto it = y.rbegin(); it != y.rend(); ++it) *it = state = b * *it + a * state;
  return y;
}

// ---------------------------------------------------------------------------
// Prosody

struct ProsodyConfig {
  double f_lo = 60.0;
  double f_hi = 400.0;
  double contour_cutoff_hz = 8.0;
  std::size_t median_width = 5;
  std::size_t delta_window = 2;
  // Peaks within this much of the global autocorrelation maximum count as
  // ties; the smallest such lag wins (guards against lag doubling).
  double octave_tolerance = 0.1;

  void validate() const {
    if (!(f_lo > 0.0 && f_lo < f_hi)) fail(ErrorCode::InvalidConfig, "need 0 < f_lo < f_hi");
    if (!(contour_cutoff_hz > 0.0)) fail(ErrorCode::InvalidConfig, "contour cutoff must be positive");
    if (median_width < 1 || median_width % 2 == 0)
      fail(ErrorCode::InvalidConfig, "median_width must be odd");
    if (delta_window < 1) fail(ErrorCode::InvalidConfig, "delta_window must be >= 1");
    if (!(octave_tolerance >= 0.0 && octave_tolerance < 1.0))
      fail(ErrorCode::InvalidConfig, "octave_tolerance must lie in [0, 1)");
  }

  friend bool operator==(const ProsodyConfig&, const ProsodyConfig&) = default;
};

struct EnergyFeatures {
  std::vector<double> log_energy;
  std::vector<double> d_log_energy, dd_log_energy;
  std::vector<double> d_contour_energy, dd_contour_energy;
};

/// e_t = log(max(mean(frame_t^2), floor)); instantaneous features are its
/// deltas, syllabic features the deltas of its low-passed contour.
inline EnergyFeatures energy_features(const FrameMatrix& frames, double contour_cutoff_hz,
                                      std::size_t delta_window = 2) {
  if (frames.num_frames() == 0) fail(ErrorCode::EmptyObservation, "no frames");
  EnergyFeatures ef;
  ef.log_energy.resize(frames.num_frames());
  for (std::size_t t = 0; t < frames.num_frames(); ++t) {
    double acc = 0.0;
    for (double s : frames.frames.row(t)) acc += s * s;
    ef.log_energy[t] = std::log(std::max(acc / static_cast<double>(frames.frame_len), kEnergyFloor));
  }
  ef.d_log_energy = delta(ef.log_energy, delta_window);
  ef.dd_log_energy = delta(ef.d_log_energy, delta_window);
  const auto contour = lowpass_contour(ef.log_energy, contour_cutoff_hz, frames.frame_rate());
  ef.d_contour_energy = delta(contour, delta_window);
  ef.dd_contour_energy = delta(ef.d_contour_energy, delta_window);
  return ef;
}

struct PitchEstimate {
  std::size_t lag = 0;  // samples
  double ac_max = 0.0;  // normalized autocorrelation at `lag`
};

struct LagRange {
  std::size_t min_lag;
  std::size_t max_lag;
};

inline LagRange pitch_lag_range(int sample_rate, double f_lo, double f_hi) {
  if (!(f_lo > 0.0 && f_lo < f_hi)) fail(ErrorCode::InvalidConfig, "need 0 < f_lo < f_hi");
  const auto min_lag = static_cast<std::size_t>(std::max(1.0, std::ceil(sample_rate / f_hi)));
  const auto max_lag = static_cast<std::size_t>(std::floor(sample_rate / f_lo));
  if (max_lag < min_lag) fail(ErrorCode::InvalidConfig, "empty pitch lag range");
  return {min_lag, max_lag};
}

/// Normalized autocorrelation over the overlap,
/// ac(tau) = sum x[n] x[n+tau] / sqrt(sum x[n]^2 * sum x[n+tau]^2).
inline double normalized_autocorrelation(std::span<const double> x, std::size_t lag) {
  double num = 0.0, e0 = 0.0, e1 = 0.0;
  for (std::size_t n = 0; n + lag < x.size(); ++n) {
    num += x[n] * x[n + lag];
    e0 += x[n] * x[n];
    e1 += x[n + lag] * x[n + lag];
  }
  const double den = std::sqrt(e0 * e1);
  if (den < 1e-20) return 0.0;
  return std::clamp(num / den, -1.0, 1.0);
}

/// Pitch lag as the smallest-lag local peak of the normalized
/// autocorrelation lying within `octave_tolerance` of the maximum over
/// [sample_rate / f_hi, sample_rate / f_lo]. Returns nullopt for a silent
/// frame (mean square below the energy floor).
inline std::optional<PitchEstimate> try_autocorrelation_pitch(std::span<const double> frame,
                                                              int sample_rate, double f_lo,
                                                              double f_hi,
                                                              double octave_tolerance = 0.0) {
  const LagRange range = pitch_lag_range(sample_rate, f_lo, f_hi);
  if (range.max_lag >= frame.size())
    fail(ErrorCode::InvalidConfig, "pitch lag range " + std::to_string(range.max_lag) +
                                       " does not fit in a " + std::to_string(frame.size()) +
                                       "-sample frame");
  double energy = 0.0;
  for (double s : frame) energy += s * s;
  if (energy / static_cast<double>(frame.size()) < kEnergyFloor) return std::nullopt;

  std::vector<double> ac(range.max_lag - range.min_lag + 1);
  for (std::size_t i = 0; i < ac.size(); ++i)
    ac[i] = normalized_autocorrelation(frame, range.min_lag + i);

  const double best = *std::max_element(ac.begin(), ac.end());
  const double threshold = best - octave_tolerance;
  for (std::size_t i = 0; i < ac.size(); ++i) {
    const bool left_ok = i == 0 || ac[i] >= ac[i - 1];
    const bool right_ok = i + 1 == ac.size() || ac[i] >= ac[i + 1];
    if (left_ok && right_ok && ac[i] >= threshold) return PitchEstimate{range.min_lag + i, ac[i]};
  }
  // Unreachable: the global maximum is itself a peak above the threshold.
  const auto it = std::max_element(ac.begin(), ac.end());
  return PitchEstimate{range.min_lag + static_cast<std::size_t>(it - ac.begin()), *it};
}

inline PitchEstimate autocorrelation_pitch(std::span<const double> frame, int sample_rate,
                                           double f_lo = 60.0, double f_hi = 400.0,
                                           double octave_tolerance = 0.0) {
  auto est = try_autocorrelation_pitch(frame, sample_rate, f_lo, f_hi, octave_tolerance);
  if (!est) fail(ErrorCode::SilentFrame, "frame energy below floor");
  return *est;
}

struct PitchFeatures {
  std::vector<bool> voiced;
  std::vector<double> lag;         // carried forward across silent frames
  std::vector<double> median_lag;  // after the artifact-removing median filter
  std::vector<double> ac_max, d_ac_max, dd_ac_max;
  std::vector<double> d_log_lag, dd_log_lag;
  std::vector<double> d_contour_lag, dd_contour_lag;
};

inline PitchFeatures pitch_features(const FrameMatrix& frames, const ProsodyConfig& cfg) {
  cfg.validate();
  if (frames.num_frames() == 0) fail(ErrorCode::EmptyObservation, "no frames");
  const std::size_t count = frames.num_frames();
  PitchFeatures pf;
  pf.voiced.resize(count);
  pf.lag.resize(count);
  pf.ac_max.resize(count);

  double carried = frames.sample_rate / 150.0;
  for (std::size_t t = 0; t < count; ++t) {
    const auto est = try_autocorrelation_pitch(frames.frames.row(t), frames.sample_rate, cfg.f_lo,
                                               cfg.f_hi, cfg.octave_tolerance);
    if (est) {
      carried = static_cast<double>(est->lag);
      pf.ac_max[t] = est->ac_max;
      pf.voiced[t] = true;
    }
    pf.lag[t] = carried;
  }

  const std::size_t w = cfg.delta_window;
  pf.d_ac_max = delta(pf.ac_max, w);
  pf.dd_ac_max = delta(pf.d_ac_max, w);
  std::vector<double> log_lag(count);
  std::transform(pf.lag.begin(), pf.lag.end(), log_lag.begin(), [](double v) { return std::log(v); });
  pf.d_log_lag = delta(log_lag, w);
  pf.dd_log_lag = delta(pf.d_log_lag, w);

  pf.median_lag = median_filter(pf.lag, cfg.median_width);
  const auto contour = lowpass_contour(pf.median_lag, cfg.contour_cutoff_hz, frames.frame_rate());
  pf.d_contour_lag = delta(contour, w);
  pf.dd_contour_lag = delta(pf.d_contour_lag, w);
  return pf;
}

/// The eleven per-frame prosody tracks.
struct ProsodyVector {
  static constexpr std::size_t kDim = 11;
  static constexpr std::array<const char*, kDim> kNames = {
      "d_log_energy", "dd_log_energy", "d_contour_energy", "dd_contour_energy",
      "ac_max",       "d_ac_max",      "dd_ac_max",        "d_log_lag",
      "dd_log_lag",   "d_contour_lag", "dd_contour_lag"};

  std::vector<double> d_log_energy, dd_log_energy;
  std::vector<double> d_contour_energy, dd_contour_energy;
  std::vector<double> ac_max, d_ac_max, dd_ac_max;
  std::vector<double> d_log_lag, dd_log_lag;
  std::vector<double> d_contour_lag, dd_contour_lag;
  double frame_rate = 0.0;

  std::size_t num_frames() const noexcept { return ac_max.size(); }

  std::array<const std::vector<double>*, kDim> columns() const {
    return {&d_log_energy, &dd_log_energy, &d_contour_energy, &dd_contour_energy,
            &ac_max,       &d_ac_max,      &dd_ac_max,        &d_log_lag,
            &dd_log_lag,   &d_contour_lag, &dd_contour_lag};
  }

  FeatureMatrix to_feature_matrix() const {
    FeatureMatrix fm;
    fm.kind = FeatureKind::Prosody;
    fm.frame_rate = frame_rate;
    fm.vectors = Matrix(num_frames(), kDim);
    const auto cols = columns();
    for (std::size_t t = 0; t < num_frames(); ++t)
      for (std::size_t j = 0; j < kDim; ++j) fm.vectors(t, j) = (*cols[j])[t];
    return fm;
  }
};

/// Prosody is measured on the framed signal without pre-emphasis.
inline ProsodyVector extract_prosody(const AudioClip& clip, const FrameConfig& frame_cfg,
                                     const ProsodyConfig& cfg) {
  cfg.validate();
  const FrameMatrix fm = frame_signal(clip, frame_cfg);
  EnergyFeatures ef = energy_features(fm, cfg.contour_cutoff_hz, cfg.delta_window);
  PitchFeatures pf = pitch_features(fm, cfg);
  ProsodyVector pv;
  pv.frame_rate = fm.frame_rate();
  pv.d_log_energy = std::move(ef.d_log_energy);
  pv.dd_log_energy = std::move(ef.dd_log_energy);
  pv.d_contour_energy = std::move(ef.d_contour_energy);
  pv.dd_contour_energy = std::move(ef.dd_contour_energy);
  pv.ac_max = std::move(pf.ac_max);
  pv.d_ac_max = std::move(pf.d_ac_max);
  pv.dd_ac_max = std::move(pf.dd_ac_max);
  pv.d_log_lag = std::move(pf.d_log_lag);
  pv.dd_log_lag = std::move(pf.dd_log_lag);
  pv.d_contour_lag = std::move(pf.d_contour_lag);
  pv.dd_contour_lag = std::move(pf.dd_contour_lag);
  return pv;
}

// ---------------------------------------------------------------------------
// Front end as used by training and classification

struct FeatureSettings {
  FrameConfig frame;
  MfccConfig mfcc;
  ProsodyConfig prosody;
  bool prosody_enabled = false;

  std::size_t dim() const {
    return 3 * mfcc.num_ceps + (prosody_enabled ? ProsodyVector::kDim : 0);
  }

  friend bool operator==(const FeatureSettings&, const FeatureSettings&) = default;
};

inline FeatureMatrix extract_features(const AudioClip& clip, const FeatureSettings& settings) {
  FeatureMatrix fm = extract_mfcc39(clip, settings.frame, settings.mfcc);
  if (settings.prosody_enabled) {
    const FeatureMatrix pros = extract_prosody(clip, settings.frame, settings.prosody).to_feature_matrix();
    Matrix joined(fm.num_frames(), fm.dim() + pros.dim());
    for (std::size_t t = 0; t < fm.num_frames(); ++t) {
      auto row = joined.row(t);
      std::copy(fm.vectors.row(t).begin(), fm.vectors.row(t).end(), row.begin());
      std::copy(pros.vectors.row(t).begin(), pros.vectors.row(t).end(),
                row.begin() + static_cast<std::ptrdiff_t>(fm.dim()));
    }
    fm.vectors = std::move(joined);
    fm.kind = FeatureKind::Combined;
  }
  if (!fm.all_finite())
    fail(ErrorCode::InvalidArgument, clip.source_id + ": non-finite feature values");
  return fm;
}

// ---------------------------------------------------------------------------
// Feature files: "dim=<D> frames=<T> kind=<tag>" then T rows of D values.

inline std::string format_feature_file(const FeatureMatrix& fm) {
  std::string out = "dim=" + std::to_string(fm.dim()) + " frames=" +
                    std::to_string(fm.num_frames()) + " kind=" + to_string(fm.kind) + "\n";
  char buf[32];
  for (std::size_t t = 0; t < fm.num_frames(); ++t) {
    const auto row = fm.vectors.row(t);
    for (std::size_t d = 0; d < row.size(); ++d) {
      std::snprintf(buf, sizeof buf, "%.9g", row[d]);
      if (d) out += ' ';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline FeatureMatrix parse_feature_file(const std::string& text) {
  std::istringstream in(text);
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCode::SchemaMismatch, "empty feature file");
  std::size_t dim = 0, frames = 0;
  char kind_buf[32] = {0};
  if (std::sscanf(header.c_str(), "dim=%zu frames=%zu kind=%31s", &dim, &frames, kind_buf) != 3)
    fail(ErrorCode::SchemaMismatch, "bad feature header '" + header + "'");
  FeatureMatrix fm;
  fm.kind = parse_feature_kind(kind_buf);
  fm.vectors = Matrix(frames, dim);
  for (std::size_t t = 0; t < frames; ++t) {
    std::string line;
    if (!std::getline(in, line))
      fail(ErrorCode::IntegrityError, "feature file ends after " + std::to_string(t) + " rows");
    std::istringstream ls(line);
    for (std::size_t d = 0; d < dim; ++d) {
      if (!(ls >> fm.vectors(t, d)))
        fail(ErrorCode::IntegrityError, "row " + std::to_string(t) + " has fewer than " +
                                            std::to_string(dim) + " values");
    }
  }
  return fm;
}

}  // namespace emorec
