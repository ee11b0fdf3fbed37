// tests/test_features.cpp

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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "emorec/features.hpp"
#include "emorec/random.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace emorec {
namespace {

TEST(Hamming, ClosedFormAndSymmetry) {
  const auto w3 = hamming_window(3);
  EXPECT_NEAR(w3[0], 0.08, 1e-15);
  EXPECT_NEAR(w3[1], 1.0, 1e-15);
  EXPECT_NEAR(w3[2], 0.08, 1e-15);
  for (std::size_t len : {2u, 5u, 400u, 401u, 551u}) {
    const auto w = hamming_window(len);
    for (std::size_t n = 0; n < len; ++n) {
      ASSERT_EQ(w[n], w[len - 1 - n]);
      ASSERT_NEAR(w[n], 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (len - 1.0)), 1e-15);
    }
  }
  const auto w400 = hamming_window(400);
  EXPECT_EQ(w400[199], w400[200]);
}

TEST(PowerSpectrum, ZeroFrame) {
  const std::vector<double> zeros(400, 0.0);
  for (double v : power_spectrum(zeros, 512)) EXPECT_EQ(v, 0.0);
}

TEST(PowerSpectrum, BinAlignedCosine) {
  const std::size_t n = 512, k0 = 37;
  std::vector<double> x(n);
  for (std::size_t t = 0; t < n; ++t) x[t] = std::cos(2.0 * std::numbers::pi * k0 * t / n);
  const auto p = power_spectrum(x, n);
  ASSERT_EQ(p.size(), n / 2 + 1);
  EXPECT_NEAR(p[k0], 65536.0, 1e-7);  // (n/2)^2
  for (std::size_t k = 0; k < p.size(); ++k)
    if (k != k0) {
      EXPECT_LT(p[k], 1e-12) << k;
    }
}

TEST(PowerSpectrum, MatchesDirectDftAndParseval) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = std::size_t{1} << (4 + rng.index(6));
    const std::size_t len = 1 + rng.index(n);
    std::vector<double> x(len);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    const auto fast = power_spectrum(x, n);
    const auto slow = oracle::direct_power_spectrum(x, n);
    double energy = 0.0;
    for (double v : x) energy += v * v;
    for (std::size_t k = 0; k < fast.size(); ++k) ASSERT_NEAR(fast[k], slow[k], 1e-9 * (1.0 + energy));
    double spec = fast[0] + fast[n / 2];
    for (std::size_t k = 1; k < n / 2; ++k) spec += 2.0 * fast[k];
    ASSERT_NEAR(spec / static_cast<double>(n), energy, 1e-9 * energy);
  }
}

TEST(PowerSpectrum, RejectsBadSizes) {
  const std::vector<double> x(10, 1.0);
  EXPECT_ERROR_CODE(power_spectrum(x, 12), ErrorCode::InvalidArgument);
  EXPECT_ERROR_CODE(power_spectrum(x, 8), ErrorCode::InvalidArgument);
}

TEST(Mel, Formula) {
  EXPECT_EQ(hz_to_mel(0.0), 0.0);
  EXPECT_NEAR(hz_to_mel(700.0), 781.172838748031, 1e-9);
  for (double f : {10.0, 440.0, 1234.5, 7999.0}) EXPECT_NEAR(mel_to_hz(hz_to_mel(f)), f, 1e-9);
}

TEST(MelFilterbank, DefaultBankShape) {
  const MelFilterbank bank = build_mel_filterbank(26, 512, 16000, 0.0, 8000.0);
  ASSERT_EQ(bank.weights.rows(), 26u);
  ASSERT_EQ(bank.weights.cols(), 257u);
  for (std::size_t i = 0; i < 26; ++i) {
    const auto row = bank.weights.row(i);
    std::size_t nonzero = 0, peaks = 0;
    double best = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      ASSERT_GE(row[k], 0.0);
      if (row[k] > 0.0) ++nonzero;
      if (k < bank.edge_bins[i] || k > bank.edge_bins[i + 2]) {
        ASSERT_EQ(row[k], 0.0);
      }
      best = std::max(best, row[k]);
    }
    for (std::size_t k = 0; k < row.size(); ++k) peaks += row[k] == best;
    EXPECT_GE(nonzero, 1u) << i;
    EXPECT_EQ(peaks, 1u) << i;
    EXPECT_EQ(row[bank.center_bin(i)], 1.0);
    if (i > 0) {
      EXPECT_GE(bank.center_bin(i), bank.center_bin(i - 1));
    }
  }
}

TEST(MelFilterbank, EdgesEquallySpacedInMel) {
  // Edge bins are floor((fft+1) f / sr) of mel-equispaced frequencies.
  const MelFilterbank bank = build_mel_filterbank(20, 1024, 22050, 100.0, 9000.0);
  const double lo = hz_to_mel(100.0), hi = hz_to_mel(9000.0);
  for (std::size_t i = 0; i < bank.edge_bins.size(); ++i) {
    const double hz = mel_to_hz(lo + (hi - lo) * i / 21.0);
    EXPECT_EQ(bank.edge_bins[i], static_cast<std::size_t>(std::floor(1025.0 * hz / 22050.0)));
  }
}

TEST(MelFilterbank, MonotoneCentersAcrossConfigs) {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t nf = 1 + rng.index(30);
    const int sr = 8000 + static_cast<int>(rng.index(40000));
    try {
      const MelFilterbank bank = build_mel_filterbank(nf, 2048, sr, 0.0, sr / 2.0);
      for (std::size_t i = 1; i < nf; ++i) ASSERT_GE(bank.center_bin(i), bank.center_bin(i - 1));
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::DegenerateBand);
    }
  }
}

TEST(MelFilterbank, Errors) {
  EXPECT_ERROR_CODE(build_mel_filterbank(40, 64, 16000, 0.0, 8000.0), ErrorCode::DegenerateBand);
  EXPECT_ERROR_CODE(build_mel_filterbank(26, 500, 16000, 0.0, 8000.0), ErrorCode::InvalidConfig);
  EXPECT_ERROR_CODE(build_mel_filterbank(26, 512, 16000, 0.0, 9000.0), ErrorCode::InvalidConfig);
  EXPECT_ERROR_CODE(build_mel_filterbank(0, 512, 16000, 0.0, 8000.0), ErrorCode::InvalidConfig);
}

TEST(Dct, ConstantInput) {
  const std::vector<double> x(26, 2.5);
  const auto c = dct_ii(x);
  EXPECT_NEAR(c[0], 2.5 * std::sqrt(26.0), 1e-12);
  for (std::size_t n = 1; n < c.size(); ++n) EXPECT_NEAR(c[n], 0.0, 1e-12);
}

TEST(Dct, OrthonormalRoundTripAndNorm) {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.index(64);
    std::vector<double> x(n);
    for (double& v : x) v = rng.uniform(-10.0, 10.0);
    const auto c = dct_ii(x);
    const auto back = inverse_dct_ii(c);
    double nx = 0.0, nc = 0.0, err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nx += x[i] * x[i];
      nc += c[i] * c[i];
      err += (back[i] - x[i]) * (back[i] - x[i]);
    }
    ASSERT_LE(std::sqrt(err), 1e-9 * std::sqrt(nx));
    ASSERT_NEAR(nc, nx, 1e-9 * nx);
  }
}

TEST(MfccFrame, ZeroSpectrumClampsToFloor) {
  const MelFilterbank bank = build_mel_filterbank(26, 512, 16000, 0.0, 8000.0);
  const std::vector<double> zeros(257, 0.0);
  MfccConfig cfg;
  const auto c = mfcc_frame(zeros, bank, cfg);
  ASSERT_EQ(c.size(), 13u);
  EXPECT_NEAR(c[0], std::log(1e-10) * std::sqrt(26.0), 1e-9);
  for (std::size_t n = 1; n < c.size(); ++n) EXPECT_NEAR(c[n], 0.0, 1e-9);
}

TEST(MfccFrame, MatchesStraightLineOracleOn1kHzSine) {
  const int sr = 16000;
  const AudioClip clip = testing::sine_clip(1000.0, 0.5, 0.05, sr);
  const std::span<const double> frame(clip.samples.data(), 400);
  const auto window = hamming_window(400);
  std::vector<double> windowed(400);
  for (std::size_t i = 0; i < 400; ++i) windowed[i] = frame[i] * window[i];

  const MelFilterbank bank = build_mel_filterbank(26, 512, sr, 0.0, 8000.0);
  MfccConfig cfg;
  const auto got = mfcc_frame(power_spectrum(windowed, 512), bank, cfg);
  const auto want = oracle::straight_line_mfcc(frame, sr, 512, 26, 13, 22);
  for (std::size_t n = 0; n < 13; ++n) EXPECT_NEAR(got[n], want[n], 1e-8) << n;

  cfg.lifter_len = 0;
  const auto plain = mfcc_frame(power_spectrum(windowed, 512), bank, cfg);
  const auto plain_want = oracle::straight_line_mfcc(frame, sr, 512, 26, 13, 0);
  for (std::size_t n = 0; n < 13; ++n) EXPECT_NEAR(plain[n], plain_want[n], 1e-8) << n;
}

TEST(MfccFrame, StaticCepstraFollowTheFrontEnd) {
  // Full path: pre-emphasis, framing, oracle cepstra, c0 replaced by log energy.
  const AudioClip clip = testing::sine_clip(1000.0, 0.5, 0.1, 16000);
  const Matrix statics = extract_static_cepstra(clip, FrameConfig{}, MfccConfig{});
  const AudioClip emph = pre_emphasize(clip, 0.97);
  for (std::size_t t : {0u, 3u, 7u}) {
    const std::span<const double> frame(emph.samples.data() + t * 160, 400);
    const auto want = oracle::straight_line_mfcc(frame, 16000, 512, 26, 13, 22);
    double energy = 0.0;
    for (double s : frame) energy += s * s;
    EXPECT_NEAR(statics(t, 0), std::log(energy), 1e-12);
    for (std::size_t n = 1; n < 13; ++n) EXPECT_NEAR(statics(t, n), want[n], 1e-8);
  }
}

TEST(MfccFrame, PowerExponentActsOnMagnitudeOfLog) {
  const MelFilterbank bank = build_mel_filterbank(26, 512, 16000, 0.0, 8000.0);
  Rng rng(4);
  std::vector<double> spec(257);
  for (double& v : spec) v = std::exp(rng.uniform(-12.0, 6.0));
  MfccConfig cfg;
  cfg.lifter_len = 0;
  cfg.num_ceps = 26;
  const auto logmel = inverse_dct_ii(mfcc_frame(spec, bank, cfg));
  cfg.log_power_exponent = 2.0;
  const auto powered = inverse_dct_ii(mfcc_frame(spec, bank, cfg));
  for (std::size_t i = 0; i < 26; ++i)
    EXPECT_NEAR(powered[i], std::copysign(logmel[i] * logmel[i], logmel[i]), 1e-8 * (1.0 + logmel[i] * logmel[i]));
}

TEST(MfccConfig, Validation) {
  MfccConfig cfg;
  cfg.num_ceps = 30;
  EXPECT_ERROR_CODE(cfg.validate(), ErrorCode::InvalidConfig);
  cfg = MfccConfig{};
  cfg.log_power_exponent = 0.5;
  EXPECT_ERROR_CODE(cfg.validate(), ErrorCode::InvalidConfig);
}

TEST(Delta, ConstantRampAndSingleFrame) {
  const Matrix constant(10, 3, 4.2);
  const Matrix dc = delta(constant, 2);
  for (double v : dc.data()) EXPECT_EQ(v, 0.0);

  Matrix ramp(12, 1);
  for (std::size_t t = 0; t < 12; ++t) ramp(t, 0) = 3.0 * static_cast<double>(t);
  const Matrix d = delta(ramp, 2);
  for (std::size_t t = 2; t < 10; ++t) EXPECT_EQ(d(t, 0), 3.0);
  // Replicated edges pull the border frames toward zero.
  EXPECT_LT(d(0, 0), 3.0);
  EXPECT_LT(d(11, 0), 3.0);

  Matrix one(1, 4, 7.0);
  const Matrix d1 = delta(one, 2);
  ASSERT_EQ(d1.rows(), 1u);
  for (double v : d1.data()) EXPECT_EQ(v, 0.0);
}

TEST(Delta, RegressionFormulaByHand) {
  const std::vector<double> seq = {1.0, 4.0, 2.0, 8.0, 5.0};
  const auto d = delta(seq, 2);
  // t = 2: (1*(8-4) + 2*(5-1)) / 10
  EXPECT_DOUBLE_EQ(d[2], 1.2);
  // t = 0 with replication: (1*(4-1) + 2*(2-1)) / 10
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  // t = 4: (1*(5-8) + 2*(5-2)) / 10
  EXPECT_DOUBLE_EQ(d[4], 0.3);
}

TEST(Delta, Linearity) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t rows = 1 + rng.index(40), cols = 1 + rng.index(5);
    Matrix x(rows, cols), y(rows, cols), z(rows, cols);
    const double a = rng.uniform(-3.0, 3.0), b = rng.uniform(-3.0, 3.0);
    for (std::size_t i = 0; i < x.data().size(); ++i) {
      x.data()[i] = rng.uniform(-5.0, 5.0);
      y.data()[i] = rng.uniform(-5.0, 5.0);
      z.data()[i] = a * x.data()[i] + b * y.data()[i];
    }
    const std::size_t w = 1 + rng.index(4);
    const Matrix dx = delta(x, w), dy = delta(y, w), dz = delta(z, w);
    for (std::size_t i = 0; i < dz.data().size(); ++i)
      ASSERT_NEAR(dz.data()[i], a * dx.data()[i] + b * dy.data()[i], 1e-10);
  }
}

TEST(Cmn, ZeroMeansIdempotenceSingleFrame) {
  Rng rng(8);
  Matrix x(50, 13);
  for (double& v : x.data()) v = rng.uniform(-20.0, 20.0);
  const Matrix once = cepstral_mean_normalize(x);
  for (std::size_t c = 0; c < 13; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < 50; ++t) mean += once(t, c);
    EXPECT_LT(std::abs(mean / 50.0), 1e-10);
  }
  const Matrix twice = cepstral_mean_normalize(once);
  for (std::size_t i = 0; i < once.data().size(); ++i) ASSERT_NEAR(twice.data()[i], once.data()[i], 1e-12);

  const Matrix single = cepstral_mean_normalize(Matrix(1, 5, 3.0));
  for (double v : single.data()) EXPECT_EQ(v, 0.0);
}

TEST(ExtractMfcc39, ShapeAndDeterminism) {
  const AudioClip clip = testing::sawtooth_clip(180.0, 0.6, 1.0, 16000);
  const FeatureMatrix fm = extract_mfcc39(clip, FrameConfig{}, MfccConfig{});
  EXPECT_EQ(fm.dim(), 39u);
  EXPECT_EQ(fm.num_frames(), 98u);
  EXPECT_EQ(fm.kind, FeatureKind::Mfcc39);
  EXPECT_DOUBLE_EQ(fm.frame_rate, 100.0);
  EXPECT_TRUE(fm.all_finite());
  EXPECT_TRUE(extract_mfcc39(clip, FrameConfig{}, MfccConfig{}).vectors == fm.vectors);

  // Delta columns are the deltas of the static block.
  Matrix statics(fm.num_frames(), 13);
  for (std::size_t t = 0; t < fm.num_frames(); ++t)
    for (std::size_t j = 0; j < 13; ++j) statics(t, j) = fm.vectors(t, j);
  const Matrix d1 = delta(statics, 2);
  for (std::size_t t = 0; t < fm.num_frames(); ++t)
    for (std::size_t j = 0; j < 13; ++j) ASSERT_EQ(fm.vectors(t, 13 + j), d1(t, j));
}

TEST(ExtractMfcc39, SilenceGivesZeros) {
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(8000, 0.0);
  const FeatureMatrix fm = extract_mfcc39(clip, FrameConfig{}, MfccConfig{});
  ASSERT_EQ(fm.num_frames(), 48u);
  for (double v : fm.vectors.data()) ASSERT_NEAR(v, 0.0, 1e-12);
}

TEST(ExtractMfcc39, TooShortPropagates) {
  AudioClip clip = testing::sine_clip(300.0, 0.5, 0.02, 16000);
  EXPECT_ERROR_CODE(extract_mfcc39(clip, FrameConfig{}, MfccConfig{}), ErrorCode::ClipTooShort);
}

TEST(ExtractFeatures, CombinedAddsElevenProsodyColumns) {
  const AudioClip clip = testing::sawtooth_clip(150.0, 0.5, 0.8, 16000);
  FeatureSettings s;
  s.prosody_enabled = true;
  const FeatureMatrix fm = extract_features(clip, s);
  EXPECT_EQ(fm.dim(), 50u);
  EXPECT_EQ(s.dim(), 50u);
  EXPECT_EQ(fm.kind, FeatureKind::Combined);
  const FeatureMatrix mf = extract_mfcc39(clip, s.frame, s.mfcc);
  for (std::size_t t = 0; t < fm.num_frames(); ++t)
    for (std::size_t j = 0; j < 39; ++j) ASSERT_EQ(fm.vectors(t, j), mf.vectors(t, j));
}

TEST(FeatureFile, FormatAndRoundTrip) {
  FeatureMatrix fm;
  fm.vectors = Matrix(2, 3);
  fm.vectors(0, 0) = 1.0;
  fm.vectors(0, 1) = -0.123456789012;
  fm.vectors(0, 2) = 1e-20;
  fm.vectors(1, 0) = 12345.6789;
  const std::string text = format_feature_file(fm);
  EXPECT_EQ(text, "dim=3 frames=2 kind=mfcc39\n1 -0.123456789 1e-20\n12345.6789 0 0\n");
  const FeatureMatrix back = parse_feature_file(text);
  EXPECT_EQ(back.dim(), 3u);
  EXPECT_EQ(back.num_frames(), 2u);
  EXPECT_NEAR(back.vectors(0, 1), -0.123456789, 1e-15);
  EXPECT_EQ(format_feature_file(back), text);

  EXPECT_ERROR_CODE(parse_feature_file("garbage\n"), ErrorCode::SchemaMismatch);
  EXPECT_ERROR_CODE(parse_feature_file("dim=3 frames=2 kind=mfcc39\n1 2 3\n"), ErrorCode::IntegrityError);
}

TEST(MedianFilter, Examples) {
  const std::vector<double> x = {3.0, -1.0, 4.0, 1.0, 5.0};
  EXPECT_EQ(median_filter(x, 1), x);
  EXPECT_EQ(median_filter(std::vector<double>{1, 1, 9, 1, 1}, 3), (std::vector<double>{1, 1, 1, 1, 1}));
  const std::vector<double> mono = {1, 2, 3, 5, 8, 13, 21};
  EXPECT_EQ(median_filter(mono, 5), mono);
  EXPECT_ERROR_CODE(median_filter(x, 4), ErrorCode::InvalidArgument);
}

TEST(LowpassContour, DcGainImpulseSymmetryNyquist) {
  const std::vector<double> c(50, 3.25);
  for (double v : lowpass_contour(c, 8.0, 100.0)) EXPECT_NEAR(v, 3.25, 1e-10);

  std::vector<double> imp(201, 0.0);
  imp[100] = 1.0;
  const auto y = lowpass_contour(imp, 8.0, 100.0);
  ASSERT_EQ(y.size(), imp.size());
  EXPECT_EQ(std::max_element(y.begin(), y.end()) - y.begin(), 100);
  for (std::size_t k = 1; k < 100; ++k) ASSERT_NEAR(y[100 - k], y[100 + k], 1e-12);

  std::vector<double> alt(200);
  for (std::size_t t = 0; t < alt.size(); ++t) alt[t] = t % 2 ? -1.0 : 1.0;
  const auto z = lowpass_contour(alt, 8.0, 100.0);
  for (std::size_t t = 40; t < 160; ++t) {
    ASSERT_LT(std::abs(z[t]), 0.15);
    // Two passes of (1-a)/(1+a) with a = exp(-2 pi 8 / 100).
    ASSERT_NEAR(std::abs(z[t]), 0.060597720922, 1e-9);
  }
  EXPECT_ERROR_CODE(lowpass_contour(c, 60.0, 100.0), ErrorCode::InvalidConfig);
}

}  // namespace
}  // namespace emorec
