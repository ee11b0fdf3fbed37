// tests/test_audio_io.cpp

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

#include <cstdint>
#include <vector>

#include "emorec/audio_io.hpp"
#include "emorec/random.hpp"
#include "test_util.hpp"

namespace emorec {
namespace {

// Hand-assembled canonical 44-byte header, independent of encode_wav.
std::vector<unsigned char> make_wav(int channels, int bits, std::uint32_t rate, int format,
                                    const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> b;
  auto put = [&](std::uint32_t v, int n) {
    for (int i = 0; i < n; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
  };
  auto tag = [&](const char* s) { b.insert(b.end(), s, s + 4); };
  const std::uint32_t align = static_cast<std::uint32_t>(channels * bits / 8);
  tag("RIFF");
  put(36 + static_cast<std::uint32_t>(payload.size()), 4);
  tag("WAVE");
  tag("fmt ");
  put(16, 4);
  put(static_cast<std::uint32_t>(format), 2);
  put(static_cast<std::uint32_t>(channels), 2);
  put(rate, 4);
  put(rate * align, 4);
  put(align, 2);
  put(static_cast<std::uint32_t>(bits), 2);
  tag("data");
  put(static_cast<std::uint32_t>(payload.size()), 4);
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

TEST(LoadWav, SixteenBitHalfScale) {
  // 16384 = 0x4000 little endian.
  const auto bytes = make_wav(1, 16, 16000, 1, {0x00, 0x40, 0x00, 0xC0});
  const AudioClip clip = decode_wav(bytes, "x.wav");
  ASSERT_EQ(clip.samples.size(), 2u);
  EXPECT_EQ(clip.samples[0], 0.5);
  EXPECT_EQ(clip.samples[1], -0.5);
  EXPECT_EQ(clip.sample_rate, 16000);
  EXPECT_EQ(clip.source_id, "x.wav");
}

TEST(LoadWav, StereoIsUnsupported) {
  const auto bytes = make_wav(2, 16, 16000, 1, {0, 0, 0, 0});
  EXPECT_ERROR_CODE(decode_wav(bytes, "s.wav"), ErrorCode::UnsupportedEncoding);
}

TEST(LoadWav, FloatFormatIsUnsupported) {
  const auto bytes = make_wav(1, 32, 16000, 3, {0, 0, 0, 0});
  EXPECT_ERROR_CODE(decode_wav(bytes, "f.wav"), ErrorCode::UnsupportedEncoding);
}

TEST(LoadWav, OneSecondSilenceAt8k) {
  const std::vector<unsigned char> payload(2 * 8000, 0);
  const AudioClip clip = decode_wav(make_wav(1, 16, 8000, 1, payload), "z");
  ASSERT_EQ(clip.samples.size(), 8000u);
  for (double s : clip.samples) ASSERT_EQ(s, 0.0);
}

TEST(LoadWav, EmptyDataChunk) {
  EXPECT_ERROR_CODE(decode_wav(make_wav(1, 16, 8000, 1, {}), "e"), ErrorCode::EmptyAudio);
}

TEST(LoadWav, MalformedContainers) {
  EXPECT_ERROR_CODE(decode_wav({'R', 'I', 'F'}, "a"), ErrorCode::MalformedContainer);
  auto bad_sig = make_wav(1, 16, 8000, 1, {0, 0});
  bad_sig[8] = 'X';
  EXPECT_ERROR_CODE(decode_wav(bad_sig, "b"), ErrorCode::MalformedContainer);
  auto truncated = make_wav(1, 16, 8000, 1, {0, 0, 0, 0, 0, 0});
  truncated.resize(truncated.size() - 3);
  EXPECT_ERROR_CODE(decode_wav(truncated, "c"), ErrorCode::MalformedContainer);
  auto no_data = make_wav(1, 16, 8000, 1, {});
  no_data.resize(36);
  EXPECT_ERROR_CODE(decode_wav(no_data, "d"), ErrorCode::MalformedContainer);
}

TEST(LoadWav, EightAndTwentyFourBit) {
  const AudioClip c8 = decode_wav(make_wav(1, 8, 8000, 1, {128, 192, 0}), "8");
  EXPECT_EQ(c8.samples[0], 0.0);
  EXPECT_EQ(c8.samples[1], 0.5);
  EXPECT_EQ(c8.samples[2], -1.0);
  // 0x400000 = 2^22 -> 0.5; 0xC00000 -> -0.5
  const AudioClip c24 = decode_wav(make_wav(1, 24, 8000, 1, {0, 0, 0x40, 0, 0, 0xC0}), "24");
  EXPECT_EQ(c24.samples[0], 0.5);
  EXPECT_EQ(c24.samples[1], -0.5);
}

TEST(LoadWav, MissingFileIsIoError) {
  EXPECT_ERROR_CODE(load_wav("/nonexistent/definitely.wav"), ErrorCode::IoError);
}

TEST(LoadWav, RoundTripAllDepthsWithinQuantization) {
  Rng rng(7);
  AudioClip clip;
  clip.sample_rate = 22050;
  for (int i = 0; i < 500; ++i) clip.samples.push_back(rng.uniform(-0.99, 0.99));
  for (int bits : {8, 16, 24, 32}) {
    const AudioClip back = decode_wav(encode_wav(clip, bits), "rt");
    ASSERT_EQ(back.samples.size(), clip.samples.size());
    EXPECT_EQ(back.sample_rate, 22050);
    const double q = std::ldexp(1.0, -(bits - 1));
    for (std::size_t i = 0; i < clip.samples.size(); ++i) {
      ASSERT_LE(std::abs(back.samples[i] - clip.samples[i]), 0.5 * q + 1e-15) << bits;
      ASSERT_LE(std::abs(back.samples[i]), 1.0);
    }
  }
}

TEST(PreEmphasize, ClosedForms) {
  AudioClip x;
  x.sample_rate = 8000;
  x.samples = {0.25, -0.5, 0.75};
  EXPECT_EQ(pre_emphasize(x, 0.0).samples, x.samples);

  x.samples.assign(5, 0.4);
  const auto y = pre_emphasize(x, 0.97).samples;
  EXPECT_EQ(y[0], 0.4);
  for (std::size_t t = 1; t < y.size(); ++t) EXPECT_NEAR(y[t], 0.03 * 0.4, 1e-15);

  x.samples = {1.0, 0.0, 0.0};
  EXPECT_EQ(pre_emphasize(x, 0.5).samples, (std::vector<double>{1.0, -0.5, 0.0}));
  EXPECT_ERROR_CODE(pre_emphasize(x, 1.0), ErrorCode::InvalidConfig);
}

TEST(PreEmphasize, InverseRecurrenceReconstructs) {
  Rng rng(11);
  AudioClip x;
  x.sample_rate = 16000;
  for (int i = 0; i < 4000; ++i) x.samples.push_back(rng.uniform(-1.0, 1.0));
  const double alpha = 0.97;
  const auto y = pre_emphasize(x, alpha).samples;
  for (std::size_t t = 0; t < y.size(); ++t) {
    const double rebuilt = t == 0 ? y[0] : y[t] + alpha * x.samples[t - 1];
    ASSERT_NEAR(rebuilt, x.samples[t], 1e-12);
  }
}

TEST(FrameSignal, FrameCountFormula) {
  AudioClip clip = testing::sine_clip(440.0, 0.5, 1.0, 16000);
  const FrameMatrix fm = frame_signal(clip, FrameConfig{});
  EXPECT_EQ(fm.frame_len, 400u);
  EXPECT_EQ(fm.hop, 160u);
  EXPECT_EQ(fm.num_frames(), 98u);
  EXPECT_DOUBLE_EQ(fm.frame_rate(), 100.0);

  clip.samples.resize(400);
  EXPECT_EQ(frame_signal(clip, FrameConfig{}).num_frames(), 1u);
  clip.samples.resize(399);
  EXPECT_ERROR_CODE(frame_signal(clip, FrameConfig{}), ErrorCode::ClipTooShort);
  clip.samples.clear();
  EXPECT_ERROR_CODE(frame_signal(clip, FrameConfig{}), ErrorCode::EmptyAudio);
}

TEST(FrameSignal, RandomLengthsMatchFormulaAndOverlap) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int sr = 8000 + static_cast<int>(rng.index(40000));
    AudioClip clip;
    clip.sample_rate = sr;
    const std::size_t n = 1000 + rng.index(20000);
    for (std::size_t i = 0; i < n; ++i) clip.samples.push_back(rng.uniform(-1.0, 1.0));
    FrameConfig cfg;
    cfg.frame_ms = rng.uniform(10.0, 40.0);
    cfg.hop_ms = rng.uniform(2.0, cfg.frame_ms);
    const std::size_t len = cfg.frame_length(sr), hop = cfg.hop_length(sr);
    if (n < len) continue;
    const FrameMatrix fm = frame_signal(clip, cfg);
    ASSERT_EQ(fm.num_frames(), (n - len) / hop + 1);
    ASSERT_EQ(fm.frames.cols(), len);
    for (std::size_t t = 0; t + 1 < fm.num_frames(); ++t)
      for (std::size_t k = 0; k < len - hop; ++k) ASSERT_EQ(fm.frames(t, hop + k), fm.frames(t + 1, k));
    ASSERT_TRUE(frame_signal(clip, cfg).frames == fm.frames);
  }
}

TEST(FrameConfig, Validation) {
  FrameConfig cfg;
  cfg.hop_ms = 30.0;
  EXPECT_ERROR_CODE(cfg.validate(16000), ErrorCode::InvalidConfig);
  cfg = FrameConfig{};
  cfg.frame_ms = 0.05;
  cfg.hop_ms = 0.05;
  EXPECT_ERROR_CODE(cfg.validate(16000), ErrorCode::InvalidConfig);
}

}  // namespace
}  // namespace emorec
