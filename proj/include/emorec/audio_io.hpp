// emorec/audio_io.hpp

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

/*  Audio ingestion: mono integer-PCM RIFF/WAVE reading and writing,
    pre-emphasis, and slicing into fixed-length overlapping frames.  */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "emorec/error.hpp"
#include "emorec/matrix.hpp"

namespace emorec {

struct AudioClip {
  std::vector<double> samples;  // normalized to [-1, 1]
  int sample_rate = 0;          // Hz
  std::string source_id;

  std::size_t size() const noexcept { return samples.size(); }
  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

struct FrameConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double pre_emphasis = 0.97;

  std::size_t frame_length(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(frame_ms * sample_rate / 1000.0));
  }
  std::size_t hop_length(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(hop_ms * sample_rate / 1000.0));
  }

  void validate(int sample_rate) const {
    if (!(frame_ms > 0.0) || !(hop_ms > 0.0))
      fail(ErrorCode::InvalidConfig, "frame_ms and hop_ms must be positive");
    if (hop_ms > frame_ms)
      fail(ErrorCode::InvalidConfig, "hop_ms must not exceed frame_ms");
    if (!(pre_emphasis >= 0.0 && pre_emphasis < 1.0))
      fail(ErrorCode::InvalidConfig, "pre_emphasis must lie in [0, 1)");
    if (sample_rate <= 0)
      fail(ErrorCode::InvalidConfig, "sample_rate must be positive");
    if (frame_length(sample_rate) < 2)
      fail(ErrorCode::InvalidConfig, "frame length must be at least 2 samples");
    if (hop_length(sample_rate) < 1)
      fail(ErrorCode::InvalidConfig, "hop must be at least 1 sample");
  }

  friend bool operator==(const FrameConfig&, const FrameConfig&) = default;
};

struct FrameMatrix {
  Matrix frames;  // T x frame_len
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  int sample_rate = 0;

  std::size_t num_frames() const noexcept { return frames.rows(); }
  double frame_rate() const {
    return static_cast<double>(sample_rate) / static_cast<double>(hop);
  }
};

namespace detail {

inline std::uint32_t read_le(const unsigned char* p, int bytes) {
  std::uint32_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void put_le(std::vector<unsigned char>& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace detail

/// Decodes a RIFF/WAVE image held in memory. `source_id` is only used for
/// the clip identity and error messages.
inline AudioClip decode_wav(const std::vector<unsigned char>& bytes,
                            const std::string& source_id) {
  const auto malformed = [&](const std::string& why) {
    fail(ErrorCode::MalformedContainer, source_id + ": " + why);
  };
  if (bytes.size() < 12) malformed("file shorter than a RIFF header");
  if (std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    malformed("missing RIFF/WAVE signature");

  bool have_fmt = false;
  int channels = 0, bits = 0;
  std::uint32_t sample_rate = 0, block_align = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t size = detail::read_le(chunk + 4, 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body) malformed("chunk extends past end of file");

    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) malformed("fmt chunk too small");
      const unsigned char* f = bytes.data() + body;
      std::uint32_t format = detail::read_le(f, 2);
      channels = static_cast<int>(detail::read_le(f + 2, 2));
      sample_rate = detail::read_le(f + 4, 4);
      block_align = detail::read_le(f + 12, 2);
      bits = static_cast<int>(detail::read_le(f + 14, 2));
      if (format == 0xFFFE) {
        // WAVE_FORMAT_EXTENSIBLE: the sub-format GUID starts with the format tag.
        if (size < 40) malformed("extensible fmt chunk too small");
        format = detail::read_le(f + 24, 2);
      }
      if (format != 1)
        fail(ErrorCode::UnsupportedEncoding,
             source_id + ": format tag " + std::to_string(format) + " is not integer PCM");
      if (channels != 1)
        fail(ErrorCode::UnsupportedEncoding,
             source_id + ": " + std::to_string(channels) + " channels, only mono is accepted");
      if (bits != 8 && bits != 16 && bits != 24 && bits != 32)
        fail(ErrorCode::UnsupportedEncoding,
             source_id + ": unsupported bit depth " + std::to_string(bits));
      if (sample_rate == 0) malformed("zero sample rate");
      if (block_align != static_cast<std::uint32_t>(bits / 8)) malformed("inconsistent block align");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) malformed("data chunk before fmt chunk");
      data = bytes.data() + body;
      data_size = size;
      break;
    }
    pos = body + size + (size & 1);
  }
  if (!have_fmt) malformed("no fmt chunk");
  if (data == nullptr) malformed("no data chunk");

  const std::size_t width = static_cast<std::size_t>(bits / 8);
  const std::size_t count = data_size / width;
  if (count == 0) fail(ErrorCode::EmptyAudio, source_id + ": no samples");

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.source_id = source_id;
  clip.samples.resize(count);
  const double scale = std::ldexp(1.0, bits - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char* p = data + i * width;
    std::int64_t v = 0;
    if (bits == 8) {
      v = static_cast<std::int64_t>(p[0]) - 128;  // 8-bit PCM is unsigned
    } else {
      const std::uint32_t raw = detail::read_le(p, static_cast<int>(width));
      const std::uint32_t sign_bit = 1u << (bits - 1);
      v = static_cast<std::int64_t>(raw);
      if (raw & sign_bit) v -= static_cast<std::int64_t>(1) << bits;
    }
    clip.samples[i] = static_cast<double>(v) / scale;
  }
  return clip;
}

inline AudioClip load_wav(const std::filesystem::path& path) {
  return decode_wav(detail::read_file_bytes(path), path.string());
}

/// Encodes a clip as mono integer PCM. Samples are scaled by 2^(bits-1),
/// rounded half away from zero and clamped to the type's range.
inline std::vector<unsigned char> encode_wav(const AudioClip& clip, int bits = 16) {
  if (bits != 8 && bits != 16 && bits != 24 && bits != 32)
    fail(ErrorCode::UnsupportedEncoding, "cannot write bit depth " + std::to_string(bits));
  if (clip.sample_rate <= 0) fail(ErrorCode::InvalidArgument, "sample_rate must be positive");
  const std::uint32_t width = static_cast<std::uint32_t>(bits / 8);
  const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size()) * width;

  std::vector<unsigned char> out;
  out.reserve(44 + data_size + 1);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  detail::put_le(out, 36 + data_size + (data_size & 1), 4);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  detail::put_le(out, 16, 4);
  detail::put_le(out, 1, 2);
  detail::put_le(out, 1, 2);
  detail::put_le(out, static_cast<std::uint32_t>(clip.sample_rate), 4);
  detail::put_le(out, static_cast<std::uint32_t>(clip.sample_rate) * width, 4);
  detail::put_le(out, width, 2);
  detail::put_le(out, static_cast<std::uint32_t>(bits), 2);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  detail::put_le(out, data_size, 4);

  const double scale = std::ldexp(1.0, bits - 1);
  const auto lo = static_cast<std::int64_t>(-scale);
  const auto hi = static_cast<std::int64_t>(scale) - 1;
  for (double s : clip.samples) {
    std::int64_t v = std::clamp<std::int64_t>(std::llround(s * scale), lo, hi);
    if (bits == 8) {
      out.push_back(static_cast<unsigned char>(v + 128));
    } else {
      detail::put_le(out, static_cast<std::uint32_t>(v), static_cast<int>(width));
    }
  }
  if (data_size & 1) out.push_back(0);
  return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioClip& clip, int bits = 16) {
  const auto bytes = encode_wav(clip, bits);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

/// y[0] = x[0], y[t] = x[t] - alpha * x[t-1].
inline AudioClip pre_emphasize(const AudioClip& clip, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    fail(ErrorCode::InvalidConfig, "pre-emphasis coefficient must lie in [0, 1)");
  AudioClip out = clip;
  for (std::size_t t = clip.samples.size(); t-- > 1;)
    out.samples[t] = clip.samples[t] - alpha * clip.samples[t - 1];
  return out;
}

/// Slices the clip into frames of round(frame_ms * sr / 1000) samples every
/// round(hop_ms * sr / 1000) samples. A trailing partial frame is dropped.
/// Pre-emphasis is not applied here.
inline FrameMatrix frame_signal(const AudioClip& clip, const FrameConfig& cfg) {
  if (clip.samples.empty()) fail(ErrorCode::EmptyAudio, clip.source_id + ": no samples");
  cfg.validate(clip.sample_rate);
  const std::size_t len = cfg.frame_length(clip.sample_rate);
  const std::size_t hop = cfg.hop_length(clip.sample_rate);
  const std::size_t n = clip.samples.size();
  if (n < len)
    fail(ErrorCode::ClipTooShort, clip.source_id + ": " + std::to_string(n) +
                                      " samples is shorter than one " + std::to_string(len) +
                                      "-sample frame");
  const std::size_t count = (n - len) / hop + 1;

  FrameMatrix fm{Matrix(count, len), len, hop, clip.sample_rate};
  for (std::size_t t = 0; t < count; ++t) {
    const auto begin = clip.samples.begin() + static_cast<std::ptrdiff_t>(t * hop);
    std::copy(begin, begin + static_cast<std::ptrdiff_t>(len), fm.frames.row(t).begin());
  }
  return fm;
}

}  // namespace emorec
