// emorec/corpus.hpp

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

/*  Corpus manifests and the synthetic emotional-speech generator.

    Manifest: CSV with header "path,label,gender,speaker_id,split". Audio
    paths are resolved relative to the manifest's directory.

    The generator renders a jittered glottal pulse train through a cascade
    of formant resonators, shapes it with an amplitude envelope and a
    syllable-rate modulation, and adds white noise. Each emotion gets its own
    profile; each utterance derives its own seed from (seed, label, gender,
    index), so output bytes do not depend on generation order.  */

#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/audio_io.hpp"
#include "emorec/error.hpp"
#include "emorec/labels.hpp"
#include "emorec/random.hpp"

namespace emorec {

struct UtteranceRecord {
  std::string path;
  EmotionLabel label = EmotionLabel::Neutral;
  Gender gender = Gender::Male;
  std::string speaker_id;
  Split split = Split::Train;

  friend bool operator==(const UtteranceRecord&, const UtteranceRecord&) = default;
};

inline constexpr std::string_view kManifestHeader = "path,label,gender,speaker_id,split";

inline std::vector<UtteranceRecord> parse_manifest(const std::string& text,
                                                   const std::string& source = "manifest") {
  std::istringstream in(text);
  std::string line;
  const auto strip_cr = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  if (!std::getline(in, line)) fail(ErrorCode::SchemaMismatch, source + ": missing header row");
  strip_cr(line);
  if (line != kManifestHeader)
    fail(ErrorCode::SchemaMismatch,
         source + ": header '" + line + "' differs from '" + std::string(kManifestHeader) + "'");

  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    ++row;
    const std::string where = source + ": row=" + std::to_string(row);
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != 5)
      fail(ErrorCode::SchemaMismatch, where + ": expected 5 fields, found " + std::to_string(fields.size()));
    UtteranceRecord rec;
    rec.path = fields[0];
    if (rec.path.empty()) fail(ErrorCode::SchemaMismatch, where + ": empty path");
    const auto label = try_parse_label(fields[1]);
    if (!label) fail(ErrorCode::BadLabel, where + ": unknown label '" + fields[1] + "'");
    rec.label = *label;
    const auto gender = try_parse_gender(fields[2]);
    if (!gender) fail(ErrorCode::BadGender, where + ": unknown gender '" + fields[2] + "'");
    rec.gender = *gender;
    rec.speaker_id = fields[3];
    const auto split = try_parse_split(fields[4]);
    if (!split) fail(ErrorCode::BadSplit, where + ": unknown split '" + fields[4] + "'");
    rec.split = *split;
    if (!seen.insert(rec.path).second)
      fail(ErrorCode::DuplicatePath, where + ": duplicate path '" + rec.path + "'");
    records.push_back(std::move(rec));
  }
  return records;
}

inline std::vector<UtteranceRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.string());
}

inline std::string format_manifest(const std::vector<UtteranceRecord>& records) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const auto& r : records) {
    if (r.path.find(',') != std::string::npos || r.speaker_id.find(',') != std::string::npos)
      fail(ErrorCode::InvalidArgument, "manifest fields must not contain commas: " + r.path);
    out += r.path + ',' + std::string(to_string(r.label)) + ',' + std::string(to_string(r.gender)) +
           ',' + r.speaker_id + ',' + std::string(to_string(r.split)) + '\n';
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<UtteranceRecord>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write manifest " + path.string());
  out << format_manifest(records);
}

inline std::filesystem::path resolve_audio_path(const std::filesystem::path& manifest_path,
                                                const UtteranceRecord& rec) {
  const std::filesystem::path p(rec.path);
  return p.is_absolute() ? p : manifest_path.parent_path() / p;
}

/// Conjunction of the given predicates, order preserved.
inline std::vector<UtteranceRecord> filter_corpus(const std::vector<UtteranceRecord>& records,
                                                  std::optional<Gender> gender = std::nullopt,
                                                  std::optional<Split> split = std::nullopt,
                                                  std::optional<EmotionLabel> label = std::nullopt) {
  std::vector<UtteranceRecord> out;
  for (const auto& r : records) {
    if (gender && r.gender != *gender) continue;
    if (split && r.split != *split) continue;
    if (label && r.label != *label) continue;
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

enum class Envelope { Flat, Rising, Falling, Tremolo };

struct SynthProfile {
  EmotionLabel label = EmotionLabel::Neutral;
  double f0_hz = 120.0;                   // male base pitch
  double f0_jitter = 0.01;                // relative std of each pitch period
  std::vector<double> formant_centers;    // Hz
  Envelope amplitude_envelope = Envelope::Flat;
  double noise_floor = 0.005;             // white-noise std relative to peak
  double f0_slope = 0.0;                  // relative f0 change over the utterance
  double syllable_rate_hz = 4.0;

  friend bool operator==(const SynthProfile&, const SynthProfile&) = default;
};

/// Female voices use f0 times this factor.
inline constexpr double kFemalePitchFactor = 1.7;

inline SynthProfile default_profile(EmotionLabel label) {
  switch (label) {
    case EmotionLabel::Anger:
      return {label, 135.0, 0.035, {800.0, 1300.0, 2700.0}, Envelope::Flat, 0.06, 0.0, 6.5};
    case EmotionLabel::Surprise:
      return {label, 190.0, 0.008, {700.0, 1800.0, 2900.0}, Envelope::Rising, 0.01, 0.3, 4.0};
    case EmotionLabel::Happiness:
      return {label, 175.0, 0.012, {650.0, 1950.0, 2850.0}, Envelope::Tremolo, 0.012, 0.1, 5.0};
    case EmotionLabel::Sadness:
      return {label, 100.0, 0.010, {450.0, 1050.0, 2400.0}, Envelope::Falling, 0.004, -0.2, 2.5};
    case EmotionLabel::Neutral:
      return {label, 120.0, 0.006, {550.0, 1500.0, 2500.0}, Envelope::Flat, 0.005, 0.0, 3.5};
  }
  return {};
}

/// Per-speaker voice variation, fixed by (seed, gender, speaker index).
struct SpeakerVoice {
  double pitch_factor = 1.0;
  double formant_factor = 1.0;
};

inline SpeakerVoice speaker_voice(std::uint64_t seed, Gender gender, std::size_t speaker) {
  Rng rng(derive_seed(seed, {0x5045414bull, static_cast<std::uint64_t>(gender), speaker}));
  return {rng.uniform(0.9, 1.1), rng.uniform(0.95, 1.05)};
}

namespace detail {

inline double envelope_gain(Envelope env, double pos, double time_s) {
  switch (env) {
    case Envelope::Flat: return 1.0;
    case Envelope::Rising: return 0.25 + 0.75 * pos;
    case Envelope::Falling: return 1.0 - 0.75 * pos;
    case Envelope::Tremolo: return 1.0 + 0.45 * std::sin(2.0 * std::numbers::pi * 9.0 * time_s);
  }
  return 1.0;
}

}  // namespace detail

/// Renders one utterance. `rng` supplies all per-utterance randomness.
inline AudioClip synthesize_utterance(const SynthProfile& profile, Gender gender,
                                      const SpeakerVoice& voice, double duration_s, int sample_rate,
                                      Rng& rng) {
  if (!(duration_s > 0.0) || sample_rate <= 0)
    fail(ErrorCode::InvalidArgument, "duration and sample_rate must be positive");
  const auto count = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  const double fs = static_cast<double>(sample_rate);

  const double base_f0 = profile.f0_hz * (gender == Gender::Female ? kFemalePitchFactor : 1.0) *
                         voice.pitch_factor * (1.0 + 0.03 * rng.normal());
  const double syllable_rate = profile.syllable_rate_hz * (1.0 + 0.08 * rng.normal());
  const double syllable_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);

  // Jittered glottal pulse train, smoothed by a one-pole glottal low-pass.
  std::vector<double> x(count, 0.0);
  double next_pulse = rng.uniform(0.0, fs / base_f0);
  while (next_pulse < static_cast<double>(count)) {
    const auto n = static_cast<std::size_t>(next_pulse);
    x[n] += 1.0;
    const double pos = next_pulse / static_cast<double>(count);
    const double f0 = base_f0 * (1.0 + profile.f0_slope * pos);
    const double period = fs / f0 * (1.0 + profile.f0_jitter * rng.normal());
    next_pulse += std::max(period, 2.0);
  }
  {
    double state = 0.0;
    for (double& v : x) v = state = v + 0.9 * state;
  }

  // Cascade of two-pole resonators, unity gain at DC.
  for (std::size_t k = 0; k < profile.formant_centers.size(); ++k) {
    const double fc = std::min(profile.formant_centers[k] * voice.formant_factor *
                                   (1.0 + 0.02 * rng.normal()),
                               0.45 * fs);
    const double bw = 60.0 + 40.0 * static_cast<double>(k);
    const double r = std::exp(-std::numbers::pi * bw / fs);
    const double c1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * fc / fs);
    const double c2 = -r * r;
    const double gain = 1.0 - c1 - c2;
    double y1 = 0.0, y2 = 0.0;
    for (double& v : x) {
      const double y = gain * v + c1 * y1 + c2 * y2;
      y2 = y1;
      y1 = y;
      v = y;
    }
  }

  // Envelope, syllabic modulation and 10 ms fades.
  const double fade = 0.01 * fs;
  for (std::size_t n = 0; n < count; ++n) {
    const double t = static_cast<double>(n) / fs;
    const double pos = static_cast<double>(n) / static_cast<double>(count);
    double g = detail::envelope_gain(profile.amplitude_envelope, pos, t);
    g *= 0.55 + 0.45 * std::cos(2.0 * std::numbers::pi * syllable_rate * t + syllable_phase);
    const double nd = static_cast<double>(n);
    g *= std::min({1.0, nd / fade, (static_cast<double>(count) - 1.0 - nd) / fade});
    x[n] *= g;
  }

  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  const double level = rng.uniform(0.4, 0.8);
  const double scale = peak > 0.0 ? level / peak : 0.0;
  for (double& v : x) {
    v = v * scale + profile.noise_floor * level * rng.normal();
    v = std::clamp(v, -1.0, 1.0);
  }

  AudioClip clip;
  clip.samples = std::move(x);
  clip.sample_rate = sample_rate;
  return clip;
}

struct SynthOptions {
  std::uint64_t seed = 1;
  std::size_t utterances_per_label_per_gender = 20;
  double duration_s = 1.5;
  int sample_rate = 16000;
  std::size_t speakers_per_gender = 4;
  double test_fraction = 0.2;
};

struct SynthCorpus {
  std::vector<UtteranceRecord> records;
  std::filesystem::path manifest_path;
};

/// Renders the full label x gender grid into `out_dir` (which must be absent
/// or empty) and writes `manifest.csv` next to the audio. The test split is
/// stratified: round(test_fraction * n) utterances of every
/// (label, gender) cell, chosen by a seeded shuffle.
inline SynthCorpus generate_synthetic_corpus(const std::filesystem::path& out_dir,
                                             const SynthOptions& opt) {
  if (opt.duration_s < 1.0) fail(ErrorCode::InvalidArgument, "duration_s must be >= 1");
  if (opt.sample_rate < 8000) fail(ErrorCode::InvalidArgument, "sample_rate must be >= 8000");
  if (opt.utterances_per_label_per_gender < 1)
    fail(ErrorCode::InvalidArgument, "need at least one utterance per cell");
  if (opt.speakers_per_gender < 1) fail(ErrorCode::InvalidArgument, "need at least one speaker");
  if (std::filesystem::exists(out_dir) && !std::filesystem::is_empty(out_dir))
    fail(ErrorCode::InvalidArgument, "output directory " + out_dir.string() + " is not empty");
  std::filesystem::create_directories(out_dir);

  const std::size_t n = opt.utterances_per_label_per_gender;
  const auto n_test = static_cast<std::size_t>(std::llround(opt.test_fraction * static_cast<double>(n)));

  SynthCorpus corpus;
  corpus.manifest_path = out_dir / "manifest.csv";
  for (EmotionLabel label : kAllLabels) {
    const SynthProfile profile = default_profile(label);
    for (Gender gender : {Gender::Male, Gender::Female}) {
      // Stratified split: the first n_test entries of a seeded permutation.
      std::vector<std::size_t> perm(n);
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      Rng split_rng(derive_seed(opt.seed, {0x53504c54ull, index_of(label), static_cast<std::uint64_t>(gender)}));
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[split_rng.index(i)]);
      std::vector<bool> is_test(n, false);
      for (std::size_t i = 0; i < n_test; ++i) is_test[perm[i]] = true;

      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t speaker = i % opt.speakers_per_gender;
        Rng rng(derive_seed(opt.seed, {index_of(label), static_cast<std::uint64_t>(gender), i}));
        AudioClip clip = synthesize_utterance(profile, gender, speaker_voice(opt.seed, gender, speaker),
                                              opt.duration_s, opt.sample_rate, rng);
        char name[64];
        std::snprintf(name, sizeof name, "%s_%s_%03zu.wav", std::string(to_string(label)).c_str(),
                      std::string(to_string(gender)).c_str(), i);
        write_wav(out_dir / name, clip);

        UtteranceRecord rec;
        rec.path = name;
        rec.label = label;
        rec.gender = gender;
        rec.speaker_id = std::string(gender == Gender::Male ? "m" : "f") + std::to_string(speaker);
        rec.split = is_test[i] ? Split::Test : Split::Train;
        corpus.records.push_back(std::move(rec));
      }
    }
  }
  write_manifest(corpus.manifest_path, corpus.records);
  return corpus;
}

}  // namespace emorec
