// emorec/classifier.hpp

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

/*  One HMM per emotion. Training fits each label's model on that label's
    utterances only; classification scores an utterance against all five
    models and picks the largest total log-likelihood. Evaluation tallies a
    stimulation x recognized confusion matrix.  */

#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "emorec/audio_io.hpp"
#include "emorec/config.hpp"
#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/features.hpp"
#include "emorec/hmm.hpp"
#include "emorec/labels.hpp"

namespace emorec {

template <typename T>
using PerLabel = std::array<T, kNumLabels>;

struct EmotionModelSet {
  PerLabel<HmmModel> models;
  FeatureSettings features;
  HmmConfig hmm;
  std::uint64_t seed = 0;
  std::string corpus_description;
  std::string corpus_digest;
  std::string created;  // from SOURCE_DATE_EPOCH, else "unspecified"

  const HmmModel& model(EmotionLabel l) const { return models[index_of(l)]; }

  void validate() const {
    const std::size_t dim = features.dim();
    for (EmotionLabel l : kAllLabels) {
      const HmmModel& m = model(l);
      if (m.num_states() == 0)
        fail(ErrorCode::IntegrityError, "model set lacks a model for " + std::string(to_string(l)));
      if (m.feature_dim != dim)
        fail(ErrorCode::IntegrityError, std::string(to_string(l)) + " model has dimension " +
                                            std::to_string(m.feature_dim) + ", features have " +
                                            std::to_string(dim));
    }
  }
};

struct TrainedModelSet {
  EmotionModelSet set;
  PerLabel<TrainReport> reports;
};

/// Maps a manifest record to its audio.
using ClipLoader = std::function<AudioClip(const UtteranceRecord&)>;

inline ClipLoader manifest_loader(const std::filesystem::path& manifest_path) {
  return [manifest_path](const UtteranceRecord& rec) {
    AudioClip clip = load_wav(resolve_audio_path(manifest_path, rec));
    clip.source_id = rec.path;
    return clip;
  };
}

namespace detail {

inline void hash_clip(Fnv1a& h, const AudioClip& clip) {
  // Fixed little-endian byte order keeps the digest machine independent.
  unsigned char buf[8];
  const auto put = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
    h.update(buf, 8);
  };
  put(static_cast<std::uint64_t>(clip.sample_rate));
  put(clip.samples.size());
  for (double s : clip.samples) put(std::bit_cast<std::uint64_t>(s));
}

inline std::string creation_stamp() {
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0')
    return std::string("epoch:") + epoch;
  return "unspecified";
}

}  // namespace detail

/// Fits init_model + baum_welch for every label on that label's records.
/// Feature errors are re-raised with the offending source id attached.
inline TrainedModelSet train_model_set(const std::vector<UtteranceRecord>& corpus,
                                       const ClipLoader& loader, const HmmConfig& hmm_cfg,
                                       const FeatureSettings& features, std::uint64_t seed,
                                       const std::string& description = "") {
  hmm_cfg.validate();
  for (EmotionLabel l : kAllLabels) {
    const bool present = std::any_of(corpus.begin(), corpus.end(),
                                     [l](const UtteranceRecord& r) { return r.label == l; });
    if (!present)
      fail(ErrorCode::MissingClass, "no training utterances for label " + std::string(to_string(l)));
  }

  PerLabel<std::vector<Matrix>> data;
  Fnv1a digest;
  digest.update(format_manifest(corpus));
  for (const UtteranceRecord& rec : corpus) {
    try {
      const AudioClip clip = loader(rec);
      detail::hash_clip(digest, clip);
      data[index_of(rec.label)].push_back(extract_features(clip, features).vectors);
    } catch (const Error& e) {
      fail(e.code(), rec.path + ": " + e.message());
    }
  }

  TrainedModelSet out;
  out.set.features = features;
  out.set.hmm = hmm_cfg;
  out.set.seed = seed;
  out.set.corpus_description = description;
  out.set.corpus_digest = digest.hex();
  out.set.created = detail::creation_stamp();
  for (EmotionLabel l : kAllLabels) {
    const auto& seqs = data[index_of(l)];
    try {
      const HmmModel init = init_model(hmm_cfg.num_states, hmm_cfg.num_mixtures, hmm_cfg.topology, seqs,
                                       derive_seed(seed, {index_of(l)}), hmm_cfg.variance_floor_ratio);
      TrainOptions opts;
      opts.max_iter = hmm_cfg.max_iter;
      opts.rel_tol = hmm_cfg.rel_tol;
      opts.variance_floor_ratio = hmm_cfg.variance_floor_ratio;
      TrainResult res = baum_welch(init, seqs, opts);
      out.set.models[index_of(l)] = std::move(res.model);
      out.reports[index_of(l)] = std::move(res.report);
    } catch (const Error& e) {
      fail(e.code(), "training " + std::string(to_string(l)) + ": " + e.message());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification

struct ScoreBreakdown {
  PerLabel<double> log_likelihoods{};
  PerLabel<double> per_frame{};  // log_likelihoods / frame count, diagnostics only
  EmotionLabel decision = EmotionLabel::Anger;
  double margin = 0.0;           // best minus second best
  std::size_t num_frames = 0;
};

/// Argmax with ties resolved to the earlier label in report order.
inline ScoreBreakdown decide(const PerLabel<double>& scores, std::size_t num_frames = 0) {
  ScoreBreakdown sb;
  sb.log_likelihoods = scores;
  sb.num_frames = num_frames;
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumLabels; ++i)
    if (scores[i] > scores[best]) best = i;
  double second = kNegInf;
  for (std::size_t i = 0; i < kNumLabels; ++i)
    if (i != best) second = std::max(second, scores[i]);
  sb.decision = kAllLabels[best];
  sb.margin = scores[best] - second;
  for (std::size_t i = 0; i < kNumLabels; ++i)
    sb.per_frame[i] = num_frames > 0 ? scores[i] / static_cast<double>(num_frames) : scores[i];
  return sb;
}

inline ScoreBreakdown classify_features(const EmotionModelSet& set, const FeatureMatrix& features) {
  PerLabel<double> scores{};
  for (EmotionLabel l : kAllLabels) scores[index_of(l)] = forward_log(set.model(l), features);
  return decide(scores, features.num_frames());
}

inline ScoreBreakdown classify(const EmotionModelSet& set, const AudioClip& clip) {
  return classify_features(set, extract_features(clip, set.features));
}

// ---------------------------------------------------------------------------
// Evaluation

/// Rows are the true (stimulation) label, columns the recognized label.
struct ConfusionMatrix {
  PerLabel<PerLabel<std::size_t>> counts{};

  std::size_t& at(EmotionLabel truth, EmotionLabel recognized) {
    return counts[index_of(truth)][index_of(recognized)];
  }
  std::size_t row_sum(std::size_t row) const {
    std::size_t s = 0;
    for (std::size_t c : counts[row]) s += c;
    return s;
  }
  std::size_t total() const {
    std::size_t s = 0;
    for (std::size_t r = 0; r < kNumLabels; ++r) s += row_sum(r);
    return s;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    for (std::size_t r = 0; r < kNumLabels; ++r)
      for (std::size_t c = 0; c < kNumLabels; ++c) counts[r][c] += other.counts[r][c];
    return *this;
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct RejectedUtterance {
  std::string source_id;
  std::string reason;
};

struct EvaluationResult {
  ConfusionMatrix matrix;
  std::vector<RejectedUtterance> rejected;
  std::size_t num_utterances = 0;
};

/// Classifies every record (optionally only one gender). Utterances that
/// fail to load or extract are listed in `rejected` and never counted.
inline EvaluationResult evaluate(const EmotionModelSet& set, const std::vector<UtteranceRecord>& test_corpus,
                                 const ClipLoader& loader, std::optional<Gender> gender = std::nullopt) {
  const auto records = filter_corpus(test_corpus, gender);
  if (records.empty())
    fail(ErrorCode::EmptyTestSet, gender ? "no " + std::string(to_string(*gender)) + " test utterances"
                                         : std::string("no test utterances"));
  EvaluationResult res;
  res.num_utterances = records.size();
  for (const UtteranceRecord& rec : records) {
    try {
      const ScoreBreakdown sb = classify(set, loader(rec));
      ++res.matrix.at(rec.label, sb.decision);
    } catch (const Error& e) {
      res.rejected.push_back({rec.path, e.what()});
    }
  }
  return res;
}

/// round(100 * count / row_sum), halves rounded away from zero.
inline std::optional<PerLabel<int>> row_percentages(const ConfusionMatrix& cm, std::size_t row) {
  const std::size_t sum = cm.row_sum(row);
  if (sum == 0) return std::nullopt;
  PerLabel<int> out{};
  for (std::size_t c = 0; c < kNumLabels; ++c)
    out[c] = static_cast<int>((200 * cm.counts[row][c] + sum) / (2 * sum));
  return out;
}

inline PerLabel<PerLabel<int>> percentage_view(const ConfusionMatrix& cm) {
  PerLabel<PerLabel<int>> out{};
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    auto row = row_percentages(cm, r);
    if (!row) fail(ErrorCode::EmptyRow, "no utterances with true label " + std::string(to_string(kAllLabels[r])));
    out[r] = *row;
  }
  return out;
}

/// trace / total.
inline double accuracy(const ConfusionMatrix& cm) {
  const std::size_t total = cm.total();
  if (total == 0) fail(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  std::size_t trace = 0;
  for (std::size_t i = 0; i < kNumLabels; ++i) trace += cm.counts[i][i];
  return static_cast<double>(trace) / static_cast<double>(total);
}

/// diagonal / row_sum per label; nullopt for labels with no utterances.
inline PerLabel<std::optional<double>> per_class_recall(const ConfusionMatrix& cm) {
  PerLabel<std::optional<double>> out{};
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const std::size_t sum = cm.row_sum(i);
    if (sum > 0) out[i] = static_cast<double>(cm.counts[i][i]) / static_cast<double>(sum);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

/// Percentage table laid out as stimulation rows by recognized columns,
/// followed by overall and per-class accuracy.
inline std::string format_report(const EvaluationResult& res, const std::string& title) {
  const ConfusionMatrix& cm = res.matrix;
  std::ostringstream out;
  char buf[64];
  out << title << "\n";
  out << "Stimulation   Recognized Emotions (%)\n";
  std::snprintf(buf, sizeof buf, "%-12s", "");
  out << buf;
  for (EmotionLabel l : kAllLabels) {
    std::snprintf(buf, sizeof buf, " %10s", std::string(to_string(l)).c_str());
    out << buf;
  }
  out << "\n";
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    std::snprintf(buf, sizeof buf, "%-12s", std::string(to_string(kAllLabels[r])).c_str());
    out << buf;
    const auto row = row_percentages(cm, r);
    for (std::size_t c = 0; c < kNumLabels; ++c) {
      if (row)
        std::snprintf(buf, sizeof buf, " %10d", (*row)[c]);
      else
        std::snprintf(buf, sizeof buf, " %10s", "-");
      out << buf;
    }
    out << "\n";
  }
  if (cm.total() > 0) {
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * accuracy(cm));
    out << "overall accuracy: " << buf << "% (" << cm.total() << " utterances)\n";
  }
  const auto recall = per_class_recall(cm);
  out << "per-class accuracy:";
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    out << " " << to_string(kAllLabels[i]) << "=";
    if (recall[i]) {
      std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * *recall[i]);
      out << buf;
    } else {
      out << "-";
    }
  }
  out << "\n";
  out << "rejected: " << res.rejected.size() << "\n";
  for (const auto& r : res.rejected) out << "  " << r.source_id << ": " << r.reason << "\n";
  return out.str();
}

/// Machine-readable counts: a label line, one line per true label, and the
/// rejected tally.
inline std::string format_counts(const EvaluationResult& res) {
  std::string out = "labels=anger,surprise,happiness,sadness,neutral\n";
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    out += to_string(kAllLabels[r]);
    for (std::size_t c = 0; c < kNumLabels; ++c) out += ' ' + std::to_string(res.matrix.counts[r][c]);
    out += '\n';
  }
  out += "rejected=" + std::to_string(res.rejected.size()) + "\n";
  return out;
}

inline ConfusionMatrix parse_counts(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "labels=anger,surprise,happiness,sadness,neutral")
    fail(ErrorCode::SchemaMismatch, "counts file has an unexpected label line");
  ConfusionMatrix cm;
  for (std::size_t r = 0; r < kNumLabels; ++r) {
    if (!std::getline(in, line)) fail(ErrorCode::IntegrityError, "counts file is truncated");
    std::istringstream ls(line);
    std::string name;
    ls >> name;
    if (name != to_string(kAllLabels[r])) fail(ErrorCode::SchemaMismatch, "unexpected row '" + name + "'");
    for (std::size_t c = 0; c < kNumLabels; ++c)
      if (!(ls >> cm.counts[r][c])) fail(ErrorCode::IntegrityError, "short counts row " + name);
  }
  return cm;
}

// ---------------------------------------------------------------------------
// Bundles: <dir>/<label>.hmm for each label plus <dir>/bundle.json.

inline constexpr std::string_view kBundleFormat = "emorec-bundle v1";

inline std::string model_file_name(EmotionLabel l) { return std::string(to_string(l)) + ".hmm"; }

inline std::string format_training_log(const PerLabel<TrainReport>& reports) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (EmotionLabel l : kAllLabels) {
    const TrainReport& r = reports[index_of(l)];
    j[std::string(to_string(l))] = {{"iterations", r.iterations},
                                    {"converged", r.converged},
                                    {"starved_state_events", r.starved_state_events},
                                    {"log_likelihood_history", r.log_likelihood_history}};
  }
  return j.dump(2) + "\n";
}

inline void save_bundle(const std::filesystem::path& dir, const TrainedModelSet& trained) {
  const EmotionModelSet& set = trained.set;
  set.validate();
  std::filesystem::create_directories(dir);
  const auto write_text = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write " + (dir / name).string());
    out << text;
  };

  nlohmann::ordered_json manifest;
  manifest["format"] = kBundleFormat;
  manifest["labels"] = nlohmann::ordered_json::array();
  for (EmotionLabel l : kAllLabels) manifest["labels"].push_back(std::string(to_string(l)));
  RunConfig run{set.features, set.hmm, set.seed};
  manifest["config"] = to_json(run);
  manifest["seed"] = set.seed;
  manifest["corpus_description"] = set.corpus_description;
  manifest["corpus_digest"] = set.corpus_digest;
  manifest["created"] = set.created;
  manifest["models"] = nlohmann::ordered_json::object();
  for (EmotionLabel l : kAllLabels) {
    const std::string text = format_model(set.model(l));
    Fnv1a h;
    h.update(text);
    write_text(model_file_name(l), text);
    manifest["models"][std::string(to_string(l))] = {{"file", model_file_name(l)}, {"fnv1a64", h.hex()}};
  }
  write_text("bundle.json", manifest.dump(2) + "\n");
  write_text("training_log.json", format_training_log(trained.reports));
}

inline EmotionModelSet load_bundle(const std::filesystem::path& dir) {
  const auto read_text = [&](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) fail(ErrorCode::IntegrityError, "missing bundle file " + p.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const auto manifest_path = dir / "bundle.json";
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(read_text(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IntegrityError, manifest_path.string() + ": " + e.what());
  }

  EmotionModelSet set;
  try {
    if (manifest.at("format").get<std::string>() != kBundleFormat)
      fail(ErrorCode::IntegrityError, manifest_path.string() + ": unsupported bundle format");
    const RunConfig run = parse_run_config(manifest.at("config").dump());
    set.features = run.features;
    set.hmm = run.hmm;
    set.seed = manifest.at("seed").get<std::uint64_t>();
    set.corpus_description = manifest.at("corpus_description").get<std::string>();
    set.corpus_digest = manifest.at("corpus_digest").get<std::string>();
    set.created = manifest.at("created").get<std::string>();
    const auto& labels = manifest.at("labels");
    if (labels.size() != kNumLabels)
      fail(ErrorCode::IntegrityError, manifest_path.string() + ": label list must name all five labels");
    for (std::size_t i = 0; i < kNumLabels; ++i)
      if (labels.at(i).get<std::string>() != to_string(kAllLabels[i]))
        fail(ErrorCode::IntegrityError, manifest_path.string() + ": unexpected label order");
    for (EmotionLabel l : kAllLabels) {
      const auto& entry = manifest.at("models").at(std::string(to_string(l)));
      const auto file = dir / entry.at("file").get<std::string>();
      const std::string text = read_text(file);
      Fnv1a h;
      h.update(text);
      if (h.hex() != entry.at("fnv1a64").get<std::string>())
        fail(ErrorCode::IntegrityError, file.string() + ": checksum mismatch");
      set.models[index_of(l)] = parse_model(text, file.string());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::IntegrityError, manifest_path.string() + ": " + e.what());
  }
  set.validate();
  return set;
}

}  // namespace emorec
