// emorec/commands.hpp

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

/*  The five subcommands behind the `emorec` binary. Each returns a process
    exit code (0 success, 1 data or partial failure, 2 usage or config
    error), writes results to `out` and diagnostics to `err`.  */

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include "emorec/classifier.hpp"
#include "emorec/config.hpp"
#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/features.hpp"

namespace emorec::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2 };

inline int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
      return kUsageError;
    default:
      return kDataError;
  }
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

/// "dir/name.wav" -> "dir_name.feat".
inline std::string feature_file_name(const std::string& source) {
  std::filesystem::path p(source);
  std::string stem = (p.parent_path() / p.stem()).generic_string();
  for (char& c : stem)
    if (c == '/' || c == '\\' || c == ':') c = '_';
  while (!stem.empty() && (stem.front() == '_' || stem.front() == '.')) stem.erase(stem.begin());
  return stem + ".feat";
}

inline bool is_manifest(const std::filesystem::path& p) { return p.extension() == ".csv"; }

}  // namespace detail

/// Writes one feature file per utterance of a WAV file or a manifest.
/// Failures are reported per file and do not stop the run.
inline int cmd_extract(const std::filesystem::path& input, const RunConfig& cfg,
                       const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::string, std::filesystem::path>> jobs;  // source id, audio path
  try {
    if (detail::is_manifest(input)) {
      for (const auto& rec : load_manifest(input)) jobs.emplace_back(rec.path, resolve_audio_path(input, rec));
    } else {
      jobs.emplace_back(input.filename().string(), input);
    }
    std::filesystem::create_directories(out_dir);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }

  std::size_t failures = 0;
  for (const auto& [source, path] : jobs) {
    try {
      AudioClip clip = load_wav(path);
      clip.source_id = source;
      const FeatureMatrix fm = extract_features(clip, cfg.features);
      const auto dst = out_dir / detail::feature_file_name(source);
      detail::write_file(dst, format_feature_file(fm));
      out << dst.filename().string() << " frames=" << fm.num_frames() << " dim=" << fm.dim() << "\n";
    } catch (const Error& e) {
      ++failures;
      err << "error: " << source << ": " << e.what() << "\n";
    }
  }
  if (failures > 0) {
    err << failures << " of " << jobs.size() << " files failed\n";
    return kDataError;
  }
  return kOk;
}

/// Trains on the manifest's train split and writes a bundle to `out_dir`.
inline int cmd_train(const std::filesystem::path& manifest, const RunConfig& cfg,
                     const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err) {
  try {
    const auto records = filter_corpus(load_manifest(manifest), std::nullopt, Split::Train);
    const std::string description =
        manifest.filename().string() + ": " + std::to_string(records.size()) + " training utterances";
    const TrainedModelSet trained =
        train_model_set(records, manifest_loader(manifest), cfg.hmm, cfg.features, cfg.seed, description);
    for (EmotionLabel l : kAllLabels) {
      const TrainReport& r = trained.reports[index_of(l)];
      err << "train " << to_string(l) << ": iterations=" << r.iterations
          << " converged=" << (r.converged ? "yes" : "no") << " log_likelihood:";
      char buf[32];
      for (double v : r.log_likelihood_history) {
        std::snprintf(buf, sizeof buf, " %.6f", v);
        err << buf;
      }
      err << "\n";
    }
    save_bundle(out_dir, trained);
    out << "bundle=" << out_dir.string() << " corpus_digest=" << trained.set.corpus_digest << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

/// decision=<label> ll_<label>=<r> (x5) margin=<r>
inline std::string format_decision_line(const ScoreBreakdown& sb) {
  std::string line = "decision=" + std::string(to_string(sb.decision));
  char buf[64];
  for (EmotionLabel l : kAllLabels) {
    std::snprintf(buf, sizeof buf, " ll_%s=%.10g", std::string(to_string(l)).c_str(),
                  sb.log_likelihoods[index_of(l)]);
    line += buf;
  }
  std::snprintf(buf, sizeof buf, " margin=%.10g", sb.margin);
  line += buf;
  return line;
}

inline int cmd_classify(const std::filesystem::path& bundle, const std::filesystem::path& audio,
                        std::ostream& out, std::ostream& err) {
  try {
    const EmotionModelSet set = load_bundle(bundle);
    AudioClip clip = load_wav(audio);
    out << format_decision_line(classify(set, clip)) << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

/// Evaluates the manifest's test split. With `out_dir`, also writes
/// report[_gender].txt and counts[_gender].txt there.
inline int cmd_eval(const std::filesystem::path& bundle, const std::filesystem::path& manifest,
                    std::optional<Gender> gender, const std::optional<std::filesystem::path>& out_dir,
                    std::ostream& out, std::ostream& err) {
  try {
    const EmotionModelSet set = load_bundle(bundle);
    const auto records = filter_corpus(load_manifest(manifest), std::nullopt, Split::Test);
    const EvaluationResult res = evaluate(set, records, manifest_loader(manifest), gender);
    const std::string title = gender ? "Confusion matrix, gender dependent (" + std::string(to_string(*gender)) + ")"
                                     : std::string("Confusion matrix, gender independent");
    const std::string report = format_report(res, title);
    out << report;
    if (out_dir) {
      std::filesystem::create_directories(*out_dir);
      const std::string suffix = gender ? "_" + std::string(to_string(*gender)) : "";
      detail::write_file(*out_dir / ("report" + suffix + ".txt"), report);
      detail::write_file(*out_dir / ("counts" + suffix + ".txt"), format_counts(res));
    }
    for (const auto& r : res.rejected) err << "rejected: " << r.source_id << ": " << r.reason << "\n";
    return res.rejected.empty() ? kOk : kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

inline int cmd_synth(const SynthOptions& opts, const std::filesystem::path& out_dir, std::ostream& out,
                     std::ostream& err) {
  try {
    const SynthCorpus corpus = generate_synthetic_corpus(out_dir, opts);
    err << "synth: wrote " << corpus.records.size() << " utterances\n";
    out << "manifest=" << corpus.manifest_path.string() << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace emorec::cli
