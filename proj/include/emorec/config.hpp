// emorec/config.hpp

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

/*  Run configuration: every tunable of the front end and the HMMs, read from
    and written to a single JSON document. Missing keys keep their defaults;
    unknown keys are rejected.  */

#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "emorec/error.hpp"
#include "emorec/features.hpp"
#include "emorec/hmm.hpp"

namespace emorec {

struct HmmConfig {
  std::size_t num_states = 5;
  std::size_t num_mixtures = 3;
  Topology topology = Topology::LeftToRight;
  std::size_t max_iter = 40;
  double rel_tol = 1e-4;
  double variance_floor_ratio = 1e-3;

  void validate() const {
    if (num_states < 1) fail(ErrorCode::InvalidConfig, "hmm.num_states must be >= 1");
    if (num_mixtures < 1) fail(ErrorCode::InvalidConfig, "hmm.num_mixtures must be >= 1");
    if (max_iter < 1) fail(ErrorCode::InvalidConfig, "hmm.max_iter must be >= 1");
    if (!(rel_tol >= 0.0)) fail(ErrorCode::InvalidConfig, "hmm.rel_tol must be >= 0");
    if (!(variance_floor_ratio > 0.0)) fail(ErrorCode::InvalidConfig, "hmm.variance_floor_ratio must be > 0");
  }

  friend bool operator==(const HmmConfig&, const HmmConfig&) = default;
};

struct RunConfig {
  FeatureSettings features;
  HmmConfig hmm;
  std::uint64_t seed = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

using json = nlohmann::ordered_json;

inline void reject_unknown(const json& obj, std::string_view section,
                           std::initializer_list<std::string_view> known) {
  if (!obj.is_object()) fail(ErrorCode::InvalidConfig, std::string(section) + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || item.key() == k;
    if (!ok)
      fail(ErrorCode::InvalidConfig, "unknown key '" + std::string(section) + "." + item.key() + "'");
  }
}

template <typename T>
void read_key(const json& obj, const char* key, T& dst, std::string_view section) {
  if (!obj.contains(key)) return;
  try {
    dst = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::InvalidConfig, "bad value for '" + std::string(section) + "." + key + "'");
  }
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const FeatureSettings& f) {
  nlohmann::ordered_json j;
  j["frame"] = {{"frame_ms", f.frame.frame_ms},
                {"hop_ms", f.frame.hop_ms},
                {"pre_emphasis", f.frame.pre_emphasis}};
  j["mfcc"] = {{"num_ceps", f.mfcc.num_ceps},
               {"num_filters", f.mfcc.num_filters},
               {"lifter_len", f.mfcc.lifter_len},
               {"log_power_exponent", f.mfcc.log_power_exponent},
               {"include_c0", f.mfcc.include_c0},
               {"delta_window", f.mfcc.delta_window},
               {"cmn", f.mfcc.cmn},
               {"low_freq", f.mfcc.low_freq},
               {"high_freq", f.mfcc.high_freq}};
  j["prosody"] = {{"enabled", f.prosody_enabled},
                  {"f_lo", f.prosody.f_lo},
                  {"f_hi", f.prosody.f_hi},
                  {"contour_cutoff_hz", f.prosody.contour_cutoff_hz},
                  {"median_width", f.prosody.median_width},
                  {"delta_window", f.prosody.delta_window},
                  {"octave_tolerance", f.prosody.octave_tolerance}};
  return j;
}

inline nlohmann::ordered_json to_json(const HmmConfig& h) {
  return {{"num_states", h.num_states},
          {"num_mixtures", h.num_mixtures},
          {"topology", to_string(h.topology)},
          {"max_iter", h.max_iter},
          {"rel_tol", h.rel_tol},
          {"variance_floor_ratio", h.variance_floor_ratio}};
}

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j = to_json(c.features);
  j["hmm"] = to_json(c.hmm);
  j["seed"] = c.seed;
  return j;
}

/// Overlays the keys present in `j` onto `f`.
inline void apply_feature_json(const nlohmann::ordered_json& j, FeatureSettings& f) {
  using detail::read_key;
  if (j.contains("frame")) {
    const auto& s = j.at("frame");
    detail::reject_unknown(s, "frame", {"frame_ms", "hop_ms", "pre_emphasis"});
    read_key(s, "frame_ms", f.frame.frame_ms, "frame");
    read_key(s, "hop_ms", f.frame.hop_ms, "frame");
    read_key(s, "pre_emphasis", f.frame.pre_emphasis, "frame");
  }
  if (j.contains("mfcc")) {
    const auto& s = j.at("mfcc");
    detail::reject_unknown(s, "mfcc", {"num_ceps", "num_filters", "lifter_len", "log_power_exponent",
                                       "include_c0", "delta_window", "cmn", "low_freq", "high_freq"});
    read_key(s, "num_ceps", f.mfcc.num_ceps, "mfcc");
    read_key(s, "num_filters", f.mfcc.num_filters, "mfcc");
    read_key(s, "lifter_len", f.mfcc.lifter_len, "mfcc");
    read_key(s, "log_power_exponent", f.mfcc.log_power_exponent, "mfcc");
    read_key(s, "include_c0", f.mfcc.include_c0, "mfcc");
    read_key(s, "delta_window", f.mfcc.delta_window, "mfcc");
    read_key(s, "cmn", f.mfcc.cmn, "mfcc");
    read_key(s, "low_freq", f.mfcc.low_freq, "mfcc");
    read_key(s, "high_freq", f.mfcc.high_freq, "mfcc");
  }
  if (j.contains("prosody")) {
    const auto& s = j.at("prosody");
    detail::reject_unknown(s, "prosody", {"enabled", "f_lo", "f_hi", "contour_cutoff_hz", "median_width",
                                          "delta_window", "octave_tolerance"});
    read_key(s, "enabled", f.prosody_enabled, "prosody");
    read_key(s, "f_lo", f.prosody.f_lo, "prosody");
    read_key(s, "f_hi", f.prosody.f_hi, "prosody");
    read_key(s, "contour_cutoff_hz", f.prosody.contour_cutoff_hz, "prosody");
    read_key(s, "median_width", f.prosody.median_width, "prosody");
    read_key(s, "delta_window", f.prosody.delta_window, "prosody");
    read_key(s, "octave_tolerance", f.prosody.octave_tolerance, "prosody");
  }
  f.mfcc.validate();
  f.prosody.validate();
}

inline void apply_hmm_json(const nlohmann::ordered_json& s, HmmConfig& h) {
  using detail::read_key;
  detail::reject_unknown(s, "hmm", {"num_states", "num_mixtures", "topology", "max_iter", "rel_tol",
                                    "variance_floor_ratio"});
  read_key(s, "num_states", h.num_states, "hmm");
  read_key(s, "num_mixtures", h.num_mixtures, "hmm");
  std::string topo = to_string(h.topology);
  read_key(s, "topology", topo, "hmm");
  h.topology = parse_topology(topo);
  read_key(s, "max_iter", h.max_iter, "hmm");
  read_key(s, "rel_tol", h.rel_tol, "hmm");
  read_key(s, "variance_floor_ratio", h.variance_floor_ratio, "hmm");
  h.validate();
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  detail::reject_unknown(j, "config", {"frame", "mfcc", "prosody", "hmm", "seed"});
  RunConfig cfg;
  apply_feature_json(j, cfg.features);
  if (j.contains("hmm")) apply_hmm_json(j.at("hmm"), cfg.hmm);
  detail::read_key(j, "seed", cfg.seed, "config");
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

inline std::string format_run_config(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

// ---------------------------------------------------------------------------

/// 64-bit FNV-1a, used for bundle integrity and corpus digests.
class Fnv1a {
 public:
  void update(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      hash_ ^= p[i];
      hash_ *= 0x100000001b3ull;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }

  std::uint64_t value() const noexcept { return hash_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash_));
    return buf;
  }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

}  // namespace emorec
