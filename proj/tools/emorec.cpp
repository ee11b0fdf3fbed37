// tools/emorec.cpp

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

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "emorec/commands.hpp"

namespace {

using namespace emorec;

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON run configuration");
  cmd->add_option("--seed", flags.seed, "override the configured seed");
}

RunConfig resolve_config(const CommonFlags& flags) {
  RunConfig cfg = flags.config_path.empty() ? RunConfig{} : load_run_config(flags.config_path);
  if (flags.seed) cfg.seed = *flags.seed;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"emorec: HMM speech emotion recognition"};
  app.require_subcommand(1);

  CommonFlags common;
  std::string input, bundle, manifest, audio, out_dir, gender_flag;

  auto* extract = app.add_subcommand("extract", "write per-utterance feature files");
  add_common(extract, common);
  extract->add_option("input", input, "WAV file or manifest CSV")->required();
  extract->add_option("--out", out_dir, "output directory")->required();

  auto* train = app.add_subcommand("train", "train one HMM per emotion");
  add_common(train, common);
  train->add_option("manifest", manifest, "corpus manifest CSV")->required();
  train->add_option("--out", out_dir, "bundle directory")->required();

  auto* classify = app.add_subcommand("classify", "classify one utterance");
  classify->add_option("bundle", bundle, "model bundle directory")->required();
  classify->add_option("audio", audio, "WAV file")->required();

  auto* eval = app.add_subcommand("eval", "confusion matrix on the test split");
  eval->add_option("bundle", bundle, "model bundle directory")->required();
  eval->add_option("manifest", manifest, "corpus manifest CSV")->required();
  eval->add_option("--gender", gender_flag, "restrict to one gender")->check(CLI::IsMember({"male", "female"}));
  eval->add_option("--out", out_dir, "directory for report and counts files");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "generate a synthetic labelled corpus");
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--count", synth_opts.utterances_per_label_per_gender, "utterances per label and gender");
  synth->add_option("--duration", synth_opts.duration_s, "seconds per utterance");
  synth->add_option("--sample-rate", synth_opts.sample_rate, "Hz");
  synth->add_option("--out", out_dir, "output directory (must be empty)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kUsageError;
  }

  try {
    if (*extract) return cli::cmd_extract(input, resolve_config(common), out_dir, std::cout, std::cerr);
    if (*train) return cli::cmd_train(manifest, resolve_config(common), out_dir, std::cout, std::cerr);
    if (*classify) return cli::cmd_classify(bundle, audio, std::cout, std::cerr);
    if (*eval) {
      std::optional<Gender> gender;
      if (!gender_flag.empty()) gender = parse_gender(gender_flag);
      std::optional<std::filesystem::path> out;
      if (!out_dir.empty()) out = out_dir;
      return cli::cmd_eval(bundle, manifest, gender, out, std::cout, std::cerr);
    }
    if (*synth) return cli::cmd_synth(synth_opts, out_dir, std::cout, std::cerr);
  } catch (const Error& e) {
    // Only configuration loading reaches here.
    std::cerr << "error: " << e.what() << "\n";
    return cli::kUsageError;
  }
  return cli::kUsageError;
}
