// Copyright (c) 2026 The crowdtag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "crowdtag/cli.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "crowdtag/checkpoint.hpp"
#include "crowdtag/corpus.hpp"
#include "crowdtag/crowdsim.hpp"
#include "crowdtag/error.hpp"
#include "crowdtag/metrics.hpp"
#include "crowdtag/train.hpp"
#include "json.hpp"

namespace crowdtag {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kCheckpointFile = "checkpoint.json";
constexpr const char* kHistoryFile = "history.jsonl";
const std::vector<std::string> kSplits = {"train", "dev", "test"};

// ---------------------------------------------------------------------------
// Small utilities

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch && *epoch) {
    try {
      t = static_cast<std::time_t>(std::stoll(epoch));
    } catch (const std::exception&) {
      throw ConfigError("SOURCE_DATE_EPOCH is not an integer");
    }
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool ci_mode() {
  const char* ci = std::getenv("CI");
  if (!ci || !*ci) return false;
  const std::string v = ci;
  return v != "0" && v != "false";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

// Report JSON goes to `path` when given, else to `out`.
void emit(const ordered_json& j, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_text(path, j.dump(2) + "\n");
  }
}

// Run manifest, written when a command starts and rewritten when it ends.
class Manifest {
 public:
  Manifest(fs::path file, std::string command, const std::vector<std::string>& args)
      : file_(std::move(file)) {
    j_["tool"] = "crowdtag";
    j_["version"] = kToolVersion;
    j_["command"] = std::move(command);
    j_["arguments"] = args;
    j_["seed"] = nullptr;
    j_["config"] = ordered_json::object();
    j_["inputs"] = ordered_json::array();
    j_["outputs"] = ordered_json::array();
    j_["status"] = "running";
    j_["started_at"] = utc_timestamp();
    j_["finished_at"] = nullptr;
  }

  void seed(std::uint64_t s) { j_["seed"] = s; }
  void config(ordered_json c) { j_["config"] = std::move(c); }
  void input(const fs::path& p) {
    j_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  }
  void optional_input(const fs::path& p) {
    if (fs::exists(p)) input(p);
  }
  // Output names are relative to the manifest's directory.
  void output(const std::string& name) { outputs_.push_back(name); }

  void write_started() {
    j_["outputs"] = ordered_json::array();
    for (const auto& o : outputs_) j_["outputs"].push_back({{"path", o}, {"sha256", nullptr}});
    write_text(file_, j_.dump(2) + "\n");
  }
  void write_complete() {
    j_["outputs"] = ordered_json::array();
    const fs::path dir = file_.parent_path();
    for (const auto& o : outputs_)
      j_["outputs"].push_back({{"path", o}, {"sha256", sha256_file(dir / o)}});
    j_["status"] = "complete";
    j_["finished_at"] = utc_timestamp();
    write_text(file_, j_.dump(2) + "\n");
  }

 private:
  fs::path file_;
  ordered_json j_;
  std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------
// JSON views of reports and configs

ordered_json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

ordered_json counts_json(const MatchCounts& c) {
  return {{"pred_credit", c.pred_credit},
          {"gold_credit", c.gold_credit},
          {"pred_spans", c.pred_spans},
          {"gold_spans", c.gold_spans}};
}

ordered_json report_json(const std::vector<SpanPair>& pairs) {
  const EvalReport r = evaluate(pairs);
  const BreakdownReport b = breakdown(pairs);
  ordered_json j;
  j["pairs"] = pairs.size();
  j["gold_spans"] = r.gold_spans;
  j["pred_spans"] = r.pred_spans;
  for (MatchMode m : kMatchModes) j[match_mode_name(m)] = prf_json(r.at(m));
  ordered_json counts;
  for (MatchMode m : kMatchModes)
    counts[match_mode_name(m)] = counts_json(r.counts[static_cast<std::size_t>(m)]);
  j["counts"] = counts;
  ordered_json length = ordered_json::array();
  for (std::size_t k = 0; k < kLengthBuckets; ++k) {
    ordered_json row = {{"bucket", k + 1 < kLengthBuckets ? std::to_string(k + 1)
                                                          : std::to_string(k + 1) + "+"}};
    row.update(prf_json(b.length_prf(k)));
    row["counts"] = counts_json(b.length[k]);
    length.push_back(row);
  }
  ordered_json category = ordered_json::array();
  for (std::size_t k = 0; k < kCategoryCount; ++k) {
    const auto c = static_cast<SentenceCategory>(k);
    ordered_json row = {{"category", category_name(c)},
                        {"sentences", b.category_sentences[k]}};
    row.update(prf_json(b.category_prf(c)));
    row["counts"] = counts_json(b.category[k]);
    category.push_back(row);
  }
  j["breakdown"] = {{"length", length}, {"category", category}};
  return j;
}

ordered_json profile_json(const NoiseProfile& p) {
  return {{"annotator", p.annotator},
          {"miss_prob", p.miss_prob},
          {"boundary_shift_prob", p.boundary_shift_prob},
          {"max_shift", p.max_shift},
          {"flip_prob", p.flip_prob},
          {"spurious_rate", p.spurious_rate}};
}

ordered_json sim_config_json(const SimConfig& c) {
  ordered_json profiles = ordered_json::array();
  for (const auto& p : c.profiles) profiles.push_back(profile_json(p));
  return {{"neutral_vocab", c.neutral_vocab},
          {"positive_vocab", c.positive_vocab},
          {"negative_vocab", c.negative_vocab},
          {"zipf_exponent", c.zipf_exponent},
          {"min_sentence_length", c.min_sentence_length},
          {"max_sentence_length", c.max_sentence_length},
          {"mean_expressions", c.mean_expressions},
          {"max_expressions", c.max_expressions},
          {"min_expression_length", c.min_expression_length},
          {"max_expression_length", c.max_expression_length},
          {"interior_neutral_prob", c.interior_neutral_prob},
          {"min_gap", c.min_gap},
          {"min_annotators", c.min_annotators},
          {"max_annotators", c.max_annotators},
          {"train_sentences", c.train_sentences},
          {"dev_sentences", c.dev_sentences},
          {"test_sentences", c.test_sentences},
          {"gold_on_train", c.gold_on_train},
          {"seed", c.seed},
          {"profiles", profiles}};
}

ordered_json model_config_json(const ModelConfig& c) {
  return {{"model_dim", c.model_dim},       {"layers", c.layers},
          {"heads", c.heads},               {"ff_dim", c.ff_dim},
          {"adapter_dim", c.adapter_dim},   {"annotator_dim", c.annotator_dim},
          {"pgn_layers", c.pgn_layers},     {"lstm_hidden", c.lstm_hidden},
          {"mlp_hidden", c.mlp_hidden},     {"max_len", c.max_len},
          {"annotator_init_std", c.annotator_init_std}};
}

ordered_json train_config_json(const TrainConfig& c) {
  return {{"mode", train_mode_name(c.mode)},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"batch_size", c.batch_size},
          {"grad_clip", c.grad_clip},
          {"dropout", c.dropout},
          {"max_epochs", c.max_epochs},
          {"patience", c.patience},
          {"seed", c.seed},
          {"stage2_epochs", c.stage2_epochs},
          {"mixup_alpha", c.mixup.alpha},
          {"mixup_pairs", c.mixup.pairs_per_sentence},
          {"freeze_backbone", c.freeze_backbone},
          {"warmup_epochs", c.warmup_epochs}};
}

ordered_json stats_json(const StatsReport& s) {
  return {{"sentences", s.sentences},
          {"annotations", s.annotations},
          {"positive", s.positive},
          {"negative", s.negative},
          {"annotators", s.annotators},
          {"avg_span_length", s.avg_span_length},
          {"avg_annotators_per_sentence", s.avg_annotators_per_sentence},
          {"avg_sentences_per_annotator", s.avg_sentences_per_annotator}};
}

ordered_json kappa_json(const CrowdCorpus& corpus, bool ignore_all_o) {
  try {
    return pairwise_kappa(corpus, ignore_all_o);
  } catch (const InsufficientOverlapError&) {
    return nullptr;
  }
}

// Resolves the seed flag: required in CI, otherwise defaults to 1.
std::uint64_t resolve_seed(const CLI::Option* opt, std::uint64_t value, std::ostream& err) {
  if (opt->count() > 0) return value;
  if (ci_mode()) throw CLI::RequiredError("--seed (required when CI is set)");
  err << "warning: --seed not given, using 1\n";
  return 1;
}

fs::path split_path(const fs::path& dir, const std::string& split) {
  return dir / (split + ".jsonl");
}

// ---------------------------------------------------------------------------
// Commands

struct SimulateArgs {
  std::string out;
  std::string preset = "noisy";
  std::uint64_t seed = 1;
  SimConfig sim;
  std::size_t profiles = 0;
  double spread = 0.0;
  NoiseProfile mean;
};

void cmd_simulate(SimulateArgs& a, const CLI::App& sub, const CLI::Option* seed_opt,
                  const std::vector<std::string>& args, std::ostream& out,
                  std::ostream& err) {
  const std::uint64_t seed = resolve_seed(seed_opt, a.seed, err);
  SimConfig base;
  NoiseProfile mean;
  std::size_t count = 0;
  double spread = 0.0;
  if (a.preset == "noisy") {
    base = noisy_benchmark_config(seed);
    mean.miss_prob = 0.15;
    mean.boundary_shift_prob = 0.3;
    mean.max_shift = 2;
    mean.flip_prob = 0.05;
    mean.spurious_rate = 0.1;
    count = 70;
    spread = 8.0;
  } else if (a.preset == "zero-noise") {
    base = zero_noise_config(seed);
    count = 1;
  } else {
    throw ConfigError("unknown preset '" + a.preset + "' (expected noisy or zero-noise)");
  }
  // Flags given explicitly override the preset.
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  SimConfig c = base;
  c.seed = seed;
  if (given("--neutral-vocab")) c.neutral_vocab = a.sim.neutral_vocab;
  if (given("--positive-vocab")) c.positive_vocab = a.sim.positive_vocab;
  if (given("--negative-vocab")) c.negative_vocab = a.sim.negative_vocab;
  if (given("--zipf")) c.zipf_exponent = a.sim.zipf_exponent;
  if (given("--min-length")) c.min_sentence_length = a.sim.min_sentence_length;
  if (given("--max-length")) c.max_sentence_length = a.sim.max_sentence_length;
  if (given("--mean-expressions")) c.mean_expressions = a.sim.mean_expressions;
  if (given("--max-expressions")) c.max_expressions = a.sim.max_expressions;
  if (given("--max-expression-length")) c.max_expression_length = a.sim.max_expression_length;
  if (given("--interior-neutral")) c.interior_neutral_prob = a.sim.interior_neutral_prob;
  if (given("--min-annotators")) c.min_annotators = a.sim.min_annotators;
  if (given("--max-annotators")) c.max_annotators = a.sim.max_annotators;
  if (given("--train-sentences")) c.train_sentences = a.sim.train_sentences;
  if (given("--dev-sentences")) c.dev_sentences = a.sim.dev_sentences;
  if (given("--test-sentences")) c.test_sentences = a.sim.test_sentences;
  if (given("--gold-on-train")) c.gold_on_train = a.sim.gold_on_train;
  bool regenerate = false;
  for (const char* name : {"--profiles", "--spread", "--miss", "--shift", "--max-shift",
                           "--flip", "--spurious"})
    regenerate = regenerate || given(name);
  if (regenerate) {
    if (given("--profiles")) count = a.profiles;
    if (given("--spread")) spread = a.spread;
    if (given("--miss")) mean.miss_prob = a.mean.miss_prob;
    if (given("--shift")) mean.boundary_shift_prob = a.mean.boundary_shift_prob;
    if (given("--max-shift")) mean.max_shift = a.mean.max_shift;
    if (given("--flip")) mean.flip_prob = a.mean.flip_prob;
    if (given("--spurious")) mean.spurious_rate = a.mean.spurious_rate;
    mean.annotator = "mean";
    validate(mean);
    c.profiles = make_profiles(count, mean, spread, seed);
  }
  validate(c);

  const fs::path dir = a.out;
  ensure_dir(dir);
  Manifest manifest(dir / kManifestFile, "simulate", args);
  manifest.seed(seed);
  manifest.config({{"preset", a.preset}, {"simulation", sim_config_json(c)}});
  for (const auto& s : kSplits) manifest.output(s + ".jsonl");
  manifest.output(kRegistryFile);
  manifest.write_started();

  const SimulatedCorpus sim = generate_corpus(c);
  const CrowdCorpus* parts[3] = {&sim.train, &sim.dev, &sim.test};
  ordered_json summary = {{"command", "simulate"}, {"out", dir.string()}};
  for (std::size_t i = 0; i < 3; ++i) {
    save_corpus(*parts[i], split_path(dir, kSplits[i]));
    // Reload to make sure what was written validates.
    const CrowdCorpus back = load_split(dir, kSplits[i]);
    summary[kSplits[i]] = stats_json(corpus_stats(back));
  }
  manifest.write_complete();
  out << summary.dump(2) << '\n';
}

struct TrainArgs {
  std::string corpus;
  std::string out;
  std::string mode = "ADAPTER";
  bool quiet = false;
  ModelConfig model;
  TrainConfig train;
};

void cmd_train(TrainArgs& a, const CLI::Option* seed_opt, const std::vector<std::string>& args,
               const std::string& config_file, std::ostream& out, std::ostream& err) {
  TrainConfig tc = a.train;
  tc.mode = parse_train_mode(a.mode);
  tc.seed = resolve_seed(seed_opt, a.train.seed, err);
  validate(tc);

  const fs::path in_dir = a.corpus;
  const fs::path dir = a.out;
  ensure_dir(dir);
  Manifest manifest(dir / kManifestFile, "train", args);
  manifest.seed(tc.seed);
  manifest.config({{"model", model_config_json(a.model)}, {"train", train_config_json(tc)}});
  manifest.input(split_path(in_dir, "train"));
  manifest.input(split_path(in_dir, "dev"));
  manifest.optional_input(in_dir / kRegistryFile);
  if (!config_file.empty()) manifest.input(config_file);
  manifest.output(kCheckpointFile);
  manifest.output(kHistoryFile);
  manifest.write_started();

  const CrowdCorpus train_corpus = load_split(in_dir, "train");
  const CrowdCorpus dev_corpus = load_split(in_dir, "dev");
  EpochCallback log;
  if (!a.quiet) {
    log = [&err](const HistoryEntry& h) {
      if (h.kind == HistoryEntry::Kind::kStageBoundary) {
        err << "stage " << h.stage << ": restored epoch " << h.restored_epoch << '\n';
        return;
      }
      err << "epoch " << h.epoch << " stage " << h.stage << " loss " << h.train_loss
          << " dev exact f1 " << h.dev.at(MatchMode::kExact).f1
          << (h.improved ? " *" : "") << '\n';
    };
  }
  TrainResult result = train(train_corpus, dev_corpus, a.model, tc, log);
  save_checkpoint(dir / kCheckpointFile, result.model, train_mode_name(tc.mode));
  std::ostringstream history;
  write_history_jsonl(history, result.history);
  write_text(dir / kHistoryFile, history.str());
  manifest.write_complete();

  out << ordered_json{{"command", "train"},
                      {"mode", train_mode_name(tc.mode)},
                      {"epochs", result.epochs_run},
                      {"best_epoch", result.best_epoch},
                      {"best_dev_exact_f1", result.best_dev_f1},
                      {"parameters", result.model.parameters().scalar_count()}}
             .dump(2)
      << '\n';
}

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::string split = "test";
  std::string annotator = "expert";
  bool against_gold = false;
  std::string out;
};

void cmd_eval(const EvalArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  std::optional<Manifest> manifest;
  const fs::path split_file = split_path(a.corpus, a.split);
  if (!a.out.empty()) {
    const fs::path report = a.out;
    manifest.emplace(fs::path(report.string() + ".manifest.json"), "eval", args);
    manifest->config({{"split", a.split},
                      {"annotator", a.annotator},
                      {"against_gold", a.against_gold}});
    manifest->input(a.checkpoint);
    manifest->input(split_file);
    manifest->optional_input(fs::path(a.corpus) / kRegistryFile);
    manifest->output(report.filename().string());
    manifest->write_started();
  }

  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const TaggerModel& model = ck.model;
  const CrowdCorpus corpus = load_split(a.corpus, a.split);
  const bool conditioned = !model.registry().empty();

  ordered_json report = {{"command", "eval"},
                         {"mode", ck.mode},
                         {"split", a.split},
                         {"annotator", a.annotator}};

  // Condition for a named annotator; models without annotator input ignore
  // it, but the id must still exist.
  auto condition_for = [&](const std::string& id) {
    if (conditioned) return AnnotatorCondition::annotator(model.registry().index_of(id));
    corpus.registry.index_of(id);
    return AnnotatorCondition::none();
  };
  auto annotator_report = [&](const std::string& id) {
    const AnnotatorCondition cond = condition_for(id);
    ordered_json r = {{"annotator", id}, {"target", a.against_gold ? "gold" : "crowd"}};
    r.update(report_json(a.against_gold ? gold_pairs(model, corpus, cond)
                                        : crowd_pairs(model, corpus, false, cond, id)));
    return r;
  };

  if (a.annotator == "expert") {
    report["target"] = "gold";
    report.update(report_json(gold_pairs(model, corpus, inference_condition(model))));
  } else if (a.annotator == "crowd") {
    // Every crowd annotation scored under its own annotator.
    report["target"] = "crowd";
    report.update(
        report_json(crowd_pairs(model, corpus, conditioned, AnnotatorCondition::none())));
  } else if (a.annotator == "each") {
    const auto& ids = conditioned ? model.registry().ids() : corpus.registry.ids();
    ordered_json reports = ordered_json::array();
    for (const auto& id : ids) {
      if (!a.against_gold) {
        bool present = false;
        for (const auto& e : corpus.entries)
          for (const auto& ann : e.annotations) present = present || ann.annotator == id;
        if (!present) continue;
      }
      reports.push_back(annotator_report(id));
    }
    report["target"] = a.against_gold ? "gold" : "crowd";
    report["reports"] = reports;
  } else {
    report.update(annotator_report(a.annotator));
  }

  emit(report, a.out, out);
  if (manifest) manifest->write_complete();
}

struct AggregateArgs {
  std::string corpus;
  std::string out;
};

void cmd_aggregate(const AggregateArgs& a, const std::vector<std::string>& args,
                   std::ostream& out) {
  const fs::path in_dir = a.corpus;
  const fs::path dir = a.out;
  std::vector<std::string> present;
  for (const auto& s : kSplits)
    if (fs::exists(split_path(in_dir, s))) present.push_back(s);
  if (present.empty()) throw IoError("no split files found in " + in_dir.string());
  ensure_dir(dir);
  Manifest manifest(dir / kManifestFile, "aggregate", args);
  for (const auto& s : present) {
    manifest.input(split_path(in_dir, s));
    manifest.output(s + ".jsonl");
  }
  manifest.optional_input(in_dir / kRegistryFile);
  manifest.output(kRegistryFile);
  manifest.write_started();

  ordered_json summary = {{"command", "aggregate"}, {"out", dir.string()}};
  for (const auto& s : present) {
    const CrowdCorpus mv = aggregate_majority_vote(load_split(in_dir, s));
    save_corpus(mv, split_path(dir, s));
    summary[s] = stats_json(corpus_stats(load_split(dir, s)));
  }
  manifest.write_complete();
  out << summary.dump(2) << '\n';
}

struct StatsArgs {
  std::string corpus;
  std::vector<std::string> splits;
  std::string out;
};

void cmd_stats(const StatsArgs& a, std::ostream& out) {
  std::vector<std::string> splits = a.splits;
  if (splits.empty())
    for (const auto& s : kSplits)
      if (fs::exists(split_path(a.corpus, s))) splits.push_back(s);
  if (splits.empty()) throw IoError("no split files found in " + a.corpus);
  ordered_json report = {{"command", "stats"}};
  ordered_json per_split = ordered_json::object();
  // Every reported split pooled, for corpus-wide agreement.
  CrowdCorpus pooled;
  for (const auto& s : splits) {
    const CrowdCorpus c = load_split(a.corpus, s);
    for (const auto& id : c.registry.ids()) pooled.registry.add(id);
    pooled.entries.insert(pooled.entries.end(), c.entries.begin(), c.entries.end());
    ordered_json j = stats_json(corpus_stats(c));
    j["gold"] = c.has_gold() ? stats_json(corpus_stats(c, AnnotationSource::kGold))
                             : ordered_json(nullptr);
    j["kappa"] = {{"all_tokens", kappa_json(c, false)},
                  {"excluding_all_o", kappa_json(c, true)}};
    per_split[s] = j;
  }
  report["splits"] = per_split;
  report["overall_kappa"] = {{"all_tokens", kappa_json(pooled, false)},
                             {"excluding_all_o", kappa_json(pooled, true)}};
  emit(report, a.out, out);
}

}  // namespace

ExitCode exit_code_for_current_exception() {
  try {
    throw;
  } catch (const CLI::Error&) {
    return ExitCode::kUsage;
  } catch (const UnknownAnnotatorError&) {
    return ExitCode::kUnknownAnnotator;
  } catch (const InsufficientOverlapError&) {
    return ExitCode::kInsufficientData;
  } catch (const ConfigError&) {
    return ExitCode::kConfig;
  } catch (const IoError&) {
    return ExitCode::kIo;
  } catch (const FormatError&) {
    return ExitCode::kFormat;
  } catch (const ValidationError&) {
    return ExitCode::kValidation;
  } catch (...) {
    return ExitCode::kInternal;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Crowd-annotated span tagging: simulate, train, evaluate, aggregate, stats",
               "crowdtag"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI or TOML file with option values");
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);

  // simulate
  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Generate a synthetic crowd corpus");
  simulate->add_option("--out", sim.out, "Output directory")->required();
  CLI::Option* sim_seed = simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--preset", sim.preset, "noisy or zero-noise")->capture_default_str();
  simulate->add_option("--neutral-vocab", sim.sim.neutral_vocab);
  simulate->add_option("--positive-vocab", sim.sim.positive_vocab);
  simulate->add_option("--negative-vocab", sim.sim.negative_vocab);
  simulate->add_option("--zipf", sim.sim.zipf_exponent);
  simulate->add_option("--min-length", sim.sim.min_sentence_length);
  simulate->add_option("--max-length", sim.sim.max_sentence_length);
  simulate->add_option("--mean-expressions", sim.sim.mean_expressions);
  simulate->add_option("--max-expressions", sim.sim.max_expressions);
  simulate->add_option("--max-expression-length", sim.sim.max_expression_length);
  simulate->add_option("--interior-neutral", sim.sim.interior_neutral_prob);
  simulate->add_option("--min-annotators", sim.sim.min_annotators);
  simulate->add_option("--max-annotators", sim.sim.max_annotators);
  simulate->add_option("--train-sentences", sim.sim.train_sentences);
  simulate->add_option("--dev-sentences", sim.sim.dev_sentences);
  simulate->add_option("--test-sentences", sim.sim.test_sentences);
  simulate->add_flag("--gold-on-train", sim.sim.gold_on_train, "Attach gold to the train split");
  simulate->add_option("--profiles", sim.profiles, "Number of annotator profiles");
  simulate->add_option("--spread", sim.spread, "Profile concentration; 0 = identical");
  simulate->add_option("--miss", sim.mean.miss_prob, "Mean span miss probability");
  simulate->add_option("--shift", sim.mean.boundary_shift_prob, "Mean boundary shift probability");
  simulate->add_option("--max-shift", sim.mean.max_shift, "Largest boundary shift");
  simulate->add_option("--flip", sim.mean.flip_prob, "Mean polarity flip probability");
  simulate->add_option("--spurious", sim.mean.spurious_rate, "Mean spurious spans per sentence");

  // train
  TrainArgs tr;
  CLI::App* train_cmd = app.add_subcommand("train", "Train a tagger on a corpus directory");
  train_cmd->add_option("--corpus", tr.corpus, "Directory with train/dev JSONL")->required();
  train_cmd->add_option("--out", tr.out, "Output directory")->required();
  train_cmd->add_option("--mode", tr.mode, "ALL, MV, ADAPTER or ADAPTER_MIXUP")
      ->capture_default_str();
  CLI::Option* train_seed = train_cmd->add_option("--seed", tr.train.seed, "Random seed");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch log");
  auto* m = &tr.model;
  train_cmd->add_option("--model-dim", m->model_dim)->capture_default_str();
  train_cmd->add_option("--layers", m->layers)->capture_default_str();
  train_cmd->add_option("--heads", m->heads)->capture_default_str();
  train_cmd->add_option("--ff-dim", m->ff_dim)->capture_default_str();
  train_cmd->add_option("--adapter-dim", m->adapter_dim)->capture_default_str();
  train_cmd->add_option("--annotator-dim", m->annotator_dim)->capture_default_str();
  train_cmd->add_option("--pgn-layers", m->pgn_layers)->capture_default_str();
  train_cmd->add_option("--lstm-hidden", m->lstm_hidden, "Per direction")->capture_default_str();
  train_cmd->add_option("--mlp-hidden", m->mlp_hidden)->capture_default_str();
  train_cmd->add_option("--max-len", m->max_len)->capture_default_str();
  train_cmd->add_option("--annotator-init-std", m->annotator_init_std)->capture_default_str();
  auto* t = &tr.train;
  train_cmd->add_option("--lr", t->adam.learning_rate)->capture_default_str();
  train_cmd->add_option("--beta1", t->adam.beta1)->capture_default_str();
  train_cmd->add_option("--beta2", t->adam.beta2)->capture_default_str();
  train_cmd->add_option("--adam-eps", t->adam.epsilon)->capture_default_str();
  train_cmd->add_option("--batch-size", t->batch_size)->capture_default_str();
  train_cmd->add_option("--grad-clip", t->grad_clip)->capture_default_str();
  train_cmd->add_option("--dropout", t->dropout)->capture_default_str();
  train_cmd->add_option("--max-epochs", t->max_epochs)->capture_default_str();
  train_cmd->add_option("--patience", t->patience)->capture_default_str();
  train_cmd->add_option("--stage2-epochs", t->stage2_epochs)->capture_default_str();
  train_cmd->add_option("--mixup-alpha", t->mixup.alpha)->capture_default_str();
  train_cmd->add_option("--mixup-pairs", t->mixup.pairs_per_sentence)->capture_default_str();
  train_cmd->add_flag("--freeze-backbone", t->freeze_backbone);
  train_cmd->add_option("--warmup-epochs", t->warmup_epochs)->capture_default_str();

  // eval
  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a corpus split");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "checkpoint.json")->required();
  eval_cmd->add_option("--corpus", ev.corpus, "Corpus directory")->required();
  eval_cmd->add_option("--split", ev.split)->capture_default_str();
  eval_cmd->add_option("--annotator", ev.annotator,
                       "expert, an annotator id, crowd (each annotation under its own "
                       "annotator) or each (one report per annotator)")
      ->capture_default_str();
  eval_cmd->add_flag("--against-gold", ev.against_gold,
                     "Score annotator-conditioned predictions against gold");
  eval_cmd->add_option("--out", ev.out, "Report file (default stdout)");

  // aggregate
  AggregateArgs ag;
  CLI::App* aggregate = app.add_subcommand("aggregate", "Majority-vote every split");
  aggregate->add_option("--corpus", ag.corpus, "Corpus directory")->required();
  aggregate->add_option("--out", ag.out, "Output directory")->required();

  // stats
  StatsArgs st;
  CLI::App* stats = app.add_subcommand("stats", "Corpus statistics and agreement");
  stats->add_option("--corpus", st.corpus, "Corpus directory")->required();
  stats->add_option("--split", st.splits, "Splits to report (default: all present)");
  stats->add_option("--out", st.out, "Report file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  std::string config_file;
  if (auto* c = app.get_config_ptr(); c && c->count() > 0) config_file = c->as<std::string>();

  try {
    if (simulate->parsed()) {
      cmd_simulate(sim, *simulate, sim_seed, args, out, err);
    } else if (train_cmd->parsed()) {
      cmd_train(tr, train_seed, args, config_file, out, err);
    } else if (eval_cmd->parsed()) {
      cmd_eval(ev, args, out);
    } else if (aggregate->parsed()) {
      cmd_aggregate(ag, args, out);
    } else if (stats->parsed()) {
      cmd_stats(st, out);
    }
  } catch (...) {
    const ExitCode code = exit_code_for_current_exception();
    try {
      throw;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
    } catch (...) {
      err << "error: unknown failure\n";
    }
    return static_cast<int>(code);
  }
  return 0;
}

}  // namespace crowdtag
