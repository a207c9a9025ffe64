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

#include "crowdtag/train.hpp"

#include <algorithm>
#include <cctype>
#include <ostream>

#include "crowdtag/crowdsim.hpp"
#include "crowdtag/error.hpp"
#include "json.hpp"

namespace crowdtag {

const char* train_mode_name(TrainMode m) {
  switch (m) {
    case TrainMode::kAll: return "ALL";
    case TrainMode::kMv: return "MV";
    case TrainMode::kAdapter: return "ADAPTER";
    case TrainMode::kAdapterMixup: return "ADAPTER_MIXUP";
  }
  return "?";
}

TrainMode parse_train_mode(const std::string& name) {
  std::string upper = name;
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (TrainMode m : {TrainMode::kAll, TrainMode::kMv, TrainMode::kAdapter,
                      TrainMode::kAdapterMixup})
    if (upper == train_mode_name(m)) return m;
  throw ConfigError("unknown training mode '" + name +
                    "' (expected ALL, MV, ADAPTER or ADAPTER_MIXUP)");
}

bool uses_annotators(TrainMode m) {
  return m == TrainMode::kAdapter || m == TrainMode::kAdapterMixup;
}

void validate(const TrainConfig& c) {
  validate(c.adam);
  validate(c.mixup);
  if (c.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(c.grad_clip > 0.0)) throw ConfigError("grad_clip must be positive");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  if (c.max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (c.patience == 0) throw ConfigError("patience must be at least 1");
}

// ---------------------------------------------------------------------------
// History

namespace {

nlohmann::ordered_json prf_json(const Prf& p) {
  return {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

}  // namespace

void write_history_jsonl(std::ostream& out, const std::vector<HistoryEntry>& history) {
  for (const HistoryEntry& h : history) {
    nlohmann::ordered_json j;
    if (h.kind == HistoryEntry::Kind::kStageBoundary) {
      j = {{"event", "stage_boundary"},
           {"epoch", h.epoch},
           {"stage", h.stage},
           {"restored_epoch", h.restored_epoch}};
    } else {
      j = {{"event", "epoch"},
           {"epoch", h.epoch},
           {"stage", h.stage},
           {"split", "dev"},
           {"train_loss", h.train_loss},
           {"train_instances", h.instances},
           {"improved", h.improved}};
      for (MatchMode m : kMatchModes) j[match_mode_name(m)] = prf_json(h.dev.at(m));
    }
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Prediction pairs

AnnotatorCondition inference_condition(const TaggerModel& model) {
  return model.registry().empty() ? AnnotatorCondition::none()
                                  : AnnotatorCondition::expert();
}

std::vector<SpanPair> gold_pairs(const TaggerModel& model, const CrowdCorpus& corpus,
                                 const AnnotatorCondition& cond) {
  std::vector<SpanPair> pairs;
  pairs.reserve(corpus.entries.size());
  for (const CorpusEntry& e : corpus.entries) {
    if (!e.gold) throw ValidationError("sentence " + e.sentence.id + " has no gold annotation");
    pairs.push_back({e.sentence.id, *e.gold, model.predict(e.sentence.tokens, cond)});
  }
  return pairs;
}

std::vector<SpanPair> crowd_pairs(const TaggerModel& model, const CrowdCorpus& corpus,
                                  bool per_annotator, const AnnotatorCondition& cond,
                                  const std::optional<std::string>& only) {
  std::vector<SpanPair> pairs;
  for (const CorpusEntry& e : corpus.entries) {
    std::optional<std::vector<Span>> shared;
    for (const Annotation& a : e.annotations) {
      if (only && a.annotator != *only) continue;
      std::vector<Span> pred;
      if (per_annotator) {
        pred = model.predict(e.sentence.tokens,
                             AnnotatorCondition::annotator(model.registry().index_of(a.annotator)));
      } else {
        if (!shared) shared = model.predict(e.sentence.tokens, cond);
        pred = *shared;
      }
      pairs.push_back({e.sentence.id + "/" + a.annotator, a.spans, std::move(pred)});
    }
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Instances

std::vector<TrainInstance> make_instances(const CrowdCorpus& corpus, TrainMode mode) {
  std::vector<TrainInstance> out;
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const CorpusEntry& e = corpus.entries[i];
    const std::size_t n = e.sentence.tokens.size();
    std::vector<TrainInstance> local;
    for (const Annotation& a : e.annotations) {
      TrainInstance inst;
      inst.entry = i;
      inst.labels = encode_tags(a.spans, n);
      if (uses_annotators(mode)) inst.annotator = corpus.registry.index_of(a.annotator);
      local.push_back(std::move(inst));
    }
    // Without annotator input the order must not depend on annotator ids.
    if (!uses_annotators(mode))
      std::sort(local.begin(), local.end(), [](const TrainInstance& a, const TrainInstance& b) {
        return tag_indices(a.labels) < tag_indices(b.labels);
      });
    for (auto& inst : local) out.push_back(std::move(inst));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

// A training step item: an ordinary instance or a mixup pair.
struct WorkItem {
  const TrainInstance* instance = nullptr;
  const MixupInstance* mixup = nullptr;
  std::size_t entry() const { return instance ? instance->entry : mixup->entry; }
};

class Trainer {
 public:
  Trainer(const CrowdCorpus& train, const CrowdCorpus& dev, TaggerModel& model,
          const TrainConfig& config, const EpochCallback& on_epoch)
      : train_(train),
        dev_(dev),
        model_(model),
        config_(config),
        on_epoch_(on_epoch),
        adam_(model.parameters()),
        shuffle_rng_(derive_rng(config.seed, {0x747261696eULL, 1})),
        dropout_rng_(derive_rng(config.seed, {0x747261696eULL, 2})),
        mixup_rng_(derive_rng(config.seed, {0x747261696eULL, 3})),
        instances_(make_instances(train, config.mode)),
        best_params_(snapshot()) {
    token_ids_.reserve(train.entries.size());
    for (const CorpusEntry& e : train.entries)
      token_ids_.push_back(model.vocab().ids(e.sentence.tokens));
  }

  // Runs epochs until the budget is spent or patience runs out.
  void run_stage(std::size_t stage, std::size_t budget, bool with_mixup) {
    std::size_t since_best = 0;
    for (std::size_t k = 0; k < budget; ++k) {
      ++epoch_;
      HistoryEntry h;
      h.epoch = epoch_;
      h.stage = stage;
      std::vector<MixupInstance> mixed;
      if (with_mixup) mixed = pair_instances(train_, config_.mixup, mixup_rng_);
      std::tie(h.train_loss, h.instances) = run_epoch(mixed);
      h.dev = evaluate(gold_pairs(model_, dev_, inference_condition(model_)));
      const double f1 = h.dev.at(MatchMode::kExact).f1;
      if (f1 > best_f1_) {
        best_f1_ = f1;
        best_epoch_ = epoch_;
        best_params_ = snapshot();
        h.improved = true;
        since_best = 0;
      } else {
        ++since_best;
      }
      history_.push_back(h);
      if (on_epoch_) on_epoch_(h);
      if (since_best >= config_.patience) break;
    }
  }

  void restore_best() { restore(best_params_); }
  void reset_optimizer() { adam_ = AdamState(model_.parameters()); }
  void mark_stage_boundary(std::size_t next_stage) {
    HistoryEntry h;
    h.kind = HistoryEntry::Kind::kStageBoundary;
    h.epoch = epoch_;
    h.stage = next_stage;
    h.restored_epoch = best_epoch_;
    history_.push_back(h);
    if (on_epoch_) on_epoch_(h);
  }

  std::vector<HistoryEntry>& history() { return history_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_f1() const { return best_f1_; }
  std::size_t epochs() const { return epoch_; }

 private:
  std::vector<Tensor> snapshot() const {
    std::vector<Tensor> out;
    for (const Parameter& p : model_.parameters()) out.push_back(p.value);
    return out;
  }
  void restore(const std::vector<Tensor>& values) {
    ParameterSet& params = model_.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) params[i].value = values[i];
  }

  Var item_loss(ParamBinder& bind, const WorkItem& item) {
    const DropoutContext dropout{config_.dropout, &dropout_rng_};
    const auto& ids = token_ids_[item.entry()];
    if (item.mixup) return mixed_loss(model_, bind, ids, *item.mixup, dropout);
    const TrainInstance& inst = *item.instance;
    const AnnotatorCondition cond = inst.annotator
                                        ? AnnotatorCondition::annotator(*inst.annotator)
                                        : AnnotatorCondition::none();
    return model_.instance_loss(bind, ids, cond, inst.labels, dropout);
  }

  std::pair<double, std::size_t> run_epoch(const std::vector<MixupInstance>& mixed) {
    std::vector<WorkItem> items;
    items.reserve(instances_.size() + mixed.size());
    for (const auto& inst : instances_) items.push_back({&inst, nullptr});
    for (const auto& m : mixed) items.push_back({nullptr, &m});
    std::shuffle(items.begin(), items.end(), shuffle_rng_);

    const bool skip_backbone = config_.freeze_backbone && epoch_ > config_.warmup_epochs;
    double total = 0.0;
    ParameterSet& params = model_.parameters();
    for (std::size_t start = 0; start < items.size(); start += config_.batch_size) {
      const std::size_t stop = std::min(items.size(), start + config_.batch_size);
      const double weight = 1.0 / static_cast<double>(stop - start);
      Gradients grads = params.zeros_like();
      for (std::size_t i = start; i < stop; ++i) {
        Graph g;
        ParamBinder bind(g, params, true);
        Var loss = item_loss(bind, items[i]);
        g.backward(loss);
        bind.accumulate(grads, weight);
        total += loss.value().item();
      }
      clip_gradients(grads, config_.grad_clip);
      adam_step(params, grads, adam_, config_.adam, skip_backbone);
    }
    return {items.empty() ? 0.0 : total / static_cast<double>(items.size()), items.size()};
  }

  const CrowdCorpus& train_;
  const CrowdCorpus& dev_;
  TaggerModel& model_;
  const TrainConfig& config_;
  const EpochCallback& on_epoch_;
  AdamState adam_;
  std::mt19937_64 shuffle_rng_;
  std::mt19937_64 dropout_rng_;
  std::mt19937_64 mixup_rng_;
  std::vector<TrainInstance> instances_;
  std::vector<std::vector<std::size_t>> token_ids_;
  std::vector<Tensor> best_params_;
  std::vector<HistoryEntry> history_;
  std::size_t epoch_ = 0;
  std::size_t best_epoch_ = 0;
  double best_f1_ = -1.0;
};

}  // namespace

TrainResult train(const CrowdCorpus& train_corpus, const CrowdCorpus& dev_corpus,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  if (train_corpus.entries.empty()) throw ConfigError("training corpus is empty");
  if (dev_corpus.entries.empty()) throw ConfigError("dev corpus is empty");
  for (const CorpusEntry& e : dev_corpus.entries)
    if (!e.gold) throw ConfigError("dev sentence " + e.sentence.id + " has no gold annotation");

  const CrowdCorpus data = config.mode == TrainMode::kMv
                               ? aggregate_majority_vote(train_corpus)
                               : train_corpus;
  std::size_t annotations = 0;
  for (const CorpusEntry& e : data.entries) annotations += e.annotations.size();
  if (annotations == 0) throw ConfigError("training corpus has no annotations");
  if (uses_annotators(config.mode) && data.registry.empty())
    throw ConfigError(std::string(train_mode_name(config.mode)) + " needs an annotator registry");

  ModelConfig mc = model_config;
  mc.dropout = config.dropout;
  TaggerModel model(mc, Vocabulary::from_corpus(data),
                    uses_annotators(config.mode) ? data.registry : AnnotatorRegistry{},
                    config.seed);

  Trainer trainer(data, dev_corpus, model, config, on_epoch);
  trainer.run_stage(1, config.max_epochs, false);
  if (config.mode == TrainMode::kAdapterMixup && config.stage2_epochs > 0) {
    trainer.restore_best();
    trainer.reset_optimizer();
    trainer.mark_stage_boundary(2);
    trainer.run_stage(2, config.stage2_epochs, true);
  }
  trainer.restore_best();
  return TrainResult{std::move(model), std::move(trainer.history()), trainer.best_epoch(),
                     trainer.best_f1(), trainer.epochs()};
}

}  // namespace crowdtag
