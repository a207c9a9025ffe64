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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crowdtag/corpus.hpp"
#include "crowdtag/metrics.hpp"
#include "crowdtag/mixup.hpp"
#include "crowdtag/model.hpp"
#include "crowdtag/optim.hpp"

namespace crowdtag {

enum class TrainMode { kAll, kMv, kAdapter, kAdapterMixup };

const char* train_mode_name(TrainMode m);
// Accepts ALL, MV, ADAPTER, ADAPTER_MIXUP (case-insensitive). Throws
// ConfigError otherwise.
TrainMode parse_train_mode(const std::string& name);
bool uses_annotators(TrainMode m);

struct TrainConfig {
  TrainMode mode = TrainMode::kAdapter;
  AdamConfig adam;
  std::size_t batch_size = 64;
  double grad_clip = 5.0;
  double dropout = 0.2;
  std::size_t max_epochs = 50;
  std::size_t patience = 5;
  std::uint64_t seed = 1;
  // Epoch budget of the second mixup stage.
  std::size_t stage2_epochs = 50;
  MixupConfig mixup;
  // Keep embeddings, attention and feed-forward weights fixed after
  // warmup_epochs; adapters, layer norms and the head keep training.
  bool freeze_backbone = false;
  std::size_t warmup_epochs = 0;
};

void validate(const TrainConfig& config);

struct HistoryEntry {
  enum class Kind { kEpoch, kStageBoundary };
  Kind kind = Kind::kEpoch;
  std::size_t epoch = 0;
  std::size_t stage = 1;
  double train_loss = 0.0;
  std::size_t instances = 0;
  EvalReport dev;
  bool improved = false;
  // Stage boundary: the epoch whose parameters were restored.
  std::size_t restored_epoch = 0;
};

// One JSON object per line, keys in fixed order.
void write_history_jsonl(std::ostream& out, const std::vector<HistoryEntry>& history);

struct TrainResult {
  TaggerModel model;  // parameters of the best dev epoch
  std::vector<HistoryEntry> history;
  std::size_t best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::size_t epochs_run = 0;
};

// Called after every epoch; useful for progress logs.
using EpochCallback = std::function<void(const HistoryEntry&)>;

// Condition used when the model stands in for the expert: the centroid for
// annotator-aware modes, no annotator otherwise.
AnnotatorCondition inference_condition(const TaggerModel& model);

// Predictions against expert annotations; throws ValidationError when an
// entry has no gold.
std::vector<SpanPair> gold_pairs(const TaggerModel& model, const CrowdCorpus& corpus,
                                 const AnnotatorCondition& cond);
// Each crowd annotation paired with the model's prediction for its sentence.
// `per_annotator` conditions on the annotation's own annotator, otherwise
// `cond` is used throughout. Only annotations of `only` when given. Pair ids
// are "<sentence id>/<annotator id>".
std::vector<SpanPair> crowd_pairs(const TaggerModel& model, const CrowdCorpus& corpus,
                                  bool per_annotator, const AnnotatorCondition& cond,
                                  const std::optional<std::string>& only = std::nullopt);

// Training instances for ALL, MV and ADAPTER modes, in deterministic order.
struct TrainInstance {
  std::size_t entry = 0;
  std::optional<std::size_t> annotator;  // registry index, ADAPTER modes
  std::vector<Tag> labels;
};
std::vector<TrainInstance> make_instances(const CrowdCorpus& corpus, TrainMode mode);

// Trains a fresh model on `train` and selects the epoch with the best exact
// F1 on `dev` (which must carry gold annotations). Throws ConfigError when
// the corpus cannot support the mode.
TrainResult train(const CrowdCorpus& train_corpus, const CrowdCorpus& dev_corpus,
                  const ModelConfig& model_config, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

}  // namespace crowdtag
