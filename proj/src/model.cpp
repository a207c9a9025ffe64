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

#include "crowdtag/model.hpp"

#include <Eigen/QR>
#include <cmath>
#include <tuple>
#include <sstream>

#include "crowdtag/crf.hpp"
#include "crowdtag/crowdsim.hpp"
#include "crowdtag/error.hpp"
#include "eigen_maps.hpp"

namespace crowdtag {

void validate(const ModelConfig& c) {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model: ") + name + " must be positive");
  };
  positive(c.vocab_size, "vocab_size");
  positive(c.model_dim, "model_dim");
  positive(c.layers, "layers");
  positive(c.heads, "heads");
  positive(c.ff_dim, "ff_dim");
  positive(c.adapter_dim, "adapter_dim");
  positive(c.annotator_dim, "annotator_dim");
  positive(c.lstm_hidden, "lstm_hidden");
  positive(c.mlp_hidden, "mlp_hidden");
  positive(c.max_len, "max_len");
  if (c.model_dim % c.heads != 0)
    throw ConfigError("model: heads must divide model_dim");
  if (c.pgn_layers > c.layers)
    throw ConfigError("model: pgn_layers exceeds layers");
  if (c.tag_count != kTagCount)
    throw ConfigError("model: tag_count must be " + std::to_string(kTagCount));
  if (!(c.dropout >= 0.0 && c.dropout < 1.0))
    throw ConfigError("model: dropout must be in [0, 1)");
  if (!(c.annotator_init_std > 0.0))
    throw ConfigError("model: annotator_init_std must be positive");
}

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary::Vocabulary() : tokens_{kUnknownToken} { index_[kUnknownToken] = 0; }

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  if (tokens.empty() || tokens[0] != kUnknownToken)
    throw FormatError("vocabulary must start with " + std::string(kUnknownToken));
  for (const auto& t : tokens) {
    if (!index_.emplace(t, tokens_.size()).second)
      throw FormatError("duplicate vocabulary token '" + t + "'");
    tokens_.push_back(t);
  }
}

Vocabulary Vocabulary::from_corpus(const CrowdCorpus& corpus) {
  Vocabulary v;
  for (const auto& entry : corpus.entries)
    for (const auto& t : entry.sentence.tokens)
      if (v.index_.emplace(t, v.tokens_.size()).second) v.tokens_.push_back(t);
  return v;
}

std::size_t Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> Vocabulary::ids(const std::vector<std::string>& tokens) const {
  std::vector<std::size_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

// ---------------------------------------------------------------------------
// Adapters

Var adapter_forward(Var h, const AdapterVars& p) {
  Var hidden = gelu(add(matmul(h, p.w_down), p.b_down));
  return add(add(matmul(hidden, p.w_up), p.b_up), h);
}

AdapterVars pgn_generate(const PgnVars& t, Var e) {
  return {contract_last(t.w_down, e), contract_last(t.b_down, e),
          contract_last(t.w_up, e), contract_last(t.b_up, e)};
}

Tensor adapter_forward(const Tensor& h, const AdapterParams& p) {
  Graph g;
  AdapterVars v{g.constant(p.w_down), g.constant(p.b_down), g.constant(p.w_up),
                g.constant(p.b_up)};
  return adapter_forward(g.constant(h), v).value();
}

AdapterParams pgn_generate(const PgnTensors& t, const Tensor& e) {
  Graph g;
  PgnVars v{g.constant(t.w_down), g.constant(t.b_down), g.constant(t.w_up),
            g.constant(t.b_up)};
  AdapterVars a = pgn_generate(v, g.constant(e));
  return {a.w_down.value(), a.b_down.value(), a.w_up.value(), a.b_up.value()};
}

Tensor expert_embedding(const Tensor& table) {
  if (table.rank() != 2 || table.rows() == 0)
    throw ConfigError("expert embedding needs a non-empty annotator table");
  Graph g;
  return mean_rows(g.constant(table)).value();
}

// ---------------------------------------------------------------------------
// Conditions

std::pair<double, double> mix_weights(double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ConfigError("mixup lambda must be in [0, 1]");
  if (lambda >= 0.5) return {lambda, 1.0 - lambda};
  double second = 1.0 - lambda;
  return {1.0 - second, second};
}

AnnotatorCondition AnnotatorCondition::annotator(std::size_t index) {
  AnnotatorCondition c;
  c.kind = Kind::kAnnotator;
  c.first = index;
  return c;
}

AnnotatorCondition AnnotatorCondition::expert() {
  AnnotatorCondition c;
  c.kind = Kind::kExpert;
  return c;
}

AnnotatorCondition AnnotatorCondition::mix(std::size_t a, std::size_t b, double lambda) {
  AnnotatorCondition c;
  c.kind = Kind::kMix;
  c.first = a;
  c.second = b;
  std::tie(c.first_weight, c.second_weight) = mix_weights(lambda);
  return c;
}

AnnotatorCondition AnnotatorCondition::embedding(Tensor e) {
  AnnotatorCondition c;
  c.kind = Kind::kVector;
  c.vector = std::move(e);
  return c;
}

// ---------------------------------------------------------------------------
// Dropout

Var sequential_dropout(Var reps, double p, std::mt19937_64& rng, bool training) {
  if (!(p >= 0.0 && p < 1.0))
    throw ConfigError("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return reps;
  const Tensor& x = reps.value();
  if (x.rank() != 2) throw ShapeError("sequential_dropout: expected a matrix, got " + shape_string(x.shape()));
  std::bernoulli_distribution drop(p);
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> row_scale(x.rows());
  for (auto& s : row_scale) s = drop(rng) ? 0.0 : keep_scale;
  Tensor out = x;
  const std::size_t cols = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) *= row_scale[r];
  return reps.graph().record(
      std::move(out), {reps},
      [row_scale, cols](const Tensor&, const Tensor& g, std::span<Tensor*> grads) {
        Tensor& gx = *grads[0];
        for (std::size_t r = 0; r < row_scale.size(); ++r)
          for (std::size_t c = 0; c < cols; ++c) gx.at(r, c) += row_scale[r] * g.at(r, c);
      });
}

// ---------------------------------------------------------------------------
// Initialization helpers

namespace {

Tensor truncated_normal(Shape shape, double stddev, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : t.values()) {
    double x;
    do x = normal(rng);
    while (std::abs(x) > 2.0);
    v = stddev * x;
  }
  return t;
}

Tensor xavier_uniform(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-limit, limit);
  Tensor t({in, out});
  for (double& v : t.values()) v = u(rng);
  return t;
}

// h x 4h with an orthogonal h x h matrix in each gate block.
Tensor orthogonal_blocks(std::size_t h, std::size_t blocks, std::mt19937_64& rng) {
  Tensor t({h, blocks * h});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    RowMatrix a(h, h);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
    Eigen::HouseholderQR<RowMatrix> qr(a);
    RowMatrix q = qr.householderQ();
    // Sign fix so the result is uniformly distributed over O(h).
    RowMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (std::size_t j = 0; j < h; ++j)
      if (r(j, j) < 0) q.col(j) *= -1.0;
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < h; ++j) t.at(i, b * h + j) = q(i, j);
  }
  return t;
}

std::string layer_name(std::size_t l, const char* part) {
  return "layer" + std::to_string(l) + "." + part;
}

}  // namespace

// ---------------------------------------------------------------------------
// TaggerModel

TaggerModel::TaggerModel(ModelConfig config, Vocabulary vocab,
                         AnnotatorRegistry registry, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)), registry_(std::move(registry)) {
  config_.vocab_size = vocab_.size();
  config_.annotator_count = registry_.size();
  validate(config_);
  init(seed);
}

void TaggerModel::init(std::uint64_t seed) {
  const ModelConfig& c = config_;
  const std::size_t d = c.model_dim, k = c.adapter_dim, da = c.annotator_dim;
  std::mt19937_64 rng = derive_rng(seed, {0x6d6f64656cULL});
  constexpr double kStd = 0.02;
  auto zeros = [](Shape s) { return Tensor(std::move(s)); };
  auto ones = [](std::size_t n) { return Tensor::filled({n}, 1.0); };

  tok_emb_ = params_.add("embedding.token", truncated_normal({c.vocab_size, d}, kStd, rng), true);
  pos_emb_ = params_.add("embedding.position", truncated_normal({c.max_len, d}, kStd, rng), true);
  emb_ln_g_ = params_.add("embedding.ln.gamma", ones(d));
  emb_ln_b_ = params_.add("embedding.ln.beta", zeros({d}));

  const std::size_t first_generated = c.layers - c.pgn_layers;
  for (std::size_t l = 0; l < c.layers; ++l) {
    LayerIds ids{};
    auto weight = [&](const char* part, std::size_t in, std::size_t out) {
      return params_.add(layer_name(l, part), truncated_normal({in, out}, kStd, rng), true);
    };
    auto bias = [&](const char* part, std::size_t n) {
      return params_.add(layer_name(l, part), zeros({n}), true);
    };
    ids.wq = weight("attention.wq", d, d);
    ids.bq = bias("attention.bq", d);
    ids.wk = weight("attention.wk", d, d);
    ids.bk = bias("attention.bk", d);
    ids.wv = weight("attention.wv", d, d);
    ids.bv = bias("attention.bv", d);
    ids.wo = weight("attention.wo", d, d);
    ids.bo = bias("attention.bo", d);
    ids.ln1_g = params_.add(layer_name(l, "ln1.gamma"), ones(d));
    ids.ln1_b = params_.add(layer_name(l, "ln1.beta"), zeros({d}));
    ids.w1 = weight("ffn.w1", d, c.ff_dim);
    ids.b1 = bias("ffn.b1", c.ff_dim);
    ids.w2 = weight("ffn.w2", c.ff_dim, d);
    ids.b2 = bias("ffn.b2", d);
    ids.ln2_g = params_.add(layer_name(l, "ln2.gamma"), ones(d));
    ids.ln2_b = params_.add(layer_name(l, "ln2.beta"), zeros({d}));
    ids.generated = l >= first_generated;
    for (std::size_t s = 0; s < 2; ++s) {
      const std::string site = layer_name(l, s == 0 ? "adapter_attention" : "adapter_ffn");
      if (ids.generated) {
        ids.site[s][0] = params_.add(site + ".gen.w_down", truncated_normal({d, k, da}, kStd, rng));
        ids.site[s][1] = params_.add(site + ".gen.b_down", truncated_normal({k, da}, kStd, rng));
        ids.site[s][2] = params_.add(site + ".gen.w_up", truncated_normal({k, d, da}, kStd, rng));
        ids.site[s][3] = params_.add(site + ".gen.b_up", truncated_normal({d, da}, kStd, rng));
      } else {
        ids.site[s][0] = params_.add(site + ".w_down", truncated_normal({d, k}, kStd, rng));
        ids.site[s][1] = params_.add(site + ".b_down", zeros({k}));
        ids.site[s][2] = params_.add(site + ".w_up", truncated_normal({k, d}, kStd, rng));
        ids.site[s][3] = params_.add(site + ".b_up", zeros({d}));
      }
    }
    layers_.push_back(ids);
  }

  if (c.annotator_count > 0)
    annotator_table_ = params_.add("annotator.embedding",
                                   truncated_normal({c.annotator_count, da}, c.annotator_init_std, rng));

  const std::size_t h = c.lstm_hidden;
  const char* dirs[2] = {"lstm.forward", "lstm.backward"};
  std::size_t* ids[2] = {lstm_f_, lstm_b_};
  for (std::size_t dir = 0; dir < 2; ++dir) {
    const std::string base = dirs[dir];
    ids[dir][0] = params_.add(base + ".w_ih", xavier_uniform(d, 4 * h, rng));
    ids[dir][1] = params_.add(base + ".w_hh", orthogonal_blocks(h, 4, rng));
    ids[dir][2] = params_.add(base + ".bias", zeros({4 * h}));
  }

  mlp_w1_ = params_.add("mlp.w1", xavier_uniform(2 * h, c.mlp_hidden, rng));
  mlp_b1_ = params_.add("mlp.b1", zeros({c.mlp_hidden}));
  mlp_w2_ = params_.add("mlp.w2", zeros({c.mlp_hidden, c.tag_count}));
  mlp_b2_ = params_.add("mlp.b2", zeros({c.tag_count}));

  crf_trans_ = params_.add("crf.transitions", zeros({c.tag_count, c.tag_count}));
  crf_start_ = params_.add("crf.start", zeros({c.tag_count}));
  crf_end_ = params_.add("crf.end", zeros({c.tag_count}));
}

const Tensor& TaggerModel::annotator_table() const {
  if (!annotator_table_) throw ConfigError("model has no annotator embeddings");
  return params_[*annotator_table_].value;
}

Tensor TaggerModel::expert_embedding() const {
  return crowdtag::expert_embedding(annotator_table());
}

std::optional<Var> TaggerModel::condition_embedding(ParamBinder& bind,
                                                    const AnnotatorCondition& cond) const {
  using Kind = AnnotatorCondition::Kind;
  const std::size_t da = config_.annotator_dim;
  auto row = [&](std::size_t index) {
    if (index >= registry_.size()) {
      std::ostringstream msg;
      msg << "annotator index " << index << " out of range; registry has "
          << registry_.size() << " annotators";
      throw UnknownAnnotatorError(msg.str());
    }
    return reshape(gather_rows(bind(*annotator_table_), {index}), {da});
  };
  switch (cond.kind) {
    case Kind::kNone:
      return std::nullopt;
    case Kind::kAnnotator:
      return row(cond.first);
    case Kind::kExpert:
      if (!annotator_table_) throw ConfigError("model has no annotator embeddings");
      return mean_rows(bind(*annotator_table_));
    case Kind::kMix:
      return add(scale(row(cond.first), cond.first_weight),
                 scale(row(cond.second), cond.second_weight));
    case Kind::kVector:
      if (cond.vector.shape() != Shape{da})
        throw ShapeError("annotator embedding", shape_string(cond.vector.shape()),
                         shape_string({da}));
      return bind.graph().constant(cond.vector);
  }
  return std::nullopt;
}

Var TaggerModel::encode(ParamBinder& bind, const std::vector<std::size_t>& token_ids,
                        const std::optional<Var>& e) const {
  const std::size_t n = token_ids.size();
  if (n == 0) throw ValidationError("cannot encode an empty sentence");
  if (n > config_.max_len)
    throw ValidationError("sentence of " + std::to_string(n) +
                          " tokens exceeds max_len " + std::to_string(config_.max_len));
  for (std::size_t id : token_ids)
    if (id >= config_.vocab_size) throw ValidationError("token id out of vocabulary range");
  if (e && e->shape() != Shape{config_.annotator_dim})
    throw ShapeError("annotator embedding", shape_string(e->shape()),
                     shape_string({config_.annotator_dim}));

  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  Var h = add(gather_rows(bind(tok_emb_), token_ids), gather_rows(bind(pos_emb_), positions));
  h = layer_norm(h, bind(emb_ln_g_), bind(emb_ln_b_));

  auto linear = [&](Var x, std::size_t w, std::size_t b) {
    return add(matmul(x, bind(w)), bind(b));
  };
  for (const LayerIds& ids : layers_) {
    auto adapt = [&](Var x, std::size_t site) -> Var {
      const auto& p = ids.site[site];
      if (!ids.generated)
        return adapter_forward(x, {bind(p[0]), bind(p[1]), bind(p[2]), bind(p[3])});
      // Without an annotator the generated adapter is the identity.
      if (!e) return x;
      return adapter_forward(
          x, pgn_generate(PgnVars{bind(p[0]), bind(p[1]), bind(p[2]), bind(p[3])}, *e));
    };
    Var att = multi_head_attention(linear(h, ids.wq, ids.bq), linear(h, ids.wk, ids.bk),
                                   linear(h, ids.wv, ids.bv), config_.heads);
    att = adapt(linear(att, ids.wo, ids.bo), 0);
    h = layer_norm(add(h, att), bind(ids.ln1_g), bind(ids.ln1_b));
    Var ff = linear(gelu(linear(h, ids.w1, ids.b1)), ids.w2, ids.b2);
    ff = adapt(ff, 1);
    h = layer_norm(add(h, ff), bind(ids.ln2_g), bind(ids.ln2_b));
  }
  return h;
}

Var TaggerModel::emissions(ParamBinder& bind, Var reps, const DropoutContext& dropout) const {
  if (dropout.rng) reps = sequential_dropout(reps, dropout.prob, *dropout.rng, true);
  Var fwd = lstm(reps, bind(lstm_f_[0]), bind(lstm_f_[1]), bind(lstm_f_[2]), false);
  Var bwd = lstm(reps, bind(lstm_b_[0]), bind(lstm_b_[1]), bind(lstm_b_[2]), true);
  Var hidden = gelu(add(matmul(concat_cols(fwd, bwd), bind(mlp_w1_)), bind(mlp_b1_)));
  return add(matmul(hidden, bind(mlp_w2_)), bind(mlp_b2_));
}

Var TaggerModel::nll(ParamBinder& bind, Var emissions, const std::vector<Tag>& labels) const {
  return crf_nll(emissions, bind(crf_trans_), bind(crf_start_), bind(crf_end_),
                 tag_indices(labels));
}

Var TaggerModel::instance_loss(ParamBinder& bind, const std::vector<std::size_t>& token_ids,
                               const AnnotatorCondition& cond,
                               const std::vector<Tag>& labels,
                               const DropoutContext& dropout) const {
  Var reps = encode(bind, token_ids, condition_embedding(bind, cond));
  return nll(bind, emissions(bind, reps, dropout), labels);
}

Tensor TaggerModel::encode(const std::vector<std::string>& tokens,
                           const AnnotatorCondition& cond) const {
  Graph g;
  ParamBinder bind(g, params_, false);
  return encode(bind, vocab_.ids(tokens), condition_embedding(bind, cond)).value();
}

Tensor TaggerModel::emission_scores(const std::vector<std::string>& tokens,
                                    const AnnotatorCondition& cond) const {
  Graph g;
  ParamBinder bind(g, params_, false);
  Var reps = encode(bind, vocab_.ids(tokens), condition_embedding(bind, cond));
  return emissions(bind, reps).value();
}

std::vector<Tag> TaggerModel::predict_tags(const std::vector<std::string>& tokens,
                                           const AnnotatorCondition& cond) const {
  if (tokens.empty()) return {};
  Tensor em = emission_scores(tokens, cond);
  CrfScores s{em, params_[crf_trans_].value, params_[crf_start_].value,
              params_[crf_end_].value};
  std::vector<Tag> tags;
  for (std::size_t i : viterbi(s)) tags.push_back(tag_from_index(i));
  return tags;
}

std::vector<Span> TaggerModel::predict(const std::vector<std::string>& tokens,
                                       const AnnotatorCondition& cond) const {
  return decode_tags(predict_tags(tokens, cond));
}

std::vector<std::size_t> tag_indices(const std::vector<Tag>& tags) {
  std::vector<std::size_t> out;
  out.reserve(tags.size());
  for (Tag t : tags) out.push_back(tag_index(t));
  return out;
}

}  // namespace crowdtag
