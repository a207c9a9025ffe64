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

#include "crowdtag/crowdsim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "crowdtag/error.hpp"

namespace crowdtag {

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::string numbered(const std::string& prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, i);
  return prefix + buf;
}

double sample_gamma(double shape, double scale, std::mt19937_64& rng) {
  return std::gamma_distribution<double>(shape, scale)(rng);
}

// Beta(mean*spread, (1-mean)*spread); degenerates to `mean` at the edges.
double sample_beta_around(double mean, double spread, std::mt19937_64& rng) {
  if (spread <= 0.0 || mean <= 0.0 || mean >= 1.0) return mean;
  const double x = sample_gamma(mean * spread, 1.0, rng);
  const double y = sample_gamma((1.0 - mean) * spread, 1.0, rng);
  return x + y > 0.0 ? x / (x + y) : mean;
}

std::discrete_distribution<std::size_t> zipf(std::size_t size, double exponent) {
  std::vector<double> w(size);
  for (std::size_t r = 0; r < size; ++r) w[r] = std::pow(static_cast<double>(r + 1), -exponent);
  return {w.begin(), w.end()};
}

std::size_t uniform_size(std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

}  // namespace

void validate(const NoiseProfile& p) {
  const std::string who = "profile '" + p.annotator + "': ";
  if (p.annotator.empty()) throw ConfigError("noise profile without annotator id");
  if (!is_probability(p.miss_prob) || !is_probability(p.boundary_shift_prob) ||
      !is_probability(p.flip_prob)) {
    throw ConfigError(who + "probabilities must lie in [0, 1]");
  }
  if (p.max_shift == 0) throw ConfigError(who + "max_shift must be positive");
  if (!(p.spurious_rate >= 0.0) || !std::isfinite(p.spurious_rate)) {
    throw ConfigError(who + "spurious_rate must be a finite non-negative number");
  }
}

void validate(const SimConfig& c) {
  if (c.neutral_vocab == 0 || c.positive_vocab == 0 || c.negative_vocab == 0) {
    throw ConfigError("vocabulary sizes must be positive");
  }
  if (c.min_sentence_length == 0 || c.min_sentence_length > c.max_sentence_length) {
    throw ConfigError("sentence length range is empty");
  }
  if (c.min_expression_length == 0 || c.min_expression_length > c.max_expression_length) {
    throw ConfigError("expression length range is empty");
  }
  if (c.mean_expressions < 0.0 ||
      c.mean_expressions > static_cast<double>(c.max_expressions)) {
    throw ConfigError("mean_expressions must lie in [0, max_expressions]");
  }
  if (!is_probability(c.interior_neutral_prob)) {
    throw ConfigError("interior_neutral_prob must lie in [0, 1]");
  }
  if (c.zipf_exponent < 0.0) throw ConfigError("zipf_exponent must be non-negative");
  if (c.profiles.empty()) throw ConfigError("at least one noise profile is required");
  if (c.min_annotators == 0 || c.min_annotators > c.max_annotators) {
    throw ConfigError("annotators-per-sentence range is empty");
  }
  if (c.max_annotators > c.profiles.size()) {
    throw ConfigError("max_annotators exceeds the number of profiles");
  }
  AnnotatorRegistry ids;
  for (const auto& p : c.profiles) {
    validate(p);
    if (ids.contains(p.annotator)) throw ConfigError("duplicate profile '" + p.annotator + "'");
    ids.add(p.annotator);
  }
}

std::mt19937_64 derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words{static_cast<std::uint32_t>(seed),
                                   static_cast<std::uint32_t>(seed >> 32)};
  for (auto s : stream) {
    words.push_back(static_cast<std::uint32_t>(s));
    words.push_back(static_cast<std::uint32_t>(s >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  return std::mt19937_64(seq);
}

std::vector<NoiseProfile> make_profiles(std::size_t count, const NoiseProfile& mean,
                                        double spread, std::uint64_t seed) {
  std::vector<NoiseProfile> out;
  const int width = count > 100 ? 3 : 2;
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = derive_rng(seed, {0x70, i});
    NoiseProfile p = mean;
    p.annotator = numbered("a", i, width);
    p.miss_prob = sample_beta_around(mean.miss_prob, spread, rng);
    p.boundary_shift_prob = sample_beta_around(mean.boundary_shift_prob, spread, rng);
    p.flip_prob = sample_beta_around(mean.flip_prob, spread, rng);
    if (spread > 0.0 && mean.spurious_rate > 0.0) {
      p.spurious_rate = sample_gamma(spread, mean.spurious_rate / spread, rng);
    }
    out.push_back(p);
  }
  return out;
}

std::vector<GoldSentence> generate_gold(const SimConfig& c, std::size_t count,
                                        std::uint64_t stream,
                                        const std::string& id_prefix) {
  validate(c);
  auto neutral = zipf(c.neutral_vocab, c.zipf_exponent);
  auto positive = zipf(c.positive_vocab, c.zipf_exponent);
  auto negative = zipf(c.negative_vocab, c.zipf_exponent);
  const double per_slot =
      c.max_expressions ? c.mean_expressions / static_cast<double>(c.max_expressions) : 0.0;

  std::vector<GoldSentence> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto rng = derive_rng(c.seed, {1, stream, i});
    GoldSentence gs;
    gs.sentence.id = numbered(id_prefix + "-", i, 5);
    bool packed = false;
    for (int attempt = 0; attempt < 100 && !packed; ++attempt) {
      const std::size_t n = uniform_size(c.min_sentence_length, c.max_sentence_length, rng);
      const std::size_t k =
          per_slot > 0.0
              ? std::binomial_distribution<std::size_t>(c.max_expressions, per_slot)(rng)
              : 0;
      std::vector<std::size_t> lengths(k);
      std::size_t need = k ? (k - 1) * c.min_gap : 0;
      for (auto& l : lengths) {
        l = uniform_size(c.min_expression_length, c.max_expression_length, rng);
        need += l;
      }
      if (need > n) continue;
      const std::size_t slack = n - need;
      std::vector<std::size_t> cuts(k);
      for (auto& cut : cuts) cut = uniform_size(0, slack, rng);
      std::sort(cuts.begin(), cuts.end());

      gs.gold.clear();
      gs.sentence.tokens.assign(n, {});
      std::size_t offset = 0;
      for (std::size_t j = 0; j < k; ++j) {
        const std::size_t start = cuts[j] + offset;
        gs.gold.push_back({start, start + lengths[j],
                           std::bernoulli_distribution(0.5)(rng) ? Polarity::kPos
                                                                 : Polarity::kNeg});
        offset += lengths[j] + c.min_gap;
      }
      std::size_t next = 0;
      for (std::size_t t = 0; t < n; ++t) {
        while (next < gs.gold.size() && gs.gold[next].end <= t) ++next;
        const bool inside = next < gs.gold.size() && gs.gold[next].start <= t;
        if (!inside) {
          gs.sentence.tokens[t] = numbered("w", neutral(rng), 0);
          continue;
        }
        const Span& s = gs.gold[next];
        const bool edge = t == s.start || t + 1 == s.end;
        if (!edge && std::bernoulli_distribution(c.interior_neutral_prob)(rng)) {
          gs.sentence.tokens[t] = numbered("w", neutral(rng), 0);
        } else if (s.polarity == Polarity::kPos) {
          gs.sentence.tokens[t] = numbered("p", positive(rng), 0);
        } else {
          gs.sentence.tokens[t] = numbered("m", negative(rng), 0);
        }
      }
      packed = true;
    }
    if (!packed) {
      throw ConfigError("could not pack expressions into sentence " + gs.sentence.id +
                        " after 100 attempts");
    }
    out.push_back(std::move(gs));
  }
  return out;
}

Annotation corrupt(const std::vector<Span>& gold, const NoiseProfile& profile,
                   std::size_t length, std::mt19937_64& rng) {
  Annotation out{profile.annotator, {}};
  std::bernoulli_distribution miss(profile.miss_prob);
  std::bernoulli_distribution shift(profile.boundary_shift_prob);
  std::bernoulli_distribution flip(profile.flip_prob);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<std::size_t> amount(1, profile.max_shift);

  auto shifted = [&](std::size_t pos) -> long long {
    const auto d = static_cast<long long>(amount(rng));
    return coin(rng) ? static_cast<long long>(pos) + d : static_cast<long long>(pos) - d;
  };

  std::size_t lower = 0;  // end of the previous emitted span
  for (std::size_t j = 0; j < gold.size(); ++j) {
    const Span& g = gold[j];
    if (miss(rng)) continue;
    const auto upper = static_cast<long long>(j + 1 < gold.size() ? gold[j + 1].start : length);
    auto start = static_cast<long long>(g.start);
    auto end = static_cast<long long>(g.end);
    if (shift(rng)) start = shifted(g.start);
    if (shift(rng)) end = shifted(g.end);
    start = std::clamp(start, static_cast<long long>(lower), upper - 1);
    end = std::clamp(end, start + 1, upper);
    const Polarity pol = flip(rng) ? opposite(g.polarity) : g.polarity;
    out.spans.push_back({static_cast<std::size_t>(start), static_cast<std::size_t>(end), pol});
    lower = static_cast<std::size_t>(end);
  }

  if (profile.spurious_rate > 0.0) {
    const std::size_t extra = std::poisson_distribution<std::size_t>(profile.spurious_rate)(rng);
    std::vector<bool> busy(length, false);
    for (const std::vector<Span>* spans : {&gold, static_cast<const std::vector<Span>*>(&out.spans)}) {
      for (const auto& s : *spans) std::fill(busy.begin() + s.start, busy.begin() + s.end, true);
    }
    for (std::size_t k = 0; k < extra; ++k) {
      const std::size_t len = uniform_size(1, 2, rng);
      const Polarity pol = coin(rng) ? Polarity::kPos : Polarity::kNeg;
      std::vector<std::size_t> starts;
      for (std::size_t s = 0; s + len <= length; ++s) {
        if (std::none_of(busy.begin() + s, busy.begin() + s + len, [](bool b) { return b; })) {
          starts.push_back(s);
        }
      }
      if (starts.empty()) continue;
      const std::size_t s = starts[uniform_size(0, starts.size() - 1, rng)];
      std::fill(busy.begin() + s, busy.begin() + s + len, true);
      out.spans.push_back({s, s + len, pol});
    }
    std::sort(out.spans.begin(), out.spans.end(),
              [](const Span& a, const Span& b) { return a.start < b.start; });
  }
  return out;
}

namespace {

CrowdCorpus annotate_split(const SimConfig& c, const std::vector<GoldSentence>& gold,
                           std::uint64_t stream, bool attach_gold,
                           const AnnotatorRegistry& registry) {
  CrowdCorpus corpus;
  corpus.registry = registry;
  std::vector<std::size_t> pool(c.profiles.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto rng = derive_rng(c.seed, {2, stream, i});
    const std::size_t k = uniform_size(c.min_annotators, c.max_annotators, rng);
    std::iota(pool.begin(), pool.end(), 0);
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(pool[j], pool[uniform_size(j, pool.size() - 1, rng)]);
    }
    std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<long>(k));
    std::sort(chosen.begin(), chosen.end());

    CorpusEntry entry{gold[i].sentence, {}, std::nullopt};
    for (auto p : chosen) {
      auto noise_rng = derive_rng(c.seed, {3, stream, i, p});
      entry.annotations.push_back(
          corrupt(gold[i].gold, c.profiles[p], gold[i].sentence.size(), noise_rng));
    }
    if (attach_gold) entry.gold = gold[i].gold;
    corpus.entries.push_back(std::move(entry));
  }
  return corpus;
}

}  // namespace

SimulatedCorpus generate_corpus(const SimConfig& c) {
  validate(c);
  AnnotatorRegistry registry;
  for (const auto& p : c.profiles) registry.add(p.annotator);

  SimulatedCorpus out;
  const auto train = generate_gold(c, c.train_sentences, 0, "train");
  const auto dev = generate_gold(c, c.dev_sentences, 1, "dev");
  const auto test = generate_gold(c, c.test_sentences, 2, "test");
  out.train = annotate_split(c, train, 0, c.gold_on_train, registry);
  out.dev = annotate_split(c, dev, 1, true, registry);
  out.test = annotate_split(c, test, 2, true, registry);
  for (const auto& g : train) out.train_gold.push_back(g.gold);
  return out;
}

SimConfig noisy_benchmark_config(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  NoiseProfile mean;
  mean.miss_prob = 0.15;
  mean.boundary_shift_prob = 0.3;
  mean.max_shift = 2;
  mean.flip_prob = 0.05;
  mean.spurious_rate = 0.1;
  c.profiles = make_profiles(70, mean, 8.0, seed);
  c.min_annotators = 3;
  c.max_annotators = 5;
  return c;
}

SimConfig zero_noise_config(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  NoiseProfile p;
  p.annotator = "a00";
  c.profiles = {p};
  c.min_annotators = c.max_annotators = 1;
  c.train_sentences = 1600;
  c.dev_sentences = 200;
  c.test_sentences = 200;
  return c;
}

}  // namespace crowdtag
