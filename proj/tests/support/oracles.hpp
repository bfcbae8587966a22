// Apache License, Version 2.0, refer to LICENSE.txt

// Test-only reference computations. Nothing here calls into the sampler or
// the count tables; contexts are std::vector keys in std::map, evidences are
// spelled out with std::lgamma.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "poslda/corpus.hpp"
#include "poslda/model.hpp"

namespace oracle {

using poslda::ClassId;
using poslda::Corpus;
using poslda::Hyperparameters;
using poslda::ModelConfig;
using poslda::TopicId;
using poslda::WordId;

struct Token {
  WordId word;
  std::size_t doc;
  std::size_t sentence;  // global sentence index
  std::size_t position;  // within sentence
};

inline std::vector<Token> tokens_of(const Corpus& corpus) {
  std::vector<Token> out;
  std::size_t sentence = 0;
  for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
    for (const auto& s : corpus.documents[d].sentences) {
      for (std::size_t p = 0; p < s.size(); ++p) out.push_back({s[p], d, sentence, p});
      ++sentence;
    }
  }
  return out;
}

inline std::vector<bool> semantic_flags(const ModelConfig& c) {
  std::vector<bool> out(static_cast<std::size_t>(c.classes), false);
  if (c.semantic_class_ids.empty()) {
    for (int i = 0; i < c.semantic_classes; ++i) out[static_cast<std::size_t>(i)] = true;
  } else {
    for (const auto id : c.semantic_class_ids) out[static_cast<std::size_t>(id)] = true;
  }
  return out;
}

// log Gamma(sum a) - log Gamma(sum a + N) + sum_k [log Gamma(a_k + n_k) - log Gamma(a_k)]
inline double dm_evidence(const std::vector<int>& n, const std::vector<double>& a) {
  double sa = 0.0, sn = 0.0, out = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    sa += a[k];
    sn += n[k];
    out += std::lgamma(a[k] + n[k]) - std::lgamma(a[k]);
  }
  return out + std::lgamma(sa) - std::lgamma(sa + sn);
}

// Class history of a token, oldest first, padded with -1 at sentence start.
inline std::vector<int> history(const std::vector<Token>& toks, const std::vector<ClassId>& classes, std::size_t t,
                                int order) {
  std::vector<int> ctx;
  for (int j = order; j >= 1; --j) {
    const auto back = static_cast<std::size_t>(j);
    ctx.push_back(toks[t].position >= back ? classes[t - back] : -1);
  }
  return ctx;
}

// Joint log p(words, classes, topics) of the collapsed model.
inline double log_joint(const Corpus& corpus, const ModelConfig& config, const Hyperparameters& h,
                        const std::vector<ClassId>& classes, const std::vector<TopicId>& topics) {
  const auto toks = tokens_of(corpus);
  const auto sem = semantic_flags(config);
  const std::size_t W = corpus.vocabulary.size();
  const auto K = static_cast<std::size_t>(config.topics);
  const auto S = static_cast<std::size_t>(config.classes);

  std::map<std::size_t, std::vector<int>> doc;
  std::map<std::pair<int, int>, std::vector<int>> word;  // (class, topic or -1)
  std::map<std::vector<int>, std::vector<int>> trans;
  for (std::size_t t = 0; t < toks.size(); ++t) {
    const ClassId c = classes[t];
    const TopicId z = sem[static_cast<std::size_t>(c)] ? topics[t] : -1;
    if (z >= 0) {
      auto& row = doc[toks[t].doc];
      row.resize(K, 0);
      ++row[static_cast<std::size_t>(z)];
    }
    auto& wrow = word[{c, z}];
    wrow.resize(W, 0);
    ++wrow[static_cast<std::size_t>(toks[t].word)];
    auto& trow = trans[history(toks, classes, t, config.order)];
    trow.resize(S, 0);
    ++trow[static_cast<std::size_t>(c)];
  }
  double ll = 0.0;
  for (const auto& [d, row] : doc) ll += dm_evidence(row, h.alpha);
  const std::vector<double> beta(W, h.beta);
  for (const auto& [key, row] : word) ll += dm_evidence(row, beta);
  for (const auto& [key, row] : trans) ll += dm_evidence(row, h.gamma);
  return ll;
}

// p(c_pos, z_pos | everything else) by evaluating the joint at every outcome,
// in the library's outcome order (class ascending; K topics per semantic
// class). Masked classes get 0; the rest are tempered by 1/tau.
inline std::vector<double> conditional(const Corpus& corpus, const ModelConfig& config, const Hyperparameters& h,
                                       std::vector<ClassId> classes, std::vector<TopicId> topics, std::size_t pos,
                                       std::uint64_t mask = ~0ULL, double tau = 1.0) {
  const auto sem = semantic_flags(config);
  std::vector<double> logs;
  std::vector<bool> allowed;
  for (ClassId c = 0; c < config.classes; ++c) {
    const int width = sem[static_cast<std::size_t>(c)] ? config.topics : 1;
    for (int k = 0; k < width; ++k) {
      classes[pos] = c;
      topics[pos] = sem[static_cast<std::size_t>(c)] ? k : -1;
      logs.push_back(log_joint(corpus, config, h, classes, topics));
      allowed.push_back((mask >> c & 1ULL) != 0);
    }
  }
  double best = -INFINITY;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    if (allowed[j]) best = std::max(best, logs[j]);
  }
  std::vector<double> p(logs.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < logs.size(); ++j) {
    if (!allowed[j]) continue;
    p[j] = std::exp((logs[j] - best) / tau);
    total += p[j];
  }
  for (auto& v : p) v /= total;
  return p;
}

// Standard collapsed-LDA conditional over topics for token `pos`.
inline std::vector<double> lda_conditional(const Corpus& corpus, const std::vector<double>& alpha, double beta,
                                           const std::vector<TopicId>& topics, std::size_t pos) {
  const auto toks = tokens_of(corpus);
  const std::size_t K = alpha.size();
  const std::size_t W = corpus.vocabulary.size();
  std::vector<double> ndk(K, 0.0), nkw(K, 0.0), nk(K, 0.0);
  for (std::size_t t = 0; t < toks.size(); ++t) {
    if (t == pos) continue;
    const auto k = static_cast<std::size_t>(topics[t]);
    if (toks[t].doc == toks[pos].doc) ndk[k] += 1;
    if (toks[t].word == toks[pos].word) nkw[k] += 1;
    nk[k] += 1;
  }
  std::vector<double> p(K);
  for (std::size_t k = 0; k < K; ++k) p[k] = (ndk[k] + alpha[k]) * (nkw[k] + beta) / (nk[k] + W * beta);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

// Collapsed Bayesian-HMM conditional over classes for token `pos`: the
// transition windows involving pos are scored one after another, each seeing
// the counts added by the previous ones.
inline std::vector<double> bhmm_conditional(const Corpus& corpus, int order, const std::vector<double>& gamma,
                                            double beta, const std::vector<ClassId>& classes, std::size_t pos) {
  const auto toks = tokens_of(corpus);
  const std::size_t S = gamma.size();
  const std::size_t W = corpus.vocabulary.size();
  const double gsum = std::accumulate(gamma.begin(), gamma.end(), 0.0);

  std::size_t last = pos;
  while (last + 1 < toks.size() && toks[last + 1].sentence == toks[pos].sentence &&
         last + 1 <= pos + static_cast<std::size_t>(order)) {
    ++last;
  }
  std::map<std::vector<int>, std::vector<double>> base;
  std::vector<std::vector<double>> emit(S, std::vector<double>(W, 0.0));
  std::vector<double> emit_total(S, 0.0);
  for (std::size_t t = 0; t < toks.size(); ++t) {
    if (t != pos) {
      emit[static_cast<std::size_t>(classes[t])][static_cast<std::size_t>(toks[t].word)] += 1;
      emit_total[static_cast<std::size_t>(classes[t])] += 1;
    }
    if (t >= pos && t <= last) continue;
    auto& row = base[history(toks, classes, t, order)];
    row.resize(S, 0.0);
    row[static_cast<std::size_t>(classes[t])] += 1;
  }
  std::vector<double> p(S);
  for (std::size_t c = 0; c < S; ++c) {
    auto trans = base;
    auto cls = classes;
    cls[pos] = static_cast<ClassId>(c);
    double rho = 1.0;
    for (std::size_t t = pos; t <= last; ++t) {
      auto& row = trans[history(toks, cls, t, order)];
      row.resize(S, 0.0);
      const double n = std::accumulate(row.begin(), row.end(), 0.0);
      const auto out = static_cast<std::size_t>(cls[t]);
      rho *= (row[out] + gamma[out]) / (n + gsum);
      row[out] += 1;
    }
    p[c] = rho * (emit[c][static_cast<std::size_t>(toks[pos].word)] + beta) / (emit_total[c] + W * beta);
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

// A random toy instance within the given bounds.
struct Toy {
  std::shared_ptr<Corpus> corpus;
  ModelConfig config;
  Hyperparameters hyper;
  std::vector<ClassId> classes;
  std::vector<TopicId> topics;
};

struct ToyBounds {
  int max_tokens = 8;
  int max_vocab = 4;
  int max_topics = 3;
  int max_classes = 3;
  int max_semantic = 2;
  int max_order = 2;
};

inline Toy random_toy(std::mt19937_64& rng, const ToyBounds& b = {}) {
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  Toy toy;
  toy.corpus = std::make_shared<Corpus>();
  const int V = uni(1, b.max_vocab);
  for (int v = 0; v < V; ++v) toy.corpus->vocabulary.add("w" + std::to_string(v));
  const int tokens = uni(1, b.max_tokens);
  const int docs = uni(1, std::min(2, tokens));
  int left = tokens;
  for (int d = 0; d < docs; ++d) {
    poslda::Document doc;
    doc.name = "d" + std::to_string(d);
    int mine = d + 1 == docs ? left : uni(1, left - (docs - d - 1));
    left -= mine;
    while (mine > 0) {
      const int len = uni(1, mine);
      std::vector<WordId> s;
      for (int i = 0; i < len; ++i) s.push_back(uni(0, V - 1));
      doc.sentences.push_back(std::move(s));
      mine -= len;
    }
    toy.corpus->documents.push_back(std::move(doc));
  }
  toy.config.classes = uni(1, b.max_classes);
  toy.config.semantic_classes = uni(0, std::min(b.max_semantic, toy.config.classes));
  toy.config.topics = uni(1, b.max_topics);
  toy.config.order = uni(1, b.max_order);
  if (toy.config.semantic_classes > 0 && uni(0, 1) == 1) {
    std::vector<ClassId> ids(static_cast<std::size_t>(toy.config.classes));
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    ids.resize(static_cast<std::size_t>(toy.config.semantic_classes));
    std::sort(ids.begin(), ids.end());
    toy.config.semantic_class_ids = ids;
  }
  for (int k = 0; k < toy.config.topics; ++k) toy.hyper.alpha.push_back(real(0.1, 2.0));
  toy.hyper.beta = real(0.05, 1.5);
  for (int c = 0; c < toy.config.classes; ++c) toy.hyper.gamma.push_back(real(0.1, 2.0));

  const auto sem = semantic_flags(toy.config);
  for (int t = 0; t < tokens; ++t) {
    const ClassId c = uni(0, toy.config.classes - 1);
    toy.classes.push_back(c);
    toy.topics.push_back(sem[static_cast<std::size_t>(c)] ? uni(0, toy.config.topics - 1) : -1);
  }
  return toy;
}

// Minimum-cost perfect assignment on a square cost matrix; returns, for each
// row, the column assigned to it.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), way_cost(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> out(n);
  for (std::size_t j = 1; j <= n; ++j) out[p[j] - 1] = j - 1;
  return out;
}

inline std::vector<double> sample_dirichlet(std::mt19937_64& rng, const std::vector<double>& a) {
  std::vector<double> out(a.size());
  double total = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = std::gamma_distribution<double>(a[k], 1.0)(rng);
    total += out[k];
  }
  if (total == 0.0) {
    // Possible for tiny concentrations; fall back to a point mass.
    out[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)] = 1.0;
    return out;
  }
  for (auto& v : out) v /= total;
  return out;
}

inline std::size_t sample_discrete(std::mt19937_64& rng, const std::vector<double>& p) {
  return std::discrete_distribution<std::size_t>(p.begin(), p.end())(rng);
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

}  // namespace oracle
