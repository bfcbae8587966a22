// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>

#include "poslda/error.hpp"

namespace poslda {

void FoldInSettings::validate() const {
  if (samples < 1) throw ValidationError("fold-in needs at least one retained sample");
  if (burn_in < 0 || burn_in >= sweeps) throw ValidationError("fold-in burn-in must lie in [0, sweeps)");
  if (sweeps - burn_in < samples) throw ValidationError("fold-in has fewer post-burn-in sweeps than samples");
  if (threads < 1) throw ValidationError("fold-in thread count must be >= 1");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Depends only on the settings seed and the document's content, so scores
// are independent of document order.
std::uint64_t document_seed(const Document& doc, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed);
  for (const auto& sentence : doc.sentences) {
    for (const WordId w : sentence) h = splitmix64(h ^ static_cast<std::uint64_t>(w));
    h = splitmix64(h ^ 0xfeedULL);
  }
  return h;
}

struct FoldInDocument {
  std::vector<WordId> words;
  std::vector<std::size_t> begin, end;  // sentence range of each token
  std::vector<std::pair<std::size_t, std::size_t>> sentences;
};

FoldInDocument flatten_document(const Document& doc, std::size_t vocabulary) {
  FoldInDocument out;
  for (const auto& sentence : doc.sentences) {
    const std::size_t b = out.words.size();
    const std::size_t e = b + sentence.size();
    for (const WordId w : sentence) {
      if (w < 0 || static_cast<std::size_t>(w) >= vocabulary) {
        throw ValidationError("test token id " + std::to_string(w) + " outside the model vocabulary in document '" +
                              doc.name + "'");
      }
      out.words.push_back(w);
      out.begin.push_back(b);
      out.end.push_back(e);
    }
    if (e > b) out.sentences.emplace_back(b, e);
  }
  return out;
}

class FoldIn {
 public:
  FoldIn(const FrozenModel& model, const FoldInDocument& doc, std::uint64_t seed)
      : model_(model), cfg_(model.config), doc_(doc), rng_(seed) {
    const std::size_t n = doc.words.size();
    classes_.resize(n);
    topics_.assign(n, kNoTopic);
    doc_topic_.assign(static_cast<std::size_t>(cfg_.topics()), 0);
    alpha_sum_ = std::accumulate(model.alpha.begin(), model.alpha.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<ClassId>(uniform01(rng_) * cfg_.classes());
      classes_[i] = c;
      if (cfg_.is_semantic(c)) {
        topics_[i] = static_cast<TopicId>(uniform01(rng_) * cfg_.topics());
        ++doc_topic_[static_cast<std::size_t>(topics_[i])];
        ++doc_total_;
      }
    }
  }

  void sweep() {
    const auto& outcomes = cfg_.outcomes();
    for (std::size_t i = 0; i < doc_.words.size(); ++i) {
      if (topics_[i] != kNoTopic) {
        --doc_topic_[static_cast<std::size_t>(topics_[i])];
        --doc_total_;
      }
      weights(i);
      double total = 0.0;
      for (const double v : weights_) total += v;
      if (!(total > 0.0)) throw NumericalError("fold-in weights vanished for a test token");
      const double target = uniform01(rng_) * total;
      double acc = 0.0;
      std::size_t pick = weights_.size() - 1;
      for (std::size_t j = 0; j < weights_.size(); ++j) {
        acc += weights_[j];
        if (target < acc && weights_[j] > 0.0) {
          pick = j;
          break;
        }
      }
      const Outcome o = outcomes[pick];
      classes_[i] = o.cls;
      topics_[i] = o.topic;
      if (o.topic != kNoTopic) {
        ++doc_topic_[static_cast<std::size_t>(o.topic)];
        ++doc_total_;
      }
    }
  }

  // Adds p(w_i | w_<i of the sentence, theta_hat) to `acc` for every token.
  void score(std::vector<double>& acc) const {
    const auto k = static_cast<std::size_t>(cfg_.topics());
    const auto s = static_cast<std::size_t>(cfg_.classes());
    std::vector<double> theta(k);
    for (std::size_t z = 0; z < k; ++z) theta[z] = (doc_topic_[z] + model_.alpha[z]) / (doc_total_ + alpha_sum_);

    const std::size_t contexts = cfg_.context_count();
    std::vector<double> forward(contexts, 0.0), next(contexts, 0.0);
    std::vector<std::size_t> active, next_active;
    std::vector<double> emission(s);
    for (const auto& [b, e] : doc_.sentences) {
      std::fill(forward.begin(), forward.end(), 0.0);
      forward[cfg_.initial_context()] = 1.0;
      active.assign(1, cfg_.initial_context());
      for (std::size_t i = b; i < e; ++i) {
        const WordId w = doc_.words[i];
        for (std::size_t c = 0; c < s; ++c) {
          const auto cls = static_cast<ClassId>(c);
          if (cfg_.is_semantic(cls)) {
            double p = 0.0;
            for (std::size_t z = 0; z < k; ++z) p += theta[z] * model_.emission(cls, static_cast<TopicId>(z), w);
            emission[c] = p;
          } else {
            emission[c] = model_.emission(cls, kNoTopic, w);
          }
        }
        next_active.clear();
        double total = 0.0;
        for (const std::size_t ctx : active) {
          const double mass = forward[ctx];
          const auto row = model_.pi.row(ctx);
          for (std::size_t c = 0; c < s; ++c) {
            const double v = mass * row[c] * emission[c];
            if (v == 0.0) continue;
            const std::size_t to = cfg_.advance(ctx, static_cast<ClassId>(c));
            if (next[to] == 0.0) next_active.push_back(to);
            next[to] += v;
            total += v;
          }
        }
        acc[i] += total;
        for (const std::size_t ctx : active) forward[ctx] = 0.0;
        if (total > 0.0) {
          for (const std::size_t ctx : next_active) forward[ctx] = next[ctx] / total;
        }
        for (const std::size_t ctx : next_active) next[ctx] = 0.0;
        active.swap(next_active);
        if (total == 0.0) active.clear();
      }
    }
  }

 private:
  std::size_t context_at(std::size_t t) const {
    std::size_t ctx = cfg_.initial_context();
    for (int j = cfg_.order(); j >= 1; --j) {
      const auto back = static_cast<std::size_t>(j);
      ctx = cfg_.advance(ctx, t >= doc_.begin[t] + back ? classes_[t - back] : cfg_.boundary());
    }
    return ctx;
  }

  void weights(std::size_t i) {
    const WordId w = doc_.words[i];
    const std::size_t last = std::min(i + static_cast<std::size_t>(cfg_.order()), doc_.end[i] - 1);
    const std::size_t base_ctx = context_at(i);
    weights_.clear();
    for (ClassId c = 0; c < cfg_.classes(); ++c) {
      double rho = 1.0;
      std::size_t ctx = base_ctx;
      for (std::size_t t = i; t <= last; ++t) {
        const ClassId out = t == i ? c : classes_[t];
        rho *= model_.pi.at(ctx, static_cast<std::size_t>(out));
        ctx = cfg_.advance(ctx, out);
      }
      if (cfg_.is_semantic(c)) {
        for (TopicId z = 0; z < cfg_.topics(); ++z) {
          const double theta =
              (doc_topic_[static_cast<std::size_t>(z)] + model_.alpha[static_cast<std::size_t>(z)]) /
              (doc_total_ + alpha_sum_);
          weights_.push_back(rho * theta * model_.emission(c, z, w));
        }
      } else {
        weights_.push_back(rho * model_.emission(c, kNoTopic, w));
      }
    }
  }

  const FrozenModel& model_;
  const ValidatedConfig& cfg_;
  const FoldInDocument& doc_;
  std::mt19937_64 rng_;
  std::vector<ClassId> classes_;
  std::vector<TopicId> topics_;
  std::vector<std::int64_t> doc_topic_;
  std::int64_t doc_total_ = 0;
  double alpha_sum_ = 0.0;
  std::vector<double> weights_;
};

}  // namespace

double document_log_likelihood(const FrozenModel& model, const Document& doc, const FoldInSettings& settings) {
  settings.validate();
  const FoldInDocument flat = flatten_document(doc, model.vocabulary());
  if (flat.words.empty()) return 0.0;

  FoldIn sampler(model, flat, document_seed(doc, settings.seed));
  std::vector<double> acc(flat.words.size(), 0.0);
  const int stride = (settings.sweeps - settings.burn_in) / settings.samples;
  int retained = 0;
  for (int sweep = 1; sweep <= settings.sweeps && retained < settings.samples; ++sweep) {
    sampler.sweep();
    if (sweep > settings.burn_in && (sweep - settings.burn_in) % stride == 0) {
      sampler.score(acc);
      ++retained;
    }
  }
  double ll = 0.0;
  for (const double p : acc) ll += std::log(p / retained);
  return ll;
}

double perplexity(const FrozenModel& model, const Corpus& test, const FoldInSettings& settings) {
  settings.validate();
  const std::size_t tokens = test.token_count();
  if (tokens == 0) throw ValidationError("perplexity is undefined for a test corpus without tokens");

  const std::size_t docs = test.documents.size();
  std::vector<double> ll(docs, 0.0);
  const auto workers = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(settings.threads), docs));
  if (workers <= 1) {
    for (std::size_t d = 0; d < docs; ++d) ll[d] = document_log_likelihood(model, test.documents[d], settings);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (std::size_t d = t; d < docs; d += workers) {
            ll[d] = document_log_likelihood(model, test.documents[d], settings);
          }
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  // Summed in document order; each term is order independent.
  std::vector<double> sorted = ll;
  std::sort(sorted.begin(), sorted.end());
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  return std::exp(-total / static_cast<double>(tokens));
}

std::vector<std::vector<std::size_t>> partition_folds(std::size_t documents, int folds, std::uint64_t seed) {
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  if (documents < static_cast<std::size_t>(folds)) {
    throw ValidationError("cannot split " + std::to_string(documents) + " documents into " + std::to_string(folds) +
                          " folds");
  }
  std::vector<std::size_t> order(documents);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = documents; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (std::size_t p = 0; p < documents; ++p) out[p % out.size()].push_back(order[p]);
  for (auto& fold : out) std::sort(fold.begin(), fold.end());
  return out;
}

CrossValidationResult cross_validate(const Corpus& corpus, const ValidatedConfig& config, const Hyperparameters& hyper,
                                     int folds, const SamplerOptions& options, const FoldInSettings& fold_in,
                                     const HyperoptHook& hook) {
  fold_in.validate();
  CrossValidationResult result;
  result.folds = partition_folds(corpus.documents.size(), folds, config.config().seed);
  for (const auto& held_out : result.folds) {
    std::vector<bool> is_test(corpus.documents.size(), false);
    for (const auto d : held_out) is_test[d] = true;
    std::vector<std::size_t> training;
    for (std::size_t d = 0; d < corpus.documents.size(); ++d) {
      if (!is_test[d]) training.push_back(d);
    }
    auto train_corpus = std::make_shared<const Corpus>(select_documents(corpus, training));
    const Corpus test_corpus = select_documents(corpus, held_out);
    auto trained = train(train_corpus, config, hyper, options, hook);
    result.fold_perplexity.push_back(perplexity(freeze(trained.state), test_corpus, fold_in));
  }
  result.mean_perplexity =
      std::accumulate(result.fold_perplexity.begin(), result.fold_perplexity.end(), 0.0) / folds;
  return result;
}

std::vector<TagId> flatten(const TagSequences& tags) {
  std::vector<TagId> out;
  for (const auto& doc : tags) {
    for (const auto& sentence : doc) out.insert(out.end(), sentence.begin(), sentence.end());
  }
  return out;
}

double tagging_accuracy(std::span<const TagId> predicted, std::span<const TagId> gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("predicted and gold tag sequences differ in length (" + std::to_string(predicted.size()) +
                          " vs " + std::to_string(gold.size()) + ")");
  }
  if (gold.empty()) throw ValidationError("tagging accuracy is undefined without tokens");
  std::size_t match = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) match += predicted[i] == gold[i] ? 1 : 0;
  return 100.0 * static_cast<double>(match) / static_cast<double>(gold.size());
}

double tagging_accuracy(const TagSequences& predicted, const TagSequences& gold) {
  bool same_shape = predicted.size() == gold.size();
  for (std::size_t d = 0; same_shape && d < gold.size(); ++d) {
    same_shape = predicted[d].size() == gold[d].size();
    for (std::size_t s = 0; same_shape && s < gold[d].size(); ++s) {
      same_shape = predicted[d][s].size() == gold[d][s].size();
    }
  }
  if (!same_shape) throw ValidationError("predicted and gold tag sequences have different shapes");
  const auto p = flatten(predicted);
  const auto g = flatten(gold);
  return tagging_accuracy(p, g);
}

double ClusteringComparison::variation_of_information() const {
  return std::max(0.0, predicted_entropy + gold_entropy - 2.0 * mutual_information);
}

namespace {

std::vector<TagId> distinct(std::span<const TagId> labels) {
  std::vector<TagId> out(labels.begin(), labels.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double entropy(const std::vector<std::int64_t>& counts, double n) {
  double h = 0.0;
  for (const auto c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

}  // namespace

ClusteringComparison compare_clusterings(std::span<const TagId> predicted, std::span<const TagId> gold) {
  if (predicted.size() != gold.size()) {
    throw ValidationError("clusterings cover different numbers of items (" + std::to_string(predicted.size()) +
                          " vs " + std::to_string(gold.size()) + ")");
  }
  ClusteringComparison out;
  out.predicted_labels = distinct(predicted);
  out.gold_labels = distinct(gold);
  out.contingency.assign(out.predicted_labels.size(), std::vector<std::int64_t>(out.gold_labels.size(), 0));
  if (gold.empty()) return out;

  auto index = [](const std::vector<TagId>& labels, TagId x) {
    return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), x) - labels.begin());
  };
  std::vector<std::int64_t> row(out.predicted_labels.size(), 0), col(out.gold_labels.size(), 0);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto r = index(out.predicted_labels, predicted[i]);
    const auto c = index(out.gold_labels, gold[i]);
    ++out.contingency[r][c];
    ++row[r];
    ++col[c];
  }
  const auto n = static_cast<double>(gold.size());
  out.predicted_entropy = entropy(row, n);
  out.gold_entropy = entropy(col, n);
  double mi = 0.0;
  for (std::size_t r = 0; r < row.size(); ++r) {
    for (std::size_t c = 0; c < col.size(); ++c) {
      const auto joint = out.contingency[r][c];
      if (joint == 0) continue;
      const double p = static_cast<double>(joint) / n;
      mi += p * std::log(static_cast<double>(joint) * n / (static_cast<double>(row[r]) * static_cast<double>(col[c])));
    }
  }
  out.mutual_information = std::max(0.0, mi);
  return out;
}

double variation_of_information(std::span<const TagId> predicted, std::span<const TagId> gold) {
  return compare_clusterings(predicted, gold).variation_of_information();
}

}  // namespace poslda
