// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "poslda/error.hpp"

namespace poslda {

std::string_view reduction_name(Reduction reduction) {
  switch (reduction) {
    case Reduction::kDegenerate:
      return "degenerate (single topic, single class)";
    case Reduction::kLda:
      return "LDA";
    case Reduction::kBayesianHmm:
      return "Bayesian HMM";
    case Reduction::kHmmLda:
      return "HMMLDA";
    case Reduction::kPoslda:
      return "POSLDA";
  }
  return "unknown";
}

ClassId ValidatedConfig::context_symbol(std::size_t context, int back) const {
  const auto base = static_cast<std::size_t>(config_.classes + 1);
  for (int i = 0; i < back; ++i) context /= base;
  return static_cast<ClassId>(context % base);
}

namespace {

constexpr std::size_t kMaxContexts = std::size_t{1} << 24;

void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

}  // namespace

ValidatedConfig validate_config(const ModelConfig& config) {
  require(config.topics >= 1, "topic count K must be >= 1 (got " + std::to_string(config.topics) + ")");
  require(config.classes >= 1, "class count S must be >= 1 (got " + std::to_string(config.classes) + ")");
  require(config.semantic_classes >= 0, "semantic class count S_sem must be >= 0");
  require(config.semantic_classes <= config.classes,
          "semantic class count S_sem=" + std::to_string(config.semantic_classes) +
              " exceeds class count S=" + std::to_string(config.classes));
  require(config.order >= 1, "HMM order n must be >= 1 (got " + std::to_string(config.order) + ")");
  require(config.iterations >= 0, "iteration count must be >= 0");

  ValidatedConfig v;
  v.config_ = config;
  const auto s = static_cast<std::size_t>(config.classes);

  std::vector<ClassId> ids = config.semantic_class_ids;
  if (ids.empty()) {
    ids.resize(static_cast<std::size_t>(config.semantic_classes));
    std::iota(ids.begin(), ids.end(), 0);
  }
  require(ids.size() == static_cast<std::size_t>(config.semantic_classes),
          "semantic_class_ids lists " + std::to_string(ids.size()) + " classes but S_sem=" +
              std::to_string(config.semantic_classes));
  v.semantic_.assign(s, false);
  for (const ClassId c : ids) {
    require(c >= 0 && c < config.classes, "semantic class id " + std::to_string(c) + " outside [0, S)");
    require(!v.semantic_[static_cast<std::size_t>(c)], "semantic class id " + std::to_string(c) + " listed twice");
    v.semantic_[static_cast<std::size_t>(c)] = true;
  }
  v.config_.semantic_class_ids = ids;

  v.role_index_.assign(s, 0);
  int sem = 0;
  int syn = 0;
  for (std::size_t c = 0; c < s; ++c) {
    if (v.semantic_[c]) {
      v.semantic_ids_.push_back(static_cast<ClassId>(c));
      v.role_index_[c] = sem++;
    } else {
      v.role_index_[c] = syn++;
    }
  }

  std::size_t contexts = 1;
  for (int i = 0; i < config.order; ++i) {
    contexts *= s + 1;
    require(contexts <= kMaxContexts, "transition context space (S+1)^n is too large");
  }
  v.context_count_ = contexts;

  for (std::size_t c = 0; c < s; ++c) {
    if (v.semantic_[c]) {
      for (int k = 0; k < config.topics; ++k) v.outcomes_.push_back({static_cast<ClassId>(c), k});
    } else {
      v.outcomes_.push_back({static_cast<ClassId>(c), kNoTopic});
    }
  }

  if (config.topics == 1 && config.classes == 1) {
    v.reduction_ = Reduction::kDegenerate;
  } else if (config.classes == 1 && config.semantic_classes == 1) {
    v.reduction_ = Reduction::kLda;
  } else if (config.topics == 1 || config.semantic_classes == 0) {
    v.reduction_ = Reduction::kBayesianHmm;
  } else if (config.semantic_classes == 1) {
    v.reduction_ = Reduction::kHmmLda;
  } else {
    v.reduction_ = Reduction::kPoslda;
  }
  return v;
}

Hyperparameters Hyperparameters::symmetric(int topics, int classes, double alpha, double beta, double gamma) {
  Hyperparameters h;
  h.alpha.assign(static_cast<std::size_t>(std::max(topics, 0)), alpha);
  h.beta = beta;
  h.gamma.assign(static_cast<std::size_t>(std::max(classes, 0)), gamma);
  return h;
}

double Hyperparameters::alpha_sum() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }
double Hyperparameters::gamma_sum() const { return std::accumulate(gamma.begin(), gamma.end(), 0.0); }

void Hyperparameters::validate(const ValidatedConfig& config) const {
  auto positive = [](double x) { return std::isfinite(x) && x > 0.0; };
  require(alpha.size() == static_cast<std::size_t>(config.topics()),
          "alpha has " + std::to_string(alpha.size()) + " entries, expected K=" + std::to_string(config.topics()));
  require(gamma.size() == static_cast<std::size_t>(config.classes()),
          "gamma has " + std::to_string(gamma.size()) + " entries, expected S=" + std::to_string(config.classes()));
  require(std::all_of(alpha.begin(), alpha.end(), positive), "alpha entries must be positive");
  require(std::all_of(gamma.begin(), gamma.end(), positive), "gamma entries must be positive");
  require(positive(beta), "beta must be positive");
}

CountTables::CountTables(const ValidatedConfig& config, std::size_t documents, std::size_t vocabulary)
    : documents_(documents),
      vocabulary_(vocabulary),
      topics_(static_cast<std::size_t>(config.topics())),
      semantic_(static_cast<std::size_t>(config.semantic_count())),
      syntactic_(static_cast<std::size_t>(config.syntactic_count())),
      classes_(static_cast<std::size_t>(config.classes())),
      contexts_(config.context_count()),
      doc_topic_(documents * topics_, 0),
      doc_total_(documents, 0),
      semantic_word_(semantic_ * topics_ * vocabulary, 0),
      semantic_total_(semantic_ * topics_, 0),
      syntactic_word_(syntactic_ * vocabulary, 0),
      syntactic_total_(syntactic_, 0),
      transition_(contexts_ * classes_, 0),
      context_total_(contexts_, 0) {}

namespace {

bool rows_sum_to(std::span<const std::int32_t> detail, std::span<const std::int32_t> totals, std::size_t width) {
  for (std::size_t r = 0; r < totals.size(); ++r) {
    std::int64_t sum = 0;
    for (std::size_t j = 0; j < width; ++j) {
      const auto v = detail[r * width + j];
      if (v < 0) return false;
      sum += v;
    }
    if (sum != totals[r]) return false;
  }
  return true;
}

}  // namespace

bool CountTables::marginals_consistent() const {
  return rows_sum_to(doc_topic_, doc_total_, topics_) &&
         rows_sum_to(semantic_word_, semantic_total_, vocabulary_) &&
         rows_sum_to(syntactic_word_, syntactic_total_, vocabulary_) &&
         rows_sum_to(transition_, context_total_, classes_);
}

std::int64_t CountTables::emitted_tokens() const {
  std::int64_t n = 0;
  for (const auto v : semantic_total_) n += v;
  for (const auto v : syntactic_total_) n += v;
  return n;
}

ModelState::ModelState(std::shared_ptr<const Corpus> corpus, ValidatedConfig config, Hyperparameters hyper)
    : corpus_(std::move(corpus)), config_(std::move(config)), hyper_(std::move(hyper)) {
  hyper_.validate(config_);
  vocabulary_ = corpus_->vocabulary.size();
  const std::size_t n = corpus_->token_count();
  words_.reserve(n);
  docs_.reserve(n);
  sentence_begin_.reserve(n);
  sentence_end_.reserve(n);
  for (std::size_t d = 0; d < corpus_->documents.size(); ++d) {
    for (const auto& sentence : corpus_->documents[d].sentences) {
      const auto begin = static_cast<std::uint32_t>(words_.size());
      const auto end = static_cast<std::uint32_t>(begin + sentence.size());
      for (const WordId w : sentence) {
        if (w < 0 || static_cast<std::size_t>(w) >= vocabulary_) {
          throw ValidationError("token id " + std::to_string(w) + " outside the vocabulary in document '" +
                                corpus_->documents[d].name + "'");
        }
        words_.push_back(w);
        docs_.push_back(static_cast<std::uint32_t>(d));
        sentence_begin_.push_back(begin);
        sentence_end_.push_back(end);
      }
    }
  }
  rng_.seed(config_.config().seed);
  const ClassId first = 0;
  classes_.assign(n, first);
  topics_.assign(n, config_.is_semantic(first) ? 0 : kNoTopic);
  counts_ = recount();
}

std::size_t ModelState::context_at(std::size_t t) const {
  const std::size_t begin = sentence_begin_[t];
  std::size_t context = config_.initial_context();
  for (int j = config_.order(); j >= 1; --j) {
    const auto back = static_cast<std::size_t>(j);
    const ClassId symbol = t >= begin + back ? classes_[t - back] : config_.boundary();
    context = config_.advance(context, symbol);
  }
  return context;
}

void ModelState::remove_token(std::size_t i) {
  const std::size_t last = last_affected(i);
  for (std::size_t t = i; t <= last; ++t) counts_.add_transition(context_at(t), classes_[t], -1);
  const ClassId c = classes_[i];
  if (config_.is_semantic(c)) {
    counts_.add_semantic(docs_[i], config_.role_index(c), topics_[i], words_[i], -1);
  } else {
    counts_.add_syntactic(config_.role_index(c), words_[i], -1);
  }
}

void ModelState::add_token(std::size_t i, ClassId c, TopicId z) {
  classes_[i] = c;
  topics_[i] = config_.is_semantic(c) ? z : kNoTopic;
  const std::size_t last = last_affected(i);
  for (std::size_t t = i; t <= last; ++t) counts_.add_transition(context_at(t), classes_[t], 1);
  if (config_.is_semantic(c)) {
    counts_.add_semantic(docs_[i], config_.role_index(c), z, words_[i], 1);
  } else {
    counts_.add_syntactic(config_.role_index(c), words_[i], 1);
  }
}

void ModelState::assign(std::vector<ClassId> classes, std::vector<TopicId> topics) {
  if (classes.size() != words_.size() || topics.size() != words_.size()) {
    throw ValidationError("assignment length does not match the token count");
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const ClassId c = classes[i];
    if (c < 0 || c >= config_.classes()) throw ValidationError("class assignment outside [0, S)");
    if (config_.is_semantic(c)) {
      if (topics[i] < 0 || topics[i] >= config_.topics()) {
        throw ValidationError("semantic token without a topic in [0, K)");
      }
    } else if (topics[i] != kNoTopic) {
      throw ValidationError("syntactic token carries a topic");
    }
  }
  classes_ = std::move(classes);
  topics_ = std::move(topics);
  counts_ = recount();
}

CountTables ModelState::recount() const {
  CountTables counts(config_, corpus_->documents.size(), vocabulary_);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    const ClassId c = classes_[i];
    if (config_.is_semantic(c)) {
      counts.add_semantic(docs_[i], config_.role_index(c), topics_[i], words_[i], 1);
    } else {
      counts.add_syntactic(config_.role_index(c), words_[i], 1);
    }
    counts.add_transition(context_at(i), c, 1);
  }
  return counts;
}

void ModelState::set_class_masks(std::vector<std::uint64_t> masks) {
  if (masks.empty()) {
    masks_.clear();
    return;
  }
  if (masks.size() != vocabulary_) throw ValidationError("class mask count does not match the vocabulary size");
  if (config_.classes() > 64) throw ValidationError("class masks support at most 64 classes");
  const std::uint64_t full =
      config_.classes() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << config_.classes()) - 1;
  for (std::size_t w = 0; w < masks.size(); ++w) {
    masks[w] &= full;
    if (masks[w] == 0) {
      throw ValidationError("word '" + corpus_->vocabulary.word(static_cast<WordId>(w)) +
                            "' has an empty allowed class set");
    }
  }
  masks_ = std::move(masks);
}

std::uint64_t ModelState::allowed_classes(WordId w) const {
  if (!masks_.empty()) return masks_[static_cast<std::size_t>(w)];
  return config_.classes() >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << config_.classes()) - 1;
}

bool ModelState::operator==(const ModelState& other) const {
  return config_ == other.config_ && hyper_ == other.hyper_ && *corpus_ == *other.corpus_ &&
         classes_ == other.classes_ && topics_ == other.topics_ && counts_ == other.counts_ &&
         masks_ == other.masks_ && mode_ == other.mode_ && rng_ == other.rng_ &&
         completed_sweeps_ == other.completed_sweeps_;
}

WordDistributions phi_estimate(const CountTables& counts, double beta) {
  WordDistributions phi;
  phi.vocabulary = counts.vocabulary();
  phi.topics = counts.topics();
  const double wb = static_cast<double>(phi.vocabulary) * beta;
  phi.semantic.resize(counts.semantic_count() * phi.topics * phi.vocabulary);
  for (std::size_t r = 0; r < counts.semantic_count(); ++r) {
    for (std::size_t k = 0; k < phi.topics; ++k) {
      const double denom = counts.semantic_total(static_cast<int>(r), static_cast<TopicId>(k)) + wb;
      for (std::size_t w = 0; w < phi.vocabulary; ++w) {
        phi.semantic[(r * phi.topics + k) * phi.vocabulary + w] =
            (counts.semantic_word(static_cast<int>(r), static_cast<TopicId>(k), static_cast<WordId>(w)) + beta) /
            denom;
      }
    }
  }
  phi.syntactic.resize(counts.syntactic_count() * phi.vocabulary);
  for (std::size_t r = 0; r < counts.syntactic_count(); ++r) {
    const double denom = counts.syntactic_total(static_cast<int>(r)) + wb;
    for (std::size_t w = 0; w < phi.vocabulary; ++w) {
      phi.syntactic[r * phi.vocabulary + w] =
          (counts.syntactic_word(static_cast<int>(r), static_cast<WordId>(w)) + beta) / denom;
    }
  }
  return phi;
}

ProbabilityTable theta_estimate(const CountTables& counts, std::span<const double> alpha) {
  ProbabilityTable theta{counts.documents(), counts.topics(), {}};
  const double alpha_sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  theta.values.resize(theta.rows * theta.cols);
  for (std::size_t d = 0; d < theta.rows; ++d) {
    const double denom = counts.doc_total(d) + alpha_sum;
    for (std::size_t k = 0; k < theta.cols; ++k) {
      theta.values[d * theta.cols + k] = (counts.doc_topic(d, static_cast<TopicId>(k)) + alpha[k]) / denom;
    }
  }
  return theta;
}

ProbabilityTable pi_estimate(const CountTables& counts, std::span<const double> gamma) {
  ProbabilityTable pi{counts.contexts(), counts.classes(), {}};
  const double gamma_sum = std::accumulate(gamma.begin(), gamma.end(), 0.0);
  pi.values.resize(pi.rows * pi.cols);
  for (std::size_t ctx = 0; ctx < pi.rows; ++ctx) {
    const double denom = counts.context_total(ctx) + gamma_sum;
    for (std::size_t c = 0; c < pi.cols; ++c) {
      pi.values[ctx * pi.cols + c] = (counts.transition(ctx, static_cast<ClassId>(c)) + gamma[c]) / denom;
    }
  }
  return pi;
}

FrozenModel freeze(const ModelState& state) {
  const auto& h = state.hyperparameters();
  return FrozenModel{state.config(), h.alpha, phi_estimate(state.counts(), h.beta),
                     pi_estimate(state.counts(), h.gamma)};
}

}  // namespace poslda
