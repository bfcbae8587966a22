// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "poslda/corpus.hpp"

namespace poslda {

using ClassId = std::int32_t;
using TopicId = std::int32_t;

// Topic slot of a token whose class is syntactic.
inline constexpr TopicId kNoTopic = -1;

enum class Reduction { kDegenerate, kLda, kBayesianHmm, kHmmLda, kPoslda };

std::string_view reduction_name(Reduction reduction);

struct ModelConfig {
  int topics = 1;               // K
  int classes = 1;              // S
  int semantic_classes = 0;     // S_sem
  // Which classes are semantic. Empty means the first `semantic_classes` ids.
  std::vector<ClassId> semantic_class_ids;
  int order = 2;                // transition context length n
  std::uint64_t seed = 1;
  int iterations = 1000;

  bool operator==(const ModelConfig&) const = default;
};

// One cell of the blocked sampling distribution.
struct Outcome {
  ClassId cls;
  TopicId topic;
};

// A ModelConfig whose invariants hold, with derived lookup tables.
//
// Class contexts of length n are encoded in base S+1, the extra symbol being
// the sentence BOUNDARY. Digit 0 holds the most recent class.
class ValidatedConfig {
 public:
  ValidatedConfig() = default;

  const ModelConfig& config() const { return config_; }
  int topics() const { return config_.topics; }
  int classes() const { return config_.classes; }
  int semantic_count() const { return static_cast<int>(semantic_ids_.size()); }
  int syntactic_count() const { return config_.classes - semantic_count(); }
  int order() const { return config_.order; }
  Reduction reduction() const { return reduction_; }

  bool is_semantic(ClassId c) const { return semantic_[static_cast<std::size_t>(c)]; }
  // Index of the class among the semantic (or syntactic) classes.
  int role_index(ClassId c) const { return role_index_[static_cast<std::size_t>(c)]; }
  const std::vector<ClassId>& semantic_ids() const { return semantic_ids_; }

  ClassId boundary() const { return config_.classes; }
  std::size_t context_count() const { return context_count_; }
  std::size_t initial_context() const { return context_count_ - 1; }
  std::size_t advance(std::size_t context, ClassId next) const {
    return (context * static_cast<std::size_t>(config_.classes + 1)) % context_count_ +
           static_cast<std::size_t>(next);
  }
  // Symbol `back` steps before the context end (back = 0 is the latest).
  ClassId context_symbol(std::size_t context, int back) const;

  // Blocked outcomes in class order: one per syntactic class, K per semantic.
  const std::vector<Outcome>& outcomes() const { return outcomes_; }

  bool operator==(const ValidatedConfig& other) const { return config_ == other.config_; }

 private:
  friend ValidatedConfig validate_config(const ModelConfig& config);

  ModelConfig config_;
  Reduction reduction_ = Reduction::kDegenerate;
  std::vector<bool> semantic_;
  std::vector<int> role_index_;
  std::vector<ClassId> semantic_ids_;
  std::size_t context_count_ = 1;
  std::vector<Outcome> outcomes_;
};

// Throws ValidationError naming the violated bound.
ValidatedConfig validate_config(const ModelConfig& config);

struct Hyperparameters {
  std::vector<double> alpha;  // length K
  double beta = 0.01;
  std::vector<double> gamma;  // length S

  static Hyperparameters symmetric(int topics, int classes, double alpha, double beta, double gamma);

  double alpha_sum() const;
  double gamma_sum() const;
  void validate(const ValidatedConfig& config) const;

  bool operator==(const Hyperparameters&) const = default;
};

// Sufficient statistics of the collapsed model. Tables are dense row-major
// int32 arrays; every marginal is cached next to its detail counts.
class CountTables {
 public:
  CountTables() = default;
  CountTables(const ValidatedConfig& config, std::size_t documents, std::size_t vocabulary);

  std::size_t documents() const { return documents_; }
  std::size_t vocabulary() const { return vocabulary_; }
  std::size_t topics() const { return topics_; }
  std::size_t semantic_count() const { return semantic_; }
  std::size_t syntactic_count() const { return syntactic_; }
  std::size_t classes() const { return classes_; }
  std::size_t contexts() const { return contexts_; }

  std::int32_t doc_topic(std::size_t d, TopicId k) const { return doc_topic_[d * topics_ + k]; }
  std::int32_t doc_total(std::size_t d) const { return doc_total_[d]; }
  std::int32_t semantic_word(int rank, TopicId k, WordId w) const {
    return semantic_word_[(static_cast<std::size_t>(rank) * topics_ + k) * vocabulary_ + w];
  }
  std::int32_t semantic_total(int rank, TopicId k) const {
    return semantic_total_[static_cast<std::size_t>(rank) * topics_ + k];
  }
  std::int32_t syntactic_word(int rank, WordId w) const {
    return syntactic_word_[static_cast<std::size_t>(rank) * vocabulary_ + w];
  }
  std::int32_t syntactic_total(int rank) const { return syntactic_total_[static_cast<std::size_t>(rank)]; }
  std::int32_t transition(std::size_t context, ClassId c) const { return transition_[context * classes_ + c]; }
  std::int32_t context_total(std::size_t context) const { return context_total_[context]; }

  void add_semantic(std::size_t d, int rank, TopicId k, WordId w, std::int32_t delta) {
    doc_topic_[d * topics_ + k] += delta;
    doc_total_[d] += delta;
    const std::size_t row = static_cast<std::size_t>(rank) * topics_ + k;
    semantic_word_[row * vocabulary_ + w] += delta;
    semantic_total_[row] += delta;
  }
  void add_syntactic(int rank, WordId w, std::int32_t delta) {
    syntactic_word_[static_cast<std::size_t>(rank) * vocabulary_ + w] += delta;
    syntactic_total_[static_cast<std::size_t>(rank)] += delta;
  }
  void add_transition(std::size_t context, ClassId c, std::int32_t delta) {
    transition_[context * classes_ + c] += delta;
    context_total_[context] += delta;
  }

  // Row-major views: rows of length K, W, W and S respectively.
  std::span<const std::int32_t> doc_topic_rows() const { return doc_topic_; }
  std::span<const std::int32_t> semantic_word_rows() const { return semantic_word_; }
  std::span<const std::int32_t> syntactic_word_rows() const { return syntactic_word_; }
  std::span<const std::int32_t> transition_rows() const { return transition_; }

  // Every cached marginal equals the sum of its details and no count is
  // negative.
  bool marginals_consistent() const;
  std::int64_t emitted_tokens() const;

  bool operator==(const CountTables&) const = default;

 private:
  std::size_t documents_ = 0, vocabulary_ = 0, topics_ = 0, semantic_ = 0, syntactic_ = 0;
  std::size_t classes_ = 0, contexts_ = 0;
  std::vector<std::int32_t> doc_topic_, doc_total_;
  std::vector<std::int32_t> semantic_word_, semantic_total_;
  std::vector<std::int32_t> syntactic_word_, syntactic_total_;
  std::vector<std::int32_t> transition_, context_total_;
};

enum class TransitionMode {
  // Exact collapsed conditional: transition windows that hit the same cell
  // see each other's +1.
  kExact,
  // Window factors multiplied independently, without overlap corrections.
  kLiteral,
};

// Uniform double in [0, 1) from the top 53 bits of one mt19937_64 draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Latent assignments over a corpus plus the count tables they imply.
//
// Tokens are flattened in document, sentence, position order. The class
// chain resets at every sentence.
class ModelState {
 public:
  ModelState(std::shared_ptr<const Corpus> corpus, ValidatedConfig config, Hyperparameters hyper);

  const Corpus& corpus() const { return *corpus_; }
  std::shared_ptr<const Corpus> shared_corpus() const { return corpus_; }
  const ValidatedConfig& config() const { return config_; }
  const Hyperparameters& hyperparameters() const { return hyper_; }
  Hyperparameters& mutable_hyperparameters() { return hyper_; }
  const CountTables& counts() const { return counts_; }
  std::size_t vocabulary_size() const { return vocabulary_; }

  std::size_t token_count() const { return words_.size(); }
  WordId word(std::size_t i) const { return words_[i]; }
  std::size_t document(std::size_t i) const { return docs_[i]; }
  std::size_t sentence_begin(std::size_t i) const { return sentence_begin_[i]; }
  std::size_t sentence_end(std::size_t i) const { return sentence_end_[i]; }
  ClassId class_of(std::size_t i) const { return classes_[i]; }
  TopicId topic_of(std::size_t i) const { return topics_[i]; }
  const std::vector<ClassId>& class_assignments() const { return classes_; }
  const std::vector<TopicId>& topic_assignments() const { return topics_; }

  // Encoded context of the transition that emits the class of token `t`.
  std::size_t context_at(std::size_t t) const;
  // Last transition whose context or outcome involves token `i`.
  std::size_t last_affected(std::size_t i) const {
    return std::min(i + static_cast<std::size_t>(config_.order()), static_cast<std::size_t>(sentence_end_[i]) - 1);
  }

  // Removes token i's emission and every transition involving its class.
  void remove_token(std::size_t i);
  // Sets token i's assignment and adds back what remove_token took out.
  void add_token(std::size_t i, ClassId c, TopicId z);

  // Replaces all assignments and rebuilds the counts from scratch.
  void assign(std::vector<ClassId> classes, std::vector<TopicId> topics);
  CountTables recount() const;

  // Per-word permitted class masks; empty when unconstrained.
  const std::vector<std::uint64_t>& class_masks() const { return masks_; }
  void set_class_masks(std::vector<std::uint64_t> masks);
  std::uint64_t allowed_classes(WordId w) const;

  TransitionMode transition_mode() const { return mode_; }
  void set_transition_mode(TransitionMode mode) { mode_ = mode; }

  std::mt19937_64& rng() { return rng_; }
  const std::mt19937_64& rng() const { return rng_; }
  int completed_sweeps() const { return completed_sweeps_; }
  void set_completed_sweeps(int sweeps) { completed_sweeps_ = sweeps; }

  // Assignments, counts, hyperparameters, masks, mode, RNG position and
  // sweep count all equal.
  bool operator==(const ModelState& other) const;

 private:
  std::shared_ptr<const Corpus> corpus_;
  ValidatedConfig config_;
  Hyperparameters hyper_;
  std::size_t vocabulary_ = 0;

  std::vector<WordId> words_;
  std::vector<std::uint32_t> docs_;
  std::vector<std::uint32_t> sentence_begin_, sentence_end_;
  std::vector<ClassId> classes_;
  std::vector<TopicId> topics_;
  CountTables counts_;

  std::vector<std::uint64_t> masks_;
  TransitionMode mode_ = TransitionMode::kExact;
  std::mt19937_64 rng_;
  int completed_sweeps_ = 0;
};

// Word distributions p(w | c, z) for semantic classes and p(w | c) for
// syntactic ones, smoothed by a symmetric beta.
struct WordDistributions {
  std::size_t vocabulary = 0;
  std::size_t topics = 0;
  std::vector<double> semantic;   // [rank][k][w]
  std::vector<double> syntactic;  // [rank][w]

  double semantic_at(int rank, TopicId k, WordId w) const {
    return semantic[(static_cast<std::size_t>(rank) * topics + k) * vocabulary + w];
  }
  double syntactic_at(int rank, WordId w) const {
    return syntactic[static_cast<std::size_t>(rank) * vocabulary + w];
  }
};

// Row-major [rows][cols] probability table.
struct ProbabilityTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
};

WordDistributions phi_estimate(const CountTables& counts, double beta);
// theta[d][k] over the topic-assigned tokens of each document.
ProbabilityTable theta_estimate(const CountTables& counts, std::span<const double> alpha);
// pi[context][c].
ProbabilityTable pi_estimate(const CountTables& counts, std::span<const double> gamma);

// Parameters frozen at training point estimates; what held-out evaluation
// consumes.
struct FrozenModel {
  ValidatedConfig config;
  std::vector<double> alpha;
  WordDistributions phi;
  ProbabilityTable pi;

  std::size_t vocabulary() const { return phi.vocabulary; }
  // p(w | c) for syntactic c, or p(w | c, z) for semantic c.
  double emission(ClassId c, TopicId z, WordId w) const {
    const int rank = config.role_index(c);
    return config.is_semantic(c) ? phi.semantic_at(rank, z, w) : phi.syntactic_at(rank, w);
  }
};

FrozenModel freeze(const ModelState& state);

}  // namespace poslda
