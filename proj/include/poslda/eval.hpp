// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "poslda/corpus.hpp"
#include "poslda/model.hpp"
#include "poslda/sampler.hpp"

namespace poslda {

// Held-out scoring by fold-in: word and transition distributions stay frozen
// at the training point estimates while the test document's classes and
// topics are Gibbs-sampled. At `samples` evenly spaced sweeps after burn-in
// the document's topic proportions are read off and every token is scored by
// the forward algorithm, p(w_i | w_<i of its sentence, theta). Per-token
// probabilities are averaged over the retained samples.
struct FoldInSettings {
  int sweeps = 200;
  int samples = 10;
  int burn_in = 100;
  std::uint64_t seed = 1;
  // Documents are scored independently; > 1 spreads them over threads.
  int threads = 1;

  void validate() const;
};

// log p(doc | model). Word ids must be < model.vocabulary().
double document_log_likelihood(const FrozenModel& model, const Document& doc, const FoldInSettings& settings);

// exp(-sum_d log p(w_d) / sum_d N_d). Throws ValidationError on a corpus
// without tokens. The result does not depend on document order.
double perplexity(const FrozenModel& model, const Corpus& test, const FoldInSettings& settings = {});

// Seeded partition of [0, documents) into `folds` groups whose sizes differ
// by at most one.
std::vector<std::vector<std::size_t>> partition_folds(std::size_t documents, int folds, std::uint64_t seed);

struct CrossValidationResult {
  double mean_perplexity = 0.0;
  std::vector<double> fold_perplexity;
  std::vector<std::vector<std::size_t>> folds;
};

CrossValidationResult cross_validate(const Corpus& corpus, const ValidatedConfig& config, const Hyperparameters& hyper,
                                     int folds, const SamplerOptions& options, const FoldInSettings& fold_in,
                                     const HyperoptHook& hook = {});

std::vector<TagId> flatten(const TagSequences& tags);

// 100 * matching / total. Throws ValidationError on shape mismatch or when
// there are no tokens.
double tagging_accuracy(const TagSequences& predicted, const TagSequences& gold);
double tagging_accuracy(std::span<const TagId> predicted, std::span<const TagId> gold);

struct ClusteringComparison {
  std::vector<TagId> predicted_labels;
  std::vector<TagId> gold_labels;
  // contingency[i][j]: items in predicted_labels[i] and gold_labels[j].
  std::vector<std::vector<std::int64_t>> contingency;
  double predicted_entropy = 0.0;  // nats
  double gold_entropy = 0.0;
  double mutual_information = 0.0;

  double variation_of_information() const;
};

ClusteringComparison compare_clusterings(std::span<const TagId> predicted, std::span<const TagId> gold);
double variation_of_information(std::span<const TagId> predicted, std::span<const TagId> gold);

}  // namespace poslda
