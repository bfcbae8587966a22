// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poslda/corpus.hpp"
#include "poslda/model.hpp"

namespace poslda {

// Geometric tempering schedule:
//   tau(t) = tau_start                                   for t < start_iteration
//   tau(t) = max(tau_min, tau_start * decay^(t - start)) otherwise
struct AnnealSchedule {
  double tau_start = 1.0;
  double tau_min = 0.05;
  double decay = 0.99;
  int start_iteration = 0;

  // Decay starts halfway through `iterations` and reaches tau_min at 90%.
  static AnnealSchedule spanning(int iterations, double tau_start = 1.0, double tau_min = 0.05);

  double temperature(int iteration) const;
  void validate() const;
};

struct SamplerOptions {
  // Sweeps before the first hyperparameter re-optimisation.
  int burn_in = 100;
  // Sweeps between re-optimisations; 0 disables the hook.
  int hyperopt_period = 50;
  // Record the log-likelihood every `trace_every` sweeps (0: first and last only).
  int trace_every = 10;
  std::optional<AnnealSchedule> anneal;
  std::optional<TagDictionary> label_mask;
  TransitionMode transition_mode = TransitionMode::kExact;
};

// Called at re-optimisation points; may update the state's hyperparameters.
// The returned text is recorded in the trace.
using HyperoptHook = std::function<std::string(ModelState&)>;

struct LikelihoodTrace {
  std::vector<std::pair<int, double>> points;
  std::vector<std::pair<int, std::string>> notes;

  // "iteration,loglik" lines; notes become "# " comment lines placed after
  // the sweep they were produced at.
  void write_csv(std::ostream& out) const;
  bool operator==(const LikelihoodTrace&) const = default;
};

// Uniform random classes (within each word's allowed set) and topics.
ModelState init_random(std::shared_ptr<const Corpus> corpus, const ValidatedConfig& config,
                       const Hyperparameters& hyper, const SamplerOptions& options);

// Unnormalised blocked weights over config.outcomes() for token `pos`, whose
// assignment must already be removed from the counts. Masked-out classes get
// weight 0. Throws NumericalError if every weight is zero.
void conditional_weights(const ModelState& state, std::size_t pos, std::vector<double>& weights);

// Raises each weight to 1/tau (in log space). tau == 0 keeps only the first
// argmax.
void temper(std::vector<double>& weights, double tau);

// Normalised, tempered conditional for token `pos` (removed from counts).
std::vector<double> conditional_distribution(const ModelState& state, std::size_t pos, double tau = 1.0);

// One pass over every token in corpus order with decrement-sample-increment.
void gibbs_sweep(ModelState& state, double tau = 1.0);

// Joint log p(words, classes, topics) of the collapsed model.
double log_likelihood(const ModelState& state);

struct TrainResult {
  ModelState state;
  LikelihoodTrace trace;
};

TrainResult train(std::shared_ptr<const Corpus> corpus, const ValidatedConfig& config,
                  const Hyperparameters& hyper, const SamplerOptions& options, const HyperoptHook& hook = {});

// Runs the remaining sweeps up to config.iterations starting from
// state.completed_sweeps(). `after_sweep`, if set, sees the state after
// every sweep.
LikelihoodTrace continue_training(ModelState& state, const SamplerOptions& options, const HyperoptHook& hook = {},
                                  const std::function<void(const ModelState&)>& after_sweep = {});

// Class assignments reshaped like the corpus.
TagSequences class_sequences(const ModelState& state);

struct DecodeResult {
  TagSequences tags;
  double log_likelihood = 0.0;
  LikelihoodTrace trace;
};

// Trains with the dictionary as label mask and the given tempering schedule
// and returns the final class of every token.
DecodeResult map_decode(std::shared_ptr<const Corpus> corpus, const ValidatedConfig& config,
                        const Hyperparameters& hyper, const TagDictionary& dictionary, const AnnealSchedule& anneal,
                        SamplerOptions options = {}, const HyperoptHook& hook = {});

}  // namespace poslda
