// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/sampler.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "poslda/error.hpp"
#include "poslda/math.hpp"

namespace poslda {

AnnealSchedule AnnealSchedule::spanning(int iterations, double tau_start, double tau_min) {
  AnnealSchedule s;
  s.tau_start = tau_start;
  s.tau_min = tau_min;
  s.start_iteration = iterations / 2;
  const int end = std::max(s.start_iteration + 1, static_cast<int>(std::lround(0.9 * iterations)));
  const double ratio = tau_min / tau_start;
  s.decay = ratio >= 1.0 ? 0.5 : std::pow(ratio, 1.0 / (end - s.start_iteration));
  return s;
}

double AnnealSchedule::temperature(int iteration) const {
  if (iteration < start_iteration) return tau_start;
  return std::max(tau_min, tau_start * std::pow(decay, iteration - start_iteration));
}

void AnnealSchedule::validate() const {
  if (!(tau_start > 0.0) || !(tau_min > 0.0)) throw ValidationError("annealing temperatures must be positive");
  if (tau_min > tau_start) throw ValidationError("annealing tau_min exceeds tau_start");
  if (!(decay > 0.0 && decay < 1.0)) throw ValidationError("annealing decay must lie in (0, 1)");
  if (start_iteration < 0) throw ValidationError("annealing start iteration must be >= 0");
}

void LikelihoodTrace::write_csv(std::ostream& out) const {
  out << "iteration,loglik\n";
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  std::size_t note = 0;
  for (const auto& [iteration, loglik] : points) {
    while (note < notes.size() && notes[note].first < iteration) out << "# " << notes[note++].second << '\n';
    out << iteration << ',' << loglik << '\n';
  }
  while (note < notes.size()) out << "# " << notes[note++].second << '\n';
  out.precision(old_precision);
}

ModelState init_random(std::shared_ptr<const Corpus> corpus, const ValidatedConfig& config,
                       const Hyperparameters& hyper, const SamplerOptions& options) {
  ModelState state(std::move(corpus), config, hyper);
  state.set_transition_mode(options.transition_mode);
  if (options.label_mask) {
    const auto& dict = *options.label_mask;
    if (dict.tag_count() != static_cast<std::size_t>(config.classes())) {
      throw ValidationError("label mask has " + std::to_string(dict.tag_count()) + " tags but S=" +
                            std::to_string(config.classes()));
    }
    std::vector<std::uint64_t> masks(state.vocabulary_size());
    for (std::size_t w = 0; w < masks.size(); ++w) masks[w] = dict.allowed(static_cast<WordId>(w));
    state.set_class_masks(std::move(masks));
  }

  const std::size_t n = state.token_count();
  std::vector<ClassId> classes(n);
  std::vector<TopicId> topics(n, kNoTopic);
  auto& rng = state.rng();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t allowed = state.allowed_classes(state.word(i));
    const int count = std::popcount(allowed);
    auto pick = static_cast<int>(uniform01(rng) * count);
    for (int j = 0; j < pick; ++j) allowed &= allowed - 1;
    const auto c = static_cast<ClassId>(std::countr_zero(allowed));
    classes[i] = c;
    if (config.is_semantic(c)) topics[i] = static_cast<TopicId>(uniform01(rng) * config.topics());
  }
  state.assign(std::move(classes), std::move(topics));
  return state;
}

namespace {

// Product of the transition factors touched by giving token `pos` class `c`.
// Counts must exclude every transition involving `pos`.
double transition_weight(const ModelState& state, std::size_t pos, ClassId c) {
  const auto& config = state.config();
  const auto& counts = state.counts();
  const auto& gamma = state.hyperparameters().gamma;
  const double gamma_sum = state.hyperparameters().gamma_sum();
  const bool exact = state.transition_mode() == TransitionMode::kExact;

  constexpr std::size_t kInline = 16;
  std::array<std::size_t, kInline> seen_ctx{};
  std::array<ClassId, kInline> seen_out{};
  std::vector<std::size_t> heap_ctx;
  std::vector<ClassId> heap_out;
  const std::size_t last = state.last_affected(pos);
  const std::size_t windows = last - pos + 1;
  if (windows > kInline) {
    heap_ctx.resize(windows);
    heap_out.resize(windows);
  }
  std::size_t* ctxs = windows > kInline ? heap_ctx.data() : seen_ctx.data();
  ClassId* outs = windows > kInline ? heap_out.data() : seen_out.data();

  double weight = 1.0;
  std::size_t context = state.context_at(pos);
  for (std::size_t t = pos, j = 0; t <= last; ++t, ++j) {
    const ClassId out = t == pos ? c : state.class_of(t);
    double num = counts.transition(context, out) + gamma[static_cast<std::size_t>(out)];
    double den = counts.context_total(context) + gamma_sum;
    if (exact) {
      for (std::size_t e = 0; e < j; ++e) {
        if (ctxs[e] != context) continue;
        den += 1.0;
        if (outs[e] == out) num += 1.0;
      }
    }
    weight *= num / den;
    ctxs[j] = context;
    outs[j] = out;
    context = config.advance(context, out);
  }
  return weight;
}

}  // namespace

void conditional_weights(const ModelState& state, std::size_t pos, std::vector<double>& weights) {
  const auto& config = state.config();
  const auto& counts = state.counts();
  const auto& hyper = state.hyperparameters();
  const WordId w = state.word(pos);
  const std::size_t d = state.document(pos);
  const std::uint64_t allowed = state.allowed_classes(w);
  const double beta = hyper.beta;
  const double wb = static_cast<double>(state.vocabulary_size()) * beta;
  const double doc_den = counts.doc_total(d) + hyper.alpha_sum();
  const int topics = config.topics();

  weights.resize(config.outcomes().size());
  std::size_t idx = 0;
  double total = 0.0;
  for (ClassId c = 0; c < config.classes(); ++c) {
    const bool semantic = config.is_semantic(c);
    const std::size_t width = semantic ? static_cast<std::size_t>(topics) : 1;
    if ((allowed >> c & 1U) == 0) {
      std::fill_n(weights.begin() + static_cast<std::ptrdiff_t>(idx), width, 0.0);
      idx += width;
      continue;
    }
    const double rho = transition_weight(state, pos, c);
    const int rank = config.role_index(c);
    if (semantic) {
      for (TopicId k = 0; k < topics; ++k) {
        const double theta = (counts.doc_topic(d, k) + hyper.alpha[static_cast<std::size_t>(k)]) / doc_den;
        const double phi = (counts.semantic_word(rank, k, w) + beta) / (counts.semantic_total(rank, k) + wb);
        weights[idx] = rho * theta * phi;
        total += weights[idx++];
      }
    } else {
      weights[idx] = rho * (counts.syntactic_word(rank, w) + beta) / (counts.syntactic_total(rank) + wb);
      total += weights[idx++];
    }
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericalError("no class has positive probability for word '" +
                         state.corpus().vocabulary.word(w) + "' at token " + std::to_string(pos));
  }
}

void temper(std::vector<double>& weights, double tau) {
  if (tau == 1.0) return;
  if (!(tau >= 0.0)) throw ValidationError("temperature must be >= 0");
  const auto best = std::max_element(weights.begin(), weights.end());
  if (tau == 0.0) {
    const auto at = best - weights.begin();
    std::fill(weights.begin(), weights.end(), 0.0);
    weights[static_cast<std::size_t>(at)] = 1.0;
    return;
  }
  const double log_best = std::log(*best);
  for (auto& v : weights) {
    if (v > 0.0) v = std::exp((std::log(v) - log_best) / tau);
  }
}

std::vector<double> conditional_distribution(const ModelState& state, std::size_t pos, double tau) {
  std::vector<double> weights;
  conditional_weights(state, pos, weights);
  temper(weights, tau);
  double total = 0.0;
  for (const double v : weights) total += v;
  for (auto& v : weights) v /= total;
  return weights;
}

namespace {

std::size_t sample_index(const std::vector<double>& weights, std::mt19937_64& rng) {
  double total = 0.0;
  for (const double v : weights) total += v;
  const double target = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

}  // namespace

void gibbs_sweep(ModelState& state, double tau) {
  std::vector<double> weights;
  const auto& outcomes = state.config().outcomes();
  for (std::size_t i = 0; i < state.token_count(); ++i) {
    state.remove_token(i);
    conditional_weights(state, i, weights);
    temper(weights, tau);
    const Outcome o = outcomes[sample_index(weights, state.rng())];
    state.add_token(i, o.cls, o.topic);
  }
  state.set_completed_sweeps(state.completed_sweeps() + 1);
}

double log_likelihood(const ModelState& state) {
  const auto& config = state.config();
  const auto& counts = state.counts();
  const auto& hyper = state.hyperparameters();
  double ll = 0.0;

  const auto k = static_cast<std::size_t>(config.topics());
  const auto docs = counts.doc_topic_rows();
  for (std::size_t d = 0; d < counts.documents(); ++d) {
    ll += dirichlet_multinomial_log_evidence(docs.subspan(d * k, k), hyper.alpha);
  }
  const std::size_t w = counts.vocabulary();
  if (w > 0) {
    const auto sem = counts.semantic_word_rows();
    for (std::size_t r = 0; r * w < sem.size(); ++r) {
      ll += dirichlet_multinomial_log_evidence(sem.subspan(r * w, w), hyper.beta);
    }
    const auto syn = counts.syntactic_word_rows();
    for (std::size_t r = 0; r * w < syn.size(); ++r) {
      ll += dirichlet_multinomial_log_evidence(syn.subspan(r * w, w), hyper.beta);
    }
  }
  const auto s = static_cast<std::size_t>(config.classes());
  const auto trans = counts.transition_rows();
  for (std::size_t ctx = 0; ctx < counts.contexts(); ++ctx) {
    if (counts.context_total(ctx) == 0) continue;
    ll += dirichlet_multinomial_log_evidence(trans.subspan(ctx * s, s), hyper.gamma);
  }
  return ll;
}

TrainResult train(std::shared_ptr<const Corpus> corpus, const ValidatedConfig& config, const Hyperparameters& hyper,
                  const SamplerOptions& options, const HyperoptHook& hook) {
  ModelState state = init_random(std::move(corpus), config, hyper, options);
  LikelihoodTrace trace = continue_training(state, options, hook);
  return {std::move(state), std::move(trace)};
}

LikelihoodTrace continue_training(ModelState& state, const SamplerOptions& options, const HyperoptHook& hook,
                                  const std::function<void(const ModelState&)>& after_sweep) {
  const int total = state.config().config().iterations;
  if (options.burn_in < 0) throw ValidationError("burn-in must be >= 0");
  if (options.anneal) options.anneal->validate();

  LikelihoodTrace trace;
  if (state.completed_sweeps() == 0) trace.points.emplace_back(0, log_likelihood(state));
  while (state.completed_sweeps() < total) {
    const int t = state.completed_sweeps();
    const double tau = options.anneal ? options.anneal->temperature(t) : 1.0;
    gibbs_sweep(state, tau);
    const int done = t + 1;
    if (hook && options.hyperopt_period > 0 && done > options.burn_in &&
        (done - options.burn_in) % options.hyperopt_period == 0) {
      trace.notes.emplace_back(done, "iteration " + std::to_string(done) + ": " + hook(state));
    }
    const bool record = done == total || (options.trace_every > 0 && done % options.trace_every == 0);
    if (record) trace.points.emplace_back(done, log_likelihood(state));
    if (after_sweep) after_sweep(state);
  }
  return trace;
}

TagSequences class_sequences(const ModelState& state) {
  const Corpus& corpus = state.corpus();
  TagSequences out;
  out.reserve(corpus.documents.size());
  std::size_t i = 0;
  for (const auto& doc : corpus.documents) {
    auto& doc_out = out.emplace_back();
    for (const auto& sentence : doc.sentences) {
      auto& sent_out = doc_out.emplace_back();
      sent_out.reserve(sentence.size());
      for (std::size_t j = 0; j < sentence.size(); ++j) sent_out.push_back(state.class_of(i++));
    }
  }
  return out;
}

DecodeResult map_decode(std::shared_ptr<const Corpus> corpus, const ValidatedConfig& config,
                        const Hyperparameters& hyper, const TagDictionary& dictionary, const AnnealSchedule& anneal,
                        SamplerOptions options, const HyperoptHook& hook) {
  if (dictionary.tag_count() != static_cast<std::size_t>(config.classes())) {
    throw ValidationError("dictionary has " + std::to_string(dictionary.tag_count()) + " tags but S=" +
                          std::to_string(config.classes()));
  }
  anneal.validate();
  options.label_mask = dictionary;
  options.anneal = anneal;
  auto result = train(std::move(corpus), config, hyper, options, hook);
  return {class_sequences(result.state), log_likelihood(result.state), std::move(result.trace)};
}

}  // namespace poslda
