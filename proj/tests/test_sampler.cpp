// Apache License, Version 2.0, refer to LICENSE.txt

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "poslda/error.hpp"
#include "poslda/sampler.hpp"
#include "synthetic.hpp"

using namespace poslda;

namespace {

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ModelState state_of(const oracle::Toy& toy) {
  ModelState s(toy.corpus, validate_config(toy.config), toy.hyper);
  s.assign(toy.classes, toy.topics);
  return s;
}

std::vector<double> library_conditional(ModelState s, std::size_t pos, double tau = 1.0) {
  s.remove_token(pos);
  return conditional_distribution(s, pos, tau);
}

std::shared_ptr<Corpus> words(const std::vector<std::vector<std::vector<WordId>>>& docs, int vocab) {
  auto c = std::make_shared<Corpus>();
  for (int v = 0; v < vocab; ++v) c->vocabulary.add("w" + std::to_string(v));
  for (const auto& d : docs) {
    Document doc;
    doc.sentences = d;
    c->documents.push_back(doc);
  }
  return c;
}

ModelConfig cfg(int k, int s, int sem, int order, int iterations = 10, std::uint64_t seed = 1) {
  ModelConfig c;
  c.topics = k;
  c.classes = s;
  c.semantic_classes = sem;
  c.order = order;
  c.iterations = iterations;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("three-token toy matches brute-force enumeration") {
  auto corpus = words({{{0, 1, 2}}}, 3);
  const auto config = cfg(2, 2, 1, 1);
  const auto hyper = Hyperparameters::symmetric(2, 2, 1.0, 1.0, 1.0);
  // Every joint configuration of the other tokens.
  const std::vector<std::pair<ClassId, TopicId>> choices = {{0, 0}, {0, 1}, {1, kNoTopic}};
  for (const auto& a : choices) {
    for (const auto& b : choices) {
      for (const auto& c : choices) {
        std::vector<ClassId> cls = {a.first, b.first, c.first};
        std::vector<TopicId> top = {a.second, b.second, c.second};
        ModelState s(corpus, validate_config(config), hyper);
        s.assign(cls, top);
        for (std::size_t pos = 0; pos < 3; ++pos) {
          const auto got = library_conditional(s, pos);
          const auto expect = oracle::conditional(*corpus, config, hyper, cls, top, pos);
          CHECK(max_diff(got, expect) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("random toys match the brute-force conditional, with masks and tempering") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto toy = oracle::random_toy(rng);
    const ModelState s = state_of(toy);
    for (std::size_t pos = 0; pos < s.token_count(); ++pos) {
      const auto expect = oracle::conditional(*toy.corpus, toy.config, toy.hyper, toy.classes, toy.topics, pos);
      CHECK(max_diff(library_conditional(s, pos), expect) < 1e-10);
    }
    // Random non-empty masks and a temperature.
    std::vector<std::uint64_t> masks(toy.corpus->vocabulary.size());
    const std::uint64_t full = (1ULL << toy.config.classes) - 1;
    for (auto& m : masks) {
      do m = rng() & full;
      while (m == 0);
    }
    std::vector<ClassId> classes = toy.classes;
    std::vector<TopicId> topics = toy.topics;
    const auto toks = oracle::tokens_of(*toy.corpus);
    for (std::size_t i = 0; i < classes.size(); ++i) {
      const auto m = masks[static_cast<std::size_t>(toks[i].word)];
      if ((m >> classes[i] & 1) == 0) {
        classes[i] = static_cast<ClassId>(std::countr_zero(m));
        topics[i] = s.config().is_semantic(classes[i]) ? 0 : kNoTopic;
      }
    }
    ModelState masked(toy.corpus, validate_config(toy.config), toy.hyper);
    masked.set_class_masks(masks);
    masked.assign(classes, topics);
    const double tau = 0.3 + 0.2 * static_cast<double>(trial % 5);
    for (std::size_t pos = 0; pos < masked.token_count(); ++pos) {
      const auto m = masks[static_cast<std::size_t>(toks[pos].word)];
      const auto expect =
          oracle::conditional(*toy.corpus, toy.config, toy.hyper, classes, topics, pos, m, tau);
      CHECK(max_diff(library_conditional(masked, pos, tau), expect) < 1e-10);
    }
  }
}

TEST_CASE("literal transition mode equals the verbatim window product where contexts differ") {
  std::mt19937_64 rng(77);
  int compared = 0, differed = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto toy = oracle::random_toy(rng, {8, 3, 2, 3, 2, 2});
    toy.hyper.gamma.assign(static_cast<std::size_t>(toy.config.classes), 0.7);
    ModelState exact = state_of(toy);
    ModelState literal = state_of(toy);
    literal.set_transition_mode(TransitionMode::kLiteral);
    const double gsum = 0.7 * toy.config.classes;
    for (std::size_t pos = 0; pos < exact.token_count(); ++pos) {
      ModelState e = exact, l = literal;
      e.remove_token(pos);
      l.remove_token(pos);
      std::vector<double> we, wl;
      conditional_weights(e, pos, we);
      conditional_weights(l, pos, wl);

      bool distinct = true;
      std::set<std::size_t> contexts;
      for (ClassId c = 0; c < toy.config.classes && distinct; ++c) {
        auto cls = toy.classes;
        cls[pos] = c;
        contexts.clear();
        for (std::size_t t = pos; t <= e.last_affected(pos); ++t) {
          // Context of window t under the candidate class.
          std::size_t ctx = e.config().initial_context();
          for (int j = toy.config.order; j >= 1; --j) {
            const auto back = static_cast<std::size_t>(j);
            ctx = e.config().advance(ctx, t >= e.sentence_begin(t) + back ? cls[t - back] : e.config().boundary());
          }
          distinct = distinct && contexts.insert(ctx).second;
        }
      }
      // Verbatim: product over windows of (n + gamma) / (n_ctx + sum gamma).
      std::vector<double> verbatim;
      for (ClassId c = 0; c < toy.config.classes; ++c) {
        auto cls = toy.classes;
        cls[pos] = c;
        double rho = 1.0;
        for (std::size_t t = pos; t <= e.last_affected(pos); ++t) {
          std::size_t ctx = e.config().initial_context();
          for (int j = toy.config.order; j >= 1; --j) {
            const auto back = static_cast<std::size_t>(j);
            ctx = e.config().advance(ctx, t >= e.sentence_begin(t) + back ? cls[t - back] : e.config().boundary());
          }
          rho *= (e.counts().transition(ctx, cls[t]) + 0.7) / (e.counts().context_total(ctx) + gsum);
        }
        verbatim.push_back(rho);
      }
      const auto& n = e.counts();
      const auto& h = toy.hyper;
      const WordId w = e.word(pos);
      const std::size_t d = e.document(pos);
      const double wb = static_cast<double>(e.vocabulary_size()) * h.beta;
      std::size_t idx = 0;
      for (ClassId c = 0; c < toy.config.classes; ++c) {
        const bool sem = e.config().is_semantic(c);
        const int rank = e.config().role_index(c);
        const int width = sem ? toy.config.topics : 1;
        for (int k = 0; k < width; ++k, ++idx) {
          const double emission =
              sem ? (n.doc_topic(d, k) + h.alpha[static_cast<std::size_t>(k)]) / (n.doc_total(d) + h.alpha_sum()) *
                        (n.semantic_word(rank, k, w) + h.beta) / (n.semantic_total(rank, k) + wb)
                  : (n.syntactic_word(rank, w) + h.beta) / (n.syntactic_total(rank) + wb);
          const double lit = verbatim[static_cast<std::size_t>(c)] * emission;
          CHECK(std::abs(wl[idx] - lit) <= 1e-12 * lit);
          if (distinct) {
            CHECK(std::abs(we[idx] - lit) <= 1e-12 * lit);
            ++compared;
          } else if (std::abs(we[idx] - lit) > 1e-12 * lit) {
            ++differed;
          }
        }
      }
    }
  }
  CHECK(compared > 100);
  CHECK(differed > 0);
}

TEST_CASE("LDA reduction matches a minimal collapsed LDA") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto toy = oracle::random_toy(rng, {8, 4, 3, 1, 1, 2});
    toy.config.classes = 1;
    toy.config.semantic_classes = 1;
    toy.config.semantic_class_ids.clear();
    toy.hyper.gamma = {toy.hyper.gamma[0]};
    for (auto& c : toy.classes) c = 0;
    for (auto& z : toy.topics) z = static_cast<TopicId>(rng() % static_cast<unsigned>(toy.config.topics));
    const ModelState s = state_of(toy);
    for (std::size_t pos = 0; pos < s.token_count(); ++pos) {
      const auto expect = oracle::lda_conditional(*toy.corpus, toy.hyper.alpha, toy.hyper.beta, toy.topics, pos);
      CHECK(max_diff(library_conditional(s, pos), expect) < 1e-10);
    }
  }
}

TEST_CASE("Bayesian HMM reduction matches a minimal collapsed BHMM") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 80; ++trial) {
    auto toy = oracle::random_toy(rng, {8, 4, 1, 3, 3, 3});
    toy.config.topics = 1;
    toy.hyper.alpha = {toy.hyper.alpha[0]};
    for (std::size_t i = 0; i < toy.topics.size(); ++i) {
      if (toy.topics[i] != kNoTopic) toy.topics[i] = 0;
    }
    const ModelState s = state_of(toy);
    for (std::size_t pos = 0; pos < s.token_count(); ++pos) {
      const auto expect =
          oracle::bhmm_conditional(*toy.corpus, toy.config.order, toy.hyper.gamma, toy.hyper.beta, toy.classes, pos);
      CHECK(max_diff(library_conditional(s, pos), expect) < 1e-10);
    }
  }
}

TEST_CASE("degenerate model and single-class masks") {
  auto corpus = words({{{0, 1}}}, 2);
  ModelState s(corpus, validate_config(cfg(1, 1, 1, 2)), Hyperparameters::symmetric(1, 1, 1, 1, 1));
  s.assign({0, 0}, {0, 0});
  const auto p = library_conditional(s, 1);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == 1.0);

  ModelState m(corpus, validate_config(cfg(3, 3, 1, 2)), Hyperparameters::symmetric(3, 3, 1, 1, 1));
  m.set_class_masks({0b100, 0b100});
  m.assign({2, 2}, {kNoTopic, kNoTopic});
  const auto q = library_conditional(m, 0);
  // Outcomes: (0,z0) (0,z1) (0,z2) (1) (2)
  CHECK(q[4] == 1.0);
}

TEST_CASE("a mask excluding every class is rejected") {
  auto corpus = words({{{0}}}, 1);
  ModelState s(corpus, validate_config(cfg(1, 2, 0, 1)), Hyperparameters::symmetric(1, 2, 1, 1, 1));
  CHECK_THROWS_AS(s.set_class_masks({0}), ValidationError);
}

TEST_CASE("tempering keeps the argmax and tau zero selects it") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto toy = oracle::random_toy(rng);
    const ModelState s = state_of(toy);
    for (std::size_t pos = 0; pos < s.token_count(); ++pos) {
      const auto base = library_conditional(s, pos);
      const auto best = std::max_element(base.begin(), base.end()) - base.begin();
      for (const double tau : {0.05, 0.5, 2.0, 10.0}) {
        const auto t = library_conditional(s, pos, tau);
        CHECK(std::max_element(t.begin(), t.end()) - t.begin() == best);
      }
      const auto zero = library_conditional(s, pos, 0.0);
      CHECK(zero[static_cast<std::size_t>(best)] == 1.0);
    }
  }
}

TEST_CASE("zero-temperature sweep picks the argmax") {
  auto corpus = words({{{0, 0, 0, 0, 1, 0}}}, 2);
  const auto config = validate_config(cfg(1, 2, 0, 1));
  ModelState s(corpus, config, Hyperparameters::symmetric(1, 2, 1, 0.01, 1));
  s.assign({0, 0, 0, 1, 1, 0}, std::vector<TopicId>(6, kNoTopic));
  // Token by token, replace each class with the first mode of its conditional.
  ModelState expected = s;
  for (std::size_t i = 0; i < expected.token_count(); ++i) {
    expected.remove_token(i);
    const auto p = conditional_distribution(expected, i);
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    expected.add_token(i, static_cast<ClassId>(best), kNoTopic);
  }
  gibbs_sweep(s, 0.0);
  CHECK(s.class_assignments() == expected.class_assignments());
}

TEST_CASE("init_random") {
  auto empty = words({}, 0);
  const auto st = init_random(empty, validate_config(cfg(2, 2, 1, 2)), Hyperparameters::symmetric(2, 2, 1, 1, 1), {});
  CHECK(st.token_count() == 0);
  CHECK(st.counts().emitted_tokens() == 0);
  ModelState copy = st;
  gibbs_sweep(copy);
  CHECK(copy.counts() == st.counts());

  auto corpus = words({{{0, 1, 2}, {1}}}, 3);
  SamplerOptions opts;
  TagDictionary dict({"A", "B", "C"}, 3, 1);
  dict.constrain(0, 0b010);
  dict.constrain(1, 0b100);
  dict.constrain(2, 0b001);
  opts.label_mask = dict;
  const auto forced = init_random(corpus, validate_config(cfg(2, 3, 1, 2)), Hyperparameters::symmetric(2, 3, 1, 1, 1), opts);
  CHECK(forced.class_assignments() == std::vector<ClassId>{1, 2, 0, 2});

  const auto config = validate_config(cfg(3, 4, 2, 2, 10, 99));
  const auto hyper = Hyperparameters::symmetric(3, 4, 0.5, 0.1, 0.5);
  const auto a = init_random(corpus, config, hyper, {});
  const auto b = init_random(corpus, config, hyper, {});
  CHECK(a == b);
  for (std::size_t i = 0; i < a.token_count(); ++i) {
    CHECK((a.topic_of(i) == kNoTopic) == !a.config().is_semantic(a.class_of(i)));
  }
}

TEST_CASE("mask soundness during sampling") {
  std::mt19937_64 rng(12);
  const auto m = synth::separated_bhmm(4, 5, 0.05, 0.7);
  auto data = synth::generate(m, 5, 4, 3, 8, rng);
  const auto dict = build_tag_dictionary(*data.corpus, 2);
  SamplerOptions opts;
  opts.label_mask = dict;
  auto result = train(data.corpus, validate_config(cfg(1, 4, 0, 2, 30)), Hyperparameters::symmetric(1, 4, 1, 0.1, 1),
                      opts);
  for (std::size_t i = 0; i < result.state.token_count(); ++i) {
    CHECK((dict.allowed(result.state.word(i)) >> result.state.class_of(i) & 1) == 1);
  }
}

TEST_CASE("counts stay consistent over sweeps") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const auto toy = oracle::random_toy(rng, {40, 6, 3, 4, 2, 3});
    auto config = toy.config;
    config.iterations = 100;
    config.seed = static_cast<std::uint64_t>(trial);
    SamplerOptions opts;
    opts.transition_mode = trial % 2 == 0 ? TransitionMode::kExact : TransitionMode::kLiteral;
    auto result = train(toy.corpus, validate_config(config), toy.hyper, opts);
    CHECK(result.state.counts() == result.state.recount());
    CHECK(result.state.completed_sweeps() == 100);
  }
}

TEST_CASE("training determinism, zero iterations and trace layout") {
  std::mt19937_64 rng(1);
  const auto m = synth::separated_poslda(2, 3, 1, 4, 3, 0.8, 0.5);
  auto data = synth::generate(m, 6, 3, 4, 8, rng);
  const auto config = validate_config(cfg(2, 3, 1, 2, 25, 5));
  const auto hyper = Hyperparameters::symmetric(2, 3, 0.5, 0.1, 0.5);
  SamplerOptions opts;
  opts.trace_every = 10;
  const auto a = train(data.corpus, config, hyper, opts);
  const auto b = train(data.corpus, config, hyper, opts);
  CHECK(a.state == b.state);
  CHECK(a.trace == b.trace);
  std::vector<int> its;
  for (const auto& [it, ll] : a.trace.points) its.push_back(it);
  CHECK(its == std::vector<int>{0, 10, 20, 25});

  auto zero_cfg = config.config();
  zero_cfg.iterations = 0;
  const auto z = train(data.corpus, validate_config(zero_cfg), hyper, opts);
  CHECK(z.state == init_random(data.corpus, validate_config(zero_cfg), hyper, opts));

  std::ostringstream csv;
  a.trace.write_csv(csv);
  CHECK(csv.str().rfind("iteration,loglik\n0,", 0) == 0);
}

TEST_CASE("hyperopt hook cadence") {
  auto corpus = words({{{0, 1, 0, 1}}}, 2);
  const auto config = validate_config(cfg(1, 2, 0, 1, 20));
  SamplerOptions opts;
  opts.burn_in = 5;
  opts.hyperopt_period = 4;
  std::vector<int> calls;
  const auto result = train(corpus, config, Hyperparameters::symmetric(1, 2, 1, 1, 1), opts, [&](ModelState& s) {
    calls.push_back(s.completed_sweeps());
    return std::string("note");
  });
  CHECK(calls == std::vector<int>{9, 13, 17});
  CHECK(result.trace.notes.size() == 3);
  std::ostringstream csv;
  result.trace.write_csv(csv);
  CHECK(csv.str().find("# iteration 9: note\n") != std::string::npos);
}

TEST_CASE("resuming training continues the same trajectory") {
  std::mt19937_64 rng(2);
  const auto m = synth::separated_poslda(2, 3, 1, 4, 3, 0.8, 0.5);
  auto data = synth::generate(m, 5, 3, 4, 8, rng);
  auto c = cfg(2, 3, 1, 2, 30, 8);
  const auto hyper = Hyperparameters::symmetric(2, 3, 0.5, 0.1, 0.5);
  const auto full = train(data.corpus, validate_config(c), hyper, {});
  c.iterations = 12;
  auto part = train(data.corpus, validate_config(c), hyper, {});
  c.iterations = 30;
  ModelState resumed(part.state.shared_corpus(), validate_config(c), part.state.hyperparameters());
  resumed.set_class_masks(part.state.class_masks());
  resumed.assign(part.state.class_assignments(), part.state.topic_assignments());
  resumed.set_completed_sweeps(part.state.completed_sweeps());
  resumed.rng() = part.state.rng();
  continue_training(resumed, {});
  CHECK(resumed.class_assignments() == full.state.class_assignments());
  CHECK(resumed.topic_assignments() == full.state.topic_assignments());
}

TEST_CASE("anneal schedule") {
  const auto s = AnnealSchedule::spanning(1000, 1.0, 0.05);
  CHECK_NOTHROW(s.validate());
  CHECK(s.temperature(0) == 1.0);
  CHECK(s.temperature(499) == 1.0);
  CHECK(s.temperature(900) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(s.temperature(999) == 0.05);
  double prev = s.temperature(0);
  for (int t = 1; t < 1000; ++t) {
    const double now = s.temperature(t);
    CHECK(now <= prev);
    CHECK(now >= 0.05);
    prev = now;
  }
  AnnealSchedule bad;
  bad.decay = 1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = {};
  bad.tau_min = 2.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("map_decode with a fully constraining dictionary returns the dictionary") {
  auto corpus = words({{{0, 1, 2, 1}, {2, 0}}}, 3);
  TagDictionary dict({"A", "B", "C"}, 3, 1);
  dict.constrain(0, 0b100);
  dict.constrain(1, 0b001);
  dict.constrain(2, 0b010);
  const auto r = map_decode(corpus, validate_config(cfg(1, 3, 0, 2, 20)), Hyperparameters::symmetric(1, 3, 1, 0.1, 1),
                            dict, AnnealSchedule::spanning(20));
  const TagSequences expect = {{{2, 0, 1, 0}, {1, 2}}};
  CHECK(r.tags == expect);

  TagDictionary wrong({"A", "B"}, 3, 1);
  CHECK_THROWS_AS(map_decode(corpus, validate_config(cfg(1, 3, 0, 2, 20)),
                             Hyperparameters::symmetric(1, 3, 1, 0.1, 1), wrong, AnnealSchedule::spanning(20)),
                  ValidationError);
}
