// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "poslda/corpus.hpp"
#include "poslda/error.hpp"
#include "poslda/eval.hpp"
#include "poslda/hyperopt.hpp"
#include "poslda/model.hpp"
#include "poslda/sampler.hpp"
#include "poslda/snapshot.hpp"

namespace poslda::cli {

namespace {

struct ModelFlags {
  int topics = 1;
  int classes = 1;
  int semantic = 0;
  std::vector<int> semantic_ids;
  int order = 2;
  int iterations = 1000;
  std::uint64_t seed = 1;
  double alpha = 0.1;
  double beta = 0.01;
  double gamma = 0.1;
  int burn_in = 100;
  int hyperopt_period = 50;
  int trace_every = 10;
  std::string transitions = "exact";
};

struct FoldFlags {
  int sweeps = 200;
  int samples = 10;
  int burn_in = 100;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct Flags {
  ModelFlags model;
  FoldFlags fold;
  std::string corpus;
  std::string format = "plain";
  bool lowercase = true;
  std::string model_path;
  std::string test;
  std::string out;
  std::string trace;
  std::string report;
  std::string dict_threshold = "1";
  std::string dict_out;
  std::vector<std::string> semantic_tags;
  double anneal_start = 1.0;
  double anneal_min = 0.05;
  int restarts = 5;
  int jobs = 1;
  int folds = 10;
  int top = 10;
};

void add_model_flags(CLI::App* app, ModelFlags& m, bool with_classes) {
  app->add_option("--topics,-K", m.topics, "number of topics K")->capture_default_str();
  if (with_classes) app->add_option("--classes,-S", m.classes, "number of classes S")->capture_default_str();
  app->add_option("--sem-classes", m.semantic, "number of semantic classes S_sem")->capture_default_str();
  app->add_option("--sem-class-ids", m.semantic_ids, "ids of the semantic classes (default: the first S_sem)");
  app->add_option("--order", m.order, "transition context length n")->capture_default_str();
  app->add_option("--iterations", m.iterations, "Gibbs sweeps")->capture_default_str();
  app->add_option("--seed", m.seed, "random seed")->capture_default_str();
  app->add_option("--alpha", m.alpha, "initial symmetric document-topic prior")->capture_default_str();
  app->add_option("--beta", m.beta, "initial symmetric word prior")->capture_default_str();
  app->add_option("--gamma", m.gamma, "initial symmetric transition prior")->capture_default_str();
  app->add_option("--burn-in", m.burn_in, "sweeps before the first hyperparameter update")->capture_default_str();
  app->add_option("--hyperopt-period", m.hyperopt_period, "sweeps between hyperparameter updates (0: off)")
      ->capture_default_str();
  app->add_option("--trace-every", m.trace_every, "log-likelihood trace interval")->capture_default_str();
  app->add_option("--transitions", m.transitions, "transition conditional: exact or literal")
      ->check(CLI::IsMember({"exact", "literal"}))
      ->capture_default_str();
}

void add_fold_flags(CLI::App* app, FoldFlags& f) {
  app->add_option("--fold-sweeps", f.sweeps, "fold-in Gibbs sweeps per test document")->capture_default_str();
  app->add_option("--fold-samples", f.samples, "fold-in samples averaged")->capture_default_str();
  app->add_option("--fold-burn-in", f.burn_in, "fold-in burn-in sweeps")->capture_default_str();
  app->add_option("--fold-seed", f.seed, "fold-in random seed")->capture_default_str();
  app->add_option("--threads", f.threads, "threads for scoring test documents")->capture_default_str();
}

void add_format(CLI::App* app, Flags& f) {
  app->add_option("--format", f.format, "corpus format: plain or tagged")
      ->check(CLI::IsMember({"plain", "tagged"}))
      ->capture_default_str();
}

void add_lowercase(CLI::App* app, bool& value) {
  app->add_flag("--lowercase,!--no-lowercase", value, "lowercase tokens")->default_str(value ? "true" : "false");
}

LoadOptions load_options(const Flags& f, bool reserve_unknown) {
  LoadOptions o;
  o.format = f.format == "tagged" ? CorpusFormat::kTagged : CorpusFormat::kPlain;
  o.lowercase = f.lowercase;
  o.reserve_unknown = reserve_unknown;
  return o;
}

ModelConfig model_config(const ModelFlags& m) {
  ModelConfig c;
  c.topics = m.topics;
  c.classes = m.classes;
  c.semantic_classes = m.semantic;
  c.semantic_class_ids.assign(m.semantic_ids.begin(), m.semantic_ids.end());
  c.order = m.order;
  c.seed = m.seed;
  c.iterations = m.iterations;
  return c;
}

SamplerOptions sampler_options(const ModelFlags& m) {
  if (m.burn_in < 0 || m.hyperopt_period < 0 || m.trace_every < 0) {
    throw ValidationError("burn-in, hyperopt period and trace interval must be >= 0");
  }
  SamplerOptions o;
  o.burn_in = m.burn_in;
  o.hyperopt_period = m.hyperopt_period;
  o.trace_every = m.trace_every;
  o.transition_mode = m.transitions == "literal" ? TransitionMode::kLiteral : TransitionMode::kExact;
  return o;
}

HyperoptHook hook_for(const ModelFlags& m) { return m.hyperopt_period > 0 ? make_hyperopt_hook() : HyperoptHook{}; }

FoldInSettings fold_settings(const FoldFlags& f) {
  FoldInSettings s;
  s.sweeps = f.sweeps;
  s.samples = f.samples;
  s.burn_in = f.burn_in;
  s.seed = f.seed;
  s.threads = f.threads;
  s.validate();
  return s;
}

std::optional<int> parse_threshold(const std::string& text) {
  if (text == "inf" || text == "infinity" || text == "Inf") return std::nullopt;
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || value < 1) {
    throw ValidationError("dictionary threshold must be a positive integer or 'inf', got '" + text + "'");
  }
  return value;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string full(double v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

// The resolved configuration of the running command, one "key = value" line
// per option, in the layout a configuration file accepts.
void echo_config(std::ostream& out, const CLI::App& sub) {
  out << "# resolved configuration [" << sub.get_name() << "]\n";
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    std::string value;
    if (opt->count() > 0) {
      value = opt->get_expected_max() == 0 ? opt->as<std::string>() : CLI::detail::join(opt->results(), " ");
    } else {
      value = opt->get_default_str();
    }
    out << "#   " << name << " = " << (value.empty() ? "\"\"" : value) << '\n';
  }
}

class CsvReport {
 public:
  void add(const std::string& metric, const std::string& name, const std::string& value) {
    text_ << metric << ',' << name << ',' << value << '\n';
  }
  void write(const std::string& path) const {
    if (!path.empty()) write_file_atomically(path, "metric,name,value\n" + text_.str());
  }

 private:
  std::ostringstream text_;
};

// ---- train -----------------------------------------------------------------

void cmd_train(const Flags& f, const CLI::App& sub, std::ostream& out) {
  auto corpus = std::make_shared<const Corpus>(load_corpus(f.corpus, load_options(f, true)));
  const auto config = validate_config(model_config(f.model));
  const auto hyper = Hyperparameters::symmetric(config.topics(), config.classes(), f.model.alpha, f.model.beta,
                                                f.model.gamma);
  const auto options = sampler_options(f.model);
  echo_config(out, sub);
  out << "corpus: " << corpus->documents.size() << " documents, " << corpus->token_count() << " tokens, "
      << corpus->vocabulary.size() << " word types\n";
  out << "reduction: " << reduction_name(config.reduction()) << '\n';

  auto result = train(corpus, config, hyper, options, hook_for(f.model));
  save_snapshot_file(result.state, f.out);
  std::ostringstream trace;
  result.trace.write_csv(trace);
  write_file_atomically(f.trace.empty() ? f.out + ".trace.csv" : f.trace, trace.str());
  const double final_ll = result.trace.points.empty() ? log_likelihood(result.state) : result.trace.points.back().second;
  out << "final log-likelihood: " << full(final_ll) << '\n';
  out << "snapshot: " << f.out << '\n';
}

// ---- perplexity / cv ---------------------------------------------------------

void cmd_perplexity(const Flags& f, const CLI::App& sub, std::ostream& out) {
  const ModelState state = load_snapshot_file(f.model_path);
  const Corpus raw = load_corpus(f.test, load_options(f, false));
  const Corpus test = remap_corpus(raw, state.corpus().vocabulary);
  const auto settings = fold_settings(f.fold);
  const double p = perplexity(freeze(state), test, settings);
  echo_config(out, sub);
  out << "metric      name  value\n";
  out << "perplexity  test  " << fixed(p, 2) << '\n';
  out << "tokens      test  " << test.token_count() << '\n';
  CsvReport csv;
  csv.add("perplexity", "test", full(p));
  csv.add("tokens", "test", std::to_string(test.token_count()));
  csv.write(f.report);
}

void cmd_cv(const Flags& f, const CLI::App& sub, std::ostream& out) {
  const Corpus corpus = load_corpus(f.corpus, load_options(f, true));
  const auto config = validate_config(model_config(f.model));
  const auto hyper = Hyperparameters::symmetric(config.topics(), config.classes(), f.model.alpha, f.model.beta,
                                                f.model.gamma);
  const auto result =
      cross_validate(corpus, config, hyper, f.folds, sampler_options(f.model), fold_settings(f.fold), hook_for(f.model));
  echo_config(out, sub);
  out << "reduction: " << reduction_name(config.reduction()) << '\n';
  out << "fold  documents  perplexity\n";
  CsvReport csv;
  for (std::size_t i = 0; i < result.fold_perplexity.size(); ++i) {
    out << std::setw(4) << i + 1 << "  " << std::setw(9) << result.folds[i].size() << "  "
        << fixed(result.fold_perplexity[i], 2) << '\n';
    csv.add("perplexity", "fold" + std::to_string(i + 1), full(result.fold_perplexity[i]));
  }
  out << "mean  " << std::setw(9) << corpus.documents.size() << "  " << fixed(result.mean_perplexity, 2) << '\n';
  csv.add("perplexity", "mean", full(result.mean_perplexity));
  csv.write(f.report);
}

// ---- tag ---------------------------------------------------------------------

struct Restart {
  DecodeResult decode;
  std::optional<double> accuracy;
  double vi = 0.0;
};

void cmd_tag(const Flags& f, const CLI::App& sub, std::ostream& out) {
  Flags local = f;
  local.format = "tagged";
  auto corpus = std::make_shared<const Corpus>(load_corpus(f.corpus, load_options(local, false)));
  if (!corpus->has_gold_tags() || corpus->tags.empty()) throw ValidationError("tagging needs a tagged corpus");
  const int tag_count = static_cast<int>(corpus->tags.size());

  ModelConfig mc = model_config(f.model);
  if (sub.count("--classes") > 0 && f.model.classes != tag_count) {
    throw ValidationError("--classes " + std::to_string(f.model.classes) + " differs from the tag set size " +
                          std::to_string(tag_count) + "; S must equal the number of tags");
  }
  mc.classes = tag_count;
  if (!f.semantic_tags.empty()) {
    mc.semantic_class_ids.clear();
    for (const auto& name : f.semantic_tags) {
      const auto id = corpus->tags.lookup(name);
      if (!id) throw ValidationError("semantic tag '" + name + "' is not in the tag set");
      mc.semantic_class_ids.push_back(*id);
    }
    std::sort(mc.semantic_class_ids.begin(), mc.semantic_class_ids.end());
    if (sub.count("--sem-classes") == 0) mc.semantic_classes = static_cast<int>(mc.semantic_class_ids.size());
  }
  const auto config = validate_config(mc);
  const auto hyper = Hyperparameters::symmetric(config.topics(), config.classes(), f.model.alpha, f.model.beta,
                                                f.model.gamma);
  const auto threshold = parse_threshold(f.dict_threshold);
  const auto dict = build_tag_dictionary(*corpus, threshold);
  const auto anneal = AnnealSchedule::spanning(config.config().iterations, f.anneal_start, f.anneal_min);
  anneal.validate();
  if (f.restarts < 1) throw ValidationError("--restarts must be >= 1");
  if (f.jobs < 1) throw ValidationError("--jobs must be >= 1");
  const auto options = sampler_options(f.model);
  const auto gold = flatten(gold_tag_sequences(*corpus));

  std::vector<Restart> runs(static_cast<std::size_t>(f.restarts));
  std::vector<std::exception_ptr> errors(runs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r = next++; r < runs.size(); r = next++) {
      try {
        auto rc = mc;
        rc.seed = mc.seed + r;
        runs[r].decode = map_decode(corpus, validate_config(rc), hyper, dict, anneal, options, hook_for(f.model));
        const auto predicted = flatten(runs[r].decode.tags);
        if (threshold) runs[r].accuracy = tagging_accuracy(predicted, gold);
        runs[r].vi = variation_of_information(predicted, gold);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const auto jobs = std::min<std::size_t>(static_cast<std::size_t>(f.jobs), runs.size());
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Tags come from the restart with the highest final joint likelihood;
  // ties go to the earliest restart.
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].decode.log_likelihood > runs[best].decode.log_likelihood) best = r;
  }

  std::ostringstream tags;
  std::size_t doc_index = 0;
  for (const auto& doc : corpus->documents) {
    const auto& predicted = runs[best].decode.tags[doc_index++];
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      for (std::size_t i = 0; i < doc.sentences[s].size(); ++i) {
        const TagId t = predicted[s][i];
        tags << corpus->vocabulary.word(doc.sentences[s][i]) << '\t'
             << (threshold ? corpus->tags.word(t) : "C" + std::to_string(t)) << '\n';
      }
      tags << '\n';
    }
  }
  if (!f.out.empty()) write_file_atomically(f.out, tags.str());
  if (!f.dict_out.empty()) {
    std::ostringstream d;
    dict.write(d, corpus->vocabulary);
    write_file_atomically(f.dict_out, d.str());
  }

  const auto stats = ambiguity_stats(*corpus, dict);
  echo_config(out, sub);
  out << "reduction: " << reduction_name(config.reduction()) << '\n';
  out << "tags: " << tag_count << ", dictionary threshold: " << (threshold ? std::to_string(*threshold) : "inf")
      << ", ambiguous tokens: " << fixed(stats.percent_ambiguous, 1)
      << "%, tags/token: " << fixed(stats.mean_tags_per_token, 2) << '\n';
  out << (threshold ? "restart  seed  accuracy  VI    loglik\n" : "restart  seed  VI    loglik\n");
  CsvReport csv;
  double acc_sum = 0.0, vi_sum = 0.0;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    const std::string name = "restart" + std::to_string(r + 1);
    out << std::setw(7) << r + 1 << "  " << std::setw(4) << mc.seed + r << "  ";
    if (run.accuracy) {
      out << std::setw(8) << fixed(*run.accuracy, 1) << "  ";
      csv.add("accuracy", name, full(*run.accuracy));
      acc_sum += *run.accuracy;
    }
    out << fixed(run.vi, 2) << "  " << fixed(run.decode.log_likelihood, 1) << (r == best ? "  *" : "") << '\n';
    csv.add("vi", name, full(run.vi));
    csv.add("loglik", name, full(run.decode.log_likelihood));
    vi_sum += run.vi;
  }
  const double n = static_cast<double>(runs.size());
  out << "mean           ";
  if (threshold) {
    out << std::setw(8) << fixed(acc_sum / n, 1) << "  ";
    csv.add("accuracy", "mean", full(acc_sum / n));
  }
  out << fixed(vi_sum / n, 2) << '\n';
  csv.add("vi", "mean", full(vi_sum / n));
  out << "tags written from restart " << best + 1 << " (highest final log-likelihood)\n";
  csv.write(f.report);
}

// ---- topics ------------------------------------------------------------------

void cmd_topics(const Flags& f, std::ostream& out) {
  if (f.top < 1) throw ValidationError("--top must be >= 1");
  const ModelState state = load_snapshot_file(f.model_path);
  const FrozenModel m = freeze(state);
  const auto& cfg = m.config;
  const auto& vocab = state.corpus().vocabulary;
  const std::size_t rows = std::min<std::size_t>(static_cast<std::size_t>(f.top), m.vocabulary());

  std::vector<std::string> headers;
  std::vector<std::vector<WordId>> columns;
  for (ClassId c = 0; c < cfg.classes(); ++c) {
    const int width = cfg.is_semantic(c) ? cfg.topics() : 1;
    for (int z = 0; z < width; ++z) {
      const TopicId topic = cfg.is_semantic(c) ? z : kNoTopic;
      headers.push_back("c" + std::to_string(c) +
                        (cfg.is_semantic(c) ? "/z" + std::to_string(z) : std::string("(syn)")));
      std::vector<WordId> order(m.vocabulary());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](WordId a, WordId b) {
        return m.emission(c, topic, a) > m.emission(c, topic, b);
      });
      order.resize(rows);
      columns.push_back(std::move(order));
    }
  }
  std::ostringstream table;
  for (std::size_t j = 0; j < headers.size(); ++j) table << (j ? "\t" : "") << headers[j];
  table << '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) table << (j ? "\t" : "") << vocab.word(columns[j][i]);
    table << '\n';
  }
  if (f.out.empty()) {
    out << table.str();
  } else {
    write_file_atomically(f.out, table.str());
  }
}

// ---- stats -------------------------------------------------------------------

void cmd_stats(const Flags& f, const CLI::App& sub, std::ostream& out) {
  const Corpus corpus = load_corpus(f.corpus, load_options(f, false));
  out << "documents  " << corpus.documents.size() << '\n';
  out << "sentences  " << corpus.sentence_count() << '\n';
  out << "tokens     " << corpus.token_count() << '\n';
  out << "types      " << corpus.vocabulary.size() << '\n';
  if (f.format == "tagged") {
    out << "tags       " << corpus.tags.size() << '\n';
    if (sub.count("--dict-threshold") > 0) {
      const auto stats = ambiguity_stats(corpus, build_tag_dictionary(corpus, parse_threshold(f.dict_threshold)));
      out << "ambiguous  " << fixed(stats.percent_ambiguous, 1) << "%\n";
      out << "tags/token " << fixed(stats.mean_tags_per_token, 2) << '\n';
    }
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Flags f;
  CLI::App app{"Joint topic and syntax models: training, held-out evaluation and POS tagging", "poslda"};
  app.set_config("--config", "", "configuration file (key = value, [command] sections); flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "train a model and write a snapshot");
  train_cmd->add_option("--corpus", f.corpus, "corpus file or directory")->required()->check(CLI::ExistingPath);
  add_format(train_cmd, f);
  add_lowercase(train_cmd, f.lowercase);
  add_model_flags(train_cmd, f.model, true);
  train_cmd->add_option("--out", f.out, "snapshot path")->required();
  train_cmd->add_option("--trace", f.trace, "likelihood trace CSV (default: <out>.trace.csv)");

  auto* perp_cmd = app.add_subcommand("perplexity", "held-out perplexity of a snapshot");
  perp_cmd->add_option("--model", f.model_path, "snapshot")->required()->check(CLI::ExistingFile);
  perp_cmd->add_option("--test", f.test, "test corpus file or directory")->required()->check(CLI::ExistingPath);
  add_format(perp_cmd, f);
  add_lowercase(perp_cmd, f.lowercase);
  add_fold_flags(perp_cmd, f.fold);
  perp_cmd->add_option("--report", f.report, "CSV report path");

  auto* cv_cmd = app.add_subcommand("cv", "cross-validated perplexity");
  cv_cmd->add_option("--corpus", f.corpus, "corpus file or directory")->required()->check(CLI::ExistingPath);
  add_format(cv_cmd, f);
  add_lowercase(cv_cmd, f.lowercase);
  cv_cmd->add_option("--folds", f.folds, "number of folds")->capture_default_str();
  add_model_flags(cv_cmd, f.model, true);
  add_fold_flags(cv_cmd, f.fold);
  cv_cmd->add_option("--report", f.report, "CSV report path");

  auto* tag_cmd = app.add_subcommand("tag", "dictionary-constrained MAP tagging of a tagged corpus");
  tag_cmd->add_option("--corpus", f.corpus, "tagged corpus file or directory")->required()->check(CLI::ExistingPath);
  add_model_flags(tag_cmd, f.model, true);
  tag_cmd->add_option("--sem-tags", f.semantic_tags, "tags to treat as semantic classes");
  tag_cmd->add_option("--dict-threshold", f.dict_threshold, "dictionary threshold d (integer or inf)")
      ->capture_default_str();
  tag_cmd->add_option("--anneal-start", f.anneal_start, "initial temperature")->capture_default_str();
  tag_cmd->add_option("--anneal-min", f.anneal_min, "final temperature")->capture_default_str();
  tag_cmd->add_option("--restarts", f.restarts, "random restarts")->capture_default_str();
  tag_cmd->add_option("--jobs", f.jobs, "restarts run concurrently")->capture_default_str();
  tag_cmd->add_option("--out", f.out, "predicted tags (token TAB tag)");
  tag_cmd->add_option("--dict-out", f.dict_out, "write the tag dictionary here");
  tag_cmd->add_option("--report", f.report, "CSV report path");

  auto* topics_cmd = app.add_subcommand("topics", "top words of every class and topic");
  topics_cmd->add_option("--model", f.model_path, "snapshot")->required()->check(CLI::ExistingFile);
  topics_cmd->add_option("--top", f.top, "words per column")->capture_default_str();
  topics_cmd->add_option("--out", f.out, "write the table here instead of stdout");

  auto* stats_cmd = app.add_subcommand("stats", "corpus statistics");
  stats_cmd->add_option("--corpus", f.corpus, "corpus file or directory")->required()->check(CLI::ExistingPath);
  add_format(stats_cmd, f);
  add_lowercase(stats_cmd, f.lowercase);
  stats_cmd->add_option("--dict-threshold", f.dict_threshold, "report dictionary ambiguity at this threshold");

  for (auto* sub : app.get_subcommands({})) sub->allow_config_extras(CLI::config_extras_mode::error);

  // Tagging keeps treebank case unless asked otherwise.
  bool tag_lowercase = false;
  add_lowercase(tag_cmd, tag_lowercase);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train_cmd->parsed()) {
      cmd_train(f, *train_cmd, out);
    } else if (perp_cmd->parsed()) {
      cmd_perplexity(f, *perp_cmd, out);
    } else if (cv_cmd->parsed()) {
      cmd_cv(f, *cv_cmd, out);
    } else if (tag_cmd->parsed()) {
      f.lowercase = tag_lowercase;
      cmd_tag(f, *tag_cmd, out);
    } else if (topics_cmd->parsed()) {
      cmd_topics(f, out);
    } else if (stats_cmd->parsed()) {
      cmd_stats(f, *stats_cmd, out);
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kOk;
}

}  // namespace poslda::cli
