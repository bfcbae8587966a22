// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/hyperopt.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "poslda/error.hpp"
#include "poslda/math.hpp"

namespace poslda {

void HyperoptSettings::validate() const {
  if (max_iterations < 1) throw ValidationError("hyperopt max_iterations must be >= 1");
  if (!(tolerance > 0.0)) throw ValidationError("hyperopt tolerance must be > 0");
  if (!(floor > 0.0)) throw ValidationError("hyperopt floor must be > 0");
}

namespace {

using boost::math::digamma;

// (count, multiplicity) pairs; only positive counts.
using Histogram = std::vector<std::pair<std::int64_t, std::int64_t>>;

Histogram to_histogram(const std::map<std::int64_t, std::int64_t>& m) { return {m.begin(), m.end()}; }

// Sufficient statistics of a set of count rows for the fixed-point updates:
// per-component histograms of the counts and a histogram of row totals.
struct RowStats {
  std::size_t dim = 0;
  std::vector<Histogram> component;
  Histogram pooled;
  Histogram totals;
  bool empty() const { return totals.empty(); }
};

RowStats collect(std::span<const CountRows> rows) {
  RowStats stats;
  for (const auto& block : rows) {
    if (block.dim == 0) continue;
    if (stats.dim == 0) stats.dim = block.dim;
    if (block.dim != stats.dim) throw ValidationError("count rows of different lengths");
    if (block.counts.size() % block.dim != 0) throw ValidationError("count block is not a whole number of rows");
  }
  std::vector<std::map<std::int64_t, std::int64_t>> component(stats.dim);
  std::map<std::int64_t, std::int64_t> pooled;
  std::map<std::int64_t, std::int64_t> totals;
  for (const auto& block : rows) {
    for (std::size_t start = 0; start + stats.dim <= block.counts.size(); start += stats.dim) {
      std::int64_t total = 0;
      for (std::size_t k = 0; k < stats.dim; ++k) {
        const std::int64_t n = block.counts[start + k];
        if (n < 0) throw ValidationError("negative count in hyperparameter rows");
        if (n == 0) continue;
        total += n;
        ++component[k][n];
        ++pooled[n];
      }
      if (total > 0) ++totals[total];
    }
  }
  stats.component.reserve(stats.dim);
  for (const auto& m : component) stats.component.push_back(to_histogram(m));
  stats.pooled = to_histogram(pooled);
  stats.totals = to_histogram(totals);
  return stats;
}

double digamma_gain(const Histogram& h, double a) {
  const double base = digamma(a);
  double s = 0.0;
  for (const auto& [n, m] : h) s += static_cast<double>(m) * (digamma(static_cast<double>(n) + a) - base);
  return s;
}

double log_gamma_gain(const Histogram& h, double a) {
  const double base = log_gamma(a);
  double s = 0.0;
  for (const auto& [n, m] : h) s += static_cast<double>(m) * (log_gamma(static_cast<double>(n) + a) - base);
  return s;
}

double asymmetric_evidence(const RowStats& stats, std::span<const double> alpha) {
  const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
  double ev = -log_gamma_gain(stats.totals, sum);
  for (std::size_t k = 0; k < stats.dim; ++k) ev += log_gamma_gain(stats.component[k], alpha[k]);
  return ev;
}

double symmetric_evidence(const RowStats& stats, double concentration) {
  return log_gamma_gain(stats.pooled, concentration) -
         log_gamma_gain(stats.totals, concentration * static_cast<double>(stats.dim));
}

bool decreased(double before, double after) { return after < before - 1e-12 * std::max(1.0, std::abs(before)); }

}  // namespace

DirichletFit fit_asymmetric(std::span<const CountRows> rows, std::vector<double> alpha,
                            const HyperoptSettings& settings) {
  settings.validate();
  if (alpha.empty() || std::any_of(alpha.begin(), alpha.end(), [](double a) { return !(a > 0.0); })) {
    throw ValidationError("asymmetric prior must have positive components");
  }
  const RowStats stats = collect(rows);
  DirichletFit fit;
  if (stats.empty()) {
    fit.alpha = std::move(alpha);
    fit.evidence.push_back(0.0);
    fit.converged = true;
    return fit;
  }
  if (stats.dim != alpha.size()) throw ValidationError("prior length does not match the count rows");

  double evidence = asymmetric_evidence(stats, alpha);
  fit.evidence.push_back(evidence);
  std::vector<double> next(alpha.size());
  for (int it = 0; it < settings.max_iterations; ++it) {
    const double sum = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    const double denominator = digamma_gain(stats.totals, sum);
    double change = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) {
      const double numerator = digamma_gain(stats.component[k], alpha[k]);
      next[k] = std::max(settings.floor, alpha[k] * numerator / denominator);
      change = std::max(change, std::abs(next[k] - alpha[k]) / alpha[k]);
    }
    const double next_evidence = asymmetric_evidence(stats, next);
    if (decreased(evidence, next_evidence) || !std::isfinite(next_evidence)) {
      fit.converged = true;
      break;
    }
    alpha.swap(next);
    evidence = next_evidence;
    fit.evidence.push_back(evidence);
    fit.iterations = it + 1;
    if (change < settings.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.alpha = std::move(alpha);
  return fit;
}

std::vector<double> optimize_asymmetric(std::span<const CountRows> rows, std::vector<double> alpha,
                                        const HyperoptSettings& settings) {
  return fit_asymmetric(rows, std::move(alpha), settings).alpha;
}

DirichletFit fit_symmetric(std::span<const CountRows> rows, double concentration, const HyperoptSettings& settings) {
  settings.validate();
  if (!(concentration > 0.0)) throw ValidationError("symmetric prior must be positive");
  const RowStats stats = collect(rows);
  DirichletFit fit;
  if (stats.empty()) {
    fit.alpha = {concentration};
    fit.evidence.push_back(0.0);
    fit.converged = true;
    return fit;
  }
  const auto dim = static_cast<double>(stats.dim);
  double evidence = symmetric_evidence(stats, concentration);
  fit.evidence.push_back(evidence);
  for (int it = 0; it < settings.max_iterations; ++it) {
    const double numerator = digamma_gain(stats.pooled, concentration);
    const double denominator = dim * digamma_gain(stats.totals, dim * concentration);
    const double next = std::max(settings.floor, concentration * numerator / denominator);
    const double next_evidence = symmetric_evidence(stats, next);
    if (decreased(evidence, next_evidence) || !std::isfinite(next_evidence)) {
      fit.converged = true;
      break;
    }
    const double change = std::abs(next - concentration) / concentration;
    concentration = next;
    evidence = next_evidence;
    fit.evidence.push_back(evidence);
    fit.iterations = it + 1;
    if (change < settings.tolerance) {
      fit.converged = true;
      break;
    }
  }
  fit.alpha = {concentration};
  return fit;
}

double optimize_symmetric(std::span<const CountRows> rows, double concentration, const HyperoptSettings& settings) {
  return fit_symmetric(rows, concentration, settings).alpha.front();
}

double rows_log_evidence(std::span<const CountRows> rows, std::span<const double> alpha) {
  const RowStats stats = collect(rows);
  if (stats.empty()) return 0.0;
  return asymmetric_evidence(stats, alpha);
}

double rows_log_evidence(std::span<const CountRows> rows, double concentration) {
  const RowStats stats = collect(rows);
  if (stats.empty()) return 0.0;
  return symmetric_evidence(stats, concentration);
}

std::string reoptimize_hyperparameters(ModelState& state, const HyperoptSettings& settings, HyperoptTargets targets) {
  const auto& config = state.config();
  const auto& counts = state.counts();
  auto& hyper = state.mutable_hyperparameters();
  std::ostringstream note;
  note.precision(6);

  if (targets.alpha && config.topics() > 1 && config.semantic_count() > 0) {
    const CountRows rows[] = {{counts.doc_topic_rows(), counts.topics()}};
    hyper.alpha = optimize_asymmetric(rows, hyper.alpha, settings);
  }
  if (targets.gamma && config.classes() > 1) {
    const CountRows rows[] = {{counts.transition_rows(), counts.classes()}};
    hyper.gamma = optimize_asymmetric(rows, hyper.gamma, settings);
  }
  if (targets.beta && counts.vocabulary() > 0) {
    const CountRows rows[] = {{counts.semantic_word_rows(), counts.vocabulary()},
                              {counts.syntactic_word_rows(), counts.vocabulary()}};
    hyper.beta = optimize_symmetric(rows, hyper.beta, settings);
  }

  auto list = [&](const std::vector<double>& v) {
    note << '[';
    for (std::size_t i = 0; i < v.size(); ++i) note << (i ? " " : "") << v[i];
    note << ']';
  };
  note << "alpha=";
  list(hyper.alpha);
  note << " beta=" << hyper.beta << " gamma=";
  list(hyper.gamma);
  return note.str();
}

HyperoptHook make_hyperopt_hook(HyperoptSettings settings, HyperoptTargets targets) {
  return [settings, targets](ModelState& state) { return reoptimize_hyperparameters(state, settings, targets); };
}

}  // namespace poslda
