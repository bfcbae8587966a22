// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "poslda/model.hpp"
#include "poslda/sampler.hpp"

namespace poslda {

struct HyperoptSettings {
  int max_iterations = 200;
  // Stop once every component changes by less than this, relatively.
  double tolerance = 1e-6;
  // Lower bound applied to every component after each update.
  double floor = 1e-6;

  void validate() const;
};

// A row-major block of count vectors, each `dim` long.
struct CountRows {
  std::span<const std::int32_t> counts;
  std::size_t dim = 0;
};

struct DirichletFit {
  std::vector<double> alpha;
  // Log evidence before the first update and after every accepted one.
  std::vector<double> evidence;
  int iterations = 0;
  bool converged = false;
};

// Fixed-point maximisation of the Dirichlet-multinomial evidence of `rows`
// over an asymmetric prior:
//   alpha_k <- alpha_k * sum_rows [psi(n_k + alpha_k) - psi(alpha_k)]
//                      / sum_rows [psi(n + A) - psi(A)],   A = sum_k alpha_k
// An update that would lower the evidence is not accepted and ends the
// iteration. With no non-empty row the input is returned unchanged.
DirichletFit fit_asymmetric(std::span<const CountRows> rows, std::vector<double> alpha,
                            const HyperoptSettings& settings = {});
std::vector<double> optimize_asymmetric(std::span<const CountRows> rows, std::vector<double> alpha,
                                        const HyperoptSettings& settings = {});

// Same update with every component tied to one scalar.
DirichletFit fit_symmetric(std::span<const CountRows> rows, double concentration,
                           const HyperoptSettings& settings = {});
double optimize_symmetric(std::span<const CountRows> rows, double concentration,
                          const HyperoptSettings& settings = {});

double rows_log_evidence(std::span<const CountRows> rows, std::span<const double> alpha);
double rows_log_evidence(std::span<const CountRows> rows, double concentration);

struct HyperoptTargets {
  bool alpha = true;
  bool beta = true;
  bool gamma = true;
};

// Re-fits alpha over document-topic rows, gamma over transition rows and the
// symmetric beta over every word-distribution row. Returns a one-line summary.
std::string reoptimize_hyperparameters(ModelState& state, const HyperoptSettings& settings = {},
                                       HyperoptTargets targets = {});

HyperoptHook make_hyperopt_hook(HyperoptSettings settings = {}, HyperoptTargets targets = {});

}  // namespace poslda
