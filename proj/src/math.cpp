// Apache License, Version 2.0, refer to LICENSE.txt

#include "poslda/math.hpp"

#include <numeric>

namespace poslda {

double dirichlet_multinomial_log_evidence(std::span<const std::int32_t> counts, std::span<const double> prior) {
  double total_prior = 0.0;
  std::int64_t total = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    total_prior += prior[k];
    if (counts[k] == 0) continue;
    total += counts[k];
    sum += log_gamma(prior[k] + counts[k]) - log_gamma(prior[k]);
  }
  if (total == 0) return 0.0;
  return sum + log_gamma(total_prior) - log_gamma(total_prior + static_cast<double>(total));
}

double dirichlet_multinomial_log_evidence(std::span<const std::int32_t> counts, double concentration) {
  std::int64_t total = 0;
  double sum = 0.0;
  const double base = log_gamma(concentration);
  for (const auto n : counts) {
    if (n == 0) continue;
    total += n;
    sum += log_gamma(concentration + n) - base;
  }
  if (total == 0) return 0.0;
  const double total_prior = concentration * static_cast<double>(counts.size());
  return sum + log_gamma(total_prior) - log_gamma(total_prior + static_cast<double>(total));
}

}  // namespace poslda
