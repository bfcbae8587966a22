// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstdint>
#include <span>

namespace poslda {

// Reentrant log-gamma; std::lgamma writes the global signgam.
inline double log_gamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

// log of the Dirichlet-multinomial evidence of one count row under prior
// `prior` (same length).
double dirichlet_multinomial_log_evidence(std::span<const std::int32_t> counts, std::span<const double> prior);

// Same with a symmetric prior of `concentration` on every component.
double dirichlet_multinomial_log_evidence(std::span<const std::int32_t> counts, double concentration);

}  // namespace poslda
