#pragma once

namespace imblr {

/// Standard normal CDF, built on std::erfc so the lower tail keeps full
/// relative precision.
double normal_cdf(double z);

/// Standard normal density.
double normal_pdf(double z);

/// Inverse of normal_cdf. A rational initial guess is polished with Halley
/// steps on the CDF. Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

}  // namespace imblr
