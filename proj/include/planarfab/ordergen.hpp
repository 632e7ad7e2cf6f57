#pragma once

// Synthetic prescription orders from a Gaussian copula: draw a correlated
// standard normal vector, mark drug g present when its component falls
// below the p_g quantile, resample the whole order until its size is in
// range.

#include <cstdint>
#include <span>
#include <vector>

#include "planarfab/core.hpp"
#include "planarfab/rng.hpp"

namespace planarfab {

struct SizeRange {
  int lo = 1;
  int hi = 1 << 30;
};

/// How the catalog correlation feeds the latent normal.
/// Raw: used as-is. Tetrachoric: each entry is read as a binary (phi)
/// correlation and converted to the latent correlation reproducing it.
enum class CorrelationMode { Raw, Tetrachoric };

struct DurationRule {
  Ticks speed = 100;
  bool dose_multiplier = false;  // scale by an integer drawn from [1, 3]
};

struct OrderGenParams {
  int n_orders = 0;
  SizeRange size;
  DurationRule duration;
  CorrelationMode mode = CorrelationMode::Raw;
  std::uint64_t seed = 0;
  long max_attempts_per_order = 1'000'000;
};

struct OrderSet {
  std::vector<Order> orders;
  OrderGenParams params;  // provenance
};

/// Total dispensing ticks per drug.
using DemandVector = std::vector<Ticks>;

/// Draws presence vectors; exposed separately so marginal fidelity can be
/// measured before size filtering.
class CopulaSampler {
 public:
  CopulaSampler(const DrugCatalog& catalog, CorrelationMode mode);

  int size() const noexcept { return n_; }
  void sample(Rng& rng, std::vector<char>& present) const;
  /// Correlation actually used for the latent normal (after PSD repair).
  const std::vector<double>& latent_correlation() const noexcept { return latent_; }
  bool repaired() const noexcept { return repaired_; }

 private:
  int n_ = 0;
  std::vector<double> threshold_;  // +inf: always, -inf: never
  std::vector<double> factor_;     // row-major n x n, latent = factor * eps
  std::vector<double> latent_;
  bool repaired_ = false;
};

OrderSet sample_orders(const DrugCatalog& catalog, const OrderGenParams& params);

DemandVector estimate_demand(std::span<const Order> history, int n_drugs);

/// Frequency of each drug across a set of orders.
std::vector<double> achieved_marginals(std::span<const Order> orders, int n_drugs);

/// Nearest correlation matrix by eigenvalue clipping and diagonal
/// renormalisation. Returns false when the input is already PSD within tol.
bool repair_correlation(std::vector<double>& m, int n, double tol = 1e-8);

/// Latent normal correlation rho with phi(rho; p1, p2) == r, clipped to
/// the attainable range.
double tetrachoric(double r, double p1, double p2);

/// P(Z1 <= a, Z2 <= b) for a standard bivariate normal with correlation rho.
double bivariate_normal_cdf(double a, double b, double rho);

/// Random catalog for demos and tests: marginals in [lo, hi] and a
/// block-structured correlation that is PSD by construction.
DrugCatalog demo_catalog(int n_drugs, std::uint64_t seed, double marginal_lo = 0.05,
                         double marginal_hi = 0.35);

}  // namespace planarfab
