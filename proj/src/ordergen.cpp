#include "planarfab/ordergen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "planarfab/error.hpp"

namespace planarfab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double std_normal_quantile(double p) {
  if (p <= 0.0) return -kInf;
  if (p >= 1.0) return kInf;
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double std_normal_cdf(double x) {
  if (x == kInf) return 1.0;
  if (x == -kInf) return 0.0;
  return boost::math::cdf(boost::math::normal_distribution<double>(), x);
}

}  // namespace

double bivariate_normal_cdf(double a, double b, double rho) {
  const double base = std_normal_cdf(a) * std_normal_cdf(b);
  if (!std::isfinite(a) || !std::isfinite(b) || rho == 0.0) return base;
  // d/drho Phi2(a, b; rho) = phi2(a, b; rho)
  auto density = [a, b](double r) {
    const double s = 1.0 - r * r;
    return std::exp(-(a * a - 2.0 * r * a * b + b * b) / (2.0 * s)) /
           (2.0 * std::numbers::pi * std::sqrt(s));
  };
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(density, 0.0, rho, 8, 1e-12);
  return std::clamp(base + integral, 0.0, 1.0);
}

double tetrachoric(double r, double p1, double p2) {
  if (p1 <= 0.0 || p1 >= 1.0 || p2 <= 0.0 || p2 >= 1.0 || r == 0.0) return 0.0;
  const double a = std_normal_quantile(p1);
  const double b = std_normal_quantile(p2);
  const double scale = std::sqrt(p1 * (1 - p1) * p2 * (1 - p2));
  auto phi = [&](double rho) { return (bivariate_normal_cdf(a, b, rho) - p1 * p2) / scale; };
  double lo = -0.999, hi = 0.999;
  if (r <= phi(lo)) return lo;
  if (r >= phi(hi)) return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < r ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

bool repair_correlation(std::vector<double>& m, int n, double tol) {
  Eigen::Map<Eigen::MatrixXd> mat(m.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
  if (es.info() != Eigen::Success) throw ConfigError("correlation eigen-decomposition failed");
  if (es.eigenvalues().minCoeff() >= -tol) return false;
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd fixed = es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
  Eigen::VectorXd d = fixed.diagonal().cwiseSqrt();
  for (int i = 0; i < n; ++i)
    if (!(d(i) > tol)) throw ConfigError("correlation matrix cannot be repaired to PSD");
  fixed = d.cwiseInverse().asDiagonal() * fixed * d.cwiseInverse().asDiagonal();
  fixed = 0.5 * (fixed + fixed.transpose());
  mat = fixed;
  return true;
}

CopulaSampler::CopulaSampler(const DrugCatalog& catalog, CorrelationMode mode)
    : n_(catalog.size()) {
  check_catalog(catalog);
  const auto n = static_cast<std::size_t>(n_);
  latent_.assign(n * n, 0.0);
  threshold_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    threshold_[i] = std_normal_quantile(catalog.marginal[i]);
    latent_[i * n + i] = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double o = catalog.correlation[i][j];
      latent_[i * n + j] = mode == CorrelationMode::Raw
                               ? o
                               : tetrachoric(o, catalog.marginal[i], catalog.marginal[j]);
    }
  }
  repaired_ = repair_correlation(latent_, n_);

  // Symmetric square root via the eigen-decomposition; unlike Cholesky it
  // tolerates singular (clipped) matrices.
  Eigen::Map<Eigen::MatrixXd> mat(latent_.data(), n_, n_);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat);
  Eigen::MatrixXd f =
      es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  factor_.resize(n * n);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) factor_[static_cast<std::size_t>(i) * n + j] = f(i, j);
}

void CopulaSampler::sample(Rng& rng, std::vector<char>& present) const {
  const auto n = static_cast<std::size_t>(n_);
  thread_local std::vector<double> eps;
  eps.resize(n);
  for (auto& e : eps) e = rng.normal();
  present.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = threshold_[i];
    if (t == kInf) {
      present[i] = 1;
      continue;
    }
    if (t == -kInf) continue;
    double z = 0.0;
    const double* row = factor_.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) z += row[j] * eps[j];
    present[i] = z <= t;
  }
}

OrderSet sample_orders(const DrugCatalog& catalog, const OrderGenParams& params) {
  const int n = catalog.size();
  if (params.n_orders < 0) throw ConfigError("n_orders must be >= 0");
  if (params.size.lo < 1 || params.size.lo > params.size.hi || params.size.lo > n)
    throw ConfigError("order size range is empty or outside [1, |G|]");
  if (params.duration.speed < 1) throw ConfigError("dispensing speed must be >= 1");

  int possible = 0, forced = 0;
  for (double p : catalog.marginal) {
    possible += p > 0.0;
    forced += p >= 1.0;
  }
  if (possible < params.size.lo || forced > params.size.hi)
    throw InfeasibleError("no order size in range is attainable under the marginals");

  CopulaSampler sampler(catalog, params.mode);
  Rng rng(derive_seed(params.seed, stream_tag("ordergen")));
  OrderSet out;
  out.params = params;
  out.orders.reserve(static_cast<std::size_t>(params.n_orders));
  std::vector<char> present;
  for (int k = 0; k < params.n_orders; ++k) {
    long attempts = 0;
    int count = 0;
    do {
      if (++attempts > params.max_attempts_per_order)
        throw InfeasibleError("order size rejection sampling exceeded its attempt budget");
      sampler.sample(rng, present);
      count = static_cast<int>(std::count(present.begin(), present.end(), 1));
    } while (count < params.size.lo || count > params.size.hi);

    Order o;
    o.id = k + 1;
    for (int g = 0; g < n; ++g) {
      if (!present[static_cast<std::size_t>(g)]) continue;
      Ticks mult = params.duration.dose_multiplier ? rng.between(1, 3) : 1;
      o.items.push_back({g, params.duration.speed * mult});
    }
    out.orders.push_back(std::move(o));
  }
  return out;
}

DemandVector estimate_demand(std::span<const Order> history, int n_drugs) {
  DemandVector u(static_cast<std::size_t>(n_drugs), 0);
  for (const auto& o : history)
    for (const auto& it : o.items) u.at(static_cast<std::size_t>(it.drug)) += it.duration;
  return u;
}

std::vector<double> achieved_marginals(std::span<const Order> orders, int n_drugs) {
  std::vector<double> m(static_cast<std::size_t>(n_drugs), 0.0);
  if (orders.empty()) return m;
  for (const auto& o : orders)
    for (const auto& it : o.items) m.at(static_cast<std::size_t>(it.drug)) += 1.0;
  for (auto& v : m) v /= static_cast<double>(orders.size());
  return m;
}

DrugCatalog demo_catalog(int n_drugs, std::uint64_t seed, double marginal_lo,
                         double marginal_hi) {
  if (n_drugs < 1) throw ConfigError("demo catalog needs at least one drug");
  Rng rng(derive_seed(seed, stream_tag("catalog")));
  DrugCatalog c;
  const auto n = static_cast<std::size_t>(n_drugs);
  c.correlation.assign(n, std::vector<double>(n, 0.0));
  // Drugs fall into therapeutic groups; a shared group factor with loading
  // w gives within-group correlation w_i * w_j, which is PSD.
  const int groups = std::max(1, n_drugs / 5);
  std::vector<int> group(n);
  std::vector<double> load(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.drugs.push_back("DRUG" + std::to_string(i + 1));
    c.marginal.push_back(marginal_lo + (marginal_hi - marginal_lo) * rng.uniform());
    group[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(groups)));
    load[i] = 0.2 + 0.5 * rng.uniform();
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && group[i] == group[j])
        c.correlation[i][j] = std::round(load[i] * load[j] * 1e6) / 1e6;
  return c;
}

}  // namespace planarfab
