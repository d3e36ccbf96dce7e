#ifndef MLKF_BOUNDS_LAB_HPP
#define MLKF_BOUNDS_LAB_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "mlkf/error.hpp"
#include "mlkf/parallel.hpp"
#include "mlkf/rng.hpp"

// Numerical companions to the FDR-inflation constants: the random-walk expectation bounded
// by c_kn and the empirical-process expectation behind c_pf.
namespace mlkf::bounds {

enum class Method { quadrature, dp_enumeration, monte_carlo, closed_form };

inline std::string to_string(Method m) {
  switch (m) {
    case Method::quadrature:
      return "quadrature";
    case Method::dp_enumeration:
      return "dp_enumeration";
    case Method::monte_carlo:
      return "monte_carlo";
    case Method::closed_form:
      return "closed_form";
  }
  return "unknown";
}

struct BoundReport {
  std::string name;
  double value = 0.0;
  Method method = Method::closed_form;
  double error_estimate = 0.0;
  double ci_half_width = 0.0;  // 95% half-width, Monte Carlo reports only
  double standard_error = 0.0;  // Monte Carlo reports only
  std::map<std::string, double> parameters;
};

namespace detail {

/// Bisection on a bracket [lo, hi] with f(lo) < 0 < f(hi).
template <typename F>
double bisect(F&& f, double lo, double hi, double abs_tol) {
  for (int it = 0; it < 400 && hi - lo > abs_tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

template <typename F>
std::pair<double, double> integrate(F&& f, double a, double b) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-12, &err);
  return {v, err};
}

}  // namespace detail

/// Unique positive root of exp(theta (1 - c1)) + exp(-theta c1) = 2 for c1 in (1/2, 1).
/// theta_root(0.5) = 0 by convention.
inline double theta_root(double c1) {
  if (!(c1 >= 0.5 && c1 < 1.0)) throw domain_error("theta_root needs c1 in [1/2, 1)");
  if (c1 - 0.5 < 1e-12) return 0.0;
  auto f = [c1](double th) { return std::exp(th * (1.0 - c1)) + std::exp(-th * c1) - 2.0; };
  const double lo = std::log(c1 / (1.0 - c1));  // minimiser of f, where f < 0
  double hi = std::max(1.0, 2.0 * lo);
  while (f(hi) <= 0.0) hi *= 2.0;
  return detail::bisect(f, lo, hi, 1e-13 * std::max(1.0, hi));
}

/// theta_t in (0, log 2): root of e^theta + e^{-t theta} = 2 for t > 1; zero at t = 1.
inline double theta_t(double t) {
  if (!(t >= 1.0)) throw domain_error("theta_t needs t >= 1");
  if (t - 1.0 < 1e-12) return 0.0;
  if (std::isinf(t)) return std::numbers::ln2;
  auto f = [t](double th) { return std::exp(th) + std::exp(-t * th) - 2.0; };
  const double lo = std::log(t) / (1.0 + t);
  return detail::bisect(f, lo, std::numbers::ln2, 1e-15);
}

/// 1 + int_1^inf exp(-Theta(t/(1+t)) t/(1+t)) dt.
inline BoundReport akn_loose_bound() {
  auto integrand = [](double t) {
    const double c1 = t / (1.0 + t);
    return std::exp(-theta_root(c1) * c1);
  };
  // The integrand equals exp(-t theta_t) with theta_t increasing, so past T it is at most
  // exp(-t theta_T) and the tail is at most exp(-T theta_T) / theta_T.
  double upper = 16.0;
  auto tail_bound = [](double T) {
    const double th = theta_t(T);
    return std::exp(-T * th) / th;
  };
  while (tail_bound(upper) > 1e-10) upper *= 2.0;
  double value = 1.0;
  double err = tail_bound(upper);
  // Split where the integrand changes scale so the adaptive rule sees smooth pieces.
  const double breaks[] = {1.0, 2.0, 4.0, 8.0, 16.0};
  double a = breaks[0];
  for (double b : breaks) {
    if (b <= a) continue;
    auto [v, e] = detail::integrate(integrand, a, b);
    value += v;
    err += e;
    a = b;
  }
  auto [v, e] = detail::integrate(integrand, a, upper);
  value += v;
  err += e;
  BoundReport r{"akn_loose", value, Method::quadrature, err, 0.0, 0.0, {{"truncation_point", upper}}};
  return r;
}

/// Contribution of one first-k0-steps history with running max ratio R and partial sum P:
/// max(R,1) + int_{theta_{max(R,1)}}^{log 2} (2 - e^th)^{k0-P} e^{th P} J(th) dth.
/// Integrated in u = log 2 - th, where 2 - e^th = -2 expm1(-u) keeps full precision; the
/// derivative singularity at u = 0 is handled by tanh-sinh quadrature.
inline double akn_refined_summand(double R, int P, int k0) {
  const double start = std::max(R, 1.0);
  const double width = std::numbers::ln2 - theta_t(start);
  if (!(width > 0.0)) return start;
  const int down = k0 - P;
  auto integrand = [down, P](double u) {
    const double th = std::numbers::ln2 - u;
    const double base = -2.0 * std::expm1(-u);
    if (!(base > 0.0)) return down == 0 ? std::exp(th * P) * std::exp(th) / th : 0.0;
    const double log_base = std::log(base);
    const double head = down == 0 ? 1.0 : std::exp(down * log_base);
    const double jac = th < 1e-6 ? 1.0 + th : (std::exp(th) * th + base * log_base) / (th * th);
    return head * std::exp(th * P) * jac;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  return start + ts.integrate(integrand, 0.0, width, 1e-12);
}

namespace detail {

struct Ratio {
  std::int64_t num = 0;
  std::int64_t den = 1;
  bool operator<(const Ratio& o) const { return num * o.den < o.num * den; }
  bool operator==(const Ratio& o) const { return num * o.den == o.num * den; }
};

inline Ratio reduced(std::int64_t num, std::int64_t den) {
  const std::int64_t g = std::gcd(num, den);
  return g == 0 ? Ratio{0, 1} : Ratio{num / g, den / g};
}

}  // namespace detail

/// Refined bound on a_kn from conditioning on the first k0 steps. Paths are aggregated by a
/// dynamic program over (partial sum, running max ratio), the only path features the
/// summand depends on.
inline BoundReport akn_refined_bound(int k0) {
  if (k0 < 0) throw domain_error("k0 must be nonnegative");
  if (k0 > 24) throw cost_error("k0 above 24 is outside the supported cost envelope");
  using State = std::tuple<int, std::int64_t, std::int64_t>;  // P, reduced R numerator, denominator
  std::map<State, std::uint64_t> states{{{0, 0, 1}, 1}};
  for (int k = 1; k <= k0; ++k) {
    std::map<State, std::uint64_t> next;
    for (const auto& [key, count] : states) {
      const auto [p, rn, rd] = key;
      for (int x = 0; x <= 1; ++x) {
        const int p2 = p + x;
        const detail::Ratio cur{rn, rd};
        const detail::Ratio cand = detail::reduced(p2, 1 + k - p2);
        const detail::Ratio best = cur < cand ? cand : cur;
        next[{p2, best.num, best.den}] += count;
      }
    }
    states = std::move(next);
  }
  double total = 0.0;
  for (const auto& [key, count] : states) {
    const auto [p, rn, rd] = key;
    total += static_cast<double>(count) *
             akn_refined_summand(static_cast<double>(rn) / static_cast<double>(rd), p, k0);
  }
  const double value = std::ldexp(total, -k0);
  BoundReport r{"akn_refined", value, Method::dp_enumeration, 1e-9, 0.0, 0.0,
                {{"k0", static_cast<double>(k0)}, {"states", static_cast<double>(states.size())}}};
  return r;
}

/// Same bound by visiting all 2^k0 step histories one at a time.
inline double akn_refined_bound_enumerated(int k0) {
  if (k0 < 0) throw domain_error("k0 must be nonnegative");
  if (k0 > 16) throw cost_error("direct enumeration is capped at k0 = 16");
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k0); ++mask) {
    std::int64_t s = 0;
    detail::Ratio best{0, 1};
    for (int k = 1; k <= k0; ++k) {
      s += static_cast<std::int64_t>((mask >> (k - 1)) & 1U);
      const detail::Ratio cand = detail::reduced(s, 1 + k - s);
      if (best < cand) best = cand;
    }
    total += akn_refined_summand(static_cast<double>(best.num) / static_cast<double>(best.den),
                                 static_cast<int>(s), k0);
  }
  return std::ldexp(total, -k0);
}

/// (k0, bound) for k0 = 0..k0_max.
inline std::vector<std::pair<int, double>> akn_bound_table(int k0_max) {
  std::vector<std::pair<int, double>> rows;
  for (int k0 = 0; k0 <= k0_max; ++k0) rows.emplace_back(k0, akn_refined_bound(k0).value);
  return rows;
}

/// max_{0 <= k <= steps} S_k / (1 + k - S_k) for a single path of 0/1 steps.
inline double walk_sup(std::span<const std::uint8_t> steps) {
  std::int64_t s = 0;
  detail::Ratio best{0, 1};
  for (std::size_t k = 1; k <= steps.size(); ++k) {
    if (steps[k - 1] == 0) continue;
    ++s;
    const detail::Ratio cand{s, static_cast<std::int64_t>(k) + 1 - s};
    if (best < cand) best = cand;
  }
  return static_cast<double>(best.num) / static_cast<double>(best.den);
}

namespace detail {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  double extra_sum = 0.0;
  double extra_sum_sq = 0.0;
};

inline constexpr std::size_t kChunk = 1000;

/// Chunked Monte Carlo driver: chunk c draws from the stream derived from (seed, c), and
/// chunk totals are reduced in chunk order, so results do not depend on the thread count.
template <typename Draw>
Moments chunked_moments(std::size_t reps, std::uint64_t seed, Draw&& draw) {
  const std::size_t chunks = (reps + kChunk - 1) / kChunk;
  std::vector<Moments> parts(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, {c}));
    Moments m;
    const std::size_t end = std::min(reps, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const auto [v, extra] = draw(rng);
      m.sum += v;
      m.sum_sq += v * v;
      m.extra_sum += extra;
      m.extra_sum_sq += extra * extra;
    }
    parts[c] = m;
  });
  Moments total;
  for (const auto& m : parts) {
    total.sum += m.sum;
    total.sum_sq += m.sum_sq;
    total.extra_sum += m.extra_sum;
    total.extra_sum_sq += m.extra_sum_sq;
  }
  return total;
}

inline std::pair<double, double> mean_and_se(double sum, double sum_sq, std::size_t reps) {
  const double n = static_cast<double>(reps);
  const double mean = sum / n;
  const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

}  // namespace detail

/// E[sup_k S_k / (1 + k - S_k)] for a fair 0/1 random walk, truncated at `steps`.
/// The ratio tends to 1 almost surely, so a long horizon captures the supremum.
inline BoundReport akn_monte_carlo(std::size_t steps, std::size_t reps, std::uint64_t seed) {
  if (steps < 1000) throw domain_error("akn Monte Carlo needs at least 1000 steps");
  if (reps < 2) throw domain_error("akn Monte Carlo needs at least 2 replicates");
  auto draw = [steps](Rng& rng) {
    std::int64_t s = 0;
    std::int64_t best_num = 0;
    std::int64_t best_den = 1;
    std::uint64_t bits = 0;
    int left = 0;
    for (std::size_t k = 1; k <= steps; ++k) {
      if (left == 0) {
        bits = rng();
        left = 64;
      }
      const bool up = bits & 1U;
      bits >>= 1;
      --left;
      if (!up) continue;
      ++s;
      const std::int64_t den = static_cast<std::int64_t>(k) + 1 - s;
      if (s * best_den > best_num * den) {
        best_num = s;
        best_den = den;
      }
    }
    return std::pair{static_cast<double>(best_num) / static_cast<double>(best_den), 0.0};
  };
  const auto mom = detail::chunked_moments(reps, seed, draw);
  const auto [mean, se] = detail::mean_and_se(mom.sum, mom.sum_sq, reps);
  BoundReport r{"akn_monte_carlo", mean, Method::monte_carlo, 1.96 * se, 1.96 * se, se,
                {{"steps", static_cast<double>(steps)},
                 {"reps", static_cast<double>(reps)},
                 {"seed", static_cast<double>(seed)}}};
  return r;
}

/// 1 + exp(G^{-1/2} + G^{-1}/2) * 0.42 + e * G^{-1/4}.
inline double cpf_formula(double G) {
  if (!(G >= 1.0)) throw domain_error("c_pf needs G >= 1");
  return 1.0 + std::exp(1.0 / std::sqrt(G) + 0.5 / G) * 0.42 + std::numbers::e * std::pow(G, -0.25);
}

/// Probability that sup_t N_t / (1 + n t) >= x for the counting process of n uniforms (x > 1).
inline double kt_hitting_probability(double x, int n, std::span<const double> log_binom) {
  double total = 0.0;
  const double nd = static_cast<double>(n);
  const double tail = std::log(1.0 + 1.0 / nd - 1.0 / x);
  const int last = static_cast<int>(std::floor(nd - x));
  for (int i = 0; i <= last; ++i) {
    const double a = (nd - i - x) / (nd * x);
    if (!(a > 0.0)) continue;
    total += std::exp(log_binom[static_cast<std::size_t>(i)] + (n - i) * std::log(a) + (i - 1) * std::log1p(-a) + tail);
  }
  return total;
}

inline std::vector<double> log_binomials(int n) {
  std::vector<double> lb(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) lb[static_cast<std::size_t>(i)] = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
  return lb;
}

inline double kt_hitting_probability(double x, int n) {
  const auto lb = log_binomials(n);
  return kt_hitting_probability(x, n, lb);
}

/// a_pf(n) = 1 + int_1^inf P[sup_t N_t/(1+nt) >= x] dx from the exact hitting formula.
/// This equals E[max(1, sup_t N_t / (1 + n t))].
inline BoundReport apf_exact(int n) {
  if (n < 1 || n > 5000) throw cost_error("apf_exact supports 1 <= n <= 5000");
  const auto lb = log_binomials(n);
  auto hit = [&](double x) { return kt_hitting_probability(x, n, lb); };
  double value = 1.0;
  double err = 0.0;
  // The summation range changes at integers; integrate piecewise and stop once the
  // (nonincreasing) hitting probability drops below 1e-12.
  int a = 1;
  while (a < n) {
    auto [v, e] = detail::integrate(hit, static_cast<double>(a), static_cast<double>(a + 1));
    value += v;
    err += e;
    ++a;
    const double h = hit(static_cast<double>(a));
    if (h < 1e-12) {
      err += h * static_cast<double>(n - a);
      break;
    }
  }
  BoundReport r{"apf_exact", value, Method::quadrature, err, 0.0, 0.0,
                {{"n", static_cast<double>(n)}, {"upper_limit", static_cast<double>(a)}}};
  return r;
}

/// Monte Carlo estimate of E[max_k k / (1 + n U_(k))] over sorted uniforms. The parameter
/// `clipped_mean` reports E[max(1, .)], the quantity the exact formula computes.
inline BoundReport apf_monte_carlo(int n, std::size_t reps, std::uint64_t seed) {
  if (n < 1) throw domain_error("n must be positive");
  if (reps < 2) throw domain_error("need at least 2 replicates");
  auto draw = [n](Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(n));
    for (auto& v : u) v = unif(rng);
    std::sort(u.begin(), u.end());
    double best = 0.0;
    for (int k = 1; k <= n; ++k) best = std::max(best, k / (1.0 + n * u[static_cast<std::size_t>(k - 1)]));
    return std::pair{best, std::max(1.0, best)};
  };
  const auto mom = detail::chunked_moments(reps, seed, draw);
  const auto [mean, se] = detail::mean_and_se(mom.sum, mom.sum_sq, reps);
  const auto [cmean, cse] = detail::mean_and_se(mom.extra_sum, mom.extra_sum_sq, reps);
  BoundReport r{"apf_monte_carlo", mean, Method::monte_carlo, 1.96 * se, 1.96 * se, se,
                {{"n", static_cast<double>(n)},
                 {"reps", static_cast<double>(reps)},
                 {"seed", static_cast<double>(seed)},
                 {"clipped_mean", cmean},
                 {"clipped_standard_error", cse}}};
  return r;
}

/// Positive root of e^gamma = 1 + gamma x for x > 1.
inline double gamma_x_root(double x) {
  if (!(x > 1.0)) throw domain_error("gamma_x_root needs x > 1");
  auto h = [x](double g) { return std::expm1(g) - g * x; };
  const double lo = std::log(x);
  double hi = std::max(1.0, 2.0 * lo);
  while (h(hi) <= 0.0) hi *= 2.0;
  return detail::bisect(h, lo, hi, 1e-15 * std::max(1.0, hi));
}

/// int_1^inf exp(-gamma_x x) dx, the constant 0.42 in c_pf.
inline BoundReport gamma_tail_integral() {
  auto f = [](double x) { return x - 1.0 < 1e-12 ? 1.0 : std::exp(-gamma_x_root(x) * x); };
  // gamma_x increases in x, so the tail past X is at most exp(-gamma_X X) / gamma_X.
  double upper = 8.0;
  auto tail_bound = [](double X) {
    const double g = gamma_x_root(X);
    return std::exp(-g * X) / g;
  };
  while (tail_bound(upper) > 1e-12) upper *= 2.0;
  auto [v1, e1] = detail::integrate(f, 1.0, 2.0);
  auto [v2, e2] = detail::integrate(f, 2.0, upper);
  BoundReport r{"gamma_tail_integral", v1 + v2, Method::quadrature, e1 + e2 + tail_bound(upper), 0.0, 0.0,
                {{"truncation_point", upper}}};
  return r;
}

}  // namespace mlkf::bounds

#endif  // MLKF_BOUNDS_LAB_HPP
