#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Closed-form hitting-time bounds for processes with drift. Every function
// here is a pure calculator: it validates its inputs, evaluates one formula
// (or one quadrature), and reports which direction the bound points. The
// process-side hypotheses (nonnegativity, the drift condition itself) are the
// caller's responsibility.

namespace driftkit {

enum class Theorem {
    additive_upper,
    additive_lower,
    multiplicative,
    multiplicative_tail,
    variable,
    martingale_upper,
    martingale_lower,
    two_barrier,
    one_barrier,
    moran_potential,
    moran_neutral,
};

enum class Direction { upper, lower, exact };

inline std::string_view to_string(Theorem t) {
    switch (t) {
        case Theorem::additive_upper:      return "additive_upper";
        case Theorem::additive_lower:      return "additive_lower";
        case Theorem::multiplicative:      return "multiplicative";
        case Theorem::multiplicative_tail: return "multiplicative_tail";
        case Theorem::variable:            return "variable";
        case Theorem::martingale_upper:    return "martingale_upper";
        case Theorem::martingale_lower:    return "martingale_lower";
        case Theorem::two_barrier:         return "two_barrier";
        case Theorem::one_barrier:         return "one_barrier";
        case Theorem::moran_potential:     return "moran_potential";
        case Theorem::moran_neutral:       return "moran_neutral";
    }
    throw std::logic_error("to_string: unknown theorem");
}

inline std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::upper: return "upper";
        case Direction::lower: return "lower";
        case Direction::exact: return "exact";
    }
    throw std::logic_error("to_string: unknown direction");
}

inline Theorem theorem_from_string(std::string_view name) {
    for (Theorem t : {Theorem::additive_upper, Theorem::additive_lower,
                      Theorem::multiplicative, Theorem::multiplicative_tail,
                      Theorem::variable, Theorem::martingale_upper,
                      Theorem::martingale_lower, Theorem::two_barrier,
                      Theorem::one_barrier, Theorem::moran_potential,
                      Theorem::moran_neutral}) {
        if (to_string(t) == name) return t;
    }
    throw std::invalid_argument("theorem_from_string: unknown theorem '" + std::string(name) + "'");
}

inline Direction direction_from_string(std::string_view name) {
    if (name == "upper") return Direction::upper;
    if (name == "lower") return Direction::lower;
    if (name == "exact") return Direction::exact;
    throw std::invalid_argument("direction_from_string: unknown direction '" + std::string(name) + "'");
}

// Default direction of each theorem's statement. A report may override it,
// e.g. when an exact barrier formula serves as a domination bound for a
// process it merely dominates.
inline Direction direction_of(Theorem t) {
    switch (t) {
        case Theorem::additive_lower:
        case Theorem::martingale_lower:
            return Direction::lower;
        case Theorem::two_barrier:
        case Theorem::one_barrier:
            return Direction::exact;
        default:
            return Direction::upper;
    }
}

// One evaluated bound: the formula used, the inputs it was fed, the value,
// and whether the value caps, floors, or equals the expected hitting time.
struct BoundReport {
    Theorem theorem;
    std::map<std::string, double> inputs;
    double bound = 0.0;
    Direction direction = Direction::upper;
};

namespace bounds {

struct DriftParameters {
    double x0_mean = 0.0;                // E[X_0]
    double delta = 0.0;                  // per-step drift bound
    std::optional<double> step_bound;    // |X_t - X_{t+1}| <= c, lower bounds only
};

struct IntervalParameters {
    double a = 0.0;
    double b = 0.0;
    double x0_mean = 0.0;
    double delta_var = 0.0;  // conditional-variance bound before absorption
};

struct MoranParameters {
    std::int64_t n = 0;  // population size
    double r = 1.0;      // mutant fitness
    std::int64_t k = 0;  // current non-mutant count
};

namespace detail {

inline void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

inline void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(what);
}

}  // namespace detail

// ---- additive drift ----
//
// Potential decreases by at least delta per step in expectation while
// positive: E[T] <= x0_mean / delta.
inline double additive_upper(const DriftParameters& p) {
    detail::require_finite(p.x0_mean, "additive_upper: x0_mean must be finite");
    detail::require_finite(p.delta, "additive_upper: delta must be finite");
    detail::require(p.x0_mean >= 0.0, "additive_upper: x0_mean must be >= 0");
    detail::require(p.delta > 0.0, "additive_upper: delta must be > 0");
    return p.x0_mean / p.delta;
}

// Decrease at most delta per step in expectation, and single steps never move
// the potential by more than step_bound: E[T] >= x0_mean / delta. The step
// bound does not enter the formula, but the conclusion is false without a
// finite one, so callers must supply it.
inline double additive_lower(const DriftParameters& p) {
    detail::require(p.step_bound.has_value(),
                    "additive_lower: step_bound is required (the theorem needs bounded steps)");
    detail::require_finite(p.x0_mean, "additive_lower: x0_mean must be finite");
    detail::require_finite(p.delta, "additive_lower: delta must be finite");
    detail::require_finite(*p.step_bound, "additive_lower: step_bound must be finite");
    detail::require(p.x0_mean >= 0.0, "additive_lower: x0_mean must be >= 0");
    detail::require(p.delta > 0.0, "additive_lower: delta must be > 0");
    detail::require(*p.step_bound >= p.delta,
                    "additive_lower: step_bound must be >= delta (steps cannot be smaller than the drift)");
    return p.x0_mean / p.delta;
}

// ---- multiplicative drift ----
//
// States live in {0, 1} union a subset of (1, inf); the potential shrinks by
// a delta fraction per step in expectation: E[T] <= (1 + ln x0_mean) / delta.
// Values in (0, 1) are outside the theorem's state space and rejected.
inline double multiplicative_upper(const DriftParameters& p) {
    detail::require_finite(p.x0_mean, "multiplicative_upper: x0_mean must be finite");
    detail::require_finite(p.delta, "multiplicative_upper: delta must be finite");
    detail::require(p.x0_mean >= 1.0, "multiplicative_upper: x0_mean must be >= 1");
    detail::require(p.delta > 0.0, "multiplicative_upper: delta must be > 0");
    return (1.0 + std::log(p.x0_mean)) / p.delta;
}

struct TailBound {
    double threshold = 0.0;   // step count t such that Pr[T > t] <= prob_bound
    double prob_bound = 0.0;  // exp(-k)
};

// Tail of the multiplicative drift theorem, for a deterministic start s:
// Pr[T > (k + ln s) / delta] <= exp(-k), for every k > 0.
inline TailBound multiplicative_tail(double s, double delta, double k) {
    detail::require_finite(s, "multiplicative_tail: s must be finite");
    detail::require_finite(delta, "multiplicative_tail: delta must be finite");
    detail::require_finite(k, "multiplicative_tail: k must be finite");
    detail::require(s >= 1.0, "multiplicative_tail: s must be >= 1");
    detail::require(delta > 0.0, "multiplicative_tail: delta must be > 0");
    detail::require(k > 0.0, "multiplicative_tail: k must be > 0");
    return TailBound{(k + std::log(s)) / delta, std::exp(-k)};
}

// ---- variable drift ----

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;  // accumulated Richardson error of the quadrature
};

namespace detail {

// Adaptive Simpson with Richardson correction. Splits until the local
// Simpson estimates agree to the local tolerance or the depth cap is hit.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double fa, double fm, double fb, double whole, double tol,
                               int depth, double& err) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        err += std::abs(delta) / 15.0;
        return left + right + delta / 15.0;
    }
    return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err) +
           adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err);
}

inline QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                                  double tol) {
    if (a == b) return {0.0, 0.0};
    const double m = 0.5 * (a + b);
    const double fa = f(a);
    const double fm = f(m);
    const double fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    QuadratureResult out;
    out.value = adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 50, out.error_estimate);
    return out;
}

}  // namespace detail

// Drift at potential x is at least h(x), with h positive and monotone
// non-decreasing on [1, x0_mean]:
//
//   E[T] <= 1 / h(1) + integral over [1, x0_mean] of dx / h(x).
//
// Monotonicity and positivity are spot-checked on a 1024-interval geometric
// grid; a violation anywhere on the grid rejects the call (the theorem is
// simply false for non-monotone h, so this is an error, not a warning).
inline QuadratureResult variable_drift_upper(const std::function<double(double)>& h,
                                             double x0_mean, double tol = 1e-9) {
    detail::require_finite(x0_mean, "variable_drift_upper: x0_mean must be finite");
    detail::require(x0_mean >= 1.0, "variable_drift_upper: x0_mean must be >= 1");
    detail::require(tol > 0.0, "variable_drift_upper: tol must be > 0");

    constexpr int kGridPoints = 1025;
    const double ratio = x0_mean > 1.0 ? std::pow(x0_mean, 1.0 / (kGridPoints - 1)) : 1.0;
    double x = 1.0;
    double prev = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < kGridPoints; ++i) {
        const double hx = h(x);
        detail::require_finite(hx, "variable_drift_upper: h must be finite on [1, x0_mean]");
        detail::require(hx > 0.0, "variable_drift_upper: h must be positive on [1, x0_mean]");
        detail::require(hx >= prev * (1.0 - 1e-12),
                        "variable_drift_upper: h must be monotone non-decreasing on [1, x0_mean]");
        prev = hx;
        x = (i + 2 == kGridPoints) ? x0_mean : x * ratio;
    }

    QuadratureResult out = detail::integrate([&h](double v) { return 1.0 / h(v); },
                                             1.0, x0_mean, tol);
    out.value += 1.0 / h(1.0);
    return out;
}

// ---- zero drift over an interval ----
//
// Potential is a martingale absorbed at the ends of [a, b], staying inside
// the interval, with conditional variance at least (direction upper) or at
// most (direction lower) delta_var per step before absorption:
//
//   E[T] <= or >= (x0_mean - a)(b - x0_mean) / delta_var.
inline double martingale_interval_bound(const IntervalParameters& p, Direction direction) {
    detail::require_finite(p.a, "martingale_interval_bound: a must be finite");
    detail::require_finite(p.b, "martingale_interval_bound: b must be finite");
    detail::require_finite(p.x0_mean, "martingale_interval_bound: x0_mean must be finite");
    detail::require_finite(p.delta_var, "martingale_interval_bound: delta_var must be finite");
    detail::require(p.a < p.b, "martingale_interval_bound: need a < b");
    detail::require(p.a <= p.x0_mean && p.x0_mean <= p.b,
                    "martingale_interval_bound: x0_mean must lie in [a, b]");
    detail::require(p.delta_var > 0.0, "martingale_interval_bound: delta_var must be > 0");
    detail::require(direction != Direction::exact,
                    "martingale_interval_bound: direction must be upper or lower");
    return (p.x0_mean - p.a) * (p.b - p.x0_mean) / p.delta_var;
}

// ---- barrier walks ----
//
// Fair lazy walk on {0, ..., n}, both endpoints absorbing, interior states
// move up or down with probability p each: E[T] = x0 (n - x0) / (2p), exactly.
inline double two_barrier_expected_time(std::int64_t n, std::int64_t x0, double p) {
    detail::require(n >= 1, "two_barrier_expected_time: n must be >= 1");
    detail::require(x0 >= 0 && x0 <= n, "two_barrier_expected_time: x0 must be in [0, n]");
    detail::require_finite(p, "two_barrier_expected_time: p must be finite");
    detail::require(p > 0.0 && p <= 0.5, "two_barrier_expected_time: p must be in (0, 1/2]");
    return static_cast<double>(x0) * static_cast<double>(n - x0) / (2.0 * p);
}

// Same walk with only n absorbing; from 0 the walk moves to 1 with
// probability 2p and stays otherwise. Started at 0 it reaches n in exactly
// n^2 / (2p) expected steps (it mirrors the two-barrier walk on {0, ..., 2n}
// started in the middle).
inline double one_barrier_expected_time(std::int64_t n, double p) {
    detail::require(n >= 1, "one_barrier_expected_time: n must be >= 1");
    detail::require_finite(p, "one_barrier_expected_time: p must be finite");
    detail::require(p > 0.0 && p <= 0.5, "one_barrier_expected_time: p must be in (0, 1/2]");
    return static_cast<double>(n) * static_cast<double>(n) / (2.0 * p);
}

// ---- Moran process with fitness ratio r ----
//
// k counts the non-mutants; one step replaces a uniformly chosen individual
// by a copy of a fitness-weighted parent. For interior k the count rises
// with probability
//
//   p(k) = [k / (k + r (n - k))] * [(n - k) / n]
//
// and falls with probability r * p(k). Absorbing k in {0, n} is out of
// domain here; the chain builders handle the boundary.
inline double moran_p(const MoranParameters& m) {
    detail::require(m.n >= 2, "moran_p: n must be >= 2");
    detail::require_finite(m.r, "moran_p: r must be finite");
    detail::require(m.r > 0.0, "moran_p: r must be > 0");
    detail::require(m.k > 0 && m.k < m.n, "moran_p: k must satisfy 0 < k < n");
    const double kd = static_cast<double>(m.k);
    const double nd = static_cast<double>(m.n);
    return (kd / (kd + m.r * (nd - kd))) * ((nd - kd) / nd);
}

namespace detail {

// Potential-function bound shared by both fitness regimes. up(w) is the
// probability that the distance w from the favored absorbing state rises by
// one; a fall is rho times as likely as a rise, rho > 1. Solving
//
//   g(n-1) = 1 / up(n-1),
//   g(w)   = (rho - 1) / (rho * up(w)) + g(w+1) / rho
//
// backward and summing over the starting distance gives
//
//   E[T from distance d] <= (g(1) + ... + g(d)) / (rho - 1).
inline double weighted_distance_bound(std::int64_t n, double rho,
                                      const std::function<double(std::int64_t)>& up,
                                      std::int64_t start_distance) {
    std::vector<double> g(static_cast<std::size_t>(n), 0.0);
    g[static_cast<std::size_t>(n - 1)] = 1.0 / up(n - 1);
    for (std::int64_t w = n - 2; w >= 1; --w) {
        g[static_cast<std::size_t>(w)] =
            (rho - 1.0) / (rho * up(w)) + g[static_cast<std::size_t>(w + 1)] / rho;
    }
    double sum = 0.0;
    for (std::int64_t w = 1; w <= start_distance; ++w) sum += g[static_cast<std::size_t>(w)];
    return sum / (rho - 1.0);
}

}  // namespace detail

// Expected absorption time of the Moran process started from one mutant
// (non-mutant count n - 1), bounded through the weighted-distance potential.
// For r > 1 the mutant tends to spread: the distance is the non-mutant count
// itself, starting at n - 1. For r < 1 the roles mirror: the distance is the
// mutant count, starting at 1, and the fall-to-rise ratio becomes 1/r.
// Refuses r within 1e-6 of 1, where the (r - 1) denominators lose precision;
// that regime belongs to moran_neutral_bound.
inline double moran_potential_bound(std::int64_t n, double r) {
    detail::require(n >= 2, "moran_potential_bound: n must be >= 2");
    detail::require_finite(r, "moran_potential_bound: r must be finite");
    detail::require(r > 0.0, "moran_potential_bound: r must be > 0");
    detail::require(std::abs(r - 1.0) >= 1e-6,
                    "moran_potential_bound: r must differ from 1 (use moran_neutral_bound)");
    if (r > 1.0) {
        return detail::weighted_distance_bound(
            n, r, [n, r](std::int64_t k) { return moran_p({n, r, k}); }, n - 1);
    }
    // Mutant count w corresponds to non-mutant count n - w; the mutant count
    // rises with probability r * p(n - w) and falls with probability p(n - w),
    // a factor 1/r more often than it rises.
    return detail::weighted_distance_bound(
        n, 1.0 / r, [n, r](std::int64_t w) { return r * moran_p({n, r, n - w}); }, 1);
}

// Neutral Moran process (r = 1) started from a single mutant: the mutant
// count is a martingale on [0, n] with conditional variance at least
// 2 (n - 1) / n^2 before absorption, so E[T] <= n^2 / 2.
inline double moran_neutral_bound(std::int64_t n) {
    detail::require(n >= 2, "moran_neutral_bound: n must be >= 2");
    return static_cast<double>(n) * static_cast<double>(n) / 2.0;
}

}  // namespace bounds
}  // namespace driftkit
