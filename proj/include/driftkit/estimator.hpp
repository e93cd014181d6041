#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "bounds.hpp"
#include "process.hpp"

// Empirical drift recovery: group observed one-step changes of the potential
// by pre-state, summarize each bin, then fit a drift regime and evaluate the
// matching theorem with a conservatively estimated delta. The theorems need
// a uniform bound over all states, so delta_hat is the minimum over bins of
// a lower confidence limit, never a pooled mean.

namespace driftkit::estimator {

// Power sums of the one-step drop X_t - X_{t+1}; merging two bins is exact,
// so parallel aggregation in any order yields identical statistics.
struct BinStats {
    double state = 0.0;  // representative pre-state value s
    std::uint64_t count = 0;
    double sum = 0.0;
    double sum2 = 0.0;
    double sum3 = 0.0;
    double sum4 = 0.0;

    void add(double drop) {
        ++count;
        sum += drop;
        const double d2 = drop * drop;
        sum2 += d2;
        sum3 += d2 * drop;
        sum4 += d2 * d2;
    }

    void merge(const BinStats& other) {
        count += other.count;
        sum += other.sum;
        sum2 += other.sum2;
        sum3 += other.sum3;
        sum4 += other.sum4;
    }

    double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }

    // Unbiased sample variance; 0 when undefined.
    double variance() const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        return std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0));
    }

    double mean_ci_half(double z) const {
        if (count < 2) return 0.0;
        return z * std::sqrt(variance() / static_cast<double>(count));
    }

    // Normal-approximation half-width for the sample variance, from the
    // asymptotic Var(S^2) = mu4 / n - sigma^4 (n - 3) / (n (n - 1)).
    double variance_ci_half(double z) const {
        if (count < 2) return 0.0;
        const double n = static_cast<double>(count);
        const double m = mean();
        const double m2 = std::max(0.0, sum2 / n - m * m);
        const double mu4 = std::max(
            0.0, sum4 / n - 4.0 * m * sum3 / n + 6.0 * m * m * sum2 / n - 3.0 * m * m * m * m);
        const double var_of_var = std::max(0.0, mu4 / n - m2 * m2 * (n - 3.0) / (n * (n - 1.0)));
        return z * std::sqrt(var_of_var);
    }
};

struct Binning {
    enum class Mode { exact_integer, fixed_width };
    Mode mode = Mode::exact_integer;
    double width = 0.0;  // fixed_width only; <= 0 requests Freedman-Diaconis
};

struct DriftEstimate {
    Binning binning;
    double width = 0.0;  // resolved bin width (fixed_width mode)
    std::map<std::int64_t, BinStats> bins;
    std::uint64_t total_transitions = 0;
};

// Freedman-Diaconis width over the observed pre-states: 2 IQR / m^(1/3),
// with fallbacks for degenerate spreads.
inline double freedman_diaconis_width(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("freedman_diaconis_width: no values");
    std::sort(values.begin(), values.end());
    const auto quantile = [&](double q) {
        const double h = q * (static_cast<double>(values.size()) - 1.0);
        const auto lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    if (iqr > 0.0)
        return 2.0 * iqr / std::cbrt(static_cast<double>(values.size()));
    const double spread = values.back() - values.front();
    return spread > 0.0 ? spread / 16.0 : 1.0;
}

inline DriftEstimate estimate_drift(const std::vector<Trajectory>& trajectories,
                                    Binning binning = {}) {
    DriftEstimate est;
    est.binning = binning;

    if (binning.mode == Binning::Mode::fixed_width) {
        if (binning.width > 0.0) {
            est.width = binning.width;
        } else {
            std::vector<double> pre_states;
            for (const auto& tr : trajectories)
                for (std::size_t t = 0; t + 1 < tr.potentials.size(); ++t)
                    pre_states.push_back(tr.potentials[t]);
            if (pre_states.empty())
                throw std::invalid_argument("estimate_drift: no transitions in input");
            est.width = freedman_diaconis_width(std::move(pre_states));
        }
    }

    for (const auto& tr : trajectories) {
        for (std::size_t t = 0; t + 1 < tr.potentials.size(); ++t) {
            const double pre = tr.potentials[t];
            const double drop = pre - tr.potentials[t + 1];
            std::int64_t key = 0;
            double representative = 0.0;
            if (binning.mode == Binning::Mode::exact_integer) {
                const double rounded = std::nearbyint(pre);
                if (std::abs(pre - rounded) > 1e-9)
                    throw std::invalid_argument(
                        "estimate_drift: non-integer potential under exact_integer binning; "
                        "use fixed-width bins");
                key = static_cast<std::int64_t>(rounded);
                representative = rounded;
            } else {
                key = static_cast<std::int64_t>(std::floor(pre / est.width));
                representative = (static_cast<double>(key) + 0.5) * est.width;
            }
            auto& bin = est.bins[key];
            bin.state = representative;
            bin.add(drop);
            ++est.total_transitions;
        }
    }
    if (est.total_transitions == 0)
        throw std::invalid_argument("estimate_drift: no transitions in input");
    return est;
}

enum class Regime { additive, multiplicative, zero_drift, negative, unknown };

inline std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::additive:       return "additive";
        case Regime::multiplicative: return "multiplicative";
        case Regime::zero_drift:     return "zero_drift";
        case Regime::negative:       return "negative";
        case Regime::unknown:        return "unknown";
    }
    throw std::logic_error("to_string: unknown regime");
}

struct RegimeFit {
    Regime regime = Regime::unknown;
    double delta_hat = 0.0;
    double goodness = 0.0;  // weighted relative residual of the fitted shape; lower is better
    std::uint64_t bins_used = 0;
    std::uint64_t bins_excluded = 0;  // undersampled or out-of-domain bins left out
};

struct FitOptions {
    std::uint64_t min_count = 30;         // bins below this do not participate
    double z = 1.959963984540054;         // two-sided 95%
};

namespace detail {

inline std::vector<const BinStats*> usable_bins(const DriftEstimate& est, const FitOptions& opt,
                                                std::uint64_t& excluded) {
    std::vector<const BinStats*> used;
    excluded = 0;
    for (const auto& [key, bin] : est.bins) {
        if (bin.count >= opt.min_count) used.push_back(&bin);
        else ++excluded;
    }
    return used;
}

// Count-weighted constant fit; residual is the weighted RMS deviation
// relative to the fitted constant's magnitude.
inline double constant_fit_residual(const std::vector<double>& values,
                                    const std::vector<double>& weights) {
    double total_weight = 0.0;
    double weighted_sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total_weight += weights[i];
        weighted_sum += weights[i] * values[i];
    }
    const double constant = weighted_sum / total_weight;
    double ss = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double dev = values[i] - constant;
        ss += weights[i] * dev * dev;
    }
    const double rms = std::sqrt(ss / total_weight);
    return rms / std::max(std::abs(constant), 1e-300);
}

}  // namespace detail

// Additive fit: delta_hat is the smallest lower confidence limit of the
// per-bin mean drop. Conservative: a valid uniform drift bound whenever each
// bin's CI covers its true mean. Rejects data whose drift is not resolvably
// positive (some bin's CI touches or crosses 0).
inline RegimeFit fit_additive(const DriftEstimate& est, const FitOptions& opt = {}) {
    RegimeFit fit;
    const auto used = detail::usable_bins(est, opt, fit.bins_excluded);
    if (used.empty())
        throw std::invalid_argument("fit_additive: every bin is below the minimum count");
    fit.bins_used = used.size();

    double delta_hat = std::numeric_limits<double>::infinity();
    std::vector<double> means, weights;
    for (const BinStats* bin : used) {
        delta_hat = std::min(delta_hat, bin->mean() - bin->mean_ci_half(opt.z));
        means.push_back(bin->mean());
        weights.push_back(static_cast<double>(bin->count));
    }
    if (!(delta_hat > 0.0))
        throw std::domain_error(
            "fit_additive: drift is not resolvably positive (a bin's confidence interval "
            "reaches 0); the additive theorem does not apply");
    fit.regime = Regime::additive;
    fit.delta_hat = delta_hat;
    fit.goodness = detail::constant_fit_residual(means, weights);
    return fit;
}

// Multiplicative fit: same rule on the normalized drop mean / s. Bins below
// s = 1 are outside the theorem's state space and excluded.
inline RegimeFit fit_multiplicative(const DriftEstimate& est, const FitOptions& opt = {}) {
    RegimeFit fit;
    auto used = detail::usable_bins(est, opt, fit.bins_excluded);
    std::erase_if(used, [&fit](const BinStats* bin) {
        if (bin->state < 1.0) {
            ++fit.bins_excluded;
            return true;
        }
        return false;
    });
    if (used.empty())
        throw std::invalid_argument(
            "fit_multiplicative: no usable bins at s >= 1 with the minimum count");
    fit.bins_used = used.size();

    double delta_hat = std::numeric_limits<double>::infinity();
    std::vector<double> ratios, weights;
    for (const BinStats* bin : used) {
        delta_hat = std::min(delta_hat, (bin->mean() - bin->mean_ci_half(opt.z)) / bin->state);
        ratios.push_back(bin->mean() / bin->state);
        weights.push_back(static_cast<double>(bin->count));
    }
    if (!(delta_hat > 0.0))
        throw std::domain_error(
            "fit_multiplicative: normalized drift is not resolvably positive; the "
            "multiplicative theorem does not apply");
    fit.regime = Regime::multiplicative;
    fit.delta_hat = delta_hat;
    fit.goodness = detail::constant_fit_residual(ratios, weights);
    return fit;
}

struct VarianceBound {
    double delta_lower = 0.0;  // min over bins of the variance's lower confidence limit
    double delta_upper = 0.0;  // max over bins of the variance's upper confidence limit
};

// Conditional-variance bracket for the martingale interval bound: the lower
// end feeds its upper-bound case, the upper end its lower-bound case.
inline VarianceBound estimate_variance_bound(const DriftEstimate& est, const FitOptions& opt = {}) {
    std::uint64_t excluded = 0;
    const auto used = detail::usable_bins(est, opt, excluded);
    if (used.empty())
        throw std::invalid_argument("estimate_variance_bound: every bin is below the minimum count");
    VarianceBound out;
    out.delta_lower = std::numeric_limits<double>::infinity();
    out.delta_upper = 0.0;
    for (const BinStats* bin : used) {
        const double half = bin->variance_ci_half(opt.z);
        out.delta_lower = std::min(out.delta_lower, std::max(0.0, bin->variance() - half));
        out.delta_upper = std::max(out.delta_upper, bin->variance() + half);
    }
    return out;
}

// Decision procedure: zero drift if every bin's mean CI contains 0; negative
// if every bin's mean CI sits below 0; otherwise compare how well a constant
// explains the raw drops versus the drops normalized by s, and require one
// residual to beat the other by a factor of 2 before committing.
inline RegimeFit classify_regime(const DriftEstimate& est, const FitOptions& opt = {}) {
    RegimeFit fit;
    const auto used = detail::usable_bins(est, opt, fit.bins_excluded);
    if (used.empty()) return fit;  // unknown
    fit.bins_used = used.size();

    bool all_contain_zero = true;
    bool all_below_zero = true;
    for (const BinStats* bin : used) {
        const double half = bin->mean_ci_half(opt.z);
        if (std::abs(bin->mean()) > half) all_contain_zero = false;
        if (bin->mean() + half >= 0.0) all_below_zero = false;
    }
    if (all_contain_zero) {
        fit.regime = Regime::zero_drift;
        try {
            fit.delta_hat = estimate_variance_bound(est, opt).delta_lower;
        } catch (const std::invalid_argument&) {
            fit.delta_hat = 0.0;
        }
        double worst = 0.0;
        for (const BinStats* bin : used) {
            const double half = bin->mean_ci_half(opt.z);
            if (half > 0.0) worst = std::max(worst, std::abs(bin->mean()) / half);
        }
        fit.goodness = worst;
        return fit;
    }
    if (all_below_zero) {
        fit.regime = Regime::negative;
        fit.delta_hat = 0.0;
        std::vector<double> means, weights;
        for (const BinStats* bin : used) {
            means.push_back(bin->mean());
            weights.push_back(static_cast<double>(bin->count));
        }
        fit.goodness = detail::constant_fit_residual(means, weights);
        return fit;
    }

    std::vector<double> means, weights, ratios, ratio_weights;
    for (const BinStats* bin : used) {
        means.push_back(bin->mean());
        weights.push_back(static_cast<double>(bin->count));
        if (bin->state >= 1.0) {
            ratios.push_back(bin->mean() / bin->state);
            ratio_weights.push_back(static_cast<double>(bin->count));
        }
    }
    const double residual_additive = detail::constant_fit_residual(means, weights);
    const double residual_multiplicative =
        ratios.empty() ? std::numeric_limits<double>::infinity()
                       : detail::constant_fit_residual(ratios, ratio_weights);

    constexpr double kRatioThreshold = 2.0;
    const auto attempt = [&](auto&& fitter) -> std::optional<RegimeFit> {
        try {
            return fitter(est, opt);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    if (residual_additive >= kRatioThreshold * residual_multiplicative) {
        if (auto r = attempt([](const DriftEstimate& e, const FitOptions& o) {
                return fit_multiplicative(e, o);
            }))
            return *r;
    } else if (residual_multiplicative >= kRatioThreshold * residual_additive) {
        if (auto r = attempt([](const DriftEstimate& e, const FitOptions& o) {
                return fit_additive(e, o);
            }))
            return *r;
    }
    fit.regime = Regime::unknown;
    fit.delta_hat = 0.0;
    fit.goodness = std::min(residual_additive, residual_multiplicative);
    return fit;
}

// Evaluate the theorem matching the fitted regime at delta_hat. zero_drift
// needs the absorbing interval [a, b]; the bound is then Lemma-style
// (x0 - a)(b - x0) / delta_hat with delta_hat read as a variance floor.
inline BoundReport predict_hitting_time(const RegimeFit& fit, double x0,
                                        std::optional<bounds::IntervalParameters> interval = {}) {
    BoundReport report;
    switch (fit.regime) {
        case Regime::additive: {
            report.theorem = Theorem::additive_upper;
            report.inputs = {{"x0_mean", x0}, {"delta", fit.delta_hat}};
            report.bound = bounds::additive_upper({x0, fit.delta_hat, {}});
            report.direction = Direction::upper;
            return report;
        }
        case Regime::multiplicative: {
            report.theorem = Theorem::multiplicative;
            report.inputs = {{"x0_mean", x0}, {"delta", fit.delta_hat}};
            report.bound = bounds::multiplicative_upper({x0, fit.delta_hat, {}});
            report.direction = Direction::upper;
            return report;
        }
        case Regime::zero_drift: {
            if (!interval.has_value())
                throw std::invalid_argument(
                    "predict_hitting_time: zero_drift requires the absorbing interval [a, b]");
            bounds::IntervalParameters params = *interval;
            params.x0_mean = x0;
            params.delta_var = fit.delta_hat;
            report.theorem = Theorem::martingale_upper;
            report.inputs = {{"a", params.a}, {"b", params.b}, {"x0_mean", x0},
                             {"delta_var", fit.delta_hat}};
            report.bound = bounds::martingale_interval_bound(params, Direction::upper);
            report.direction = Direction::upper;
            return report;
        }
        case Regime::negative:
            throw std::domain_error(
                "predict_hitting_time: negative drift gives exponential lower bounds, which "
                "are out of scope");
        case Regime::unknown:
            throw std::domain_error("predict_hitting_time: regime not identified");
    }
    throw std::logic_error("predict_hitting_time: unhandled regime");
}

}  // namespace driftkit::estimator
