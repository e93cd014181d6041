#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <driftkit/bounds.hpp>
#include <driftkit/estimator.hpp>
#include <driftkit/oracle.hpp>
#include <driftkit/process.hpp>
#include <driftkit/processes/barrier.hpp>
#include <driftkit/processes/coupon.hpp>

using namespace driftkit;
using namespace driftkit::estimator;

namespace {

Trajectory traj(std::vector<double> potentials) {
    Trajectory t;
    t.potentials = std::move(potentials);
    return t;
}

// n identical copies of one recorded run.
std::vector<Trajectory> repeat(const std::vector<double>& potentials, int n) {
    std::vector<Trajectory> out;
    for (int i = 0; i < n; ++i) out.push_back(traj(potentials));
    return out;
}

template <Process P>
std::vector<Trajectory> record(const P& proc, int replicates, std::uint64_t seed0,
                               std::uint64_t max_steps) {
    std::vector<Trajectory> out;
    for (int i = 0; i < replicates; ++i)
        out.push_back(simulate(proc, seed0 + static_cast<std::uint64_t>(i),
                               SimulateOptions{max_steps, true}));
    return out;
}

}  // namespace

TEST_CASE("constant drops are classified as additive drift") {
    // Potential falls by exactly 2 from 100 to 0; every bin sees the same
    // deterministic drop, so delta_hat is exactly 2.
    std::vector<double> run;
    for (int x = 100; x >= 0; x -= 2) run.push_back(x);
    const auto est = estimate_drift(repeat(run, 40));
    CHECK(est.total_transitions == 40 * 50);
    CHECK(est.bins.size() == 50);  // pre-states 100, 98, ..., 2

    const RegimeFit fit = classify_regime(est);
    REQUIRE(fit.regime == Regime::additive);
    CHECK(fit.delta_hat == 2.0);
    CHECK(fit.bins_used == 50);
    CHECK(fit.goodness < 1e-12);

    const BoundReport report = predict_hitting_time(fit, 100.0);
    CHECK(report.theorem == Theorem::additive_upper);
    CHECK(report.direction == Direction::upper);
    CHECK(report.bound == Catch::Approx(50.0));
}

TEST_CASE("proportional drops are classified as multiplicative drift") {
    // Halving walk 1024 -> 512 -> ... -> 1: the drop is exactly s/2 in every
    // bin, so the normalized drift is exactly 0.5 everywhere.
    std::vector<double> run;
    for (double x = 1024.0; x >= 1.0; x /= 2.0) run.push_back(x);
    const auto est = estimate_drift(repeat(run, 40));

    const RegimeFit fit = classify_regime(est);
    REQUIRE(fit.regime == Regime::multiplicative);
    CHECK(fit.delta_hat == Catch::Approx(0.5));
    CHECK(fit.goodness < 1e-12);

    const BoundReport report = predict_hitting_time(fit, 1024.0);
    CHECK(report.theorem == Theorem::multiplicative);
    CHECK(report.bound ==
          Catch::Approx(bounds::multiplicative_upper({1024.0, 0.5, {}})));
}

TEST_CASE("balanced ping-pong steps are classified as zero drift") {
    // From state 5 the potential moves to 4 or 6 equally often: the mean drop
    // is exactly 0 and the per-step variance is 1.
    std::vector<Trajectory> runs;
    for (int i = 0; i < 40; ++i) {
        runs.push_back(traj({5.0, 4.0}));
        runs.push_back(traj({5.0, 6.0}));
    }
    const auto est = estimate_drift(runs);
    REQUIRE(est.bins.size() == 1);

    const RegimeFit fit = classify_regime(est);
    REQUIRE(fit.regime == Regime::zero_drift);
    CHECK(fit.delta_hat > 0.9);
    CHECK(fit.delta_hat < 1.1);

    const VarianceBound var = estimate_variance_bound(est);
    CHECK(var.delta_lower <= 1.0);
    CHECK(var.delta_upper >= 1.0);

    // The martingale prediction needs the absorbing interval.
    CHECK_THROWS_AS(predict_hitting_time(fit, 5.0), std::invalid_argument);
    const BoundReport report =
        predict_hitting_time(fit, 5.0, bounds::IntervalParameters{0.0, 10.0, 0.0, 0.0});
    CHECK(report.theorem == Theorem::martingale_upper);
    CHECK(report.bound == Catch::Approx(25.0 / fit.delta_hat));
}

TEST_CASE("recorded two-barrier runs classify as zero drift at 3 sigma") {
    const BarrierProcess walk(16, 0.25, BarrierVariant::two_barrier, 8);
    const auto runs = record(walk, 300, 9000, 1u << 20);
    const auto est = estimate_drift(runs);

    // z = 3 keeps the per-bin false-alarm rate negligible across 15 bins.
    const FitOptions opt{30, 3.0};
    const RegimeFit fit = classify_regime(est, opt);
    REQUIRE(fit.regime == Regime::zero_drift);
    // True conditional variance of the drop is 2p = 0.5 in every bin.
    CHECK(fit.delta_hat > 0.35);
    CHECK(fit.delta_hat < 0.5);

    const BoundReport report = predict_hitting_time(
        fit, 8.0, bounds::IntervalParameters{0.0, 16.0, 0.0, 0.0});
    const double exact =
        oracle::birth_death_absorption_time(oracle::two_barrier_chain(16, 0.25), 8);
    CHECK(report.bound >= exact);
}

TEST_CASE("recorded coupon runs classify as multiplicative and beat the oracle") {
    const CouponProcess coupon(64);
    const auto runs = record(coupon, 500, 4000, 1u << 20);
    const auto est = estimate_drift(runs);

    const FitOptions opt{30, 3.0};
    const RegimeFit fit = classify_regime(est, opt);
    REQUIRE(fit.regime == Regime::multiplicative);
    // True normalized drift is exactly 1/64 in every bin; the estimate is a
    // lower confidence limit, so it sits just below that.
    CHECK(fit.delta_hat <= 1.0 / 64.0);
    CHECK(fit.delta_hat > 0.7 / 64.0);

    const BoundReport report = predict_hitting_time(fit, 64.0);
    CHECK(report.bound >= oracle::coupon_collector_exact(64));
}

TEST_CASE("exact integer binning rejects fractional potentials") {
    CHECK_THROWS_AS(estimate_drift({traj({0.5, 0.0})}), std::invalid_argument);
    CHECK_NOTHROW(estimate_drift({traj({0.5, 0.0})},
                                 {Binning::Mode::fixed_width, 1.0}));
}

TEST_CASE("fixed width binning resolves keys and representatives") {
    std::vector<Trajectory> runs;
    for (int i = 0; i < 40; ++i) {
        runs.push_back(traj({10.5, 8.5}));
        runs.push_back(traj({20.5, 16.5}));
    }
    const auto est = estimate_drift(runs, {Binning::Mode::fixed_width, 2.0});
    CHECK(est.width == 2.0);
    REQUIRE(est.bins.size() == 2);
    const auto& low = est.bins.at(5);    // floor(10.5 / 2)
    const auto& high = est.bins.at(10);  // floor(20.5 / 2)
    CHECK(low.state == 11.0);
    CHECK(high.state == 21.0);
    CHECK(low.count == 40);
    CHECK(low.mean() == Catch::Approx(2.0));
    CHECK(high.mean() == Catch::Approx(4.0));
}

TEST_CASE("unset width falls back to the Freedman-Diaconis rule") {
    std::vector<Trajectory> runs;
    for (int x = 0; x < 100; ++x)
        runs.push_back(traj({static_cast<double>(x) + 0.25, 0.0}));
    const auto est = estimate_drift(runs, {Binning::Mode::fixed_width, 0.0});
    CHECK(est.width > 0.0);
    // Pre-states 0.25 .. 99.25, IQR = 49.5: width = 2 * 49.5 / cbrt(100).
    CHECK(est.width == Catch::Approx(99.0 / std::cbrt(100.0)));

    CHECK_THROWS_AS(freedman_diaconis_width({}), std::invalid_argument);
    CHECK(freedman_diaconis_width({3.0, 3.0, 3.0}) == 1.0);  // zero spread
}

TEST_CASE("estimation requires at least one transition") {
    CHECK_THROWS_AS(estimate_drift({traj({5.0})}), std::invalid_argument);
    CHECK_THROWS_AS(estimate_drift({}), std::invalid_argument);
}

TEST_CASE("bin statistics are order independent") {
    std::mt19937_64 src(17);
    std::vector<double> drops;
    for (int i = 0; i < 200; ++i)
        drops.push_back(static_cast<double>(static_cast<int>(src() % 7)) - 3.0);

    BinStats forward;
    for (double d : drops) forward.add(d);
    BinStats backward;
    for (auto it = drops.rbegin(); it != drops.rend(); ++it) backward.add(*it);
    CHECK(forward.sum == backward.sum);
    CHECK(forward.sum2 == backward.sum2);
    CHECK(forward.sum3 == backward.sum3);
    CHECK(forward.sum4 == backward.sum4);

    // Merging is associative on integer-valued drops.
    BinStats a, b, c;
    for (int i = 0; i < 200; ++i) (i % 3 == 0 ? a : i % 3 == 1 ? b : c).add(drops[static_cast<std::size_t>(i)]);
    BinStats left = a;
    left.merge(b);
    left.merge(c);
    BinStats right = b;
    right.merge(c);
    BinStats total = a;
    total.merge(right);
    CHECK(left.count == total.count);
    CHECK(left.sum == total.sum);
    CHECK(left.sum2 == total.sum2);
    CHECK(left.sum4 == total.sum4);
}

TEST_CASE("drift estimates are invariant under trajectory order") {
    const CouponProcess coupon(16);
    auto runs = record(coupon, 50, 700, 1u << 20);
    const auto forward = estimate_drift(runs);
    std::reverse(runs.begin(), runs.end());
    const auto reversed = estimate_drift(runs);
    REQUIRE(forward.bins.size() == reversed.bins.size());
    for (const auto& [key, bin] : forward.bins) {
        const auto& other = reversed.bins.at(key);
        CHECK(bin.count == other.count);
        CHECK(bin.sum == other.sum);
        CHECK(bin.sum2 == other.sum2);
    }
}

TEST_CASE("fits reject undersampled and non-positive drift data") {
    // Five transitions per bin, all below the default minimum of 30.
    const auto sparse = estimate_drift(repeat({10, 8, 6, 4, 2, 0}, 5));
    CHECK_THROWS_AS(fit_additive(sparse), std::invalid_argument);
    CHECK_THROWS_AS(fit_multiplicative(sparse), std::invalid_argument);
    CHECK_THROWS_AS(estimate_variance_bound(sparse), std::invalid_argument);
    const RegimeFit fit = classify_regime(sparse);
    CHECK(fit.regime == Regime::unknown);
    CHECK(fit.bins_used == 0);
    CHECK(fit.bins_excluded == 5);

    // Zero-mean drops: the additive fit must refuse rather than report a
    // tiny positive delta.
    std::vector<Trajectory> balanced;
    for (int i = 0; i < 40; ++i) {
        balanced.push_back(traj({5.0, 4.0}));
        balanced.push_back(traj({5.0, 6.0}));
    }
    CHECK_THROWS_AS(fit_additive(estimate_drift(balanced)), std::domain_error);
    CHECK_THROWS_AS(fit_multiplicative(estimate_drift(balanced)), std::domain_error);
}

TEST_CASE("rising potentials are classified as negative drift") {
    std::vector<double> run;
    for (int x = 0; x <= 50; x += 1) run.push_back(x);
    const auto est = estimate_drift(repeat(run, 40));
    const RegimeFit fit = classify_regime(est);
    REQUIRE(fit.regime == Regime::negative);
    CHECK_THROWS_AS(predict_hitting_time(fit, 10.0), std::domain_error);

    RegimeFit unknown;
    CHECK_THROWS_AS(predict_hitting_time(unknown, 10.0), std::domain_error);
}

TEST_CASE("multiplicative fit skips bins below one") {
    // Halving walk continued below 1: the final bins are outside the
    // multiplicative theorem's state space.
    std::vector<double> run;
    for (double x = 64.0; x >= 0.25; x /= 2.0) run.push_back(x);
    const auto est = estimate_drift(repeat(run, 40), {Binning::Mode::fixed_width, 0.125});
    const RegimeFit fit = fit_multiplicative(est);
    CHECK(fit.regime == Regime::multiplicative);
    CHECK(fit.bins_excluded >= 1);
    CHECK(fit.delta_hat > 0.0);
}
