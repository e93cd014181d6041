#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "../process.hpp"
#include "../random.hpp"

// Lazy +/-1 random walks on {0, ..., n} with parameter p in (0, 1/2]:
//
//  * two_barrier -- both 0 and n absorb; interior states move up or down
//    with probability p each, stay with probability 1 - 2p.
//  * one_barrier -- only n absorbs; interior states move as above, and 0
//    reflects to 1 with probability 2p (staying otherwise), which keeps the
//    walk's non-lazy step distribution symmetric under the fold that maps it
//    to a two-barrier walk of doubled width.
//
// Potentials: the two-barrier walk reports its position (a martingale); the
// one-barrier walk reports the remaining distance n - position, which hits 0
// at absorption.

namespace driftkit {

enum class BarrierVariant { two_barrier, one_barrier };

struct BarrierWalkState {
    std::int64_t position = 0;
};

class BarrierProcess {
public:
    using state_type = BarrierWalkState;

    BarrierProcess(std::int64_t n, double p, BarrierVariant variant, std::int64_t x0)
        : n_(n), p_(p), variant_(variant), x0_(x0) {
        if (n < 1) throw std::invalid_argument("BarrierProcess: n must be >= 1");
        if (!(p > 0.0 && p <= 0.5))
            throw std::invalid_argument("BarrierProcess: p must be in (0, 1/2]");
        if (x0 < 0 || x0 > n)
            throw std::invalid_argument("BarrierProcess: x0 must be in [0, n]");
    }

    std::string_view name() const {
        return variant_ == BarrierVariant::two_barrier ? "two_barrier" : "one_barrier";
    }

    std::int64_t n() const { return n_; }
    double p() const { return p_; }
    std::int64_t x0() const { return x0_; }
    BarrierVariant variant() const { return variant_; }

    state_type initial_state(RandomStream&) const { return {x0_}; }

    state_type step(const state_type& s, RandomStream& rng) const {
        if (absorbed(s)) return s;
        const double u = rng.uniform01();
        state_type next = s;
        if (s.position == 0) {
            // Reachable only in the one-barrier variant: reflect upward.
            if (u < 2.0 * p_) next.position = 1;
            return next;
        }
        if (u < p_) ++next.position;
        else if (u < 2.0 * p_) --next.position;
        return next;
    }

    double potential(const state_type& s) const {
        return variant_ == BarrierVariant::two_barrier
                   ? static_cast<double>(s.position)
                   : static_cast<double>(n_ - s.position);
    }

    bool absorbed(const state_type& s) const {
        if (variant_ == BarrierVariant::two_barrier)
            return s.position == 0 || s.position == n_;
        return s.position == n_;
    }

private:
    std::int64_t n_;
    double p_;
    BarrierVariant variant_;
    std::int64_t x0_;
};

}  // namespace driftkit
