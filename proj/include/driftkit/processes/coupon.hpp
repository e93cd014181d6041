#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "../process.hpp"
#include "../random.hpp"

// Coupon collector: the potential is the number of kinds still missing.
// Two arrival models:
//  * uniform -- each step draws one kind uniformly from the n kinds;
//  * per_kind -- each step offers every missing kind independently with
//    probability p (the simplest member of the generalized family where kind
//    i arrives with probability at least p each round).

namespace driftkit {

struct CouponCollectorState {
    std::vector<char> missing;  // one flag per kind
    std::int64_t missing_count = 0;
};

class CouponProcess {
public:
    enum class Model { uniform, per_kind };

    using state_type = CouponCollectorState;

    explicit CouponProcess(std::int64_t n, Model model = Model::uniform, double per_kind_p = 0.0)
        : n_(n), model_(model), per_kind_p_(per_kind_p) {
        if (n < 1) throw std::invalid_argument("CouponProcess: n must be >= 1");
        if (model == Model::per_kind && !(per_kind_p > 0.0 && per_kind_p <= 1.0))
            throw std::invalid_argument("CouponProcess: per-kind p must be in (0, 1]");
    }

    std::string_view name() const {
        return model_ == Model::uniform ? "coupon" : "coupon_per_kind";
    }

    std::int64_t n() const { return n_; }

    state_type initial_state(RandomStream&) const {
        return {std::vector<char>(static_cast<std::size_t>(n_), 1), n_};
    }

    state_type step(const state_type& s, RandomStream& rng) const {
        if (absorbed(s)) return s;
        state_type next = s;
        if (model_ == Model::uniform) {
            const auto kind = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_)));
            if (next.missing[kind]) {
                next.missing[kind] = 0;
                --next.missing_count;
            }
        } else {
            for (std::size_t kind = 0; kind < next.missing.size(); ++kind) {
                if (next.missing[kind] && rng.bernoulli(per_kind_p_)) {
                    next.missing[kind] = 0;
                    --next.missing_count;
                }
            }
        }
        return next;
    }

    double potential(const state_type& s) const { return static_cast<double>(s.missing_count); }

    bool absorbed(const state_type& s) const { return s.missing_count == 0; }

private:
    std::int64_t n_;
    Model model_;
    double per_kind_p_;
};

}  // namespace driftkit
