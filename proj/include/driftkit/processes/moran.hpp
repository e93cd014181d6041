#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>

#include "../bounds.hpp"
#include "../process.hpp"
#include "../random.hpp"

// Moran process: a population of n individuals, mutants of fitness r against
// non-mutants of fitness 1. Each step picks a parent with probability
// proportional to fitness and replaces a uniformly chosen individual with its
// copy. Tracking k, the non-mutant count, gives a birth-death walk that
// rises with probability p(k) and falls with probability r * p(k); both
// k = 0 (fixation) and k = n (extinction of the mutant) absorb. The default
// start is a single mutant, k = n - 1.

namespace driftkit {

struct MoranState {
    std::int64_t non_mutants = 0;
};

class MoranProcess {
public:
    using state_type = MoranState;

    MoranProcess(std::int64_t n, double r, std::int64_t start)
        : n_(n), r_(r), start_(start) {
        if (n < 2) throw std::invalid_argument("MoranProcess: n must be >= 2");
        if (!(r > 0.0)) throw std::invalid_argument("MoranProcess: r must be > 0");
        if (start < 0 || start > n)
            throw std::invalid_argument("MoranProcess: start must be in [0, n]");
    }

    MoranProcess(std::int64_t n, double r) : MoranProcess(n, r, n - 1) {}

    std::string_view name() const { return "moran"; }

    std::int64_t n() const { return n_; }
    double r() const { return r_; }
    std::int64_t start() const { return start_; }

    state_type initial_state(RandomStream&) const { return {start_}; }

    state_type step(const state_type& s, RandomStream& rng) const {
        if (absorbed(s)) return s;
        const double pk = bounds::moran_p({n_, r_, s.non_mutants});
        if ((1.0 + r_) * pk > 1.0 + 1e-12)
            throw std::logic_error("MoranProcess: transition probabilities exceed 1");
        const double u = rng.uniform01();
        state_type next = s;
        if (u < pk) ++next.non_mutants;
        else if (u < pk + r_ * pk) --next.non_mutants;
        return next;
    }

    double potential(const state_type& s) const { return static_cast<double>(s.non_mutants); }

    bool absorbed(const state_type& s) const {
        return s.non_mutants == 0 || s.non_mutants == n_;
    }

private:
    std::int64_t n_;
    double r_;
    std::int64_t start_;
};

}  // namespace driftkit
