#pragma once

#include <concepts>
#include <cstdint>
#include <string_view>
#include <vector>

#include "random.hpp"

// A process couples a Markov chain with a real-valued potential. Simulation
// stops when the chain is absorbed (potential has hit its target) or when the
// step budget runs out, in which case the sample is censored.

namespace driftkit {

template <class P>
concept Process = requires(const P& proc, const typename P::state_type& s, RandomStream& rng) {
    { proc.name() } -> std::convertible_to<std::string_view>;
    { proc.initial_state(rng) } -> std::same_as<typename P::state_type>;
    { proc.step(s, rng) } -> std::same_as<typename P::state_type>;
    { proc.potential(s) } -> std::convertible_to<double>;
    { proc.absorbed(s) } -> std::convertible_to<bool>;
};

struct HittingTimeSample {
    std::uint64_t steps = 0;
    bool censored = false;
};

struct Trajectory {
    std::uint64_t seed = 0;
    HittingTimeSample hit;
    // Potential at t = 0, 1, ..., hit.steps; empty unless recording was on.
    std::vector<double> potentials;
};

struct SimulateOptions {
    std::uint64_t max_steps = 0;
    bool record_potentials = false;
};

template <Process P>
Trajectory simulate(const P& proc, std::uint64_t seed, const SimulateOptions& opt) {
    RandomStream rng(seed);
    auto state = proc.initial_state(rng);
    Trajectory out;
    out.seed = seed;
    if (opt.record_potentials) out.potentials.push_back(proc.potential(state));
    std::uint64_t t = 0;
    while (!proc.absorbed(state) && t < opt.max_steps) {
        state = proc.step(state, rng);
        ++t;
        if (opt.record_potentials) out.potentials.push_back(proc.potential(state));
    }
    out.hit.steps = t;
    out.hit.censored = !proc.absorbed(state);
    return out;
}

}  // namespace driftkit
