#pragma once

#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "../cnf.hpp"
#include "../process.hpp"
#include "../random.hpp"

// Randomized repair walk for satisfiable 2-CNF formulas: start from a
// uniformly random assignment; while an unsatisfied clause exists, pick one
// uniformly at random and flip one of its two variables with probability 1/2
// each. Unsatisfied clauses are tracked incrementally through per-variable
// occurrence lists, so a step costs the flipped variable's degree rather
// than a scan of the whole formula.
//
// The analysis potential is n minus the number of variables agreeing with a
// fixed satisfying reference assignment; an unsatisfied clause has at least
// one variable disagreeing with the reference, so the potential falls with
// probability at least 1/2 per step.

namespace driftkit {

struct TwoSatState {
    std::vector<char> assignment;
    std::vector<int> unsat;       // ids of currently unsatisfied clauses
    std::vector<int> unsat_slot;  // clause id -> index in unsat, or -1
    std::int64_t agree = 0;
};

class TwoSatProcess {
public:
    using state_type = TwoSatState;

    TwoSatProcess(Cnf formula, std::vector<char> reference)
        : formula_(std::move(formula)), reference_(std::move(reference)) {
        formula_.validate();
        if (formula_.n_vars < 1)
            throw std::invalid_argument("TwoSatProcess: need at least one variable");
        if (!satisfies(formula_, reference_))
            throw std::invalid_argument("TwoSatProcess: reference assignment does not satisfy the formula");
        occurrences_.assign(static_cast<std::size_t>(formula_.n_vars), {});
        for (std::size_t c = 0; c < formula_.clauses.size(); ++c) {
            for (int lit : formula_.clauses[c]) {
                auto& occ = occurrences_[static_cast<std::size_t>(std::abs(lit) - 1)];
                if (occ.empty() || occ.back() != static_cast<int>(c)) occ.push_back(static_cast<int>(c));
            }
        }
    }

    std::string_view name() const { return "two_sat"; }

    const Cnf& formula() const { return formula_; }
    std::int64_t n_vars() const { return formula_.n_vars; }

    state_type initial_state(RandomStream& rng) const {
        state_type s;
        s.assignment.resize(static_cast<std::size_t>(formula_.n_vars));
        for (auto& value : s.assignment) value = rng.bernoulli(0.5) ? 1 : 0;
        s.unsat_slot.assign(formula_.clauses.size(), -1);
        for (std::size_t c = 0; c < formula_.clauses.size(); ++c) {
            if (!clause_satisfied(formula_.clauses[c], s.assignment)) {
                s.unsat_slot[c] = static_cast<int>(s.unsat.size());
                s.unsat.push_back(static_cast<int>(c));
            }
        }
        s.agree = 0;
        for (std::size_t v = 0; v < s.assignment.size(); ++v)
            if (s.assignment[v] == reference_[v]) ++s.agree;
        return s;
    }

    state_type step(const state_type& s, RandomStream& rng) const {
        if (s.unsat.empty()) return s;
        state_type next = s;
        const int clause = next.unsat[static_cast<std::size_t>(
            rng.below(static_cast<std::uint64_t>(next.unsat.size())))];
        const int lit = formula_.clauses[static_cast<std::size_t>(clause)][rng.bernoulli(0.5) ? 1 : 0];
        const auto v = static_cast<std::size_t>(std::abs(lit) - 1);
        next.assignment[v] = next.assignment[v] ? 0 : 1;
        next.agree += next.assignment[v] == reference_[v] ? 1 : -1;
        for (int c : occurrences_[v]) {
            const bool sat = clause_satisfied(formula_.clauses[static_cast<std::size_t>(c)],
                                              next.assignment);
            const auto ci = static_cast<std::size_t>(c);
            if (!sat && next.unsat_slot[ci] < 0) {
                next.unsat_slot[ci] = static_cast<int>(next.unsat.size());
                next.unsat.push_back(c);
            } else if (sat && next.unsat_slot[ci] >= 0) {
                const int slot = next.unsat_slot[ci];
                const int moved = next.unsat.back();
                next.unsat[static_cast<std::size_t>(slot)] = moved;
                next.unsat_slot[static_cast<std::size_t>(moved)] = slot;
                next.unsat.pop_back();
                next.unsat_slot[ci] = -1;
            }
        }
        return next;
    }

    double potential(const state_type& s) const {
        return static_cast<double>(formula_.n_vars - s.agree);
    }

    bool absorbed(const state_type& s) const { return s.unsat.empty(); }

private:
    Cnf formula_;
    std::vector<char> reference_;
    std::vector<std::vector<int>> occurrences_;
};

}  // namespace driftkit
