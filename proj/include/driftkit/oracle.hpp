#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "cnf.hpp"
#include "graph.hpp"

// Ground-truth computations, independent of both the bound formulas and the
// simulators: expected absorption times by linear solves, optima by brute
// force. Everything validated elsewhere in the toolkit traces back here.

namespace driftkit::oracle {

// Birth-death chain on {0, ..., n}. up[k] and down[k] are the one-step
// probabilities of k -> k+1 and k -> k-1; the remainder stays. Absorbing
// states must have zero move probability. Non-absorbing boundary states are
// allowed (the one-barrier walk reflects at 0), so up/down cover all of
// {0, ..., n}, not only the interior.
struct BirthDeathChain {
    std::int64_t n = 0;
    std::vector<double> up;    // size n+1, up[n] = 0
    std::vector<double> down;  // size n+1, down[0] = 0
    bool absorbing_at_0 = false;
    bool absorbing_at_n = false;

    void validate() const {
        if (n < 1) throw std::invalid_argument("BirthDeathChain: n must be >= 1");
        if (up.size() != static_cast<std::size_t>(n + 1) ||
            down.size() != static_cast<std::size_t>(n + 1))
            throw std::invalid_argument("BirthDeathChain: up/down must have n+1 entries");
        if (!absorbing_at_0 && !absorbing_at_n)
            throw std::invalid_argument("BirthDeathChain: at least one absorbing end required");
        for (std::int64_t k = 0; k <= n; ++k) {
            const double u = up[static_cast<std::size_t>(k)];
            const double d = down[static_cast<std::size_t>(k)];
            if (!(u >= 0.0) || !(d >= 0.0) || u + d > 1.0 + 1e-12)
                throw std::invalid_argument("BirthDeathChain: invalid transition probabilities");
        }
        if (down[0] != 0.0) throw std::invalid_argument("BirthDeathChain: down[0] must be 0");
        if (up[static_cast<std::size_t>(n)] != 0.0)
            throw std::invalid_argument("BirthDeathChain: up[n] must be 0");
        if (absorbing_at_0 && (up[0] != 0.0))
            throw std::invalid_argument("BirthDeathChain: absorbing state 0 must not move");
        if (absorbing_at_n && (down[static_cast<std::size_t>(n)] != 0.0))
            throw std::invalid_argument("BirthDeathChain: absorbing state n must not move");
    }

    bool absorbing(std::int64_t k) const {
        return (k == 0 && absorbing_at_0) || (k == n && absorbing_at_n);
    }
};

namespace detail {

// Tridiagonal system over the transient states [lo, hi]:
//   (up[k] + down[k]) t_k - up[k] t_{k+1} - down[k] t_{k-1} = 1,
// with t outside [lo, hi] pinned to 0 (absorbing). Thomas elimination plus
// one round of iterative refinement; well-conditioned for these chains.
inline std::vector<double> solve_absorption_tridiagonal(const BirthDeathChain& chain,
                                                        std::int64_t lo, std::int64_t hi) {
    const auto m = static_cast<std::size_t>(hi - lo + 1);
    std::vector<double> diag(m), lower(m), upper(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto k = static_cast<std::size_t>(lo) + i;
        diag[i] = chain.up[k] + chain.down[k];
        upper[i] = (i + 1 < m) ? -chain.up[k] : 0.0;
        lower[i] = (i > 0) ? -chain.down[k] : 0.0;
    }

    const auto solve = [&](const std::vector<double>& rhs) {
        std::vector<double> c(m), d(m), x(m);
        double denom = diag[0];
        if (std::abs(denom) < 1e-300)
            throw std::runtime_error("birth_death_absorption_time: singular system");
        c[0] = upper[0] / denom;
        d[0] = rhs[0] / denom;
        for (std::size_t i = 1; i < m; ++i) {
            denom = diag[i] - lower[i] * c[i - 1];
            if (std::abs(denom) < 1e-300)
                throw std::runtime_error("birth_death_absorption_time: singular system");
            c[i] = upper[i] / denom;
            d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
        }
        x[m - 1] = d[m - 1];
        for (std::size_t i = m - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
        return x;
    };

    const std::vector<double> ones(m, 1.0);
    std::vector<double> t = solve(ones);

    // One refinement pass; then insist the residual is genuinely small.
    std::vector<double> residual(m);
    const auto compute_residual = [&] {
        double max_resid = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double ax = diag[i] * t[i];
            if (i > 0) ax += lower[i] * t[i - 1];
            if (i + 1 < m) ax += upper[i] * t[i + 1];
            residual[i] = 1.0 - ax;
            max_resid = std::max(max_resid, std::abs(residual[i]));
        }
        return max_resid;
    };
    compute_residual();
    const std::vector<double> correction = solve(residual);
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) {
        t[i] += correction[i];
        scale = std::max(scale, std::abs(t[i]));
    }
    if (compute_residual() > 1e-9 * scale)
        throw std::runtime_error("birth_death_absorption_time: residual too large after refinement");
    return t;
}

}  // namespace detail

// Expected steps to absorption from every state at once.
inline std::vector<double> birth_death_absorption_times(const BirthDeathChain& chain) {
    chain.validate();
    const std::int64_t lo = chain.absorbing_at_0 ? 1 : 0;
    const std::int64_t hi = chain.absorbing_at_n ? chain.n - 1 : chain.n;
    std::vector<double> t(static_cast<std::size_t>(chain.n + 1), 0.0);
    if (lo > hi) return t;  // n = 1 with both ends absorbing

    // A transient stretch must be able to leave toward an absorbing end.
    for (std::int64_t k = lo; k <= hi; ++k) {
        const auto ki = static_cast<std::size_t>(k);
        if (chain.up[ki] == 0.0 && chain.down[ki] == 0.0)
            throw std::runtime_error(
                "birth_death_absorption_time: transient state " + std::to_string(k) +
                " cannot move, absorption unreachable");
    }
    if (!chain.absorbing_at_0) {
        for (std::int64_t k = lo; k <= hi; ++k)
            if (chain.up[static_cast<std::size_t>(k)] == 0.0)
                throw std::runtime_error(
                    "birth_death_absorption_time: absorption unreachable past state " +
                    std::to_string(k));
    }
    if (!chain.absorbing_at_n) {
        for (std::int64_t k = hi; k >= lo; --k)
            if (chain.down[static_cast<std::size_t>(k)] == 0.0)
                throw std::runtime_error(
                    "birth_death_absorption_time: absorption unreachable past state " +
                    std::to_string(k));
    }

    const std::vector<double> interior = detail::solve_absorption_tridiagonal(chain, lo, hi);
    for (std::int64_t k = lo; k <= hi; ++k)
        t[static_cast<std::size_t>(k)] = interior[static_cast<std::size_t>(k - lo)];
    return t;
}

inline double birth_death_absorption_time(const BirthDeathChain& chain, std::int64_t start) {
    if (start < 0 || start > chain.n)
        throw std::invalid_argument("birth_death_absorption_time: start must be in [0, n]");
    return birth_death_absorption_times(chain)[static_cast<std::size_t>(start)];
}

// ---- chain builders for the toolkit's processes ----

inline BirthDeathChain two_barrier_chain(std::int64_t n, double p) {
    if (n < 1) throw std::invalid_argument("two_barrier_chain: n must be >= 1");
    if (!(p > 0.0 && p <= 0.5))
        throw std::invalid_argument("two_barrier_chain: p must be in (0, 1/2]");
    BirthDeathChain chain;
    chain.n = n;
    chain.up.assign(static_cast<std::size_t>(n + 1), 0.0);
    chain.down.assign(static_cast<std::size_t>(n + 1), 0.0);
    chain.absorbing_at_0 = chain.absorbing_at_n = true;
    for (std::int64_t k = 1; k < n; ++k) {
        chain.up[static_cast<std::size_t>(k)] = p;
        chain.down[static_cast<std::size_t>(k)] = p;
    }
    return chain;
}

// One absorbing barrier at n; 0 reflects upward with probability 2p.
inline BirthDeathChain one_barrier_chain(std::int64_t n, double p) {
    if (n < 1) throw std::invalid_argument("one_barrier_chain: n must be >= 1");
    if (!(p > 0.0 && p <= 0.5))
        throw std::invalid_argument("one_barrier_chain: p must be in (0, 1/2]");
    BirthDeathChain chain;
    chain.n = n;
    chain.up.assign(static_cast<std::size_t>(n + 1), 0.0);
    chain.down.assign(static_cast<std::size_t>(n + 1), 0.0);
    chain.absorbing_at_0 = false;
    chain.absorbing_at_n = true;
    chain.up[0] = 2.0 * p;
    for (std::int64_t k = 1; k < n; ++k) {
        chain.up[static_cast<std::size_t>(k)] = p;
        chain.down[static_cast<std::size_t>(k)] = p;
    }
    return chain;
}

// Non-mutant count of the Moran process; both fixation and extinction absorb.
inline BirthDeathChain moran_chain(std::int64_t n, double r) {
    if (n < 2) throw std::invalid_argument("moran_chain: n must be >= 2");
    if (!(r > 0.0)) throw std::invalid_argument("moran_chain: r must be > 0");
    BirthDeathChain chain;
    chain.n = n;
    chain.up.assign(static_cast<std::size_t>(n + 1), 0.0);
    chain.down.assign(static_cast<std::size_t>(n + 1), 0.0);
    chain.absorbing_at_0 = chain.absorbing_at_n = true;
    for (std::int64_t k = 1; k < n; ++k) {
        const double pk = bounds::moran_p({n, r, k});
        chain.up[static_cast<std::size_t>(k)] = pk;
        chain.down[static_cast<std::size_t>(k)] = r * pk;
    }
    return chain;
}

// ---- general finite chains ----

struct DenseChain {
    std::vector<std::vector<double>> transition;  // row-stochastic
    std::vector<char> absorbing;

    void validate() const {
        const std::size_t m = transition.size();
        if (m == 0) throw std::invalid_argument("DenseChain: empty state space");
        if (m > 4096)
            throw std::invalid_argument(
                "DenseChain: more than 4096 states; the dense solver is for small chains");
        if (absorbing.size() != m)
            throw std::invalid_argument("DenseChain: absorbing flag size mismatch");
        for (std::size_t i = 0; i < m; ++i) {
            if (transition[i].size() != m)
                throw std::invalid_argument("DenseChain: transition matrix is not square");
            double row = 0.0;
            for (double v : transition[i]) {
                if (!(v >= 0.0)) throw std::invalid_argument("DenseChain: negative probability");
                row += v;
            }
            if (std::abs(row - 1.0) > 1e-12)
                throw std::invalid_argument("DenseChain: row " + std::to_string(i) +
                                            " does not sum to 1");
            if (absorbing[i] && std::abs(transition[i][i] - 1.0) > 1e-12)
                throw std::invalid_argument("DenseChain: absorbing state " + std::to_string(i) +
                                            " must stay put");
        }
    }
};

// Expected steps to absorption for every state: solve (I - Q) t = 1 over the
// transient states by Gaussian elimination with partial pivoting, plus one
// refinement pass. Transient states that cannot reach absorption are
// rejected up front (the system would be singular).
inline std::vector<double> dense_absorption_times(const DenseChain& chain) {
    chain.validate();
    const std::size_t m = chain.transition.size();

    // Reverse reachability from the absorbing set over positive-probability edges.
    std::vector<char> reaches(m, 0);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < m; ++i)
        if (chain.absorbing[i]) {
            reaches[i] = 1;
            queue.push_back(i);
        }
    if (queue.empty()) throw std::invalid_argument("dense_absorption_times: no absorbing state");
    while (!queue.empty()) {
        const std::size_t j = queue.front();
        queue.pop_front();
        for (std::size_t i = 0; i < m; ++i) {
            if (!reaches[i] && chain.transition[i][j] > 0.0) {
                reaches[i] = 1;
                queue.push_back(i);
            }
        }
    }
    std::vector<std::size_t> transient;
    for (std::size_t i = 0; i < m; ++i) {
        if (chain.absorbing[i]) continue;
        if (!reaches[i])
            throw std::runtime_error("dense_absorption_times: state " + std::to_string(i) +
                                     " cannot reach absorption");
        transient.push_back(i);
    }

    const std::size_t q = transient.size();
    std::vector<double> times(m, 0.0);
    if (q == 0) return times;

    std::vector<std::size_t> position(m, q);
    for (std::size_t idx = 0; idx < q; ++idx) position[transient[idx]] = idx;

    // A = I - Q restricted to transient states.
    std::vector<std::vector<double>> a(q, std::vector<double>(q, 0.0));
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j < q; ++j)
            a[i][j] = (i == j ? 1.0 : 0.0) - chain.transition[transient[i]][transient[j]];
    }

    const auto solve = [&](std::vector<double> rhs) {
        std::vector<std::vector<double>> lu = a;
        std::vector<std::size_t> perm(q);
        for (std::size_t i = 0; i < q; ++i) perm[i] = i;
        for (std::size_t col = 0; col < q; ++col) {
            std::size_t pivot = col;
            for (std::size_t row = col + 1; row < q; ++row)
                if (std::abs(lu[row][col]) > std::abs(lu[pivot][col])) pivot = row;
            if (std::abs(lu[pivot][col]) < 1e-300)
                throw std::runtime_error("dense_absorption_times: singular system");
            std::swap(lu[col], lu[pivot]);
            std::swap(rhs[col], rhs[pivot]);
            for (std::size_t row = col + 1; row < q; ++row) {
                const double factor = lu[row][col] / lu[col][col];
                if (factor == 0.0) continue;
                lu[row][col] = 0.0;
                for (std::size_t j = col + 1; j < q; ++j) lu[row][j] -= factor * lu[col][j];
                rhs[row] -= factor * rhs[col];
            }
        }
        std::vector<double> x(q, 0.0);
        for (std::size_t i = q; i-- > 0;) {
            double acc = rhs[i];
            for (std::size_t j = i + 1; j < q; ++j) acc -= lu[i][j] * x[j];
            x[i] = acc / lu[i][i];
        }
        return x;
    };

    std::vector<double> t = solve(std::vector<double>(q, 1.0));
    std::vector<double> residual(q);
    const auto compute_residual = [&] {
        double max_resid = 0.0;
        for (std::size_t i = 0; i < q; ++i) {
            double ax = 0.0;
            for (std::size_t j = 0; j < q; ++j) ax += a[i][j] * t[j];
            residual[i] = 1.0 - ax;
            max_resid = std::max(max_resid, std::abs(residual[i]));
        }
        return max_resid;
    };
    compute_residual();
    const std::vector<double> correction = solve(residual);
    double scale = 1.0;
    for (std::size_t i = 0; i < q; ++i) {
        t[i] += correction[i];
        scale = std::max(scale, std::abs(t[i]));
    }
    if (compute_residual() > 1e-9 * scale)
        throw std::runtime_error("dense_absorption_times: residual too large after refinement");

    for (std::size_t i = 0; i < q; ++i) times[transient[i]] = t[i];
    return times;
}

inline double dense_absorption_time(const DenseChain& chain, std::size_t start) {
    if (start >= chain.transition.size())
        throw std::invalid_argument("dense_absorption_time: start out of range");
    return dense_absorption_times(chain)[start];
}

inline DenseChain to_dense(const BirthDeathChain& chain) {
    chain.validate();
    const auto m = static_cast<std::size_t>(chain.n + 1);
    DenseChain dense;
    dense.transition.assign(m, std::vector<double>(m, 0.0));
    dense.absorbing.assign(m, 0);
    for (std::size_t k = 0; k < m; ++k) {
        const double u = chain.up[k];
        const double d = chain.down[k];
        if (k + 1 < m) dense.transition[k][k + 1] = u;
        if (k > 0) dense.transition[k][k - 1] = d;
        dense.transition[k][k] = 1.0 - u - d;
        dense.absorbing[k] = chain.absorbing(static_cast<std::int64_t>(k)) ? 1 : 0;
    }
    return dense;
}

// The 2^n-assignment chain of the randomized 2-SAT repair walk: from an
// unsatisfying assignment, pick an unsatisfied clause uniformly and flip one
// of its two variables with probability 1/2 each. Exact but exponential, so
// only tiny formulas are accepted.
inline DenseChain two_sat_chain(const Cnf& formula) {
    formula.validate();
    if (formula.n_vars < 1 || formula.n_vars > 12)
        throw std::invalid_argument("two_sat_chain: variable count must be in [1, 12]");
    const auto n = static_cast<std::size_t>(formula.n_vars);
    const std::size_t m = std::size_t{1} << n;
    DenseChain dense;
    dense.transition.assign(m, std::vector<double>(m, 0.0));
    dense.absorbing.assign(m, 0);
    std::vector<char> assignment(n, 0);
    for (std::size_t code = 0; code < m; ++code) {
        for (std::size_t v = 0; v < n; ++v) assignment[v] = (code >> v) & 1 ? 1 : 0;
        std::vector<std::size_t> unsat;
        for (std::size_t c = 0; c < formula.clauses.size(); ++c)
            if (!clause_satisfied(formula.clauses[c], assignment)) unsat.push_back(c);
        if (unsat.empty()) {
            dense.absorbing[code] = 1;
            dense.transition[code][code] = 1.0;
            continue;
        }
        const double per_clause = 1.0 / static_cast<double>(unsat.size());
        for (std::size_t c : unsat) {
            for (int lit : formula.clauses[c]) {
                const auto v = static_cast<std::size_t>(std::abs(lit) - 1);
                const std::size_t flipped = code ^ (std::size_t{1} << v);
                dense.transition[code][flipped] += 0.5 * per_clause;
            }
        }
    }
    return dense;
}

// ---- combinatorial oracles ----

// Exact minimum vertex cover size by branch and bound on an uncovered edge:
// either endpoint must join the cover. Exponential; capped at 24 vertices.
inline int brute_force_min_vertex_cover(const Graph& g) {
    if (g.n > 24)
        throw std::invalid_argument("brute_force_min_vertex_cover: graphs above 24 vertices not supported");
    std::vector<char> in_cover(static_cast<std::size_t>(g.n), 0);
    int best = g.n;

    const auto first_uncovered = [&]() -> int {
        for (std::size_t e = 0; e < g.edges.size(); ++e) {
            const auto [u, v] = g.edges[e];
            if (!in_cover[static_cast<std::size_t>(u)] && !in_cover[static_cast<std::size_t>(v)])
                return static_cast<int>(e);
        }
        return -1;
    };

    const std::function<void(int)> search = [&](int size) {
        if (size >= best) return;
        const int e = first_uncovered();
        if (e < 0) {
            best = size;
            return;
        }
        const auto [u, v] = g.edges[static_cast<std::size_t>(e)];
        for (int pick : {u, v}) {
            in_cover[static_cast<std::size_t>(pick)] = 1;
            search(size + 1);
            in_cover[static_cast<std::size_t>(pick)] = 0;
        }
    };
    search(0);
    return best;
}

// n * H_n, the classical uniform coupon collector expectation.
inline double coupon_collector_exact(std::int64_t n) {
    if (n < 1) throw std::invalid_argument("coupon_collector_exact: n must be >= 1");
    double harmonic = 0.0;
    for (std::int64_t i = n; i >= 1; --i) harmonic += 1.0 / static_cast<double>(i);
    return static_cast<double>(n) * harmonic;
}

}  // namespace driftkit::oracle
