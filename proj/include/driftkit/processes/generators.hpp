#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "../cnf.hpp"
#include "../graph.hpp"
#include "../random.hpp"
#include "inversion_sort.hpp"

// Planted-instance generators. Each instance is built around a known hidden
// solution so the corresponding theorem's hypothesis (3-colorability, 2-SAT
// satisfiability) holds by construction. Generation is driven by its own
// seed, independent of the replicate seeding of any later simulation.

namespace driftkit {

struct PlantedColoring {
    Graph graph;
    std::vector<std::uint8_t> chi;  // proper 3-coloring, values 1..3
};

// Assign each vertex a uniform class from {1, 2, 3}; include each
// cross-class pair independently with probability edge_prob. Intra-class
// pairs are never edges, so chi is proper by construction.
inline PlantedColoring gen_planted_3colorable(int n, double edge_prob, std::uint64_t seed) {
    if (n < 3) throw std::invalid_argument("gen_planted_3colorable: n must be >= 3");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
        throw std::invalid_argument("gen_planted_3colorable: edge_prob must be in [0, 1]");
    RandomStream rng(seed);
    PlantedColoring out;
    out.chi.resize(static_cast<std::size_t>(n));
    for (auto& c : out.chi) c = static_cast<std::uint8_t>(1 + rng.below(3));
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            if (out.chi[static_cast<std::size_t>(u)] == out.chi[static_cast<std::size_t>(v)])
                continue;
            if (rng.bernoulli(edge_prob)) edges.emplace_back(u, v);
        }
    }
    out.graph = Graph::from_edges(n, std::move(edges));
    return out;
}

struct PlantedTwoSat {
    Cnf formula;
    std::vector<char> assignment;  // satisfies every clause by construction
};

// Draw the hidden assignment uniformly; every clause picks two distinct
// variables and one of the three sign patterns with at least one literal
// true under the hidden assignment. Tautologies cannot occur (the variables
// are distinct); duplicate clauses may.
inline PlantedTwoSat gen_planted_2sat(int n_vars, int n_clauses, std::uint64_t seed) {
    if (n_vars < 2) throw std::invalid_argument("gen_planted_2sat: n_vars must be >= 2");
    if (n_clauses < 0) throw std::invalid_argument("gen_planted_2sat: n_clauses must be >= 0");
    RandomStream rng(seed);
    PlantedTwoSat out;
    out.formula.n_vars = n_vars;
    out.assignment.resize(static_cast<std::size_t>(n_vars));
    for (auto& value : out.assignment) value = rng.bernoulli(0.5) ? 1 : 0;
    out.formula.clauses.reserve(static_cast<std::size_t>(n_clauses));
    for (int c = 0; c < n_clauses; ++c) {
        const auto [i, j] = rng.distinct_pair(static_cast<std::uint64_t>(n_vars));
        const int va = static_cast<int>(i) + 1;
        const int vb = static_cast<int>(j) + 1;
        // Literal sign making it true under the hidden assignment.
        const int ta = out.assignment[i] ? va : -va;
        const int tb = out.assignment[static_cast<std::size_t>(j)] ? vb : -vb;
        switch (rng.below(3)) {
            case 0: out.formula.clauses.push_back({ta, tb}); break;
            case 1: out.formula.clauses.push_back({ta, -tb}); break;
            default: out.formula.clauses.push_back({-ta, tb}); break;
        }
    }
    return out;
}

// The swapped-adjacent-pairs array [2, 1, 4, 3, ...]: n/2 disjoint
// inversions, the lower-bound instance for randomized sorting.
inline ArrayState gen_adjacent_swapped(std::int64_t n) {
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("gen_adjacent_swapped: n must be even and >= 2");
    std::vector<int> entries(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < entries.size(); i += 2) {
        entries[i] = static_cast<int>(i) + 2;
        entries[i + 1] = static_cast<int>(i) + 1;
    }
    return make_array_state(std::move(entries));
}

// Erdos-Renyi graph, for vertex cover instances.
inline Graph gen_gnp(int n, double edge_prob, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_gnp: n must be >= 1");
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0))
        throw std::invalid_argument("gen_gnp: edge_prob must be in [0, 1]");
    RandomStream rng(seed);
    std::vector<std::pair<int, int>> edges;
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (rng.bernoulli(edge_prob)) edges.emplace_back(u, v);
    return Graph::from_edges(n, std::move(edges));
}

}  // namespace driftkit
