#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "../graph.hpp"
#include "../process.hpp"
#include "../random.hpp"

// Randomized vertex cover construction: while an uncovered edge exists, pick
// one uniformly at random and add one of its two endpoints with probability
// 1/2 each. Every step adds a fresh vertex (an uncovered edge has neither
// endpoint chosen), so the hitting time equals the final cover size.
//
// The analysis potential counts how much of a fixed reference cover is still
// missing: 0 once the chosen set covers everything, else |C_ref \ D|. Since
// any uncovered edge has at least one endpoint in any cover, each step hits
// the reference with probability at least 1/2.

namespace driftkit {

struct VertexCoverState {
    std::vector<char> chosen;
    std::int64_t chosen_count = 0;
};

class VertexCoverProcess {
public:
    using state_type = VertexCoverState;

    VertexCoverProcess(Graph graph, std::vector<int> reference_cover)
        : graph_(std::move(graph)), reference_flags_(static_cast<std::size_t>(graph_.n), 0) {
        for (int v : reference_cover) {
            if (v < 0 || v >= graph_.n)
                throw std::invalid_argument("VertexCoverProcess: reference cover vertex out of range");
            if (reference_flags_[static_cast<std::size_t>(v)])
                throw std::invalid_argument("VertexCoverProcess: duplicate vertex in reference cover");
            reference_flags_[static_cast<std::size_t>(v)] = 1;
        }
        reference_size_ = static_cast<std::int64_t>(reference_cover.size());
        for (auto [u, v] : graph_.edges) {
            if (!reference_flags_[static_cast<std::size_t>(u)] &&
                !reference_flags_[static_cast<std::size_t>(v)])
                throw std::invalid_argument(
                    "VertexCoverProcess: reference set does not cover edge " + std::to_string(u) +
                    " " + std::to_string(v));
        }
    }

    std::string_view name() const { return "vertex_cover"; }

    const Graph& graph() const { return graph_; }
    std::int64_t reference_size() const { return reference_size_; }

    state_type initial_state(RandomStream&) const {
        return {std::vector<char>(static_cast<std::size_t>(graph_.n), 0), 0};
    }

    state_type step(const state_type& s, RandomStream& rng) const {
        const std::vector<std::size_t> uncovered = uncovered_edges(s);
        if (uncovered.empty()) return s;
        const std::size_t e = uncovered[static_cast<std::size_t>(
            rng.below(static_cast<std::uint64_t>(uncovered.size())))];
        const auto [u, v] = graph_.edges[e];
        const int pick = rng.bernoulli(0.5) ? u : v;
        state_type next = s;
        next.chosen[static_cast<std::size_t>(pick)] = 1;
        ++next.chosen_count;
        return next;
    }

    double potential(const state_type& s) const {
        if (absorbed(s)) return 0.0;
        std::int64_t missing = 0;
        for (std::size_t v = 0; v < reference_flags_.size(); ++v)
            if (reference_flags_[v] && !s.chosen[v]) ++missing;
        return static_cast<double>(missing);
    }

    bool absorbed(const state_type& s) const { return uncovered_edges(s).empty(); }

private:
    std::vector<std::size_t> uncovered_edges(const state_type& s) const {
        std::vector<std::size_t> uncovered;
        for (std::size_t e = 0; e < graph_.edges.size(); ++e) {
            const auto [u, v] = graph_.edges[e];
            if (!s.chosen[static_cast<std::size_t>(u)] && !s.chosen[static_cast<std::size_t>(v)])
                uncovered.push_back(e);
        }
        return uncovered;
    }

    Graph graph_;
    std::vector<char> reference_flags_;
    std::int64_t reference_size_ = 0;
};

}  // namespace driftkit
