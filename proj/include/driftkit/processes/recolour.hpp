#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "../graph.hpp"
#include "../process.hpp"
#include "../random.hpp"

// Local search for triangle-free 2-colorings of a 3-colorable graph: while a
// monochromatic triangle exists, pick one uniformly at random and flip the
// color (1 <-> 2) of one of its three vertices, chosen uniformly.
//
// The analysis is pinned to a hidden proper 3-coloring chi. U is the set of
// vertices chi maps to {1, 2}; Y counts the vertices of U whose current
// color agrees with chi. Every triangle of the graph uses all three chi
// classes, so a monochromatic one contains exactly one agreeing and one
// disagreeing U vertex: Y moves +1 / -1 / 0 with probability 1/3 each. The
// walk is absorbed no later than Y reaching 0 or |U| (either chi or its
// swap restricted to U kills all monochromatic triangles), so the reported
// potential is min(Y, |U| - Y).

namespace driftkit {

struct RecolourState {
    std::vector<std::uint8_t> color;  // 1 or 2 per vertex
    std::vector<int> mono;            // ids of currently monochromatic triangles
    std::vector<int> mono_slot;       // triangle id -> index in mono, or -1
    std::int64_t agree = 0;           // |{u in U : color(u) = chi(u)}|
};

class RecolourProcess {
public:
    using state_type = RecolourState;

    RecolourProcess(Graph graph, std::vector<std::uint8_t> chi)
        : graph_(std::move(graph)), chi_(std::move(chi)) {
        if (chi_.size() != static_cast<std::size_t>(graph_.n))
            throw std::invalid_argument("RecolourProcess: coloring size does not match graph");
        for (std::uint8_t c : chi_)
            if (c < 1 || c > 3)
                throw std::invalid_argument("RecolourProcess: coloring values must be 1, 2 or 3");
        for (auto [u, v] : graph_.edges)
            if (chi_[static_cast<std::size_t>(u)] == chi_[static_cast<std::size_t>(v)])
                throw std::invalid_argument("RecolourProcess: coloring is not proper");

        for (std::uint8_t c : chi_)
            if (c != 3) ++u_size_;

        // Triangle enumeration via an adjacency matrix; each triangle stored
        // once with u < v < w and indexed from all three corners.
        std::vector<std::vector<char>> adj(static_cast<std::size_t>(graph_.n),
                                           std::vector<char>(static_cast<std::size_t>(graph_.n), 0));
        for (auto [u, v] : graph_.edges) {
            adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)] = 1;
            adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(u)] = 1;
        }
        triangles_by_vertex_.assign(static_cast<std::size_t>(graph_.n), {});
        for (auto [u, v] : graph_.edges) {
            for (int w = v + 1; w < graph_.n; ++w) {
                if (adj[static_cast<std::size_t>(u)][static_cast<std::size_t>(w)] &&
                    adj[static_cast<std::size_t>(v)][static_cast<std::size_t>(w)]) {
                    const int id = static_cast<int>(triangles_.size());
                    triangles_.push_back({u, v, w});
                    triangles_by_vertex_[static_cast<std::size_t>(u)].push_back(id);
                    triangles_by_vertex_[static_cast<std::size_t>(v)].push_back(id);
                    triangles_by_vertex_[static_cast<std::size_t>(w)].push_back(id);
                }
            }
        }
    }

    std::string_view name() const { return "recolour"; }

    const Graph& graph() const { return graph_; }
    std::int64_t u_size() const { return u_size_; }
    std::size_t triangle_count() const { return triangles_.size(); }

    state_type initial_state(RandomStream& rng) const {
        state_type s;
        s.color.resize(static_cast<std::size_t>(graph_.n));
        for (auto& c : s.color) c = rng.bernoulli(0.5) ? 1 : 2;
        s.mono_slot.assign(triangles_.size(), -1);
        for (std::size_t id = 0; id < triangles_.size(); ++id) {
            if (monochromatic(s, static_cast<int>(id))) {
                s.mono_slot[id] = static_cast<int>(s.mono.size());
                s.mono.push_back(static_cast<int>(id));
            }
        }
        s.agree = 0;
        for (std::size_t v = 0; v < chi_.size(); ++v)
            if (chi_[v] != 3 && s.color[v] == chi_[v]) ++s.agree;
        return s;
    }

    state_type step(const state_type& s, RandomStream& rng) const {
        if (s.mono.empty()) return s;
        state_type next = s;
        const int id = next.mono[static_cast<std::size_t>(
            rng.below(static_cast<std::uint64_t>(next.mono.size())))];
        const int v = triangles_[static_cast<std::size_t>(id)][static_cast<std::size_t>(rng.below(3))];
        const auto vi = static_cast<std::size_t>(v);
        next.color[vi] = next.color[vi] == 1 ? 2 : 1;
        if (chi_[vi] != 3) {
            next.agree += next.color[vi] == chi_[vi] ? 1 : -1;
        }
        for (int t : triangles_by_vertex_[vi]) {
            const bool is_mono = monochromatic(next, t);
            const auto ti = static_cast<std::size_t>(t);
            if (is_mono && next.mono_slot[ti] < 0) {
                next.mono_slot[ti] = static_cast<int>(next.mono.size());
                next.mono.push_back(t);
            } else if (!is_mono && next.mono_slot[ti] >= 0) {
                const int slot = next.mono_slot[ti];
                const int moved = next.mono.back();
                next.mono[static_cast<std::size_t>(slot)] = moved;
                next.mono_slot[static_cast<std::size_t>(moved)] = slot;
                next.mono.pop_back();
                next.mono_slot[ti] = -1;
            }
        }
        return next;
    }

    double potential(const state_type& s) const {
        return static_cast<double>(std::min(s.agree, u_size_ - s.agree));
    }

    bool absorbed(const state_type& s) const { return s.mono.empty(); }

private:
    bool monochromatic(const state_type& s, int id) const {
        const auto& t = triangles_[static_cast<std::size_t>(id)];
        const std::uint8_t c = s.color[static_cast<std::size_t>(t[0])];
        return s.color[static_cast<std::size_t>(t[1])] == c &&
               s.color[static_cast<std::size_t>(t[2])] == c;
    }

    Graph graph_;
    std::vector<std::uint8_t> chi_;
    std::int64_t u_size_ = 0;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<std::vector<int>> triangles_by_vertex_;
};

}  // namespace driftkit
