#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

// Undirected simple graphs as normalized edge lists. The text format is one
// "u v" pair per line, vertices 0-indexed; self-loops and duplicate edges
// (in either orientation) are rejected.

namespace driftkit {

struct Graph {
    int n = 0;                              // vertex count
    std::vector<std::pair<int, int>> edges; // normalized u < v, no duplicates

    static Graph from_edges(int n, std::vector<std::pair<int, int>> raw) {
        if (n < 0) throw std::invalid_argument("Graph: vertex count must be >= 0");
        Graph g;
        g.n = n;
        std::set<std::pair<int, int>> seen;
        for (auto [u, v] : raw) {
            if (u < 0 || v < 0 || u >= n || v >= n)
                throw std::invalid_argument("Graph: vertex index out of range");
            if (u == v) throw std::invalid_argument("Graph: self-loops are not allowed");
            const auto e = std::minmax(u, v);
            if (!seen.insert({e.first, e.second}).second)
                throw std::invalid_argument("Graph: duplicate edge " + std::to_string(e.first) +
                                            " " + std::to_string(e.second));
        }
        g.edges.assign(seen.begin(), seen.end());
        return g;
    }

    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
        for (auto [u, v] : edges) {
            adj[static_cast<std::size_t>(u)].push_back(v);
            adj[static_cast<std::size_t>(v)].push_back(u);
        }
        return adj;
    }
};

// Parses an edge list; the vertex count is the largest index seen plus one
// (or an explicit minimum, for graphs with trailing isolated vertices).
inline Graph parse_edge_list(std::istream& in, int min_vertices = 0) {
    std::vector<std::pair<int, int>> raw;
    int max_vertex = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        long long u = 0, v = 0;
        std::string trailing;
        if (!(fields >> u >> v) || (fields >> trailing))
            throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                        ": expected exactly two vertex indices");
        if (u < 0 || v < 0)
            throw std::invalid_argument("edge list line " + std::to_string(line_no) +
                                        ": vertex indices must be >= 0");
        raw.emplace_back(static_cast<int>(u), static_cast<int>(v));
        max_vertex = std::max(max_vertex, static_cast<int>(std::max(u, v)));
    }
    return Graph::from_edges(std::max(max_vertex + 1, min_vertices), std::move(raw));
}

inline Graph load_edge_list(const std::string& path, int min_vertices = 0) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    return parse_edge_list(in, min_vertices);
}

inline void write_edge_list(std::ostream& out, const Graph& g) {
    for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
}

}  // namespace driftkit
