#pragma once

#include <array>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// 2-CNF formulas in DIMACS convention: literals are nonzero integers, +v for
// variable v, -v for its negation, variables 1-based. Only 2-literal clauses
// are accepted; duplicates are allowed.

namespace driftkit {

struct Cnf {
    int n_vars = 0;
    std::vector<std::array<int, 2>> clauses;  // DIMACS literals

    void validate() const {
        if (n_vars < 0) throw std::invalid_argument("Cnf: negative variable count");
        for (const auto& c : clauses) {
            for (int lit : c) {
                if (lit == 0 || std::abs(lit) > n_vars)
                    throw std::invalid_argument("Cnf: literal " + std::to_string(lit) +
                                                " out of range for " + std::to_string(n_vars) +
                                                " variables");
            }
        }
    }
};

inline bool literal_true(int lit, const std::vector<char>& assignment) {
    const bool value = assignment[static_cast<std::size_t>(std::abs(lit) - 1)] != 0;
    return lit > 0 ? value : !value;
}

inline bool clause_satisfied(const std::array<int, 2>& clause, const std::vector<char>& assignment) {
    return literal_true(clause[0], assignment) || literal_true(clause[1], assignment);
}

inline bool satisfies(const Cnf& formula, const std::vector<char>& assignment) {
    if (assignment.size() != static_cast<std::size_t>(formula.n_vars))
        throw std::invalid_argument("satisfies: assignment size does not match variable count");
    for (const auto& c : formula.clauses)
        if (!clause_satisfied(c, assignment)) return false;
    return true;
}

// DIMACS CNF reader. Accepts "c" comment lines and a "p cnf <vars> <clauses>"
// header; every clause must contain exactly two literals before its
// terminating 0. Clauses may span or share lines, as DIMACS allows.
inline Cnf parse_dimacs(std::istream& in) {
    Cnf out;
    bool saw_header = false;
    long long declared_clauses = -1;
    std::vector<int> current;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string first;
        if (!(fields >> first)) continue;
        if (first == "c") continue;
        if (first == "p") {
            std::string kind;
            long long vars = 0, clauses = 0;
            if (saw_header || !(fields >> kind >> vars >> clauses) || kind != "cnf" || vars < 0 ||
                clauses < 0)
                throw std::invalid_argument("dimacs line " + std::to_string(line_no) +
                                            ": malformed problem line");
            saw_header = true;
            out.n_vars = static_cast<int>(vars);
            declared_clauses = clauses;
            continue;
        }
        fields.clear();
        fields.str(line);
        long long lit = 0;
        while (fields >> lit) {
            if (lit == 0) {
                if (current.size() != 2)
                    throw std::invalid_argument("dimacs line " + std::to_string(line_no) +
                                                ": clause with " + std::to_string(current.size()) +
                                                " literals; only 2-literal clauses are supported");
                out.clauses.push_back({current[0], current[1]});
                current.clear();
            } else {
                current.push_back(static_cast<int>(lit));
                if (current.size() > 2)
                    throw std::invalid_argument("dimacs line " + std::to_string(line_no) +
                                                ": clause with more than 2 literals");
            }
        }
        if (fields.fail() && !fields.eof())
            throw std::invalid_argument("dimacs line " + std::to_string(line_no) +
                                        ": unreadable token");
    }
    if (!saw_header) throw std::invalid_argument("dimacs: missing 'p cnf' header");
    if (!current.empty()) throw std::invalid_argument("dimacs: unterminated clause at end of file");
    if (declared_clauses >= 0 && declared_clauses != static_cast<long long>(out.clauses.size()))
        throw std::invalid_argument("dimacs: header declares " + std::to_string(declared_clauses) +
                                    " clauses, file contains " + std::to_string(out.clauses.size()));
    out.validate();
    return out;
}

inline Cnf load_dimacs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cnf file: " + path);
    return parse_dimacs(in);
}

inline void write_dimacs(std::ostream& out, const Cnf& formula) {
    out << "p cnf " << formula.n_vars << ' ' << formula.clauses.size() << '\n';
    for (const auto& c : formula.clauses) out << c[0] << ' ' << c[1] << " 0\n";
}

// Satisfiability and a witness via the implication graph: clause (x or y)
// contributes edges !x -> y and !y -> x; the formula is satisfiable iff no
// variable shares a strongly connected component with its negation. Iterative
// Tarjan, so deep formulas cannot overflow the call stack. Used to find a
// reference assignment for ingested formulas where none was planted.
inline std::optional<std::vector<char>> solve_two_sat(const Cnf& formula) {
    formula.validate();
    const int n = formula.n_vars;
    // Node 2i is variable i+1 positive, 2i+1 its negation.
    const auto node = [](int lit) {
        const int v = std::abs(lit) - 1;
        return 2 * v + (lit < 0 ? 1 : 0);
    };
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(2 * n));
    for (const auto& c : formula.clauses) {
        adj[static_cast<std::size_t>(node(-c[0]))].push_back(node(c[1]));
        adj[static_cast<std::size_t>(node(-c[1]))].push_back(node(c[0]));
    }

    const int total = 2 * n;
    std::vector<int> index(static_cast<std::size_t>(total), -1);
    std::vector<int> lowlink(static_cast<std::size_t>(total), 0);
    std::vector<int> component(static_cast<std::size_t>(total), -1);
    std::vector<char> on_stack(static_cast<std::size_t>(total), 0);
    std::vector<int> stack;
    int next_index = 0;
    int next_component = 0;

    struct Frame {
        int node;
        std::size_t child;
    };
    std::vector<Frame> frames;
    for (int root = 0; root < total; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        frames.push_back({root, 0});
        while (!frames.empty()) {
            auto& fr = frames.back();
            const auto u = static_cast<std::size_t>(fr.node);
            if (fr.child == 0) {
                index[u] = lowlink[u] = next_index++;
                stack.push_back(fr.node);
                on_stack[u] = 1;
            }
            if (fr.child < adj[u].size()) {
                const int w = adj[u][fr.child++];
                const auto wi = static_cast<std::size_t>(w);
                if (index[wi] == -1) {
                    frames.push_back({w, 0});
                } else if (on_stack[wi]) {
                    lowlink[u] = std::min(lowlink[u], index[wi]);
                }
                continue;
            }
            if (lowlink[u] == index[u]) {
                for (;;) {
                    const int w = stack.back();
                    stack.pop_back();
                    on_stack[static_cast<std::size_t>(w)] = 0;
                    component[static_cast<std::size_t>(w)] = next_component;
                    if (w == fr.node) break;
                }
                ++next_component;
            }
            const int finished = fr.node;
            frames.pop_back();
            if (!frames.empty()) {
                const auto parent = static_cast<std::size_t>(frames.back().node);
                lowlink[parent] = std::min(lowlink[parent], lowlink[static_cast<std::size_t>(finished)]);
            }
        }
    }

    std::vector<char> assignment(static_cast<std::size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
        const int pos = component[static_cast<std::size_t>(2 * v)];
        const int neg = component[static_cast<std::size_t>(2 * v + 1)];
        if (pos == neg) return std::nullopt;
        // Tarjan numbers components in reverse topological order, so the
        // smaller number is the topologically later component; making that
        // literal true never implies a false one.
        assignment[static_cast<std::size_t>(v)] = pos < neg ? 1 : 0;
    }
    return assignment;
}

}  // namespace driftkit
