#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bounds.hpp"
#include "cnf.hpp"
#include "graph.hpp"
#include "io.hpp"
#include "oracle.hpp"
#include "process.hpp"
#include "processes/barrier.hpp"
#include "processes/coupon.hpp"
#include "processes/generators.hpp"
#include "processes/inversion_sort.hpp"
#include "processes/moran.hpp"
#include "processes/recolour.hpp"
#include "processes/two_sat.hpp"
#include "processes/vertex_cover.hpp"
#include "random.hpp"

// Replicated Monte Carlo execution with a hard determinism contract:
// replicate i always simulates with derive_replicate_seed(master_seed, i),
// results land in slot i, and every output byte depends only on the config
// and the master seed, never on thread count or scheduling.

namespace driftkit::harness {

enum class Verdict { consistent, violated, inconclusive };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::consistent:   return "consistent";
        case Verdict::violated:     return "violated";
        case Verdict::inconclusive: return "inconclusive";
    }
    throw std::logic_error("to_string: unknown verdict");
}

// ---- configuration ----

struct BoundSpec {
    Theorem theorem = Theorem::additive_upper;
    std::optional<Direction> direction;     // override; defaults resolved per process
    std::map<std::string, double> params;   // explicit values; gaps filled per process
    std::vector<double> ks = {1.0, 2.0, 3.0};  // multiplicative_tail exceedance levels
};

struct OutputPaths {
    std::string samples;
    std::string trajectories;
    std::string summary;
};

struct ExperimentConfig {
    std::string process;
    nlohmann::json params = nlohmann::json::object();
    std::uint64_t replicates = 0;
    std::uint64_t master_seed = 0;
    std::uint64_t max_steps = 0;  // 0 = derive from the relevant theorem bound
    OutputPaths outputs;
    bool record_trajectories = false;
    std::vector<BoundSpec> bounds;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const char* what,
                                std::initializer_list<std::string_view> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (std::string_view key : allowed)
            if (key == it.key()) { known = true; break; }
        if (!known)
            throw std::invalid_argument(std::string(what) + ": unknown key '" + it.key() + "'");
    }
}

inline const nlohmann::json* find(const nlohmann::json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double get_number(const nlohmann::json& obj, const char* key, const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v || !v->is_number())
        throw std::invalid_argument(std::string(what) + ": missing or non-numeric '" + key + "'");
    return v->get<double>();
}

inline double get_number_or(const nlohmann::json& obj, const char* key, double fallback,
                            const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number())
        throw std::invalid_argument(std::string(what) + ": non-numeric '" + key + "'");
    return v->get<double>();
}

inline std::int64_t get_integer(const nlohmann::json& obj, const char* key, const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v || !v->is_number_integer())
        throw std::invalid_argument(std::string(what) + ": missing or non-integer '" + key + "'");
    return v->get<std::int64_t>();
}

inline std::int64_t get_integer_or(const nlohmann::json& obj, const char* key,
                                   std::int64_t fallback, const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_integer())
        throw std::invalid_argument(std::string(what) + ": non-integer '" + key + "'");
    return v->get<std::int64_t>();
}

inline std::uint64_t get_u64_or(const nlohmann::json& obj, const char* key, std::uint64_t fallback,
                                const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
        throw std::invalid_argument(std::string(what) + ": '" + key +
                                    "' must be a nonnegative integer");
    return v->get<std::uint64_t>();
}

inline std::string get_string(const nlohmann::json& obj, const char* key, const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v || !v->is_string())
        throw std::invalid_argument(std::string(what) + ": missing or non-string '" + key + "'");
    return v->get<std::string>();
}

inline std::string get_string_or(const nlohmann::json& obj, const char* key,
                                 const std::string& fallback, const char* what) {
    const nlohmann::json* v = find(obj, key);
    if (!v) return fallback;
    if (!v->is_string())
        throw std::invalid_argument(std::string(what) + ": non-string '" + key + "'");
    return v->get<std::string>();
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) throw std::invalid_argument("config: document must be a JSON object");
    detail::reject_unknown_keys(doc, "config",
                                {"process", "params", "replicates", "master_seed", "max_steps",
                                 "outputs", "record_trajectories", "bounds"});
    ExperimentConfig cfg;
    cfg.process = detail::get_string(doc, "process", "config");
    if (const nlohmann::json* params = detail::find(doc, "params")) {
        if (!params->is_object()) throw std::invalid_argument("config: 'params' must be an object");
        cfg.params = *params;
    }
    const std::int64_t replicates = detail::get_integer(doc, "replicates", "config");
    if (replicates < 1) throw std::invalid_argument("config: 'replicates' must be >= 1");
    cfg.replicates = static_cast<std::uint64_t>(replicates);
    cfg.master_seed = detail::get_u64_or(doc, "master_seed", 0, "config");
    const std::int64_t max_steps = detail::get_integer_or(doc, "max_steps", 0, "config");
    if (max_steps < 0) throw std::invalid_argument("config: 'max_steps' must be >= 0");
    cfg.max_steps = static_cast<std::uint64_t>(max_steps);
    if (const nlohmann::json* outputs = detail::find(doc, "outputs")) {
        if (!outputs->is_object()) throw std::invalid_argument("config: 'outputs' must be an object");
        detail::reject_unknown_keys(*outputs, "config outputs",
                                    {"samples", "trajectories", "summary"});
        cfg.outputs.samples = detail::get_string_or(*outputs, "samples", "", "config outputs");
        cfg.outputs.trajectories =
            detail::get_string_or(*outputs, "trajectories", "", "config outputs");
        cfg.outputs.summary = detail::get_string_or(*outputs, "summary", "", "config outputs");
    }
    if (const nlohmann::json* record = detail::find(doc, "record_trajectories")) {
        if (!record->is_boolean())
            throw std::invalid_argument("config: 'record_trajectories' must be a boolean");
        cfg.record_trajectories = record->get<bool>();
    }
    if (const nlohmann::json* bounds = detail::find(doc, "bounds")) {
        if (!bounds->is_array()) throw std::invalid_argument("config: 'bounds' must be an array");
        for (const nlohmann::json& entry : *bounds) {
            if (!entry.is_object())
                throw std::invalid_argument("config: each bounds entry must be an object");
            detail::reject_unknown_keys(entry, "config bounds entry",
                                        {"theorem", "direction", "params", "ks"});
            BoundSpec spec;
            spec.theorem = theorem_from_string(detail::get_string(entry, "theorem", "config bounds entry"));
            if (const nlohmann::json* dir = detail::find(entry, "direction")) {
                if (!dir->is_string())
                    throw std::invalid_argument("config bounds entry: 'direction' must be a string");
                spec.direction = direction_from_string(dir->get<std::string>());
            }
            if (const nlohmann::json* params = detail::find(entry, "params")) {
                if (!params->is_object())
                    throw std::invalid_argument("config bounds entry: 'params' must be an object");
                for (auto it = params->begin(); it != params->end(); ++it) {
                    if (!it->is_number())
                        throw std::invalid_argument("config bounds entry: parameter '" + it.key() +
                                                    "' must be numeric");
                    spec.params[it.key()] = it->get<double>();
                }
            }
            if (const nlohmann::json* ks = detail::find(entry, "ks")) {
                if (!ks->is_array() || ks->empty())
                    throw std::invalid_argument("config bounds entry: 'ks' must be a non-empty array");
                spec.ks.clear();
                for (const nlohmann::json& k : *ks) {
                    if (!k.is_number())
                        throw std::invalid_argument("config bounds entry: 'ks' entries must be numeric");
                    spec.ks.push_back(k.get<double>());
                }
            }
            cfg.bounds.push_back(std::move(spec));
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config " + path + ": " + e.what());
    }
    return parse_config(doc);
}

// ---- process construction ----

// Everything the harness needs to run and judge one configured process: a
// thread-safe single-replicate runner, the theorem bound that calibrates the
// default step budget, derived default parameters for bound resolution, and
// per-theorem direction overrides (a barrier formula that is exact for the
// barrier walk is only a domination bound for a process it majorizes).
struct ProcessContext {
    std::string name;
    std::function<Trajectory(std::uint64_t, const SimulateOptions&)> run_one;
    double default_bound = std::numeric_limits<double>::quiet_NaN();
    std::map<std::string, double> derived;
    std::map<Theorem, Direction> direction_overrides;
};

// Deterministic maximal-matching cover: both endpoints of each edge picked
// while scanning the sorted edge list. A valid reference cover (at most
// twice any cover) for graphs too large for the exact oracle.
inline std::vector<int> maximal_matching_cover(const Graph& g) {
    std::vector<char> matched(static_cast<std::size_t>(g.n), 0);
    std::vector<int> cover;
    for (auto [u, v] : g.edges) {
        if (matched[static_cast<std::size_t>(u)] || matched[static_cast<std::size_t>(v)]) continue;
        matched[static_cast<std::size_t>(u)] = 1;
        matched[static_cast<std::size_t>(v)] = 1;
        cover.push_back(u);
        cover.push_back(v);
    }
    return cover;
}

// Vertex list of one exact minimum cover (branch and bound as in the size
// oracle, keeping the witness).
inline std::vector<int> minimum_vertex_cover_set(const Graph& g) {
    if (g.n > 24)
        throw std::invalid_argument("minimum_vertex_cover_set: graphs above 24 vertices not supported");
    std::vector<char> in_cover(static_cast<std::size_t>(g.n), 0);
    std::vector<int> best;
    for (int v = 0; v < g.n; ++v) best.push_back(v);

    const auto first_uncovered = [&]() -> int {
        for (std::size_t e = 0; e < g.edges.size(); ++e) {
            const auto [u, v] = g.edges[e];
            if (!in_cover[static_cast<std::size_t>(u)] && !in_cover[static_cast<std::size_t>(v)])
                return static_cast<int>(e);
        }
        return -1;
    };
    std::vector<int> current;
    const std::function<void()> search = [&] {
        if (current.size() >= best.size()) return;
        const int e = first_uncovered();
        if (e < 0) {
            best = current;
            return;
        }
        const auto [u, v] = g.edges[static_cast<std::size_t>(e)];
        for (int pick : {u, v}) {
            in_cover[static_cast<std::size_t>(pick)] = 1;
            current.push_back(pick);
            search();
            current.pop_back();
            in_cover[static_cast<std::size_t>(pick)] = 0;
        }
    };
    search();
    return best;
}

// Coloring file: one color (1..3) per line, line i for vertex i.
inline std::vector<std::uint8_t> parse_coloring(std::istream& in) {
    std::vector<std::uint8_t> chi;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        int c = 0;
        if (!(fields >> c)) continue;
        std::string trailing;
        if (fields >> trailing)
            throw std::invalid_argument("coloring line " + std::to_string(line_no) +
                                        ": expected a single color");
        if (c < 1 || c > 3)
            throw std::invalid_argument("coloring line " + std::to_string(line_no) +
                                        ": colors must be 1, 2 or 3");
        chi.push_back(static_cast<std::uint8_t>(c));
    }
    return chi;
}

inline std::vector<std::uint8_t> load_coloring(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open coloring file: " + path);
    return parse_coloring(in);
}

namespace detail {

template <Process P>
void attach_runner(ProcessContext& ctx, std::shared_ptr<const P> proc) {
    ctx.run_one = [proc = std::move(proc)](std::uint64_t seed, const SimulateOptions& opt) {
        return simulate(*proc, seed, opt);
    };
}

}  // namespace detail

inline ProcessContext build_process(const std::string& name, const nlohmann::json& params) {
    ProcessContext ctx;
    ctx.name = name;

    if (name == "two_barrier" || name == "one_barrier") {
        const bool two = name == "two_barrier";
        detail::reject_unknown_keys(params, "barrier params", {"n", "x0", "p"});
        const std::int64_t n = detail::get_integer(params, "n", "barrier params");
        const double p = detail::get_number(params, "p", "barrier params");
        const std::int64_t x0 =
            detail::get_integer_or(params, "x0", two ? -1 : 0, "barrier params");
        if (two && x0 < 0) throw std::invalid_argument("two_barrier params: missing 'x0'");
        auto proc = std::make_shared<const BarrierProcess>(
            n, p, two ? BarrierVariant::two_barrier : BarrierVariant::one_barrier, x0);
        detail::attach_runner(ctx, proc);
        ctx.derived = {{"n", static_cast<double>(n)}, {"x0", static_cast<double>(x0)}, {"p", p}};
        if (two) {
            ctx.default_bound = bounds::two_barrier_expected_time(n, x0, p);
            ctx.derived["a"] = 0.0;
            ctx.derived["b"] = static_cast<double>(n);
            ctx.derived["x0_mean"] = static_cast<double>(x0);
            ctx.derived["delta_var"] = 2.0 * p;
        } else {
            ctx.default_bound = bounds::one_barrier_expected_time(n, p);
            // n^2/(2p) is exact only from the theorem's start 0; from other
            // starts it still caps the expectation.
            if (x0 != 0) ctx.direction_overrides[Theorem::one_barrier] = Direction::upper;
        }
        return ctx;
    }

    if (name == "coupon") {
        detail::reject_unknown_keys(params, "coupon params", {"n", "model", "p"});
        const std::int64_t n = detail::get_integer(params, "n", "coupon params");
        const std::string model = detail::get_string_or(params, "model", "uniform", "coupon params");
        double delta = 0.0;
        std::shared_ptr<const CouponProcess> proc;
        if (model == "uniform") {
            if (detail::find(params, "p"))
                throw std::invalid_argument("coupon params: 'p' is only valid for the per_kind model");
            proc = std::make_shared<const CouponProcess>(n);
            delta = 1.0 / static_cast<double>(n);
        } else if (model == "per_kind") {
            const double p = detail::get_number(params, "p", "coupon params");
            proc = std::make_shared<const CouponProcess>(n, CouponProcess::Model::per_kind, p);
            delta = p;
        } else {
            throw std::invalid_argument("coupon params: model must be 'uniform' or 'per_kind'");
        }
        detail::attach_runner(ctx, proc);
        const auto x0 = static_cast<double>(n);
        ctx.default_bound = bounds::multiplicative_upper({x0, delta, {}});
        ctx.derived = {{"x0_mean", x0}, {"delta", delta}, {"s", x0}};
        return ctx;
    }

    if (name == "inversion_sort") {
        detail::reject_unknown_keys(params, "inversion_sort params", {"n", "start", "entries"});
        const std::int64_t n = detail::get_integer(params, "n", "inversion_sort params");
        if (n < 2) throw std::invalid_argument("inversion_sort params: n must be >= 2");
        const std::string start =
            detail::get_string_or(params, "start", "random", "inversion_sort params");
        const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
        double x0 = pairs;  // the worst case over starting permutations
        std::shared_ptr<const InversionSortProcess> proc;
        if (start == "random") {
            if (detail::find(params, "entries"))
                throw std::invalid_argument(
                    "inversion_sort params: 'entries' requires start = 'fixed'");
            proc = std::make_shared<const InversionSortProcess>(
                n, InversionSortProcess::Start::random_permutation);
        } else if (start == "adjacent") {
            if (detail::find(params, "entries"))
                throw std::invalid_argument(
                    "inversion_sort params: 'entries' requires start = 'fixed'");
            proc = std::make_shared<const InversionSortProcess>(
                n, InversionSortProcess::Start::adjacent_swapped);
            x0 = static_cast<double>(n) / 2.0;
        } else if (start == "fixed") {
            const nlohmann::json* entries = detail::find(params, "entries");
            if (!entries || !entries->is_array())
                throw std::invalid_argument(
                    "inversion_sort params: start = 'fixed' needs an 'entries' array");
            std::vector<int> values;
            for (const nlohmann::json& v : *entries) {
                if (!v.is_number_integer())
                    throw std::invalid_argument("inversion_sort params: entries must be integers");
                values.push_back(v.get<int>());
            }
            x0 = static_cast<double>(count_inversions(values));
            proc = std::make_shared<const InversionSortProcess>(
                n, InversionSortProcess::Start::fixed, std::move(values));
        } else {
            throw std::invalid_argument(
                "inversion_sort params: start must be 'random', 'adjacent' or 'fixed'");
        }
        detail::attach_runner(ctx, proc);
        const double delta = 1.0 / pairs;
        ctx.derived = {{"x0_mean", std::max(x0, 1.0)}, {"delta", delta}, {"s", std::max(x0, 1.0)}};
        ctx.default_bound = bounds::multiplicative_upper({std::max(x0, 1.0), delta, {}});
        return ctx;
    }

    if (name == "vertex_cover") {
        detail::reject_unknown_keys(params, "vertex_cover params",
                                    {"graph", "n", "edge_prob", "instance_seed"});
        Graph g;
        if (const nlohmann::json* path = detail::find(params, "graph")) {
            if (!path->is_string())
                throw std::invalid_argument("vertex_cover params: 'graph' must be a path string");
            if (detail::find(params, "n") || detail::find(params, "edge_prob") ||
                detail::find(params, "instance_seed"))
                throw std::invalid_argument(
                    "vertex_cover params: give either 'graph' or generator parameters, not both");
            g = load_edge_list(path->get<std::string>());
        } else {
            const std::int64_t n = detail::get_integer(params, "n", "vertex_cover params");
            const double edge_prob = detail::get_number(params, "edge_prob", "vertex_cover params");
            const auto seed = static_cast<std::uint64_t>(
                detail::get_integer_or(params, "instance_seed", 0, "vertex_cover params"));
            g = gen_gnp(static_cast<int>(n), edge_prob, seed);
        }
        const std::vector<int> reference =
            g.n <= 24 ? minimum_vertex_cover_set(g) : maximal_matching_cover(g);
        auto proc = std::make_shared<const VertexCoverProcess>(std::move(g), reference);
        const auto cover_size = static_cast<double>(proc->reference_size());
        detail::attach_runner(ctx, proc);
        ctx.derived = {{"x0_mean", cover_size}, {"delta", 0.5}, {"step_bound", 1.0}};
        ctx.default_bound = 2.0 * cover_size;
        return ctx;
    }

    if (name == "moran") {
        detail::reject_unknown_keys(params, "moran params", {"n", "r", "start"});
        const std::int64_t n = detail::get_integer(params, "n", "moran params");
        const double r = detail::get_number(params, "r", "moran params");
        const std::int64_t start = detail::get_integer_or(params, "start", n - 1, "moran params");
        auto proc = std::make_shared<const MoranProcess>(n, r, start);
        detail::attach_runner(ctx, proc);
        ctx.derived = {{"n", static_cast<double>(n)}, {"r", r}};
        if (start == n - 1) {
            ctx.default_bound = std::abs(r - 1.0) < 1e-6 ? bounds::moran_neutral_bound(n)
                                                         : bounds::moran_potential_bound(n, r);
        }
        return ctx;
    }

    if (name == "recolour") {
        detail::reject_unknown_keys(params, "recolour params",
                                    {"graph", "coloring", "n", "edge_prob", "instance_seed"});
        Graph g;
        std::vector<std::uint8_t> chi;
        if (const nlohmann::json* path = detail::find(params, "graph")) {
            if (!path->is_string())
                throw std::invalid_argument("recolour params: 'graph' must be a path string");
            const std::string coloring_path = detail::get_string(params, "coloring", "recolour params");
            if (detail::find(params, "n") || detail::find(params, "edge_prob") ||
                detail::find(params, "instance_seed"))
                throw std::invalid_argument(
                    "recolour params: give either files or generator parameters, not both");
            chi = load_coloring(coloring_path);
            g = load_edge_list(path->get<std::string>(), static_cast<int>(chi.size()));
        } else {
            const std::int64_t n = detail::get_integer(params, "n", "recolour params");
            const double edge_prob = detail::get_number(params, "edge_prob", "recolour params");
            const auto seed = static_cast<std::uint64_t>(
                detail::get_integer_or(params, "instance_seed", 0, "recolour params"));
            PlantedColoring planted = gen_planted_3colorable(static_cast<int>(n), edge_prob, seed);
            g = std::move(planted.graph);
            chi = std::move(planted.chi);
        }
        auto proc = std::make_shared<const RecolourProcess>(std::move(g), std::move(chi));
        const auto u = static_cast<double>(proc->u_size());
        detail::attach_runner(ctx, proc);
        if (u >= 1.0) {
            ctx.derived = {{"a", 0.0}, {"b", u}, {"x0_mean", u / 2.0}, {"delta_var", 2.0 / 3.0}};
            ctx.default_bound = 3.0 * u * u / 8.0;
        }
        return ctx;
    }

    if (name == "two_sat") {
        detail::reject_unknown_keys(params, "two_sat params",
                                    {"cnf", "vars", "clauses", "instance_seed"});
        Cnf formula;
        std::vector<char> reference;
        if (const nlohmann::json* path = detail::find(params, "cnf")) {
            if (!path->is_string())
                throw std::invalid_argument("two_sat params: 'cnf' must be a path string");
            if (detail::find(params, "vars") || detail::find(params, "clauses") ||
                detail::find(params, "instance_seed"))
                throw std::invalid_argument(
                    "two_sat params: give either 'cnf' or generator parameters, not both");
            formula = load_dimacs(path->get<std::string>());
            auto solved = solve_two_sat(formula);
            if (!solved)
                throw std::invalid_argument(
                    "two_sat params: formula is unsatisfiable; the repair walk need not terminate");
            reference = std::move(*solved);
        } else {
            const std::int64_t vars = detail::get_integer(params, "vars", "two_sat params");
            const std::int64_t clauses = detail::get_integer(params, "clauses", "two_sat params");
            const auto seed = static_cast<std::uint64_t>(
                detail::get_integer_or(params, "instance_seed", 0, "two_sat params"));
            PlantedTwoSat planted =
                gen_planted_2sat(static_cast<int>(vars), static_cast<int>(clauses), seed);
            formula = std::move(planted.formula);
            reference = std::move(planted.assignment);
        }
        auto proc = std::make_shared<const TwoSatProcess>(std::move(formula), std::move(reference));
        const auto vars = static_cast<double>(proc->n_vars());
        detail::attach_runner(ctx, proc);
        ctx.derived = {{"n", vars}, {"p", 0.5}};
        ctx.default_bound = vars * vars;
        // The walk's disagreement count is dominated by, not equal to, the
        // one-barrier walk, so its exact formula only caps the mean here.
        ctx.direction_overrides[Theorem::one_barrier] = Direction::upper;
        return ctx;
    }

    throw std::invalid_argument("unknown process '" + name + "'");
}

// ---- replicated execution ----

struct ReplicateSample {
    std::uint64_t seed = 0;
    HittingTimeSample hit;
};

struct RunResult {
    std::vector<ReplicateSample> samples;
    std::vector<Trajectory> trajectories;  // empty unless recording was on
    std::uint64_t max_steps_used = 0;
};

// DRIFTKIT_THREADS caps worker threads; unset or 0 means hardware default.
inline unsigned resolve_thread_count(std::uint64_t tasks) {
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("DRIFTKIT_THREADS")) {
        char* end = nullptr;
        const unsigned long parsed = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0')
            throw std::invalid_argument("DRIFTKIT_THREADS must be a nonnegative integer");
        if (parsed > 0) threads = static_cast<unsigned>(std::min<unsigned long>(parsed, 1024));
    }
    return static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(tasks, 1)));
}

namespace detail {

// Contiguous index chunks per worker; slot i of every output vector belongs
// to task i alone, so results are identical at any worker count.
inline void parallel_for(std::uint64_t tasks, const std::function<void(std::uint64_t)>& body) {
    const unsigned threads = resolve_thread_count(tasks);
    if (threads <= 1) {
        for (std::uint64_t i = 0; i < tasks; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    std::mutex failure_mutex;
    std::exception_ptr failure;
    const std::uint64_t chunk = (tasks + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::uint64_t begin = static_cast<std::uint64_t>(w) * chunk;
        const std::uint64_t end = std::min(tasks, begin + chunk);
        if (begin >= end) break;
        workers.emplace_back([&, begin, end] {
            try {
                for (std::uint64_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline std::uint64_t resolve_max_steps(const ExperimentConfig& cfg, const ProcessContext& ctx) {
    if (cfg.max_steps > 0) return cfg.max_steps;
    if (std::isfinite(ctx.default_bound) && ctx.default_bound > 0.0) {
        const double budget = std::ceil(100.0 * ctx.default_bound);
        return std::max<std::uint64_t>(100, static_cast<std::uint64_t>(budget));
    }
    return 10'000'000;
}

inline RunResult run_replicates(const ExperimentConfig& cfg, const ProcessContext& ctx) {
    RunResult out;
    out.max_steps_used = resolve_max_steps(cfg, ctx);
    out.samples.resize(cfg.replicates);
    if (cfg.record_trajectories) out.trajectories.resize(cfg.replicates);
    const SimulateOptions opt{out.max_steps_used, cfg.record_trajectories};
    detail::parallel_for(cfg.replicates, [&](std::uint64_t i) {
        const std::uint64_t seed = derive_replicate_seed(cfg.master_seed, i);
        Trajectory tr = ctx.run_one(seed, opt);
        out.samples[i] = {seed, tr.hit};
        if (cfg.record_trajectories) out.trajectories[i] = std::move(tr);
    });
    return out;
}

inline RunResult run_replicates(const ExperimentConfig& cfg) {
    const ProcessContext ctx = build_process(cfg.process, cfg.params);
    return run_replicates(cfg, ctx);
}

// ---- summaries and verdicts ----

struct TailResult {
    double k = 0.0;
    double threshold = 0.0;
    double prob_bound = 0.0;
    double exceedance = 0.0;
    double upper_cl = 0.0;
    Verdict verdict = Verdict::inconclusive;
};

struct VerdictEntry {
    BoundReport report;
    Verdict verdict = Verdict::inconclusive;
    // multiplicative_tail entries carry per-k results instead of a verdict
    // on the mean.
    std::vector<TailResult> tail;
};

struct SummaryReport {
    std::uint64_t n_replicates = 0;
    std::uint64_t n_censored = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    std::array<double, 5> quantiles{};  // 5, 25, 50, 75, 95 percentiles
    double ci_lo = std::numeric_limits<double>::quiet_NaN();
    double ci_hi = std::numeric_limits<double>::quiet_NaN();
    std::string ci_method = "none";
    std::vector<VerdictEntry> bound_verdicts;
};

struct SummaryOptions {
    enum class CiMethod { automatic, normal, bootstrap };
    CiMethod method = CiMethod::automatic;
    int bootstrap_resamples = 10'000;
    std::uint64_t bootstrap_seed = 0;
    double z = 1.959963984540054;  // two-sided 95%
};

// Censored samples never enter the mean, spread, or CI; they are counted and
// surfaced so a nonzero count reads as a step-budget problem.
inline SummaryReport summarize(const std::vector<ReplicateSample>& samples,
                               const SummaryOptions& opt = {}) {
    SummaryReport report;
    report.n_replicates = samples.size();
    std::vector<double> steps;
    steps.reserve(samples.size());
    for (const ReplicateSample& s : samples) {
        if (s.hit.censored) ++report.n_censored;
        else steps.push_back(static_cast<double>(s.hit.steps));
    }
    if (steps.empty())
        throw std::runtime_error("summarize: every replicate was censored; raise max_steps");
    std::sort(steps.begin(), steps.end());
    const auto n = static_cast<double>(steps.size());

    double sum = 0.0;
    for (double v : steps) sum += v;
    report.mean = sum / n;
    double ss = 0.0;
    for (double v : steps) {
        const double dev = v - report.mean;
        ss += dev * dev;
    }
    report.std_dev = steps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;

    const auto quantile = [&steps](double q) {
        const double h = q * (static_cast<double>(steps.size()) - 1.0);
        const auto lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, steps.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return steps[lo] + frac * (steps[hi] - steps[lo]);
    };
    report.quantiles = {quantile(0.05), quantile(0.25), quantile(0.50), quantile(0.75),
                        quantile(0.95)};

    if (steps.size() < 2) return report;  // no CI; verdicts become inconclusive

    const bool use_normal = opt.method == SummaryOptions::CiMethod::normal ||
                            (opt.method == SummaryOptions::CiMethod::automatic && steps.size() >= 100);
    if (use_normal) {
        const double half = opt.z * report.std_dev / std::sqrt(n);
        report.ci_lo = report.mean - half;
        report.ci_hi = report.mean + half;
        report.ci_method = "normal";
        return report;
    }

    // Seeded bootstrap over resampled means.
    RandomStream rng(opt.bootstrap_seed);
    std::vector<double> means;
    means.reserve(static_cast<std::size_t>(opt.bootstrap_resamples));
    for (int b = 0; b < opt.bootstrap_resamples; ++b) {
        double acc = 0.0;
        for (std::size_t i = 0; i < steps.size(); ++i)
            acc += steps[static_cast<std::size_t>(rng.below(steps.size()))];
        means.push_back(acc / n);
    }
    std::sort(means.begin(), means.end());
    const auto boot_quantile = [&means](double q) {
        const double h = q * (static_cast<double>(means.size()) - 1.0);
        const auto lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, means.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return means[lo] + frac * (means[hi] - means[lo]);
    };
    report.ci_lo = boot_quantile(0.025);
    report.ci_hi = boot_quantile(0.975);
    report.ci_method = "bootstrap";
    return report;
}

// An upper bound is violated only when the whole CI sits above it, a lower
// bound when the whole CI sits below, an exact value when the CI misses it.
inline Verdict verify_bound(const SummaryReport& report, const BoundReport& bound) {
    if (!std::isfinite(report.ci_lo) || !std::isfinite(report.ci_hi))
        return Verdict::inconclusive;
    switch (bound.direction) {
        case Direction::upper:
            return report.ci_lo <= bound.bound ? Verdict::consistent : Verdict::violated;
        case Direction::lower:
            return report.ci_hi >= bound.bound ? Verdict::consistent : Verdict::violated;
        case Direction::exact:
            return (report.ci_lo <= bound.bound && bound.bound <= report.ci_hi)
                       ? Verdict::consistent
                       : Verdict::violated;
    }
    throw std::logic_error("verify_bound: unknown direction");
}

// Exceedance of the multiplicative tail thresholds. Censored replicates
// count as exceedances (their true time is beyond max_steps), which can only
// make the check harder to pass. k = 0 is allowed here and trivially
// consistent (the bound is 1).
inline std::vector<TailResult> tail_check(const std::vector<ReplicateSample>& samples, double s,
                                          double delta, const std::vector<double>& ks,
                                          double z = 1.959963984540054) {
    if (!(s >= 1.0)) throw std::invalid_argument("tail_check: s must be >= 1");
    if (!(delta > 0.0)) throw std::invalid_argument("tail_check: delta must be > 0");
    if (samples.empty()) throw std::invalid_argument("tail_check: no samples");
    std::vector<TailResult> out;
    const auto m = static_cast<double>(samples.size());
    for (double k : ks) {
        if (!(k >= 0.0)) throw std::invalid_argument("tail_check: k must be >= 0");
        TailResult res;
        res.k = k;
        res.threshold = (k + std::log(s)) / delta;
        res.prob_bound = std::exp(-k);
        std::uint64_t exceed = 0;
        for (const ReplicateSample& sample : samples) {
            if (sample.hit.censored || static_cast<double>(sample.hit.steps) > res.threshold)
                ++exceed;
        }
        res.exceedance = static_cast<double>(exceed) / m;
        res.upper_cl =
            res.exceedance + z * std::sqrt(res.exceedance * (1.0 - res.exceedance) / m);
        res.verdict = (res.exceedance <= res.prob_bound || res.upper_cl <= res.prob_bound)
                          ? Verdict::consistent
                          : Verdict::violated;
        out.push_back(res);
    }
    return out;
}

// ---- bound resolution against a process context ----

namespace detail {

inline double resolved_param(const BoundSpec& spec, const ProcessContext& ctx, const char* key) {
    if (const auto it = spec.params.find(key); it != spec.params.end()) return it->second;
    if (const auto it = ctx.derived.find(key); it != ctx.derived.end()) return it->second;
    throw std::invalid_argument("bound '" + std::string(to_string(spec.theorem)) +
                                "': parameter '" + key + "' is neither given nor derivable from "
                                "process '" + ctx.name + "'");
}

inline std::int64_t resolved_int(const BoundSpec& spec, const ProcessContext& ctx, const char* key) {
    const double v = resolved_param(spec, ctx, key);
    const double rounded = std::nearbyint(v);
    if (std::abs(v - rounded) > 1e-9)
        throw std::invalid_argument("bound '" + std::string(to_string(spec.theorem)) +
                                    "': parameter '" + key + "' must be an integer");
    return static_cast<std::int64_t>(rounded);
}

}  // namespace detail

// Evaluates one configured theorem check. For multiplicative_tail the
// returned report's bound is the k = ks[0] threshold's probability bound and
// the real content lives in the per-k tail results added by the caller.
inline BoundReport resolve_bound(const BoundSpec& spec, const ProcessContext& ctx) {
    BoundReport report;
    report.theorem = spec.theorem;
    switch (spec.theorem) {
        case Theorem::additive_upper: {
            const double x0 = detail::resolved_param(spec, ctx, "x0_mean");
            const double delta = detail::resolved_param(spec, ctx, "delta");
            report.inputs = {{"x0_mean", x0}, {"delta", delta}};
            report.bound = bounds::additive_upper({x0, delta, {}});
            break;
        }
        case Theorem::additive_lower: {
            const double x0 = detail::resolved_param(spec, ctx, "x0_mean");
            const double delta = detail::resolved_param(spec, ctx, "delta");
            const double step_bound = detail::resolved_param(spec, ctx, "step_bound");
            report.inputs = {{"x0_mean", x0}, {"delta", delta}, {"step_bound", step_bound}};
            report.bound = bounds::additive_lower({x0, delta, step_bound});
            break;
        }
        case Theorem::multiplicative: {
            const double x0 = detail::resolved_param(spec, ctx, "x0_mean");
            const double delta = detail::resolved_param(spec, ctx, "delta");
            report.inputs = {{"x0_mean", x0}, {"delta", delta}};
            report.bound = bounds::multiplicative_upper({x0, delta, {}});
            break;
        }
        case Theorem::multiplicative_tail: {
            const double s = detail::resolved_param(spec, ctx, "s");
            const double delta = detail::resolved_param(spec, ctx, "delta");
            report.inputs = {{"s", s}, {"delta", delta}};
            report.bound = std::numeric_limits<double>::quiet_NaN();
            break;
        }
        case Theorem::variable:
            throw std::invalid_argument(
                "bound 'variable': the drift function h is not expressible in a config; "
                "use the bound subcommand or the library directly");
        case Theorem::martingale_upper:
        case Theorem::martingale_lower: {
            const bounds::IntervalParameters p{
                detail::resolved_param(spec, ctx, "a"), detail::resolved_param(spec, ctx, "b"),
                detail::resolved_param(spec, ctx, "x0_mean"),
                detail::resolved_param(spec, ctx, "delta_var")};
            report.inputs = {{"a", p.a}, {"b", p.b}, {"x0_mean", p.x0_mean},
                             {"delta_var", p.delta_var}};
            report.bound = bounds::martingale_interval_bound(
                p, spec.theorem == Theorem::martingale_upper ? Direction::upper : Direction::lower);
            break;
        }
        case Theorem::two_barrier: {
            const std::int64_t n = detail::resolved_int(spec, ctx, "n");
            const std::int64_t x0 = detail::resolved_int(spec, ctx, "x0");
            const double p = detail::resolved_param(spec, ctx, "p");
            report.inputs = {{"n", static_cast<double>(n)}, {"x0", static_cast<double>(x0)},
                             {"p", p}};
            report.bound = bounds::two_barrier_expected_time(n, x0, p);
            break;
        }
        case Theorem::one_barrier: {
            const std::int64_t n = detail::resolved_int(spec, ctx, "n");
            const double p = detail::resolved_param(spec, ctx, "p");
            report.inputs = {{"n", static_cast<double>(n)}, {"p", p}};
            report.bound = bounds::one_barrier_expected_time(n, p);
            break;
        }
        case Theorem::moran_potential: {
            const std::int64_t n = detail::resolved_int(spec, ctx, "n");
            const double r = detail::resolved_param(spec, ctx, "r");
            report.inputs = {{"n", static_cast<double>(n)}, {"r", r}};
            report.bound = bounds::moran_potential_bound(n, r);
            break;
        }
        case Theorem::moran_neutral: {
            const std::int64_t n = detail::resolved_int(spec, ctx, "n");
            report.inputs = {{"n", static_cast<double>(n)}};
            report.bound = bounds::moran_neutral_bound(n);
            break;
        }
    }
    if (spec.direction) {
        report.direction = *spec.direction;
    } else if (const auto it = ctx.direction_overrides.find(spec.theorem);
               it != ctx.direction_overrides.end()) {
        report.direction = it->second;
    } else {
        report.direction = direction_of(spec.theorem);
    }
    return report;
}

// ---- CSV and JSON serialization ----

inline std::string samples_csv(const RunResult& run) {
    std::ostringstream out;
    out << "replicate_index,seed,steps,censored\n";
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        const ReplicateSample& s = run.samples[i];
        out << i << ',' << s.seed << ',' << s.hit.steps << ',' << (s.hit.censored ? 1 : 0) << '\n';
    }
    return out.str();
}

inline std::string trajectories_csv(const RunResult& run) {
    std::ostringstream out;
    out << "replicate_index,t,potential\n";
    for (std::size_t i = 0; i < run.trajectories.size(); ++i) {
        const Trajectory& tr = run.trajectories[i];
        for (std::size_t t = 0; t < tr.potentials.size(); ++t)
            out << i << ',' << t << ',' << format_double(tr.potentials[t]) << '\n';
    }
    return out.str();
}

// Reads the trajectory schema back; rows may appear in any order, but each
// replicate's time steps must form 0, 1, 2, ... once sorted.
inline std::vector<Trajectory> parse_trajectories_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "replicate_index,t,potential")
        throw std::invalid_argument("trajectories csv: missing or wrong header");
    std::map<std::uint64_t, std::vector<std::pair<std::uint64_t, double>>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::uint64_t replicate = 0, t = 0;
        double potential = 0.0;
        char comma1 = 0, comma2 = 0;
        if (!(fields >> replicate >> comma1 >> t >> comma2 >> potential) || comma1 != ',' ||
            comma2 != ',')
            throw std::invalid_argument("trajectories csv line " + std::to_string(line_no) +
                                        ": expected 'replicate_index,t,potential'");
        rows[replicate].emplace_back(t, potential);
    }
    std::vector<Trajectory> out;
    for (auto& [replicate, entries] : rows) {
        std::sort(entries.begin(), entries.end());
        Trajectory tr;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != i)
                throw std::invalid_argument("trajectories csv: replicate " +
                                            std::to_string(replicate) +
                                            " has non-contiguous time steps");
            tr.potentials.push_back(entries[i].second);
        }
        out.push_back(std::move(tr));
    }
    return out;
}

// Histogram of uncensored hitting times: equal integer-width bins, plot-ready.
inline std::string histogram_csv(const std::vector<ReplicateSample>& samples, int bins = 50) {
    if (bins < 1) throw std::invalid_argument("histogram_csv: bins must be >= 1");
    std::vector<std::uint64_t> steps;
    for (const ReplicateSample& s : samples)
        if (!s.hit.censored) steps.push_back(s.hit.steps);
    std::ostringstream out;
    out << "bin_lo,bin_hi,count\n";
    if (steps.empty()) return out.str();
    const auto [min_it, max_it] = std::minmax_element(steps.begin(), steps.end());
    const std::uint64_t lo = *min_it;
    const std::uint64_t width =
        std::max<std::uint64_t>(1, (*max_it - lo + static_cast<std::uint64_t>(bins)) /
                                       static_cast<std::uint64_t>(bins));
    std::map<std::uint64_t, std::uint64_t> counts;
    for (std::uint64_t v : steps) ++counts[(v - lo) / width];
    for (const auto& [bin, count] : counts)
        out << (lo + bin * width) << ',' << (lo + (bin + 1) * width) << ',' << count << '\n';
    return out.str();
}

inline nlohmann::json bound_report_json(const BoundReport& report) {
    nlohmann::json doc;
    doc["theorem"] = std::string(to_string(report.theorem));
    doc["direction"] = std::string(to_string(report.direction));
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [key, value] : report.inputs) inputs[key] = value;
    doc["inputs"] = inputs;
    if (std::isfinite(report.bound)) doc["bound"] = report.bound;
    else doc["bound"] = nullptr;
    return doc;
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const RunResult& run,
                                   const SummaryReport& report) {
    nlohmann::json doc;
    doc["process"] = cfg.process;
    doc["replicates"] = cfg.replicates;
    doc["master_seed"] = cfg.master_seed;
    doc["max_steps"] = run.max_steps_used;
    doc["n_censored"] = report.n_censored;
    doc["mean"] = report.mean;
    doc["std"] = report.std_dev;
    doc["quantiles"] = {{"p05", report.quantiles[0]},
                        {"p25", report.quantiles[1]},
                        {"p50", report.quantiles[2]},
                        {"p75", report.quantiles[3]},
                        {"p95", report.quantiles[4]}};
    if (std::isfinite(report.ci_lo) && std::isfinite(report.ci_hi))
        doc["ci95"] = {report.ci_lo, report.ci_hi};
    else
        doc["ci95"] = nullptr;
    doc["ci_method"] = report.ci_method;
    nlohmann::json bounds_json = nlohmann::json::array();
    for (const VerdictEntry& entry : report.bound_verdicts) {
        nlohmann::json b = bound_report_json(entry.report);
        if (entry.report.theorem == Theorem::multiplicative_tail) {
            nlohmann::json checks = nlohmann::json::array();
            for (const TailResult& res : entry.tail) {
                checks.push_back({{"k", res.k},
                                  {"threshold", res.threshold},
                                  {"prob_bound", res.prob_bound},
                                  {"exceedance", res.exceedance},
                                  {"upper_cl", res.upper_cl},
                                  {"verdict", std::string(to_string(res.verdict))}});
            }
            b["checks"] = checks;
        }
        b["verdict"] = std::string(to_string(entry.verdict));
        bounds_json.push_back(b);
    }
    doc["bounds"] = bounds_json;
    return doc;
}

// ---- the full pipeline behind `simulate` and `verify` ----

struct PipelineResult {
    RunResult run;
    SummaryReport summary;
    nlohmann::json document;
    bool any_violated = false;
};

inline PipelineResult run_pipeline(const ExperimentConfig& cfg, bool evaluate_bounds) {
    const ProcessContext ctx = build_process(cfg.process, cfg.params);
    PipelineResult result;
    result.run = run_replicates(cfg, ctx);

    if (!cfg.outputs.samples.empty())
        write_file_atomic(cfg.outputs.samples, samples_csv(result.run));
    if (!cfg.outputs.trajectories.empty()) {
        if (!cfg.record_trajectories)
            throw std::invalid_argument(
                "config: outputs.trajectories set but record_trajectories is false");
        write_file_atomic(cfg.outputs.trajectories, trajectories_csv(result.run));
    }

    SummaryOptions opt;
    opt.bootstrap_seed = derive_replicate_seed(cfg.master_seed, 0x626f6f74ull);  // "boot" tag
    result.summary = summarize(result.run.samples, opt);

    if (evaluate_bounds) {
        for (const BoundSpec& spec : cfg.bounds) {
            VerdictEntry entry;
            entry.report = resolve_bound(spec, ctx);
            if (spec.theorem == Theorem::multiplicative_tail) {
                entry.tail = tail_check(result.run.samples, entry.report.inputs.at("s"),
                                        entry.report.inputs.at("delta"), spec.ks);
                entry.verdict = Verdict::consistent;
                for (const TailResult& res : entry.tail)
                    if (res.verdict == Verdict::violated) entry.verdict = Verdict::violated;
            } else {
                entry.verdict = verify_bound(result.summary, entry.report);
            }
            if (entry.verdict == Verdict::violated) result.any_violated = true;
            result.summary.bound_verdicts.push_back(std::move(entry));
        }
    }

    result.document = summary_json(cfg, result.run, result.summary);
    if (!cfg.outputs.summary.empty())
        write_file_atomic(cfg.outputs.summary, result.document.dump(2) + "\n");
    return result;
}

}  // namespace driftkit::harness
