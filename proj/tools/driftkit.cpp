// driftkit: drift-theorem bounds, process simulation, drift estimation, exact
// oracles, and instance generation behind one executable. JSON goes to
// stdout, bulk data to files (written whole, then renamed into place).
//
// Exit codes: 0 success, 1 usage or runtime error, 2 a verified bound was
// violated (so CI pipelines fail loudly on theorem violations).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <driftkit/driftkit.hpp>

namespace dk = driftkit;
using nlohmann::json;

namespace {

void print_json(const json& doc) { std::cout << doc.dump(2) << "\n"; }

json report_to_json(const dk::BoundReport& report) {
    return dk::harness::bound_report_json(report);
}

// ---- bound ----

struct BoundArgs {
    std::string theorem;
    double x0_mean = std::numeric_limits<double>::quiet_NaN();
    double delta = std::numeric_limits<double>::quiet_NaN();
    double step_bound = std::numeric_limits<double>::quiet_NaN();
    double s = std::numeric_limits<double>::quiet_NaN();
    double k = std::numeric_limits<double>::quiet_NaN();
    double a = std::numeric_limits<double>::quiet_NaN();
    double b = std::numeric_limits<double>::quiet_NaN();
    double delta_var = std::numeric_limits<double>::quiet_NaN();
    double p = std::numeric_limits<double>::quiet_NaN();
    double r = std::numeric_limits<double>::quiet_NaN();
    std::int64_t n = -1;
    std::int64_t x0 = std::numeric_limits<std::int64_t>::min();
    double h_coeff = 1.0;
    double h_exponent = 1.0;
};

double need(double v, const char* flag) {
    if (std::isnan(v)) throw std::invalid_argument(std::string("missing required flag --") + flag);
    return v;
}

std::int64_t need_int(std::int64_t v, std::int64_t sentinel, const char* flag) {
    if (v == sentinel) throw std::invalid_argument(std::string("missing required flag --") + flag);
    return v;
}

int run_bound(const BoundArgs& args) {
    const dk::Theorem theorem = dk::theorem_from_string(args.theorem);
    dk::BoundReport report;
    report.theorem = theorem;
    report.direction = dk::direction_of(theorem);
    switch (theorem) {
        case dk::Theorem::additive_upper: {
            const double x0 = need(args.x0_mean, "x0-mean");
            const double delta = need(args.delta, "delta");
            report.inputs = {{"x0_mean", x0}, {"delta", delta}};
            report.bound = dk::bounds::additive_upper({x0, delta, {}});
            break;
        }
        case dk::Theorem::additive_lower: {
            const double x0 = need(args.x0_mean, "x0-mean");
            const double delta = need(args.delta, "delta");
            const double c = need(args.step_bound, "step-bound");
            report.inputs = {{"x0_mean", x0}, {"delta", delta}, {"step_bound", c}};
            report.bound = dk::bounds::additive_lower({x0, delta, c});
            break;
        }
        case dk::Theorem::multiplicative: {
            const double x0 = need(args.x0_mean, "x0-mean");
            const double delta = need(args.delta, "delta");
            report.inputs = {{"x0_mean", x0}, {"delta", delta}};
            report.bound = dk::bounds::multiplicative_upper({x0, delta, {}});
            break;
        }
        case dk::Theorem::multiplicative_tail: {
            const double s = need(args.s, "s");
            const double delta = need(args.delta, "delta");
            const double k = need(args.k, "k");
            const dk::bounds::TailBound tail = dk::bounds::multiplicative_tail(s, delta, k);
            json doc;
            doc["theorem"] = "multiplicative_tail";
            doc["direction"] = "upper";
            doc["inputs"] = {{"s", s}, {"delta", delta}, {"k", k}};
            doc["threshold"] = tail.threshold;
            doc["prob_bound"] = tail.prob_bound;
            print_json(doc);
            return 0;
        }
        case dk::Theorem::variable: {
            const double x0 = need(args.x0_mean, "x0-mean");
            const double c = args.h_coeff;
            const double eta = args.h_exponent;
            if (!(c > 0.0)) throw std::invalid_argument("--c must be > 0");
            const auto h = [c, eta](double x) { return c * std::pow(x, eta); };
            const dk::bounds::QuadratureResult q = dk::bounds::variable_drift_upper(h, x0);
            report.inputs = {{"x0_mean", x0}, {"c", c}, {"eta", eta}};
            report.bound = q.value;
            json doc = report_to_json(report);
            doc["quadrature_error"] = q.error_estimate;
            print_json(doc);
            return 0;
        }
        case dk::Theorem::martingale_upper:
        case dk::Theorem::martingale_lower: {
            const dk::bounds::IntervalParameters params{
                need(args.a, "a"), need(args.b, "b"), need(args.x0_mean, "x0-mean"),
                need(args.delta_var, "delta-var")};
            report.inputs = {{"a", params.a}, {"b", params.b}, {"x0_mean", params.x0_mean},
                             {"delta_var", params.delta_var}};
            report.bound = dk::bounds::martingale_interval_bound(
                params, theorem == dk::Theorem::martingale_upper ? dk::Direction::upper
                                                                 : dk::Direction::lower);
            break;
        }
        case dk::Theorem::two_barrier: {
            const std::int64_t n = need_int(args.n, -1, "n");
            const std::int64_t x0 =
                need_int(args.x0, std::numeric_limits<std::int64_t>::min(), "x0");
            const double p = need(args.p, "p");
            report.inputs = {{"n", static_cast<double>(n)}, {"x0", static_cast<double>(x0)},
                             {"p", p}};
            report.bound = dk::bounds::two_barrier_expected_time(n, x0, p);
            break;
        }
        case dk::Theorem::one_barrier: {
            const std::int64_t n = need_int(args.n, -1, "n");
            const double p = need(args.p, "p");
            report.inputs = {{"n", static_cast<double>(n)}, {"p", p}};
            report.bound = dk::bounds::one_barrier_expected_time(n, p);
            break;
        }
        case dk::Theorem::moran_potential: {
            const std::int64_t n = need_int(args.n, -1, "n");
            const double r = need(args.r, "r");
            report.inputs = {{"n", static_cast<double>(n)}, {"r", r}};
            report.bound = dk::bounds::moran_potential_bound(n, r);
            break;
        }
        case dk::Theorem::moran_neutral: {
            const std::int64_t n = need_int(args.n, -1, "n");
            report.inputs = {{"n", static_cast<double>(n)}};
            report.bound = dk::bounds::moran_neutral_bound(n);
            break;
        }
    }
    print_json(report_to_json(report));
    return 0;
}

// ---- simulate / verify ----

int run_pipeline_command(const std::string& config_path, const std::string& plot_path,
                         bool evaluate_bounds) {
    const dk::harness::ExperimentConfig cfg = dk::harness::load_config(config_path);
    const dk::harness::PipelineResult result = dk::harness::run_pipeline(cfg, evaluate_bounds);
    if (!plot_path.empty())
        dk::write_file_atomic(plot_path, dk::harness::histogram_csv(result.run.samples));
    print_json(result.document);
    return result.any_violated ? 2 : 0;
}

// ---- estimate ----

struct EstimateArgs {
    std::string trajectories_path;
    std::string binning = "exact";
    double width = 0.0;
    std::uint64_t min_count = 30;
    double x0 = std::numeric_limits<double>::quiet_NaN();
    double a = std::numeric_limits<double>::quiet_NaN();
    double b = std::numeric_limits<double>::quiet_NaN();
};

int run_estimate(const EstimateArgs& args) {
    std::ifstream in(args.trajectories_path);
    if (!in) throw std::runtime_error("cannot open trajectories file: " + args.trajectories_path);
    const std::vector<dk::Trajectory> trajectories = dk::harness::parse_trajectories_csv(in);

    dk::estimator::Binning binning;
    if (args.binning == "exact") {
        binning.mode = dk::estimator::Binning::Mode::exact_integer;
    } else if (args.binning == "width") {
        binning.mode = dk::estimator::Binning::Mode::fixed_width;
        binning.width = args.width;
    } else {
        throw std::invalid_argument("--binning must be 'exact' or 'width'");
    }
    const dk::estimator::DriftEstimate est = dk::estimator::estimate_drift(trajectories, binning);
    dk::estimator::FitOptions opt;
    opt.min_count = args.min_count;
    const dk::estimator::RegimeFit fit = dk::estimator::classify_regime(est, opt);

    json doc;
    doc["binning"] =
        binning.mode == dk::estimator::Binning::Mode::exact_integer ? "exact" : "width";
    doc["width"] = est.width;
    doc["total_transitions"] = est.total_transitions;
    json bins = json::array();
    for (const auto& [key, bin] : est.bins) {
        bins.push_back({{"state", bin.state},
                        {"count", bin.count},
                        {"mean_drop", bin.mean()},
                        {"var_drop", bin.variance()}});
    }
    doc["bins"] = bins;
    doc["fit"] = {{"regime", std::string(dk::estimator::to_string(fit.regime))},
                  {"delta_hat", fit.delta_hat},
                  {"goodness", fit.goodness},
                  {"bins_used", fit.bins_used},
                  {"bins_excluded", fit.bins_excluded}};
    if (!std::isnan(args.x0)) {
        std::optional<dk::bounds::IntervalParameters> interval;
        if (!std::isnan(args.a) || !std::isnan(args.b)) {
            if (std::isnan(args.a) || std::isnan(args.b))
                throw std::invalid_argument("--a and --b must be given together");
            interval = dk::bounds::IntervalParameters{args.a, args.b, args.x0, 1.0};
        }
        const dk::BoundReport predicted =
            dk::estimator::predict_hitting_time(fit, args.x0, interval);
        doc["predicted"] = report_to_json(predicted);
    }
    print_json(doc);
    return 0;
}

// ---- oracle ----

struct OracleArgs {
    std::string kind;
    std::int64_t n = -1;
    std::int64_t x0 = std::numeric_limits<std::int64_t>::min();
    std::int64_t start = std::numeric_limits<std::int64_t>::min();
    double p = std::numeric_limits<double>::quiet_NaN();
    double r = std::numeric_limits<double>::quiet_NaN();
    std::string graph_path;
    std::string cnf_path;
};

int run_oracle(const OracleArgs& args) {
    json doc;
    doc["kind"] = args.kind;
    if (args.kind == "two_barrier") {
        const std::int64_t n = need_int(args.n, -1, "n");
        const std::int64_t x0 = need_int(args.x0, std::numeric_limits<std::int64_t>::min(), "x0");
        const double p = need(args.p, "p");
        doc["inputs"] = {{"n", n}, {"x0", x0}, {"p", p}};
        doc["value"] =
            dk::oracle::birth_death_absorption_time(dk::oracle::two_barrier_chain(n, p), x0);
    } else if (args.kind == "one_barrier") {
        const std::int64_t n = need_int(args.n, -1, "n");
        const double p = need(args.p, "p");
        const std::int64_t x0 =
            args.x0 == std::numeric_limits<std::int64_t>::min() ? 0 : args.x0;
        doc["inputs"] = {{"n", n}, {"x0", x0}, {"p", p}};
        doc["value"] =
            dk::oracle::birth_death_absorption_time(dk::oracle::one_barrier_chain(n, p), x0);
    } else if (args.kind == "moran") {
        const std::int64_t n = need_int(args.n, -1, "n");
        const double r = need(args.r, "r");
        const std::int64_t start =
            args.start == std::numeric_limits<std::int64_t>::min() ? n - 1 : args.start;
        doc["inputs"] = {{"n", n}, {"r", r}, {"start", start}};
        doc["value"] =
            dk::oracle::birth_death_absorption_time(dk::oracle::moran_chain(n, r), start);
    } else if (args.kind == "coupon_exact") {
        const std::int64_t n = need_int(args.n, -1, "n");
        doc["inputs"] = {{"n", n}};
        doc["value"] = dk::oracle::coupon_collector_exact(n);
    } else if (args.kind == "vertex_cover_opt") {
        if (args.graph_path.empty()) throw std::invalid_argument("missing required flag --graph");
        const dk::Graph g = dk::load_edge_list(args.graph_path);
        doc["inputs"] = {{"graph", args.graph_path}, {"vertices", g.n},
                         {"edges", g.edges.size()}};
        doc["value"] = dk::oracle::brute_force_min_vertex_cover(g);
    } else if (args.kind == "two_sat_time") {
        if (args.cnf_path.empty()) throw std::invalid_argument("missing required flag --cnf");
        const dk::Cnf formula = dk::load_dimacs(args.cnf_path);
        const dk::oracle::DenseChain chain = dk::oracle::two_sat_chain(formula);
        const std::vector<double> times = dk::oracle::dense_absorption_times(chain);
        double acc = 0.0;
        for (double t : times) acc += t;
        doc["inputs"] = {{"cnf", args.cnf_path}, {"vars", formula.n_vars},
                         {"clauses", formula.clauses.size()}};
        // The repair walk starts at a uniformly random assignment.
        doc["value"] = acc / static_cast<double>(times.size());
    } else {
        throw std::invalid_argument("unknown oracle kind '" + args.kind + "'");
    }
    print_json(doc);
    return 0;
}

// ---- gen ----

struct GenArgs {
    std::string kind;
    std::int64_t n = -1;
    std::int64_t vars = -1;
    std::int64_t clauses = -1;
    double edge_prob = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    std::string out;
    std::string coloring_out;
};

int run_gen(const GenArgs& args) {
    if (args.out.empty()) throw std::invalid_argument("missing required flag --out");
    json doc;
    doc["kind"] = args.kind;
    doc["seed"] = args.seed;
    if (args.kind == "gnp") {
        const std::int64_t n = need_int(args.n, -1, "n");
        const double edge_prob = need(args.edge_prob, "edge-prob");
        const dk::Graph g = dk::gen_gnp(static_cast<int>(n), edge_prob, args.seed);
        std::ostringstream body;
        dk::write_edge_list(body, g);
        dk::write_file_atomic(args.out, body.str());
        doc["vertices"] = g.n;
        doc["edges"] = g.edges.size();
        doc["out"] = args.out;
    } else if (args.kind == "planted_3col") {
        const std::int64_t n = need_int(args.n, -1, "n");
        const double edge_prob = need(args.edge_prob, "edge-prob");
        if (args.coloring_out.empty())
            throw std::invalid_argument("missing required flag --coloring-out");
        const dk::PlantedColoring planted =
            dk::gen_planted_3colorable(static_cast<int>(n), edge_prob, args.seed);
        std::ostringstream body;
        dk::write_edge_list(body, planted.graph);
        dk::write_file_atomic(args.out, body.str());
        std::ostringstream colors;
        for (std::uint8_t c : planted.chi) colors << static_cast<int>(c) << "\n";
        dk::write_file_atomic(args.coloring_out, colors.str());
        doc["vertices"] = planted.graph.n;
        doc["edges"] = planted.graph.edges.size();
        doc["out"] = args.out;
        doc["coloring_out"] = args.coloring_out;
    } else if (args.kind == "planted_2sat") {
        const std::int64_t vars = need_int(args.vars, -1, "vars");
        const std::int64_t clauses = need_int(args.clauses, -1, "clauses");
        const dk::PlantedTwoSat planted =
            dk::gen_planted_2sat(static_cast<int>(vars), static_cast<int>(clauses), args.seed);
        std::ostringstream body;
        dk::write_dimacs(body, planted.formula);
        dk::write_file_atomic(args.out, body.str());
        doc["vars"] = planted.formula.n_vars;
        doc["clauses"] = planted.formula.clauses.size();
        doc["out"] = args.out;
    } else {
        throw std::invalid_argument("unknown gen kind '" + args.kind + "'");
    }
    print_json(doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"drift-theorem bounds, simulation, estimation, and exact oracles"};
    app.require_subcommand(1);

    BoundArgs bound_args;
    CLI::App* bound = app.add_subcommand("bound", "evaluate a drift-theorem bound, print JSON");
    bound
        ->add_option("theorem", bound_args.theorem,
                     "one of: additive_upper, additive_lower, multiplicative, "
                     "multiplicative_tail, variable, martingale_upper, martingale_lower, "
                     "two_barrier, one_barrier, moran_potential, moran_neutral")
        ->required();
    bound->add_option("--x0-mean", bound_args.x0_mean, "expected initial potential");
    bound->add_option("--delta", bound_args.delta, "drift parameter");
    bound->add_option("--step-bound", bound_args.step_bound, "per-step change cap c");
    bound->add_option("--s", bound_args.s, "initial potential for the tail bound");
    bound->add_option("--k", bound_args.k, "tail exceedance level");
    bound->add_option("--a", bound_args.a, "lower absorbing barrier");
    bound->add_option("--b", bound_args.b, "upper absorbing barrier");
    bound->add_option("--delta-var", bound_args.delta_var, "conditional variance lower bound");
    bound->add_option("--n", bound_args.n, "state-space size");
    bound->add_option("--x0", bound_args.x0, "integer start position");
    bound->add_option("--p", bound_args.p, "step probability");
    bound->add_option("--r", bound_args.r, "Moran fitness ratio");
    bound->add_option("--c", bound_args.h_coeff, "variable drift: h(x) = c x^eta, coefficient");
    bound->add_option("--eta", bound_args.h_exponent, "variable drift: h(x) = c x^eta, exponent");

    std::string sim_config, sim_plot;
    CLI::App* simulate = app.add_subcommand("simulate", "run replicated simulations from a config");
    simulate->add_option("--config", sim_config, "experiment config JSON")->required();
    simulate->add_option("--plot-data", sim_plot, "write a hitting-time histogram CSV here");

    std::string verify_config, verify_plot;
    CLI::App* verify =
        app.add_subcommand("verify", "simulate, then judge every configured theorem bound");
    verify->add_option("--config", verify_config, "experiment config JSON")->required();
    verify->add_option("--plot-data", verify_plot, "write a hitting-time histogram CSV here");

    EstimateArgs est_args;
    CLI::App* estimate =
        app.add_subcommand("estimate", "fit a drift regime to recorded trajectories");
    estimate->add_option("--trajectories", est_args.trajectories_path, "trajectories CSV")
        ->required();
    estimate->add_option("--binning", est_args.binning, "'exact' (integer states) or 'width'");
    estimate->add_option("--width", est_args.width, "bin width; 0 = Freedman-Diaconis");
    estimate->add_option("--min-count", est_args.min_count, "bins below this count are excluded");
    estimate->add_option("--x0", est_args.x0, "also predict a hitting-time bound from here");
    estimate->add_option("--a", est_args.a, "absorbing interval start (zero-drift prediction)");
    estimate->add_option("--b", est_args.b, "absorbing interval end (zero-drift prediction)");

    OracleArgs oracle_args;
    CLI::App* oracle = app.add_subcommand("oracle", "exact expected values from Markov chains");
    oracle
        ->add_option("kind", oracle_args.kind,
                     "one of: two_barrier, one_barrier, moran, coupon_exact, vertex_cover_opt, "
                     "two_sat_time")
        ->required();
    oracle->add_option("--n", oracle_args.n, "state-space size");
    oracle->add_option("--x0", oracle_args.x0, "start position");
    oracle->add_option("--start", oracle_args.start, "start state (Moran: non-mutant count)");
    oracle->add_option("--p", oracle_args.p, "step probability");
    oracle->add_option("--r", oracle_args.r, "Moran fitness ratio");
    oracle->add_option("--graph", oracle_args.graph_path, "edge-list file");
    oracle->add_option("--cnf", oracle_args.cnf_path, "DIMACS 2-CNF file");

    GenArgs gen_args;
    CLI::App* gen = app.add_subcommand("gen", "write random problem instances to files");
    gen->add_option("kind", gen_args.kind, "one of: gnp, planted_3col, planted_2sat")->required();
    gen->add_option("--n", gen_args.n, "vertex count");
    gen->add_option("--vars", gen_args.vars, "variable count");
    gen->add_option("--clauses", gen_args.clauses, "clause count");
    gen->add_option("--edge-prob", gen_args.edge_prob, "edge probability");
    gen->add_option("--seed", gen_args.seed, "generator seed");
    gen->add_option("--out", gen_args.out, "output path");
    gen->add_option("--coloring-out", gen_args.coloring_out, "planted coloring output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (bound->parsed()) return run_bound(bound_args);
        if (simulate->parsed()) return run_pipeline_command(sim_config, sim_plot, false);
        if (verify->parsed()) return run_pipeline_command(verify_config, verify_plot, true);
        if (estimate->parsed()) return run_estimate(est_args);
        if (oracle->parsed()) return run_oracle(oracle_args);
        if (gen->parsed()) return run_gen(gen_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    std::cerr << "error: no subcommand\n";
    return 1;
}
