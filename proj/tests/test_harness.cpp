#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <driftkit/harness.hpp>

using namespace driftkit;
using namespace driftkit::harness;
using nlohmann::json;

namespace {

// Self-cleaning scratch directory for output and instance files.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("driftkit_harness_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        const std::string p = file(name);
        std::ofstream out(p);
        out << content;
        return p;
    }
};

json barrier_config() {
    return json{{"process", "two_barrier"},
                {"params", {{"n", 16}, {"x0", 8}, {"p", 0.5}}},
                {"replicates", 100},
                {"master_seed", 11}};
}

std::vector<ReplicateSample> make_samples(const std::vector<std::uint64_t>& steps,
                                          std::uint64_t censored = 0) {
    std::vector<ReplicateSample> out;
    std::uint64_t seed = 1;
    for (std::uint64_t s : steps) out.push_back({seed++, {s, false}});
    for (std::uint64_t i = 0; i < censored; ++i) out.push_back({seed++, {999999, true}});
    return out;
}

}  // namespace

TEST_CASE("config parsing accepts a complete document") {
    const json doc = {
        {"process", "two_barrier"},
        {"params", {{"n", 10}, {"x0", 5}, {"p", 0.5}}},
        {"replicates", 200},
        {"master_seed", 42},
        {"max_steps", 5000},
        {"outputs", {{"samples", "s.csv"}, {"trajectories", "t.csv"}, {"summary", "sum.json"}}},
        {"record_trajectories", true},
        {"bounds",
         json::array({json{{"theorem", "two_barrier"}},
                      json{{"theorem", "multiplicative_tail"},
                           {"params", {{"s", 5.0}, {"delta", 0.1}}},
                           {"ks", {1.0, 2.5}}},
                      json{{"theorem", "additive_upper"}, {"direction", "lower"}}})}};
    const ExperimentConfig cfg = parse_config(doc);
    CHECK(cfg.process == "two_barrier");
    CHECK(cfg.params.at("n").get<int>() == 10);
    CHECK(cfg.replicates == 200);
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.max_steps == 5000);
    CHECK(cfg.outputs.samples == "s.csv");
    CHECK(cfg.outputs.trajectories == "t.csv");
    CHECK(cfg.outputs.summary == "sum.json");
    CHECK(cfg.record_trajectories);
    REQUIRE(cfg.bounds.size() == 3);
    CHECK(cfg.bounds[0].theorem == Theorem::two_barrier);
    CHECK_FALSE(cfg.bounds[0].direction.has_value());
    CHECK(cfg.bounds[0].ks == std::vector<double>{1.0, 2.0, 3.0});  // default
    CHECK(cfg.bounds[1].params.at("s") == 5.0);
    CHECK(cfg.bounds[1].ks == std::vector<double>{1.0, 2.5});
    REQUIRE(cfg.bounds[2].direction.has_value());
    CHECK(*cfg.bounds[2].direction == Direction::lower);
}

TEST_CASE("config parsing rejects malformed documents") {
    CHECK_THROWS_AS(parse_config(json::array()), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(json{{"replicates", 5}}), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(json{{"process", "moran"}}), std::invalid_argument);

    auto doc = barrier_config();

    SECTION("unknown top-level key") {
        doc["replicate"] = 5;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
    SECTION("replicates must be a positive integer") {
        doc["replicates"] = 0;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["replicates"] = 1.5;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
    SECTION("negative max_steps and master_seed") {
        doc["max_steps"] = -1;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc.erase("max_steps");
        doc["master_seed"] = -3;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
    SECTION("params must be an object") {
        doc["params"] = 3;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
    SECTION("outputs validation") {
        doc["outputs"] = {{"sample", "x.csv"}};
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["outputs"] = {{"samples", 7}};
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["outputs"] = json::array();
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
    SECTION("record_trajectories must be boolean") {
        doc["record_trajectories"] = 1;
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
    SECTION("bounds validation") {
        doc["bounds"] = json{{"theorem", "two_barrier"}};  // object, not array
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] = json::array({json::array()});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] = json::array({json{{"theorm", "two_barrier"}}});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] = json::array({json{{"theorem", "no_such_theorem"}}});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] = json::array({json{{"theorem", "two_barrier"}, {"direction", "up"}}});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] =
            json::array({json{{"theorem", "two_barrier"}, {"params", {{"n", "ten"}}}}});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] =
            json::array({json{{"theorem", "multiplicative_tail"}, {"ks", json::array()}}});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
        doc["bounds"] =
            json::array({json{{"theorem", "multiplicative_tail"}, {"ks", {"one"}}}});
        CHECK_THROWS_AS(parse_config(doc), std::invalid_argument);
    }
}

TEST_CASE("config files load with helpful failures") {
    const TempDir dir;
    CHECK_THROWS_AS(load_config(dir.file("absent.json")), std::runtime_error);
    CHECK_THROWS_AS(load_config(dir.write("broken.json", "{ not json")), std::invalid_argument);
    const std::string path = dir.write("ok.json", barrier_config().dump());
    CHECK(load_config(path).process == "two_barrier");
}

TEST_CASE("process construction validates its parameters") {
    CHECK_THROWS_AS(build_process("no_such_process", json::object()), std::invalid_argument);
    CHECK_THROWS_AS(build_process("two_barrier", json{{"n", 10}, {"p", 0.5}}),
                    std::invalid_argument);  // missing x0
    CHECK_THROWS_AS(build_process("two_barrier", json{{"n", 10}, {"x0", 5}, {"p", 0.5}, {"q", 1}}),
                    std::invalid_argument);  // unknown key
    CHECK_THROWS_AS(build_process("coupon", json{{"n", 10}, {"p", 0.5}}),
                    std::invalid_argument);  // p without per_kind
    CHECK_THROWS_AS(build_process("coupon", json{{"n", 10}, {"model", "per_kind"}}),
                    std::invalid_argument);  // per_kind without p
    CHECK_THROWS_AS(build_process("coupon", json{{"n", 10}, {"model", "weekly"}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_process("inversion_sort", json{{"n", 1}}), std::invalid_argument);
    CHECK_THROWS_AS(build_process("inversion_sort", json{{"n", 8}, {"entries", {2, 1}}}),
                    std::invalid_argument);  // entries need start = fixed
    CHECK_THROWS_AS(
        build_process("inversion_sort", json{{"n", 8}, {"start", "backwards"}}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        build_process("vertex_cover", json{{"graph", "g.txt"}, {"n", 8}, {"edge_prob", 0.3}}),
        std::invalid_argument);  // file and generator are exclusive
    CHECK_THROWS_AS(
        build_process("two_sat", json{{"cnf", "f.cnf"}, {"vars", 8}, {"clauses", 16}}),
        std::invalid_argument);
    CHECK_THROWS_AS(
        build_process("recolour",
                      json{{"graph", "g.txt"}, {"coloring", "c.txt"}, {"n", 9}, {"edge_prob", 0.3}}),
        std::invalid_argument);

    const TempDir dir;
    const std::string unsat = dir.write("unsat.cnf", "p cnf 1 2\n1 1 0\n-1 -1 0\n");
    CHECK_THROWS_WITH(build_process("two_sat", json{{"cnf", unsat}}),
                      Catch::Matchers::ContainsSubstring("unsatisfiable"));
}

TEST_CASE("process construction derives bound parameters") {
    SECTION("two-barrier walk") {
        const auto ctx = build_process("two_barrier", json{{"n", 10}, {"x0", 5}, {"p", 0.5}});
        CHECK(ctx.default_bound == Catch::Approx(25.0));
        CHECK(ctx.derived.at("x0_mean") == 5.0);
        CHECK(ctx.derived.at("a") == 0.0);
        CHECK(ctx.derived.at("b") == 10.0);
        CHECK(ctx.derived.at("delta_var") == 1.0);
        CHECK(ctx.direction_overrides.empty());
    }
    SECTION("one-barrier walk from an interior start only dominates") {
        const auto from_zero = build_process("one_barrier", json{{"n", 8}, {"p", 0.5}});
        CHECK(from_zero.direction_overrides.empty());
        CHECK(from_zero.default_bound == Catch::Approx(64.0));
        const auto interior = build_process("one_barrier", json{{"n", 8}, {"x0", 3}, {"p", 0.5}});
        REQUIRE(interior.direction_overrides.count(Theorem::one_barrier) == 1);
        CHECK(interior.direction_overrides.at(Theorem::one_barrier) == Direction::upper);
    }
    SECTION("coupon collector") {
        const auto ctx = build_process("coupon", json{{"n", 100}});
        CHECK(ctx.derived.at("delta") == Catch::Approx(0.01));
        CHECK(ctx.derived.at("s") == 100.0);
        CHECK(ctx.default_bound == Catch::Approx(bounds::multiplicative_upper({100.0, 0.01, {}})));
    }
    SECTION("adjacent-swapped sorting start") {
        const auto ctx = build_process("inversion_sort", json{{"n", 16}, {"start", "adjacent"}});
        CHECK(ctx.derived.at("x0_mean") == 8.0);
        CHECK(ctx.derived.at("delta") == Catch::Approx(1.0 / 120.0));
    }
    SECTION("moran bound requires the single-mutant start") {
        const auto neutral = build_process("moran", json{{"n", 10}, {"r", 1.0}});
        CHECK(neutral.default_bound == Catch::Approx(50.0));
        const auto fit = build_process("moran", json{{"n", 3}, {"r", 2.0}});
        CHECK(fit.default_bound == Catch::Approx(12.75));
        const auto interior = build_process("moran", json{{"n", 10}, {"r", 1.0}, {"start", 5}});
        CHECK_FALSE(std::isfinite(interior.default_bound));
    }
    SECTION("planted 2-sat context") {
        const auto ctx = build_process("two_sat", json{{"vars", 8}, {"clauses", 20}});
        CHECK(ctx.derived.at("n") == 8.0);
        CHECK(ctx.derived.at("p") == 0.5);
        CHECK(ctx.default_bound == 64.0);
        REQUIRE(ctx.direction_overrides.count(Theorem::one_barrier) == 1);
        CHECK(ctx.direction_overrides.at(Theorem::one_barrier) == Direction::upper);
    }
}

TEST_CASE("reference covers for vertex cover instances") {
    const Graph path4 = Graph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}});
    const auto exact = minimum_vertex_cover_set(path4);
    CHECK(exact.size() == 2);
    const auto matching = maximal_matching_cover(path4);
    CHECK(matching.size() % 2 == 0);
    CHECK(matching.size() <= 2 * exact.size());
    for (const auto& cover : {exact, matching}) {
        std::vector<char> in_cover(4, 0);
        for (int v : cover) in_cover[static_cast<std::size_t>(v)] = 1;
        for (auto [u, v] : path4.edges)
            CHECK((in_cover[static_cast<std::size_t>(u)] || in_cover[static_cast<std::size_t>(v)]));
    }
    const Graph big = gen_gnp(30, 0.2, 5);
    CHECK_THROWS_AS(minimum_vertex_cover_set(big), std::invalid_argument);
}

TEST_CASE("coloring files parse strictly") {
    std::istringstream good("1\n2\n3\n1\n");
    const auto chi = parse_coloring(good);
    CHECK(chi == std::vector<std::uint8_t>{1, 2, 3, 1});

    std::istringstream out_of_range("1\n4\n");
    CHECK_THROWS_AS(parse_coloring(out_of_range), std::invalid_argument);
    std::istringstream trailing("1 2\n");
    CHECK_THROWS_AS(parse_coloring(trailing), std::invalid_argument);

    const TempDir dir;
    CHECK_THROWS_AS(load_coloring(dir.file("absent.txt")), std::runtime_error);
}

TEST_CASE("replicate runs are seeded independently of execution order") {
    const ExperimentConfig cfg = parse_config(barrier_config());
    const RunResult run = run_replicates(cfg);
    REQUIRE(run.samples.size() == 100);
    for (std::size_t i = 0; i < run.samples.size(); ++i)
        CHECK(run.samples[i].seed == derive_replicate_seed(cfg.master_seed, i));

    // A shorter run is a prefix of a longer one: replicate i depends only on
    // (master_seed, i).
    auto doc = barrier_config();
    doc["replicates"] = 40;
    const RunResult shorter = run_replicates(parse_config(doc));
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(shorter.samples[i].seed == run.samples[i].seed);
        CHECK(shorter.samples[i].hit.steps == run.samples[i].hit.steps);
    }
}

TEST_CASE("results are identical at any worker count") {
    const ExperimentConfig cfg = parse_config(barrier_config());
    REQUIRE(setenv("DRIFTKIT_THREADS", "1", 1) == 0);
    const std::string serial = samples_csv(run_replicates(cfg));
    REQUIRE(setenv("DRIFTKIT_THREADS", "3", 1) == 0);
    const std::string threaded = samples_csv(run_replicates(cfg));
    unsetenv("DRIFTKIT_THREADS");
    CHECK(serial == threaded);
}

TEST_CASE("worker count resolution") {
    unsetenv("DRIFTKIT_THREADS");
    CHECK(resolve_thread_count(1000) >= 1);
    CHECK(resolve_thread_count(1) == 1);  // never more workers than tasks

    REQUIRE(setenv("DRIFTKIT_THREADS", "7", 1) == 0);
    CHECK(resolve_thread_count(1000) == 7);
    REQUIRE(setenv("DRIFTKIT_THREADS", "0", 1) == 0);
    CHECK(resolve_thread_count(1000) >= 1);  // 0 falls back to the hardware default
    REQUIRE(setenv("DRIFTKIT_THREADS", "three", 1) == 0);
    CHECK_THROWS_AS(resolve_thread_count(1000), std::invalid_argument);
    unsetenv("DRIFTKIT_THREADS");
}

TEST_CASE("step budget resolution") {
    ExperimentConfig cfg;
    ProcessContext ctx;

    cfg.max_steps = 500;
    ctx.default_bound = 25.0;
    CHECK(resolve_max_steps(cfg, ctx) == 500);  // explicit budget wins

    cfg.max_steps = 0;
    CHECK(resolve_max_steps(cfg, ctx) == 2500);  // 100x the theorem bound

    ctx.default_bound = 0.1;
    CHECK(resolve_max_steps(cfg, ctx) == 100);  // floor for tiny bounds

    ctx.default_bound = std::numeric_limits<double>::quiet_NaN();
    CHECK(resolve_max_steps(cfg, ctx) == 10'000'000);
}

TEST_CASE("summaries exclude censored replicates") {
    auto samples = make_samples({10, 20, 30, 40}, 2);
    const SummaryReport report = summarize(samples);
    CHECK(report.n_replicates == 6);
    CHECK(report.n_censored == 2);
    CHECK(report.mean == Catch::Approx(25.0));
    CHECK(report.quantiles[2] == Catch::Approx(25.0));

    const auto all_censored = make_samples({}, 5);
    CHECK_THROWS_AS(summarize(all_censored), std::runtime_error);
}

TEST_CASE("summary statistics are order independent") {
    std::vector<std::uint64_t> steps;
    std::mt19937_64 src(3);
    for (int i = 0; i < 150; ++i) steps.push_back(src() % 1000);
    auto samples = make_samples(steps);
    const SummaryReport forward = summarize(samples);
    std::shuffle(samples.begin(), samples.end(), src);
    const SummaryReport shuffled = summarize(samples);
    CHECK(forward.mean == shuffled.mean);
    CHECK(forward.std_dev == shuffled.std_dev);
    CHECK(forward.ci_lo == shuffled.ci_lo);
    CHECK(forward.ci_hi == shuffled.ci_hi);
    CHECK(forward.quantiles == shuffled.quantiles);
}

TEST_CASE("confidence interval method selection") {
    SECTION("single uncensored replicate has no interval") {
        const SummaryReport report = summarize(make_samples({42}));
        CHECK(report.ci_method == "none");
        CHECK_FALSE(std::isfinite(report.ci_lo));
        CHECK(report.mean == 42.0);
        CHECK(report.std_dev == 0.0);
        CHECK(report.quantiles[0] == 42.0);
        CHECK(report.quantiles[4] == 42.0);
    }
    SECTION("small samples bootstrap deterministically") {
        std::vector<std::uint64_t> steps;
        for (std::uint64_t i = 0; i < 50; ++i) steps.push_back(10 + 3 * i);
        const auto samples = make_samples(steps);
        SummaryOptions opt;
        opt.bootstrap_seed = 99;
        const SummaryReport a = summarize(samples, opt);
        const SummaryReport b = summarize(samples, opt);
        CHECK(a.ci_method == "bootstrap");
        CHECK(a.ci_lo == b.ci_lo);
        CHECK(a.ci_hi == b.ci_hi);
        CHECK(a.ci_lo < a.mean);
        CHECK(a.ci_hi > a.mean);
        // The interval is data-driven, so a different resampling seed moves
        // it slightly but must not move it far.
        opt.bootstrap_seed = 100;
        const SummaryReport c = summarize(samples, opt);
        CHECK(c.ci_lo != a.ci_lo);
        CHECK(std::abs(c.ci_lo - a.ci_lo) < 5.0);
    }
    SECTION("large samples use the normal interval") {
        std::vector<std::uint64_t> steps;
        for (std::uint64_t i = 0; i < 120; ++i) steps.push_back(i);
        const SummaryReport report = summarize(make_samples(steps));
        CHECK(report.ci_method == "normal");
        const double half = 1.959963984540054 * report.std_dev / std::sqrt(120.0);
        CHECK(report.ci_lo == Catch::Approx(report.mean - half));
        CHECK(report.ci_hi == Catch::Approx(report.mean + half));
    }
    SECTION("forcing a method overrides the sample-size rule") {
        std::vector<std::uint64_t> steps;
        for (std::uint64_t i = 0; i < 120; ++i) steps.push_back(i);
        SummaryOptions opt;
        opt.method = SummaryOptions::CiMethod::bootstrap;
        CHECK(summarize(make_samples(steps), opt).ci_method == "bootstrap");
        opt.method = SummaryOptions::CiMethod::normal;
        CHECK(summarize(make_samples({1, 2, 3}), opt).ci_method == "normal");
    }
}

TEST_CASE("bound verdicts from the interval") {
    SummaryReport report;
    report.ci_lo = 10.0;
    report.ci_hi = 20.0;
    BoundReport bound;

    bound.direction = Direction::upper;
    bound.bound = 15.0;
    CHECK(verify_bound(report, bound) == Verdict::consistent);
    bound.bound = 5.0;
    CHECK(verify_bound(report, bound) == Verdict::violated);

    bound.direction = Direction::lower;
    bound.bound = 15.0;
    CHECK(verify_bound(report, bound) == Verdict::consistent);
    bound.bound = 25.0;
    CHECK(verify_bound(report, bound) == Verdict::violated);

    bound.direction = Direction::exact;
    bound.bound = 15.0;
    CHECK(verify_bound(report, bound) == Verdict::consistent);
    bound.bound = 25.0;
    CHECK(verify_bound(report, bound) == Verdict::violated);
    bound.bound = 5.0;
    CHECK(verify_bound(report, bound) == Verdict::violated);

    SummaryReport no_ci;
    CHECK(verify_bound(no_ci, bound) == Verdict::inconclusive);
}

TEST_CASE("tail checks count censored replicates as exceedances") {
    // 50 replicates finish immediately, 50 are censored: the censored half
    // exceeds any threshold, which breaks the e^-k bound for k >= 1.
    const auto samples = make_samples(std::vector<std::uint64_t>(50, 1), 50);
    const auto results = tail_check(samples, 1.0, 1.0, {0.0, 1.0, 5.0});
    REQUIRE(results.size() == 3);
    CHECK(results[0].prob_bound == 1.0);  // k = 0 is trivially consistent
    CHECK(results[0].verdict == Verdict::consistent);
    CHECK(results[1].exceedance == Catch::Approx(0.5));
    CHECK(results[1].verdict == Verdict::violated);
    CHECK(results[2].verdict == Verdict::violated);

    SECTION("a genuinely light tail passes") {
        // All 100 replicates at step 1, thresholds are k / 0.5 >= 2.
        const auto fast = make_samples(std::vector<std::uint64_t>(100, 1));
        for (const TailResult& res : tail_check(fast, 1.0, 0.5, {1.0, 2.0, 3.0})) {
            CHECK(res.exceedance == 0.0);
            CHECK(res.verdict == Verdict::consistent);
        }
    }
    SECTION("input validation") {
        CHECK_THROWS_AS(tail_check(samples, 0.5, 1.0, {1.0}), std::invalid_argument);
        CHECK_THROWS_AS(tail_check(samples, 1.0, 0.0, {1.0}), std::invalid_argument);
        CHECK_THROWS_AS(tail_check(samples, 1.0, 1.0, {-0.5}), std::invalid_argument);
        CHECK_THROWS_AS(tail_check({}, 1.0, 1.0, {1.0}), std::invalid_argument);
    }
}

TEST_CASE("bound resolution merges spec and derived parameters") {
    ProcessContext ctx;
    ctx.name = "synthetic";
    ctx.derived = {{"x0_mean", 5.0}, {"delta", 1.0}};

    BoundSpec spec;
    spec.theorem = Theorem::additive_upper;
    SECTION("derived parameters fill the gaps") {
        const BoundReport report = resolve_bound(spec, ctx);
        CHECK(report.bound == Catch::Approx(5.0));
        CHECK(report.direction == Direction::upper);
    }
    SECTION("explicit parameters win over derived ones") {
        spec.params["x0_mean"] = 7.0;
        const BoundReport report = resolve_bound(spec, ctx);
        CHECK(report.inputs.at("x0_mean") == 7.0);
        CHECK(report.inputs.at("delta") == 1.0);
        CHECK(report.bound == Catch::Approx(7.0));
    }
    SECTION("missing parameters are reported") {
        spec.theorem = Theorem::additive_lower;  // needs step_bound too
        CHECK_THROWS_WITH(resolve_bound(spec, ctx),
                          Catch::Matchers::ContainsSubstring("step_bound"));
    }
    SECTION("integer parameters must be integral") {
        spec.theorem = Theorem::two_barrier;
        spec.params = {{"n", 10.5}, {"x0", 5.0}, {"p", 0.5}};
        CHECK_THROWS_AS(resolve_bound(spec, ctx), std::invalid_argument);
    }
    SECTION("the variable-drift theorem is not configurable") {
        spec.theorem = Theorem::variable;
        CHECK_THROWS_AS(resolve_bound(spec, ctx), std::invalid_argument);
    }
    SECTION("tail bounds report their parameters without a mean bound") {
        spec.theorem = Theorem::multiplicative_tail;
        spec.params = {{"s", 5.0}, {"delta", 0.1}};
        const BoundReport report = resolve_bound(spec, ctx);
        CHECK(report.inputs.at("s") == 5.0);
        CHECK(report.inputs.at("delta") == 0.1);
        CHECK(std::isnan(report.bound));
    }
}

TEST_CASE("bound resolution direction precedence") {
    ProcessContext ctx;
    ctx.name = "synthetic";
    ctx.derived = {{"n", 8.0}, {"p", 0.5}};
    BoundSpec spec;
    spec.theorem = Theorem::one_barrier;

    // Default: the theorem's own direction.
    CHECK(resolve_bound(spec, ctx).direction == direction_of(Theorem::one_barrier));

    // A process override takes effect when the spec is silent.
    ctx.direction_overrides[Theorem::one_barrier] = Direction::upper;
    CHECK(resolve_bound(spec, ctx).direction == Direction::upper);

    // An explicit spec direction beats the override.
    spec.direction = Direction::lower;
    CHECK(resolve_bound(spec, ctx).direction == Direction::lower);
}

TEST_CASE("samples serialize to the documented schema") {
    RunResult run;
    run.samples = {{111, {7, false}}, {222, {900, true}}};
    CHECK(samples_csv(run) ==
          "replicate_index,seed,steps,censored\n"
          "0,111,7,0\n"
          "1,222,900,1\n");
}

TEST_CASE("trajectories round-trip through CSV") {
    RunResult run;
    Trajectory a;
    a.potentials = {3.0, 2.0, 2.5, 0.0};
    Trajectory b;
    b.potentials = {2.0, 1.0, 0.0};
    run.trajectories = {a, b};
    const std::string csv = trajectories_csv(run);

    std::istringstream in(csv);
    const auto parsed = parse_trajectories_csv(in);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].potentials == a.potentials);
    CHECK(parsed[1].potentials == b.potentials);

    SECTION("rows may arrive out of order") {
        std::istringstream shuffled(
            "replicate_index,t,potential\n"
            "0,1,2\n"
            "1,0,5\n"
            "0,0,3\n"
            "1,1,4\n");
        const auto out = parse_trajectories_csv(shuffled);
        REQUIRE(out.size() == 2);
        CHECK(out[0].potentials == std::vector<double>{3.0, 2.0});
        CHECK(out[1].potentials == std::vector<double>{5.0, 4.0});
    }
    SECTION("header and shape are validated") {
        std::istringstream bad_header("replicate,t,potential\n0,0,3\n");
        CHECK_THROWS_AS(parse_trajectories_csv(bad_header), std::invalid_argument);
        std::istringstream bad_row("replicate_index,t,potential\n0,0\n");
        CHECK_THROWS_AS(parse_trajectories_csv(bad_row), std::invalid_argument);
        std::istringstream gap("replicate_index,t,potential\n0,0,3\n0,2,1\n");
        CHECK_THROWS_AS(parse_trajectories_csv(gap), std::invalid_argument);
    }
}

TEST_CASE("histograms cover exactly the uncensored samples") {
    const auto samples = make_samples({1, 2, 3, 50, 51, 52, 100}, 3);
    const std::string csv = histogram_csv(samples, 10);
    std::istringstream in(csv);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "bin_lo,bin_hi,count");
    std::uint64_t total = 0;
    while (std::getline(in, line)) {
        const auto last_comma = line.rfind(',');
        total += std::stoull(line.substr(last_comma + 1));
    }
    CHECK(total == 7);

    CHECK(histogram_csv({}, 10) == "bin_lo,bin_hi,count\n");
    CHECK_THROWS_AS(histogram_csv(samples, 0), std::invalid_argument);
}

TEST_CASE("pipeline writes outputs and reports verdicts") {
    const TempDir dir;
    auto doc = barrier_config();
    doc["record_trajectories"] = true;
    doc["outputs"] = {{"samples", dir.file("samples.csv")},
                      {"trajectories", dir.file("trajectories.csv")},
                      {"summary", dir.file("summary.json")}};
    doc["bounds"] = json::array({json{{"theorem", "two_barrier"}},
                                 json{{"theorem", "martingale_upper"}}});
    const PipelineResult result = run_pipeline(parse_config(doc), true);

    CHECK_FALSE(result.any_violated);
    REQUIRE(result.summary.bound_verdicts.size() == 2);
    CHECK(result.summary.bound_verdicts[0].verdict == Verdict::consistent);
    CHECK(result.summary.bound_verdicts[1].verdict == Verdict::consistent);

    // The files landed, parse back, and no temp droppings remain.
    std::ifstream tr(dir.file("trajectories.csv"));
    REQUIRE(tr.good());
    CHECK(parse_trajectories_csv(tr).size() == 100);
    std::ifstream sum(dir.file("summary.json"));
    REQUIRE(sum.good());
    const json summary = json::parse(sum);
    CHECK(summary.at("process") == "two_barrier");
    CHECK(summary.at("n_censored") == 0);
    CHECK(summary.at("bounds").size() == 2);
    CHECK(summary.at("bounds")[0].at("verdict") == "consistent");
    CHECK(summary.at("ci_method") == "normal");
    REQUIRE(summary.at("ci95").is_array());
    CHECK(summary.at("ci95")[0].get<double>() < summary.at("mean").get<double>());
    for (const auto& entry : std::filesystem::directory_iterator(dir.path))
        CHECK(entry.path().extension() != ".tmp");
}

TEST_CASE("pipeline flags violated bounds") {
    auto doc = barrier_config();  // true mean is 64
    doc["bounds"] = json::array(
        {json{{"theorem", "two_barrier"},
              {"params", {{"n", 4}, {"x0", 2}, {"p", 0.5}}}}});  // claims exactly 4
    const PipelineResult result = run_pipeline(parse_config(doc), true);
    CHECK(result.any_violated);
    REQUIRE(result.summary.bound_verdicts.size() == 1);
    CHECK(result.summary.bound_verdicts[0].verdict == Verdict::violated);
}

TEST_CASE("pipeline rejects trajectory output without recording") {
    const TempDir dir;
    auto doc = barrier_config();
    doc["outputs"] = {{"trajectories", dir.file("trajectories.csv")}};
    CHECK_THROWS_AS(run_pipeline(parse_config(doc), false), std::invalid_argument);
}

TEST_CASE("pipeline skips bound evaluation when asked to simulate only") {
    auto doc = barrier_config();
    doc["bounds"] = json::array({json{{"theorem", "two_barrier"}}});
    const PipelineResult result = run_pipeline(parse_config(doc), false);
    CHECK(result.summary.bound_verdicts.empty());
    CHECK(result.document.at("bounds").empty());
    CHECK_FALSE(result.any_violated);
}

TEST_CASE("tail entries fold into one verdict per bound") {
    auto doc = barrier_config();
    doc["process"] = "coupon";
    doc["params"] = {{"n", 16}};
    doc["replicates"] = 400;
    doc["bounds"] = json::array(
        {json{{"theorem", "multiplicative_tail"}, {"ks", {1.0, 2.0, 3.0}}}});
    const PipelineResult result = run_pipeline(parse_config(doc), true);
    REQUIRE(result.summary.bound_verdicts.size() == 1);
    const VerdictEntry& entry = result.summary.bound_verdicts[0];
    REQUIRE(entry.tail.size() == 3);
    CHECK(std::isnan(entry.report.bound));
    const json& bound_doc = result.document.at("bounds")[0];
    CHECK(bound_doc.at("bound").is_null());
    REQUIRE(bound_doc.at("checks").size() == 3);
    CHECK(bound_doc.at("checks")[0].at("k") == 1.0);
}
