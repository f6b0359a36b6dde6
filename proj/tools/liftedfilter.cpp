// Command-line harness: sample observation traces, run the lifted or
// grounded filter over them, compare the two engines, validate scenario
// files.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lifted/errors.hpp"
#include "lifted/filter.hpp"
#include "lifted/grounded.hpp"
#include "lifted/scenario.hpp"

namespace fs = std::filesystem;
using namespace lifted;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitImpossible = 3;
constexpr int kExitExplosion = 4;

std::string format_double(double d) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
    return std::string(buf, ptr);
}

struct Query {
    SlotName selector_slot;
    Value selector_value;
    SlotName query_slot;
    std::string text;
};

Query parse_query(const std::string& text) {
    const auto eq = text.find('=');
    const auto colon = text.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos || eq == 0 || colon <= eq + 1 ||
        colon + 1 >= text.size()) {
        throw ParseError("bad query '" + text + "', expected SEL_SLOT=VALUE:QUERY_SLOT");
    }
    Query q;
    q.selector_slot = text.substr(0, eq);
    q.selector_value = Value(text.substr(eq + 1, colon - eq - 1));
    q.query_slot = text.substr(colon + 1);
    q.text = text;
    return q;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    return out;
}

struct CommonArgs {
    std::string scenario;
    std::string scenario_file;
    std::string trace_path;
    std::optional<std::uint64_t> seed;
    long horizon = -1;
    std::string engine = "lifted";
    std::vector<std::string> query_texts;
    std::string out_dir = ".";
    std::size_t guard = 1000000;
    double prune = 0.0;
    int threads = 1;
    bool report_unmerged = false;
};

void add_scenario_flags(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--scenario", args.scenario, "built-in scenario, e.g. warehouse:n=3");
    cmd->add_option("--scenario-file", args.scenario_file, "path to a .scn file");
}

Scenario resolve_scenario(const CommonArgs& args) {
    if (args.scenario.empty() == args.scenario_file.empty()) {
        throw ParseError("give exactly one of --scenario / --scenario-file");
    }
    return args.scenario.empty() ? load_scenario(args.scenario_file)
                                 : builtin_scenario(args.scenario);
}

Trace resolve_trace(const CommonArgs& args, const Scenario& scenario) {
    if (!args.trace_path.empty() && args.seed) {
        throw ParseError("give exactly one of --trace / --seed");
    }
    if (!args.trace_path.empty()) return read_trace(args.trace_path);
    if (args.seed) {
        const long horizon = args.horizon >= 0 ? args.horizon : scenario.horizon;
        return sample_trace(scenario, *args.seed, horizon);
    }
    throw ParseError("give one of --trace / --seed");
}

struct EngineRun {
    std::vector<StepMetrics> metrics;
    // one MarginalSeries per query, in query order
    std::vector<MarginalSeries> series;
};

EngineRun run_lifted(const Scenario& scenario, const Trace& trace,
                     const std::vector<Query>& queries, FilterOptions options) {
    ExpansionCache cache;
    options.cache = &cache;
    EngineRun run;
    run.series.resize(queries.size());
    LiftedBelief belief = make_belief(scenario.initial);
    if (trace.observations.empty()) {
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            run.series[qi].marginals.push_back(query(belief, queries[qi].selector_slot,
                                                     queries[qi].selector_value,
                                                     queries[qi].query_slot));
            run.series[qi].hypothesis_counts.push_back(belief.size());
        }
        return run;
    }
    for (const auto& obs : trace.observations) {
        StepResult res = step(belief, obs, scenario.schemas, scenario.sensors, options);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            run.series[qi].marginals.push_back(query(res.updated, queries[qi].selector_slot,
                                                     queries[qi].selector_value,
                                                     queries[qi].query_slot));
            run.series[qi].hypothesis_counts.push_back(res.updated.size());
        }
        run.metrics.push_back(res.metrics);
        belief = std::move(res.predicted);
    }
    return run;
}

EngineRun run_grounded(const Scenario& scenario, const Trace& trace,
                       const std::vector<Query>& queries, std::size_t guard) {
    EngineRun run;
    run.series.resize(queries.size());
    GroundBelief belief = ground_initial(scenario.initial, guard);
    if (trace.observations.empty()) {
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            run.series[qi].marginals.push_back(
                ground_query(belief, queries[qi].selector_slot, queries[qi].selector_value,
                             queries[qi].query_slot));
            run.series[qi].hypothesis_counts.push_back(belief.size());
        }
        return run;
    }
    for (const auto& obs : trace.observations) {
        const auto start = std::chrono::steady_clock::now();
        StepMetrics m;
        m.t = obs.t;
        m.n_hyp_pre = belief.size();
        try {
            belief = ground_update(belief, obs, scenario.sensors);
        } catch (const ExplosionGuard& e) {
            throw ExplosionGuard(std::string(e.what()) + " (updating t=" +
                                     std::to_string(obs.t) + ")",
                                 e.count);
        }
        m.n_hyp_post_update = belief.size();
        m.n_hyp_post_update_unmerged = belief.size();
        for (std::size_t qi = 0; qi < queries.size(); ++qi) {
            run.series[qi].marginals.push_back(
                ground_query(belief, queries[qi].selector_slot, queries[qi].selector_value,
                             queries[qi].query_slot));
            run.series[qi].hypothesis_counts.push_back(belief.size());
        }
        try {
            belief = ground_predict(belief, scenario.schemas, guard);
        } catch (const ExplosionGuard& e) {
            throw ExplosionGuard(std::string(e.what()) + " (predicting t=" +
                                     std::to_string(obs.t + 1) + ")",
                                 e.count);
        }
        m.n_hyp_post_predict = belief.size();
        m.n_hyp_post_predict_unmerged = belief.size();
        m.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                   .count();
        run.metrics.push_back(m);
    }
    return run;
}

void write_metrics(const EngineRun& run, const std::string& engine, const fs::path& dir,
                   bool report_unmerged) {
    std::ofstream csv(dir / ("metrics-" + engine + ".csv"));
    std::ofstream jsonl(dir / ("metrics-" + engine + ".jsonl"));
    csv << "t,n_hyp_pre,n_hyp_post_update,n_hyp_post_predict,n_splits,n_merges,ms\n";
    for (const auto& m : run.metrics) {
        const std::size_t post_update =
            report_unmerged ? m.n_hyp_post_update_unmerged : m.n_hyp_post_update;
        const std::size_t post_predict =
            report_unmerged ? m.n_hyp_post_predict_unmerged : m.n_hyp_post_predict;
        csv << m.t << ',' << m.n_hyp_pre << ',' << post_update << ',' << post_predict << ','
            << m.n_splits << ',' << m.n_merges << ',' << format_double(m.ms) << "\n";
        nlohmann::ordered_json rec;
        rec["t"] = m.t;
        rec["n_hyp_pre"] = m.n_hyp_pre;
        rec["n_hyp_post_update"] = post_update;
        rec["n_hyp_post_predict"] = post_predict;
        rec["n_splits"] = m.n_splits;
        rec["n_merges"] = m.n_merges;
        rec["ms"] = m.ms;
        jsonl << rec.dump() << "\n";
    }
}

void write_marginals(const EngineRun& run, const std::string& engine,
                     const std::vector<Query>& queries, const fs::path& dir) {
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        std::ofstream csv(dir / ("marginals-" + engine + "-" + sanitize(queries[qi].text) +
                                 ".csv"));
        csv << "t,value,probability\n";
        const auto& series = run.series[qi];
        for (std::size_t t = 0; t < series.marginals.size(); ++t) {
            for (const auto& [v, p] : series.marginals[t]) {
                csv << t << ',' << v.symbol << ',' << format_double(p.to_double()) << "\n";
            }
        }
    }
}

int cmd_sample(const CommonArgs& args) {
    const Scenario scenario = resolve_scenario(args);
    if (!args.seed) throw ParseError("sample needs --seed");
    const long horizon = args.horizon >= 0 ? args.horizon : scenario.horizon;
    const Trace trace = sample_trace(scenario, *args.seed, horizon);

    fs::create_directories(args.out_dir);
    const std::string stem =
        scenario.name + "-s" + std::to_string(*args.seed) + "-h" + std::to_string(horizon);
    const fs::path trace_path = fs::path(args.out_dir) / (stem + ".trace");
    const fs::path truth_path = fs::path(args.out_dir) / (stem + ".truth.jsonl");
    write_trace(trace, trace_path.string());
    write_truth(trace, truth_path.string());

    std::cout << "sampled scenario=" << scenario.name << " seed=" << *args.seed
              << " horizon=" << horizon << "\n";
    std::cout << "trace: " << trace_path.string() << "\n";
    std::cout << "truth: " << truth_path.string() << "\n";
    long identified = 0;
    for (const auto& obs : trace.observations) {
        for (const auto& [id, reading] : obs.readings) {
            if (reading.ids && !reading.ids->empty()) ++identified;
        }
    }
    std::cout << "identifying readings: " << identified << "\n";
    return 0;
}

int cmd_filter(const CommonArgs& args, bool force_grounded) {
    const Scenario scenario = resolve_scenario(args);
    const Trace trace = resolve_trace(args, scenario);
    std::vector<Query> queries;
    for (const auto& text : args.query_texts) queries.push_back(parse_query(text));

    std::string engine = force_grounded ? "grounded" : args.engine;
    if (engine != "lifted" && engine != "grounded" && engine != "both") {
        throw ParseError("--engine must be lifted, grounded or both");
    }
    FilterOptions options;
    options.hypothesis_guard = args.guard;
    options.threads = args.threads;
    if (args.prune > 0) {
        options.prune_enabled = true;
        options.prune_epsilon = Rational::from_double(args.prune);
    }

    fs::create_directories(args.out_dir);
    if (engine == "lifted" || engine == "both") {
        const EngineRun run = run_lifted(scenario, trace, queries, options);
        write_metrics(run, "lifted", args.out_dir, args.report_unmerged);
        write_marginals(run, "lifted", queries, args.out_dir);
        std::size_t peak = 0;
        for (const auto& m : run.metrics) {
            peak = std::max({peak, m.n_hyp_post_update, m.n_hyp_post_predict});
        }
        std::cout << "engine=lifted steps=" << run.metrics.size() << " peak_hypotheses=" << peak
                  << "\n";
    }
    if (engine == "grounded" || engine == "both") {
        const EngineRun run = run_grounded(scenario, trace, queries, args.guard);
        write_metrics(run, "grounded", args.out_dir, args.report_unmerged);
        write_marginals(run, "grounded", queries, args.out_dir);
        std::size_t peak = 0;
        for (const auto& m : run.metrics) {
            peak = std::max({peak, m.n_hyp_post_update, m.n_hyp_post_predict});
        }
        std::cout << "engine=grounded steps=" << run.metrics.size() << " peak_hypotheses=" << peak
                  << "\n";
    }
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    const Scenario scenario = resolve_scenario(args);
    const Trace trace = resolve_trace(args, scenario);
    std::vector<Query> queries;
    for (const auto& text : args.query_texts) queries.push_back(parse_query(text));

    FilterOptions options;
    options.hypothesis_guard = args.guard;
    options.threads = args.threads;

    const EngineRun lifted_run = run_lifted(scenario, trace, queries, options);
    const EngineRun ground_run = run_grounded(scenario, trace, queries, args.guard);

    fs::create_directories(args.out_dir);
    std::ofstream csv(fs::path(args.out_dir) / "compare.csv");
    csv << "t,query,max_abs_diff,n_hyp_lifted,n_hyp_grounded\n";

    double worst = 0;
    bool count_violation = false;
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const CompareReport report = compare(lifted_run.series[qi], ground_run.series[qi]);
        for (const auto& row : report.rows) {
            csv << row.t << ',' << queries[qi].text << ','
                << format_double(row.max_abs_diff.to_double()) << ',' << row.n_lifted << ','
                << row.n_grounded << "\n";
            worst = std::max(worst, row.max_abs_diff.to_double());
            if (row.n_lifted > row.n_grounded) count_violation = true;
        }
        if (report.length_mismatch) {
            std::cerr << "compare: series length mismatch for query " << queries[qi].text << "\n";
            return 1;
        }
    }
    if (queries.empty()) {
        // No queries: still compare hypothesis counts per timestep.
        MarginalSeries lifted_counts, ground_counts;
        LiftedBelief belief = make_belief(scenario.initial);
        GroundBelief gb = ground_initial(scenario.initial, args.guard);
        for (const auto& obs : trace.observations) {
            StepResult res = step(belief, obs, scenario.schemas, scenario.sensors, options);
            gb = ground_update(gb, obs, scenario.sensors);
            csv << obs.t << ",," << format_double(0.0) << ',' << res.updated.size() << ','
                << gb.size() << "\n";
            if (res.updated.size() > gb.size()) count_violation = true;
            belief = std::move(res.predicted);
            gb = ground_predict(gb, scenario.schemas, args.guard);
        }
    }

    std::cout << "max_abs_diff=" << format_double(worst)
              << " count_ok=" << (count_violation ? "no" : "yes") << "\n";
    if (worst > 1e-9) {
        std::cerr << "compare: marginals differ by " << format_double(worst) << "\n";
        return 1;
    }
    return 0;
}

int cmd_validate(const CommonArgs& args) {
    const Scenario scenario = resolve_scenario(args);
    std::cout << "ok: " << scenario.name << ": " << scenario.locations.size() << " locations, "
              << scenario.schemas.size() << " schemas, " << scenario.sensors.size()
              << " sensors, " << scenario.initial.size() << " initial hypotheses\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact lifted Bayesian filtering over multiset states"};
    app.require_subcommand(1);

    CommonArgs args;

    auto* sample = app.add_subcommand("sample", "sample a ground-truth observation trace");
    add_scenario_flags(sample, args);
    sample->add_option("--seed", args.seed, "RNG seed");
    sample->add_option("--horizon", args.horizon, "number of observed timesteps");
    sample->add_option("--out-dir", args.out_dir, "output directory");

    auto add_run_flags = [&](CLI::App* cmd) {
        add_scenario_flags(cmd, args);
        cmd->add_option("--trace", args.trace_path, "observation trace file");
        cmd->add_option("--seed", args.seed, "sample a trace with this seed instead");
        cmd->add_option("--horizon", args.horizon, "horizon when sampling via --seed");
        cmd->add_option("--query", args.query_texts, "SEL_SLOT=VALUE:QUERY_SLOT, repeatable");
        cmd->add_option("--out-dir", args.out_dir, "output directory");
        cmd->add_option("--guard", args.guard, "state-count guard");
        cmd->add_option("--prune", args.prune, "drop hypotheses below this weight (default off)");
        cmd->add_option("--threads", args.threads, "parallel hypothesis expansion");
        cmd->add_flag("--report-unmerged", args.report_unmerged,
                      "report hypothesis counts before merging");
        bool merged = false;
        cmd->add_flag("--report-merged", merged, "report merged hypothesis counts (default)");
    };

    auto* filter = app.add_subcommand("filter", "run a filter over a trace");
    add_run_flags(filter);
    filter->add_option("--engine", args.engine, "lifted, grounded or both");

    auto* oracle = app.add_subcommand("oracle", "run the exact grounded filter");
    add_run_flags(oracle);

    auto* comp = app.add_subcommand("compare", "run both engines and compare marginals");
    add_run_flags(comp);

    auto* validate_cmd = app.add_subcommand("validate", "load and validate a scenario");
    add_scenario_flags(validate_cmd, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (sample->parsed()) return cmd_sample(args);
        if (filter->parsed()) return cmd_filter(args, false);
        if (oracle->parsed()) return cmd_filter(args, true);
        if (comp->parsed()) return cmd_compare(args);
        if (validate_cmd->parsed()) return cmd_validate(args);
    } catch (const ImpossibleObservation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitImpossible;
    } catch (const ExplosionGuard& e) {
        std::cerr << "error: " << e.what() << " (count=" << e.count << ")\n";
        return kExitExplosion;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UnknownScenario& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitConfig;
}
