#include <metaloc/channel.hpp>
#include <metaloc/errors.hpp>
#include <metaloc/experiments.hpp>
#include <metaloc/importance.hpp>
#include <metaloc/meta.hpp>
#include <metaloc/model.hpp>
#include <metaloc/parallel.hpp>
#include <metaloc/report.hpp>
#include <metaloc/rng.hpp>
#include <metaloc/scenario_io.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace metaloc;
using meta::Algorithm;
using nlohmann::json;

namespace {

enum Exit { ok = 0, usage = 2, data = 3, numeric = 4, internal = 1 };

// Flags that override MetaConfig fields; unset flags keep the base value.
struct Overrides {
    std::string config_file;
    std::optional<double> alpha, beta, gamma;
    std::optional<std::size_t> inner_steps, meta_iterations, meta_batch, query_per_rp, base_epochs, baseline_epochs;
    std::optional<std::size_t> convergence_window;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "MetaConfig JSON (or a run.json manifest) to start from");
        cmd->add_option("--alpha", alpha, "inner step size");
        cmd->add_option("--beta", beta, "meta step size");
        cmd->add_option("--gamma", gamma, "importance intensity");
        cmd->add_option("--inner-steps", inner_steps);
        cmd->add_option("--meta-iterations", meta_iterations);
        cmd->add_option("--meta-batch", meta_batch);
        cmd->add_option("--query-per-rp", query_per_rp);
        cmd->add_option("--base-epochs", base_epochs);
        cmd->add_option("--baseline-epochs", baseline_epochs);
        cmd->add_option("--convergence-window", convergence_window);
    }

    meta::MetaConfig resolve(std::uint64_t seed, std::size_t shots) const {
        meta::MetaConfig c;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw DataError("cannot read config " + config_file);
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                throw DataError(config_file + ": " + e.what());
            }
            c = meta::config_from_json(doc.contains("config") ? doc.at("config") : doc);
        }
        if (alpha) c.alpha = *alpha;
        if (beta) c.beta = *beta;
        if (gamma) c.gamma = *gamma;
        if (inner_steps) c.inner_steps = *inner_steps;
        if (meta_iterations) c.meta_iterations = *meta_iterations;
        if (meta_batch) c.meta_batch = *meta_batch;
        if (query_per_rp) c.query_per_rp = *query_per_rp;
        if (base_epochs) c.base_epochs = *base_epochs;
        if (baseline_epochs) c.baseline_epochs = *baseline_epochs;
        if (convergence_window) c.convergence_window = *convergence_window;
        c.seed = seed;
        c.shots = shots;
        c.validate();
        return c;
    }
};

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    return std::to_string(std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count());
}

json manifest(const std::string& command, const meta::MetaConfig& cfg) {
    return {{"command", command},
            {"config", meta::to_json(cfg)},
            {"threads", worker_count()},
            {"started_unix", timestamp()}};
}

void progress_line(const std::string& line) { std::cerr << "[metaloc] " << line << '\n'; }

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stoul(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(std::string("bad ") + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError(std::string("empty ") + what + " list");
    return out;
}

std::vector<Algorithm> parse_algorithms(const std::string& text) {
    std::vector<Algorithm> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(meta::parse_algorithm(item));
    if (out.empty()) throw ConfigError("empty algorithm list");
    return out;
}

const Scenario& find_scenario(const std::vector<Scenario>& all, const std::string& id) {
    for (const auto& sc : all)
        if (sc.id == id) return sc;
    throw DataError("no scenario with id '" + id + "'");
}

// ---- gen

struct GenArgs {
    std::size_t scenarios = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t rows = 3, cols = 4, samples_per_rp = 40;
    double spacing_cm = 60.0;
};

int run_gen(const GenArgs& a) {
    if (a.scenarios == 0) throw ConfigError("--scenarios must be at least 1");
    ChannelConfig cc;
    cc.grid = {a.rows, a.cols, a.spacing_cm};
    cc.samples_per_rp = a.samples_per_rp;
    cc.validate();
    fs::create_directories(a.out);
    std::vector<Scenario> out(a.scenarios);
    parallel_for(a.scenarios, [&](std::size_t k) {
        out[k] = generate_scenario(derive_seed(a.seed, "data", k), cc);
        out[k].id = "scenario_" + std::to_string(k);
    });
    for (std::size_t k = 0; k < a.scenarios; ++k) save_scenario(out[k], fs::path(a.out) / (out[k].id + ".json"));
    progress_line("wrote " + std::to_string(a.scenarios) + " scenarios to " + a.out);
    return ok;
}

// ---- importance

struct ImportanceArgs {
    std::string data, out;
    std::size_t k = 5;
    std::uint64_t seed = 0;
    Overrides over;
};

int run_importance(const ImportanceArgs& a) {
    const auto cfg = a.over.resolve(a.seed, a.k);
    const auto tasks = load_scenario_dir(a.data);
    const auto iv = meta::compute_importance(tasks, cfg);
    json doc = meta::to_json(iv);
    doc["config"] = meta::to_json(cfg);
    eval::write_json(a.out, doc);
    return ok;
}

// ---- train

struct TrainArgs {
    std::string algo, data, out, importance, target;
    std::size_t k = 5;
    std::uint64_t seed = 0;
    Overrides over;
};

int run_train(const TrainArgs& a) {
    const Algorithm algo = meta::parse_algorithm(a.algo);
    const auto cfg = a.over.resolve(a.seed, a.k);
    const auto tasks = load_scenario_dir(a.data);
    const fs::path out(a.out);
    fs::create_directories(out);

    json run = manifest("train", cfg);
    run["algorithm"] = meta::to_string(algo);
    run["data"] = a.data;
    std::vector<meta::TraceRow> trace;
    ParamSet theta;

    if (meta::is_meta_learner(algo)) {
        std::optional<meta::ImportanceVector> iv;
        if (algo == Algorithm::tb_maml) {
            if (!a.importance.empty()) {
                std::ifstream in(a.importance);
                if (!in) throw DataError("cannot read importance file " + a.importance);
                try {
                    iv = meta::importance_from_json(json::parse(in));
                } catch (const json::exception& e) {
                    throw DataError(a.importance + ": " + e.what());
                }
            } else {
                progress_line("computing importance over " + std::to_string(tasks.size()) + " tasks");
                iv = meta::compute_importance(tasks, cfg);
                eval::write_json(out / "importance.json", meta::to_json(*iv));
            }
            run["importance"] = meta::to_json(*iv);
        }
        const auto res = meta::meta_train(algo, tasks, cfg, iv ? &*iv : nullptr);
        theta = res.theta;
        trace = res.trace;
        run["iterations"] = res.iterations;
        run["converged"] = res.converged;
        run["step_clamped"] = res.step_clamped;
        run["tasks"] = json::array();
        for (const auto& t : tasks) run["tasks"].push_back(t.id);
    } else {
        const Scenario& target = a.target.empty() ? tasks.back() : find_scenario(tasks, a.target);
        const auto split = split_task(target, a.k, derive_seed(a.seed, "split/" + target.id));
        const Batch support = make_batch(target, split.support);
        run["target"] = target.id;
        run["split_seed"] = split.seed;
        if (algo == Algorithm::conventional) {
            theta = meta::train_conventional(support, cfg, derive_seed(a.seed, "init"));
        } else {
            std::vector<const Scenario*> sources;
            for (const auto& sc : tasks)
                if (sc.id != target.id) sources.push_back(&sc);
            if (sources.empty()) throw DataError("transfer needs a source scenario besides the target");
            Rng rng = make_rng(a.seed, "transfer-source");
            const Scenario& source = *sources[std::uniform_int_distribution<std::size_t>(0, sources.size() - 1)(rng)];
            run["source"] = source.id;
            theta = meta::train_transfer(make_batch(source), support, cfg, derive_seed(a.seed, "init"));
        }
    }

    save_params(theta, out / "theta.json");
    eval::write_trace_csv(out / "trace.csv", trace);
    run["checkpoint"] = (out / "theta.json").string();
    run["trace"] = (out / "trace.csv").string();
    eval::write_json(out / "run.json", run);
    return ok;
}

// ---- eval

struct EvalArgs {
    std::string checkpoint, data, out, label = "maml";
    std::size_t k = 5;
    std::uint64_t seed = 0;
    Overrides over;
};

int run_eval(const EvalArgs& a) {
    const auto cfg = a.over.resolve(a.seed, a.k);
    const ParamSet theta = load_params(a.checkpoint);
    model::check_layout(theta);
    const auto tasks = load_scenario_dir(a.data);
    const fs::path out(a.out);
    fs::create_directories(out);

    eval::EvalReport report;
    const Algorithm algo = meta::parse_algorithm(a.label);
    report.algorithms = {algo};
    report.shot_counts = {a.k};
    for (const auto& sc : tasks) {
        const auto split = split_task(sc, a.k, derive_seed(a.seed, "split/" + sc.id));
        for (double e : meta::adapt_and_eval(theta, sc, split, cfg)) report.errors.push_back({algo, a.k, 0, sc.id, e});
    }
    eval::write_errors_csv(out / "errors.csv", report);
    eval::write_cdf_csv(out / "cdf.csv", report);
    json summary = eval::summary_json(report);
    eval::write_json(out / "summary.json", summary);

    json run = manifest("eval", cfg);
    run["checkpoint"] = a.checkpoint;
    run["data"] = a.data;
    run["summary"] = summary;
    eval::write_json(out / "run.json", run);

    const auto s = eval::summarize(report.errors_for(algo, a.k));
    std::cout << "mean_cm " << eval::format_number(s.mean) << " median_cm " << eval::format_number(s.median) << '\n';
    return ok;
}

// ---- bench

struct BenchArgs {
    std::string data, out, algos = "conventional,transfer,maml,fomaml,tb-maml", shots = "5";
    std::string counts = "5,10,15,20,25";
    std::size_t repeats = 5, test_tasks = 5, matrix_scenarios = 10, matrix_shots = 5;
    std::uint64_t seed = 0;
    bool skip_matrix = false, skip_sweep = false;
    Overrides over;
};

int run_bench(const BenchArgs& a) {
    const auto algos = parse_algorithms(a.algos);
    const auto shots = parse_list(a.shots, "shots");
    eval::ExperimentConfig ec;
    ec.meta = a.over.resolve(a.seed, shots.front());
    ec.repeats = a.repeats;
    ec.test_tasks = a.test_tasks;
    const auto tasks = load_scenario_dir(a.data);
    if (a.test_tasks == 0 || a.test_tasks >= tasks.size()) {
        throw ConfigError("--test-tasks must leave at least one training scenario");
    }
    const fs::path out(a.out);
    fs::create_directories(out);

    json run = manifest("bench", ec.meta);
    run["data"] = a.data;
    run["repeats"] = a.repeats;
    run["test_tasks"] = a.test_tasks;

    const auto report = eval::benchmark(tasks, algos, shots, ec, progress_line);
    eval::write_errors_csv(out / "errors.csv", report);
    eval::write_cdf_csv(out / "cdf.csv", report);
    run["summary"] = eval::summary_json(report);

    if (!a.skip_sweep) {
        std::vector<Algorithm> meta_algos;
        for (Algorithm al : algos)
            if (meta::is_meta_learner(al)) meta_algos.push_back(al);
        std::vector<std::size_t> counts;
        for (std::size_t c : parse_list(a.counts, "counts"))
            if (c <= tasks.size() - a.test_tasks) counts.push_back(c);
        std::vector<eval::SweepPoint> sweep;
        if (!meta_algos.empty() && !counts.empty()) sweep = eval::task_count_sweep(tasks, meta_algos, counts, ec, progress_line);
        eval::write_sweep_csv(out / "sweep.csv", sweep);
        run["sweep"] = eval::to_json(sweep);
    }
    if (!a.skip_matrix) {
        const std::size_t n = std::min(a.matrix_scenarios, tasks.size());
        const std::span<const Scenario> subset(tasks.data(), n);
        const auto zero = eval::cross_scenario_matrix(subset, ec, 0, progress_line);
        eval::write_matrix_csv(out / "matrix.csv", zero);
        run["matrix"] = eval::to_json(zero);
        if (a.matrix_shots > 0) {
            const auto tuned = eval::cross_scenario_matrix(subset, ec, a.matrix_shots, progress_line);
            eval::write_matrix_csv(out / "matrix_finetuned.csv", tuned);
            run["matrix_finetuned"] = eval::to_json(tuned);
        }
    }
    eval::write_json(out / "run.json", run);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Few-shot CSI localization with meta-learning"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate synthetic scenarios");
    g->add_option("--scenarios", gen.scenarios, "number of scenarios")->required();
    g->add_option("--seed", gen.seed);
    g->add_option("--out", gen.out, "output directory")->required();
    g->add_option("--rows", gen.rows);
    g->add_option("--cols", gen.cols);
    g->add_option("--spacing-cm", gen.spacing_cm);
    g->add_option("--samples-per-rp", gen.samples_per_rp);

    ImportanceArgs imp;
    auto* i = app.add_subcommand("importance", "Compute the task importance vector");
    i->add_option("--data", imp.data, "scenario directory")->required();
    i->add_option("--k", imp.k, "shots per reference point");
    i->add_option("--seed", imp.seed);
    i->add_option("--out", imp.out, "output JSON file")->required();
    imp.over.attach(i);

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train one model");
    t->add_option("--algo", tr.algo, "conventional|transfer|maml|fomaml|tb-maml")->required();
    t->add_option("--data", tr.data, "scenario directory")->required();
    t->add_option("--k", tr.k, "shots per reference point");
    t->add_option("--importance", tr.importance, "importance JSON for tb-maml");
    t->add_option("--target", tr.target, "target scenario id for conventional/transfer (default: last)");
    t->add_option("--seed", tr.seed);
    t->add_option("--out", tr.out, "output directory")->required();
    tr.over.attach(t);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Adapt a checkpoint on k shots and score every scenario");
    e->add_option("--checkpoint", ev.checkpoint)->required();
    e->add_option("--data", ev.data, "scenario directory")->required();
    e->add_option("--k", ev.k, "shots per reference point (0: no adaptation)");
    e->add_option("--algo", ev.label, "algorithm label written to the CSVs");
    e->add_option("--seed", ev.seed);
    e->add_option("--out", ev.out, "output directory")->required();
    ev.over.attach(e);

    BenchArgs b;
    auto* bc = app.add_subcommand("bench", "Run the benchmark, task-count sweep and cross-scenario matrix");
    bc->add_option("--data", b.data, "scenario directory")->required();
    bc->add_option("--algos", b.algos, "comma-separated algorithms");
    bc->add_option("--shots", b.shots, "comma-separated shot counts");
    bc->add_option("--repeats", b.repeats);
    bc->add_option("--test-tasks", b.test_tasks, "meta-testing scenarios per repeat");
    bc->add_option("--counts", b.counts, "comma-separated training-task counts for the sweep");
    bc->add_option("--matrix-scenarios", b.matrix_scenarios);
    bc->add_option("--matrix-shots", b.matrix_shots, "fine-tuning shots for the second matrix (0: skip)");
    bc->add_flag("--skip-matrix", b.skip_matrix);
    bc->add_flag("--skip-sweep", b.skip_sweep);
    bc->add_option("--seed", b.seed);
    bc->add_option("--out", b.out, "output directory")->required();
    b.over.attach(bc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? ok : usage;
    }

    try {
        if (*g) return run_gen(gen);
        if (*i) return run_importance(imp);
        if (*t) return run_train(tr);
        if (*e) return run_eval(ev);
        if (*bc) return run_bench(b);
    } catch (const ConfigError& err) {
        std::cerr << "usage error: " << err.what() << '\n';
        return usage;
    } catch (const NumericError& err) {
        std::cerr << "numeric failure: " << err.what() << '\n';
        return numeric;
    } catch (const Error& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return data;
    } catch (const fs::filesystem_error& err) {
        std::cerr << "data error: " << err.what() << '\n';
        return data;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return internal;
    }
    return ok;
}
