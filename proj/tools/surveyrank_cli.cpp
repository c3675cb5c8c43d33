#include "surveyrank/surveyrank.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace surveyrank;

namespace {

struct Overrides {
    std::string config;
    std::string data;
    std::string schema;
    std::string out;
    std::uint64_t seed = 0;
    int threads = 0;
    bool seed_set = false;
};

void add_common(CLI::App* sub, Overrides& o, bool config_required) {
    auto* c = sub->add_option("--config", o.config, "Pipeline config (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", o.out, "Output directory (overrides config output_dir)");
    sub->add_option("--seed", o.seed, "Seed (overrides config seed)")->each([&o](const std::string&) { o.seed_set = true; });
    sub->add_option("--threads", o.threads, "Worker threads; outputs do not depend on it")->check(CLI::PositiveNumber);
}

PipelineConfig make_config(const Overrides& o) {
    PipelineConfig cfg = load_pipeline_config(o.config);
    if (!o.data.empty()) cfg.data_path = fs::absolute(o.data).string();
    if (!o.schema.empty()) cfg.schema_path = fs::absolute(o.schema).string();
    if (!o.out.empty()) cfg.output_dir = fs::absolute(o.out).string();
    if (o.seed_set) {
        cfg.seed = o.seed;
        cfg.source["seed"] = o.seed;  // recorded in config.json; threads and --out do not change outputs
    }
    if (o.threads > 0) cfg.threads = o.threads;
    return cfg;
}

double parse_double(const std::string& s, const char* what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw DataError(fmt::format("bad {} '{}'", what, s));
    return v;
}

void print_report(const RunReport& r) {
    for (const auto& s : r.stages) {
        std::cerr << fmt::format("{:<12} {:<4} {:>3} artifacts  {:.2f}s\n", to_string(s.stage), s.status, s.artifacts.size(), s.seconds);
    }
    for (const auto& w : r.all_warnings()) std::cerr << "warning: " << w << "\n";
    if (!r.output_hash.empty()) std::cout << "output hash " << r.output_hash << "\n";
}

int run_until(const Overrides& o, Stage until) {
    PipelineConfig cfg;
    try {
        cfg = make_config(o);
    } catch (const std::exception& e) {
        std::cerr << "error: [config] " << e.what() << "\n";
        return exit_code(Stage::config);
    }
    try {
        print_report(run_pipeline(cfg, until));
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (!e.artifacts().empty()) std::cerr << "artifacts kept in " << cfg.resolve(cfg.output_dir).string() << ":\n";
        for (const auto& a : e.artifacts()) std::cerr << "  " << a << "\n";
        return exit_code(e.stage());
    }
    return 0;
}

// Decision matrix CSV: header "alternative,<criteria...>", a "direction" row
// (benefit|cost per column), an optional "weight" row, then one row per alternative.
DecisionMatrix read_matrix_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.size() < 3) throw DataError("matrix CSV needs a header, a direction row and at least one alternative");
    const auto& header = rows[0];
    const std::size_t n = header.size() - 1;
    if (n == 0) throw DataError("matrix CSV has no criteria");
    std::vector<Criterion> crit(n);
    std::size_t r = 1;
    if (rows[r].empty() || rows[r][0] != "direction") throw DataError("second row must start with 'direction'");
    for (std::size_t j = 0; j < n; ++j) {
        crit[j].name = header[j + 1];
        const auto& d = rows[r].at(j + 1);
        if (d == "benefit") crit[j].direction = Direction::benefit;
        else if (d == "cost") crit[j].direction = Direction::cost;
        else throw DataError("direction must be benefit or cost, got '" + d + "'");
        crit[j].weight = 1.0;
    }
    ++r;
    if (rows[r].size() > 0 && rows[r][0] == "weight") {
        for (std::size_t j = 0; j < n; ++j) crit[j].weight = parse_double(rows[r].at(j + 1), "weight");
        ++r;
    }
    std::vector<std::string> alts;
    Matrix x(static_cast<Eigen::Index>(rows.size() - r), static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; r < rows.size(); ++r, ++i) {
        if (rows[r].size() != n + 1) throw DataError(fmt::format("row {} has {} fields, expected {}", r + 1, rows[r].size(), n + 1));
        alts.push_back(rows[r][0]);
        for (std::size_t j = 0; j < n; ++j) x(i, static_cast<Eigen::Index>(j)) = parse_double(rows[r][j + 1], "value");
    }
    return make_decision_matrix(alts, crit, x);
}

// Rankings CSV: header "source,weight,<labels...>", one row per input ranking (rank per label).
RankingEnsemble read_rankings_csv(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.size() < 2 || rows[0].size() < 3) throw DataError("rankings CSV needs a header 'source,weight,<labels...>' and rows");
    std::vector<std::string> labels(rows[0].begin() + 2, rows[0].end());
    std::vector<Ranking> rankings;
    std::vector<double> weights;
    std::vector<std::string> sources;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != labels.size() + 2) throw DataError(fmt::format("row {} has {} fields", r + 1, rows[r].size()));
        sources.push_back(rows[r][0]);
        weights.push_back(rows[r][1].empty() ? 1.0 : parse_double(rows[r][1], "weight"));
        Ranking rk;
        for (std::size_t j = 2; j < rows[r].size(); ++j) rk.push_back(static_cast<int>(parse_double(rows[r][j], "rank")));
        rankings.push_back(std::move(rk));
    }
    return make_ensemble(labels, rankings, weights, sources);
}

void emit(const Overrides& o, const std::string& stem, const Table& t, const Warnings& w) {
    if (o.out.empty()) {
        std::cout << t.to_markdown(w);
        return;
    }
    ArtifactWriter writer(o.out);
    writer.table(stem, t, w);
    for (const auto& p : writer.written()) std::cout << (fs::path(o.out) / p).string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Survey segmentation and attribute ranking"};
    app.require_subcommand(1);

    Overrides o;
    std::string until_name = "reports";

    auto* validate = app.add_subcommand("validate", "Load and clean the configured data; report problems without writing files");
    add_common(validate, o, false);
    validate->add_option("--data", o.data, "Survey CSV (overrides config)");
    validate->add_option("--schema", o.schema, "Schema JSON (overrides config)");

    auto* describe = app.add_subcommand("describe", "Item distributions, means and scale reliability");
    add_common(describe, o, true);
    double z = 1.96, p = 0.5, e = 0.05;
    bool sample_size = false;
    describe->add_flag("--sample-size", sample_size, "Print the required sample size z^2 p(1-p)/e^2, rounded down, and exit");
    describe->add_option("--z", z, "z value");
    describe->add_option("--p", p, "Expected proportion");
    describe->add_option("--e", e, "Margin of error");
    describe->get_option("--config")->required(false);

    auto* efa = app.add_subcommand("efa", "Run through factor analysis and item pruning");
    add_common(efa, o, true);
    auto* lcca = app.add_subcommand("lcca", "Run through latent class selection and profiling");
    add_common(lcca, o, true);

    auto* mcdm = app.add_subcommand("mcdm", "Rank alternatives with MOORA, TOPSIS and VIKOR");
    add_common(mcdm, o, false);
    std::string matrix_path;
    double vikor_v = 0.5;
    mcdm->add_option("--matrix", matrix_path, "Standalone decision matrix CSV instead of a pipeline config")->check(CLI::ExistingFile);
    mcdm->add_option("--vikor-v", vikor_v, "VIKOR strategy weight")->check(CLI::Range(0.0, 1.0));

    auto* agg_cmd = app.add_subcommand("aggregate", "Meta ranking by distance minimization");
    add_common(agg_cmd, o, false);
    std::string rankings_path, metric_name = "footrule";
    agg_cmd->add_option("--rankings", rankings_path, "Standalone rankings CSV instead of a pipeline config")->check(CLI::ExistingFile);
    agg_cmd->add_option("--metric", metric_name, "footrule or kendall")->check(CLI::IsMember({"footrule", "kendall"}));

    auto* pipeline = app.add_subcommand("pipeline", "Run every stage and write all reports");
    add_common(pipeline, o, true);
    pipeline->add_option("--until", until_name, "Stop after this stage")
        ->check(CLI::IsMember({"config", "load", "clean", "describe", "diagnostics", "efa", "scores", "lcca", "mcdm", "aggregation", "reports"}));

    auto* simulate = app.add_subcommand("simulate", "Generate a synthetic survey with known structure");
    std::string gen_path;
    std::size_t n_override = 0;
    simulate->add_option("--config", gen_path, "Generator config (JSON)")->required()->check(CLI::ExistingFile);
    simulate->add_option("--out", o.out, "Output directory")->required();
    simulate->add_option("--seed", o.seed, "Seed (overrides config)")->each([&o](const std::string&) { o.seed_set = true; });
    simulate->add_option("--n", n_override, "Respondents (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            SurveyDataset raw;
            if (!o.config.empty()) {
                auto cfg = make_config(o);
                cfg.validate();
                if (cfg.simulate) {
                    std::cout << "config valid (simulated input)\n";
                    return 0;
                }
                raw = load_dataset(cfg.resolve(cfg.data_path).string(), load_schema(cfg.resolve(cfg.schema_path).string()));
            } else {
                if (o.data.empty() || o.schema.empty()) throw PreconditionError("validate needs --config or both --data and --schema");
                raw = load_dataset(o.data, load_schema(o.schema));
            }
            for (const auto& err : raw.provenance.load_errors)
                std::cout << fmt::format("row {} ({}): {}: {}\n", err.row, err.respondent_id, err.column, err.message);
            auto [clean, rep] = clean_dataset(raw);
            for (const auto& d : rep.dropped) std::cout << fmt::format("dropped {}: {}\n", d.respondent_id, d.reason);
            std::cout << fmt::format("{} rows read, {} rejected at load, {} dropped in cleaning, {} usable\n", raw.provenance.rows_read,
                                     raw.provenance.load_errors.size(), rep.dropped.size(), clean.records.size());
            return 0;
        }
        if (*describe) {
            if (sample_size) {
                std::cout << required_sample_size(z, p, e) << "\n";
                return 0;
            }
            if (o.config.empty()) throw PreconditionError("describe needs --config (or --sample-size)");
            return run_until(o, Stage::describe);
        }
        if (*efa) return run_until(o, Stage::efa);
        if (*lcca) return run_until(o, Stage::lcca);
        if (*mcdm) {
            if (matrix_path.empty()) {
                if (o.config.empty()) throw PreconditionError("mcdm needs --config or --matrix");
                return run_until(o, Stage::mcdm);
            }
            try {
                const auto dm = read_matrix_csv(matrix_path);
                std::vector<MethodResult> results;
                Warnings w = dm.warnings;
                for (Method m : {Method::moora, Method::topsis, Method::vikor}) {
                    results.push_back(rank_with(m, dm, vikor_v));
                    w.insert(w.end(), results.back().warnings.begin(), results.back().warnings.end());
                }
                emit(o, "mcdm_ranking", method_detail_table("Alternatives", {results}), w);
            } catch (const std::exception& ex) {
                std::cerr << "error: [mcdm] " << ex.what() << "\n";
                return exit_code(Stage::mcdm);
            }
            return 0;
        }
        if (*agg_cmd) {
            if (rankings_path.empty()) {
                if (o.config.empty()) throw PreconditionError("aggregate needs --config or --rankings");
                return run_until(o, Stage::aggregation);
            }
            try {
                const auto ens = read_rankings_csv(rankings_path);
                AggregationPolicy policy;
                policy.metric = metric_from_string(metric_name);
                if (o.threads > 0) policy.threads = o.threads;
                if (o.seed_set) policy.cross_entropy.seed = o.seed;
                const auto res = aggregate(ens, policy);
                if (o.out.empty()) {
                    std::cout << res.to_json().dump(2) << "\n";
                } else {
                    ArtifactWriter writer(o.out);
                    writer.write("aggregation.json", res.to_json().dump(2) + "\n");
                    std::cout << (fs::path(o.out) / "aggregation.json").string() << "\n";
                }
            } catch (const std::exception& ex) {
                std::cerr << "error: [aggregation] " << ex.what() << "\n";
                return exit_code(Stage::aggregation);
            }
            return 0;
        }
        if (*pipeline) {
            Stage until = Stage::reports;
            for (Stage s : all_stages())
                if (to_string(s) == until_name) until = s;
            return run_until(o, until);
        }
        if (*simulate) {
            std::ifstream in(gen_path);
            nlohmann::json j;
            in >> j;
            if (o.seed_set) j["seed"] = o.seed;
            if (n_override > 0) j["n"] = n_override;
            const auto sim = simulate_survey(GeneratorConfig::from_json(j));
            ArtifactWriter writer(o.out);
            std::ostringstream data;
            write_dataset(data, sim.dataset);
            writer.write("survey.csv", data.str());
            writer.write("schema.json", sim.dataset.schema.to_json().dump(2) + "\n");
            std::vector<csv::Row> truth{{"respondent_id", "true_class"}};
            for (std::size_t i = 0; i < sim.classes.size(); ++i)
                truth.push_back({sim.dataset.records[i].respondent_id, fmt::format("LC{}", sim.classes[i] + 1)});
            writer.write("truth.csv", csv::to_string(truth));
            for (const auto& w : writer.written()) std::cout << (fs::path(o.out) / w).string() << "\n";
            return 0;
        }
    } catch (const std::exception& ex) {
        std::cerr << "error: [config] " << ex.what() << "\n";
        return exit_code(Stage::config);
    }
    return 0;
}
