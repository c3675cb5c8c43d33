#pragma once

// End-to-end analysis driven by one JSON config: clean -> diagnostics -> EFA
// with pruning -> factor scores -> latent classes -> per-class MCDM -> meta
// ranking -> reports. Every stage writes its artifacts before the next runs.

#include "surveyrank/common.hpp"
#include "surveyrank/efa.hpp"
#include "surveyrank/lcca.hpp"
#include "surveyrank/mcdm.hpp"
#include "surveyrank/psychometrics.hpp"
#include "surveyrank/rank_agg.hpp"
#include "surveyrank/report.hpp"
#include "surveyrank/simulate.hpp"
#include "surveyrank/survey_data.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace surveyrank {

enum class Stage { config, load, clean, describe, diagnostics, efa, scores, lcca, mcdm, aggregation, reports };

inline const std::vector<Stage>& all_stages() {
    static const std::vector<Stage> s{Stage::config, Stage::load,  Stage::clean, Stage::describe,    Stage::diagnostics, Stage::efa,
                                      Stage::scores, Stage::lcca, Stage::mcdm,  Stage::aggregation, Stage::reports};
    return s;
}

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::config: return "config";
        case Stage::load: return "load";
        case Stage::clean: return "clean";
        case Stage::describe: return "describe";
        case Stage::diagnostics: return "diagnostics";
        case Stage::efa: return "efa";
        case Stage::scores: return "scores";
        case Stage::lcca: return "lcca";
        case Stage::mcdm: return "mcdm";
        case Stage::aggregation: return "aggregation";
        case Stage::reports: return "reports";
    }
    return "?";
}

// Process exit code for a failure in the stage.
inline int exit_code(Stage s) { return 10 + static_cast<int>(s); }

class StageError : public Error {
public:
    StageError(Stage stage, const std::string& message, std::vector<std::string> artifacts)
        : Error(fmt::format("[{}] {}", to_string(stage), message)), stage_(stage), artifacts_(std::move(artifacts)) {}
    Stage stage() const noexcept { return stage_; }
    const std::vector<std::string>& artifacts() const noexcept { return artifacts_; }

private:
    Stage stage_;
    std::vector<std::string> artifacts_;
};

struct PipelineConfig {
    std::filesystem::path base_dir = ".";  // relative paths resolve here
    std::string data_path;
    std::string schema_path;
    std::optional<nlohmann::json> simulate;  // generator config used instead of data/schema
    std::string output_dir = "out";
    std::uint64_t seed = 20210301;
    int threads = 1;

    bool apply_consistency_rules = true;
    double kmo_ridge = 0.0;

    std::optional<int> n_factors;  // empty: scree
    double loading_threshold = 0.50;
    double kappa = 4.0;
    double paf_tol = 1e-3;
    int paf_max_iter = 1000;

    std::vector<int> k_range{1, 2, 3, 4, 5, 6};
    int restarts = 20;
    SelectionCriterion criterion = SelectionCriterion::bic;
    double em_tol = 1e-6;
    int em_max_iter = 2000;
    VarianceModel variance_model = VarianceModel::class_specific;
    bool profile_by_posterior = true;
    std::vector<std::string> covariates;  // empty: all declared

    MatrixOptions matrix;
    double vikor_v = 0.5;

    Metric metric = Metric::footrule;
    std::vector<double> method_weights{1.0, 1.0, 1.0};
    CrossEntropyOptions cross_entropy;

    nlohmann::json source;  // as read, for hashing

    std::filesystem::path resolve(const std::string& p) const {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }

    static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
    void validate() const;
};

inline PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    PipelineConfig c;
    c.base_dir = base_dir;
    c.source = j;
    try {
        if (j.contains("input")) {
            const auto& in = j.at("input");
            c.data_path = in.value("data", "");
            c.schema_path = in.value("schema", "");
            if (in.contains("simulate")) c.simulate = in.at("simulate");
        }
        c.output_dir = j.value("output_dir", c.output_dir);
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        if (j.contains("cleaning")) c.apply_consistency_rules = j.at("cleaning").value("consistency_rules", true);
        if (j.contains("diagnostics")) c.kmo_ridge = j.at("diagnostics").value("kmo_ridge", 0.0);
        if (j.contains("efa")) {
            const auto& e = j.at("efa");
            if (e.contains("n_factors")) {
                if (e.at("n_factors").is_string()) {
                    if (e.at("n_factors").get<std::string>() != "auto") throw PreconditionError("efa.n_factors must be an integer or \"auto\"");
                } else {
                    c.n_factors = e.at("n_factors").get<int>();
                }
            }
            c.loading_threshold = e.value("loading_threshold", c.loading_threshold);
            c.kappa = e.value("kappa", c.kappa);
            c.paf_tol = e.value("tol", c.paf_tol);
            c.paf_max_iter = e.value("max_iter", c.paf_max_iter);
        }
        if (j.contains("lcca")) {
            const auto& l = j.at("lcca");
            c.k_range = l.value("k_range", c.k_range);
            c.restarts = l.value("restarts", c.restarts);
            const auto crit = l.value("criterion", std::string("bic"));
            if (crit == "bic") c.criterion = SelectionCriterion::bic;
            else if (crit == "aic") c.criterion = SelectionCriterion::aic;
            else throw PreconditionError("lcca.criterion must be \"bic\" or \"aic\"");
            c.em_tol = l.value("tol", c.em_tol);
            c.em_max_iter = l.value("max_iter", c.em_max_iter);
            const auto vm = l.value("variances", std::string("class_specific"));
            if (vm == "class_specific") c.variance_model = VarianceModel::class_specific;
            else if (vm == "shared") c.variance_model = VarianceModel::shared;
            else throw PreconditionError("lcca.variances must be \"class_specific\" or \"shared\"");
            const auto pb = l.value("profile_by", std::string("posterior"));
            if (pb != "posterior" && pb != "modal") throw PreconditionError("lcca.profile_by must be \"posterior\" or \"modal\"");
            c.profile_by_posterior = pb == "posterior";
            c.covariates = l.value("covariates", c.covariates);
        }
        if (j.contains("mcdm")) {
            const auto& m = j.at("mcdm");
            const auto cons = m.value("construction", std::string("level_shares"));
            if (cons == "level_shares") c.matrix.construction = MatrixConstruction::level_shares;
            else if (cons == "mean_importance") c.matrix.construction = MatrixConstruction::mean_importance;
            else throw PreconditionError("mcdm.construction must be \"level_shares\" or \"mean_importance\"");
            c.matrix.benefit_levels = m.value("benefit_levels", c.matrix.benefit_levels);
            c.matrix.cost_levels = m.value("cost_levels", c.matrix.cost_levels);
            c.matrix.weights = m.value("weights", c.matrix.weights);
            c.matrix.min_members = m.value("min_members", c.matrix.min_members);
            c.vikor_v = m.value("vikor_v", c.vikor_v);
        }
        if (j.contains("aggregation")) {
            const auto& a = j.at("aggregation");
            c.metric = metric_from_string(a.value("metric", std::string("footrule")));
            c.method_weights = a.value("weights", c.method_weights);
            c.cross_entropy.samples = a.value("ce_samples", c.cross_entropy.samples);
            c.cross_entropy.rho = a.value("ce_rho", c.cross_entropy.rho);
            c.cross_entropy.max_stagnation = a.value("ce_max_stagnation", c.cross_entropy.max_stagnation);
        }
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError(std::string("config: ") + e.what());
    }
    return c;
}

inline void PipelineConfig::validate() const {
    if (simulate) {
        if (!data_path.empty() || !schema_path.empty()) throw PreconditionError("config: give either input.simulate or input.data/schema");
    } else {
        if (data_path.empty() || schema_path.empty()) throw PreconditionError("config: input.data and input.schema are required");
        for (const auto& p : {data_path, schema_path})
            if (!std::filesystem::exists(resolve(p))) throw PreconditionError("config: file not found: " + resolve(p).string());
    }
    if (threads < 1) throw PreconditionError("config: threads must be >= 1");
    if (kmo_ridge < 0.0 || kmo_ridge > 0.1) throw PreconditionError("config: diagnostics.kmo_ridge must lie in [0, 0.1]");
    if (n_factors && *n_factors < 1) throw PreconditionError("config: efa.n_factors must be >= 1");
    if (!(loading_threshold > 0.0 && loading_threshold < 1.0)) throw PreconditionError("config: efa.loading_threshold must lie in (0, 1)");
    if (!(kappa > 1.0 && kappa <= 10.0)) throw PreconditionError("config: efa.kappa must lie in (1, 10]");
    if (!(paf_tol > 0.0) || paf_max_iter < 1) throw PreconditionError("config: efa tolerances must be positive");
    if (k_range.empty()) throw PreconditionError("config: lcca.k_range must not be empty");
    for (int k : k_range)
        if (k < 1) throw PreconditionError("config: lcca.k_range entries must be >= 1");
    if (restarts < 1) throw PreconditionError("config: lcca.restarts must be >= 1");
    if (!(em_tol > 0.0) || em_max_iter < 1) throw PreconditionError("config: lcca tolerances must be positive");
    if (!(vikor_v >= 0.0 && vikor_v <= 1.0)) throw PreconditionError("config: mcdm.vikor_v must lie in [0, 1]");
    if (matrix.min_members < 1) throw PreconditionError("config: mcdm.min_members must be >= 1");
    if (method_weights.size() != 3) throw PreconditionError("config: aggregation.weights needs one weight per method (3)");
    for (double w : method_weights)
        if (!(w > 0.0)) throw PreconditionError("config: aggregation.weights must be positive");
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PreconditionError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw PreconditionError("config '" + path + "': " + e.what());
    }
    return PipelineConfig::from_json(j, std::filesystem::path(path).parent_path());
}

struct StageRecord {
    Stage stage = Stage::config;
    std::string status = "ok";
    std::vector<std::string> artifacts;
    Warnings warnings;
    double seconds = 0.0;  // not written to disk
};

struct RunReport {
    std::vector<StageRecord> stages;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string output_hash;  // over every written artifact, in write order

    Warnings all_warnings() const {
        Warnings w;
        for (const auto& s : stages)
            for (const auto& x : s.warnings) w.push_back(to_string(s.stage) + ": " + x);
        return w;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config_hash"] = config_hash;
        j["seed"] = seed;
        j["output_hash"] = output_hash;
        j["stages"] = nlohmann::json::array();
        for (const auto& s : stages)
            j["stages"].push_back({{"stage", to_string(s.stage)}, {"status", s.status}, {"artifacts", s.artifacts}, {"warnings", s.warnings}});
        return j;
    }
};

// Everything a run produced, for callers that want more than files.
struct PipelineState {
    SurveyDataset raw;
    SurveyDataset data;
    std::vector<std::string> attitude_items;
    std::optional<AdequacyReport> adequacy;
    std::optional<PruneResult> efa;
    std::optional<FactorScores> scores;
    std::optional<ModelSelection> lcca;
    std::optional<ClassAssignment> assignment;
    std::vector<RankingPanel> panels;
    std::optional<SimulatedSurvey> simulated;
};

namespace detail {

inline std::string matrix_csv(const std::vector<std::string>& header, const std::vector<std::string>& row_labels, const Matrix& m,
                              int precision) {
    Table t;
    t.header = header;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<std::string> r{row_labels[static_cast<std::size_t>(i)]};
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(num(m(i, j), precision));
        t.rows.push_back(std::move(r));
    }
    return t.to_csv();
}

// Name each factor after the attitude scale most of its primary items come from.
inline std::vector<std::string> factor_scale_labels(const FactorSolution& s, const SurveySchema& schema) {
    std::vector<std::string> out;
    const auto primary = s.primary_factor();
    for (int f = 0; f < s.n_factors(); ++f) {
        std::map<std::string, int> votes;
        for (std::size_t i = 0; i < primary.size(); ++i) {
            if (primary[i] != f) continue;
            for (const auto& sc : schema.scales())
                if (std::find(sc.item_codes.begin(), sc.item_codes.end(), s.items[i]) != sc.item_codes.end()) ++votes[sc.name.empty() ? sc.id : sc.name];
        }
        std::string best;
        int best_votes = 0;
        for (const auto& [name, v] : votes)
            if (v > best_votes) {
                best = name;
                best_votes = v;
            }
        out.push_back(best.empty() ? fmt::format("F{}", f + 1) : fmt::format("F{} {}", f + 1, best));
    }
    return out;
}

}  // namespace detail

// Runs stages in order up to and including `until`.
inline RunReport run_pipeline(const PipelineConfig& cfg, Stage until = Stage::reports, PipelineState* state_out = nullptr) {
    PipelineState local;
    PipelineState& st = state_out ? *state_out : local;
    RunReport report;
    report.seed = cfg.seed;
    report.config_hash = hex64(fnv1a(cfg.source.dump()));
    ArtifactWriter writer(cfg.resolve(cfg.output_dir));
    std::size_t written_before = 0;

    auto run = [&](Stage stage, auto&& body) -> bool {
        if (static_cast<int>(stage) > static_cast<int>(until)) return false;
        StageRecord rec;
        rec.stage = stage;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            body(rec);
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            std::vector<std::string> done(writer.written().begin(), writer.written().end());
            throw StageError(stage, e.what(), done);
        }
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rec.artifacts.assign(writer.written().begin() + static_cast<std::ptrdiff_t>(written_before), writer.written().end());
        written_before = writer.written().size();
        report.stages.push_back(std::move(rec));
        return true;
    };

    run(Stage::config, [&](StageRecord&) {
        cfg.validate();
        writer.write("config.json", cfg.source.dump(2) + "\n");
    });

    run(Stage::load, [&](StageRecord& rec) {
        if (cfg.simulate) {
            nlohmann::json g = *cfg.simulate;
            if (!g.contains("seed")) g["seed"] = cfg.seed;
            st.simulated = simulate_survey(GeneratorConfig::from_json(g));
            st.raw = st.simulated->dataset;
            writer.write("data/schema.json", st.raw.schema.to_json().dump(2) + "\n");
            std::ostringstream os;
            write_dataset(os, st.raw);
            writer.write("data/raw.csv", os.str());
        } else {
            const auto schema = load_schema(cfg.resolve(cfg.schema_path).string());
            st.raw = load_dataset(cfg.resolve(cfg.data_path).string(), schema);
        }
        Table t;
        t.title = "Load errors";
        t.header = {"row", "respondent_id", "column", "message"};
        for (const auto& e : st.raw.provenance.load_errors) t.rows.push_back({std::to_string(e.row), e.respondent_id, e.column, e.message});
        if (!st.raw.provenance.load_errors.empty())
            rec.warnings.push_back(fmt::format("{} rows rejected at load", st.raw.provenance.load_errors.size()));
        writer.write("data/load_errors.csv", t.to_csv());
    });

    run(Stage::clean, [&](StageRecord& rec) {
        auto [clean, rep] = cfg.apply_consistency_rules ? clean_dataset(st.raw) : clean_dataset(st.raw, {});
        st.data = std::move(clean);
        writer.write("data/cleaning_report.csv", rep.to_csv());
        std::ostringstream os;
        write_dataset(os, st.data);
        writer.write("data/cleaned.csv", os.str());
        if (!rep.dropped.empty()) rec.warnings.push_back(fmt::format("{} of {} records dropped", rep.dropped.size(), rep.input));
        st.attitude_items = st.data.schema.items_of_kind(ScaleKind::attitude);
        if (st.attitude_items.empty()) throw PreconditionError("schema declares no attitude items");
    });

    run(Stage::describe, [&](StageRecord& rec) {
        std::vector<std::string> all;
        for (const auto& it : st.data.schema.items()) all.push_back(it.code);
        writer.table("describe/item_distributions", distribution_table(st.data, all));
        std::vector<AlphaResult> alphas;
        for (const auto* s : st.data.schema.scales_of_kind(ScaleKind::attitude)) {
            alphas.push_back(cronbach_alpha(st.data, *s));
            alphas.back().scale = s->name.empty() ? s->id : s->name;
            if (alphas.back().below_threshold)
                rec.warnings.push_back(fmt::format("scale {} alpha {} below {:.2f}", alphas.back().scale, num(alphas.back().raw), alpha_threshold));
        }
        writer.table("describe/reliability", reliability_table(alphas), rec.warnings);
    });

    run(Stage::diagnostics, [&](StageRecord& rec) {
        const auto corr = pearson_correlation_matrix(st.data, st.attitude_items);
        st.adequacy = adequacy(corr, cfg.kmo_ridge);
        rec.warnings = st.adequacy->warnings;
        if (st.adequacy->bartlett_p >= 0.05) rec.warnings.push_back("Bartlett test not significant at 0.05");
        writer.table("diagnostics/adequacy", adequacy_table(*st.adequacy), rec.warnings);
    });

    run(Stage::efa, [&](StageRecord& rec) {
        const auto corr = pearson_correlation_matrix(st.data, st.attitude_items);
        const Vector initial = detail::eigenvalues_desc(corr.values);
        const auto scree = suggest_n_factors(initial);
        int m = scree.n_factors;
        if (cfg.n_factors) {
            m = *cfg.n_factors;
        } else if (scree.weak_elbow) {
            rec.warnings.push_back("scree elbow is weak");
        }
        EfaOptions opt;
        opt.kappa = cfg.kappa;
        opt.paf.tol = cfg.paf_tol;
        opt.paf.max_iter = cfg.paf_max_iter;
        st.efa = prune_items(st.data, st.attitude_items, m, cfg.loading_threshold, opt);
        const auto& sol = st.efa->solution;
        rec.warnings.insert(rec.warnings.end(), sol.warnings.begin(), sol.warnings.end());

        writer.table("efa/eigenvalues", eigenvalue_table(initial, fit_efa(corr, m, opt).eigenvalues));
        writer.write("efa/scree.svg", scree_svg(initial, m));
        Table sc;
        sc.title = "Scree suggestion";
        sc.header = {"statistic", "value"};
        sc.rows = {{"suggested_factors", std::to_string(scree.n_factors)},
                   {"weak_elbow", scree.weak_elbow ? "yes" : "no"},
                   {"factors_used", std::to_string(m)},
                   {"source", cfg.n_factors ? "config" : "scree"}};
        writer.table("efa/scree", sc);
        writer.table("efa/pruning", pruning_table(*st.efa));
        writer.table("efa/pattern", pattern_table(sol));
        writer.table("efa/phi", phi_table(sol));
        Table mm = measurement_model_table(st.data.schema, st.attitude_items, sol, cfg.loading_threshold);
        mm.notes.push_back(fmt::format("Retained items: {}; variance explained: {}% (initial eigenvalues), {}% (reduced matrix).",
                                       sol.items.size(), num(initial_variance_explained(sol), 1), num(variance_explained(sol), 1)));
        writer.table("efa/measurement_model", mm, rec.warnings);
    });

    run(Stage::scores, [&](StageRecord&) {
        st.scores = factor_scores(st.data, st.efa->solution);
        const auto labels = detail::factor_scale_labels(st.efa->solution, st.data.schema);
        std::vector<std::string> header{"respondent_id"};
        for (int f = 0; f < st.efa->solution.n_factors(); ++f) header.push_back(fmt::format("F{}", f + 1));
        writer.write("scores/factor_scores.csv", detail::matrix_csv(header, st.scores->respondent_ids, st.scores->scores, 6));
        Table fl;
        fl.header = {"factor", "label"};
        for (std::size_t f = 0; f < labels.size(); ++f) fl.rows.push_back({fmt::format("F{}", f + 1), labels[f]});
        writer.write("scores/factor_labels.csv", fl.to_csv());
    });

    run(Stage::lcca, [&](StageRecord& rec) {
        EmOptions opt;
        opt.restarts = cfg.restarts;
        opt.seed = cfg.seed;
        opt.tol = cfg.em_tol;
        opt.max_iter = cfg.em_max_iter;
        opt.threads = cfg.threads;
        opt.variance_model = cfg.variance_model;
        st.lcca = select_model(*st.scores, cfg.k_range, cfg.criterion, opt);
        const auto& fit = st.lcca->chosen;
        rec.warnings = st.lcca->warnings;  // includes the chosen fit's own warnings
        if (!fit.model.fit.monotone) rec.warnings.push_back("EM log-likelihood decreased in some iteration");
        st.assignment = assign_classes(fit.posterior);
        if (st.assignment->ties) rec.warnings.push_back(fmt::format("{} modal-assignment ties broken toward the lower class", st.assignment->ties));
        const int k = fit.model.k;

        writer.table("lcca/fit_table", fit_table(*st.lcca, cfg.criterion));
        writer.write("lcca/model.json", fit.model.to_json().dump(2) + "\n");
        std::vector<std::string> post_header{"respondent_id"};
        for (const auto& c : class_names(k)) post_header.push_back(c);
        writer.write("lcca/posterior.csv", detail::matrix_csv(post_header, fit.posterior.respondent_ids, fit.posterior.responsibilities, 6));
        Table asg;
        asg.header = {"respondent_id", "class"};
        for (std::size_t i = 0; i < st.assignment->labels.size(); ++i)
            asg.rows.push_back({fit.posterior.respondent_ids[i], fmt::format("LC{}", st.assignment->labels[i] + 1)});
        writer.write("lcca/assignment.csv", asg.to_csv());

        const Matrix means = class_factor_means(fit.posterior.responsibilities, st.scores->scores);
        Table cm = class_means_table(means, st.assignment->shares);
        const auto labels = detail::factor_scale_labels(st.efa->solution, st.data.schema);
        for (std::size_t f = 0; f < cm.rows.size(); ++f) cm.rows[f][0] = labels[f];
        writer.table("lcca/class_means", cm);

        std::vector<std::string> covs = cfg.covariates;
        if (covs.empty())
            for (const auto& c : st.data.schema.covariates()) covs.push_back(c.code);
        if (!covs.empty()) {
            const Matrix weights = cfg.profile_by_posterior ? fit.posterior.responsibilities : one_hot(st.assignment->labels, k);
            writer.table("lcca/covariate_profiles", covariate_table(profile_covariates(weights, st.data, covs), k));
        }
        Table sh;
        sh.title = "Class shares";
        sh.header = {"class", "modal_share_pct", "posterior_share_pct"};
        for (int c = 0; c < k; ++c)
            sh.rows.push_back({fmt::format("LC{}", c + 1), num(100.0 * st.assignment->shares[static_cast<std::size_t>(c)], 1), num(100.0 * fit.model.weights(c), 1)});
        writer.table("lcca/class_shares", sh, rec.warnings);
    });

    run(Stage::mcdm, [&](StageRecord& rec) {
        const int k = st.lcca->chosen.model.k;
        std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
        for (std::size_t i = 0; i < st.assignment->labels.size(); ++i) members[static_cast<std::size_t>(st.assignment->labels[i])].push_back(i);
        st.panels.clear();
        for (ScaleKind kind : {ScaleKind::motivator, ScaleKind::deterrent}) {
            for (const auto* scale : st.data.schema.scales_of_kind(kind)) {
                RankingPanel panel;
                panel.id = scale->id;
                panel.title = fmt::format("{} ({})", scale->name.empty() ? scale->id : scale->name, to_string(kind));
                for (const auto& code : scale->item_codes) {
                    const auto& prompt = st.data.schema.items()[st.data.schema.require_item(code)].prompt;
                    panel.labels.push_back(prompt.empty() ? code : prompt);
                }
                for (int c = 0; c < k; ++c) {
                    DecisionMatrix dm;
                    try {
                        dm = build_decision_matrix(st.data, members[static_cast<std::size_t>(c)], scale->item_codes, kind, cfg.matrix);
                    } catch (const Error& e) {
                        throw Error(fmt::format("class LC{} scale {}: {}", c + 1, scale->id, e.what()));
                    }
                    for (const auto& w : dm.warnings) rec.warnings.push_back(fmt::format("LC{} {}: {}", c + 1, scale->id, w));
                    writer.write(fmt::format("mcdm/{}_LC{}_matrix.csv", scale->id, c + 1), decision_matrix_table(dm, panel.labels).to_csv());
                    std::vector<MethodResult> results;
                    for (Method m : {Method::moora, Method::topsis, Method::vikor}) {
                        results.push_back(rank_with(m, dm, cfg.vikor_v));
                        results.back().alternatives = panel.labels;
                        for (const auto& w : results.back().warnings) rec.warnings.push_back(fmt::format("LC{} {}: {}", c + 1, scale->id, w));
                    }
                    panel.per_class.push_back(std::move(results));
                }
                writer.table(fmt::format("mcdm/{}_details", scale->id), method_detail_table(panel.title, panel.per_class));
                st.panels.push_back(std::move(panel));
            }
        }
        if (st.panels.empty()) rec.warnings.push_back("schema declares no motivator or deterrent scales");
    });

    run(Stage::aggregation, [&](StageRecord& rec) {
        nlohmann::json all = nlohmann::json::array();
        std::size_t panel_index = 0;
        for (auto& panel : st.panels) {
            panel.meta.clear();
            for (std::size_t c = 0; c < panel.per_class.size(); ++c) {
                std::vector<Ranking> inputs;
                for (const auto& r : panel.per_class[c]) inputs.push_back(r.ranks.total);
                auto ens = make_ensemble(panel.labels, inputs, cfg.method_weights, {"MOORA", "TOPSIS", "VIKOR"});
                AggregationPolicy policy;
                policy.metric = cfg.metric;
                policy.threads = cfg.threads;
                policy.cross_entropy = cfg.cross_entropy;
                policy.cross_entropy.seed = cfg.seed + 1000 * panel_index + c;
                auto res = aggregate(ens, policy);
                for (const auto& w : res.warnings) rec.warnings.push_back(fmt::format("{} LC{}: {}", panel.title, c + 1, w));
                nlohmann::json j = res.to_json();
                j["panel"] = panel.title;
                j["class"] = fmt::format("LC{}", c + 1);
                all.push_back(j);
                panel.meta.push_back(std::move(res));
            }
            ++panel_index;
        }
        writer.write("ranking/aggregation.json", all.dump(2) + "\n");
    });

    run(Stage::reports, [&](StageRecord& rec) {
        for (const auto& panel : st.panels) writer.table(fmt::format("ranking/{}_ranking", panel.id), ranking_table(panel));
        report.output_hash = [&] {
            std::uint64_t h = fnv1a("");
            for (const auto& rel : writer.written()) {
                std::ifstream in(writer.root() / rel, std::ios::binary);
                std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
                h = fnv1a(rel, h);
                h = fnv1a(bytes, h);
            }
            return hex64(h);
        }();
        rec.warnings.clear();
        // run_report.json is written after this record is closed; see below.
    });

    if (static_cast<int>(until) >= static_cast<int>(Stage::reports)) {
        writer.write("run_report.json", report.to_json().dump(2) + "\n");
        report.stages.back().artifacts.push_back("run_report.json");
        std::string summary = "# Run summary\n\n";
        summary += fmt::format("config hash: {}\nseed: {}\noutput hash: {}\n\n", report.config_hash, report.seed, report.output_hash);
        summary += "| stage | status | artifacts |\n| --- | --- | ---: |\n";
        for (const auto& s : report.stages) summary += fmt::format("| {} | {} | {} |\n", to_string(s.stage), s.status, s.artifacts.size());
        summary += "\n";
        const auto w = report.all_warnings();
        if (w.empty()) {
            summary += "warnings: none\n";
        } else {
            summary += "warnings:\n";
            for (const auto& x : w) summary += "- " + x + "\n";
        }
        writer.write("summary.md", summary);
        report.stages.back().artifacts.push_back("summary.md");
    }
    return report;
}

}  // namespace surveyrank
