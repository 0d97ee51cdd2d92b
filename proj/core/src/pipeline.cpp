#include "hugat/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "hugat/csv.hpp"
#include "hugat/metapath.hpp"

namespace hugat::pipeline {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

PipelineConfig parse_config(const nlohmann::json& j) {
    PipelineConfig c;
    c.seed = get_or<std::uint64_t>(j, "seed", 0);
    c.out_dir = get_or<std::string>(j, "out_dir", "out");

    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        synth::SyntheticCitySpec spec;
        spec.regions = get_or<int>(s, "regions", spec.regions);
        spec.communities = get_or<int>(s, "communities", spec.communities);
        spec.intra_gravity = get_or<double>(s, "intra_gravity", spec.intra_gravity);
        spec.inter_gravity = get_or<double>(s, "inter_gravity", spec.inter_gravity);
        spec.pois_per_region = get_or<int>(s, "pois_per_region", spec.pois_per_region);
        spec.checkin_events = get_or<long>(s, "checkin_events", spec.checkin_events);
        spec.trip_events = get_or<long>(s, "trip_events", spec.trip_events);
        spec.landuse_types = get_or<int>(s, "landuse_types", spec.landuse_types);
        if (s.contains("category_profiles"))
            spec.category_profiles = s.at("category_profiles").get<std::vector<std::vector<double>>>();
        spec.seed = c.seed;
        c.synthetic = spec;
    } else if (j.contains("inputs")) {
        const auto& in = j.at("inputs");
        c.inputs.regions = in.at("regions").get<std::string>();
        c.inputs.adjacency = in.at("adjacency").get<std::string>();
        c.inputs.pois = in.at("pois").get<std::string>();
        c.inputs.checkins = in.at("checkins").get<std::string>();
        c.inputs.trips = in.at("trips").get<std::string>();
        c.inputs.landuse = in.at("landuse").get<std::string>();
        c.inputs.labels = get_or<std::string>(in, "labels", "");
        c.inputs.distances = get_or<std::string>(in, "distances", "");
        c.inputs.flows = get_or<std::string>(in, "flows", "");
        c.inputs.targets = get_or<std::string>(in, "targets", "");
    } else {
        throw ConfigError("config needs either 'synthetic' or 'inputs'");
    }

    if (j.contains("hug")) {
        const auto& h = j.at("hug");
        c.hug.slots.slots_per_week = get_or<int>(h, "slots_per_week", 168);
        c.hug.hotspot_k = get_or<double>(h, "hotspot_k", 0.10);
        c.hug.feature_dim = get_or<int>(h, "feature_dim", 250);
    }
    c.hug.seed = c.seed + 1;  // per-stage seed split from the root seed

    if (j.contains("model")) {
        const auto& m = j.at("model");
        c.model.head_dim = get_or<int>(m, "head_dim", c.model.head_dim);
        c.model.heads = get_or<int>(m, "heads", c.model.heads);
        c.model.semantic_dim = get_or<int>(m, "semantic_dim", c.model.semantic_dim);
        c.model.out_dim = get_or<int>(m, "out_dim", c.model.out_dim);
        c.model.leaky_slope = get_or<double>(m, "leaky_slope", c.model.leaky_slope);
    }
    c.model.feature_dim = c.hug.feature_dim;

    if (j.contains("training")) {
        const auto& t = j.at("training");
        c.training.epochs = get_or<int>(t, "epochs", c.training.epochs);
        c.training.lr = get_or<double>(t, "lr", c.training.lr);
        c.training.replicates = get_or<int>(t, "replicates", c.training.replicates);
        c.training.weights.alpha = get_or<double>(t, "alpha", c.training.weights.alpha);
        c.training.weights.beta = get_or<double>(t, "beta", c.training.weights.beta);
        c.training.weights.gamma = get_or<double>(t, "gamma", c.training.weights.gamma);
    }
    c.training.seed = c.seed + 2;
    if (c.training.epochs < 1 || c.training.lr <= 0) throw ConfigError("bad training config");
    c.training.weights.validate();

    c.eval_clusters = c.synthetic ? c.synthetic->communities : 12;
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        c.eval_clusters = get_or<int>(e, "clusters", c.eval_clusters);
        c.run_ablation = get_or<bool>(e, "ablation", false);
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
    try {
        return parse_config(j);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(e.what());
    }
}

PreparedData prepare(const PipelineConfig& config, const std::string& until) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    PreparedData data;

    try {
        DatasetPaths paths = config.inputs;
        if (config.synthetic) {
            auto city = synth::generate_synthetic_city(*config.synthetic);
            synth::write_city(city, config.out_dir + "/data");
            paths = synth::city_paths(config.out_dir + "/data");
        }
        data.ingested = ingest(paths, config.hug.slots);
    } catch (const Error& e) {
        throw StageError("ingest", 3, e.what());
    }
    if (until == "ingest") return data;

    try {
        data.graph = build_hug(data.ingested.hug, config.hug);
        auto violations = validate_schema(data.graph);
        if (!violations.empty()) throw Error("schema violation: " + violations[0].describe());
        std::ofstream stats(config.out_dir + "/hug_stats.txt");
        stats << hug_stats_table(data.graph);
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError("graph", 3, e.what());
    }
    if (until == "graph") return data;

    try {
        data.adjacencies = all_builtin_adjacencies(data.graph);
        for (const auto& adj : data.adjacencies) {
            std::vector<std::vector<std::string>> rows;
            for (std::size_t i = 0; i < adj.neighbor_sets.size(); ++i)
                for (int jn : adj.neighbor_sets[i])
                    rows.push_back({std::to_string(i), std::to_string(jn)});
            csv::write_file(config.out_dir + "/adjacency_" + adj.metapath.name + ".csv",
                            {"src", "dst"}, rows);
        }
    } catch (const Error& e) {
        throw StageError("metapaths", 3, e.what());
    }
    if (until == "metapaths") return data;

    try {
        data.targets.od.F = od_counts(data.ingested.hug);
        data.targets.trips = trip_conditionals(data.targets.od);
        data.targets.s_chk =
            hellinger_matrix(category_distribution(checkin_category_counts(data.ingested.hug)));
        data.targets.s_land = hellinger_matrix(category_distribution(
            landuse_area_counts(data.ingested.landuse, data.graph.region_count())));
        csv::write_matrix(config.out_dir + "/od_matrix.csv", data.targets.od.F);
        csv::write_matrix(config.out_dir + "/s_chk.csv", data.targets.s_chk.S);
        csv::write_matrix(config.out_dir + "/s_land.csv", data.targets.s_land.S);
    } catch (const Error& e) {
        throw StageError("targets", 3, e.what());
    }
    return data;
}

namespace {

void write_train_artifacts(const std::string& out_dir, std::uint64_t seed,
                           const train::TrainResult& result) {
    const std::string tag = "_seed" + std::to_string(seed);
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto& rec : result.history)
            rows.push_back({std::to_string(rec.epoch), csv::format_double(rec.chk),
                            csv::format_double(rec.land), csv::format_double(rec.mob),
                            csv::format_double(rec.total)});
        csv::write_file(out_dir + "/loss_history" + tag + ".csv",
                        {"epoch", "L_chk", "L_land", "L_mob", "total"}, rows);
    }
    {
        std::vector<std::string> header{"region_id"};
        for (std::size_t j = 0; j < result.embeddings.cols(); ++j)
            header.push_back("z_" + std::to_string(j));
        std::vector<std::vector<std::string>> rows;
        for (std::size_t i = 0; i < result.embeddings.rows(); ++i) {
            std::vector<std::string> row{std::to_string(i)};
            for (std::size_t j = 0; j < result.embeddings.cols(); ++j)
                row.push_back(csv::format_double(result.embeddings(i, j)));
            rows.push_back(std::move(row));
        }
        csv::write_file(out_dir + "/embeddings" + tag + ".csv", header, rows);
    }
    {
        std::vector<std::string> header{"epoch"};
        const std::size_t n_beta = result.beta_history.empty() ? 0 : result.beta_history[0].size();
        for (std::size_t m = 0; m < n_beta; ++m) header.push_back("beta_" + std::to_string(m));
        std::vector<std::vector<std::string>> rows;
        for (std::size_t e = 0; e < result.beta_history.size(); ++e) {
            std::vector<std::string> row{std::to_string(e + 1)};
            for (double b : result.beta_history[e]) row.push_back(csv::format_double(b));
            rows.push_back(std::move(row));
        }
        csv::write_file(out_dir + "/beta" + tag + ".csv", header, rows);
    }
    train::save_checkpoint(result.params, out_dir + "/checkpoint" + tag + ".json");
}

}  // namespace

nlohmann::json run_pipeline(const PipelineConfig& config, const std::string& until) {
    PreparedData data = prepare(config, until);
    nlohmann::json summary;
    summary["config"] = {{"seed", config.seed},
                         {"epochs", config.training.epochs},
                         {"replicates", config.training.replicates},
                         {"regions", data.graph.region_count()}};
    if (until == "ingest" || until == "graph" || until == "metapaths" || until == "targets") {
        summary["stopped_after"] = until;
        return summary;
    }

    std::vector<train::TrainResult> results;
    try {
        auto ctx = han::make_context(data.graph, data.adjacencies);
        results = train::train_replicates(ctx, data.targets, config.model, config.training);
        for (int r = 0; r < config.training.replicates; ++r)
            write_train_artifacts(config.out_dir, config.training.seed + r, results[r]);
    } catch (const DivergenceDetected& e) {
        throw StageError("train", 4, e.what());
    } catch (const Error& e) {
        throw StageError("train", 4, e.what());
    }
    if (until == "train") {
        summary["stopped_after"] = until;
        std::ofstream out(config.out_dir + "/summary.json");
        out << summary.dump(2);
        return summary;
    }

    try {
        const std::uint64_t eval_seed = config.seed + 3;
        nlohmann::json reps = nlohmann::json::array();
        double nmi_sum = 0, ari_sum = 0;
        int nmi_count = 0;
        for (int r = 0; r < config.training.replicates; ++r) {
            const auto& res = results[r];
            nlohmann::json rep;
            rep["seed"] = config.training.seed + r;
            rep["loss_first_epoch"] = res.history.front().total;
            rep["final_loss"] = res.history.back().total;
            if (!data.ingested.labels.empty()) {
                auto clustering = eval::kmeans(res.embeddings, config.eval_clusters, 10, eval_seed);
                rep["nmi"] = eval::nmi(clustering.labels, data.ingested.labels);
                rep["ari"] = eval::ari(clustering.labels, data.ingested.labels);
                nmi_sum += rep["nmi"].get<double>();
                ari_sum += rep["ari"].get<double>();
                ++nmi_count;
            }
            eval::LassoOptions opts;
            opts.seed = eval_seed;
            for (const auto& [name, y] : data.ingested.prediction_targets) {
                auto report = eval::lasso_cv_fit(res.embeddings, y, opts, name);
                rep[name + "_r2"] = report.r2;
                rep[name + "_mae"] = report.mae;
                rep[name + "_rmse"] = report.rmse;
            }
            if (!data.ingested.flows.empty() && data.ingested.distances.rows() > 0) {
                std::vector<eval::FlowObservation> flows;
                for (const auto& f : data.ingested.flows)
                    flows.push_back({f.origin, f.dest, f.count});
                auto report =
                    eval::flow_regression(res.embeddings, data.ingested.distances, flows, opts);
                rep["flow_r2"] = report.r2;
                rep["flow_mae"] = report.mae;
                rep["flow_rmse"] = report.rmse;
            }
            reps.push_back(rep);
        }
        summary["replicates"] = reps;
        if (nmi_count > 0) {
            summary["nmi"] = nmi_sum / nmi_count;
            summary["ari"] = ari_sum / nmi_count;
        }
    } catch (const Error& e) {
        throw StageError("eval", 5, e.what());
    }

    if (config.run_ablation && until != "eval") {
        try {
            if (data.ingested.labels.empty() || !data.ingested.prediction_targets.count("crime") ||
                !data.ingested.prediction_targets.count("income") ||
                data.ingested.flows.empty() || data.ingested.distances.rows() == 0)
                throw Error("ablation needs labels, crime/income targets, flows and distances");
            eval::AblationInputs inputs;
            inputs.crime = data.ingested.prediction_targets.at("crime");
            inputs.income = data.ingested.prediction_targets.at("income");
            inputs.distances = data.ingested.distances;
            for (const auto& f : data.ingested.flows)
                inputs.flows.push_back({f.origin, f.dest, f.count});
            inputs.true_labels = data.ingested.labels;
            inputs.clusters = config.eval_clusters;
            auto rows = eval::metapath_ablation(data.graph, data.targets, config.model,
                                                config.training, inputs);
            std::vector<std::vector<std::string>> csv_rows;
            for (const auto& row : rows)
                csv_rows.push_back({row.metapath_set, csv::format_double(row.crime_r2),
                                    csv::format_double(row.income_r2),
                                    csv::format_double(row.flow_r2),
                                    csv::format_double(row.nmi)});
            csv::write_file(config.out_dir + "/ablation.csv",
                            {"metapath_set", "crime_r2", "income_r2", "flow_r2", "nmi"}, csv_rows);
        } catch (const Error& e) {
            throw StageError("ablate", 5, e.what());
        }
    }

    std::ofstream out(config.out_dir + "/summary.json");
    out << summary.dump(2);
    return summary;
}

}  // namespace hugat::pipeline
