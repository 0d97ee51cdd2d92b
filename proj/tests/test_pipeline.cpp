#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#ifdef HUGAT_CLI_PATH
#include <sys/wait.h>
#endif
#include <fstream>
#include <sstream>

#include "hugat/ingest.hpp"
#include "hugat/pipeline.hpp"
#include "hugat/synth.hpp"
#include "hugat/targets.hpp"

using namespace hugat;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::path("tmp_tests") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

synth::SyntheticCitySpec tiny_city() {
    synth::SyntheticCitySpec spec;
    spec.regions = 9;
    spec.communities = 2;
    spec.pois_per_region = 2;
    spec.checkin_events = 300;
    spec.trip_events = 500;
    spec.landuse_types = 4;
    spec.seed = 3;
    return spec;
}

nlohmann::json tiny_config(const std::string& out_dir) {
    return {
        {"seed", 5},
        {"out_dir", out_dir},
        {"synthetic",
         {{"regions", 9},
          {"communities", 2},
          {"pois_per_region", 2},
          {"checkin_events", 300},
          {"trip_events", 500},
          {"landuse_types", 4}}},
        {"hug", {{"feature_dim", 16}}},
        {"model", {{"head_dim", 4}, {"heads", 2}, {"semantic_dim", 8}, {"out_dim", 4}}},
        {"training", {{"epochs", 2}, {"replicates", 2}}},
    };
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << "\n";
}

}  // namespace

TEST_CASE("synthetic city generation and export are byte-for-byte deterministic") {
    auto a = fresh_dir("synth_a"), b = fresh_dir("synth_b");
    synth::write_city(synth::generate_synthetic_city(tiny_city()), a.string());
    synth::write_city(synth::generate_synthetic_city(tiny_city()), b.string());
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        const auto name = entry.path().filename();
        CHECK(slurp((a / name).string()) == slurp((b / name).string()));
        ++compared;
    }
    CHECK(compared == 10);
}

TEST_CASE("planted communities are separated in land-use Hellinger distance") {
    auto city = synth::generate_synthetic_city(tiny_city());
    auto counts = landuse_area_counts(city.landuse, static_cast<int>(city.labels.size()));
    auto s = hellinger_matrix(category_distribution(counts)).S;
    double intra = 0, inter = 0;
    int n_intra = 0, n_inter = 0;
    const std::size_t n = city.labels.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (city.labels[i] == city.labels[j]) {
                intra += s(i, j);
                ++n_intra;
            } else {
                inter += s(i, j);
                ++n_inter;
            }
        }
    CHECK(inter / n_inter - intra / n_intra > 0.2);
}

TEST_CASE("ingest round-trips a written synthetic city") {
    auto dir = fresh_dir("ingest_city");
    auto city = synth::generate_synthetic_city(tiny_city());
    synth::write_city(city, dir.string());
    auto result = ingest(synth::city_paths(dir.string()), TimeSlotSpec{});
    CHECK(result.hug.regions.size() == 9);
    CHECK(result.row_counts.at("checkins") == 300);
    CHECK(result.row_counts.at("trips") == 500);
    CHECK(result.labels == city.labels);
    CHECK(result.distances.rows() == 9);
    CHECK(result.prediction_targets.count("crime") == 1);
    CHECK(result.prediction_targets.count("income") == 1);
    CHECK(result.prediction_targets.at("crime") == city.crime);
    CHECK(result.flows.size() == city.flows.size());
}

TEST_CASE("ingest reports the 1-based source line of malformed rows") {
    auto dir = fresh_dir("ingest_bad");
    write_lines(dir / "regions.csv", {"id,name", "0,a", "1,b"});
    write_lines(dir / "adjacency.csv", {"src,dst", "0,1"});
    write_lines(dir / "pois.csv", {"venue_id,region_id,category", "v0,0,food"});
    write_lines(dir / "checkins.csv", {"user,venue_id,timestamp", "u,v0,2013-07-01T08:00:00",
                                       "u,v0,garbled"});
    write_lines(dir / "trips.csv", {"pickup_ts,dropoff_ts,origin_region,dest_region"});
    write_lines(dir / "landuse.csv", {"region_id,landuse_type,area", "0,park,1.0"});

    DatasetPaths paths;
    paths.regions = (dir / "regions.csv").string();
    paths.adjacency = (dir / "adjacency.csv").string();
    paths.pois = (dir / "pois.csv").string();
    paths.checkins = (dir / "checkins.csv").string();
    paths.trips = (dir / "trips.csv").string();
    paths.landuse = (dir / "landuse.csv").string();

    try {
        ingest(paths, TimeSlotSpec{});
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(e.line == 3);  // bad timestamp is on file line 3
    }

    // unknown region reference, with its line
    write_lines(dir / "checkins.csv", {"user,venue_id,timestamp", "u,v0,2013-07-01T08:00:00"});
    write_lines(dir / "adjacency.csv", {"src,dst", "0,1", "0,9"});
    try {
        ingest(paths, TimeSlotSpec{});
        FAIL("expected SchemaViolation");
    } catch (const SchemaViolation& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("config parsing splits per-stage seeds from the root seed") {
    auto cfg = pipeline::parse_config(tiny_config("tmp_tests/cfg"));
    CHECK(cfg.seed == 5);
    CHECK(cfg.hug.seed == 6);
    CHECK(cfg.training.seed == 7);
    CHECK(cfg.model.feature_dim == 16);  // model width follows the graph features
    CHECK(cfg.eval_clusters == 2);       // defaults to the community count
    CHECK(cfg.training.replicates == 2);
}

TEST_CASE("configs without inputs or with bad weights are rejected") {
    CHECK_THROWS_AS(pipeline::parse_config({{"seed", 1}}), ConfigError);
    auto bad = tiny_config("tmp_tests/cfg");
    bad["training"]["alpha"] = 0.9;  // 0.9 + 0.6 + 0.1 != 1
    CHECK_THROWS_AS(pipeline::parse_config(bad), Error);
    auto bad_epochs = tiny_config("tmp_tests/cfg");
    bad_epochs["training"]["epochs"] = 0;
    CHECK_THROWS_AS(pipeline::parse_config(bad_epochs), ConfigError);
}

TEST_CASE("a short end-to-end run writes every stage artifact") {
    auto dir = fresh_dir("e2e");
    auto cfg = pipeline::parse_config(tiny_config(dir.string()));
    auto summary = pipeline::run_pipeline(cfg);

    for (const std::string name :
         {"hug_stats.txt", "od_matrix.csv", "s_chk.csv", "s_land.csv", "adjacency_RR.csv",
          "adjacency_RCR.csv", "adjacency_RT_OR.csv", "adjacency_RT_DR.csv",
          "adjacency_RT_CR.csv", "loss_history_seed7.csv", "loss_history_seed8.csv",
          "embeddings_seed7.csv", "beta_seed7.csv", "checkpoint_seed7.json", "summary.json"})
        CHECK_MESSAGE(fs::exists(dir / name), name);

    CHECK(summary["replicates"].size() == 2);
    CHECK(summary.contains("nmi"));
    CHECK(summary["replicates"][0].contains("crime_r2"));
    CHECK(summary["replicates"][0].contains("flow_r2"));

    const std::string losses = slurp((dir / "loss_history_seed7.csv").string());
    CHECK(losses.rfind("epoch,L_chk,L_land,L_mob,total", 0) == 0);
}

TEST_CASE("identical configs reproduce identical artifacts byte for byte") {
    auto a = fresh_dir("repro_a"), b = fresh_dir("repro_b");
    pipeline::run_pipeline(pipeline::parse_config(tiny_config(a.string())));
    pipeline::run_pipeline(pipeline::parse_config(tiny_config(b.string())));
    for (const std::string name :
         {"summary.json", "loss_history_seed7.csv", "embeddings_seed7.csv", "beta_seed8.csv",
          "od_matrix.csv"})
        CHECK(slurp((a / name).string()) == slurp((b / name).string()));
}

TEST_CASE("a missing input file fails in the ingest stage with exit code 3") {
    auto dir = fresh_dir("missing_input");
    nlohmann::json j = tiny_config(dir.string());
    j.erase("synthetic");
    j["inputs"] = {{"regions", (dir / "absent.csv").string()},
                   {"adjacency", (dir / "absent.csv").string()},
                   {"pois", (dir / "absent.csv").string()},
                   {"checkins", (dir / "absent.csv").string()},
                   {"trips", (dir / "absent.csv").string()},
                   {"landuse", (dir / "absent.csv").string()}};
    try {
        pipeline::run_pipeline(pipeline::parse_config(j));
        FAIL("expected StageError");
    } catch (const pipeline::StageError& e) {
        CHECK(e.stage == "ingest");
        CHECK(e.exit_code == 3);
    }
}

TEST_CASE("run_pipeline can stop after an early stage") {
    auto dir = fresh_dir("until_targets");
    auto summary =
        pipeline::run_pipeline(pipeline::parse_config(tiny_config(dir.string())), "targets");
    CHECK(summary["stopped_after"] == "targets");
    CHECK(fs::exists(dir / "od_matrix.csv"));
    CHECK(!fs::exists(dir / "summary.json"));
}

#ifdef HUGAT_CLI_PATH
namespace {

int run_cli(const std::string& args) {
    const int status = std::system((std::string(HUGAT_CLI_PATH) + " " + args +
                                    " > tmp_tests/cli_out.txt 2> tmp_tests/cli_err.txt")
                                       .c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("command-line smoke test with exit codes") {
    auto dir = fresh_dir("cli");
    std::ofstream((dir / "config.json")) << tiny_config((dir / "out").string()).dump(2);

    CHECK(run_cli("run --config " + (dir / "config.json").string()) == 0);
    CHECK(fs::exists(dir / "out" / "summary.json"));
    CHECK(run_cli("run --config " + (dir / "nonexistent.json").string()) == 2);

    // seed override changes the training seed split and thus artifact names
    CHECK(run_cli("train --config " + (dir / "config.json").string() + " --seed 20 --out " +
                  (dir / "out2").string()) == 0);
    CHECK(fs::exists(dir / "out2" / "loss_history_seed22.csv"));

    auto bad = tiny_config((dir / "out3").string());
    bad["training"]["epochs"] = 0;
    std::ofstream((dir / "bad.json")) << bad.dump(2);
    CHECK(run_cli("run --config " + (dir / "bad.json").string()) == 2);
}
#endif
