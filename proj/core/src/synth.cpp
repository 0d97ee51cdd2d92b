#include "hugat/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "hugat/csv.hpp"

namespace hugat::synth {

void SyntheticCitySpec::validate() const {
    if (regions < 1) throw InvalidSpec("regions must be >= 1");
    if (communities < 1 || communities > regions)
        throw InvalidSpec("communities must partition regions");
    if (checkin_events < 0 || trip_events < 0) throw InvalidSpec("event counts must be >= 0");
    if (pois_per_region < 1) throw InvalidSpec("pois_per_region must be >= 1");
    if (intra_gravity <= 0 || inter_gravity <= 0) throw InvalidSpec("gravity weights must be positive");
    if (!category_profiles.empty() &&
        static_cast<int>(category_profiles.size()) != communities)
        throw InvalidSpec("one category profile per community required");
}

namespace {

constexpr int kDefaultCategories = 9;

std::vector<std::vector<double>> block_profiles(int communities, int categories) {
    std::vector<std::vector<double>> p(communities, std::vector<double>(categories, 0.05));
    const int block = (categories + communities - 1) / communities;
    for (int c = 0; c < communities; ++c) {
        for (int k = c * block; k < std::min((c + 1) * block, categories); ++k) p[c][k] = 1.0;
    }
    return p;
}

// Monday 2013-07-01 anchors the synthetic week
std::string slot_timestamp(int slot, int minute) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "2013-07-%02dT%02d:%02d:00", slot / 24 + 1, slot % 24, minute);
    return buf;
}

}  // namespace

SyntheticCity generate_synthetic_city(const SyntheticCitySpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);

    const int n = spec.regions;
    const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    auto community = [&](int i) {
        return static_cast<int>(static_cast<long>(i) * spec.communities / n);
    };

    SyntheticCity city;
    city.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        city.inputs.regions.push_back({i, "r" + std::to_string(i)});
        city.labels[i] = community(i);
    }

    // grid 4-adjacency
    for (int i = 0; i < n; ++i) {
        const int row = i / side, col = i % side;
        if (col + 1 < side && i + 1 < n) city.inputs.adjacency.push_back({i, i + 1});
        if (row + 1 < side && i + side < n) city.inputs.adjacency.push_back({i, i + side});
    }

    auto profiles = spec.category_profiles.empty()
                        ? block_profiles(spec.communities, kDefaultCategories)
                        : spec.category_profiles;
    const int categories = static_cast<int>(profiles[0].size());

    // POIs per region, categories drawn from the community profile
    std::vector<std::vector<std::string>> region_venues(n);
    for (int i = 0; i < n; ++i) {
        std::discrete_distribution<int> cat_dist(profiles[community(i)].begin(),
                                                 profiles[community(i)].end());
        for (int p = 0; p < spec.pois_per_region; ++p) {
            std::string venue = "v" + std::to_string(i) + "_" + std::to_string(p);
            city.inputs.pois.push_back({venue, i, "cat" + std::to_string(cat_dist(rng))});
            region_venues[i].push_back(std::move(venue));
        }
    }

    std::uniform_int_distribution<int> region_dist(0, n - 1);
    std::uniform_int_distribution<int> slot_dist(0, 167);
    std::uniform_int_distribution<int> minute_dist(0, 59);

    for (long e = 0; e < spec.checkin_events; ++e) {
        const int r = region_dist(rng);
        std::uniform_int_distribution<std::size_t> venue_dist(0, region_venues[r].size() - 1);
        city.inputs.checkins.push_back({"u" + std::to_string(e % 500),
                                        region_venues[r][venue_dist(rng)],
                                        slot_timestamp(slot_dist(rng), minute_dist(rng))});
    }

    // trips with higher intra-community gravity
    std::vector<std::discrete_distribution<int>> dest_dist;
    for (int c = 0; c < spec.communities; ++c) {
        std::vector<double> w(n);
        for (int j = 0; j < n; ++j)
            w[j] = community(j) == c ? spec.intra_gravity : spec.inter_gravity;
        dest_dist.emplace_back(w.begin(), w.end());
    }
    for (long e = 0; e < spec.trip_events; ++e) {
        const int origin = region_dist(rng);
        const int dest = dest_dist[community(origin)](rng);
        const int slot = slot_dist(rng);
        city.inputs.trips.push_back({slot_timestamp(slot, minute_dist(rng)),
                                     slot_timestamp(slot, minute_dist(rng)), origin, dest});
    }

    // land use areas from community block profiles
    auto land_profiles = block_profiles(spec.communities, spec.landuse_types);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < spec.landuse_types; ++l) {
            const double area =
                land_profiles[community(i)][l] * (50.0 + 50.0 * unif(rng));
            city.landuse.push_back({i, "type" + std::to_string(l), area});
        }
    }

    // grid-centroid distances
    city.distances = Matrix(n, n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double dr = i / side - j / side, dc = i % side - j % side;
            city.distances(i, j) = std::sqrt(dr * dr + dc * dc);
        }

    // bike flows follow an inverse-distance rule with an intra-community boost
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < 3; ++s) {
            const int j = region_dist(rng);
            if (j == i) continue;
            const double boost = community(i) == community(j) ? 1.5 : 1.0;
            const double count =
                100.0 * boost / (1.0 + city.distances(i, j)) * (0.9 + 0.2 * unif(rng));
            city.flows.push_back({i, j, count});
        }
    }

    // per-region prediction targets with a community-level signal
    city.crime.resize(n);
    city.income.resize(n);
    for (int i = 0; i < n; ++i) {
        const int c = community(i);
        city.crime[i] = 100.0 + 80.0 * c + 20.0 * (unif(rng) - 0.5);
        city.income[i] = 50.0 + 30.0 * c + 8.0 * (unif(rng) - 0.5);
    }
    return city;
}

DatasetPaths city_paths(const std::string& dir) {
    DatasetPaths p;
    p.regions = dir + "/regions.csv";
    p.adjacency = dir + "/adjacency.csv";
    p.pois = dir + "/pois.csv";
    p.checkins = dir + "/checkins.csv";
    p.trips = dir + "/trips.csv";
    p.landuse = dir + "/landuse.csv";
    p.labels = dir + "/labels.csv";
    p.distances = dir + "/distances.csv";
    p.flows = dir + "/flows.csv";
    p.targets = dir + "/targets.csv";
    return p;
}

void write_city(const SyntheticCity& city, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto paths = city_paths(dir);

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : city.inputs.regions) rows.push_back({std::to_string(r.id), r.name});
    csv::write_file(paths.regions, {"id", "name"}, rows);

    rows.clear();
    for (const auto& a : city.inputs.adjacency)
        rows.push_back({std::to_string(a.src), std::to_string(a.dst)});
    csv::write_file(paths.adjacency, {"src", "dst"}, rows);

    rows.clear();
    for (const auto& p : city.inputs.pois)
        rows.push_back({p.venue_id, std::to_string(p.region_id), p.category});
    csv::write_file(paths.pois, {"venue_id", "region_id", "category"}, rows);

    rows.clear();
    for (const auto& c : city.inputs.checkins) rows.push_back({c.user, c.venue_id, c.timestamp});
    csv::write_file(paths.checkins, {"user", "venue_id", "timestamp"}, rows);

    rows.clear();
    for (const auto& t : city.inputs.trips)
        rows.push_back({t.pickup_ts, t.dropoff_ts, std::to_string(t.origin_region),
                        std::to_string(t.dest_region)});
    csv::write_file(paths.trips, {"pickup_ts", "dropoff_ts", "origin_region", "dest_region"}, rows);

    rows.clear();
    for (const auto& l : city.landuse)
        rows.push_back({std::to_string(l.region_id), l.landuse_type, csv::format_double(l.area)});
    csv::write_file(paths.landuse, {"region_id", "landuse_type", "area"}, rows);

    rows.clear();
    for (std::size_t i = 0; i < city.labels.size(); ++i)
        rows.push_back({std::to_string(i), std::to_string(city.labels[i])});
    csv::write_file(paths.labels, {"region_id", "district"}, rows);

    rows.clear();
    for (std::size_t i = 0; i < city.distances.rows(); ++i)
        for (std::size_t j = 0; j < city.distances.cols(); ++j)
            rows.push_back({std::to_string(i), std::to_string(j),
                            csv::format_double(city.distances(i, j))});
    csv::write_file(paths.distances, {"origin", "dest", "distance"}, rows);

    rows.clear();
    for (const auto& f : city.flows)
        rows.push_back({std::to_string(f.origin), std::to_string(f.dest),
                        csv::format_double(f.count)});
    csv::write_file(paths.flows, {"origin", "dest", "count"}, rows);

    rows.clear();
    for (std::size_t i = 0; i < city.crime.size(); ++i)
        rows.push_back({std::to_string(i), csv::format_double(city.crime[i]),
                        csv::format_double(city.income[i])});
    csv::write_file(paths.targets, {"region_id", "crime", "income"}, rows);
}

}  // namespace hugat::synth
