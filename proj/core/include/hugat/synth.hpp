#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hugat/ingest.hpp"

namespace hugat::synth {

// Desk-scale planted-community city: regions on a grid with 4-adjacency,
// check-ins drawn from per-community POI category profiles, trips drawn with
// higher intra-community gravity.
struct SyntheticCitySpec {
    int regions = 300;
    int communities = 2;
    // communities x categories; empty -> disjoint block profiles over 9 categories
    std::vector<std::vector<double>> category_profiles;
    double intra_gravity = 8.0;
    double inter_gravity = 1.0;
    int pois_per_region = 5;
    long checkin_events = 20000;
    long trip_events = 50000;
    int landuse_types = 11;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticCity {
    HugInputs inputs;
    std::vector<LanduseRow> landuse;
    std::vector<int> labels;  // planted community per region
    Matrix distances;         // grid-centroid Euclidean distances
    std::vector<FlowRow> flows;
    std::vector<double> crime;
    std::vector<double> income;
};

SyntheticCity generate_synthetic_city(const SyntheticCitySpec& spec);

// Writes the full CSV file set (same schemas ingest() reads) into dir.
void write_city(const SyntheticCity& city, const std::string& dir);

DatasetPaths city_paths(const std::string& dir);

}  // namespace hugat::synth
