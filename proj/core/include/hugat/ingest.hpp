#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hugat/hug.hpp"

namespace hugat {

struct LanduseRow {
    int region_id;
    std::string landuse_type;
    double area;
};

struct DatasetPaths {
    std::string regions;
    std::string adjacency;
    std::string pois;
    std::string checkins;
    std::string trips;
    std::string landuse;
    std::string labels;     // optional: ground-truth district per region
    std::string distances;  // optional: N x N travel distance matrix
    std::string flows;      // optional: (origin, dest, count) bike flows
    std::string targets;    // optional: per-region prediction targets
};

struct FlowRow {
    int origin, dest;
    double count;
};

struct IngestResult {
    HugInputs hug;
    std::vector<LanduseRow> landuse;
    std::vector<int> labels;                       // empty when not provided
    Matrix distances;                              // 0x0 when not provided
    std::vector<FlowRow> flows;
    std::map<std::string, std::vector<double>> prediction_targets;  // by column name
    std::map<std::string, std::size_t> row_counts;
};

// Validates schemas and region references; malformed rows raise
// SchemaViolation with the 1-based source line.
IngestResult ingest(const DatasetPaths& paths, const TimeSlotSpec& slots);

// Relation counts in the layout of the graph-statistics table.
std::string hug_stats_table(const HeterogeneousUrbanGraph& g);

// Time-aggregated OD counts and per-region category/land-use count matrices.
Matrix od_counts(const HugInputs& in);
Matrix checkin_category_counts(const HugInputs& in, std::vector<std::string>* categories = nullptr);
Matrix landuse_area_counts(const std::vector<LanduseRow>& rows, int region_count,
                           std::vector<std::string>* types = nullptr);

}  // namespace hugat
