#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hugat/error.hpp"
#include "hugat/matrix.hpp"

namespace hugat {

enum class NodeType { Region, PoiCategory, CheckinTime, TripOriginTime, TripDestTime };
constexpr std::array<NodeType, 5> kNodeTypes = {NodeType::Region, NodeType::PoiCategory,
                                                NodeType::CheckinTime, NodeType::TripOriginTime,
                                                NodeType::TripDestTime};
std::string to_string(NodeType t);

enum class RelationType {
    AdjacentTo,         // R -> R, self-reverse
    Contains,           // R -> C
    LocatedIn,          // C -> R
    AttractsCheckinAt,  // R -> T_C
    GeneratesCheckinIn, // T_C -> R
    AttractsPickupAt,   // R -> T_O
    GeneratesPickupIn,  // T_O -> R
    AttractsDropoffAt,  // R -> T_D
    GeneratesDropoffIn  // T_D -> R
};
constexpr std::array<RelationType, 9> kRelationTypes = {
    RelationType::AdjacentTo,        RelationType::Contains,
    RelationType::LocatedIn,         RelationType::AttractsCheckinAt,
    RelationType::GeneratesCheckinIn, RelationType::AttractsPickupAt,
    RelationType::GeneratesPickupIn, RelationType::AttractsDropoffAt,
    RelationType::GeneratesDropoffIn};
std::string to_string(RelationType r);
RelationType reverse_of(RelationType r);
NodeType source_type(RelationType r);
NodeType target_type(RelationType r);

// Week-hour time slots; slot = weekday * 24 + hour with Monday = 0.
struct TimeSlotSpec {
    int slots_per_week = 168;
    // Parses "YYYY-MM-DD[T ]HH:MM[:SS]" and maps to a week-hour slot.
    int slot_of(const std::string& timestamp) const;
};

using Edge = std::pair<int, int>;  // per-type node indices

struct HeterogeneousUrbanGraph {
    // node counts / labels per type; region indices are the contiguous ids
    std::map<NodeType, std::vector<std::string>> nodes;
    std::map<RelationType, std::vector<Edge>> edges;
    // node features per type, one row per node
    std::map<NodeType, Matrix> features;

    int count(NodeType t) const {
        auto it = nodes.find(t);
        return it == nodes.end() ? 0 : static_cast<int>(it->second.size());
    }
    int region_count() const { return count(NodeType::Region); }
    bool has_edge(RelationType r, int src, int dst) const;
};

struct SchemaViolationEntry {
    enum class Rule { TypeMismatch, MissingReverse, MissingFeatures };
    Rule rule;
    RelationType relation;
    Edge edge;
    std::string describe() const;
};

struct HugConfig {
    TimeSlotSpec slots;
    double hotspot_k = 0.10;
    int feature_dim = 250;
    std::uint64_t seed = 0;
};

struct RegionRow { int id; std::string name; };
struct AdjacencyRow { int src; int dst; };
struct PoiRow { std::string venue_id; int region_id; std::string category; };
struct CheckinRow { std::string user; std::string venue_id; std::string timestamp; };
struct TripRow { std::string pickup_ts; std::string dropoff_ts; int origin_region; int dest_region; };

struct HugInputs {
    std::vector<RegionRow> regions;
    std::vector<AdjacencyRow> adjacency;
    std::vector<PoiRow> pois;
    std::vector<CheckinRow> checkins;
    std::vector<TripRow> trips;
};

// Top-k% (region, slot) pairs by count; ties at the cutoff broken by
// (region, slot) lexicographic order. Returns ceil(k * #positive pairs).
std::set<std::pair<int, int>> hotspot_filter(const std::map<std::pair<int, int>, long>& counts,
                                             double k);

HeterogeneousUrbanGraph build_hug(const HugInputs& inputs, const HugConfig& config);

std::vector<SchemaViolationEntry> validate_schema(const HeterogeneousUrbanGraph& g);

}  // namespace hugat
