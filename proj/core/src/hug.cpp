#include "hugat/hug.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

namespace hugat {

std::string to_string(NodeType t) {
    switch (t) {
        case NodeType::Region: return "Region";
        case NodeType::PoiCategory: return "PoiCategory";
        case NodeType::CheckinTime: return "CheckinTime";
        case NodeType::TripOriginTime: return "TripOriginTime";
        case NodeType::TripDestTime: return "TripDestTime";
    }
    return "?";
}

std::string to_string(RelationType r) {
    switch (r) {
        case RelationType::AdjacentTo: return "AdjacentTo";
        case RelationType::Contains: return "Contains";
        case RelationType::LocatedIn: return "LocatedIn";
        case RelationType::AttractsCheckinAt: return "AttractsCheckinAt";
        case RelationType::GeneratesCheckinIn: return "GeneratesCheckinIn";
        case RelationType::AttractsPickupAt: return "AttractsPickupAt";
        case RelationType::GeneratesPickupIn: return "GeneratesPickupIn";
        case RelationType::AttractsDropoffAt: return "AttractsDropoffAt";
        case RelationType::GeneratesDropoffIn: return "GeneratesDropoffIn";
    }
    return "?";
}

RelationType reverse_of(RelationType r) {
    switch (r) {
        case RelationType::AdjacentTo: return RelationType::AdjacentTo;
        case RelationType::Contains: return RelationType::LocatedIn;
        case RelationType::LocatedIn: return RelationType::Contains;
        case RelationType::AttractsCheckinAt: return RelationType::GeneratesCheckinIn;
        case RelationType::GeneratesCheckinIn: return RelationType::AttractsCheckinAt;
        case RelationType::AttractsPickupAt: return RelationType::GeneratesPickupIn;
        case RelationType::GeneratesPickupIn: return RelationType::AttractsPickupAt;
        case RelationType::AttractsDropoffAt: return RelationType::GeneratesDropoffIn;
        case RelationType::GeneratesDropoffIn: return RelationType::AttractsDropoffAt;
    }
    throw Error("bad relation");
}

NodeType source_type(RelationType r) {
    switch (r) {
        case RelationType::AdjacentTo:
        case RelationType::Contains:
        case RelationType::AttractsCheckinAt:
        case RelationType::AttractsPickupAt:
        case RelationType::AttractsDropoffAt:
            return NodeType::Region;
        case RelationType::LocatedIn: return NodeType::PoiCategory;
        case RelationType::GeneratesCheckinIn: return NodeType::CheckinTime;
        case RelationType::GeneratesPickupIn: return NodeType::TripOriginTime;
        case RelationType::GeneratesDropoffIn: return NodeType::TripDestTime;
    }
    throw Error("bad relation");
}

NodeType target_type(RelationType r) { return source_type(reverse_of(r)); }

namespace {

// days since 1970-01-01 for a civil date (Howard Hinnant's algorithm)
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

}  // namespace

int TimeSlotSpec::slot_of(const std::string& timestamp) const {
    int y, mo, d, h, mi;
    int s = 0;
    char sep;
    int n = std::sscanf(timestamp.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s);
    if (n < 6 || (sep != 'T' && sep != ' ')) throw MalformedTimestamp(timestamp);
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
        s > 60)
        throw MalformedTimestamp(timestamp);
    const long days = days_from_civil(y, mo, d);
    // 1970-01-01 was a Thursday; Monday = 0
    int weekday = static_cast<int>(((days % 7) + 7 + 3) % 7);
    long slot = static_cast<long>(weekday) * 24 + h;
    return static_cast<int>(slot * slots_per_week / 168);
}

bool HeterogeneousUrbanGraph::has_edge(RelationType r, int src, int dst) const {
    auto it = edges.find(r);
    if (it == edges.end()) return false;
    return std::find(it->second.begin(), it->second.end(), Edge{src, dst}) != it->second.end();
}

std::string SchemaViolationEntry::describe() const {
    std::string rule_name;
    switch (rule) {
        case Rule::TypeMismatch: rule_name = "TypeMismatch"; break;
        case Rule::MissingReverse: rule_name = "MissingReverse"; break;
        case Rule::MissingFeatures: rule_name = "MissingFeatures"; break;
    }
    return rule_name + " " + to_string(relation) + "(" + std::to_string(edge.first) + "," +
           std::to_string(edge.second) + ")";
}

std::set<std::pair<int, int>> hotspot_filter(const std::map<std::pair<int, int>, long>& counts,
                                             double k) {
    if (!(k > 0.0 && k <= 1.0)) throw InvalidFraction("hotspot k = " + std::to_string(k));
    std::vector<std::pair<std::pair<int, int>, long>> positive;
    for (const auto& [key, c] : counts) {
        if (c < 0) throw NegativeCount("hotspot count");
        if (c > 0) positive.emplace_back(key, c);
    }
    const std::size_t keep =
        static_cast<std::size_t>(std::ceil(k * static_cast<double>(positive.size())));
    std::sort(positive.begin(), positive.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::set<std::pair<int, int>> out;
    for (std::size_t i = 0; i < keep && i < positive.size(); ++i) out.insert(positive[i].first);
    return out;
}

HeterogeneousUrbanGraph build_hug(const HugInputs& in, const HugConfig& config) {
    if (in.regions.empty()) throw EmptyEventTable("region table");
    const int n_regions = static_cast<int>(in.regions.size());

    HeterogeneousUrbanGraph g;
    std::vector<std::string> region_names(n_regions);
    for (const auto& r : in.regions) {
        if (r.id < 0 || r.id >= n_regions) throw UnknownRegion("non-contiguous region id " + std::to_string(r.id));
        region_names[r.id] = r.name;
    }
    g.nodes[NodeType::Region] = region_names;

    auto check_region = [n_regions](int id) {
        if (id < 0 || id >= n_regions) throw UnknownRegion(std::to_string(id));
    };

    // category index from sorted unique POI categories
    std::set<std::string> cat_set;
    for (const auto& p : in.pois) cat_set.insert(p.category);
    std::vector<std::string> categories(cat_set.begin(), cat_set.end());
    g.nodes[NodeType::PoiCategory] = categories;
    auto cat_index = [&categories](const std::string& c) {
        return static_cast<int>(std::lower_bound(categories.begin(), categories.end(), c) -
                                categories.begin());
    };

    const int slots = config.slots.slots_per_week;
    auto slot_names = [slots]() {
        std::vector<std::string> names(slots);
        for (int t = 0; t < slots; ++t) names[t] = "t" + std::to_string(t);
        return names;
    };
    g.nodes[NodeType::CheckinTime] = slot_names();
    g.nodes[NodeType::TripOriginTime] = slot_names();
    g.nodes[NodeType::TripDestTime] = slot_names();

    // spatial edges
    std::set<Edge> rr;
    for (const auto& a : in.adjacency) {
        check_region(a.src);
        check_region(a.dst);
        rr.insert({a.src, a.dst});
        rr.insert({a.dst, a.src});
    }
    std::set<Edge> rc;
    std::map<std::string, int> venue_region;
    for (const auto& p : in.pois) {
        check_region(p.region_id);
        rc.insert({p.region_id, cat_index(p.category)});
        venue_region[p.venue_id] = p.region_id;
    }

    // check-in temporal edges: every (region, slot) with at least one event
    std::set<Edge> rtc;
    for (const auto& c : in.checkins) {
        auto it = venue_region.find(c.venue_id);
        if (it == venue_region.end()) throw UnknownRegion("venue " + c.venue_id);
        rtc.insert({it->second, config.slots.slot_of(c.timestamp)});
    }

    // trip temporal edges restricted to hotspot (region, slot) pairs
    std::map<std::pair<int, int>, long> origin_counts, dest_counts;
    for (const auto& t : in.trips) {
        check_region(t.origin_region);
        check_region(t.dest_region);
        origin_counts[{t.origin_region, config.slots.slot_of(t.pickup_ts)}]++;
        dest_counts[{t.dest_region, config.slots.slot_of(t.dropoff_ts)}]++;
    }
    auto hot_origins = hotspot_filter(origin_counts, config.hotspot_k);
    auto hot_dests = hotspot_filter(dest_counts, config.hotspot_k);

    auto emit = [&g](RelationType fwd, const std::set<Edge>& es) {
        auto& fedges = g.edges[fwd];
        auto& redges = g.edges[reverse_of(fwd)];
        for (const auto& [s, t] : es) {
            fedges.push_back({s, t});
            if (fwd != RelationType::AdjacentTo) redges.push_back({t, s});
        }
    };
    emit(RelationType::AdjacentTo, rr);
    emit(RelationType::Contains, rc);
    emit(RelationType::AttractsCheckinAt, rtc);
    std::set<Edge> rto(hot_origins.begin(), hot_origins.end());
    std::set<Edge> rtd(hot_dests.begin(), hot_dests.end());
    emit(RelationType::AttractsPickupAt, rto);
    emit(RelationType::AttractsDropoffAt, rtd);
    for (RelationType r : kRelationTypes) g.edges[r];  // ensure all keys exist

    // node features, one draw stream in fixed node-type order
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (NodeType t : kNodeTypes) {
        Matrix f(g.nodes[t].size(), config.feature_dim);
        for (double& x : f.data()) x = unif(rng);
        g.features[t] = std::move(f);
    }
    return g;
}

std::vector<SchemaViolationEntry> validate_schema(const HeterogeneousUrbanGraph& g) {
    std::vector<SchemaViolationEntry> out;
    std::map<RelationType, std::set<Edge>> sets;
    for (const auto& [r, es] : g.edges) sets[r] = std::set<Edge>(es.begin(), es.end());

    for (const auto& [r, es] : g.edges) {
        const int src_n = g.count(source_type(r));
        const int dst_n = g.count(target_type(r));
        const auto& rev = sets[reverse_of(r)];
        for (const auto& e : es) {
            if (e.first < 0 || e.first >= src_n || e.second < 0 || e.second >= dst_n) {
                out.push_back({SchemaViolationEntry::Rule::TypeMismatch, r, e});
                continue;
            }
            if (!rev.count({e.second, e.first}))
                out.push_back({SchemaViolationEntry::Rule::MissingReverse, r, e});
        }
    }
    for (const auto& [t, f] : g.features) {
        if (f.rows() != static_cast<std::size_t>(g.count(t)))
            out.push_back({SchemaViolationEntry::Rule::MissingFeatures, RelationType::AdjacentTo,
                           {static_cast<int>(f.rows()), g.count(t)}});
    }
    return out;
}

}  // namespace hugat
