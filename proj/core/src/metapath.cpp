#include "hugat/metapath.hpp"

#include <map>

namespace hugat {

const std::vector<MetaPath>& builtin_metapaths() {
    static const std::vector<MetaPath> paths = {
        {"RR",
         {NodeType::Region, NodeType::Region},
         {RelationType::AdjacentTo}},
        {"RCR",
         {NodeType::Region, NodeType::PoiCategory, NodeType::Region},
         {RelationType::Contains, RelationType::LocatedIn}},
        {"RT_OR",
         {NodeType::Region, NodeType::TripOriginTime, NodeType::Region},
         {RelationType::AttractsPickupAt, RelationType::GeneratesPickupIn}},
        {"RT_DR",
         {NodeType::Region, NodeType::TripDestTime, NodeType::Region},
         {RelationType::AttractsDropoffAt, RelationType::GeneratesDropoffIn}},
        {"RT_CR",
         {NodeType::Region, NodeType::CheckinTime, NodeType::Region},
         {RelationType::AttractsCheckinAt, RelationType::GeneratesCheckinIn}},
    };
    return paths;
}

MetaPathAdjacency compose_adjacency(const HeterogeneousUrbanGraph& g, const MetaPath& mp,
                                    bool include_self) {
    if (mp.node_sequence.size() < 2 ||
        mp.relation_sequence.size() + 1 != mp.node_sequence.size())
        throw SchemaMismatch("meta-path " + mp.name + ": malformed sequence");
    if (mp.node_sequence.front() != NodeType::Region ||
        mp.node_sequence.back() != NodeType::Region)
        throw SchemaMismatch("meta-path " + mp.name + ": must start and end at Region");
    for (std::size_t s = 0; s < mp.relation_sequence.size(); ++s) {
        RelationType r = mp.relation_sequence[s];
        if (source_type(r) != mp.node_sequence[s] || target_type(r) != mp.node_sequence[s + 1])
            throw SchemaMismatch("meta-path " + mp.name + ": relation " + to_string(r) +
                                 " does not fit step " + std::to_string(s));
    }

    // per-relation adjacency lists
    std::map<RelationType, std::vector<std::vector<int>>> out_lists;
    for (RelationType r : mp.relation_sequence) {
        if (out_lists.count(r)) continue;
        std::vector<std::vector<int>> lists(g.count(source_type(r)));
        auto it = g.edges.find(r);
        if (it != g.edges.end()) {
            for (const auto& [s, t] : it->second) {
                if (s < 0 || s >= static_cast<int>(lists.size()))
                    throw SchemaMismatch("edge endpoint out of range in " + to_string(r));
                lists[s].push_back(t);
            }
        }
        out_lists[r] = std::move(lists);
    }

    const int n = g.region_count();
    MetaPathAdjacency adj{mp, std::vector<std::set<int>>(n), include_self};
    for (int i = 0; i < n; ++i) {
        std::set<int> frontier{i};
        for (RelationType r : mp.relation_sequence) {
            std::set<int> next;
            const auto& lists = out_lists[r];
            for (int v : frontier) {
                if (v >= 0 && v < static_cast<int>(lists.size()))
                    next.insert(lists[v].begin(), lists[v].end());
            }
            frontier = std::move(next);
        }
        adj.neighbor_sets[i] = std::move(frontier);
        if (include_self) adj.neighbor_sets[i].insert(i);
    }
    return adj;
}

std::vector<MetaPathAdjacency> all_builtin_adjacencies(const HeterogeneousUrbanGraph& g) {
    std::vector<MetaPathAdjacency> out;
    out.reserve(builtin_metapaths().size());
    for (const auto& mp : builtin_metapaths()) out.push_back(compose_adjacency(g, mp, true));
    return out;
}

Matrix adjacency_mask(const MetaPathAdjacency& adj, int region_count) {
    Matrix m(region_count, region_count, 0.0);
    for (std::size_t i = 0; i < adj.neighbor_sets.size(); ++i)
        for (int j : adj.neighbor_sets[i]) m(i, j) = 1.0;
    return m;
}

}  // namespace hugat
