#pragma once

#include <string>
#include <vector>

#include "hugat/hug.hpp"

namespace hugat {

struct MetaPath {
    std::string name;
    std::vector<NodeType> node_sequence;      // starts and ends at Region
    std::vector<RelationType> relation_sequence;  // length = |nodes| - 1
};

struct MetaPathAdjacency {
    MetaPath metapath;
    std::vector<std::set<int>> neighbor_sets;  // indexed by region id
    bool include_self = true;
};

// RR, RCR, RT_OR, RT_DR, RT_CR in this fixed order.
const std::vector<MetaPath>& builtin_metapaths();

MetaPathAdjacency compose_adjacency(const HeterogeneousUrbanGraph& g, const MetaPath& mp,
                                    bool include_self = true);

std::vector<MetaPathAdjacency> all_builtin_adjacencies(const HeterogeneousUrbanGraph& g);

// Dense {0,1} mask of the neighbor structure, rows = regions.
Matrix adjacency_mask(const MetaPathAdjacency& adj, int region_count);

}  // namespace hugat
