#include "hugat/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hugat/csv.hpp"

namespace hugat {

namespace {

int require_column(const csv::Table& t, const std::string& name, const std::string& file) {
    int c = t.column(name);
    if (c < 0) throw SchemaViolation(file + " missing column '" + name + "'", 1);
    return c;
}

}  // namespace

IngestResult ingest(const DatasetPaths& paths, const TimeSlotSpec& slots) {
    IngestResult out;

    {
        auto t = csv::read_file(paths.regions);
        int cid = require_column(t, "id", "regions");
        int cname = require_column(t, "name", "regions");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            out.hug.regions.push_back(
                {static_cast<int>(csv::parse_long(t.rows[r][cid], line)), t.rows[r][cname]});
        }
        if (out.hug.regions.empty()) throw SchemaViolation("regions table is empty", 1);
        // ids must be a contiguous 0..N-1 index
        std::set<int> ids;
        for (const auto& r : out.hug.regions) ids.insert(r.id);
        const int n = static_cast<int>(out.hug.regions.size());
        if (static_cast<int>(ids.size()) != n || *ids.begin() != 0 || *ids.rbegin() != n - 1)
            throw SchemaViolation("region ids are not a contiguous 0..N-1 index", 1);
        out.row_counts["regions"] = t.rows.size();
    }
    const int n_regions = static_cast<int>(out.hug.regions.size());
    auto check_region = [n_regions](long id, long line) {
        if (id < 0 || id >= n_regions)
            throw SchemaViolation("unknown region id " + std::to_string(id), line);
        return static_cast<int>(id);
    };

    {
        auto t = csv::read_file(paths.adjacency);
        int cs = require_column(t, "src", "adjacency");
        int cd = require_column(t, "dst", "adjacency");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            out.hug.adjacency.push_back({check_region(csv::parse_long(t.rows[r][cs], line), line),
                                         check_region(csv::parse_long(t.rows[r][cd], line), line)});
        }
        out.row_counts["adjacency"] = t.rows.size();
    }

    std::set<std::string> venues;
    {
        auto t = csv::read_file(paths.pois);
        int cv = require_column(t, "venue_id", "pois");
        int cr = require_column(t, "region_id", "pois");
        int cc = require_column(t, "category", "pois");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            out.hug.pois.push_back({t.rows[r][cv],
                                    check_region(csv::parse_long(t.rows[r][cr], line), line),
                                    t.rows[r][cc]});
            venues.insert(t.rows[r][cv]);
        }
        out.row_counts["pois"] = t.rows.size();
    }

    {
        auto t = csv::read_file(paths.checkins);
        int cu = require_column(t, "user", "checkins");
        int cv = require_column(t, "venue_id", "checkins");
        int ct = require_column(t, "timestamp", "checkins");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            if (!venues.count(t.rows[r][cv]))
                throw SchemaViolation("unknown venue '" + t.rows[r][cv] + "'", line);
            try {
                slots.slot_of(t.rows[r][ct]);
            } catch (const MalformedTimestamp& e) {
                throw SchemaViolation(e.what(), line);
            }
            out.hug.checkins.push_back({t.rows[r][cu], t.rows[r][cv], t.rows[r][ct]});
        }
        out.row_counts["checkins"] = t.rows.size();
    }

    {
        auto t = csv::read_file(paths.trips);
        int cp = require_column(t, "pickup_ts", "trips");
        int cd = require_column(t, "dropoff_ts", "trips");
        int co = require_column(t, "origin_region", "trips");
        int ce = require_column(t, "dest_region", "trips");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            try {
                slots.slot_of(t.rows[r][cp]);
                slots.slot_of(t.rows[r][cd]);
            } catch (const MalformedTimestamp& e) {
                throw SchemaViolation(e.what(), line);
            }
            out.hug.trips.push_back({t.rows[r][cp], t.rows[r][cd],
                                     check_region(csv::parse_long(t.rows[r][co], line), line),
                                     check_region(csv::parse_long(t.rows[r][ce], line), line)});
        }
        out.row_counts["trips"] = t.rows.size();
    }

    {
        auto t = csv::read_file(paths.landuse);
        int cr = require_column(t, "region_id", "landuse");
        int cl = require_column(t, "landuse_type", "landuse");
        int ca = require_column(t, "area", "landuse");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            double area = csv::parse_double(t.rows[r][ca], line);
            if (area < 0) throw SchemaViolation("negative area", line);
            out.landuse.push_back({check_region(csv::parse_long(t.rows[r][cr], line), line),
                                   t.rows[r][cl], area});
        }
        out.row_counts["landuse"] = t.rows.size();
    }

    if (!paths.labels.empty()) {
        auto t = csv::read_file(paths.labels);
        int cr = require_column(t, "region_id", "labels");
        int cd = require_column(t, "district", "labels");
        out.labels.assign(n_regions, -1);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            int id = check_region(csv::parse_long(t.rows[r][cr], line), line);
            out.labels[id] = static_cast<int>(csv::parse_long(t.rows[r][cd], line));
        }
        for (int i = 0; i < n_regions; ++i)
            if (out.labels[i] < 0) throw SchemaViolation("region " + std::to_string(i) + " has no label", 1);
        out.row_counts["labels"] = t.rows.size();
    }

    if (!paths.distances.empty()) {
        auto t = csv::read_file(paths.distances);
        int co = require_column(t, "origin", "distances");
        int cd = require_column(t, "dest", "distances");
        int cv = require_column(t, "distance", "distances");
        out.distances = Matrix(n_regions, n_regions, std::nan(""));
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            int i = check_region(csv::parse_long(t.rows[r][co], line), line);
            int j = check_region(csv::parse_long(t.rows[r][cd], line), line);
            out.distances(i, j) = csv::parse_double(t.rows[r][cv], line);
        }
        out.row_counts["distances"] = t.rows.size();
    }

    if (!paths.flows.empty()) {
        auto t = csv::read_file(paths.flows);
        int co = require_column(t, "origin", "flows");
        int cd = require_column(t, "dest", "flows");
        int cc = require_column(t, "count", "flows");
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            long line = t.line_numbers[r];
            out.flows.push_back({check_region(csv::parse_long(t.rows[r][co], line), line),
                                 check_region(csv::parse_long(t.rows[r][cd], line), line),
                                 csv::parse_double(t.rows[r][cc], line)});
        }
        out.row_counts["flows"] = t.rows.size();
    }

    if (!paths.targets.empty()) {
        auto t = csv::read_file(paths.targets);
        int cr = require_column(t, "region_id", "targets");
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            if (static_cast<int>(c) == cr) continue;
            auto& col = out.prediction_targets[t.header[c]];
            col.assign(n_regions, 0.0);
            for (std::size_t r = 0; r < t.rows.size(); ++r) {
                long line = t.line_numbers[r];
                int id = check_region(csv::parse_long(t.rows[r][cr], line), line);
                col[id] = csv::parse_double(t.rows[r][c], line);
            }
        }
        out.row_counts["targets"] = t.rows.size();
    }

    return out;
}

std::string hug_stats_table(const HeterogeneousUrbanGraph& g) {
    std::ostringstream out;
    out << "Relations (A-B)  #A    #B    #A-B\n";
    auto row = [&](const std::string& name, RelationType r) {
        auto it = g.edges.find(r);
        std::size_t e = it == g.edges.end() ? 0 : it->second.size();
        out << name << "  " << g.count(source_type(r)) << "  " << g.count(target_type(r)) << "  "
            << e << "\n";
    };
    row("R-T_C ", RelationType::AttractsCheckinAt);
    row("R-T_O ", RelationType::AttractsPickupAt);
    row("R-T_D ", RelationType::AttractsDropoffAt);
    row("R-R   ", RelationType::AdjacentTo);
    row("R-C   ", RelationType::Contains);
    return out.str();
}

Matrix od_counts(const HugInputs& in) {
    const std::size_t n = in.regions.size();
    Matrix f(n, n, 0.0);
    for (const auto& t : in.trips) f(t.origin_region, t.dest_region) += 1.0;
    return f;
}

Matrix checkin_category_counts(const HugInputs& in, std::vector<std::string>* categories) {
    std::set<std::string> cat_set;
    std::map<std::string, std::pair<int, std::string>> venue_info;  // venue -> (region, category)
    for (const auto& p : in.pois) {
        cat_set.insert(p.category);
        venue_info[p.venue_id] = {p.region_id, p.category};
    }
    std::vector<std::string> cats(cat_set.begin(), cat_set.end());
    Matrix counts(in.regions.size(), std::max<std::size_t>(cats.size(), 1), 0.0);
    for (const auto& c : in.checkins) {
        auto it = venue_info.find(c.venue_id);
        if (it == venue_info.end()) throw UnknownRegion("venue " + c.venue_id);
        const auto& [region, cat] = it->second;
        const std::size_t k =
            std::lower_bound(cats.begin(), cats.end(), cat) - cats.begin();
        counts(region, k) += 1.0;
    }
    if (categories) *categories = cats;
    return counts;
}

Matrix landuse_area_counts(const std::vector<LanduseRow>& rows, int region_count,
                           std::vector<std::string>* types) {
    std::set<std::string> type_set;
    for (const auto& r : rows) type_set.insert(r.landuse_type);
    std::vector<std::string> type_list(type_set.begin(), type_set.end());
    Matrix counts(region_count, std::max<std::size_t>(type_list.size(), 1), 0.0);
    for (const auto& r : rows) {
        const std::size_t k =
            std::lower_bound(type_list.begin(), type_list.end(), r.landuse_type) -
            type_list.begin();
        counts(r.region_id, k) += r.area;
    }
    if (types) *types = type_list;
    return counts;
}

}  // namespace hugat
