#include "geodemo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "geodemo/util.hpp"

namespace geodemo::geo {

using nlohmann::json;

Resolution resolution_from_string(std::string_view s) {
    if (s == "block") return Resolution::block;
    if (s == "blockgroup") return Resolution::blockgroup;
    if (s == "tract") return Resolution::tract;
    if (s == "county") return Resolution::county;
    throw config_error("unknown resolution: " + std::string(s));
}

std::string_view resolution_to_string(Resolution r) {
    switch (r) {
        case Resolution::block: return "block";
        case Resolution::blockgroup: return "blockgroup";
        case Resolution::tract: return "tract";
        case Resolution::county: return "county";
    }
    return "?";
}

std::size_t geoid_length(Resolution r) {
    switch (r) {
        case Resolution::block: return 15;
        case Resolution::blockgroup: return 12;
        case Resolution::tract: return 11;
        case Resolution::county: return 5;
    }
    return 0;
}

std::optional<Resolution> resolution_from_geoid_length(std::size_t len) {
    switch (len) {
        case 15: return Resolution::block;
        case 12: return Resolution::blockgroup;
        case 11: return Resolution::tract;
        case 5: return Resolution::county;
        default: return std::nullopt;
    }
}

std::string rollup_geoid(std::string_view geoid, Resolution target) {
    if (!resolution_from_geoid_length(geoid.size()))
        throw data_error("geoid has no known resolution: " + std::string(geoid));
    if (geoid.find_first_not_of("0123456789") != std::string_view::npos)
        throw data_error("geoid must be digits: " + std::string(geoid));
    const std::size_t want = geoid_length(target);
    if (want > geoid.size())
        throw data_error("cannot refine geoid " + std::string(geoid) + " to " +
                         std::string(resolution_to_string(target)));
    return std::string(geoid.substr(0, want));
}

void Box::expand(const Box& o) {
    min_lon = std::min(min_lon, o.min_lon);
    min_lat = std::min(min_lat, o.min_lat);
    max_lon = std::max(max_lon, o.max_lon);
    max_lat = std::max(max_lat, o.max_lat);
}

Box Box::of(const PolygonSet& polys) {
    Box b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
          std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
    for (const Polygon& poly : polys) {
        for (const Point& p : poly.outer) {
            b.min_lon = std::min(b.min_lon, p.lon);
            b.min_lat = std::min(b.min_lat, p.lat);
            b.max_lon = std::max(b.max_lon, p.lon);
            b.max_lat = std::max(b.max_lat, p.lat);
        }
    }
    return b;
}

bool point_on_ring_edge(const Point& p, const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const Point& a = ring[i];
        const Point& b = ring[i + 1];
        const double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
        if (cross != 0.0) continue;
        if (p.lon < std::min(a.lon, b.lon) || p.lon > std::max(a.lon, b.lon)) continue;
        if (p.lat < std::min(a.lat, b.lat) || p.lat > std::max(a.lat, b.lat)) continue;
        return true;
    }
    return false;
}

namespace {

// half-open crossing rule; vertices on the ray are counted once
bool ray_crosses(const Point& p, const Point& a, const Point& b) {
    if ((a.lat > p.lat) == (b.lat > p.lat)) return false;
    const double x_int = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
    return p.lon < x_int;
}

bool inside_even_odd(const Point& p, const Polygon& poly) {
    bool inside = false;
    for (std::size_t i = 0; i + 1 < poly.outer.size(); ++i) {
        if (ray_crosses(p, poly.outer[i], poly.outer[i + 1])) inside = !inside;
    }
    for (const Ring& hole : poly.holes) {
        for (std::size_t i = 0; i + 1 < hole.size(); ++i) {
            if (ray_crosses(p, hole[i], hole[i + 1])) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

bool point_in_polygon(const Point& p, const PolygonSet& polys) {
    for (const Polygon& poly : polys) {
        if (point_on_ring_edge(p, poly.outer)) return true;
        for (const Ring& hole : poly.holes) {
            if (point_on_ring_edge(p, hole)) return true;
        }
        if (inside_even_odd(p, poly)) return true;
    }
    return false;
}

SpatialIndex SpatialIndex::build(std::vector<GeoUnit> units) {
    SpatialIndex idx;
    idx.units_ = std::move(units);
    const std::size_t n = idx.units_.size();
    idx.unit_boxes_.reserve(n);
    for (const GeoUnit& u : idx.units_) idx.unit_boxes_.push_back(Box::of(u.boundary));
    if (n == 0) return idx;

    constexpr std::size_t kLeafSize = 8;
    constexpr std::size_t kFanout = 8;

    // STR packing: sort by center longitude, slice, sort slices by latitude
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto center_lon = [&](std::uint32_t i) {
        return idx.unit_boxes_[i].min_lon + idx.unit_boxes_[i].max_lon;
    };
    const auto center_lat = [&](std::uint32_t i) {
        return idx.unit_boxes_[i].min_lat + idx.unit_boxes_[i].max_lat;
    };
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return center_lon(a) != center_lon(b) ? center_lon(a) < center_lon(b) : a < b;
    });
    const std::size_t leaf_count = (n + kLeafSize - 1) / kLeafSize;
    const std::size_t slice_count =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(leaf_count))));
    const std::size_t per_slice = (n + slice_count - 1) / slice_count;
    for (std::size_t s = 0; s * per_slice < n; ++s) {
        const auto begin = order.begin() + static_cast<std::ptrdiff_t>(s * per_slice);
        const auto end = order.begin() + static_cast<std::ptrdiff_t>(std::min(n, (s + 1) * per_slice));
        std::sort(begin, end, [&](std::uint32_t a, std::uint32_t b) {
            return center_lat(a) != center_lat(b) ? center_lat(a) < center_lat(b) : a < b;
        });
    }
    idx.entries_ = order;

    // build leaves, then pack upward until a single root remains
    std::vector<std::uint32_t> level;
    for (std::size_t first = 0; first < n; first += kLeafSize) {
        Node node;
        node.leaf = true;
        node.first = static_cast<std::uint32_t>(first);
        node.count = static_cast<std::uint16_t>(std::min(kLeafSize, n - first));
        node.box = idx.unit_boxes_[idx.entries_[first]];
        for (std::uint32_t k = 1; k < node.count; ++k)
            node.box.expand(idx.unit_boxes_[idx.entries_[first + k]]);
        level.push_back(static_cast<std::uint32_t>(idx.nodes_.size()));
        idx.nodes_.push_back(node);
    }
    while (level.size() > 1) {
        std::vector<std::uint32_t> next;
        for (std::size_t first = 0; first < level.size(); first += kFanout) {
            Node node;
            node.leaf = false;
            node.first = level[first];
            node.count = static_cast<std::uint16_t>(std::min(kFanout, level.size() - first));
            node.box = idx.nodes_[level[first]].box;
            for (std::uint32_t k = 1; k < node.count; ++k)
                node.box.expand(idx.nodes_[level[first + k]].box);
            next.push_back(static_cast<std::uint32_t>(idx.nodes_.size()));
            idx.nodes_.push_back(node);
        }
        level = std::move(next);
    }
    idx.root_ = level[0];
    return idx;
}

std::vector<std::uint32_t> SpatialIndex::candidates(const Point& p) const {
    std::vector<std::uint32_t> out;
    if (nodes_.empty()) return out;
    std::vector<std::uint32_t> stack{root_};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (!node.box.contains(p)) continue;
        if (node.leaf) {
            for (std::uint32_t k = 0; k < node.count; ++k) {
                const std::uint32_t unit = entries_[node.first + k];
                if (unit_boxes_[unit].contains(p)) out.push_back(unit);
            }
        } else {
            for (std::uint32_t k = 0; k < node.count; ++k) stack.push_back(node.first + k);
        }
    }
    return out;
}

std::optional<std::string> SpatialIndex::assign(const Point& p) const {
    const std::string* best = nullptr;
    for (const std::uint32_t unit : candidates(p)) {
        if (best && units_[unit].geoid >= *best) continue;
        if (point_in_polygon(p, units_[unit].boundary)) best = &units_[unit].geoid;
    }
    if (!best) return std::nullopt;
    return *best;
}

namespace {

Ring parse_ring(const json& coords, const std::string& geoid) {
    Ring ring;
    if (!coords.is_array() || coords.size() < 4)
        throw data_error("ring must have at least 4 vertices (unit " + geoid + ")");
    ring.reserve(coords.size());
    for (const json& pt : coords) {
        if (!pt.is_array() || pt.size() < 2)
            throw data_error("ring vertex must be [lon, lat] (unit " + geoid + ")");
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    if (ring.front().lon != ring.back().lon || ring.front().lat != ring.back().lat)
        throw data_error("unclosed ring in unit " + geoid);
    return ring;
}

Polygon parse_polygon(const json& rings, const std::string& geoid) {
    if (!rings.is_array() || rings.empty())
        throw data_error("polygon without rings in unit " + geoid);
    Polygon poly;
    poly.outer = parse_ring(rings[0], geoid);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(parse_ring(rings[i], geoid));
    return poly;
}

}  // namespace

std::vector<GeoUnit> load_boundaries(const std::string& path) {
    json doc;
    try {
        doc = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw data_error("bad boundary file " + path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("features") || !doc.at("features").is_array())
        throw data_error("boundary file has no feature list: " + path);

    std::vector<GeoUnit> units;
    std::set<std::string> seen;
    for (const json& feature : doc.at("features")) {
        if (!feature.contains("properties") || !feature.at("properties").contains("geoid"))
            throw data_error("feature missing geoid property in " + path);
        GeoUnit unit;
        unit.geoid = feature.at("properties").at("geoid").get<std::string>();
        if (!seen.insert(unit.geoid).second)
            throw data_error("duplicate geoid " + unit.geoid + " in " + path);
        const auto res = resolution_from_geoid_length(unit.geoid.size());
        if (!res) throw data_error("geoid " + unit.geoid + " has no known resolution");
        unit.resolution = *res;
        if (!feature.contains("geometry"))
            throw data_error("feature " + unit.geoid + " missing geometry");
        const json& geom = feature.at("geometry");
        const std::string type = geom.value("type", "");
        try {
            if (type == "Polygon") {
                unit.boundary.push_back(parse_polygon(geom.at("coordinates"), unit.geoid));
            } else if (type == "MultiPolygon") {
                for (const json& rings : geom.at("coordinates"))
                    unit.boundary.push_back(parse_polygon(rings, unit.geoid));
            } else {
                throw data_error("unsupported geometry type '" + type + "' for " + unit.geoid);
            }
        } catch (const json::exception& e) {
            throw data_error("bad geometry for " + unit.geoid + ": " + e.what());
        }
        units.push_back(std::move(unit));
    }
    return units;
}

namespace {

const std::vector<std::string> kGenderCategories{"male", "female"};
const std::vector<std::string> kRaceCategories{"white", "black", "asian", "hispanic", "other"};

}  // namespace

const TruthTable::UnitTruth& TruthTable::require(const std::string& geoid) const {
    const auto it = units.find(geoid);
    if (it == units.end()) throw data_error("no ground truth for geoid " + geoid);
    return it->second;
}

TruthTable load_truth_csv(const std::string& path) {
    TruthTable table;
    // raw rows first; category order is resolved once all names are known
    std::vector<std::tuple<std::string, std::string, std::string, std::int64_t>> rows;
    util::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty() || line[0] == '#') return;
        const auto fields = util::split(line, ',');
        if (lineno == 1 && !fields.empty() && fields[0] == "geoid") return;  // header
        if (fields.size() != 4)
            throw data_error("truth csv line " + std::to_string(lineno) + ": expected 4 fields");
        std::int64_t count = 0;
        try {
            count = std::stoll(fields[3]);
        } catch (const std::exception&) {
            throw data_error("truth csv line " + std::to_string(lineno) + ": bad count");
        }
        if (count < 0)
            throw data_error("truth csv line " + std::to_string(lineno) + ": negative count");
        rows.emplace_back(fields[0], fields[1], fields[2], count);
    });

    for (const auto& [geoid, variable, category, count] : rows) {
        if (variable == "population") {
            table.units[geoid].population = static_cast<std::uint64_t>(count);
            continue;
        }
        auto& cats = table.categories[variable];
        if (cats.empty()) {
            if (variable == "gender")
                cats = kGenderCategories;
            else if (variable == "race")
                cats = kRaceCategories;
        }
        if (std::find(cats.begin(), cats.end(), category) == cats.end()) {
            if (variable == "gender" || variable == "race")
                throw data_error("unknown " + variable + " category: " + category);
            cats.push_back(category);
        }
    }
    for (const auto& [geoid, variable, category, count] : rows) {
        if (variable == "population") continue;
        const auto& cats = table.categories.at(variable);
        const auto pos = std::find(cats.begin(), cats.end(), category) - cats.begin();
        auto& counts = table.units[geoid].counts[variable];
        counts.resize(cats.size(), -1);
        if (counts[static_cast<std::size_t>(pos)] != -1)
            throw data_error("duplicate truth row for " + geoid + "/" + variable + "/" + category);
        counts[static_cast<std::size_t>(pos)] = count;
    }
    for (auto& [geoid, unit] : table.units) {
        for (auto& [variable, counts] : unit.counts) {
            std::int64_t total = 0;
            for (const std::int64_t c : counts) {
                if (c < 0)
                    throw data_error("missing category count for " + geoid + "/" + variable);
                total += c;
            }
            if (unit.population && total > static_cast<std::int64_t>(*unit.population))
                throw data_error("category counts exceed population for " + geoid + "/" + variable);
        }
    }
    return table;
}

TruthTable aggregate_truth(const TruthTable& truth, Resolution target) {
    TruthTable out;
    out.categories = truth.categories;
    std::map<std::string, bool> population_complete;
    for (const auto& [geoid, unit] : truth.units) {
        const std::string prefix = rollup_geoid(geoid, target);
        TruthTable::UnitTruth& agg = out.units[prefix];
        for (const auto& [variable, counts] : unit.counts) {
            auto& total = agg.counts[variable];
            if (total.empty()) total.assign(counts.size(), 0);
            if (total.size() != counts.size())
                throw data_error("inconsistent category counts under " + prefix);
            for (std::size_t j = 0; j < counts.size(); ++j) total[j] += counts[j];
        }
        auto [it, inserted] = population_complete.emplace(prefix, unit.population.has_value());
        if (!inserted) it->second = it->second && unit.population.has_value();
        if (unit.population)
            agg.population = agg.population.value_or(0) + *unit.population;
    }
    for (auto& [prefix, unit] : out.units) {
        if (!population_complete.at(prefix)) unit.population.reset();
    }
    return out;
}

void attach_truth(std::vector<GeoUnit>& units, const TruthTable& truth) {
    for (GeoUnit& unit : units) {
        const auto it = truth.units.find(unit.geoid);
        if (it == truth.units.end()) continue;
        unit.demographics = it->second.counts;
        unit.population = it->second.population;
    }
}

}  // namespace geodemo::geo
