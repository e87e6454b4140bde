#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geodemo/errors.hpp"

namespace geodemo::geo {

enum class Resolution { block, blockgroup, tract, county };

Resolution resolution_from_string(std::string_view s);
std::string_view resolution_to_string(Resolution r);

// census GEOID prefix lengths: county 5, tract 11, blockgroup 12, block 15
std::size_t geoid_length(Resolution r);
std::optional<Resolution> resolution_from_geoid_length(std::size_t len);

// Returns the prefix of `geoid` at the target resolution. The input must be
// a digit string at one of the known resolutions, at least as fine as target.
std::string rollup_geoid(std::string_view geoid, Resolution target);

struct Point {
    double lon = 0.0;
    double lat = 0.0;
};

// closed ring: front == back, at least 4 vertices
using Ring = std::vector<Point>;

struct Polygon {
    Ring outer;
    std::vector<Ring> holes;
};

using PolygonSet = std::vector<Polygon>;

struct Box {
    double min_lon = 0.0, min_lat = 0.0, max_lon = 0.0, max_lat = 0.0;
    bool contains(const Point& p) const {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
    void expand(const Box& o);
    static Box of(const PolygonSet& polys);
};

struct GeoUnit {
    std::string geoid;
    Resolution resolution = Resolution::block;
    PolygonSet boundary;
    std::map<std::string, std::vector<std::int64_t>> demographics;
    std::optional<std::uint64_t> population;
};

// Even-odd (ray casting) containment over all rings; points exactly on any
// edge count as inside.
bool point_on_ring_edge(const Point& p, const Ring& ring);
bool point_in_polygon(const Point& p, const PolygonSet& polys);

// STR-packed rectangle tree over polygon bounding boxes; immutable after build.
class SpatialIndex {
public:
    static SpatialIndex build(std::vector<GeoUnit> units);

    // GEOID of a containing unit; lexicographically smallest geoid wins ties.
    std::optional<std::string> assign(const Point& p) const;

    // indices of units whose bounding rectangle contains p (for tests)
    std::vector<std::uint32_t> candidates(const Point& p) const;

    const std::vector<GeoUnit>& units() const { return units_; }

private:
    struct Node {
        Box box;
        std::uint32_t first = 0;  // child node or leaf entry offset
        std::uint16_t count = 0;
        bool leaf = false;
    };

    std::vector<GeoUnit> units_;
    std::vector<Box> unit_boxes_;
    std::vector<std::uint32_t> entries_;  // unit indices, leaf-ordered
    std::vector<Node> nodes_;
    std::uint32_t root_ = 0;
};

// Boundary input: GeoJSON-style FeatureCollection, one feature per unit with
// a "geoid" property; Polygon and MultiPolygon geometries are accepted.
std::vector<GeoUnit> load_boundaries(const std::string& path);

// Demographics input: CSV `geoid,variable,category,count` with population
// rows `geoid,population,,count`.
struct TruthTable {
    struct UnitTruth {
        std::map<std::string, std::vector<std::int64_t>> counts;
        std::optional<std::uint64_t> population;
    };

    // per-variable category names; canonical order for gender/race,
    // first-appearance order otherwise
    std::map<std::string, std::vector<std::string>> categories;
    std::map<std::string, UnitTruth> units;

    const UnitTruth& require(const std::string& geoid) const;
};

TruthTable load_truth_csv(const std::string& path);

// Rolls ground truth up the GEOID hierarchy: counts and populations sum over
// the units sharing a prefix. A rolled unit carries a population only when
// every constituent does. Idempotent when the table is already at `target`.
TruthTable aggregate_truth(const TruthTable& truth, Resolution target);

void attach_truth(std::vector<GeoUnit>& units, const TruthTable& truth);

}  // namespace geodemo::geo
