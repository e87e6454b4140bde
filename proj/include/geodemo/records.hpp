#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "geodemo/errors.hpp"

namespace geodemo::ingest {

// One geotagged record. Input is line-delimited JSON with fields
//   lat, lon, user_id, text, followers_count, friends_count,
//   retweeted (optional), urls (optional list) / has_url (optional bool),
//   geoid (optional, added by the assign stage).
struct RawRecord {
    double latitude = 0.0;
    double longitude = 0.0;
    std::uint64_t user_id = 0;
    std::string text;
    std::uint32_t followers_count = 0;
    std::uint32_t friends_count = 0;
    bool is_retweet = false;
    bool has_url = false;
    std::string geoid;  // empty until assigned

    bool operator==(const RawRecord&) const = default;
};

struct BoundingBox {
    double west = 0.0;
    double east = 0.0;
    double south = 0.0;
    double north = 0.0;

    // The paper's contiguous-US collection box.
    static BoundingBox contiguous_us() { return {-125.0011, -66.9326, 24.9493, 49.5904}; }

    // "W,E,S,N"; positive west/east pairs are read as west-hemisphere degrees.
    static BoundingBox parse(std::string_view spec);

    void validate() const;
    bool contains(double lat, double lon) const;  // boundary inclusive
};

class record_parse_error : public data_error {
public:
    enum class Kind { malformed, invalid_utf8 };

    record_parse_error(const std::string& what, std::size_t line, Kind kind = Kind::malformed)
        : data_error(what), line_(line), kind_(kind) {}
    std::size_t line() const { return line_; }
    Kind kind() const { return kind_; }

private:
    std::size_t line_;
    Kind kind_;
};

RawRecord parse_record(std::string_view line, std::size_t line_number = 0);
std::string serialize_record(const RawRecord& r);

bool passes_filters(const RawRecord& r, const BoundingBox& bbox);

struct IngestSummary {
    std::uint64_t lines_read = 0;
    std::uint64_t kept = 0;
    std::uint64_t skipped_parse = 0;
    std::uint64_t skipped_invalid_utf8 = 0;
    std::uint64_t skipped_filter = 0;
    std::uint64_t rejected_followers = 0;
    std::uint64_t rejected_friends = 0;
    std::uint64_t rejected_url = 0;
    std::uint64_t rejected_retweet = 0;
    std::uint64_t rejected_bbox = 0;

    std::string to_json() const;
};

// Streams records through the filters; malformed lines are counted and skipped.
IngestSummary filter_stream(std::istream& in, std::ostream& out, const BoundingBox& bbox);

}  // namespace geodemo::ingest
