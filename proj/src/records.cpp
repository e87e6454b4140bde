#include "geodemo/records.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "geodemo/util.hpp"

namespace geodemo::ingest {

using nlohmann::json;

BoundingBox BoundingBox::parse(std::string_view spec) {
    const auto parts = util::split(spec, ',');
    if (parts.size() != 4) throw config_error("bbox must be W,E,S,N");
    double v[4];
    for (int i = 0; i < 4; ++i) {
        try {
            v[i] = std::stod(parts[i]);
        } catch (const std::exception&) {
            throw config_error("bbox component is not a number: " + parts[i]);
        }
    }
    BoundingBox box{v[0], v[1], v[2], v[3]};
    if (box.west > box.east && box.west > 0 && box.east > 0) {
        // degrees-west notation, as in "125.0011,66.9326" for the US box
        box.west = -box.west;
        box.east = -box.east;
    }
    box.validate();
    return box;
}

void BoundingBox::validate() const {
    if (!(west < east)) throw config_error("bbox: west must be < east");
    if (!(south < north)) throw config_error("bbox: south must be < north");
}

bool BoundingBox::contains(double lat, double lon) const {
    return lon >= west && lon <= east && lat >= south && lat <= north;
}

namespace {

std::uint64_t parse_user_id(const json& v, std::size_t line_number) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto signed_id = v.get<std::int64_t>();
        if (signed_id < 0)
            throw record_parse_error("user_id must be non-negative", line_number);
        return static_cast<std::uint64_t>(signed_id);
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) {
            try {
                return std::stoull(s);
            } catch (const std::exception&) {
                // fall through to hashing oversize digit strings
            }
        }
        return util::fnv1a64(s);
    }
    throw record_parse_error("user_id must be an integer or string", line_number);
}

bool first_token_is_rt(std::string_view text) {
    std::size_t start = 0;
    while (start < text.size() && (text[start] == ' ' || text[start] == '\t')) ++start;
    if (start + 2 > text.size()) return false;
    if (text[start] != 'R' || text[start + 1] != 'T') return false;
    return start + 2 == text.size() || text[start + 2] == ' ' || text[start + 2] == '\t';
}

bool text_has_url(std::string_view text) {
    return text.find("http://") != std::string_view::npos ||
           text.find("https://") != std::string_view::npos;
}

}  // namespace

RawRecord parse_record(std::string_view line, std::size_t line_number) {
    if (!util::valid_utf8(line))
        throw record_parse_error("record line is not valid UTF-8", line_number,
                                 record_parse_error::Kind::invalid_utf8);
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw record_parse_error(std::string("bad record json: ") + e.what(), line_number);
    }
    if (!obj.is_object()) throw record_parse_error("record line is not an object", line_number);

    RawRecord r;
    try {
        if (!obj.contains("lat") || !obj.contains("lon"))
            throw record_parse_error("missing lat/lon", line_number);
        r.latitude = obj.at("lat").get<double>();
        r.longitude = obj.at("lon").get<double>();
        if (!obj.contains("user_id")) throw record_parse_error("missing user_id", line_number);
        r.user_id = parse_user_id(obj.at("user_id"), line_number);
        if (!obj.contains("text")) throw record_parse_error("missing text", line_number);
        if (!obj.at("text").is_string())
            throw record_parse_error("text must be a string", line_number);
        r.text = obj.at("text").get<std::string>();
        r.followers_count = obj.value("followers_count", 0u);
        r.friends_count = obj.value("friends_count", 0u);
        if (obj.contains("geoid") && obj.at("geoid").is_string())
            r.geoid = obj.at("geoid").get<std::string>();
    } catch (const record_parse_error&) {
        throw;
    } catch (const json::exception& e) {
        throw record_parse_error(std::string("bad record field: ") + e.what(), line_number);
    }

    if (!(r.latitude >= -90.0 && r.latitude <= 90.0))
        throw record_parse_error("latitude out of range", line_number);
    if (!(r.longitude >= -180.0 && r.longitude <= 180.0))
        throw record_parse_error("longitude out of range", line_number);
    if (!util::valid_utf8(r.text))
        throw record_parse_error("text is not valid UTF-8", line_number,
                                 record_parse_error::Kind::invalid_utf8);

    // retweet marker field, or a leading RT token in the text itself
    bool marker = false;
    if (obj.contains("retweeted")) {
        const json& rt = obj.at("retweeted");
        marker = rt.is_boolean() ? rt.get<bool>() : !rt.is_null();
    }
    r.is_retweet = marker || first_token_is_rt(r.text);

    if (obj.contains("urls")) {
        const json& urls = obj.at("urls");
        r.has_url = urls.is_array() ? !urls.empty() : urls.is_boolean() ? urls.get<bool>() : true;
    } else if (obj.contains("has_url")) {
        r.has_url = obj.at("has_url").is_boolean() && obj.at("has_url").get<bool>();
    } else {
        r.has_url = text_has_url(r.text);
    }
    return r;
}

std::string serialize_record(const RawRecord& r) {
    json obj;
    obj["lat"] = r.latitude;
    obj["lon"] = r.longitude;
    obj["user_id"] = r.user_id;
    obj["text"] = r.text;
    obj["followers_count"] = r.followers_count;
    obj["friends_count"] = r.friends_count;
    obj["retweeted"] = r.is_retweet;
    obj["has_url"] = r.has_url;
    if (!r.geoid.empty()) obj["geoid"] = r.geoid;
    return obj.dump();
}

bool passes_filters(const RawRecord& r, const BoundingBox& bbox) {
    return r.followers_count <= 1000 && r.friends_count <= 1000 && !r.has_url && !r.is_retweet &&
           bbox.contains(r.latitude, r.longitude);
}

std::string IngestSummary::to_json() const {
    json obj;
    obj["lines_read"] = lines_read;
    obj["kept"] = kept;
    obj["skipped_parse"] = skipped_parse;
    obj["skipped_invalid_utf8"] = skipped_invalid_utf8;
    obj["skipped_filter"] = skipped_filter;
    obj["rejected_followers"] = rejected_followers;
    obj["rejected_friends"] = rejected_friends;
    obj["rejected_url"] = rejected_url;
    obj["rejected_retweet"] = rejected_retweet;
    obj["rejected_bbox"] = rejected_bbox;
    return obj.dump(2);
}

IngestSummary filter_stream(std::istream& in, std::ostream& out, const BoundingBox& bbox) {
    IngestSummary summary;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (util::trim(line).empty()) continue;
        ++summary.lines_read;
        RawRecord r;
        try {
            r = parse_record(line, lineno);
        } catch (const record_parse_error& e) {
            if (e.kind() == record_parse_error::Kind::invalid_utf8)
                ++summary.skipped_invalid_utf8;
            else
                ++summary.skipped_parse;
            continue;
        }
        if (!passes_filters(r, bbox)) {
            ++summary.skipped_filter;
            if (r.followers_count > 1000) ++summary.rejected_followers;
            if (r.friends_count > 1000) ++summary.rejected_friends;
            if (r.has_url) ++summary.rejected_url;
            if (r.is_retweet) ++summary.rejected_retweet;
            if (!bbox.contains(r.latitude, r.longitude)) ++summary.rejected_bbox;
            continue;
        }
        ++summary.kept;
        out << line << '\n';
    }
    return summary;
}

}  // namespace geodemo::ingest
