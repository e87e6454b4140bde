#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "test_scratch.hpp"
#include <doctest.h>

#include <sstream>

#include "geodemo/records.hpp"
#include "geodemo/util.hpp"

using namespace geodemo;
using ingest::BoundingBox;
using ingest::RawRecord;

namespace {

RawRecord random_record(util::Rng& rng) {
    RawRecord r;
    r.latitude = rng.uniform(-90.0, 90.0);
    r.longitude = rng.uniform(-180.0, 180.0);
    r.user_id = rng.next_u64();
    r.text = "tok" + std::to_string(rng.below(1000)) + " #tag :)";
    r.followers_count = static_cast<std::uint32_t>(rng.below(2000));
    r.friends_count = static_cast<std::uint32_t>(rng.below(2000));
    r.is_retweet = rng.below(2) == 1;
    r.has_url = rng.below(2) == 1;
    if (rng.below(2) == 1) r.geoid = "420279901001234";
    return r;
}

}  // namespace

TEST_CASE("parse_record maps fields directly") {
    const auto r = ingest::parse_record(
        R"({"lat":40.0,"lon":-77.0,"user_id":12,"text":"hello"})");
    CHECK(r.latitude == 40.0);
    CHECK(r.longitude == -77.0);
    CHECK(r.user_id == 12);
    CHECK(r.text == "hello");
    CHECK(r.followers_count == 0);  // missing counts default to zero
    CHECK(r.friends_count == 0);
    CHECK_FALSE(r.is_retweet);
    CHECK_FALSE(r.has_url);
}

TEST_CASE("leading RT token marks a retweet") {
    const auto r = ingest::parse_record(
        R"({"lat":40.0,"lon":-77.0,"user_id":1,"text":"RT @x great"})");
    CHECK(r.is_retweet);
    const auto r2 = ingest::parse_record(
        R"({"lat":40.0,"lon":-77.0,"user_id":1,"text":"RTFM is rude"})");
    CHECK_FALSE(r2.is_retweet);  // RT must be a whole token
}

TEST_CASE("retweeted marker field") {
    const auto r = ingest::parse_record(
        R"({"lat":40.0,"lon":-77.0,"user_id":1,"text":"plain","retweeted":true})");
    CHECK(r.is_retweet);
    const auto r2 = ingest::parse_record(
        R"({"lat":40.0,"lon":-77.0,"user_id":1,"text":"plain","retweeted":false})");
    CHECK_FALSE(r2.is_retweet);
}

TEST_CASE("url detection: field, list, and text fallback") {
    const auto with_list = ingest::parse_record(
        R"({"lat":0,"lon":0,"user_id":1,"text":"x","urls":["http://a.example"]})");
    CHECK(with_list.has_url);
    const auto empty_list =
        ingest::parse_record(R"({"lat":0,"lon":0,"user_id":1,"text":"x","urls":[]})");
    CHECK_FALSE(empty_list.has_url);
    const auto fallback = ingest::parse_record(
        R"({"lat":0,"lon":0,"user_id":1,"text":"see https://x.example now"})");
    CHECK(fallback.has_url);
}

TEST_CASE("malformed lines raise parse errors with the line number") {
    CHECK_THROWS_AS(ingest::parse_record(R"({"lat":40.0,"lon":-77.0,"text":"x"})", 7),
                    ingest::record_parse_error);
    try {
        ingest::parse_record(R"({"lat":40.0})", 7);
        FAIL("expected record_parse_error");
    } catch (const ingest::record_parse_error& e) {
        CHECK(e.line() == 7);
    }
    CHECK_THROWS_AS(ingest::parse_record("not json at all", 1), ingest::record_parse_error);
    CHECK_THROWS_AS(ingest::parse_record(R"({"lat":95.0,"lon":0,"user_id":1,"text":"x"})", 1),
                    ingest::record_parse_error);
}

TEST_CASE("invalid utf-8 text is reported as its own error kind") {
    const std::string line = std::string(R"({"lat":0,"lon":0,"user_id":1,"text":")") +
                             "\xff\xfe" + R"("})";
    try {
        ingest::parse_record(line, 3);
        FAIL("expected record_parse_error");
    } catch (const ingest::record_parse_error& e) {
        CHECK(e.kind() == ingest::record_parse_error::Kind::invalid_utf8);
    }
}

TEST_CASE("string user ids: digits parse, names hash") {
    const auto digits = ingest::parse_record(
        R"({"lat":0,"lon":0,"user_id":"42","text":"x"})");
    CHECK(digits.user_id == 42);
    const auto named = ingest::parse_record(
        R"({"lat":0,"lon":0,"user_id":"bob","text":"x"})");
    CHECK(named.user_id == util::fnv1a64("bob"));
}

TEST_CASE("filter rules follow the strict more-than-1000 reading") {
    const BoundingBox box = BoundingBox::contiguous_us();
    RawRecord r;
    r.latitude = 40.0;
    r.longitude = -77.0;

    r.followers_count = 1001;
    CHECK_FALSE(ingest::passes_filters(r, box));
    r.followers_count = 1000;
    r.friends_count = 1000;
    CHECK(ingest::passes_filters(r, box));  // exactly 1000 passes
    r.friends_count = 1001;
    CHECK_FALSE(ingest::passes_filters(r, box));
    r.friends_count = 0;

    r.has_url = true;
    CHECK_FALSE(ingest::passes_filters(r, box));
    r.has_url = false;
    r.is_retweet = true;
    CHECK_FALSE(ingest::passes_filters(r, box));
    r.is_retweet = false;

    r.latitude = 10.0;  // outside the contiguous US
    CHECK_FALSE(ingest::passes_filters(r, box));
}

TEST_CASE("bounding box boundary is inclusive") {
    const BoundingBox box{-10.0, 10.0, -5.0, 5.0};
    RawRecord r;
    r.latitude = 5.0;
    r.longitude = -10.0;
    CHECK(ingest::passes_filters(r, box));
}

TEST_CASE("bbox parsing accepts degrees-west pairs") {
    const auto box = BoundingBox::parse("125.0011,66.9326,24.9493,49.5904");
    CHECK(box.west == -125.0011);
    CHECK(box.east == -66.9326);
    const auto scont = BoundingBox::contiguous_us();
    CHECK(box.south == scont.south);
    CHECK_THROWS_AS(BoundingBox::parse("1,2,3"), config_error);
    CHECK_THROWS_AS(BoundingBox::parse("-1,-2,0,1"), config_error);
}

TEST_CASE("filtering is a pure predicate") {
    util::Rng rng(11);
    const BoundingBox box = BoundingBox::contiguous_us();
    for (int i = 0; i < 200; ++i) {
        const RawRecord r = random_record(rng);
        const bool first = ingest::passes_filters(r, box);
        CHECK(first == ingest::passes_filters(r, box));
    }
}

TEST_CASE("parse of serialize is the identity") {
    util::Rng rng(13);
    for (int i = 0; i < 200; ++i) {
        const RawRecord r = random_record(rng);
        const RawRecord back = ingest::parse_record(ingest::serialize_record(r));
        CHECK(back == r);
    }
}

TEST_CASE("a fully compliant corpus passes through unchanged") {
    std::ostringstream corpus;
    for (int i = 0; i < 50; ++i) {
        RawRecord r;
        r.latitude = 40.0;
        r.longitude = -77.0;
        r.user_id = static_cast<std::uint64_t>(i);
        r.text = "token" + std::to_string(i);
        corpus << ingest::serialize_record(r) << '\n';
    }
    std::istringstream in(corpus.str());
    std::ostringstream out;
    const auto summary = ingest::filter_stream(in, out, BoundingBox::contiguous_us());
    CHECK(summary.lines_read == 50);
    CHECK(summary.kept == 50);
    CHECK(summary.skipped_filter == 0);
}

TEST_CASE("filter_stream counts malformed and filtered records") {
    std::istringstream in(
        R"({"lat":40.0,"lon":-77.0,"user_id":1,"text":"ok"}
broken line
{"lat":40.0,"lon":-77.0,"user_id":2,"text":"ok","followers_count":5000}
{"lat":40.0,"lon":-77.0,"user_id":3,"text":"RT spam"}
)");
    std::ostringstream out;
    const auto summary = ingest::filter_stream(in, out, BoundingBox::contiguous_us());
    CHECK(summary.lines_read == 4);
    CHECK(summary.kept == 1);
    CHECK(summary.skipped_parse == 1);
    CHECK(summary.skipped_filter == 2);
    CHECK(summary.rejected_followers == 1);
    CHECK(summary.rejected_retweet == 1);
}
