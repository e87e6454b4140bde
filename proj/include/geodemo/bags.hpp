#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "geodemo/errors.hpp"

namespace geodemo::feat {

// Finalized per-unit counts: C_i, U_i and per-word (c_{w,i}, u_{w,i}),
// words sorted lexicographically.
struct BagCounts {
    struct WordCount {
        std::string word;
        std::uint64_t count = 0;           // c_{w,i}
        std::uint64_t distinct_users = 0;  // u_{w,i}
    };

    std::string geoid;
    std::uint64_t total_words = 0;  // C_i
    std::uint64_t unit_users = 0;   // U_i
    std::vector<WordCount> words;
};

// Accumulator with exact distinct-user counting. User ids are buffered and
// deduplicated at finalization, which keeps desk-scale corpora in memory
// without per-word set overhead.
class UnitBag {
public:
    explicit UnitBag(std::string geoid) : geoid_(std::move(geoid)) {}

    const std::string& geoid() const { return geoid_; }

    // A user whose token list is empty still joins unit_users: tweeting from
    // the unit is what counts, not surviving tokenization.
    void add_record(const std::string& record_geoid, std::uint64_t user_hash,
                    std::span<const std::string> tokens);

    void merge(const UnitBag& other);

    BagCounts finalize() const;

private:
    struct WordStats {
        std::uint64_t count = 0;
        std::vector<std::uint64_t> users;  // may hold duplicates until finalize
    };

    std::string geoid_;
    std::uint64_t total_words_ = 0;
    std::unordered_map<std::string, WordStats> words_;
    std::vector<std::uint64_t> users_;
};

// JSON-lines persistence, one finalized bag per line, sorted by geoid.
std::string bag_to_json(const BagCounts& bag);
BagCounts bag_from_json(std::string_view line, std::size_t lineno = 0);

void save_bags(const std::string& path, std::span<const BagCounts> bags,
               const std::string& stamp = "");
std::vector<BagCounts> load_bags(const std::string& path);

}  // namespace geodemo::feat
