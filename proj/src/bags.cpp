#include "geodemo/bags.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "geodemo/util.hpp"

namespace geodemo::feat {

using nlohmann::json;

namespace {

void push_user(std::vector<std::uint64_t>& users, std::uint64_t user) {
    // a user's records usually arrive back to back
    if (users.empty() || users.back() != user) users.push_back(user);
}

std::uint64_t distinct_count(std::vector<std::uint64_t> users) {
    std::sort(users.begin(), users.end());
    return static_cast<std::uint64_t>(std::unique(users.begin(), users.end()) - users.begin());
}

}  // namespace

void UnitBag::add_record(const std::string& record_geoid, std::uint64_t user_hash,
                         std::span<const std::string> tokens) {
    if (record_geoid != geoid_)
        throw data_error("record geoid " + record_geoid + " does not match bag " + geoid_);
    push_user(users_, user_hash);
    for (const std::string& token : tokens) {
        WordStats& stats = words_[token];
        ++stats.count;
        push_user(stats.users, user_hash);
        ++total_words_;
    }
}

void UnitBag::merge(const UnitBag& other) {
    if (other.geoid_ != geoid_)
        throw data_error("cannot merge bag " + other.geoid_ + " into " + geoid_);
    total_words_ += other.total_words_;
    users_.insert(users_.end(), other.users_.begin(), other.users_.end());
    for (const auto& [word, stats] : other.words_) {
        WordStats& mine = words_[word];
        mine.count += stats.count;
        mine.users.insert(mine.users.end(), stats.users.begin(), stats.users.end());
    }
}

BagCounts UnitBag::finalize() const {
    BagCounts out;
    out.geoid = geoid_;
    out.total_words = total_words_;
    out.unit_users = distinct_count(users_);
    out.words.reserve(words_.size());
    for (const auto& [word, stats] : words_)
        out.words.push_back({word, stats.count, distinct_count(stats.users)});
    std::sort(out.words.begin(), out.words.end(),
              [](const BagCounts::WordCount& a, const BagCounts::WordCount& b) {
                  return a.word < b.word;
              });
    return out;
}

std::string bag_to_json(const BagCounts& bag) {
    json words = json::array();
    for (const auto& w : bag.words) words.push_back(json::array({w.word, w.count, w.distinct_users}));
    json obj;
    obj["geoid"] = bag.geoid;
    obj["C"] = bag.total_words;
    obj["U"] = bag.unit_users;
    obj["words"] = std::move(words);
    return obj.dump();
}

BagCounts bag_from_json(std::string_view line, std::size_t lineno) {
    try {
        const json obj = json::parse(line);
        BagCounts bag;
        bag.geoid = obj.at("geoid").get<std::string>();
        bag.total_words = obj.at("C").get<std::uint64_t>();
        bag.unit_users = obj.at("U").get<std::uint64_t>();
        for (const json& w : obj.at("words"))
            bag.words.push_back({w.at(0).get<std::string>(), w.at(1).get<std::uint64_t>(),
                                 w.at(2).get<std::uint64_t>()});
        return bag;
    } catch (const json::exception& e) {
        throw data_error("bad bag line " + std::to_string(lineno) + ": " + e.what());
    }
}

void save_bags(const std::string& path, std::span<const BagCounts> bags, const std::string& stamp) {
    std::ostringstream out;
    if (!stamp.empty()) out << "# " << stamp << '\n';
    for (const BagCounts& bag : bags) out << bag_to_json(bag) << '\n';
    util::write_file_atomic(path, out.str());
}

std::vector<BagCounts> load_bags(const std::string& path) {
    std::vector<BagCounts> bags;
    util::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty() || line[0] == '#') return;
        bags.push_back(bag_from_json(line, lineno));
    });
    return bags;
}

}  // namespace geodemo::feat
