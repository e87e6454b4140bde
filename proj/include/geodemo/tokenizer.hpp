#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace geodemo::text {

// Tweet-aware tokenizer. Rule precedence is fixed (first match wins):
//   url > email > mention > hashtag > emoticon > punctuation-block > word
// URL-shaped runs, emails, mentions, single punctuation marks and stopwords
// are dropped; hashtags, emoticons and multi-character punctuation blocks
// are kept as tokens. Every emitted token is ASCII-lowercased.
class Tokenizer {
public:
    // Embedded default stopword and emoticon inventories (data/*.txt).
    Tokenizer();

    // `stopword_list` / `emoticon_list` are raw file contents, one entry per line.
    Tokenizer(std::string_view stopword_list, std::string_view emoticon_list);

    // Empty path selects the embedded default for that list.
    static Tokenizer from_files(const std::string& stopwords_path,
                                const std::string& emoticons_path);

    std::vector<std::string> tokenize(std::string_view text) const;

    // Expects a lowercased token.
    bool is_stopword(std::string_view token) const;

    std::size_t stopword_count() const { return stopwords_.size(); }
    std::size_t emoticon_count() const { return emoticon_total_; }

private:
    std::size_t match_emoticon(std::string_view bytes) const;

    std::unordered_set<std::string> stopwords_;
    // literal inventory grouped by first byte, longest first
    std::unordered_map<char, std::vector<std::string>> emoticons_;
    std::size_t emoticon_total_ = 0;
};

}  // namespace geodemo::text
