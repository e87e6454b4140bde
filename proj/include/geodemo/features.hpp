#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geodemo/bags.hpp"
#include "geodemo/sparse.hpp"

namespace geodemo::feat {

enum class FeatureScheme { raw_word, normalized_word, raw_user, normalized_user };
enum class FeatureTransform { none, tfidf, anscombe, logistic, gaussian };

FeatureScheme scheme_from_string(std::string_view s);
std::string_view scheme_to_string(FeatureScheme s);
FeatureTransform transform_from_string(std::string_view s);
std::string_view transform_to_string(FeatureTransform t);

struct FeatureConfig {
    FeatureScheme scheme = FeatureScheme::normalized_user;
    FeatureTransform transform = FeatureTransform::none;

    // tfidf pairs only with the raw schemes; anscombe/logistic/gaussian only
    // with the normalized ones
    void validate() const;
    std::string name() const;
};

// Training-split vocabulary: word -> dense column index, lexicographic order.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> sorted_words);

    std::uint32_t size() const { return static_cast<std::uint32_t>(words_.size()); }
    std::optional<std::uint32_t> index_of(std::string_view word) const;
    const std::string& word(std::uint32_t index) const { return words_[index]; }
    const std::vector<std::string>& words() const { return words_; }

    std::uint64_t fingerprint() const;

private:
    std::vector<std::string> words_;
    std::map<std::string, std::uint32_t, std::less<>> index_;
};

// idf per vocabulary column; entries may be absent when loaded from a
// partial table
struct IdfTable {
    std::vector<double> values;
    std::vector<bool> present;

    std::optional<double> at(std::uint32_t index) const {
        if (index >= values.size() || !present[index]) return std::nullopt;
        return values[index];
    }
};

Vocabulary build_vocabulary(std::span<const BagCounts> train_bags);

// idf(w) = ln(n / (1 + df(w))), df over the training bags; negative values
// are legal and kept.
IdfTable compute_idf(std::span<const BagCounts> train_bags, const Vocabulary& vocab);

SparseVector vectorize(const BagCounts& bag, const Vocabulary& vocab, FeatureScheme scheme);

// Element-wise transform on stored entries only; absent entries stay absent.
SparseVector apply_transform(const SparseVector& v, FeatureTransform transform,
                             const IdfTable* idf = nullptr);

// vocabulary + idf persistence: TSV `word \t index \t idf`
void save_vocabulary(const std::string& path, const Vocabulary& vocab, const IdfTable& idf);
std::pair<Vocabulary, IdfTable> load_vocabulary(const std::string& path);

// feature-vector persistence: header line + `geoid \t idx:val ...`
struct FeatureFile {
    FeatureConfig config;
    std::uint64_t vocab_fingerprint = 0;
    std::uint32_t dim = 0;
    std::vector<std::string> geoids;
    std::vector<SparseVector> vectors;
};

void save_features(const std::string& path, const FeatureFile& file);
FeatureFile load_features(const std::string& path);

}  // namespace geodemo::feat
