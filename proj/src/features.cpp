#include "geodemo/features.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "geodemo/util.hpp"

namespace geodemo::feat {

FeatureScheme scheme_from_string(std::string_view s) {
    if (s == "raw_word") return FeatureScheme::raw_word;
    if (s == "normalized_word") return FeatureScheme::normalized_word;
    if (s == "raw_user") return FeatureScheme::raw_user;
    if (s == "normalized_user") return FeatureScheme::normalized_user;
    throw config_error("unknown feature scheme: " + std::string(s));
}

std::string_view scheme_to_string(FeatureScheme s) {
    switch (s) {
        case FeatureScheme::raw_word: return "raw_word";
        case FeatureScheme::normalized_word: return "normalized_word";
        case FeatureScheme::raw_user: return "raw_user";
        case FeatureScheme::normalized_user: return "normalized_user";
    }
    return "?";
}

FeatureTransform transform_from_string(std::string_view s) {
    if (s == "none") return FeatureTransform::none;
    if (s == "tfidf") return FeatureTransform::tfidf;
    if (s == "anscombe") return FeatureTransform::anscombe;
    if (s == "logistic") return FeatureTransform::logistic;
    if (s == "gaussian") return FeatureTransform::gaussian;
    throw config_error("unknown feature transform: " + std::string(s));
}

std::string_view transform_to_string(FeatureTransform t) {
    switch (t) {
        case FeatureTransform::none: return "none";
        case FeatureTransform::tfidf: return "tfidf";
        case FeatureTransform::anscombe: return "anscombe";
        case FeatureTransform::logistic: return "logistic";
        case FeatureTransform::gaussian: return "gaussian";
    }
    return "?";
}

void FeatureConfig::validate() const {
    const bool raw = scheme == FeatureScheme::raw_word || scheme == FeatureScheme::raw_user;
    switch (transform) {
        case FeatureTransform::none:
            return;
        case FeatureTransform::tfidf:
            if (!raw)
                throw config_error("tfidf pairs only with raw_word or raw_user");
            return;
        case FeatureTransform::anscombe:
        case FeatureTransform::logistic:
        case FeatureTransform::gaussian:
            if (raw)
                throw config_error(std::string(transform_to_string(transform)) +
                                   " pairs only with normalized_word or normalized_user");
            return;
    }
}

std::string FeatureConfig::name() const {
    return std::string(scheme_to_string(scheme)) + "+" + std::string(transform_to_string(transform));
}

Vocabulary::Vocabulary(std::vector<std::string> sorted_words) : words_(std::move(sorted_words)) {
    for (std::uint32_t i = 0; i < words_.size(); ++i) {
        if (i > 0 && !(words_[i - 1] < words_[i]))
            throw data_error("vocabulary words must be sorted and unique");
        index_.emplace(words_[i], i);
    }
}

std::optional<std::uint32_t> Vocabulary::index_of(std::string_view word) const {
    const auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Vocabulary::fingerprint() const {
    std::uint64_t h = util::fnv1a64("geodemo-vocab");
    for (const std::string& w : words_) {
        h = util::fnv1a64(w, h);
        h = util::fnv1a64("\n", h);
    }
    return h;
}

Vocabulary build_vocabulary(std::span<const BagCounts> train_bags) {
    if (train_bags.empty()) throw data_error("cannot build a vocabulary from zero training bags");
    std::set<std::string> words;
    for (const BagCounts& bag : train_bags) {
        for (const auto& w : bag.words) words.insert(w.word);
    }
    return Vocabulary(std::vector<std::string>(words.begin(), words.end()));
}

IdfTable compute_idf(std::span<const BagCounts> train_bags, const Vocabulary& vocab) {
    const double n = static_cast<double>(train_bags.size());
    std::vector<std::uint64_t> df(vocab.size(), 0);
    for (const BagCounts& bag : train_bags) {
        for (const auto& w : bag.words) {
            if (const auto idx = vocab.index_of(w.word)) ++df[*idx];
        }
    }
    IdfTable idf;
    idf.values.resize(vocab.size(), 0.0);
    idf.present.assign(vocab.size(), true);
    for (std::uint32_t i = 0; i < vocab.size(); ++i)
        idf.values[i] = std::log(n / (1.0 + static_cast<double>(df[i])));
    return idf;
}

SparseVector vectorize(const BagCounts& bag, const Vocabulary& vocab, FeatureScheme scheme) {
    if (vocab.size() == 0) throw data_error("cannot vectorize against an empty vocabulary");
    const bool normalized =
        scheme == FeatureScheme::normalized_word || scheme == FeatureScheme::normalized_user;
    const bool word_based =
        scheme == FeatureScheme::raw_word || scheme == FeatureScheme::normalized_word;
    if (normalized) {
        if (word_based && bag.total_words == 0)
            throw data_error("normalized_word needs C > 0 (bag " + bag.geoid + ")");
        if (!word_based && bag.unit_users == 0)
            throw data_error("normalized_user needs U > 0 (bag " + bag.geoid + ")");
    }

    // bag words are sorted like the vocabulary, so indices come out increasing
    SparseVector v(vocab.size());
    const double denom = word_based ? static_cast<double>(bag.total_words)
                                    : static_cast<double>(bag.unit_users);
    for (const auto& w : bag.words) {
        const auto idx = vocab.index_of(w.word);
        if (!idx) continue;  // out of vocabulary
        const double raw =
            word_based ? static_cast<double>(w.count) : static_cast<double>(w.distinct_users);
        v.push_back(*idx, normalized ? raw / denom : raw);
    }
    return v;
}

SparseVector apply_transform(const SparseVector& v, FeatureTransform transform,
                             const IdfTable* idf) {
    if (transform == FeatureTransform::tfidf && idf == nullptr)
        throw config_error("tfidf requires an idf table");
    if (transform != FeatureTransform::tfidf && idf != nullptr)
        throw config_error("idf table is only meaningful for tfidf");

    SparseVector out(v.dim());
    for (const SparseVector::Entry& e : v.entries()) {
        double x = e.value;
        switch (transform) {
            case FeatureTransform::none:
                break;
            case FeatureTransform::tfidf: {
                const auto w = idf->at(e.index);
                if (!w) throw data_error("no idf value for feature index " + std::to_string(e.index));
                x = e.value * (*w + 1.0);
                break;
            }
            case FeatureTransform::anscombe:
                x = 2.0 * std::sqrt(e.value + 3.0 / 8.0);
                break;
            case FeatureTransform::logistic:
                x = 1.0 / (1.0 + std::exp(-e.value));
                break;
            case FeatureTransform::gaussian:
                x = std::exp(-e.value * e.value);
                break;
        }
        out.push_back(e.index, x);
    }
    return out;
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab, const IdfTable& idf) {
    if (idf.values.size() != vocab.size())
        throw data_error("idf table does not match vocabulary size");
    std::ostringstream out;
    for (std::uint32_t i = 0; i < vocab.size(); ++i) {
        out << vocab.word(i) << '\t' << i << '\t';
        if (i < idf.present.size() && idf.present[i]) out << util::format_double(idf.values[i]);
        out << '\n';
    }
    util::write_file_atomic(path, out.str());
}

std::pair<Vocabulary, IdfTable> load_vocabulary(const std::string& path) {
    std::vector<std::string> words;
    std::vector<double> idf_values;
    std::vector<bool> idf_present;
    util::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        if (line.empty() || line[0] == '#') return;
        const auto fields = util::split(line, '\t');
        if (fields.size() != 3)
            throw data_error("vocab line " + std::to_string(lineno) + ": expected 3 fields");
        try {
            const std::uint32_t index = static_cast<std::uint32_t>(std::stoul(fields[1]));
            if (index != words.size())
                throw data_error("vocab line " + std::to_string(lineno) +
                                 ": indices must be dense");
            words.push_back(fields[0]);
            if (fields[2].empty()) {
                idf_values.push_back(0.0);
                idf_present.push_back(false);
            } else {
                idf_values.push_back(std::stod(fields[2]));
                idf_present.push_back(true);
            }
        } catch (const data_error&) {
            throw;
        } catch (const std::exception& e) {
            throw data_error("vocab file " + path + " line " + std::to_string(lineno) + ": " +
                             e.what());
        }
    });
    IdfTable idf{std::move(idf_values), std::move(idf_present)};
    return {Vocabulary(std::move(words)), std::move(idf)};
}

void save_features(const std::string& path, const FeatureFile& file) {
    if (file.geoids.size() != file.vectors.size())
        throw data_error("feature file: geoid/vector count mismatch");
    std::ostringstream out;
    out << "# geodemo-features scheme=" << scheme_to_string(file.config.scheme)
        << " transform=" << transform_to_string(file.config.transform)
        << " vocab=" << util::to_hex(file.vocab_fingerprint) << " dim=" << file.dim << '\n';
    for (std::size_t i = 0; i < file.geoids.size(); ++i) {
        out << file.geoids[i];
        for (const auto& e : file.vectors[i].entries())
            out << '\t' << e.index << ':' << util::format_double(e.value);
        out << '\n';
    }
    util::write_file_atomic(path, out.str());
}

FeatureFile load_features(const std::string& path) {
    FeatureFile file;
    bool have_header = false;
    util::for_each_line(path, [&](std::string_view line, std::size_t lineno) {
        try {
            if (line.empty()) return;
            if (line[0] == '#') {
                for (const std::string& part : util::split(line.substr(1), ' ')) {
                    const std::size_t eq = part.find('=');
                    if (eq == std::string::npos) continue;
                    const std::string key = part.substr(0, eq);
                    const std::string value = part.substr(eq + 1);
                    if (key == "scheme") file.config.scheme = scheme_from_string(value);
                    if (key == "transform") file.config.transform = transform_from_string(value);
                    if (key == "vocab") file.vocab_fingerprint = std::stoull(value, nullptr, 16);
                    if (key == "dim") file.dim = static_cast<std::uint32_t>(std::stoul(value));
                }
                have_header = true;
                return;
            }
            if (!have_header) throw data_error("feature file missing header: " + path);
            const auto fields = util::split(line, '\t');
            file.geoids.push_back(fields[0]);
            SparseVector v(file.dim);
            for (std::size_t i = 1; i < fields.size(); ++i) {
                const std::size_t colon = fields[i].find(':');
                if (colon == std::string::npos)
                    throw data_error("feature line " + std::to_string(lineno) + ": bad entry");
                v.push_back(static_cast<std::uint32_t>(std::stoul(fields[i].substr(0, colon))),
                            std::stod(fields[i].substr(colon + 1)));
            }
            file.vectors.push_back(std::move(v));
        } catch (const data_error&) {
            throw;
        } catch (const std::exception& e) {
            throw data_error("feature file " + path + " line " + std::to_string(lineno) + ": " +
                             e.what());
        }
    });
    if (!have_header) throw data_error("feature file missing header: " + path);
    return file;
}

}  // namespace geodemo::feat
