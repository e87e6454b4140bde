#include "geodemo/tokenizer.hpp"

#include <algorithm>

#include "geodemo/errors.hpp"
#include "geodemo/util.hpp"

namespace geodemo::text {

namespace {

const char* kDefaultStopwords =
#include "stopwords_data.inc"
    ;

const char* kDefaultEmoticons =
#include "emoticons_data.inc"
    ;

bool is_ascii_alnum(char32_t cp) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

bool is_ascii_letter(char32_t cp) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
}

bool is_space_cp(char32_t cp) {
    switch (cp) {
        case ' ':
        case '\t':
        case '\n':
        case '\r':
        case '\v':
        case '\f':
        case 0x00A0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200B;
    }
}

// Non-ASCII codepoints are punctuation only in the common punctuation
// blocks; everything else above 0x7F counts as a word character.
bool is_punct_cp(char32_t cp) {
    if (cp < 0x80) return !is_ascii_alnum(cp) && cp != '_' && !is_space_cp(cp);
    if (cp >= 0x00A1 && cp <= 0x00BF) return true;
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if (cp >= 0x3001 && cp <= 0x303F) return true;
    return false;
}

bool is_word_cp(char32_t cp) {
    if (cp < 0x80) return is_ascii_alnum(cp) || cp == '_';
    return !is_space_cp(cp) && !is_punct_cp(cp);
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

bool is_email_local_cp(char32_t cp) {
    return is_ascii_alnum(cp) || cp == '.' || cp == '_' || cp == '%' || cp == '+' || cp == '-';
}

bool is_email_domain_cp(char32_t cp) { return is_ascii_alnum(cp) || cp == '.' || cp == '-'; }

struct Scanner {
    const std::vector<char32_t>& cps;
    const std::vector<std::size_t>& byte_of;  // byte offset per codepoint, plus end sentinel
    std::string_view bytes;

    char32_t at(std::size_t i) const { return i < cps.size() ? cps[i] : 0; }

    std::string slice(std::size_t begin_cp, std::size_t end_cp) const {
        return std::string(bytes.substr(byte_of[begin_cp], byte_of[end_cp] - byte_of[begin_cp]));
    }
};

bool ieq(char a, char b) {
    if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
    return a == b;
}

bool bytes_have_prefix_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (!ieq(s[i], prefix[i])) return false;
    }
    return true;
}

// url-shape: http://, https:// or www. up to the next whitespace
std::size_t match_url(const Scanner& sc, std::size_t i) {
    const std::string_view rest = sc.bytes.substr(sc.byte_of[i]);
    if (!bytes_have_prefix_ci(rest, "http://") && !bytes_have_prefix_ci(rest, "https://") &&
        !bytes_have_prefix_ci(rest, "www."))
        return 0;
    std::size_t j = i;
    while (j < sc.cps.size() && !is_space_cp(sc.cps[j])) ++j;
    return j - i;
}

// local@domain.tld with a dot-domain and an alphabetic final label
std::size_t match_email(const Scanner& sc, std::size_t i) {
    std::size_t j = i;
    while (j < sc.cps.size() && is_email_local_cp(sc.cps[j])) ++j;
    if (j == i || j >= sc.cps.size() || sc.cps[j] != '@') return 0;
    const std::size_t at = j;
    ++j;
    std::size_t last_label_start = j;
    bool saw_dot = false;
    while (j < sc.cps.size() && is_email_domain_cp(sc.cps[j])) {
        if (sc.cps[j] == '.') {
            saw_dot = true;
            last_label_start = j + 1;
        }
        ++j;
    }
    if (j == at + 1 || !saw_dot) return 0;
    std::size_t label_len = 0;
    for (std::size_t k = last_label_start; k < j; ++k) {
        if (!is_ascii_letter(sc.cps[k])) return 0;
        ++label_len;
    }
    if (label_len < 2) return 0;
    return j - i;
}

std::size_t match_mention(const Scanner& sc, std::size_t i) {
    if (sc.cps[i] != '@') return 0;
    std::size_t j = i + 1;
    while (j < sc.cps.size() && (is_ascii_alnum(sc.cps[j]) || sc.cps[j] == '_')) ++j;
    return j - i;
}

std::size_t match_hashtag(const Scanner& sc, std::size_t i) {
    if (sc.cps[i] != '#' || i + 1 >= sc.cps.size() || !is_ascii_letter(sc.cps[i + 1])) return 0;
    std::size_t j = i + 1;
    while (j < sc.cps.size() && is_word_cp(sc.cps[j])) ++j;
    return j - i;
}

std::vector<std::string> parse_list(std::string_view content) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string_view::npos) end = content.size();
        std::string_view line = util::trim(content.substr(start, end - start));
        if (!line.empty()) out.emplace_back(line);
        if (end == content.size()) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

Tokenizer::Tokenizer() : Tokenizer(kDefaultStopwords, kDefaultEmoticons) {}

Tokenizer::Tokenizer(std::string_view stopword_list, std::string_view emoticon_list) {
    for (std::string& w : parse_list(stopword_list)) stopwords_.insert(std::move(w));
    for (std::string& e : parse_list(emoticon_list)) {
        if (e.empty()) continue;
        emoticons_[e[0]].push_back(std::move(e));
    }
    for (auto& [first, list] : emoticons_) {
        std::sort(list.begin(), list.end(), [](const std::string& a, const std::string& b) {
            return a.size() != b.size() ? a.size() > b.size() : a < b;
        });
        emoticon_total_ += list.size();
    }
}

Tokenizer Tokenizer::from_files(const std::string& stopwords_path,
                                const std::string& emoticons_path) {
    const std::string stop =
        stopwords_path.empty() ? std::string(kDefaultStopwords) : util::read_file(stopwords_path);
    const std::string emo =
        emoticons_path.empty() ? std::string(kDefaultEmoticons) : util::read_file(emoticons_path);
    return Tokenizer(stop, emo);
}

bool Tokenizer::is_stopword(std::string_view token) const {
    return stopwords_.count(std::string(token)) > 0;
}

std::size_t Tokenizer::match_emoticon(std::string_view bytes) const {
    if (bytes.empty()) return 0;
    const auto it = emoticons_.find(bytes[0]);
    if (it == emoticons_.end()) return 0;
    for (const std::string& lit : it->second) {
        if (bytes.size() < lit.size()) continue;
        if (bytes.compare(0, lit.size(), lit) != 0) continue;
        return lit.size();
    }
    return 0;
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    if (text.empty()) return tokens;

    const std::vector<char32_t> cps = util::decode_utf8(text);
    std::vector<std::size_t> byte_of(cps.size() + 1, 0);
    {
        std::size_t b = 0;
        for (std::size_t i = 0; i < cps.size(); ++i) {
            byte_of[i] = b;
            const char32_t cp = cps[i];
            b += cp < 0x80 ? 1 : cp < 0x800 ? 2 : cp < 0x10000 ? 3 : 4;
        }
        byte_of[cps.size()] = b;
    }
    const Scanner sc{cps, byte_of, text};

    std::size_t i = 0;
    const std::size_t n = cps.size();
    while (i < n) {
        if (is_space_cp(cps[i])) {
            ++i;
            continue;
        }
        if (const std::size_t len = match_url(sc, i); len > 0) {
            i += len;  // dropped
            continue;
        }
        if (const std::size_t len = match_email(sc, i); len > 0) {
            i += len;  // dropped
            continue;
        }
        if (const std::size_t len = match_mention(sc, i); len > 0) {
            i += len;  // dropped
            continue;
        }
        if (const std::size_t len = match_hashtag(sc, i); len > 0) {
            tokens.push_back(util::ascii_lower(sc.slice(i, i + len)));
            i += len;
            continue;
        }
        {
            const std::string_view rest = text.substr(byte_of[i]);
            const std::size_t blen = match_emoticon(rest);
            if (blen > 0) {
                // an all-trailing-alnum literal ("xD") must end at a word boundary
                std::size_t end_cp = i;
                while (end_cp < n && byte_of[end_cp] < byte_of[i] + blen) ++end_cp;
                const bool trailing_alnum = is_ascii_alnum(rest[blen - 1]);
                if (!(trailing_alnum && end_cp < n && is_word_cp(cps[end_cp]))) {
                    tokens.push_back(util::ascii_lower(rest.substr(0, blen)));
                    i = end_cp;
                    continue;
                }
            }
        }
        if (is_punct_cp(cps[i])) {
            std::size_t j = i;
            while (j < n && is_punct_cp(cps[j])) ++j;
            if (j - i >= 2) tokens.push_back(sc.slice(i, j));  // single marks are dropped
            i = j;
            continue;
        }
        if (is_word_cp(cps[i])) {
            std::string token;
            std::size_t j = i;
            while (j < n && is_word_cp(cps[j])) ++j;
            token = sc.slice(i, j);
            // allow internal apostrophes so contractions stay whole
            while (j + 1 < n && is_apostrophe(cps[j]) && is_word_cp(cps[j + 1])) {
                token.push_back('\'');
                std::size_t k = j + 1;
                while (k < n && is_word_cp(cps[k])) ++k;
                token += sc.slice(j + 1, k);
                j = k;
            }
            token = util::ascii_lower(token);
            if (!is_stopword(token)) tokens.push_back(std::move(token));
            i = j;
            continue;
        }
        ++i;  // unclassified codepoint
    }
    return tokens;
}

}  // namespace geodemo::text
