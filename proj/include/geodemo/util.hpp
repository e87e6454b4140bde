#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace geodemo::util {

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull);
std::string to_hex(std::uint64_t value);

// Deterministic RNG. mt19937_64 gives a standard-specified stream; bounded
// draws and the gaussian are implemented here because the std distributions
// are not bit-stable across library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // uniform in [0, n), rejection sampled
    std::uint64_t below(std::uint64_t n);

    // uniform in [0, 1)
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    double gaussian();  // Box-Muller

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

bool valid_utf8(std::string_view s);

// Decodes to codepoints; caller must have validated the input first.
std::vector<char32_t> decode_utf8(std::string_view s);
void encode_utf8(char32_t cp, std::string& out);

std::string ascii_lower(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

// Shortest exact round-trip formatting for doubles (%.17g, trimmed).
std::string format_double(double v);

std::string read_file(const std::string& path);

// Writes to `path + ".partial"` and renames on success, so an interrupted
// stage leaves only a .partial artifact behind.
void write_file_atomic(const std::string& path, std::string_view content);

// Streaming variant of write_file_atomic for large artifacts.
class AtomicFileWriter {
public:
    explicit AtomicFileWriter(std::string path);
    ~AtomicFileWriter();

    AtomicFileWriter(const AtomicFileWriter&) = delete;
    AtomicFileWriter& operator=(const AtomicFileWriter&) = delete;

    std::ostream& stream();
    void commit();

private:
    struct Impl;
    Impl* impl_;
};

// '*' wildcard in the filename component only; returns sorted matches.
std::vector<std::string> expand_glob(const std::string& pattern);

void for_each_line(const std::string& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

}  // namespace geodemo::util
