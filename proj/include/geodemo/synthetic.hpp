#pragma once

#include <cstdint>
#include <string>

namespace geodemo::pipe {

// Desk-scale corpus generator: a grid of square blocks with valid 15-digit
// GEOIDs, per-unit demographic proportions and population, and users that
// emit tokens from category-conditional word distributions, so that true
// proportions are linearly recoverable from normalized frequencies.
struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t n_units = 2000;
    std::size_t vocab_size = 500;
    std::size_t categories = 2;
    double users_min = 60.0;   // log-uniform users per unit
    double users_max = 300.0;
    std::size_t tokens_per_user = 48;
    std::size_t tokens_per_record = 12;
    std::uint64_t population_min = 800;
    std::uint64_t population_max = 1200;
    std::string out_dir;

    void validate() const;
};

struct SynthPaths {
    std::string records;
    std::string boundaries;
    std::string truth;
    std::string params;
};

SynthPaths generate_synthetic(const SynthConfig& cfg);

}  // namespace geodemo::pipe
