#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace geodemo {

// Error taxonomy mirrors the CLI exit codes: 2 config, 3 data, 4 divergence.

class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// SGD produced a non-finite value; carries where training blew up.
class divergence_error : public std::runtime_error {
public:
    explicit divergence_error(const std::string& what, int epoch = -1, std::int64_t step = -1)
        : std::runtime_error(what), epoch_(epoch), step_(step) {}
    int epoch() const { return epoch_; }
    std::int64_t step() const { return step_; }

private:
    int epoch_;
    std::int64_t step_;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

}  // namespace geodemo
