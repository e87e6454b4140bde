#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geodemo/errors.hpp"

namespace geodemo::feat {

// Sorted (index, value) pairs over a fixed dimension; zeros are never stored.
class SparseVector {
public:
    struct Entry {
        std::uint32_t index;
        double value;
        bool operator==(const Entry&) const = default;
    };

    SparseVector() = default;
    explicit SparseVector(std::uint32_t dim) : dim_(dim) {}

    std::uint32_t dim() const { return dim_; }
    std::size_t nnz() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::span<const Entry> entries() const { return entries_; }

    void reserve(std::size_t n) { entries_.reserve(n); }

    // Indices must be appended in strictly increasing order.
    void push_back(std::uint32_t index, double value) {
        if (index >= dim_) throw data_error("sparse index out of range");
        if (!entries_.empty() && entries_.back().index >= index)
            throw data_error("sparse indices must be strictly increasing");
        if (value == 0.0) return;
        entries_.push_back({index, value});
    }

    double dot(std::span<const double> dense) const {
        double acc = 0.0;
        for (const Entry& e : entries_) acc += e.value * dense[e.index];
        return acc;
    }

    // dense += scale * x
    void add_scaled_into(std::span<double> dense, double scale) const {
        for (const Entry& e : entries_) dense[e.index] += scale * e.value;
    }

    bool operator==(const SparseVector&) const = default;

private:
    std::uint32_t dim_ = 0;
    std::vector<Entry> entries_;
};

}  // namespace geodemo::feat
