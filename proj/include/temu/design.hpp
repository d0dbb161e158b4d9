#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "temu/rng.hpp"

namespace temu {

/// Axis-aligned box; lower < upper in every dimension.
struct Bounds {
    std::vector<std::pair<double, double>> ranges;

    Bounds() = default;
    Bounds(std::initializer_list<std::pair<double, double>> rs) : ranges(rs) { validate(); }
    explicit Bounds(std::vector<std::pair<double, double>> rs) : ranges(std::move(rs)) {
        validate();
    }

    [[nodiscard]] std::size_t dim() const { return ranges.size(); }
    void validate() const;
};

/// Latin hypercube sample: n points in dim(bounds) dimensions. In each
/// dimension the n equal-width strata are each hit exactly once (random
/// permutation per dimension, uniform draw within the stratum).
[[nodiscard]] Eigen::MatrixXd latin_hypercube(std::size_t n, const Bounds& bounds, RngSeed seed);

/// n iid uniform draws from a 1-D range.
[[nodiscard]] std::vector<double> uniform_sample(std::size_t n, double lo, double hi,
                                                 RngSeed seed);

/// Design points as CSV with a header row naming the dimensions.
void write_design_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& points);

}  // namespace temu
