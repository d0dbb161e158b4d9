#include "temu/design.hpp"

#include <cstdio>
#include <fstream>

#include "temu/error.hpp"

namespace temu {

void Bounds::validate() const {
    if (ranges.empty()) throw ArgumentError("Bounds: at least one dimension required");
    for (std::size_t d = 0; d < ranges.size(); ++d)
        if (!(ranges[d].first < ranges[d].second))
            throw ArgumentError("Bounds: lower must be < upper in dimension " + std::to_string(d));
}

Eigen::MatrixXd latin_hypercube(std::size_t n, const Bounds& bounds, RngSeed seed) {
    if (n == 0) throw ArgumentError("latin_hypercube: n must be >= 1");
    bounds.validate();
    const std::size_t d = bounds.dim();
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

    Rng rng(seed);
    for (std::size_t j = 0; j < d; ++j) {
        const auto [lo, hi] = bounds.ranges[j];
        const double w = (hi - lo) / static_cast<double>(n);
        const auto perm = rng.permutation(n);
        for (std::size_t i = 0; i < n; ++i) {
            double u = rng.next_double();
            if (u == 0.0) u = 0x1.0p-53;  // keep points strictly inside the box
            pts(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                lo + (static_cast<double>(perm[i]) + u) * w;
        }
    }
    return pts;
}

std::vector<double> uniform_sample(std::size_t n, double lo, double hi, RngSeed seed) {
    if (n == 0) throw ArgumentError("uniform_sample: n must be >= 1");
    if (!(lo < hi)) throw ArgumentError("uniform_sample: lower must be < upper");
    Rng rng(seed);
    std::vector<double> xs(n);
    for (auto& x : xs) x = rng.uniform(lo, hi);
    return xs;
}

void write_design_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& points) {
    if (static_cast<Eigen::Index>(names.size()) != points.cols())
        throw ArgumentError("write_design_csv: one name per column required");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << "\n";
    char buf[32];
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", points(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace temu
