#include "temu/glacier.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "temu/error.hpp"

namespace temu {

void GlacierParams::validate() const {
    if (!(length > 0.0)) throw ArgumentError("GlacierParams: length must be > 0");
    if (!(center_thickness > 0.0)) throw ArgumentError("GlacierParams: H0 must be > 0");
    if (amplitude < 0.0) throw ArgumentError("GlacierParams: amplitude must be >= 0");
    if (!(period > 0.0)) throw ArgumentError("GlacierParams: period must be > 0");
    if (!(glen_n > 1.0)) throw ArgumentError("GlacierParams: Glen exponent must be > 1");
}

double static_profile(double r, const GlacierParams& p) {
    if (r < 0.0) throw ArgumentError("static_profile: r must be >= 0");
    const double s = r / p.length;
    if (s >= 1.0) return 0.0;
    const double n = p.glen_n;
    const double e = n / (2.0 * n + 2.0);
    // Bueler (2005) Eq. 21 dome profile.
    const double bracket = (1.0 + 1.0 / n) * s - 1.0 / n + std::pow(1.0 - s, 1.0 + 1.0 / n) -
                           std::pow(s, 1.0 + 1.0 / n);
    return p.center_thickness * std::pow(1.0 - 1.0 / n, -e) * std::pow(bracket, e);
}

double perturbation(double r, double t, const GlacierParams& p) {
    if (r < 0.0) throw ArgumentError("perturbation: r must be >= 0");
    const double L = p.length;
    if (r <= 0.3 * L || r >= 0.9 * L) return 0.0;
    const double c = std::cos(std::numbers::pi * (r - 0.6 * L) / (0.6 * L));
    return p.amplitude * std::sin(2.0 * std::numbers::pi * t / p.period) * c * c;
}

double thickness(double x, double y, double t, double period, double amplitude,
                 const GlacierParams& fixed) {
    GlacierParams p = fixed;
    p.period = period;
    p.amplitude = amplitude;
    const double r = std::hypot(x, y);
    return static_profile(r, p) + perturbation(r, t, p);
}

GlacierTensor build_glacier_tensor(std::size_t s, RngSeed seed, const GlacierParams& fixed,
                                   const GlacierDesignRanges& ranges, bool force) {
    if (s < 2) throw ArgumentError("build_glacier_tensor: s must be >= 2");
    const double cells = std::pow(static_cast<double>(s), 5.0);
    if (cells > 1e8 && !force)
        throw ResourceError("glacier tensor would have " + std::to_string(cells) +
                            " cells (> 1e8); pass force to override");
    fixed.validate();

    GlacierTensor out;
    out.design.xy = latin_hypercube(
        s * s, Bounds{{ranges.xy_lo, ranges.xy_hi}, {ranges.xy_lo, ranges.xy_hi}}, seed.child(1));
    out.design.t = uniform_sample(s, ranges.t_lo, ranges.t_hi, seed.child(2));
    out.design.pa = latin_hypercube(s * s,
                                    Bounds{{ranges.period_lo, ranges.period_hi},
                                           {ranges.amplitude_lo, ranges.amplitude_hi}},
                                    seed.child(3));

    const std::size_t m = s * s;
    out.values = Tensor({m, s, m});
    double* data = out.values.data().data();
    const auto& d = out.design;

    // Cells are independent; radius depends only on i, so hoist it per-i.
    std::vector<double> radii(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i)
        radii[static_cast<std::size_t>(i)] = std::hypot(d.xy(i, 0), d.xy(i, 1));

#pragma omp parallel for collapse(2) schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(m); ++k) {
        for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(s); ++j) {
            GlacierParams p = fixed;
            p.period = d.pa(k, 0);
            p.amplitude = d.pa(k, 1);
            const double t = d.t[static_cast<std::size_t>(j)];
            double* cell = data + static_cast<std::size_t>(j) * m +
                           static_cast<std::size_t>(k) * m * s;
            for (std::size_t i = 0; i < m; ++i)
                cell[i] = static_profile(radii[i], p) + perturbation(radii[i], t, p);
        }
    }
    return out;
}

double mare(std::span<const double> truth, std::span<const double> pred) {
    if (truth.size() != pred.size()) throw ArgumentError("mare: length mismatch");
    if (truth.empty()) throw ArgumentError("mare: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 0.0)
            throw ArgumentError("mare: zero truth entry at index " + std::to_string(i));
        acc += std::abs((truth[i] - pred[i]) / truth[i]);
    }
    return acc / static_cast<double>(truth.size());
}

namespace ref {

Tensor build_glacier_tensor_serial(const GlacierDesign& design, const GlacierParams& fixed) {
    const auto m = static_cast<std::size_t>(design.xy.rows());
    const std::size_t s = design.t.size();
    Tensor t({m, s, m});
    std::vector<std::size_t> idx(3);
    for (std::size_t k = 0; k < m; ++k)
        for (std::size_t j = 0; j < s; ++j)
            for (std::size_t i = 0; i < m; ++i) {
                idx[0] = i;
                idx[1] = j;
                idx[2] = k;
                t.at(idx) = thickness(design.xy(static_cast<Eigen::Index>(i), 0),
                                      design.xy(static_cast<Eigen::Index>(i), 1),
                                      design.t[j], design.pa(static_cast<Eigen::Index>(k), 0),
                                      design.pa(static_cast<Eigen::Index>(k), 1), fixed);
            }
    return t;
}

}  // namespace ref
}  // namespace temu
