#pragma once

#include <Eigen/Dense>
#include <vector>

#include "temu/design.hpp"
#include "temu/rng.hpp"
#include "temu/tensor.hpp"

namespace temu {

/// Oscillating-dome glacier: a static radially symmetric profile plus a
/// periodic ring-shaped perturbation. Closed form, so it doubles as an exact
/// oracle for the emulator experiments. Lengths in meters, time in years.
struct GlacierParams {
    double length = 750000.0;         // margin radius L
    double center_thickness = 3600.0; // H0
    double glen_n = 3.0;              // Glen flow-law exponent
    double amplitude = 0.0;           // C_p
    double period = 1.0;              // T_p, years

    void validate() const;
};

/// Static dome profile H_s(r) (Bueler 2005, Eq. 21): H_s(0) = H0, zero at
/// r >= L, strictly decreasing in between.
[[nodiscard]] double static_profile(double r, const GlacierParams& p);

/// Ring perturbation: C_p sin(2 pi t / T_p) cos^2(pi (r - 0.6 L) / (0.6 L))
/// on 0.3 L < r < 0.9 L, zero elsewhere.
[[nodiscard]] double perturbation(double r, double t, const GlacierParams& p);

/// H(x, y, t) = H_s(r) + P(r, t), r = sqrt(x^2 + y^2).
[[nodiscard]] double thickness(double x, double y, double t, double period, double amplitude,
                               const GlacierParams& fixed);

/// Experimental-design ranges for the glacier study.
struct GlacierDesignRanges {
    double xy_lo = -5e5, xy_hi = 5e5;
    double t_lo = 0.0, t_hi = 1e4;
    double period_lo = 1e3, period_hi = 5e3;
    double amplitude_lo = 1e2, amplitude_hi = 4e2;
};

/// Tensor of simulator runs plus the design coordinates that index it.
struct GlacierDesign {
    Eigen::MatrixXd xy;      // s^2 x 2 latin hypercube points
    std::vector<double> t;   // s uniform draws
    Eigen::MatrixXd pa;      // s^2 x 2 latin hypercube (period, amplitude)
};

struct GlacierTensor {
    Tensor values;           // dims s^2 x s x s^2
    GlacierDesign design;
};

/// Build the s^2 x s x s^2 training tensor: cell (i, j, k) is the thickness
/// at ((x,y)_i, t_j, (period, amplitude)_k). Refuses s^5 > 10^8 cells unless
/// `force` is set.
[[nodiscard]] GlacierTensor build_glacier_tensor(std::size_t s, RngSeed seed,
                                                 const GlacierParams& fixed = {},
                                                 const GlacierDesignRanges& ranges = {},
                                                 bool force = false);

/// Mean absolute relative error, mean |(truth - pred) / truth|. Throws on a
/// zero truth entry rather than skipping it.
[[nodiscard]] double mare(std::span<const double> truth, std::span<const double> pred);

namespace ref {
/// Serial cell-by-cell tensor assembly (oracle / benchmark baseline).
[[nodiscard]] Tensor build_glacier_tensor_serial(const GlacierDesign& design,
                                                 const GlacierParams& fixed);
}  // namespace ref

}  // namespace temu
