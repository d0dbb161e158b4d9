#include "temu/ref.hpp"

#include "temu/error.hpp"

namespace temu::ref {

namespace {

// Advance a multi-index in colexicographic order (first index fastest).
bool next_index(std::vector<std::size_t>& idx, const std::vector<std::size_t>& dims) {
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (++idx[k] < dims[k]) return true;
        idx[k] = 0;
    }
    return false;
}

}  // namespace

Eigen::MatrixXd unfold(const Tensor& t, std::size_t mode) {
    if (mode >= t.order()) throw ArgumentError("ref::unfold: mode out of range");
    const auto& dims = t.dims();
    std::size_t cols = 1;
    for (std::size_t k = 0; k < dims.size(); ++k)
        if (k != mode) cols *= dims[k];

    Eigen::MatrixXd m(static_cast<Eigen::Index>(dims[mode]), static_cast<Eigen::Index>(cols));
    std::vector<std::size_t> idx(dims.size(), 0);
    do {
        // Column index: remaining modes ascending, earlier modes fastest.
        std::size_t col = 0;
        std::size_t stride = 1;
        for (std::size_t k = 0; k < dims.size(); ++k) {
            if (k == mode) continue;
            col += idx[k] * stride;
            stride *= dims[k];
        }
        m(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(col)) = t.at(idx);
    } while (next_index(idx, dims));
    return m;
}

Tensor mode_multiply(const Tensor& t, const Eigen::MatrixXd& m, std::size_t mode) {
    if (mode >= t.order()) throw ArgumentError("ref::mode_multiply: mode out of range");
    if (static_cast<std::size_t>(m.cols()) != t.dim(mode))
        throw ArgumentError("ref::mode_multiply: shape mismatch");

    std::vector<std::size_t> out_dims = t.dims();
    out_dims[mode] = static_cast<std::size_t>(m.rows());
    Tensor out(out_dims);

    std::vector<std::size_t> idx(out_dims.size(), 0);
    std::vector<std::size_t> src(out_dims.size(), 0);
    do {
        double s = 0.0;
        src = idx;
        for (std::size_t i = 0; i < t.dim(mode); ++i) {
            src[mode] = i;
            s += m(static_cast<Eigen::Index>(idx[mode]), static_cast<Eigen::Index>(i)) * t.at(src);
        }
        out.at(idx) = s;
    } while (next_index(idx, out_dims));
    return out;
}

Tensor reconstruct(const HosvdFactors& f) {
    std::vector<std::size_t> dims(f.factors.size());
    for (std::size_t k = 0; k < f.factors.size(); ++k)
        dims[k] = static_cast<std::size_t>(f.factors[k].rows());
    Tensor out(dims);

    std::vector<std::size_t> idx(dims.size(), 0);
    std::vector<std::size_t> cidx(dims.size(), 0);
    do {
        double s = 0.0;
        std::fill(cidx.begin(), cidx.end(), 0);
        do {
            double term = f.core.at(cidx);
            for (std::size_t k = 0; k < dims.size(); ++k)
                term *= f.factors[k](static_cast<Eigen::Index>(idx[k]),
                                     static_cast<Eigen::Index>(cidx[k]));
            s += term;
        } while (next_index(cidx, f.core.dims()));
        out.at(idx) = s;
    } while (next_index(idx, dims));
    return out;
}

double sum_squares(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return s;
}

}  // namespace temu::ref
