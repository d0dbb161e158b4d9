#include "temu/tensor.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <string>

#include "temu/error.hpp"

namespace temu {

namespace {

// Unfoldings taller than this use a thin SVD instead of the Gram route.
constexpr std::size_t kGramRowLimit = 2000;

std::size_t checked_product(const std::vector<std::size_t>& dims) {
    if (dims.empty()) throw ArgumentError("Tensor: order must be >= 1");
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw ArgumentError("Tensor: every dimension must be >= 1");
        n *= d;
    }
    return n;
}

void check_mode(const Tensor& t, std::size_t mode) {
    if (mode >= t.order())
        throw ArgumentError("mode " + std::to_string(mode) + " out of range for order-" +
                            std::to_string(t.order()) + " tensor");
}

// left = prod of dims before mode, right = prod after.
void split_dims(const std::vector<std::size_t>& dims, std::size_t mode, std::size_t& left,
                std::size_t& right) {
    left = 1;
    right = 1;
    for (std::size_t k = 0; k < mode; ++k) left *= dims[k];
    for (std::size_t k = mode + 1; k < dims.size(); ++k) right *= dims[k];
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    data_.assign(checked_product(dims_), 0.0);
}

Tensor::Tensor(std::vector<std::size_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
    if (checked_product(dims_) != data_.size())
        throw ArgumentError("Tensor: data length does not match product of dims");
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m) {
    Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    Eigen::Map<Eigen::MatrixXd>(t.data_.data(), m.rows(), m.cols()) = m;
    return t;
}

std::size_t Tensor::offset(std::span<const std::size_t> idx) const {
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
        flat += idx[k] * stride;
        stride *= dims_[k];
    }
    return flat;
}

Eigen::MatrixXd Tensor::as_matrix() const {
    if (order() != 2) throw ArgumentError("as_matrix: tensor order must be 2");
    return Eigen::Map<const Eigen::MatrixXd>(data_.data(), static_cast<Eigen::Index>(dims_[0]),
                                             static_cast<Eigen::Index>(dims_[1]));
}

double blocked_sum_squares(std::span<const double> xs) {
    constexpr std::size_t kBlock = 4096;
    const std::size_t nblocks = (xs.size() + kBlock - 1) / kBlock;
    std::vector<double> partial(nblocks, 0.0);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(nblocks); ++b) {
        const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
        const std::size_t hi = std::min(lo + kBlock, xs.size());
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += xs[i] * xs[i];
        partial[static_cast<std::size_t>(b)] = s;
    }
    double total = 0.0;
    for (double p : partial) total += p;  // fixed order, independent of threads
    return total;
}

double Tensor::frobenius_norm() const { return std::sqrt(blocked_sum_squares(data_)); }

Eigen::MatrixXd unfold(const Tensor& t, std::size_t mode) {
    check_mode(t, mode);
    const auto& dims = t.dims();
    std::size_t left, right;
    split_dims(dims, mode, left, right);
    const std::size_t n = dims[mode];

    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(left * right));
    // Column index of element (l, i, r) is l + left*r; the data offset is
    // l + left*(i + n*r). Copy one contiguous run of `left` entries at a time.
    const double* src = t.data().data();
#pragma omp parallel for collapse(2) schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(right); ++r) {
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const double* run = src + static_cast<std::size_t>(i) * left +
                                static_cast<std::size_t>(r) * left * n;
            for (std::size_t l = 0; l < left; ++l)
                m(i, static_cast<Eigen::Index>(l + left * static_cast<std::size_t>(r))) = run[l];
        }
    }
    return m;
}

Tensor fold(const Eigen::MatrixXd& m, std::size_t mode, std::vector<std::size_t> dims) {
    if (mode >= dims.size()) throw ArgumentError("fold: mode out of range");
    std::size_t left, right;
    split_dims(dims, mode, left, right);
    const std::size_t n = dims[mode];
    if (static_cast<std::size_t>(m.rows()) != n ||
        static_cast<std::size_t>(m.cols()) != left * right)
        throw ArgumentError("fold: matrix shape does not match dims");

    Tensor t(std::move(dims));
    double* dst = t.data().data();
#pragma omp parallel for collapse(2) schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(right); ++r) {
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            double* run = dst + static_cast<std::size_t>(i) * left +
                          static_cast<std::size_t>(r) * left * n;
            for (std::size_t l = 0; l < left; ++l)
                run[l] = m(i, static_cast<Eigen::Index>(l + left * static_cast<std::size_t>(r)));
        }
    }
    return t;
}

Tensor mode_multiply(const Tensor& t, const Eigen::MatrixXd& m, std::size_t mode) {
    check_mode(t, mode);
    const auto& dims = t.dims();
    const std::size_t n = dims[mode];
    if (static_cast<std::size_t>(m.cols()) != n)
        throw ArgumentError("mode_multiply: matrix has " + std::to_string(m.cols()) +
                            " columns but mode " + std::to_string(mode) + " has extent " +
                            std::to_string(n));
    const std::size_t q = static_cast<std::size_t>(m.rows());

    std::size_t left, right;
    split_dims(dims, mode, left, right);

    std::vector<std::size_t> out_dims = dims;
    out_dims[mode] = q;
    Tensor out(std::move(out_dims));

    const double* src = t.data().data();
    double* dst = out.data().data();

    if (left == 1) {
        // Mode 0: the tensor is already the n x right unfolding (column-major).
        Eigen::Map<const Eigen::MatrixXd> in(src, static_cast<Eigen::Index>(n),
                                             static_cast<Eigen::Index>(right));
        Eigen::Map<Eigen::MatrixXd> res(dst, static_cast<Eigen::Index>(q),
                                        static_cast<Eigen::Index>(right));
        res.noalias() = m * in;
        return out;
    }

    // Each right-slab is a contiguous column-major (left x n) block; the
    // output slab is (left x q) = slab * m^T. Slabs are independent.
    const Eigen::MatrixXd mt = m.transpose();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(right); ++r) {
        Eigen::Map<const Eigen::MatrixXd> in(src + static_cast<std::size_t>(r) * left * n,
                                             static_cast<Eigen::Index>(left),
                                             static_cast<Eigen::Index>(n));
        Eigen::Map<Eigen::MatrixXd> res(dst + static_cast<std::size_t>(r) * left * q,
                                        static_cast<Eigen::Index>(left),
                                        static_cast<Eigen::Index>(q));
        res.noalias() = in * mt;
    }
    return out;
}

Eigen::MatrixXd left_singular_vectors(const Eigen::MatrixXd& a, std::size_t r) {
    const std::size_t n = static_cast<std::size_t>(a.rows());
    if (r == 0 || r > n) throw ArgumentError("left_singular_vectors: rank out of range");

    Eigen::MatrixXd u;
    if (n <= kGramRowLimit) {
        // Gram route: only left vectors are needed and n is small.
        Eigen::MatrixXd gram(a.rows(), a.rows());
        gram.noalias() = a * a.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success)
            throw NumericalError("eigendecomposition of Gram matrix failed");
        // Eigenvalues come out ascending; take the top r in descending order.
        u.resize(a.rows(), static_cast<Eigen::Index>(r));
        for (std::size_t j = 0; j < r; ++j)
            u.col(static_cast<Eigen::Index>(j)) =
                eig.eigenvectors().col(static_cast<Eigen::Index>(n - 1 - j));
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
        if (svd.info() != Eigen::Success) throw NumericalError("SVD did not converge");
        u = svd.matrixU().leftCols(static_cast<Eigen::Index>(r));
    }

    // Deterministic sign: largest-magnitude entry of each column positive,
    // ties broken by lowest row index.
    for (Eigen::Index j = 0; j < u.cols(); ++j) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            const double v = std::abs(u(i, j));
            if (v > best) {
                best = v;
                imax = i;
            }
        }
        if (u(imax, j) < 0.0) u.col(j) = -u.col(j);
    }
    return u;
}

HosvdFactors hosvd(const Tensor& t, std::vector<std::size_t> ranks) {
    const std::size_t order = t.order();
    if (ranks.size() != order) throw ArgumentError("hosvd: ranks length must equal tensor order");
    for (std::size_t k = 0; k < order; ++k)
        if (ranks[k] == 0 || ranks[k] > t.dim(k))
            throw ArgumentError("hosvd: rank for mode " + std::to_string(k) +
                                " out of range 1.." + std::to_string(t.dim(k)));

    HosvdFactors f;
    f.ranks = ranks;
    f.factors.resize(order);
    for (std::size_t k = 0; k < order; ++k) {
        try {
            f.factors[k] = left_singular_vectors(unfold(t, k), ranks[k]);
        } catch (const NumericalError& e) {
            throw NumericalError("hosvd: mode " + std::to_string(k) + ": " + e.what());
        }
    }

    // Core = t x_0 U_0^T x_1 U_1^T ... (shrinks as it goes).
    Tensor core = t;
    for (std::size_t k = 0; k < order; ++k)
        core = mode_multiply(core, f.factors[k].transpose(), k);
    f.core = std::move(core);
    return f;
}

HosvdFactors hosvd(const Tensor& t) { return hosvd(t, t.dims()); }

Tensor reconstruct(const HosvdFactors& f) {
    Tensor t = f.core;
    for (std::size_t k = 0; k < f.factors.size(); ++k) t = mode_multiply(t, f.factors[k], k);
    return t;
}

double frobenius_residual(const Tensor& t, const HosvdFactors& f) {
    if (f.factors.size() != t.order())
        throw ArgumentError("frobenius_residual: factor count does not match tensor order");
    for (std::size_t k = 0; k < t.order(); ++k)
        if (static_cast<std::size_t>(f.factors[k].rows()) != t.dim(k))
            throw ArgumentError("frobenius_residual: factor rows mismatch at mode " +
                                std::to_string(k));
    Tensor rec = reconstruct(f);
    std::vector<double> diff(t.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(t.size()); ++i)
        diff[static_cast<std::size_t>(i)] =
            t[static_cast<std::size_t>(i)] - rec[static_cast<std::size_t>(i)];
    return std::sqrt(blocked_sum_squares(diff));
}

}  // namespace temu
