#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace temu {

/// Dense K-way real tensor.
///
/// Linearization is colexicographic: the FIRST index varies fastest, i.e.
/// flat = i0 + n0*(i1 + n1*(i2 + ...)). An order-2 tensor is therefore a
/// column-major matrix, and the mode-0 unfolding is a plain reshape.
class Tensor {
public:
    Tensor() = default;

    /// Zero tensor with the given dimensions.
    explicit Tensor(std::vector<std::size_t> dims);

    Tensor(std::vector<std::size_t> dims, std::vector<double> data);

    static Tensor from_matrix(const Eigen::MatrixXd& m);

    [[nodiscard]] std::size_t order() const { return dims_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& dims() const { return dims_; }
    [[nodiscard]] std::size_t dim(std::size_t mode) const { return dims_[mode]; }
    [[nodiscard]] std::size_t size() const { return data_.size(); }

    [[nodiscard]] double operator[](std::size_t flat) const { return data_[flat]; }
    [[nodiscard]] double& operator[](std::size_t flat) { return data_[flat]; }

    /// Flat offset of a multi-index (no bounds check beyond size in debug).
    [[nodiscard]] std::size_t offset(std::span<const std::size_t> idx) const;
    [[nodiscard]] double at(std::span<const std::size_t> idx) const { return data_[offset(idx)]; }
    [[nodiscard]] double& at(std::span<const std::size_t> idx) { return data_[offset(idx)]; }

    [[nodiscard]] const std::vector<double>& data() const { return data_; }
    [[nodiscard]] std::vector<double>& data() { return data_; }

    /// Frobenius norm, deterministic for any thread count.
    [[nodiscard]] double frobenius_norm() const;

    /// Order-2 tensor viewed as an Eigen matrix (copy).
    [[nodiscard]] Eigen::MatrixXd as_matrix() const;

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

/// Mode-n unfolding, modes 0-based. Row i holds every mode-`mode` fiber's
/// i-th entry; columns enumerate the remaining modes in ascending mode index
/// with earlier modes varying fastest (Kolda-Bader convention).
[[nodiscard]] Eigen::MatrixXd unfold(const Tensor& t, std::size_t mode);

/// Inverse of unfold for a tensor with dimensions `dims`.
[[nodiscard]] Tensor fold(const Eigen::MatrixXd& m, std::size_t mode, std::vector<std::size_t> dims);

/// Mode-n tensor-matrix product: fold(m * unfold(t, mode), mode). The matrix
/// has shape q x n_mode; the result replaces dimension `mode` with q.
[[nodiscard]] Tensor mode_multiply(const Tensor& t, const Eigen::MatrixXd& m, std::size_t mode);

/// Truncated higher-order SVD: per-mode orthonormal factors plus core.
struct HosvdFactors {
    Tensor core;                           // dims r_0..r_{K-1}
    std::vector<Eigen::MatrixXd> factors;  // factor k is n_k x r_k
    std::vector<std::size_t> ranks;
};

/// First r left singular vectors of a (sign convention: the largest-magnitude
/// entry of each column is made positive, ties broken by lowest row index).
/// Uses an eigendecomposition of the Gram matrix a*a^T when a has at most
/// `gram_row_limit` rows (only the left vectors are needed and the unfoldings
/// here are short and very wide), otherwise a thin SVD.
[[nodiscard]] Eigen::MatrixXd left_singular_vectors(const Eigen::MatrixXd& a, std::size_t r);

/// HOSVD truncated to `ranks` (1 <= r_k <= n_k). Factor k holds the leading
/// r_k left singular vectors of unfold(t, k) computed from the original
/// tensor; the core is t contracted with every factor transposed.
[[nodiscard]] HosvdFactors hosvd(const Tensor& t, std::vector<std::size_t> ranks);

/// Full-rank HOSVD.
[[nodiscard]] HosvdFactors hosvd(const Tensor& t);

/// Z x_0 U_0 x_1 U_1 ... ; recovers t exactly at full ranks.
[[nodiscard]] Tensor reconstruct(const HosvdFactors& f);

/// || t - reconstruct(f) ||_F
[[nodiscard]] double frobenius_residual(const Tensor& t, const HosvdFactors& f);

/// Deterministic sum of squares over a range (fixed-size blocks accumulated
/// in block order, so the result is identical for any OpenMP thread count).
[[nodiscard]] double blocked_sum_squares(std::span<const double> xs);

}  // namespace temu
