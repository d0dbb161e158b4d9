#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "surrogate_impl.hpp"
#include "temu/error.hpp"

namespace temu::detail {

namespace {

// Median pairwise Euclidean distance (lower median). Rows are subsampled to
// at most 1024 when n is large; the subsample is seed-deterministic.
double median_pairwise_distance(const Eigen::MatrixXd& x, RngSeed seed) {
    constexpr std::size_t kMaxRows = 1024;
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::size_t> rows;
    if (n <= kMaxRows) {
        rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    } else {
        Rng rng(seed);
        auto perm = rng.permutation(n);
        rows.assign(perm.begin(), perm.begin() + kMaxRows);
        std::sort(rows.begin(), rows.end());
    }
    std::vector<double> d2;
    d2.reserve(rows.size() * (rows.size() - 1) / 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = i + 1; j < rows.size(); ++j)
            d2.push_back((x.row(static_cast<Eigen::Index>(rows[i])) -
                          x.row(static_cast<Eigen::Index>(rows[j])))
                             .squaredNorm());
    if (d2.empty()) return 1.0;
    const std::size_t mid = (d2.size() - 1) / 2;
    std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
    return std::sqrt(d2[mid]);
}

// K(i,j) = sv * exp(-||xi-xj||^2 / (2 l^2)), built from the inner-product
// expansion so the heavy part is one symmetric GEMM.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double lengthscale, double sv) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    k.noalias() = x * x.transpose();
    Eigen::VectorXd sq = k.diagonal();
    const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            k(i, j) = sv * std::exp(-(sq(i) + sq(j) - 2.0 * k(i, j)) * inv);
    return k;
}

struct CholResult {
    Eigen::VectorXd alpha;
    double log_marginal;
};

CholResult solve_gp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y_centered,
                    double lengthscale, double sv, double nugget) {
    Eigen::MatrixXd k = kernel_matrix(x, lengthscale, sv);
    k.diagonal().array() += nugget;
    // In-place Cholesky: the 1e4-point baseline fit would otherwise need a
    // second 800 MB copy of the kernel matrix.
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(k);
    if (llt.info() != Eigen::Success)
        throw NumericalError("GP kernel matrix not positive definite after nugget");
    CholResult r;
    r.alpha = llt.solve(y_centered);
    const double n = static_cast<double>(x.rows());
    r.log_marginal = -0.5 * y_centered.dot(r.alpha) -
                     llt.matrixLLT().diagonal().array().log().sum() -
                     0.5 * n * std::log(2.0 * std::numbers::pi);
    return r;
}

}  // namespace

GpModel fit_gp(const TrainingSet& ts, const GpConfig& cfg, RngSeed seed) {
    GpModel m;
    standardize_stats(ts.inputs, m.x_mean, m.x_scale);
    m.inputs = standardize(ts.inputs, m.x_mean, m.x_scale);
    m.target_mean = ts.targets.mean();
    const Eigen::VectorXd yc = ts.targets.array() - m.target_mean;

    const double var = ts.inputs.rows() > 1
                           ? yc.squaredNorm() / static_cast<double>(ts.inputs.rows() - 1)
                           : 0.0;
    m.signal_variance = cfg.signal_variance > 0.0 ? cfg.signal_variance
                        : var > 0.0               ? var
                                                  : 1.0;
    m.nugget = cfg.nugget_rel * m.signal_variance;

    double base_l = cfg.lengthscale > 0.0 ? cfg.lengthscale
                                          : median_pairwise_distance(m.inputs, seed.child(0));
    if (!(base_l > 0.0)) throw NumericalError("GP lengthscale heuristic degenerated to zero");

    if (!cfg.tune_lengthscale) {
        m.lengthscale = base_l;
        m.alpha = solve_gp(m.inputs, yc, m.lengthscale, m.signal_variance, m.nugget).alpha;
        return m;
    }

    double best_lml = -std::numeric_limits<double>::infinity();
    for (double mult : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double l = mult * base_l;
        CholResult r = solve_gp(m.inputs, yc, l, m.signal_variance, m.nugget);
        if (r.log_marginal > best_lml) {
            best_lml = r.log_marginal;
            m.lengthscale = l;
            m.alpha = std::move(r.alpha);
        }
    }
    return m;
}

}  // namespace temu::detail

namespace temu {

double GpModel::predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xs =
        (x - x_mean).array() / x_scale.array();
    const double inv = 1.0 / (2.0 * lengthscale * lengthscale);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        const double d2 = (inputs.row(i).transpose() - xs).squaredNorm();
        acc += alpha(i) * signal_variance * std::exp(-d2 * inv);
    }
    return target_mean + acc;
}

}  // namespace temu
