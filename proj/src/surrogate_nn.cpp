#include <cmath>

#include "surrogate_impl.hpp"
#include "temu/error.hpp"

namespace temu::detail {

namespace {

Eigen::MatrixXd logistic(const Eigen::MatrixXd& z) {
    return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

}  // namespace

// Single hidden layer of logistic units with a linear output, trained by
// full-batch gradient descent on half mean squared error; the step is halved
// whenever a step would increase the loss. Inputs are standardized and the
// target mean is absorbed into the model so training starts from residuals.
NnModel fit_nn(const TrainingSet& ts, const NnConfig& cfg, RngSeed seed) {
    if (cfg.hidden < 1 || cfg.max_epochs < 1) throw ArgumentError("NnConfig out of range");

    NnModel m;
    standardize_stats(ts.inputs, m.x_mean, m.x_scale);
    const Eigen::MatrixXd xs = standardize(ts.inputs, m.x_mean, m.x_scale);
    m.target_mean = ts.targets.mean();
    const Eigen::VectorXd yc = ts.targets.array() - m.target_mean;

    Rng rng(seed);
    const Eigen::Index h = cfg.hidden;
    const Eigen::Index d = ts.inputs.cols();
    m.w1.resize(h, d);
    m.b1.resize(h);
    m.w2.resize(h);
    // Hidden weights random (symmetry breaking); output weights zero so the
    // initial prediction is exactly the target mean.
    for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index j = 0; j < d; ++j) m.w1(i, j) = 0.5 * rng.normal();
    for (Eigen::Index i = 0; i < h; ++i) m.b1(i) = 0.5 * rng.normal();
    m.w2.setZero();
    m.b2 = 0.0;

    double step = cfg.init_step;
    double loss = nn_detail::loss(m, xs, yc);
    if (!std::isfinite(loss)) throw TrainingError("NN: non-finite initial loss");

    Eigen::VectorXd w = nn_detail::pack(m);
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const Eigen::VectorXd g = nn_detail::gradient(m, xs, yc);
        const Eigen::VectorXd w_new = w - step * g;
        NnModel trial = m;
        nn_detail::unpack(trial, w_new);
        const double loss_new = nn_detail::loss(trial, xs, yc);
        if (!std::isfinite(loss_new)) throw TrainingError("NN: training loss diverged");
        if (loss_new > loss) {
            step *= 0.5;
            if (step < 1e-14) break;
            continue;
        }
        const double rel = std::abs(loss - loss_new) / std::max(loss, 1e-300);
        w = w_new;
        m = std::move(trial);
        loss = loss_new;
        if (rel < cfg.rel_tol) break;
    }
    return m;
}

}  // namespace temu::detail

namespace temu {

double NnModel::predict(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xs = (x - x_mean).array() / x_scale.array();
    const Eigen::VectorXd z = w1 * xs + b1;
    const Eigen::VectorXd h = (1.0 / (1.0 + (-z.array()).exp())).matrix();
    return target_mean + w2.dot(h) + b2;
}

namespace nn_detail {

double loss(const NnModel& m, const Eigen::MatrixXd& x_std, const Eigen::VectorXd& y_centered) {
    const Eigen::MatrixXd z = (m.w1 * x_std.transpose()).colwise() + m.b1;  // h x n
    const Eigen::MatrixXd a = detail::logistic(z);
    const Eigen::VectorXd pred = (a.transpose() * m.w2).array() + m.b2;
    return 0.5 * (pred - y_centered).squaredNorm() / static_cast<double>(x_std.rows());
}

Eigen::VectorXd gradient(const NnModel& m, const Eigen::MatrixXd& x_std,
                         const Eigen::VectorXd& y_centered) {
    const auto n = static_cast<double>(x_std.rows());
    const Eigen::MatrixXd z = (m.w1 * x_std.transpose()).colwise() + m.b1;  // h x n
    const Eigen::MatrixXd a = detail::logistic(z);
    const Eigen::VectorXd pred = (a.transpose() * m.w2).array() + m.b2;
    const Eigen::VectorXd resid = (pred - y_centered) / n;

    const Eigen::VectorXd g_w2 = a * resid;
    const double g_b2 = resid.sum();
    // dz = (w2 outer resid) .* a .* (1-a)
    const Eigen::MatrixXd dz =
        (m.w2 * resid.transpose()).array() * a.array() * (1.0 - a.array());
    const Eigen::MatrixXd g_w1 = dz * x_std;
    const Eigen::VectorXd g_b1 = dz.rowwise().sum();

    Eigen::VectorXd g(m.w1.size() + m.b1.size() + m.w2.size() + 1);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < m.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < m.w1.cols(); ++j) g(at++) = g_w1(i, j);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) g(at++) = g_b1(i);
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) g(at++) = g_w2(i);
    g(at) = g_b2;
    return g;
}

Eigen::VectorXd pack(const NnModel& m) {
    Eigen::VectorXd w(m.w1.size() + m.b1.size() + m.w2.size() + 1);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < m.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < m.w1.cols(); ++j) w(at++) = m.w1(i, j);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) w(at++) = m.b1(i);
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) w(at++) = m.w2(i);
    w(at) = m.b2;
    return w;
}

void unpack(NnModel& m, const Eigen::VectorXd& w) {
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < m.w1.rows(); ++i)
        for (Eigen::Index j = 0; j < m.w1.cols(); ++j) m.w1(i, j) = w(at++);
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1(i) = w(at++);
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2(i) = w(at++);
    m.b2 = w(at);
}

}  // namespace nn_detail
}  // namespace temu
