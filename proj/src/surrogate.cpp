#include "temu/surrogate.hpp"

#include <algorithm>
#include <cmath>

#include "surrogate_impl.hpp"
#include "temu/error.hpp"
#include "temu/io.hpp"

namespace temu {

const char* to_string(SurrogateKind k) {
    switch (k) {
        case SurrogateKind::gp: return "gp";
        case SurrogateKind::rf: return "rf";
        case SurrogateKind::nn: return "nn";
    }
    return "?";
}

SurrogateKind surrogate_kind_from_string(const std::string& s) {
    if (s == "gp") return SurrogateKind::gp;
    if (s == "rf") return SurrogateKind::rf;
    if (s == "nn") return SurrogateKind::nn;
    throw ArgumentError("unknown surrogate kind '" + s + "' (expected gp|rf|nn)");
}

void TrainingSet::validate(bool require_unique_rows) const {
    if (inputs.rows() < 2) throw ArgumentError("TrainingSet: need at least 2 examples");
    if (inputs.rows() != targets.size())
        throw ArgumentError("TrainingSet: inputs rows and targets length differ");
    if (!inputs.allFinite() || !targets.allFinite())
        throw ArgumentError("TrainingSet: non-finite values");
    if (require_unique_rows) {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(inputs.rows()));
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
        auto row_less = [&](Eigen::Index a, Eigen::Index b) {
            for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
                if (inputs(a, j) < inputs(b, j)) return true;
                if (inputs(a, j) > inputs(b, j)) return false;
            }
            return false;
        };
        std::sort(order.begin(), order.end(), row_less);
        for (std::size_t i = 1; i < order.size(); ++i)
            if (inputs.row(order[i - 1]) == inputs.row(order[i]))
                throw ArgumentError("TrainingSet: duplicate input rows " +
                                    std::to_string(order[i - 1]) + " and " +
                                    std::to_string(order[i]) + " (GP requires unique)");
    }
}

namespace detail {

void standardize_stats(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
    const auto n = static_cast<double>(x.rows());
    mean = x.colwise().mean();
    scale.resize(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double ss = (x.col(j).array() - mean(j)).square().sum();
        const double sd = x.rows() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        scale(j) = sd > 0.0 ? sd : 1.0;
    }
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& scale) {
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace detail

SurrogateKind Surrogate::kind() const {
    if (std::holds_alternative<GpModel>(model_)) return SurrogateKind::gp;
    if (std::holds_alternative<RfModel>(model_)) return SurrogateKind::rf;
    return SurrogateKind::nn;
}

Eigen::Index Surrogate::input_dim() const {
    return std::visit(
        [](const auto& m) -> Eigen::Index {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, RfModel>)
                return m.dim;
            else
                return m.x_mean.size();
        },
        model_);
}

double Surrogate::predict(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim())
        throw ArgumentError("predict: query has dimension " + std::to_string(x.size()) +
                            ", model expects " + std::to_string(input_dim()));
    if (!x.allFinite()) throw ArgumentError("predict: non-finite query");
    return std::visit([&](const auto& m) { return m.predict(x); }, model_);
}

Surrogate fit(SurrogateKind kind, const TrainingSet& ts, const SurrogateConfig& cfg,
              RngSeed seed) {
    ts.validate(kind == SurrogateKind::gp);
    switch (kind) {
        case SurrogateKind::gp: return Surrogate(detail::fit_gp(ts, cfg.gp, seed));
        case SurrogateKind::rf: return Surrogate(detail::fit_rf(ts, cfg.rf, seed));
        case SurrogateKind::nn: return Surrogate(detail::fit_nn(ts, cfg.nn, seed));
    }
    throw ArgumentError("fit: bad kind");
}

std::vector<Surrogate> fit_mode_surrogates(const Eigen::MatrixXd& inputs,
                                           const Eigen::MatrixXd& factor, SurrogateKind kind,
                                           const SurrogateConfig& cfg, RngSeed seed) {
    if (inputs.rows() != factor.rows())
        throw ArgumentError("fit_mode_surrogates: inputs and factor row counts differ");
    const auto r = factor.cols();
    std::vector<Surrogate> out(static_cast<std::size_t>(r));
    std::exception_ptr err;
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index j = 0; j < r; ++j) {
        try {
            TrainingSet ts{inputs, factor.col(j)};
            out[static_cast<std::size_t>(j)] =
                fit(kind, ts, cfg, seed.child(static_cast<std::uint64_t>(j)));
        } catch (...) {
#pragma omp critical
            if (!err) err = std::current_exception();
        }
    }
    if (err) std::rethrow_exception(err);
    return out;
}

// ---- serialization ----------------------------------------------------

void Surrogate::save(std::ostream& out) const {
    put_u64(out, static_cast<std::uint64_t>(kind()));
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, GpModel>) {
                put_matrix(out, m.inputs);
                put_matrix(out, m.alpha);
                put_matrix(out, m.x_mean);
                put_matrix(out, m.x_scale);
                put_f64(out, m.target_mean);
                put_f64(out, m.lengthscale);
                put_f64(out, m.signal_variance);
                put_f64(out, m.nugget);
            } else if constexpr (std::is_same_v<T, RfModel>) {
                put_u64(out, static_cast<std::uint64_t>(m.dim));
                put_u64(out, m.trees.size());
                for (const auto& tree : m.trees) {
                    put_u64(out, tree.size());
                    for (const auto& nd : tree) {
                        put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(nd.feature)));
                        put_f64(out, nd.threshold);
                        put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(nd.left)));
                        put_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(nd.right)));
                        put_f64(out, nd.value);
                    }
                }
            } else {
                put_matrix(out, m.w1);
                put_matrix(out, m.b1);
                put_matrix(out, m.w2);
                put_f64(out, m.b2);
                put_matrix(out, m.x_mean);
                put_matrix(out, m.x_scale);
                put_f64(out, m.target_mean);
            }
        },
        model_);
}

Surrogate Surrogate::load(std::istream& in) {
    const auto kind = static_cast<SurrogateKind>(get_u64(in));
    switch (kind) {
        case SurrogateKind::gp: {
            GpModel m;
            m.inputs = get_matrix(in);
            m.alpha = get_matrix(in);
            m.x_mean = get_matrix(in);
            m.x_scale = get_matrix(in);
            m.target_mean = get_f64(in);
            m.lengthscale = get_f64(in);
            m.signal_variance = get_f64(in);
            m.nugget = get_f64(in);
            return Surrogate(std::move(m));
        }
        case SurrogateKind::rf: {
            RfModel m;
            m.dim = static_cast<std::int32_t>(get_u64(in));
            m.trees.resize(get_u64(in));
            for (auto& tree : m.trees) {
                tree.resize(get_u64(in));
                for (auto& nd : tree) {
                    nd.feature = static_cast<std::int32_t>(static_cast<std::int64_t>(get_u64(in)));
                    nd.threshold = get_f64(in);
                    nd.left = static_cast<std::int32_t>(static_cast<std::int64_t>(get_u64(in)));
                    nd.right = static_cast<std::int32_t>(static_cast<std::int64_t>(get_u64(in)));
                    nd.value = get_f64(in);
                }
            }
            return Surrogate(std::move(m));
        }
        case SurrogateKind::nn: {
            NnModel m;
            m.w1 = get_matrix(in);
            m.b1 = get_matrix(in);
            m.w2 = get_matrix(in);
            m.b2 = get_f64(in);
            m.x_mean = get_matrix(in);
            m.x_scale = get_matrix(in);
            m.target_mean = get_f64(in);
            return Surrogate(std::move(m));
        }
    }
    throw IoError("surrogate: bad kind tag");
}

}  // namespace temu
