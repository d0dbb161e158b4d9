#include "temu/emulator.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "temu/error.hpp"

namespace temu {

namespace {

// Predicted factor row for a Learned mode at one query point.
Eigen::RowVectorXd predict_row(const std::vector<Surrogate>& surrogates,
                               const Eigen::VectorXd& coords, std::size_t mode) {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(surrogates.size()));
    for (std::size_t j = 0; j < surrogates.size(); ++j) {
        const double v = surrogates[j].predict(coords);
        if (!std::isfinite(v))
            throw NumericalError("emulate: non-finite surrogate output at mode " +
                                 std::to_string(mode) + ", column " + std::to_string(j));
        row(static_cast<Eigen::Index>(j)) = v;
    }
    return row;
}

// Core product given one row vector per Learned mode. Learned modes collapse
// to extent 1 first (cheapest order), then Grid modes expand; the collapsed
// dimensions are squeezed out of the result.
Tensor assemble(const TensorEmulator& e, const std::vector<Eigen::RowVectorXd>& rows) {
    Tensor acc = e.factors.core;
    for (std::size_t k = 0; k < e.order(); ++k)
        if (e.specs[k].learned) acc = mode_multiply(acc, rows[k], k);
    for (std::size_t k = 0; k < e.order(); ++k)
        if (!e.specs[k].learned) acc = mode_multiply(acc, e.factors.factors[k], k);

    std::vector<std::size_t> out_dims;
    for (std::size_t k = 0; k < e.order(); ++k)
        if (!e.specs[k].learned) out_dims.push_back(static_cast<std::size_t>(
            e.factors.factors[k].rows()));
    if (out_dims.empty()) out_dims.push_back(1);
    return Tensor(std::move(out_dims), std::move(acc.data()));
}

void check_query(const TensorEmulator& e, const Query& query) {
    std::size_t qi = 0;
    for (std::size_t k = 0; k < e.order(); ++k) {
        if (!e.specs[k].learned) continue;
        if (qi >= query.size())
            throw ArgumentError("emulate: query is missing coordinates for mode " +
                                std::to_string(k));
        const auto d = e.specs[k].inputs.cols();
        if (query[qi].size() != d)
            throw ArgumentError("emulate: mode " + std::to_string(k) + " expects " +
                                std::to_string(d) + "-dimensional coordinates, got " +
                                std::to_string(query[qi].size()));
        ++qi;
    }
    if (qi != query.size())
        throw ArgumentError("emulate: query has " + std::to_string(query.size()) +
                            " coordinate vectors, emulator has " + std::to_string(qi) +
                            " learned modes");
}

}  // namespace

TensorEmulator build_emulator(const Tensor& t, std::vector<std::size_t> ranks,
                              std::vector<ModeSpec> specs, RngSeed seed) {
    if (specs.size() != t.order())
        throw ArgumentError("build_emulator: one ModeSpec per tensor mode required");
    for (std::size_t k = 0; k < specs.size(); ++k)
        if (specs[k].learned &&
            static_cast<std::size_t>(specs[k].inputs.rows()) != t.dim(k))
            throw ArgumentError("build_emulator: mode " + std::to_string(k) + " has " +
                                std::to_string(t.dim(k)) + " grid points but " +
                                std::to_string(specs[k].inputs.rows()) + " input rows");

    TensorEmulator e;
    e.factors = hosvd(t, std::move(ranks));
    e.specs = std::move(specs);
    e.surrogates.resize(e.order());
    e.residuals.assign(e.order(), Eigen::MatrixXd());

    for (std::size_t k = 0; k < e.order(); ++k) {
        if (!e.specs[k].learned) continue;
        const Eigen::MatrixXd& factor = e.factors.factors[k];
        e.surrogates[k] = fit_mode_surrogates(e.specs[k].inputs, factor, e.specs[k].kind,
                                              e.specs[k].config, seed.child(k));

        // Training residuals: row j of U_k minus the surrogate predictions at
        // training input j; kept for bootstrap sampling.
        Eigen::MatrixXd resid(factor.rows(), factor.cols());
#pragma omp parallel for schedule(dynamic)
        for (Eigen::Index j = 0; j < factor.rows(); ++j) {
            const Eigen::VectorXd xin = e.specs[k].inputs.row(j).transpose();
            for (Eigen::Index c = 0; c < factor.cols(); ++c)
                resid(j, c) =
                    factor(j, c) - e.surrogates[k][static_cast<std::size_t>(c)].predict(xin);
        }
        e.residuals[k] = std::move(resid);
    }
    return e;
}

Tensor emulate(const TensorEmulator& e, const Query& query) {
    check_query(e, query);
    std::vector<Eigen::RowVectorXd> rows(e.order());
    std::size_t qi = 0;
    for (std::size_t k = 0; k < e.order(); ++k)
        if (e.specs[k].learned) rows[k] = predict_row(e.surrogates[k], query[qi++], k);
    return assemble(e, rows);
}

double emulate_scalar(const TensorEmulator& e, const Query& query) {
    const Tensor t = emulate(e, query);
    if (t.size() != 1)
        throw ArgumentError("emulate_scalar: emulator has grid modes; output is a tensor");
    return t[0];
}

std::vector<Tensor> bootstrap_predict(const TensorEmulator& e, const Query& query, std::size_t b,
                                      RngSeed seed) {
    if (b < 1) throw ArgumentError("bootstrap_predict: B must be >= 1");
    check_query(e, query);
    for (std::size_t k = 0; k < e.order(); ++k)
        if (e.specs[k].learned && e.residuals[k].rows() == 0)
            throw ArgumentError("bootstrap_predict: empty residual matrix for mode " +
                                std::to_string(k));

    // The predicted rows are shared by every replicate.
    std::vector<Eigen::RowVectorXd> base_rows(e.order());
    std::size_t qi = 0;
    for (std::size_t k = 0; k < e.order(); ++k)
        if (e.specs[k].learned) base_rows[k] = predict_row(e.surrogates[k], query[qi++], k);

    std::vector<Tensor> out(b);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t rep = 0; rep < static_cast<std::ptrdiff_t>(b); ++rep) {
        Rng rng(seed.child(static_cast<std::uint64_t>(rep)));
        auto rows = base_rows;
        for (std::size_t k = 0; k < e.order(); ++k) {
            if (!e.specs[k].learned) continue;
            const auto r = static_cast<std::size_t>(
                rng.below(static_cast<std::uint64_t>(e.residuals[k].rows())));
            rows[k] += e.residuals[k].row(static_cast<Eigen::Index>(r));
        }
        out[static_cast<std::size_t>(rep)] = assemble(e, rows);
    }
    return out;
}

SvdEmulator build_svd_emulator(const Eigen::MatrixXd& c, std::size_t r, SurrogateKind kind,
                               const Eigen::MatrixXd& inputs, const SurrogateConfig& cfg,
                               RngSeed seed) {
    const auto rows = static_cast<std::size_t>(c.rows());
    const auto cols = static_cast<std::size_t>(c.cols());
    if (r == 0 || r > std::min(rows, cols))
        throw ArgumentError("build_svd_emulator: rank out of range");
    if (static_cast<std::size_t>(inputs.rows()) != cols)
        throw ArgumentError("build_svd_emulator: one input row per simulator run required");

    // Right singular vectors via the same primitive the HOSVD uses (they are
    // the left singular vectors of c^T, under the same sign convention), so
    // the first r columns of U D can be formed as c V_r. Training targets are
    // then bit-identical to the 2-mode tensor emulator's mode-1 factor.
    const Eigen::MatrixXd v = left_singular_vectors(c.transpose(), r);

    SvdEmulator e;
    e.basis = c * v;
    e.surrogates = fit_mode_surrogates(inputs, v, kind, cfg, seed);
    e.residuals.resize(v.rows(), v.cols());
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
        const Eigen::VectorXd xin = inputs.row(j).transpose();
        for (Eigen::Index col = 0; col < v.cols(); ++col)
            e.residuals(j, col) = v(j, col) - e.surrogates[static_cast<std::size_t>(col)].predict(xin);
    }
    return e;
}

Eigen::VectorXd svd_emulate(const SvdEmulator& e, const Eigen::VectorXd& theta) {
    Eigen::VectorXd coeff(static_cast<Eigen::Index>(e.surrogates.size()));
    for (std::size_t j = 0; j < e.surrogates.size(); ++j) {
        const double v = e.surrogates[j].predict(theta);
        if (!std::isfinite(v))
            throw NumericalError("svd_emulate: non-finite surrogate output, column " +
                                 std::to_string(j));
        coeff(static_cast<Eigen::Index>(j)) = v;
    }
    return e.basis * coeff;
}

}  // namespace temu
