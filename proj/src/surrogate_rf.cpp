#include <algorithm>
#include <cmath>
#include <numeric>

#include "surrogate_impl.hpp"
#include "temu/error.hpp"

namespace temu::detail {

namespace {

// Regression forest with variance-reduction splits: 500 trees, bootstrap row
// resampling, mtry = max(1, floor(d/3)) candidate features per split, nodes
// with <= min_node rows become leaves. Rows are put into a canonical order
// (lexicographic by input row, then target) before any seeded sampling, so
// the fit is invariant to the caller's row ordering.

struct TreeBuilder {
    const Eigen::MatrixXd& x;
    const Eigen::VectorXd& y;
    int mtry;
    int min_node;
    Rng rng;
    std::vector<RfNode> nodes;
    std::vector<std::size_t> rows;  // bootstrap sample, partitioned in place

    // Scratch reused across nodes.
    std::vector<std::pair<double, std::size_t>> sorted;
    std::vector<int> features;

    std::int32_t build(std::size_t lo, std::size_t hi) {
        const std::int32_t id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();

        const std::size_t n = hi - lo;
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double t = y(static_cast<Eigen::Index>(rows[i]));
            sum += t;
            sumsq += t * t;
        }
        const double mean = sum / static_cast<double>(n);
        const double sse = sumsq - sum * mean;

        if (n <= static_cast<std::size_t>(min_node) || sse <= 1e-14 * std::max(1.0, sumsq)) {
            nodes[static_cast<std::size_t>(id)].value = mean;
            return id;
        }

        // Candidate features: mtry distinct, evaluated in ascending index order.
        const int d = static_cast<int>(x.cols());
        features.resize(static_cast<std::size_t>(d));
        std::iota(features.begin(), features.end(), 0);
        for (int k = 0; k < mtry; ++k) {
            const auto j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(d - k)));
            std::swap(features[static_cast<std::size_t>(k)], features[static_cast<std::size_t>(j)]);
        }
        std::sort(features.begin(), features.begin() + mtry);

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = -1.0;  // sum_L^2/n_L + sum_R^2/n_R - sum^2/n
        for (int fi = 0; fi < mtry; ++fi) {
            const int f = features[static_cast<std::size_t>(fi)];
            sorted.clear();
            for (std::size_t i = lo; i < hi; ++i)
                sorted.emplace_back(x(static_cast<Eigen::Index>(rows[i]), f), rows[i]);
            std::sort(sorted.begin(), sorted.end());

            double left_sum = 0.0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += y(static_cast<Eigen::Index>(sorted[i].second));
                if (sorted[i].first == sorted[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1);
                const double nr = static_cast<double>(n - i - 1);
                const double right_sum = sum - left_sum;
                const double score =
                    left_sum * left_sum / nl + right_sum * right_sum / nr - sum * mean;
                if (score > best_score) {
                    best_score = score;
                    best_feature = f;
                    best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
                }
            }
        }

        if (best_feature < 0) {  // all candidate features constant on this node
            nodes[static_cast<std::size_t>(id)].value = mean;
            return id;
        }

        // Deterministic two-pass partition preserving relative order.
        std::vector<std::size_t> left, right;
        left.reserve(n);
        right.reserve(n);
        for (std::size_t i = lo; i < hi; ++i) {
            if (x(static_cast<Eigen::Index>(rows[i]), best_feature) <= best_threshold)
                left.push_back(rows[i]);
            else
                right.push_back(rows[i]);
        }
        std::copy(left.begin(), left.end(), rows.begin() + static_cast<std::ptrdiff_t>(lo));
        std::copy(right.begin(), right.end(),
                  rows.begin() + static_cast<std::ptrdiff_t>(lo + left.size()));

        nodes[static_cast<std::size_t>(id)].feature = best_feature;
        nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
        const std::int32_t l = build(lo, lo + left.size());
        const std::int32_t r = build(lo + left.size(), hi);
        nodes[static_cast<std::size_t>(id)].left = l;
        nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }
};

}  // namespace

RfModel fit_rf(const TrainingSet& ts, const RfConfig& cfg, RngSeed seed) {
    if (cfg.n_trees < 1 || cfg.min_node < 1) throw ArgumentError("RfConfig out of range");
    const auto n = static_cast<std::size_t>(ts.inputs.rows());
    const int d = static_cast<int>(ts.inputs.cols());
    const int mtry = cfg.mtry > 0 ? std::min(cfg.mtry, d) : std::max(1, d / 3);

    // Canonical row order: lexicographic by inputs, target breaks ties.
    std::vector<std::size_t> canon(n);
    std::iota(canon.begin(), canon.end(), std::size_t{0});
    std::sort(canon.begin(), canon.end(), [&](std::size_t a, std::size_t b) {
        for (Eigen::Index j = 0; j < ts.inputs.cols(); ++j) {
            const double va = ts.inputs(static_cast<Eigen::Index>(a), j);
            const double vb = ts.inputs(static_cast<Eigen::Index>(b), j);
            if (va < vb) return true;
            if (va > vb) return false;
        }
        return ts.targets(static_cast<Eigen::Index>(a)) < ts.targets(static_cast<Eigen::Index>(b));
    });

    RfModel model;
    model.dim = d;
    model.trees.resize(static_cast<std::size_t>(cfg.n_trees));
#pragma omp parallel for schedule(dynamic)
    for (int t = 0; t < cfg.n_trees; ++t) {
        TreeBuilder b{ts.inputs, ts.targets,          mtry, cfg.min_node,
                      Rng(seed.child(static_cast<std::uint64_t>(t))), {}, {}, {}, {}};
        b.rows.resize(n);
        for (std::size_t i = 0; i < n; ++i) b.rows[i] = canon[b.rng.below(n)];
        b.nodes.reserve(2 * n / static_cast<std::size_t>(cfg.min_node) + 4);
        b.build(0, n);
        model.trees[static_cast<std::size_t>(t)] = std::move(b.nodes);
    }
    return model;
}

}  // namespace temu::detail

namespace temu {

double RfModel::predict(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (const auto& tree : trees) {
        std::size_t i = 0;
        while (tree[i].feature >= 0)
            i = static_cast<std::size_t>(x(tree[i].feature) <= tree[i].threshold ? tree[i].left
                                                                                 : tree[i].right);
        acc += tree[i].value;
    }
    return acc / static_cast<double>(trees.size());
}

}  // namespace temu
