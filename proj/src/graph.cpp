#include "pcgnn/graph.hpp"

#include <cmath>
#include <limits>

namespace pcgnn {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::hD: return "hD";
        case Variant::dD: return "dD";
        case Variant::hH: return "hH";
    }
    return "?";
}

Variant variant_from_name(const std::string& name) {
    if (name == "hD") return Variant::hD;
    if (name == "dD") return Variant::dD;
    if (name == "hH") return Variant::hH;
    throw std::invalid_argument("unknown variant: " + name);
}

FeatureGraph build_graph(const Snapshot& snapshot, Variant variant) {
    const int n = snapshot.n();
    FeatureGraph g;
    g.variant = variant;
    g.normalized = false;
    g.node_features.resize(n);
    g.edge_features = Mat(n, n, std::numeric_limits<double>::quiet_NaN());

    for (int i = 0; i < n; ++i)
        g.node_features[i] =
            variant == Variant::dD ? snapshot.distance(i, i) : snapshot.gain(i, i);

    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            if (m == j) continue;
            g.edge_features(m, j) =
                variant == Variant::hH ? snapshot.gain(m, j) : snapshot.distance(m, j);
        }
    return g;
}

namespace {

struct RunningStats {
    double sum = 0.0, sum_sq = 0.0;
    size_t count = 0;
    void add(double x) {
        sum += x;
        sum_sq += x * x;
        ++count;
    }
    double mean() const { return sum / static_cast<double>(count); }
    double stddev() const {
        const double m = mean();
        const double var = sum_sq / static_cast<double>(count) - m * m;
        return var > 0.0 ? std::sqrt(var) : 0.0;
    }
};

FeatureTransform fit_transform(const RunningStats& stats, bool log_db, double pre_scale) {
    FeatureTransform t;
    t.log_db = log_db;
    t.pre_scale = pre_scale;
    t.shift = stats.mean();
    const double sd = stats.stddev();
    t.scale = sd > 1e-12 ? sd : 1.0;
    return t;
}

} // namespace

Normalizer fit_normalizer(const std::vector<FeatureGraph>& graphs, double area_side_m) {
    if (graphs.empty()) throw std::invalid_argument("fit_normalizer: no graphs");
    const Variant variant = graphs.front().variant;
    const bool node_is_gain = variant != Variant::dD;
    const bool edge_is_gain = variant == Variant::hH;
    const double node_pre = node_is_gain ? 1.0 : area_side_m;
    const double edge_pre = edge_is_gain ? 1.0 : area_side_m;

    RunningStats node_stats, edge_stats;
    for (const FeatureGraph& g : graphs) {
        if (g.variant != variant)
            throw std::invalid_argument("fit_normalizer: mixed variants");
        if (g.normalized)
            throw std::invalid_argument("fit_normalizer: expects raw graphs");
        const int n = g.n();
        for (int i = 0; i < n; ++i)
            node_stats.add(node_is_gain ? linear_to_db(g.node_features[i])
                                        : g.node_features[i] / node_pre);
        for (int m = 0; m < n; ++m)
            for (int j = 0; j < n; ++j) {
                if (m == j) continue;
                edge_stats.add(edge_is_gain ? linear_to_db(g.edge_features(m, j))
                                            : g.edge_features(m, j) / edge_pre);
            }
    }

    Normalizer norm;
    norm.variant = variant;
    norm.node = fit_transform(node_stats, node_is_gain, node_pre);
    norm.edge = fit_transform(edge_stats, edge_is_gain, edge_pre);
    norm.fitted = true;
    return norm;
}

void apply_normalizer(FeatureGraph& graph, const Normalizer& norm) {
    if (!norm.fitted) throw std::invalid_argument("apply_normalizer: normalizer not fitted");
    if (norm.variant != graph.variant)
        throw std::invalid_argument("apply_normalizer: variant mismatch");
    if (graph.normalized)
        throw std::logic_error("apply_normalizer: graph already normalized");
    const int n = graph.n();
    for (int i = 0; i < n; ++i)
        graph.node_features[i] = norm.node.apply(graph.node_features[i]);
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            if (m == j) continue;
            graph.edge_features(m, j) = norm.edge.apply(graph.edge_features(m, j));
        }
    graph.normalized = true;
}

} // namespace pcgnn
