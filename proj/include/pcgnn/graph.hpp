#pragma once

#include <string>
#include <vector>

#include "pcgnn/channel.hpp"
#include "pcgnn/common.hpp"

namespace pcgnn {

/// Input feature selection for the power-control graph.
///   hD: desired-link gains on nodes, link distances on edges
///   dD: desired-link distances on nodes, link distances on edges
///   hH: desired-link gains on nodes, interfering gains on edges
enum class Variant { hD, dD, hH };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

/// True when the variant needs off-diagonal channel gains (only hH does).
inline bool variant_needs_full_csi(Variant v) { return v == Variant::hH; }

/// Attributed complete directed graph of one snapshot. edge(m, n) is the
/// feature of the directed edge m -> n; the diagonal is a NaN sentinel and
/// must never be read.
struct FeatureGraph {
    Variant variant = Variant::hD;
    Vec node_features;  // length N
    Mat edge_features;  // N x N, diagonal unused
    bool normalized = false;

    int n() const { return static_cast<int>(node_features.size()); }

    double edge(int m, int n) const {
        assert(m != n);
        return edge_features(m, n);
    }
};

/// Affine transform of one feature family. Gains are mapped to dB before
/// standardization; distances are divided by pre-scale (the hall side).
struct FeatureTransform {
    bool log_db = false;
    double pre_scale = 1.0;
    double shift = 0.0;
    double scale = 1.0;

    double apply(double x) const {
        const double t = log_db ? linear_to_db(x) : x / pre_scale;
        return (t - shift) / scale;
    }
};

/// Input normalizer fitted on the training split and persisted with the
/// model so inference sees the same mapping.
struct Normalizer {
    Variant variant = Variant::hD;
    FeatureTransform node;
    FeatureTransform edge;
    bool fitted = false;
};

/// Raw (un-normalized) feature graph from a snapshot. Pure function; no
/// randomness. hD/dD read the distance matrix and at most the gain
/// diagonal, so they work on snapshots with redacted off-diagonal gains.
FeatureGraph build_graph(const Snapshot& snapshot, Variant variant);

/// Per-feature standardization statistics over the fit set. Degenerate
/// variance clamps the scale to 1.
Normalizer fit_normalizer(const std::vector<FeatureGraph>& graphs, double area_side_m);

/// Normalizes in place. The graph must carry raw features; normalizing
/// twice is a contract violation and throws.
void apply_normalizer(FeatureGraph& graph, const Normalizer& norm);

} // namespace pcgnn
