#include <cmath>

#include "doctest.h"
#include "pcgnn/graph.hpp"
#include "test_support.hpp"

using namespace pcgnn;
using testutil::close;

namespace {

Snapshot permuted(const Snapshot& s, const std::vector<int>& pi) {
    const int n = s.n();
    Snapshot out = s;
    for (int i = 0; i < n; ++i) {
        out.controller_x[pi[i]] = s.controller_x[i];
        out.controller_y[pi[i]] = s.controller_y[i];
        out.device_x[pi[i]] = s.device_x[i];
        out.device_y[pi[i]] = s.device_y[i];
    }
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            out.distance(pi[m], pi[j]) = s.distance(m, j);
            out.gain(pi[m], pi[j]) = s.gain(m, j);
        }
    return out;
}

} // namespace

TEST_CASE("hD graph holds desired gains on nodes and distances on edges") {
    SystemConfig cfg = testutil::small_config(2);
    const Snapshot s = make_snapshot(cfg, 5);
    const FeatureGraph g = build_graph(s, Variant::hD);
    CHECK(g.node_features[0] == s.gain(0, 0));
    CHECK(g.node_features[1] == s.gain(1, 1));
    CHECK(g.edge(0, 1) == s.distance(0, 1));
    CHECK(g.edge(1, 0) == s.distance(1, 0));
    CHECK(!g.normalized);
}

TEST_CASE("hH edges equal the off-diagonal gain matrix") {
    SystemConfig cfg = testutil::small_config(6);
    const Snapshot s = make_snapshot(cfg, 8);
    const FeatureGraph g = build_graph(s, Variant::hH);
    for (int m = 0; m < 6; ++m)
        for (int j = 0; j < 6; ++j) {
            if (m == j) continue;
            CHECK(g.edge(m, j) == s.gain(m, j));
        }
    for (int i = 0; i < 6; ++i) CHECK(g.node_features[i] == s.gain(i, i));
}

TEST_CASE("dD node features equal the distance diagonal") {
    SystemConfig cfg = testutil::small_config(5);
    const Snapshot s = make_snapshot(cfg, 17);
    const FeatureGraph g = build_graph(s, Variant::dD);
    for (int i = 0; i < 5; ++i) CHECK(g.node_features[i] == s.distance(i, i));
    CHECK(g.edge(2, 3) == s.distance(2, 3));
}

TEST_CASE("edge diagonal is an unread NaN sentinel") {
    SystemConfig cfg = testutil::small_config(3);
    const Snapshot s = make_snapshot(cfg, 2);
    const FeatureGraph g = build_graph(s, Variant::hD);
    for (int i = 0; i < 3; ++i) CHECK(std::isnan(g.edge_features(i, i)));
}

TEST_CASE("relabeling the snapshot permutes node and edge features") {
    SystemConfig cfg = testutil::small_config(7);
    const Snapshot s = make_snapshot(cfg, 23);
    const std::vector<int> pi{3, 0, 6, 1, 5, 2, 4};
    const Snapshot sp = permuted(s, pi);
    for (const Variant v : {Variant::hD, Variant::dD, Variant::hH}) {
        const FeatureGraph g = build_graph(s, v);
        const FeatureGraph gp = build_graph(sp, v);
        for (int i = 0; i < 7; ++i) CHECK(gp.node_features[pi[i]] == g.node_features[i]);
        for (int m = 0; m < 7; ++m)
            for (int j = 0; j < 7; ++j) {
                if (m == j) continue;
                CHECK(gp.edge(pi[m], pi[j]) == g.edge(m, j));
            }
    }
}

TEST_CASE("build_graph is pure: same snapshot gives identical graphs") {
    SystemConfig cfg = testutil::small_config(4);
    const Snapshot s = make_snapshot(cfg, 77);
    const FeatureGraph a = build_graph(s, Variant::hD);
    const FeatureGraph b = build_graph(s, Variant::hD);
    CHECK(a.node_features == b.node_features);
    for (int m = 0; m < 4; ++m)
        for (int j = 0; j < 4; ++j)
            if (m != j) CHECK(a.edge(m, j) == b.edge(m, j));
}

TEST_CASE("standardization maps the fit set to zero mean and unit variance") {
    SystemConfig cfg = testutil::small_config(20);
    std::vector<FeatureGraph> graphs;
    for (uint64_t seed = 0; seed < 10; ++seed)
        graphs.push_back(build_graph(make_snapshot(cfg, seed), Variant::hD));
    const Normalizer norm = fit_normalizer(graphs, cfg.area_side_m);
    CHECK(norm.node.log_db);
    CHECK(!norm.edge.log_db);

    double sum = 0.0, sq = 0.0;
    size_t count = 0;
    for (FeatureGraph g : graphs) {
        apply_normalizer(g, norm);
        for (double v : g.node_features) {
            sum += v;
            sq += v * v;
            ++count;
        }
    }
    const double mean = sum / count;
    const double var = sq / count - mean * mean;
    CHECK(std::abs(mean) < 1e-9);
    CHECK(close(var, 1.0, 1e-9));
}

TEST_CASE("gain transform maps the documented range to dB") {
    FeatureTransform t;
    t.log_db = true;
    CHECK(close(t.apply(1e-5), -50.0, 1e-12));
    CHECK(close(t.apply(1e-12), -120.0, 1e-12));
}

TEST_CASE("normalizing twice violates the raw-features contract") {
    SystemConfig cfg = testutil::small_config(4);
    std::vector<FeatureGraph> graphs{build_graph(make_snapshot(cfg, 3), Variant::hD)};
    const Normalizer norm = fit_normalizer(graphs, cfg.area_side_m);
    FeatureGraph g = graphs[0];
    apply_normalizer(g, norm);
    CHECK(g.normalized);
    CHECK_THROWS_AS(apply_normalizer(g, norm), std::logic_error);
}

TEST_CASE("degenerate variance clamps the scale to one") {
    Snapshot s;
    s.controller_x = {0.0, 5.0};
    s.controller_y = {0.0, 0.0};
    s.device_x = {1.0, 6.0};
    s.device_y = {0.0, 0.0};
    s.distance = Mat(2, 2);
    s.distance(0, 0) = s.distance(1, 1) = 1.0;
    s.distance(0, 1) = s.distance(1, 0) = 5.0;
    s.gain = Mat(2, 2, 1e-7);
    std::vector<FeatureGraph> graphs{build_graph(s, Variant::hD)};
    const Normalizer norm = fit_normalizer(graphs, 20.0);
    CHECK(norm.node.scale == 1.0); // both desired gains identical
    CHECK(norm.edge.scale == 1.0); // both distances identical
}

TEST_CASE("normalizer refuses mismatched variants and unfitted state") {
    SystemConfig cfg = testutil::small_config(3);
    const Snapshot s = make_snapshot(cfg, 4);
    std::vector<FeatureGraph> graphs{build_graph(s, Variant::hD)};
    const Normalizer norm = fit_normalizer(graphs, cfg.area_side_m);
    FeatureGraph wrong = build_graph(s, Variant::hH);
    CHECK_THROWS(apply_normalizer(wrong, norm));
    FeatureGraph g = build_graph(s, Variant::hD);
    CHECK_THROWS(apply_normalizer(g, Normalizer{}));
    CHECK_THROWS(fit_normalizer({}, cfg.area_side_m));
}
