#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "pcgnn/metrics.hpp"
#include "pcgnn/model.hpp"
#include "pcgnn/rng.hpp"
#include "test_support.hpp"

using namespace pcgnn;
using testutil::close;

namespace {

FeatureGraph normalized_graph(const Snapshot& s, Variant v, const SystemConfig& cfg,
                              Normalizer* out_norm = nullptr) {
    FeatureGraph g = build_graph(s, v);
    const Normalizer norm = fit_normalizer({g}, cfg.area_side_m);
    if (out_norm) *out_norm = norm;
    FeatureGraph fresh = build_graph(s, v);
    apply_normalizer(fresh, norm);
    return fresh;
}

FeatureGraph permuted_graph(const FeatureGraph& g, const std::vector<int>& pi) {
    const int n = g.n();
    FeatureGraph out = g;
    for (int i = 0; i < n; ++i) out.node_features[pi[i]] = g.node_features[i];
    for (int m = 0; m < n; ++m)
        for (int j = 0; j < n; ++j) {
            if (m == j) continue;
            out.edge_features(pi[m], pi[j]) = g.edge_features(m, j);
        }
    return out;
}

} // namespace

TEST_CASE("model architecture follows the skip-concatenation recursion") {
    const PcgnnModel m = make_model(Variant::hD, 3, 1e-3, 1);
    CHECK(m.emb_dim(0) == 1);
    CHECK(m.emb_dim(1) == 2);
    CHECK(m.emb_dim(2) == 3);
    CHECK(m.emb_dim(3) == 1);
    // Layer 1 message net is 2-32-32-32; layer 2 combine net sees 2+32=34.
    CHECK(m.message[0].in_dim() == 2);
    CHECK(m.message[0].layers[0].out_dim() == 32);
    CHECK(m.message[0].layers[2].out_dim() == 32);
    CHECK(m.combine[1].in_dim() == 34);
    CHECK(m.combine[1].layers[1].out_dim() == 16);
    CHECK(m.combine[1].out_dim() == 1);
    CHECK(m.message[2].in_dim() == 4);
    CHECK(m.combine[0].in_dim() == 33);
    CHECK(m.combine[2].in_dim() == 35);
    // Message nets end in relu, combine nets in sigmoid.
    CHECK(m.message[0].layers.back().act == Activation::relu);
    CHECK(m.combine[0].layers.back().act == Activation::sigmoid);
}

TEST_CASE("all-zero weights give half max power regardless of input") {
    SystemConfig cfg = testutil::small_config(6);
    const Snapshot s = make_snapshot(cfg, 41);
    for (const Variant v : {Variant::hD, Variant::dD, Variant::hH}) {
        PcgnnModel model = make_model(v, 3, cfg.max_power_w, 2);
        model.scatter_params(Vec(model.param_count(), 0.0));
        const FeatureGraph g = normalized_graph(s, v, cfg);
        model.normalizer = fit_normalizer({build_graph(s, v)}, cfg.area_side_m);
        const PowerAllocation p = pcgnn_forward(model, g);
        for (double pw : p.p) CHECK(pw == 0.5 * cfg.max_power_w);
    }
}

TEST_CASE("forward matches a hand-unrolled two-node computation") {
    SystemConfig cfg = testutil::small_config(2);
    const Snapshot s = make_snapshot(cfg, 7);
    PcgnnModel model = make_model(Variant::hD, 2, cfg.max_power_w, 19);
    const FeatureGraph g = normalized_graph(s, Variant::hD, cfg);
    model.normalizer = fit_normalizer({build_graph(s, Variant::hD)}, cfg.area_side_m);

    // Unrolled: with N=2 the neighbor mean is the single incoming message.
    Vec beta0{g.node_features[0]};
    Vec beta1{g.node_features[1]};
    auto layer = [&](int k, const Vec& b0, const Vec& b1, bool last) {
        Vec in01 = b0; // message node0 -> node1
        in01.push_back(g.edge(0, 1));
        Vec in10 = b1; // message node1 -> node0
        in10.push_back(g.edge(1, 0));
        const Vec msg01 = mlp_forward(model.message[k], in01);
        const Vec msg10 = mlp_forward(model.message[k], in10);
        Vec c0 = b0;
        c0.insert(c0.end(), msg10.begin(), msg10.end());
        Vec c1 = b1;
        c1.insert(c1.end(), msg01.begin(), msg01.end());
        const double s0 = mlp_forward(model.combine[k], c0)[0];
        const double s1 = mlp_forward(model.combine[k], c1)[0];
        std::pair<Vec, Vec> out;
        if (last) {
            out.first = Vec{s0};
            out.second = Vec{s1};
        } else {
            out.first = Vec{s0};
            out.first.insert(out.first.end(), b0.begin(), b0.end());
            out.second = Vec{s1};
            out.second.insert(out.second.end(), b1.begin(), b1.end());
        }
        return out;
    };
    auto [a0, a1] = layer(0, beta0, beta1, false);
    auto [b0, b1] = layer(1, a0, a1, true);
    const double p0 = b0[0] * cfg.max_power_w;
    const double p1 = b1[0] * cfg.max_power_w;

    const PowerAllocation p = pcgnn_forward(model, g);
    CHECK(close(p.p[0], p0, 1e-12));
    CHECK(close(p.p[1], p1, 1e-12));
}

TEST_CASE("fast forward equals the serial reference") {
    SystemConfig cfg = testutil::small_config(9);
    const Snapshot s = make_snapshot(cfg, 3);
    for (const Variant v : {Variant::hD, Variant::dD, Variant::hH}) {
        PcgnnModel model = make_model(v, 3, cfg.max_power_w, 5);
        const FeatureGraph g = normalized_graph(s, v, cfg);
        const PowerAllocation fast = pcgnn_forward(model, g);
        const PowerAllocation ref = pcgnn_forward_reference(model, g);
        for (int i = 0; i < 9; ++i) CHECK(close(fast.p[i], ref.p[i], 1e-13, 1e-18));
    }
}

TEST_CASE("permuting the graph permutes the powers bit-exactly") {
    SystemConfig cfg = testutil::small_config(8);
    Rng rng(55);
    for (int rep = 0; rep < 10; ++rep) {
        const Snapshot s = make_snapshot(cfg, 100 + rep);
        PcgnnModel model = make_model(Variant::hD, 3, cfg.max_power_w, rep);
        const FeatureGraph g = normalized_graph(s, Variant::hD, cfg);
        std::vector<int> pi(8);
        for (int i = 0; i < 8; ++i) pi[i] = i;
        shuffle(pi, rng);
        const FeatureGraph gp = permuted_graph(g, pi);
        const PowerAllocation p = pcgnn_forward(model, g);
        const PowerAllocation pp = pcgnn_forward(model, gp);
        for (int i = 0; i < 8; ++i) CHECK(pp.p[pi[i]] == p.p[i]);
    }
}

TEST_CASE("outputs respect the strict power box constraint") {
    SystemConfig cfg = testutil::small_config(20);
    const Snapshot s = make_snapshot(cfg, 8);
    PcgnnModel model = make_model(Variant::hH, 3, cfg.max_power_w, 77);
    const FeatureGraph g = normalized_graph(s, Variant::hH, cfg);
    const PowerAllocation p = pcgnn_forward(model, g);
    for (double pw : p.p) {
        CHECK(pw > 0.0);
        CHECK(pw < cfg.max_power_w);
    }
}

TEST_CASE("a model accepts graphs of any size") {
    SystemConfig cfg = testutil::small_config(20);
    PcgnnModel model = make_model(Variant::hD, 3, cfg.max_power_w, 6);
    model.normalizer =
        fit_normalizer({build_graph(make_snapshot(cfg, 1), Variant::hD)}, cfg.area_side_m);
    for (int n : {1, 2, 5, 30}) {
        SystemConfig c2 = cfg;
        c2.n_subnetworks = n;
        FeatureGraph g = build_graph(make_snapshot(c2, 9), Variant::hD);
        apply_normalizer(g, model.normalizer);
        const PowerAllocation p = pcgnn_forward(model, g);
        CHECK(p.n() == n);
        CHECK(p.feasible(cfg.max_power_w));
    }
}

TEST_CASE("loss is the negated sum spectral efficiency") {
    SystemConfig cfg = testutil::small_config(3);
    const Snapshot s = make_snapshot(cfg, 12);
    const double noise = noise_power(cfg);
    PowerAllocation zero;
    zero.p.assign(3, 0.0);
    CHECK(pcgnn_loss(zero, s.gain, noise) == 0.0);

    PowerAllocation p;
    p.p = {1e-3, 2e-4, 7e-4};
    CHECK(pcgnn_loss(p, s.gain, noise) < 0.0);
    const double expected = -(link_se(0, p.p, s.gain, noise) + link_se(1, p.p, s.gain, noise) +
                              link_se(2, p.p, s.gain, noise));
    CHECK(pcgnn_loss(p, s.gain, noise) == expected);
}

TEST_CASE("full-pipeline gradient matches finite differences at N=4") {
    SystemConfig cfg = testutil::small_config(4);
    const double noise = noise_power(cfg);
    const Snapshot s = make_snapshot(cfg, 33);
    PcgnnModel model = make_model(Variant::hD, 2, cfg.max_power_w, 44);
    const FeatureGraph g = normalized_graph(s, Variant::hD, cfg);
    const GradCheckResult res = gradcheck_model(model, g, s.gain, noise);
    INFO("max rel err ", res.max_rel_err, ", max abs err ", res.max_abs_err);
    CHECK(res.ok());
}

TEST_CASE("zero-weight model still gets gradient on the last combine bias") {
    SystemConfig cfg = testutil::small_config(4);
    const Snapshot s = make_snapshot(cfg, 3);
    const double noise = noise_power(cfg);
    PcgnnModel model = make_model(Variant::hD, 2, cfg.max_power_w, 1);
    model.scatter_params(Vec(model.param_count(), 0.0));
    const FeatureGraph g = normalized_graph(s, Variant::hD, cfg);
    ForwardTrace trace;
    pcgnn_forward(model, g, &trace);
    const Vec grad = pcgnn_backward(model, trace, g, s.gain, noise);

    // Locate the final combine net's output bias in the flat layout:
    // it is the last entry of the whole parameter vector.
    CHECK(grad.back() != 0.0);
}

TEST_CASE("single-cell gradient pushes the power toward max") {
    SystemConfig cfg = testutil::small_config(1);
    const Snapshot s = make_snapshot(cfg, 10);
    const double noise = noise_power(cfg);
    for (double frac : {0.1, 0.5, 0.9}) {
        const Vec p{frac * cfg.max_power_w};
        const Vec g = sum_se_grad(p, s.gain, noise);
        CHECK(g[0] > 0.0); // d(loss)/dp = -g < 0, so training raises p
    }
}

TEST_CASE("forward rejects raw graphs and mismatched variants") {
    SystemConfig cfg = testutil::small_config(3);
    const Snapshot s = make_snapshot(cfg, 2);
    PcgnnModel model = make_model(Variant::hD, 2, cfg.max_power_w, 3);
    FeatureGraph raw = build_graph(s, Variant::hD);
    CHECK_THROWS(pcgnn_forward(model, raw));
    const FeatureGraph wrong = normalized_graph(s, Variant::hH, cfg);
    CHECK_THROWS(pcgnn_forward(model, wrong));
}

TEST_CASE("backward detects a stale trace") {
    SystemConfig cfg = testutil::small_config(3);
    const Snapshot a = make_snapshot(cfg, 4);
    const Snapshot b = make_snapshot(cfg, 5);
    const double noise = noise_power(cfg);
    PcgnnModel model = make_model(Variant::hD, 2, cfg.max_power_w, 6);
    FeatureGraph ga = build_graph(a, Variant::hD);
    FeatureGraph gb = build_graph(b, Variant::hD);
    const Normalizer norm = fit_normalizer({ga}, cfg.area_side_m);
    apply_normalizer(ga, norm);
    apply_normalizer(gb, norm);
    ForwardTrace trace;
    pcgnn_forward(model, ga, &trace);
    CHECK_THROWS(pcgnn_backward(model, trace, gb, b.gain, noise));
}

TEST_CASE("params round-trip through gather and scatter") {
    PcgnnModel model = make_model(Variant::dD, 3, 1e-3, 9);
    const Vec params = model.gather_params();
    CHECK(params.size() == model.param_count());
    PcgnnModel other = make_model(Variant::dD, 3, 1e-3, 10);
    other.scatter_params(params);
    CHECK(other.gather_params() == params);
}

TEST_CASE("N=1 forward works with the empty-neighborhood convention") {
    SystemConfig cfg = testutil::small_config(1);
    const Snapshot s = make_snapshot(cfg, 14);
    PcgnnModel model = make_model(Variant::hD, 3, cfg.max_power_w, 15);
    const FeatureGraph g = normalized_graph(s, Variant::hD, cfg);
    const PowerAllocation p = pcgnn_forward(model, g);
    CHECK(p.n() == 1);
    CHECK(p.p[0] > 0.0);
    CHECK(p.p[0] < cfg.max_power_w);
    const PowerAllocation ref = pcgnn_forward_reference(model, g);
    CHECK(close(p.p[0], ref.p[0], 1e-13));
}
