#include <cmath>

#include "doctest.h"
#include "pcgnn/metrics.hpp"
#include "pcgnn/rng.hpp"
#include "test_support.hpp"

using namespace pcgnn;
using testutil::close;

namespace {

Dataset tiny_dataset(int n, int count, uint64_t seed = 1) {
    SystemConfig cfg = testutil::small_config(n);
    return generate_dataset(cfg, seed, kStreamTestData, count);
}

PcgnnModel fitted_model(Variant v, const Dataset& data, uint64_t seed = 3) {
    PcgnnModel model = make_model(v, 3, data.config.max_power_w, seed);
    std::vector<FeatureGraph> graphs;
    graphs.reserve(data.count());
    for (const Snapshot& s : data.snapshots) graphs.push_back(build_graph(s, v));
    model.normalizer = fit_normalizer(graphs, data.config.area_side_m);
    return model;
}

} // namespace

TEST_CASE("max power policy records full power on every snapshot") {
    const Dataset data = tiny_dataset(5, 8);
    const auto records = evaluate_max_power(data);
    CHECK(records.size() == 8);
    for (const auto& r : records) {
        CHECK(r.avg_power_w == data.config.max_power_w);
        CHECK(r.avg_se > 0.0);
        CHECK(r.iterations == -1);
    }
}

TEST_CASE("evaluation is deterministic") {
    const Dataset data = tiny_dataset(6, 10);
    const PcgnnModel model = fitted_model(Variant::hD, data);
    const auto a = evaluate_pcgnn(model, data);
    const auto b = evaluate_pcgnn(model, data);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].avg_se == b[i].avg_se);
        CHECK(a[i].avg_power_w == b[i].avg_power_w);
    }
}

TEST_CASE("limited-CSI variants never read hidden gains") {
    const Dataset data = tiny_dataset(8, 6);
    for (const Variant v : {Variant::hD, Variant::dD}) {
        const PcgnnModel model = fitted_model(v, data);
        // Poison the hidden entries: identical results prove they are unread.
        Dataset poisoned = data;
        for (Snapshot& s : poisoned.snapshots)
            for (int m = 0; m < s.n(); ++m)
                for (int j = 0; j < s.n(); ++j)
                    if (v == Variant::dD || m != j) s.gain(m, j) *= 1e9;
        const auto clean = evaluate_pcgnn(model, data);
        const auto dirty = evaluate_pcgnn(model, poisoned);
        for (size_t i = 0; i < clean.size(); ++i)
            CHECK(clean[i].avg_power_w == dirty[i].avg_power_w);
    }
}

TEST_CASE("redaction blanks exactly the entries the variant may not see") {
    const Dataset data = tiny_dataset(4, 1);
    const Snapshot& s = data.snapshots[0];
    const Snapshot hd = redact_csi(s, Variant::hD);
    for (int m = 0; m < 4; ++m)
        for (int j = 0; j < 4; ++j) {
            if (m == j)
                CHECK(hd.gain(m, j) == s.gain(m, j));
            else
                CHECK(std::isnan(hd.gain(m, j)));
        }
    const Snapshot dd = redact_csi(s, Variant::dD);
    for (int m = 0; m < 4; ++m)
        for (int j = 0; j < 4; ++j) CHECK(std::isnan(dd.gain(m, j)));
    const Snapshot hh = redact_csi(s, Variant::hH);
    CHECK(hh.gain == s.gain);
}

TEST_CASE("empirical cdf of three values steps by thirds") {
    const auto cdf = empirical_cdf(Vec{3.0, 1.0, 2.0});
    REQUIRE(cdf.size() == 3);
    CHECK(cdf[0] == std::pair<double, double>{1.0, 1.0 / 3.0});
    CHECK(cdf[1] == std::pair<double, double>{2.0, 2.0 / 3.0});
    CHECK(cdf[2] == std::pair<double, double>{3.0, 1.0});
}

TEST_CASE("constant input yields a single-step cdf") {
    const auto cdf = empirical_cdf(Vec{4.2, 4.2, 4.2, 4.2});
    for (const auto& [v, p] : cdf) CHECK(v == 4.2);
    CHECK(cdf.back().second == 1.0);
    CHECK_THROWS(empirical_cdf(Vec{}));
}

TEST_CASE("cdf of merged halves equals the weighted merge of half-cdfs") {
    Rng rng(31);
    Vec a(40), b(60);
    for (double& v : a) v = rng.uniform(-5, 5);
    for (double& v : b) v = rng.uniform(-5, 5);
    Vec merged = a;
    merged.insert(merged.end(), b.begin(), b.end());

    const auto cdf_m = empirical_cdf(merged);
    auto value_at = [](const std::vector<std::pair<double, double>>& cdf, double x) {
        double p = 0.0;
        for (const auto& [v, q] : cdf)
            if (v <= x) p = q;
        return p;
    };
    const auto cdf_a = empirical_cdf(a);
    const auto cdf_b = empirical_cdf(b);
    for (const auto& [x, p] : cdf_m) {
        const double merged_p = (40.0 * value_at(cdf_a, x) + 60.0 * value_at(cdf_b, x)) / 100.0;
        CHECK(close(p, merged_p, 1e-12, 1e-12));
    }
}

TEST_CASE("evaluation requires a fitted normalizer") {
    const Dataset data = tiny_dataset(3, 2);
    const PcgnnModel bare = make_model(Variant::hD, 2, data.config.max_power_w, 1);
    CHECK_THROWS(evaluate_pcgnn(bare, data));
}

TEST_CASE("gain of a policy against itself is zero") {
    const Dataset data = tiny_dataset(5, 7);
    const auto records = evaluate_max_power(data);
    CHECK(gain_vs_baseline(records, records) == 0.0);
}

TEST_CASE("gain computation rejects misaligned snapshot sets") {
    const Dataset data = tiny_dataset(5, 7);
    auto a = evaluate_max_power(data);
    auto b = a;
    b.pop_back();
    CHECK_THROWS(gain_vs_baseline(a, b));
    b = a;
    b[2].snapshot_id = 99;
    CHECK_THROWS(gain_vs_baseline(a, b));
}

TEST_CASE("density values map to the expected subnetwork counts") {
    SystemConfig base = testutil::small_config(20);
    CHECK(sweep_config(base, SweepParam::density, 25000.0).n_subnetworks == 10);
    CHECK(sweep_config(base, SweepParam::density, 50000.0).n_subnetworks == 20);
    CHECK(sweep_config(base, SweepParam::density, 75000.0).n_subnetworks == 30);
    CHECK(sweep_config(base, SweepParam::shadowing, 4.0).shadowing_std_db == 4.0);
    CHECK(base.density_per_km2() == 50000.0);
}

TEST_CASE("T1 sweep evaluates the base model across the grid") {
    SystemConfig cfg = testutil::small_config(4);
    const Dataset train = generate_dataset(cfg, 5, kStreamTrainData, 12);
    PcgnnModel model = fitted_model(Variant::hD, train, 8);

    SweepSpec spec;
    spec.param = SweepParam::shadowing;
    spec.values = {4.0, 7.0};
    spec.base = cfg;
    spec.trained_value = 7.0;
    spec.test_count = 10;
    spec.t1_variants = {Variant::hD};
    spec.data_seed = 17;
    const std::map<Variant, const PcgnnModel*> base{{Variant::hD, &model}};

    const auto entries = robustness_sweep(spec, base);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].value == 4.0);
    CHECK(entries[0].protocol == "T1");
    CHECK(entries[1].value == 7.0);
    CHECK(std::isfinite(entries[0].gain_pct));
}

TEST_CASE("T2 at the trained grid point reuses the base model") {
    SystemConfig cfg = testutil::small_config(3);
    const Dataset train = generate_dataset(cfg, 6, kStreamTrainData, 8);
    PcgnnModel model = fitted_model(Variant::hD, train, 9);

    SweepSpec spec;
    spec.param = SweepParam::shadowing;
    spec.values = {7.0};
    spec.base = cfg;
    spec.trained_value = 7.0;
    spec.test_count = 6;
    spec.t1_variants = {Variant::hD};
    spec.t2_variants = {Variant::hD};
    spec.data_seed = 21;
    const std::map<Variant, const PcgnnModel*> base{{Variant::hD, &model}};
    const auto entries = robustness_sweep(spec, base);
    REQUIRE(entries.size() == 2);
    CHECK(entries[0].gain_pct == entries[1].gain_pct);
}

TEST_CASE("sweep requires a base model per T1 variant") {
    SweepSpec spec;
    spec.values = {7.0};
    spec.base = testutil::small_config(3);
    spec.t1_variants = {Variant::hD};
    CHECK_THROWS(robustness_sweep(spec, {}));
}
