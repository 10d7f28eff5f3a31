#include "pcgnn/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pcgnn {

namespace {

constexpr int kDatasetVersion = 1;
constexpr const char* kModelHeader = "pcgnn-model v1";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Whitespace-separated token scanner over a loaded file.
class TokenReader {
public:
    explicit TokenReader(std::string text, std::string origin)
        : text_(std::move(text)), origin_(std::move(origin)) {}

    std::string next() {
        skip_ws();
        if (pos_ >= text_.size()) throw std::runtime_error(origin_ + ": unexpected end of file");
        const size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        return text_.substr(start, pos_ - start);
    }

    double next_double() {
        const std::string tok = next();
        double v = 0.0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw std::runtime_error(origin_ + ": bad number '" + tok + "'");
        return v;
    }

    uint64_t next_u64() {
        const std::string tok = next();
        uint64_t v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw std::runtime_error(origin_ + ": bad integer '" + tok + "'");
        return v;
    }

    int next_int() { return static_cast<int>(next_u64()); }

    void expect(const std::string& word) {
        const std::string tok = next();
        if (tok != word)
            throw std::runtime_error(origin_ + ": expected '" + word + "', got '" + tok + "'");
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }
    std::string text_;
    std::string origin_;
    size_t pos_ = 0;
};

void append_double(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

json config_to_json(const SystemConfig& c) {
    json j;
    j["n_subnetworks"] = c.n_subnetworks;
    j["area_side_m"] = c.area_side_m;
    j["cell_radius_m"] = c.cell_radius_m;
    j["min_controller_separation_m"] = c.min_controller_separation_m;
    j["min_device_distance_m"] = c.min_device_distance_m;
    j["shadowing_std_db"] = c.shadowing_std_db;
    j["pathloss_exponent"] = c.pathloss_exponent;
    j["max_power_w"] = c.max_power_w;
    j["bandwidth_hz"] = c.bandwidth_hz;
    j["carrier_freq_hz"] = c.carrier_freq_hz;
    j["noise_figure_db"] = c.noise_figure_db;
    j["temperature_k"] = c.temperature_k;
    j["placement_attempt_cap"] = c.placement_attempt_cap;
    return j;
}

SystemConfig config_from_json(const json& j) {
    SystemConfig c;
    c.n_subnetworks = j.at("n_subnetworks").get<int>();
    c.area_side_m = j.at("area_side_m").get<double>();
    c.cell_radius_m = j.at("cell_radius_m").get<double>();
    c.min_controller_separation_m = j.at("min_controller_separation_m").get<double>();
    c.min_device_distance_m = j.at("min_device_distance_m").get<double>();
    c.shadowing_std_db = j.at("shadowing_std_db").get<double>();
    c.pathloss_exponent = j.at("pathloss_exponent").get<double>();
    c.max_power_w = j.at("max_power_w").get<double>();
    c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    c.carrier_freq_hz = j.at("carrier_freq_hz").get<double>();
    c.noise_figure_db = j.at("noise_figure_db").get<double>();
    c.temperature_k = j.at("temperature_k").get<double>();
    c.placement_attempt_cap = j.at("placement_attempt_cap").get<int>();
    return c;
}

} // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        if (!out.good()) throw std::runtime_error("write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

uint64_t config_digest(const SystemConfig& config) {
    const std::string s = config_to_json(config).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void save_dataset(const std::string& dir, const Dataset& data, bool force) {
    const fs::path root(dir);
    const fs::path manifest_path = root / "manifest.json";
    if (fs::exists(manifest_path) && !force)
        throw std::runtime_error(dir + " already holds a dataset (use force to overwrite)");
    fs::create_directories(root);

    json manifest;
    manifest["kind"] = "pcgnn-dataset";
    manifest["format_version"] = kDatasetVersion;
    manifest["count"] = data.count();
    manifest["master_seed"] = data.master_seed;
    manifest["seed_stream"] = data.seed_stream;
    manifest["config"] = config_to_json(data.config);
    manifest["columns"] =
        "index seed ctrl_x[N] ctrl_y[N] dev_x[N] dev_y[N] distance_rowmajor[N*N] "
        "gain_rowmajor[N*N]";

    std::string rows;
    rows.reserve(static_cast<size_t>(data.count()) * 64);
    for (int i = 0; i < data.count(); ++i) {
        const Snapshot& s = data.snapshots[i];
        const int n = s.n();
        rows += std::to_string(i);
        rows += '\t';
        rows += std::to_string(s.seed);
        auto append_vec = [&rows](const std::vector<double>& v) {
            for (double x : v) {
                rows += '\t';
                append_double(rows, x);
            }
        };
        append_vec(s.controller_x);
        append_vec(s.controller_y);
        append_vec(s.device_x);
        append_vec(s.device_y);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                rows += '\t';
                append_double(rows, s.distance(r, c));
            }
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                rows += '\t';
                append_double(rows, s.gain(r, c));
            }
        rows += '\n';
    }

    atomic_write((root / "snapshots.tsv").string(), rows);
    atomic_write(manifest_path.string(), manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
    const fs::path root(dir);
    const json manifest = json::parse(read_file((root / "manifest.json").string()));
    if (manifest.at("kind").get<std::string>() != "pcgnn-dataset")
        throw std::runtime_error(dir + ": not a dataset directory");
    if (manifest.at("format_version").get<int>() != kDatasetVersion)
        throw std::runtime_error(dir + ": unsupported dataset format version " +
                                 manifest.at("format_version").dump());

    Dataset data;
    data.config = config_from_json(manifest.at("config"));
    data.master_seed = manifest.at("master_seed").get<uint64_t>();
    data.seed_stream = manifest.at("seed_stream").get<uint64_t>();
    const int count = manifest.at("count").get<int>();
    const int n = data.config.n_subnetworks;

    TokenReader tr(read_file((root / "snapshots.tsv").string()), dir + "/snapshots.tsv");
    data.snapshots.resize(count);
    for (int i = 0; i < count; ++i) {
        const int idx = tr.next_int();
        if (idx != i) throw std::runtime_error(dir + ": snapshot rows out of order");
        Snapshot& s = data.snapshots[i];
        s.seed = tr.next_u64();
        auto read_vec = [&tr, n]() {
            std::vector<double> v(n);
            for (int k = 0; k < n; ++k) v[k] = tr.next_double();
            return v;
        };
        s.controller_x = read_vec();
        s.controller_y = read_vec();
        s.device_x = read_vec();
        s.device_y = read_vec();
        s.distance = Mat(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) s.distance(r, c) = tr.next_double();
        s.gain = Mat(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) s.gain(r, c) = tr.next_double();
    }
    if (!tr.at_end()) throw std::runtime_error(dir + ": trailing data in snapshots.tsv");
    return data;
}

namespace {

void append_mlp(std::string& out, const std::string& tag, const Mlp& mlp) {
    out += "mlp " + tag + " layers " + std::to_string(mlp.layers.size()) + "\n";
    for (const auto& l : mlp.layers) {
        out += "layer " + std::to_string(l.out_dim()) + " " + std::to_string(l.in_dim()) + " ";
        switch (l.act) {
            case Activation::relu: out += "relu"; break;
            case Activation::sigmoid: out += "sigmoid"; break;
            case Activation::identity: out += "identity"; break;
        }
        out += "\nW";
        for (size_t i = 0; i < l.weight.size(); ++i) {
            out += ' ';
            append_double(out, l.weight.data()[i]);
        }
        out += "\nb";
        for (double b : l.bias) {
            out += ' ';
            append_double(out, b);
        }
        out += '\n';
    }
}

Mlp read_mlp(TokenReader& tr, const std::string& tag) {
    tr.expect("mlp");
    tr.expect(tag);
    tr.expect("layers");
    const int n_layers = tr.next_int();
    Mlp mlp;
    for (int l = 0; l < n_layers; ++l) {
        tr.expect("layer");
        const int out_dim = tr.next_int();
        const int in_dim = tr.next_int();
        const std::string act = tr.next();
        DenseLayer layer;
        layer.weight = Mat(out_dim, in_dim);
        layer.bias.assign(out_dim, 0.0);
        if (act == "relu")
            layer.act = Activation::relu;
        else if (act == "sigmoid")
            layer.act = Activation::sigmoid;
        else if (act == "identity")
            layer.act = Activation::identity;
        else
            throw std::runtime_error("model file: unknown activation '" + act + "'");
        tr.expect("W");
        for (size_t i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = tr.next_double();
        tr.expect("b");
        for (double& b : layer.bias) b = tr.next_double();
        mlp.layers.push_back(std::move(layer));
    }
    return mlp;
}

void append_transform(std::string& out, const std::string& tag, const FeatureTransform& t) {
    out += "transform " + tag + " " + std::to_string(t.log_db ? 1 : 0);
    out += ' ';
    append_double(out, t.pre_scale);
    out += ' ';
    append_double(out, t.shift);
    out += ' ';
    append_double(out, t.scale);
    out += '\n';
}

FeatureTransform read_transform(TokenReader& tr, const std::string& tag) {
    tr.expect("transform");
    tr.expect(tag);
    FeatureTransform t;
    t.log_db = tr.next_int() != 0;
    t.pre_scale = tr.next_double();
    t.shift = tr.next_double();
    t.scale = tr.next_double();
    return t;
}

} // namespace

void save_model(const std::string& path, const ModelFile& mf) {
    const PcgnnModel& m = mf.model;
    std::string out = kModelHeader;
    out += "\nvariant " + variant_name(m.variant);
    out += "\nk_layers " + std::to_string(m.k_layers);
    out += "\np_max ";
    append_double(out, m.p_max);
    out += "\nconfig_digest " + std::to_string(mf.digest);
    out += "\nnormalizer " + std::string(m.normalizer.fitted ? "fitted" : "none") + "\n";
    if (m.normalizer.fitted) {
        append_transform(out, "node", m.normalizer.node);
        append_transform(out, "edge", m.normalizer.edge);
    }
    for (int k = 0; k < m.k_layers; ++k) {
        append_mlp(out, "message_" + std::to_string(k + 1), m.message[k]);
        append_mlp(out, "combine_" + std::to_string(k + 1), m.combine[k]);
    }
    if (mf.adam) {
        out += "optimizer adam t " + std::to_string(mf.adam->t);
        out += " lr ";
        append_double(out, mf.adam->lr);
        out += " beta1 ";
        append_double(out, mf.adam->beta1);
        out += " beta2 ";
        append_double(out, mf.adam->beta2);
        out += " eps ";
        append_double(out, mf.adam->eps);
        out += "\nm";
        for (double v : mf.adam->m) {
            out += ' ';
            append_double(out, v);
        }
        out += "\nv";
        for (double v : mf.adam->v) {
            out += ' ';
            append_double(out, v);
        }
        out += "\nepochs_done " + std::to_string(mf.epochs_done) + "\n";
    }
    if (!mf.history.empty()) {
        out += "history " + std::to_string(mf.history.size());
        for (double v : mf.history) {
            out += ' ';
            append_double(out, v);
        }
        out += '\n';
    }
    out += "end\n";
    atomic_write(path, out);
}

ModelFile load_model(const std::string& path) {
    TokenReader tr(read_file(path), path);
    tr.expect("pcgnn-model");
    const std::string version = tr.next();
    if (version != "v1")
        throw std::runtime_error(path + ": unsupported model format version '" + version + "'");

    ModelFile mf;
    PcgnnModel& m = mf.model;
    tr.expect("variant");
    m.variant = variant_from_name(tr.next());
    tr.expect("k_layers");
    m.k_layers = tr.next_int();
    tr.expect("p_max");
    m.p_max = tr.next_double();
    tr.expect("config_digest");
    mf.digest = tr.next_u64();
    tr.expect("normalizer");
    const std::string norm_state = tr.next();
    if (norm_state == "fitted") {
        m.normalizer.variant = m.variant;
        m.normalizer.node = read_transform(tr, "node");
        m.normalizer.edge = read_transform(tr, "edge");
        m.normalizer.fitted = true;
    } else if (norm_state != "none") {
        throw std::runtime_error(path + ": bad normalizer marker");
    }
    for (int k = 0; k < m.k_layers; ++k) {
        m.message.push_back(read_mlp(tr, "message_" + std::to_string(k + 1)));
        m.combine.push_back(read_mlp(tr, "combine_" + std::to_string(k + 1)));
    }
    std::string tok = tr.next();
    if (tok == "optimizer") {
        tr.expect("adam");
        AdamState adam;
        tr.expect("t");
        adam.t = static_cast<int64_t>(tr.next_u64());
        tr.expect("lr");
        adam.lr = tr.next_double();
        tr.expect("beta1");
        adam.beta1 = tr.next_double();
        tr.expect("beta2");
        adam.beta2 = tr.next_double();
        tr.expect("eps");
        adam.eps = tr.next_double();
        const size_t n_params = m.param_count();
        adam.m.resize(n_params);
        adam.v.resize(n_params);
        tr.expect("m");
        for (double& v : adam.m) v = tr.next_double();
        tr.expect("v");
        for (double& v : adam.v) v = tr.next_double();
        tr.expect("epochs_done");
        mf.epochs_done = tr.next_int();
        mf.adam = std::move(adam);
        tok = tr.next();
    }
    if (tok == "history") {
        const size_t n = tr.next_u64();
        mf.history.resize(n);
        for (double& v : mf.history) v = tr.next_double();
        tok = tr.next();
    }
    if (tok != "end") throw std::runtime_error(path + ": missing end marker");

    // Structural sanity: layer chain must match the declared architecture.
    for (int k = 0; k < m.k_layers; ++k) {
        if (m.message[k].in_dim() != m.emb_dim(k) + 1 ||
            m.combine[k].in_dim() != m.emb_dim(k) + PcgnnModel::kMessageWidth)
            throw std::runtime_error(path + ": layer dimensions inconsistent with k_layers");
    }
    return mf;
}

void write_metrics_tsv(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::string out = "policy\tsnapshot_id\tavg_se_bps_hz\tavg_power_w\titerations\tconverged\n";
    for (const auto& r : records) {
        out += r.policy + '\t' + std::to_string(r.snapshot_id) + '\t';
        append_double(out, r.avg_se);
        out += '\t';
        append_double(out, r.avg_power_w);
        out += '\t' + std::to_string(r.iterations) + '\t' + (r.converged ? "1" : "0") + '\n';
    }
    atomic_write(path, out);
}

void write_cdf_tsv(const std::string& path, const std::vector<std::pair<double, double>>& cdf) {
    std::string out = "value\tcumulative_probability\n";
    for (const auto& [v, p] : cdf) {
        append_double(out, v);
        out += '\t';
        append_double(out, p);
        out += '\n';
    }
    atomic_write(path, out);
}

void write_history_tsv(const std::string& path, const Vec& history) {
    std::string out = "epoch\tmean_loss\n";
    for (size_t i = 0; i < history.size(); ++i) {
        out += std::to_string(i) + '\t';
        append_double(out, history[i]);
        out += '\n';
    }
    atomic_write(path, out);
}

void write_sweep_tsv(const std::string& path, const std::vector<SweepEntry>& entries) {
    std::string out = "param_value\tvariant\tprotocol\tgain_pct_vs_max_power\n";
    for (const auto& e : entries) {
        append_double(out, e.value);
        out += '\t' + variant_name(e.variant) + '\t' + e.protocol + '\t';
        append_double(out, e.gain_pct);
        out += '\n';
    }
    atomic_write(path, out);
}

void write_summary_tsv(const std::string& path, const std::vector<SummaryRow>& rows) {
    std::string out = "policy\tmean_avg_se_bps_hz\tmean_avg_power_w\tmean_iterations\n";
    for (const auto& r : rows) {
        out += r.policy + '\t';
        append_double(out, r.mean_avg_se);
        out += '\t';
        append_double(out, r.mean_avg_power_w);
        out += '\t';
        append_double(out, r.mean_iterations);
        out += '\n';
    }
    atomic_write(path, out);
}

void write_gains_tsv(const std::string& path, const std::vector<GainRow>& rows) {
    std::string out = "policy_a\tpolicy_b\tse_gain_pct\n";
    for (const auto& r : rows) {
        out += r.policy_a + '\t' + r.policy_b + '\t';
        append_double(out, r.gain_pct);
        out += '\n';
    }
    atomic_write(path, out);
}

} // namespace pcgnn
