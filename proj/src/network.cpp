#include "turngrab/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace turngrab {
namespace {

constexpr char kMagic[8] = {'T', 'G', 'W', 'E', 'I', 'G', 'H', 'T'};

std::size_t product(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw Error(ErrorCode::FormatError, "truncated weights file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

// Slot indices in the fixed layout order.
constexpr std::size_t kConv1W = 0, kConv1B = 1, kConv2W = 2, kConv2B = 3, kLstmBase = 4;
std::size_t lstm_slot(int layer, int which) { return kLstmBase + 3 * static_cast<std::size_t>(layer) + which; }
std::size_t fc_w_slot(const NetworkConfig& c) { return kLstmBase + 3 * static_cast<std::size_t>(c.lstm_layers); }

}  // namespace

void NetworkConfig::validate() const {
    if (input_channels < 1 || seq_len < 1 || conv1_dim < 1 || conv2_dim < 1 || kernel_size < 1 || lstm_layers < 1 ||
        lstm_dim < 1) {
        throw Error(ErrorCode::InvalidConfig, "network dimensions must be >= 1");
    }
    if (seq_len < kernel_size) throw Error(ErrorCode::InvalidConfig, "seq_len must be >= kernel_size");
    if (!(learning_rate > 0.0) || batch_size < 1 || epochs < 0) {
        throw Error(ErrorCode::InvalidConfig, "learning_rate > 0, batch_size >= 1, epochs >= 0 required");
    }
    if (input_mean.size() != input_scale.size() ||
        (!input_mean.empty() && input_mean.size() != static_cast<std::size_t>(input_channels))) {
        throw Error(ErrorCode::InvalidConfig, "input_mean/input_scale need one entry per input channel");
    }
    for (std::size_t c = 0; c < input_scale.size(); ++c) {
        if (!(input_scale[c] > 0.0) || !std::isfinite(input_scale[c]) || !std::isfinite(input_mean[c])) {
            throw Error(ErrorCode::InvalidConfig, "input_scale must be positive and finite");
        }
    }
}

nlohmann::ordered_json NetworkConfig::to_json() const {
    nlohmann::ordered_json j;
    j["input_channels"] = input_channels;
    j["seq_len"] = seq_len;
    j["conv1_dim"] = conv1_dim;
    j["conv2_dim"] = conv2_dim;
    j["kernel_size"] = kernel_size;
    j["lstm_layers"] = lstm_layers;
    j["lstm_dim"] = lstm_dim;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["epochs"] = epochs;
    j["init_seed"] = init_seed;
    j["standardize_inputs"] = standardize_inputs;
    j["input_mean"] = input_mean;
    j["input_scale"] = input_scale;
    return j;
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.input_channels = j.value("input_channels", c.input_channels);
    c.seq_len = j.value("seq_len", c.seq_len);
    c.conv1_dim = j.value("conv1_dim", c.conv1_dim);
    c.conv2_dim = j.value("conv2_dim", c.conv2_dim);
    c.kernel_size = j.value("kernel_size", c.kernel_size);
    c.lstm_layers = j.value("lstm_layers", c.lstm_layers);
    c.lstm_dim = j.value("lstm_dim", c.lstm_dim);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.init_seed = j.value("init_seed", c.init_seed);
    c.standardize_inputs = j.value("standardize_inputs", c.standardize_inputs);
    c.input_mean = j.value("input_mean", c.input_mean);
    c.input_scale = j.value("input_scale", c.input_scale);
    return c;
}

ModelParams::ModelParams(const NetworkConfig& cfg) : config_(cfg) {
    cfg.validate();
    std::size_t offset = 0;
    auto add = [&](std::string name, std::vector<int> shape) {
        const std::size_t n = product(shape);
        layout_.push_back({std::move(name), std::move(shape), offset, n});
        offset += n;
    };
    const int K = cfg.kernel_size;
    add("conv1.weight", {K, cfg.input_channels, cfg.conv1_dim});
    add("conv1.bias", {cfg.conv1_dim});
    add("conv2.weight", {K, cfg.conv1_dim, cfg.conv2_dim});
    add("conv2.bias", {cfg.conv2_dim});
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        const int in = l == 0 ? cfg.conv2_dim : cfg.lstm_dim;
        const std::string p = "lstm." + std::to_string(l) + ".";
        add(p + "w_input", {in, 4 * cfg.lstm_dim});
        add(p + "w_hidden", {cfg.lstm_dim, 4 * cfg.lstm_dim});
        add(p + "bias", {4 * cfg.lstm_dim});
    }
    add("fc.weight", {cfg.lstm_dim});
    add("fc.bias", {1});
    values_.assign(offset, 0.0);
}

ModelParams ModelParams::initialize(const NetworkConfig& cfg) {
    ModelParams p(cfg);
    Rng rng(cfg.init_seed);
    auto glorot = [&](std::string_view name, double fan_in, double fan_out) {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : p.tensor(name)) v = rng.uniform(-limit, limit);
    };
    const double K = cfg.kernel_size;
    glorot("conv1.weight", K * cfg.input_channels, K * cfg.conv1_dim);
    glorot("conv2.weight", K * cfg.conv1_dim, K * cfg.conv2_dim);
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        const double in = l == 0 ? cfg.conv2_dim : cfg.lstm_dim;
        const std::string prefix = "lstm." + std::to_string(l) + ".";
        glorot(prefix + "w_input", in, 4.0 * cfg.lstm_dim);
        glorot(prefix + "w_hidden", cfg.lstm_dim, 4.0 * cfg.lstm_dim);
    }
    glorot("fc.weight", cfg.lstm_dim, 1.0);
    p.round_to_float();
    return p;
}

const TensorSlot& ModelParams::slot(std::string_view name) const {
    for (const auto& s : layout_) {
        if (s.name == name) return s;
    }
    throw Error(ErrorCode::ShapeMismatch, "no tensor named '" + std::string(name) + "'");
}

std::span<double> ModelParams::tensor(std::string_view name) {
    const auto& s = slot(name);
    return std::span<double>(values_).subspan(s.offset, s.size);
}

std::span<const double> ModelParams::tensor(std::string_view name) const {
    const auto& s = slot(name);
    return std::span<const double>(values_).subspan(s.offset, s.size);
}

void ModelParams::round_to_float() {
    for (double& v : values_) v = static_cast<double>(static_cast<float>(v));
}

bool ModelParams::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ModelParams::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_u32(out, format_version_);
    const std::string cfg = config_.to_json().dump();
    put_u32(out, static_cast<std::uint32_t>(cfg.size()));
    out.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
    put_u32(out, static_cast<std::uint32_t>(layout_.size()));
    for (const auto& s : layout_) {
        put_u32(out, static_cast<std::uint32_t>(s.name.size()));
        out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
        put_u32(out, static_cast<std::uint32_t>(s.shape.size()));
        for (int d : s.shape) put_u32(out, static_cast<std::uint32_t>(d));
        for (std::size_t i = 0; i < s.size; ++i) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(values_[s.offset + i])));
    }
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

ModelParams ModelParams::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    char magic[sizeof kMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
        throw Error(ErrorCode::FormatError, path.string() + ": bad magic");
    }
    const std::uint32_t version = get_u32(in);
    if (version != kFormatVersion) {
        throw Error(ErrorCode::FormatError, path.string() + ": unsupported format_version " + std::to_string(version));
    }
    const std::uint32_t cfg_len = get_u32(in);
    std::string cfg_text(cfg_len, '\0');
    in.read(cfg_text.data(), cfg_len);
    if (!in) throw Error(ErrorCode::FormatError, "truncated weights file");
    NetworkConfig cfg;
    try {
        cfg = NetworkConfig::from_json(nlohmann::json::parse(cfg_text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("weights config block: ") + e.what());
    }
    ModelParams p(cfg);
    const std::uint32_t count = get_u32(in);
    if (count != p.layout_.size()) throw Error(ErrorCode::ShapeMismatch, "tensor count does not match config");
    for (const auto& s : p.layout_) {
        const std::uint32_t name_len = get_u32(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const std::uint32_t ndim = get_u32(in);
        std::vector<int> shape(ndim);
        for (auto& d : shape) d = static_cast<int>(get_u32(in));
        if (!in || name != s.name || shape != s.shape) {
            throw Error(ErrorCode::ShapeMismatch, "tensor '" + name + "' does not match expected '" + s.name + "'");
        }
        for (std::size_t i = 0; i < s.size; ++i) {
            p.values_[s.offset + i] = static_cast<double>(std::bit_cast<float>(get_u32(in)));
        }
    }
    if (!p.all_finite()) throw Error(ErrorCode::FormatError, "non-finite weight in " + path.string());
    return p;
}

double forward(const ModelParams& params, std::span<const double> sample, ForwardCache* cache) {
    const auto& cfg = params.config();
    const std::size_t T = static_cast<std::size_t>(cfg.seq_len);
    if (sample.size() != T * static_cast<std::size_t>(cfg.input_channels)) {
        throw Error(ErrorCode::ShapeMismatch, "sample has " + std::to_string(sample.size()) + " values, expected " +
                                                  std::to_string(T * static_cast<std::size_t>(cfg.input_channels)));
    }
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    const auto& lay = params.layout();
    const auto vals = params.values();
    auto view = [&](std::size_t slot) { return vals.subspan(lay[slot].offset, lay[slot].size); };

    c.input.assign(sample.begin(), sample.end());
    if (!cfg.input_mean.empty()) {
        const std::size_t C = static_cast<std::size_t>(cfg.input_channels);
        for (std::size_t i = 0; i < c.input.size(); ++i) {
            c.input[i] = (c.input[i] - cfg.input_mean[i % C]) / cfg.input_scale[i % C];
        }
    }
    const layers::Conv1dShape s1{cfg.seq_len, cfg.input_channels, cfg.conv1_dim, cfg.kernel_size};
    const layers::Conv1dShape s2{cfg.seq_len, cfg.conv1_dim, cfg.conv2_dim, cfg.kernel_size};
    c.conv1_pre.resize(T * static_cast<std::size_t>(cfg.conv1_dim));
    c.conv1_out.resize(c.conv1_pre.size());
    c.conv2_pre.resize(T * static_cast<std::size_t>(cfg.conv2_dim));
    c.conv2_out.resize(c.conv2_pre.size());
    layers::conv1d_forward(c.input, view(kConv1W), view(kConv1B), s1, c.conv1_pre);
    layers::relu_forward(c.conv1_pre, c.conv1_out);
    layers::conv1d_forward(c.conv1_out, view(kConv2W), view(kConv2B), s2, c.conv2_pre);
    layers::relu_forward(c.conv2_pre, c.conv2_out);

    c.lstm.resize(static_cast<std::size_t>(cfg.lstm_layers));
    std::span<const double> seq = c.conv2_out;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        const layers::LstmShape ls{cfg.seq_len, l == 0 ? cfg.conv2_dim : cfg.lstm_dim, cfg.lstm_dim};
        layers::lstm_forward(seq, view(lstm_slot(l, 0)), view(lstm_slot(l, 1)), view(lstm_slot(l, 2)), ls,
                             c.lstm[static_cast<std::size_t>(l)]);
        seq = c.lstm[static_cast<std::size_t>(l)].hidden;
    }
    const std::size_t H = static_cast<std::size_t>(cfg.lstm_dim);
    const double* last = seq.data() + (T - 1) * H;
    const auto fc_w = view(fc_w_slot(cfg));
    double logit = view(fc_w_slot(cfg) + 1)[0];
    for (std::size_t k = 0; k < H; ++k) logit += fc_w[k] * last[k];
    if (!std::isfinite(logit)) throw Error(ErrorCode::NonFiniteActivation, "non-finite logit");
    c.logit = logit;
    return logit;
}

double forward(const ModelParams& params, std::span<const float> sample, ForwardCache* cache) {
    std::vector<double> x(sample.begin(), sample.end());
    return forward(params, std::span<const double>(x), cache);
}

void backward(const ModelParams& params, const ForwardCache& c, double grad_logit, std::span<double> grads) {
    const auto& cfg = params.config();
    if (grads.size() != params.values().size()) throw Error(ErrorCode::ShapeMismatch, "gradient buffer size");
    const auto& lay = params.layout();
    const auto vals = params.values();
    auto view = [&](std::size_t slot) { return vals.subspan(lay[slot].offset, lay[slot].size); };
    auto gview = [&](std::size_t slot) { return grads.subspan(lay[slot].offset, lay[slot].size); };

    const std::size_t T = static_cast<std::size_t>(cfg.seq_len);
    const std::size_t H = static_cast<std::size_t>(cfg.lstm_dim);
    const int L = cfg.lstm_layers;

    // Fully connected head on the last hidden state of the top layer.
    const auto& top = c.lstm[static_cast<std::size_t>(L - 1)].hidden;
    const double* last = top.data() + (T - 1) * H;
    auto g_fc_w = gview(fc_w_slot(cfg));
    const auto fc_w = view(fc_w_slot(cfg));
    for (std::size_t k = 0; k < H; ++k) g_fc_w[k] += grad_logit * last[k];
    gview(fc_w_slot(cfg) + 1)[0] += grad_logit;

    std::vector<double> grad_h(T * H, 0.0);
    for (std::size_t k = 0; k < H; ++k) grad_h[(T - 1) * H + k] = grad_logit * fc_w[k];

    std::vector<double> grad_below;
    for (int l = L - 1; l >= 0; --l) {
        const int in_dim = l == 0 ? cfg.conv2_dim : cfg.lstm_dim;
        const layers::LstmShape ls{cfg.seq_len, in_dim, cfg.lstm_dim};
        std::span<const double> input =
            l == 0 ? std::span<const double>(c.conv2_out) : std::span<const double>(c.lstm[static_cast<std::size_t>(l - 1)].hidden);
        grad_below.assign(T * static_cast<std::size_t>(in_dim), 0.0);
        layers::lstm_backward(input, view(lstm_slot(l, 0)), view(lstm_slot(l, 1)), ls, c.lstm[static_cast<std::size_t>(l)],
                              grad_h, grad_below, gview(lstm_slot(l, 0)), gview(lstm_slot(l, 1)), gview(lstm_slot(l, 2)));
        grad_h.swap(grad_below);
    }

    // grad_h now holds dL/d(conv2_out).
    layers::relu_backward(c.conv2_pre, grad_h);
    const layers::Conv1dShape s2{cfg.seq_len, cfg.conv1_dim, cfg.conv2_dim, cfg.kernel_size};
    std::vector<double> grad_a1(T * static_cast<std::size_t>(cfg.conv1_dim));
    layers::conv1d_backward(c.conv1_out, view(kConv2W), s2, grad_h, grad_a1, gview(kConv2W), gview(kConv2B));
    layers::relu_backward(c.conv1_pre, grad_a1);
    const layers::Conv1dShape s1{cfg.seq_len, cfg.input_channels, cfg.conv1_dim, cfg.kernel_size};
    layers::conv1d_backward(c.input, view(kConv1W), s1, grad_a1, {}, gview(kConv1W), gview(kConv1B));
}

}  // namespace turngrab
