#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "turngrab/common.hpp"
#include "turngrab/layers.hpp"

namespace turngrab {

struct NetworkConfig {
    int input_channels = kNumChannels;
    int seq_len = 100;
    int conv1_dim = 8;
    int conv2_dim = 128;
    int kernel_size = 3;
    int lstm_layers = 2;
    int lstm_dim = 16;
    double learning_rate = 1e-2;
    int batch_size = 64;
    int epochs = 50;
    std::uint64_t init_seed = 0;
    // Per-channel input standardization (x - mean) / scale applied before the
    // first convolution. Empty means raw inputs. train() fits them on the
    // training samples when standardize_inputs is set and they are empty.
    bool standardize_inputs = true;
    std::vector<double> input_mean;
    std::vector<double> input_scale;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static NetworkConfig from_json(const nlohmann::json& j);
};

struct TensorSlot {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
};

/// All network weights in one flat buffer with named slices:
///   conv1.weight [K, C, conv1]   conv1.bias [conv1]
///   conv2.weight [K, conv1, conv2]   conv2.bias [conv2]
///   lstm.<l>.w_input [D, 4H]  lstm.<l>.w_hidden [H, 4H]  lstm.<l>.bias [4H]
///   fc.weight [H]  fc.bias [1]
/// Values are held in double; training keeps them float-representable so the
/// float32 weights file reproduces them exactly.
class ModelParams {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    /// All-zero parameters.
    explicit ModelParams(const NetworkConfig& cfg);

    /// Glorot-uniform weights from cfg.init_seed, zero biases, rounded to float.
    static ModelParams initialize(const NetworkConfig& cfg);

    const NetworkConfig& config() const { return config_; }
    const std::vector<TensorSlot>& layout() const { return layout_; }
    std::uint32_t format_version() const { return format_version_; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    std::span<double> tensor(std::string_view name);
    std::span<const double> tensor(std::string_view name) const;

    void round_to_float();
    bool all_finite() const;

    void save(const std::filesystem::path& path) const;
    static ModelParams load(const std::filesystem::path& path);

private:
    const TensorSlot& slot(std::string_view name) const;

    NetworkConfig config_;
    std::uint32_t format_version_ = kFormatVersion;
    std::vector<TensorSlot> layout_;
    std::vector<double> values_;
};

/// Intermediate activations of one forward pass.
struct ForwardCache {
    std::vector<double> input;
    std::vector<double> conv1_pre, conv1_out;
    std::vector<double> conv2_pre, conv2_out;
    std::vector<layers::LstmCache> lstm;
    double logit = 0.0;
};

/// conv1 -> ReLU -> conv2 -> ReLU -> LSTM stack -> last hidden state -> FC.
double forward(const ModelParams& params, std::span<const double> sample, ForwardCache* cache = nullptr);
double forward(const ModelParams& params, std::span<const float> sample, ForwardCache* cache = nullptr);

/// Adds grad_logit * d(logit)/d(params) to `grads` (same layout as params).
void backward(const ModelParams& params, const ForwardCache& cache, double grad_logit, std::span<double> grads);

}  // namespace turngrab
