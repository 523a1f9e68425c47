#pragma once

#include <span>
#include <vector>

namespace turngrab::layers {

// All tensors are row-major with time as the outer dimension.

struct Conv1dShape {
    int seq_len = 0;
    int in_channels = 0;
    int out_channels = 0;
    int kernel_size = 3;

    std::size_t weight_size() const {
        return static_cast<std::size_t>(kernel_size) * static_cast<std::size_t>(in_channels) *
               static_cast<std::size_t>(out_channels);
    }
};

/// Temporal cross-correlation, stride 1, zero "same" padding. Weight layout is
/// [kernel][in_channel][out_channel]; tap k reads input row t + k - (K-1)/2.
void conv1d_forward(std::span<const double> input, std::span<const double> weight, std::span<const double> bias,
                    const Conv1dShape& shape, std::span<double> output);

/// Accumulates into grad_weight/grad_bias; overwrites grad_input unless it is empty.
void conv1d_backward(std::span<const double> input, std::span<const double> weight, const Conv1dShape& shape,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_weight, std::span<double> grad_bias);

void relu_forward(std::span<const double> pre, std::span<double> out);
/// grad <- grad * (pre > 0)
void relu_backward(std::span<const double> pre, std::span<double> grad);

struct LstmShape {
    int seq_len = 0;
    int input_dim = 0;
    int hidden = 0;

    int gates() const { return 4 * hidden; }
};

/// Per-step activations kept for backpropagation through time.
struct LstmCache {
    std::vector<double> gates;      // T x 4H, post-activation, order (input, forget, cell, output)
    std::vector<double> cell;       // T x H
    std::vector<double> cell_tanh;  // T x H
    std::vector<double> hidden;     // T x H
};

/// One LSTM layer with zero initial state. w_input is [D][4H], w_hidden is
/// [H][4H], bias is [4H].
void lstm_forward(std::span<const double> input, std::span<const double> w_input, std::span<const double> w_hidden,
                  std::span<const double> bias, const LstmShape& shape, LstmCache& cache);

/// grad_hidden is dL/dh_t for every step coming from above (T x H). Parameter
/// gradients accumulate; grad_input is overwritten unless empty.
void lstm_backward(std::span<const double> input, std::span<const double> w_input, std::span<const double> w_hidden,
                   const LstmShape& shape, const LstmCache& cache, std::span<const double> grad_hidden,
                   std::span<double> grad_input, std::span<double> grad_w_input, std::span<double> grad_w_hidden,
                   std::span<double> grad_bias);

}  // namespace turngrab::layers
