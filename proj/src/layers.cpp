#include "turngrab/layers.hpp"

#include <algorithm>
#include <cmath>

#include "turngrab/common.hpp"

namespace turngrab::layers {
namespace {

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void require(bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::ShapeMismatch, what);
}

}  // namespace

void conv1d_forward(std::span<const double> input, std::span<const double> weight, std::span<const double> bias,
                    const Conv1dShape& s, std::span<double> output) {
    const std::size_t T = static_cast<std::size_t>(s.seq_len);
    const std::size_t C = static_cast<std::size_t>(s.in_channels);
    const std::size_t O = static_cast<std::size_t>(s.out_channels);
    require(input.size() == T * C, "conv1d input size");
    require(weight.size() == s.weight_size(), "conv1d weight size");
    require(bias.size() == O, "conv1d bias size");
    require(output.size() == T * O, "conv1d output size");
    const int pad = (s.kernel_size - 1) / 2;

    for (std::size_t t = 0; t < T; ++t) {
        double* out = output.data() + t * O;
        std::copy(bias.begin(), bias.end(), out);
        for (int k = 0; k < s.kernel_size; ++k) {
            const long src = static_cast<long>(t) + k - pad;
            if (src < 0 || src >= static_cast<long>(T)) continue;
            const double* in = input.data() + static_cast<std::size_t>(src) * C;
            const double* wk = weight.data() + static_cast<std::size_t>(k) * C * O;
            for (std::size_t c = 0; c < C; ++c) {
                const double x = in[c];
                if (x == 0.0) continue;
                const double* w = wk + c * O;
                for (std::size_t o = 0; o < O; ++o) out[o] += w[o] * x;
            }
        }
    }
}

void conv1d_backward(std::span<const double> input, std::span<const double> weight, const Conv1dShape& s,
                     std::span<const double> grad_output, std::span<double> grad_input,
                     std::span<double> grad_weight, std::span<double> grad_bias) {
    const std::size_t T = static_cast<std::size_t>(s.seq_len);
    const std::size_t C = static_cast<std::size_t>(s.in_channels);
    const std::size_t O = static_cast<std::size_t>(s.out_channels);
    require(input.size() == T * C && grad_output.size() == T * O, "conv1d backward sizes");
    require(grad_weight.size() == s.weight_size() && grad_bias.size() == O, "conv1d gradient sizes");
    const bool want_input = !grad_input.empty();
    if (want_input) {
        require(grad_input.size() == T * C, "conv1d grad_input size");
        std::fill(grad_input.begin(), grad_input.end(), 0.0);
    }
    const int pad = (s.kernel_size - 1) / 2;

    for (std::size_t t = 0; t < T; ++t) {
        const double* g = grad_output.data() + t * O;
        for (std::size_t o = 0; o < O; ++o) grad_bias[o] += g[o];
        for (int k = 0; k < s.kernel_size; ++k) {
            const long src = static_cast<long>(t) + k - pad;
            if (src < 0 || src >= static_cast<long>(T)) continue;
            const double* in = input.data() + static_cast<std::size_t>(src) * C;
            double* gw_k = grad_weight.data() + static_cast<std::size_t>(k) * C * O;
            const double* w_k = weight.data() + static_cast<std::size_t>(k) * C * O;
            for (std::size_t c = 0; c < C; ++c) {
                const double x = in[c];
                if (x != 0.0) {
                    double* gw = gw_k + c * O;
                    for (std::size_t o = 0; o < O; ++o) gw[o] += x * g[o];
                }
                if (want_input) {
                    const double* w = w_k + c * O;
                    double acc = 0.0;
                    for (std::size_t o = 0; o < O; ++o) acc += w[o] * g[o];
                    grad_input[static_cast<std::size_t>(src) * C + c] += acc;
                }
            }
        }
    }
}

void relu_forward(std::span<const double> pre, std::span<double> out) {
    require(pre.size() == out.size(), "relu size");
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] = pre[i] > 0.0 ? pre[i] : 0.0;
}

void relu_backward(std::span<const double> pre, std::span<double> grad) {
    require(pre.size() == grad.size(), "relu size");
    for (std::size_t i = 0; i < pre.size(); ++i) {
        if (!(pre[i] > 0.0)) grad[i] = 0.0;
    }
}

void lstm_forward(std::span<const double> input, std::span<const double> w_input, std::span<const double> w_hidden,
                  std::span<const double> bias, const LstmShape& s, LstmCache& cache) {
    const std::size_t T = static_cast<std::size_t>(s.seq_len);
    const std::size_t D = static_cast<std::size_t>(s.input_dim);
    const std::size_t H = static_cast<std::size_t>(s.hidden);
    const std::size_t G = 4 * H;
    require(input.size() == T * D, "lstm input size");
    require(w_input.size() == D * G && w_hidden.size() == H * G && bias.size() == G, "lstm parameter size");

    cache.gates.resize(T * G);
    cache.cell.resize(T * H);
    cache.cell_tanh.resize(T * H);
    cache.hidden.resize(T * H);

    for (std::size_t t = 0; t < T; ++t) {
        double* z = cache.gates.data() + t * G;
        std::copy(bias.begin(), bias.end(), z);
        const double* x = input.data() + t * D;
        for (std::size_t d = 0; d < D; ++d) {
            const double xd = x[d];
            if (xd == 0.0) continue;
            const double* w = w_input.data() + d * G;
            for (std::size_t j = 0; j < G; ++j) z[j] += w[j] * xd;
        }
        if (t > 0) {
            const double* h_prev = cache.hidden.data() + (t - 1) * H;
            for (std::size_t k = 0; k < H; ++k) {
                const double hk = h_prev[k];
                const double* w = w_hidden.data() + k * G;
                for (std::size_t j = 0; j < G; ++j) z[j] += w[j] * hk;
            }
        }
        double* c = cache.cell.data() + t * H;
        double* ct = cache.cell_tanh.data() + t * H;
        double* h = cache.hidden.data() + t * H;
        for (std::size_t k = 0; k < H; ++k) {
            const double ig = sigmoid(z[k]);
            const double fg = sigmoid(z[H + k]);
            const double gg = std::tanh(z[2 * H + k]);
            const double og = sigmoid(z[3 * H + k]);
            z[k] = ig;
            z[H + k] = fg;
            z[2 * H + k] = gg;
            z[3 * H + k] = og;
            const double c_prev = t > 0 ? cache.cell[(t - 1) * H + k] : 0.0;
            c[k] = fg * c_prev + ig * gg;
            ct[k] = std::tanh(c[k]);
            h[k] = og * ct[k];
        }
    }
}

void lstm_backward(std::span<const double> input, std::span<const double> w_input, std::span<const double> w_hidden,
                   const LstmShape& s, const LstmCache& cache, std::span<const double> grad_hidden,
                   std::span<double> grad_input, std::span<double> grad_w_input, std::span<double> grad_w_hidden,
                   std::span<double> grad_bias) {
    const std::size_t T = static_cast<std::size_t>(s.seq_len);
    const std::size_t D = static_cast<std::size_t>(s.input_dim);
    const std::size_t H = static_cast<std::size_t>(s.hidden);
    const std::size_t G = 4 * H;
    require(grad_hidden.size() == T * H, "lstm grad_hidden size");
    require(grad_w_input.size() == D * G && grad_w_hidden.size() == H * G && grad_bias.size() == G,
            "lstm gradient size");
    const bool want_input = !grad_input.empty();
    if (want_input) require(grad_input.size() == T * D, "lstm grad_input size");

    std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dz(G);
    for (std::size_t step = T; step-- > 0;) {
        const double* gate = cache.gates.data() + step * G;
        const double* ct = cache.cell_tanh.data() + step * H;
        for (std::size_t k = 0; k < H; ++k) {
            const double ig = gate[k], fg = gate[H + k], gg = gate[2 * H + k], og = gate[3 * H + k];
            const double dh = grad_hidden[step * H + k] + dh_next[k];
            const double dc = dh * og * (1.0 - ct[k] * ct[k]) + dc_next[k];
            const double c_prev = step > 0 ? cache.cell[(step - 1) * H + k] : 0.0;
            dz[k] = dc * gg * ig * (1.0 - ig);
            dz[H + k] = dc * c_prev * fg * (1.0 - fg);
            dz[2 * H + k] = dc * ig * (1.0 - gg * gg);
            dz[3 * H + k] = dh * ct[k] * og * (1.0 - og);
            dc_next[k] = dc * fg;
        }
        for (std::size_t j = 0; j < G; ++j) grad_bias[j] += dz[j];

        const double* x = input.data() + step * D;
        for (std::size_t d = 0; d < D; ++d) {
            const double xd = x[d];
            if (xd != 0.0) {
                double* gw = grad_w_input.data() + d * G;
                for (std::size_t j = 0; j < G; ++j) gw[j] += xd * dz[j];
            }
            if (want_input) {
                const double* w = w_input.data() + d * G;
                double acc = 0.0;
                for (std::size_t j = 0; j < G; ++j) acc += w[j] * dz[j];
                grad_input[step * D + d] = acc;
            }
        }
        if (step > 0) {
            const double* h_prev = cache.hidden.data() + (step - 1) * H;
            for (std::size_t k = 0; k < H; ++k) {
                double* gw = grad_w_hidden.data() + k * G;
                const double hk = h_prev[k];
                for (std::size_t j = 0; j < G; ++j) gw[j] += hk * dz[j];
                const double* w = w_hidden.data() + k * G;
                double acc = 0.0;
                for (std::size_t j = 0; j < G; ++j) acc += w[j] * dz[j];
                dh_next[k] = acc;
            }
        }
    }
}

}  // namespace turngrab::layers
