#include "turngrab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "turngrab/log.hpp"
#include "turngrab/metrics.hpp"

namespace turngrab {

Adam::Adam(std::size_t n, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw Error(ErrorCode::ShapeMismatch, "optimizer state size");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
}

void fit_input_standardization(NetworkConfig& cfg, const std::vector<const Sample*>& samples) {
    const std::size_t C = static_cast<std::size_t>(cfg.input_channels);
    std::vector<double> sum(C, 0.0), sq(C, 0.0);
    std::size_t rows = 0;
    for (const Sample* s : samples) {
        if (s->data.size() % C != 0) throw Error(ErrorCode::ShapeMismatch, "sample width differs from input_channels");
        for (std::size_t i = 0; i < s->data.size(); ++i) sum[i % C] += s->data[i];
        rows += s->data.size() / C;
    }
    if (rows == 0) throw Error(ErrorCode::EmptyDataset, "no frames to fit input standardization");
    cfg.input_mean.assign(C, 0.0);
    cfg.input_scale.assign(C, 1.0);
    for (std::size_t c = 0; c < C; ++c) cfg.input_mean[c] = sum[c] / static_cast<double>(rows);
    for (const Sample* s : samples) {
        for (std::size_t i = 0; i < s->data.size(); ++i) {
            const double d = s->data[i] - cfg.input_mean[i % C];
            sq[i % C] += d * d;
        }
    }
    for (std::size_t c = 0; c < C; ++c) {
        const double sd = std::sqrt(sq[c] / static_cast<double>(rows));
        // Constant channels are only centred.
        cfg.input_scale[c] = sd > 1e-6 ? sd : 1.0;
    }
}

Prediction predict(const ModelParams& params, const Sample& sample, double threshold) {
    const double logit = forward(params, std::span<const float>(sample.data));
    return {logit > threshold, logit};
}

std::vector<double> score_all(const ModelParams& params, const std::vector<const Sample*>& samples, int jobs) {
    std::vector<double> out(samples.size(), 0.0);
    auto work = [&](std::size_t begin, std::size_t end) {
        ForwardCache cache;
        for (std::size_t i = begin; i < end; ++i) out[i] = forward(params, std::span<const float>(samples[i]->data), &cache);
    };
    const std::size_t n = samples.size();
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, jobs)), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        work(0, n);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                work(n * w / workers, n * (w + 1) / workers);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

TrainResult train(const std::vector<const Sample*>& first, const std::vector<const Sample*>& second,
                  const LabeledView& val, const NetworkConfig& net_cfg, const RiskConfig& risk_cfg,
                  const TrainCallbacks& callbacks, int jobs) {
    net_cfg.validate();
    if (first.empty() || second.empty()) throw Error(ErrorCode::EmptyDataset, "training needs both sample sets");
    const std::size_t width = static_cast<std::size_t>(net_cfg.seq_len) * static_cast<std::size_t>(net_cfg.input_channels);
    for (const auto* list : {&first, &second, &val.samples}) {
        for (const Sample* s : *list) {
            if (s->data.size() != width) throw Error(ErrorCode::ShapeMismatch, "sample shape differs from network input");
        }
    }
    const bool has_pos = std::find(val.labels.begin(), val.labels.end(), true) != val.labels.end();
    const bool has_neg = std::find(val.labels.begin(), val.labels.end(), false) != val.labels.end();
    if (!has_pos || !has_neg) throw Error(ErrorCode::SingleClass, "validation set needs both classes");

    NetworkConfig cfg = net_cfg;
    if (cfg.standardize_inputs && cfg.input_mean.empty()) {
        std::vector<const Sample*> all(first);
        all.insert(all.end(), second.begin(), second.end());
        fit_input_standardization(cfg, all);
    }
    TrainResult result{ModelParams::initialize(cfg), {}, 0, false};
    if (net_cfg.epochs == 0) return result;

    ModelParams params = result.params;
    Adam adam(params.values().size(), net_cfg.learning_rate);
    Rng rng(derive_seed(net_cfg.init_seed, 100));

    const std::size_t n1 = first.size();
    const std::size_t n2 = second.size();
    const std::size_t wanted =
        (n1 + n2 + static_cast<std::size_t>(net_cfg.batch_size) - 1) / static_cast<std::size_t>(net_cfg.batch_size);
    const std::size_t n_batches = std::max<std::size_t>(1, std::min({wanted, n1, n2}));

    std::vector<std::size_t> perm1(n1), perm2(n2);
    std::iota(perm1.begin(), perm1.end(), std::size_t{0});
    std::iota(perm2.begin(), perm2.end(), std::size_t{0});
    std::vector<double> grads(params.values().size());
    std::vector<ForwardCache> caches;
    std::vector<double> scores1, scores2;
    double best_mcc = -std::numeric_limits<double>::infinity();

    for (int epoch = 1; epoch <= net_cfg.epochs; ++epoch) {
        rng.shuffle(perm1);
        rng.shuffle(perm2);
        double risk_sum = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t a1 = n1 * b / n_batches, e1 = n1 * (b + 1) / n_batches;
            const std::size_t a2 = n2 * b / n_batches, e2 = n2 * (b + 1) / n_batches;
            const std::size_t m1 = e1 - a1, m2 = e2 - a2;
            if (caches.size() < m1 + m2) caches.resize(m1 + m2);
            scores1.resize(m1);
            scores2.resize(m2);
            for (std::size_t i = 0; i < m1; ++i) {
                scores1[i] = forward(params, std::span<const float>(first[perm1[a1 + i]]->data), &caches[i]);
            }
            for (std::size_t i = 0; i < m2; ++i) {
                scores2[i] = forward(params, std::span<const float>(second[perm2[a2 + i]]->data), &caches[m1 + i]);
            }
            const auto r = risk(scores1, scores2, risk_cfg);
            if (!std::isfinite(r.value)) {
                throw Error(ErrorCode::DivergenceDetected, "non-finite risk at epoch " + std::to_string(epoch));
            }
            risk_sum += r.value;
            std::fill(grads.begin(), grads.end(), 0.0);
            for (std::size_t i = 0; i < m1; ++i) {
                if (r.grad_first[i] != 0.0) backward(params, caches[i], r.grad_first[i], grads);
            }
            for (std::size_t i = 0; i < m2; ++i) {
                if (r.grad_second[i] != 0.0) backward(params, caches[m1 + i], r.grad_second[i], grads);
            }
            adam.step(params.values(), grads);
            params.round_to_float();
            if (!params.all_finite()) {
                throw Error(ErrorCode::DivergenceDetected, "non-finite parameters at epoch " + std::to_string(epoch));
            }
        }

        const auto val_scores = score_all(params, val.samples, jobs);
        std::vector<bool> preds(val_scores.size());
        for (std::size_t i = 0; i < preds.size(); ++i) preds[i] = val_scores[i] > 0.0;
        const EpochRecord rec{epoch, risk_sum / static_cast<double>(n_batches), mcc(confusion(preds, val.labels))};
        result.history.push_back(rec);
        log::debug("epoch " + std::to_string(epoch) + " risk " + std::to_string(rec.train_risk) + " val_mcc " +
                   std::to_string(rec.val_mcc));
        if (rec.val_mcc > best_mcc) {
            best_mcc = rec.val_mcc;
            result.params = params;
            result.best_epoch = epoch;
        }
        if (callbacks.on_epoch && !callbacks.on_epoch(rec)) {
            result.stopped_early = epoch < net_cfg.epochs;
            break;
        }
    }
    return result;
}

nlohmann::ordered_json history_to_json(const std::vector<EpochRecord>& history) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& h : history) {
        arr.push_back({{"epoch", h.epoch}, {"train_risk", h.train_risk}, {"val_mcc", h.val_mcc}});
    }
    return arr;
}

}  // namespace turngrab
