#pragma once

#include <functional>
#include <vector>

#include <json.hpp>

#include "turngrab/dataset.hpp"
#include "turngrab/network.hpp"
#include "turngrab/pu_risk.hpp"

namespace turngrab {

/// Adam with bias correction.
class Adam {
public:
    Adam(std::size_t n, double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
    void step(std::span<double> params, std::span<const double> grads);
    long steps() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_risk = 0.0;
    double val_mcc = 0.0;
};

struct TrainCallbacks {
    /// Called after every epoch; returning false stops training.
    std::function<bool(const EpochRecord&)> on_epoch;
};

struct TrainResult {
    ModelParams params;  // best validation-MCC epoch (initial params if no epoch ran)
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    bool stopped_early = false;
};

/// Minibatch training of the network on a risk estimator. `first` holds the
/// positive set; `second` holds the unlabeled set (uPU/nnPU) or the negative
/// set (PN). Every minibatch takes a proportional slice of both.
TrainResult train(const std::vector<const Sample*>& first, const std::vector<const Sample*>& second,
                  const LabeledView& val, const NetworkConfig& net_cfg, const RiskConfig& risk_cfg,
                  const TrainCallbacks& callbacks = {}, int jobs = 1);

/// Sets cfg.input_mean / input_scale to the per-channel mean and standard
/// deviation over every frame of `samples`.
void fit_input_standardization(NetworkConfig& cfg, const std::vector<const Sample*>& samples);

struct Prediction {
    bool intention = false;
    double score = 0.0;
};

/// intention = logit > threshold (strict).
Prediction predict(const ModelParams& params, const Sample& sample, double threshold = 0.0);

/// Logits for a list of samples; jobs > 1 fans out over threads with results
/// written in input order.
std::vector<double> score_all(const ModelParams& params, const std::vector<const Sample*>& samples, int jobs = 1);

nlohmann::ordered_json history_to_json(const std::vector<EpochRecord>& history);

}  // namespace turngrab
