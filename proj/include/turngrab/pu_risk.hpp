#pragma once

#include <span>
#include <string>
#include <vector>

#include "turngrab/common.hpp"

namespace turngrab {

enum class LossKind { sigmoid, logistic };
enum class Estimator { pn, upu, nnpu };

std::string to_string(LossKind kind);
std::string to_string(Estimator est);
LossKind loss_kind_from_string(const std::string& s);
Estimator estimator_from_string(const std::string& s);

struct RiskConfig {
    double prior = 0.5;  // P(Y = +1)
    LossKind loss_kind = LossKind::sigmoid;
    Estimator estimator = Estimator::nnpu;

    /// Requires 0 < prior < 1.
    void validate() const;
};

struct LossValue {
    double value;       // l(t, y) >= 0
    double derivative;  // dl/dt
};

/// sigmoid: 1 / (1 + exp(y t)); logistic: ln(1 + exp(-y t)). y must be +1 or -1.
LossValue loss(double t, int y, LossKind kind);

/// Estimator value plus d(value)/d(score) for every input score. For PN the
/// second list holds negatives, for uPU/nnPU it holds unlabeled scores.
struct RiskValue {
    double value = 0.0;
    bool clip_active = false;
    std::vector<double> grad_first;
    std::vector<double> grad_second;
};

/// pi * mean l(t,+1) over P + (1 - pi) * mean l(t,-1) over N.
RiskValue risk_pn(std::span<const double> scores_p, std::span<const double> scores_n, const RiskConfig& cfg);

/// pi * Rp+ + Ru- - pi * Rp-.
RiskValue risk_upu(std::span<const double> scores_p, std::span<const double> scores_u, const RiskConfig& cfg);

/// pi * Rp+ + max(0, Ru- - pi * Rp-). When the clipped term is negative its
/// gradient is taken as zero.
RiskValue risk_nnpu(std::span<const double> scores_p, std::span<const double> scores_u, const RiskConfig& cfg);

/// Dispatches on cfg.estimator.
RiskValue risk(std::span<const double> first, std::span<const double> second, const RiskConfig& cfg);

/// Fraction of positive labels. Throws SingleClass unless both classes occur.
double estimate_prior(const std::vector<bool>& labels);

}  // namespace turngrab
