#include "turngrab/pu_risk.hpp"

#include <cmath>

namespace turngrab {
namespace {

void check_inputs(std::span<const double> a, std::span<const double> b, const RiskConfig& cfg) {
    if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyBatch, "risk estimators need non-empty score lists");
    if (!(cfg.prior >= 0.0 && cfg.prior <= 1.0)) throw Error(ErrorCode::InvalidConfig, "prior outside [0, 1]");
}

// Mean loss over a list for label y, with per-element derivative / n.
double mean_loss(std::span<const double> scores, int y, LossKind kind, std::vector<double>* grad) {
    const double inv_n = 1.0 / static_cast<double>(scores.size());
    double sum = 0.0;
    if (grad) grad->assign(scores.size(), 0.0);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto l = loss(scores[i], y, kind);
        sum += l.value;
        if (grad) (*grad)[i] = l.derivative * inv_n;
    }
    return sum / static_cast<double>(scores.size());
}

}  // namespace

std::string to_string(LossKind kind) { return kind == LossKind::sigmoid ? "sigmoid" : "logistic"; }

std::string to_string(Estimator est) {
    switch (est) {
        case Estimator::pn: return "pn";
        case Estimator::upu: return "upu";
        case Estimator::nnpu: return "nnpu";
    }
    return "nnpu";
}

LossKind loss_kind_from_string(const std::string& s) {
    if (s == "sigmoid") return LossKind::sigmoid;
    if (s == "logistic") return LossKind::logistic;
    throw Error(ErrorCode::InvalidConfig, "unknown loss '" + s + "'");
}

Estimator estimator_from_string(const std::string& s) {
    if (s == "pn") return Estimator::pn;
    if (s == "upu") return Estimator::upu;
    if (s == "nnpu") return Estimator::nnpu;
    throw Error(ErrorCode::InvalidConfig, "unknown estimator '" + s + "'");
}

void RiskConfig::validate() const {
    if (!(prior > 0.0 && prior < 1.0)) throw Error(ErrorCode::InvalidConfig, "prior must lie in (0, 1)");
}

LossValue loss(double t, int y, LossKind kind) {
    if (y != 1 && y != -1) throw Error(ErrorCode::InvalidConfig, "label must be +1 or -1");
    const double z = y * t;
    // s = 1 / (1 + exp(z)), evaluated without overflow.
    double s;
    if (z >= 0.0) {
        const double e = std::exp(-z);
        s = e / (1.0 + e);
    } else {
        s = 1.0 / (1.0 + std::exp(z));
    }
    if (kind == LossKind::sigmoid) {
        return {s, -y * s * (1.0 - s)};
    }
    const double softplus = (z >= 0.0 ? 0.0 : -z) + std::log1p(std::exp(-std::abs(z)));
    return {softplus, -y * s};
}

RiskValue risk_pn(std::span<const double> scores_p, std::span<const double> scores_n, const RiskConfig& cfg) {
    check_inputs(scores_p, scores_n, cfg);
    const double pi = cfg.prior;
    RiskValue r;
    const double rp = mean_loss(scores_p, +1, cfg.loss_kind, &r.grad_first);
    const double rn = mean_loss(scores_n, -1, cfg.loss_kind, &r.grad_second);
    r.value = pi * rp + (1.0 - pi) * rn;
    for (auto& g : r.grad_first) g *= pi;
    for (auto& g : r.grad_second) g *= (1.0 - pi);
    return r;
}

RiskValue risk_upu(std::span<const double> scores_p, std::span<const double> scores_u, const RiskConfig& cfg) {
    check_inputs(scores_p, scores_u, cfg);
    const double pi = cfg.prior;
    std::vector<double> g_pp, g_pn, g_un;
    const double rp_pos = mean_loss(scores_p, +1, cfg.loss_kind, &g_pp);
    const double rp_neg = mean_loss(scores_p, -1, cfg.loss_kind, &g_pn);
    const double ru_neg = mean_loss(scores_u, -1, cfg.loss_kind, &g_un);
    RiskValue r;
    r.value = pi * rp_pos + (ru_neg - pi * rp_neg);
    r.grad_first.resize(scores_p.size());
    for (std::size_t i = 0; i < scores_p.size(); ++i) r.grad_first[i] = pi * g_pp[i] - pi * g_pn[i];
    r.grad_second = std::move(g_un);
    return r;
}

RiskValue risk_nnpu(std::span<const double> scores_p, std::span<const double> scores_u, const RiskConfig& cfg) {
    check_inputs(scores_p, scores_u, cfg);
    const double pi = cfg.prior;
    std::vector<double> g_pp, g_pn, g_un;
    const double rp_pos = mean_loss(scores_p, +1, cfg.loss_kind, &g_pp);
    const double rp_neg = mean_loss(scores_p, -1, cfg.loss_kind, &g_pn);
    const double ru_neg = mean_loss(scores_u, -1, cfg.loss_kind, &g_un);
    const double negative_part = ru_neg - pi * rp_neg;
    RiskValue r;
    r.clip_active = negative_part < 0.0;
    r.grad_first.resize(scores_p.size());
    if (r.clip_active) {
        r.value = pi * rp_pos;
        for (std::size_t i = 0; i < scores_p.size(); ++i) r.grad_first[i] = pi * g_pp[i];
        r.grad_second.assign(scores_u.size(), 0.0);
    } else {
        // Same grouping as risk_upu so the unclipped values agree bit for bit,
        // and adding a non-negative term keeps value >= pi * rp_pos exactly.
        r.value = pi * rp_pos + negative_part;
        for (std::size_t i = 0; i < scores_p.size(); ++i) r.grad_first[i] = pi * g_pp[i] - pi * g_pn[i];
        r.grad_second = std::move(g_un);
    }
    return r;
}

RiskValue risk(std::span<const double> first, std::span<const double> second, const RiskConfig& cfg) {
    switch (cfg.estimator) {
        case Estimator::pn: return risk_pn(first, second, cfg);
        case Estimator::upu: return risk_upu(first, second, cfg);
        case Estimator::nnpu: return risk_nnpu(first, second, cfg);
    }
    throw Error(ErrorCode::InvalidConfig, "unknown estimator");
}

double estimate_prior(const std::vector<bool>& labels) {
    std::size_t pos = 0;
    for (bool b : labels) pos += b ? 1 : 0;
    if (labels.empty() || pos == 0 || pos == labels.size()) {
        throw Error(ErrorCode::SingleClass, "prior estimation needs both classes");
    }
    return static_cast<double>(pos) / static_cast<double>(labels.size());
}

}  // namespace turngrab
