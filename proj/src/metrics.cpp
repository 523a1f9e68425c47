#include "turngrab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace turngrab {
namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

Confusion confusion(const std::vector<bool>& preds, const std::vector<bool>& labels) {
    if (preds.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "preds and labels differ in length");
    if (preds.empty()) throw Error(ErrorCode::EmptyInput, "confusion of empty lists");
    Confusion c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i]) {
            (labels[i] ? c.tp : c.fp)++;
        } else {
            (labels[i] ? c.fn : c.tn)++;
        }
    }
    return c;
}

double mcc(const Confusion& c) {
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (den == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(den);
}

double auc(const std::vector<double>& scores, const std::vector<bool>& labels) {
    if (scores.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool b : labels) n_pos += b ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw Error(ErrorCode::SingleClass, "AUC needs both classes");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Sum of (doubled) midranks of positives, kept integral until the end.
    double rank_sum2 = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank2 = static_cast<double>(i + 1 + j);  // 2 * ((i+1) + j) / 2
        for (std::size_t k = i; k < j; ++k) {
            if (labels[order[k]]) rank_sum2 += midrank2;
        }
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (rank_sum2 - np * (np + 1.0)) / (2.0 * np * nn);
}

Prf prf_accuracy(const Confusion& c) {
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    Prf r;
    r.precision = ratio(tp, tp + fp);
    r.recall = ratio(tp, tp + fn);
    r.f_score = ratio(2.0 * tp, 2.0 * tp + fp + fn);
    r.accuracy = ratio(tp + tn, tp + tn + fp + fn);
    return r;
}

std::vector<double> rs_turn(const std::vector<std::vector<Segment>>& per_participant, double backchannel_max) {
    std::vector<double> counts(per_participant.size(), 0.0);
    double total = 0.0;
    for (std::size_t p = 0; p < per_participant.size(); ++p) {
        for (const auto& s : per_participant[p]) {
            if (s.duration() > backchannel_max) counts[p] += 1.0;
        }
        total += counts[p];
    }
    if (total == 0.0) throw Error(ErrorCode::NoQualifyingTurns, "no turn longer than the backchannel limit");
    for (double& c : counts) c /= total;
    return counts;
}

std::vector<double> rs_time(const std::vector<std::vector<Segment>>& per_participant) {
    std::vector<double> time(per_participant.size(), 0.0);
    double total = 0.0;
    for (std::size_t p = 0; p < per_participant.size(); ++p) {
        for (const auto& s : per_participant[p]) time[p] += s.duration();
        total += time[p];
    }
    if (!(total > 0.0)) throw Error(ErrorCode::ZeroTotalTime, "total speaking time is zero");
    for (double& t : time) t /= total;
    return time;
}

nlohmann::ordered_json evaluation_report(const std::vector<double>& scores, const std::vector<bool>& labels,
                                         double threshold) {
    std::vector<bool> preds(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) preds[i] = scores[i] > threshold;
    const auto c = confusion(preds, labels);
    const auto prf = prf_accuracy(c);
    nlohmann::ordered_json j;
    j["mcc"] = mcc(c);
    j["auc"] = auc(scores, labels);
    j["f_score"] = prf.f_score;
    j["accuracy"] = prf.accuracy;
    j["precision"] = prf.precision;
    j["recall"] = prf.recall;
    j["n"] = scores.size();
    j["threshold"] = threshold;
    j["confusion"] = {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
    j["conventions"] = "degenerate mcc/precision/recall/f_score reported as 0";
    return j;
}

}  // namespace turngrab
