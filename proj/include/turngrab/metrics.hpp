#pragma once

#include <cstddef>
#include <vector>

#include <json.hpp>

#include "turngrab/dataio.hpp"

namespace turngrab {

struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

Confusion confusion(const std::vector<bool>& preds, const std::vector<bool>& labels);

/// Matthews correlation; 0 when any marginal is empty.
double mcc(const Confusion& c);

/// Mann-Whitney AUC with midranks, so ties count one half.
double auc(const std::vector<double>& scores, const std::vector<bool>& labels);

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
    double accuracy = 0.0;
};

/// Standard formulas; any 0/0 ratio is reported as 0.
Prf prf_accuracy(const Confusion& c);

/// Per-participant share of turns after dropping segments of at most
/// backchannel_max seconds.
std::vector<double> rs_turn(const std::vector<std::vector<Segment>>& per_participant, double backchannel_max = 1.0);

/// Per-participant share of total speaking time (no backchannel exclusion).
std::vector<double> rs_time(const std::vector<std::vector<Segment>>& per_participant);

/// {mcc, auc, f_score, accuracy, precision, recall, n, threshold} for scores
/// thresholded with a strict '>' comparison.
nlohmann::ordered_json evaluation_report(const std::vector<double>& scores, const std::vector<bool>& labels,
                                         double threshold);

}  // namespace turngrab
