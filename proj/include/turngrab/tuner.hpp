#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "turngrab/network.hpp"

namespace turngrab {

struct SearchSpace {
    std::vector<int> conv1_dims{8, 16, 32, 64};
    std::vector<int> conv2_dims{8, 16, 32, 64, 128};
    std::vector<int> lstm_layers{1, 2, 3, 4, 5, 6};
    std::vector<int> lstm_dims{16, 32, 64, 128};
    std::vector<double> learning_rates{1e-2, 1e-3, 1e-4, 1e-5};
    int epochs = 50;
    int prune_warmup = 5;

    void validate() const;
    nlohmann::ordered_json to_json() const;
    static SearchSpace from_json(const nlohmann::json& j);
};

/// Cartesian product; conv1 varies slowest, then conv2, lstm_layers,
/// lstm_dim, and learning rate fastest. Other fields come from `base`.
std::vector<NetworkConfig> grid_trials(const SearchSpace& space, const NetworkConfig& base = {});

enum class PruneDecision { keep, prune };

/// keep while epoch <= warmup or the pool is empty; afterwards prune iff the
/// value is strictly below the pool median (even pools average the middle two).
PruneDecision median_prune(std::vector<double> pool, double value, int epoch, int warmup = 5);

enum class TrialStatus { running, pruned, complete };

struct Trial {
    int trial_id = 0;
    NetworkConfig config;
    std::vector<double> history;  // validation MCC per epoch
    TrialStatus status = TrialStatus::running;
    double best_mcc = 0.0;
};

struct StudyReport {
    std::uint64_t seed = 0;
    SearchSpace space;
    std::vector<Trial> trials;
    std::optional<int> best_trial;
    std::optional<NetworkConfig> best_config;
    double best_mcc = 0.0;

    std::size_t executed_epochs() const;
    nlohmann::ordered_json to_json() const;
    static StudyReport from_json(const nlohmann::json& j);
};

/// Epoch reporter handed to a trial: (epoch, val_mcc) -> continue?
using EpochReporter = std::function<bool(int, double)>;

/// Runs one configuration, calling the reporter after every epoch and
/// stopping when it returns false. Must be deterministic in (config, seed).
using TrialFn = std::function<void(const NetworkConfig&, std::uint64_t, const EpochReporter&)>;

/// Sequential grid study with median pruning. With a checkpoint path the
/// report-so-far is rewritten after every trial; if that file already exists
/// finished trials are taken from it instead of being rerun.
StudyReport run_study(const SearchSpace& space, const TrialFn& train_fn, std::uint64_t seed,
                      const NetworkConfig& base = {}, const std::optional<std::filesystem::path>& checkpoint = {});

}  // namespace turngrab
