#include "turngrab/tuner.hpp"

#include <algorithm>
#include <fstream>

#include "turngrab/log.hpp"

namespace turngrab {
namespace {

std::string status_name(TrialStatus s) {
    switch (s) {
        case TrialStatus::running: return "running";
        case TrialStatus::pruned: return "pruned";
        case TrialStatus::complete: return "complete";
    }
    return "running";
}

TrialStatus status_from(const std::string& s) {
    if (s == "running") return TrialStatus::running;
    if (s == "pruned") return TrialStatus::pruned;
    if (s == "complete") return TrialStatus::complete;
    throw Error(ErrorCode::CheckpointCorrupt, "unknown trial status '" + s + "'");
}

void refresh_best(StudyReport& r) {
    r.best_trial.reset();
    r.best_config.reset();
    r.best_mcc = 0.0;
    for (const auto& t : r.trials) {
        if (t.status != TrialStatus::complete) continue;
        if (!r.best_trial || t.best_mcc > r.best_mcc) {
            r.best_trial = t.trial_id;
            r.best_config = t.config;
            r.best_mcc = t.best_mcc;
        }
    }
}

void write_checkpoint(const StudyReport& r, const std::filesystem::path& path) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
        out << r.to_json().dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

bool same_config(const NetworkConfig& a, const NetworkConfig& b) { return a.to_json() == b.to_json(); }

}  // namespace

void SearchSpace::validate() const {
    if (conv1_dims.empty() || conv2_dims.empty() || lstm_layers.empty() || lstm_dims.empty() ||
        learning_rates.empty()) {
        throw Error(ErrorCode::InvalidConfig, "every search dimension needs at least one value");
    }
    if (epochs < 1 || prune_warmup < 0) throw Error(ErrorCode::InvalidConfig, "epochs >= 1 and prune_warmup >= 0");
}

nlohmann::ordered_json SearchSpace::to_json() const {
    nlohmann::ordered_json j;
    j["conv1_dims"] = conv1_dims;
    j["conv2_dims"] = conv2_dims;
    j["lstm_layers"] = lstm_layers;
    j["lstm_dims"] = lstm_dims;
    j["learning_rates"] = learning_rates;
    j["epochs"] = epochs;
    j["prune_warmup"] = prune_warmup;
    return j;
}

SearchSpace SearchSpace::from_json(const nlohmann::json& j) {
    SearchSpace s;
    s.conv1_dims = j.value("conv1_dims", s.conv1_dims);
    s.conv2_dims = j.value("conv2_dims", s.conv2_dims);
    s.lstm_layers = j.value("lstm_layers", s.lstm_layers);
    s.lstm_dims = j.value("lstm_dims", s.lstm_dims);
    s.learning_rates = j.value("learning_rates", s.learning_rates);
    s.epochs = j.value("epochs", s.epochs);
    s.prune_warmup = j.value("prune_warmup", s.prune_warmup);
    s.validate();
    return s;
}

std::vector<NetworkConfig> grid_trials(const SearchSpace& space, const NetworkConfig& base) {
    space.validate();
    std::vector<NetworkConfig> out;
    out.reserve(space.conv1_dims.size() * space.conv2_dims.size() * space.lstm_layers.size() *
                space.lstm_dims.size() * space.learning_rates.size());
    for (int c1 : space.conv1_dims)
        for (int c2 : space.conv2_dims)
            for (int layers : space.lstm_layers)
                for (int dim : space.lstm_dims)
                    for (double lr : space.learning_rates) {
                        NetworkConfig c = base;
                        c.conv1_dim = c1;
                        c.conv2_dim = c2;
                        c.lstm_layers = layers;
                        c.lstm_dim = dim;
                        c.learning_rate = lr;
                        c.epochs = space.epochs;
                        out.push_back(c);
                    }
    return out;
}

PruneDecision median_prune(std::vector<double> pool, double value, int epoch, int warmup) {
    if (epoch < 1) throw Error(ErrorCode::InvalidConfig, "epoch must be >= 1");
    if (epoch <= warmup || pool.empty()) return PruneDecision::keep;
    std::sort(pool.begin(), pool.end());
    const std::size_t n = pool.size();
    const double median = n % 2 == 1 ? pool[n / 2] : 0.5 * (pool[n / 2 - 1] + pool[n / 2]);
    return value < median ? PruneDecision::prune : PruneDecision::keep;
}

std::size_t StudyReport::executed_epochs() const {
    std::size_t n = 0;
    for (const auto& t : trials) n += t.history.size();
    return n;
}

nlohmann::ordered_json StudyReport::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["space"] = space.to_json();
    j["trials"] = nlohmann::ordered_json::array();
    for (const auto& t : trials) {
        j["trials"].push_back({{"trial_id", t.trial_id},
                               {"config", t.config.to_json()},
                               {"history", t.history},
                               {"status", status_name(t.status)},
                               {"best_mcc", t.best_mcc}});
    }
    j["best_trial"] = best_trial ? nlohmann::ordered_json(*best_trial) : nlohmann::ordered_json(nullptr);
    j["best_config"] = best_config ? best_config->to_json() : nlohmann::ordered_json(nullptr);
    j["best_mcc"] = best_mcc;
    j["executed_epochs"] = executed_epochs();
    return j;
}

StudyReport StudyReport::from_json(const nlohmann::json& j) {
    try {
        StudyReport r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.space = SearchSpace::from_json(j.at("space"));
        for (const auto& t : j.at("trials")) {
            Trial tr;
            tr.trial_id = t.at("trial_id").get<int>();
            tr.config = NetworkConfig::from_json(t.at("config"));
            tr.history = t.at("history").get<std::vector<double>>();
            tr.status = status_from(t.at("status").get<std::string>());
            tr.best_mcc = t.at("best_mcc").get<double>();
            r.trials.push_back(std::move(tr));
        }
        refresh_best(r);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::CheckpointCorrupt, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CheckpointCorrupt) throw;
        throw Error(ErrorCode::CheckpointCorrupt, e.what());
    }
}

StudyReport run_study(const SearchSpace& space, const TrialFn& train_fn, std::uint64_t seed,
                      const NetworkConfig& base, const std::optional<std::filesystem::path>& checkpoint) {
    const auto grid = grid_trials(space, base);
    StudyReport report;
    report.seed = seed;
    report.space = space;

    if (checkpoint && std::filesystem::exists(*checkpoint)) {
        std::ifstream in(*checkpoint);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::CheckpointCorrupt, checkpoint->string() + ": " + e.what());
        }
        auto saved = StudyReport::from_json(j);
        if (saved.seed != seed || saved.space.to_json() != space.to_json() || saved.trials.size() > grid.size()) {
            throw Error(ErrorCode::CheckpointCorrupt, "checkpoint belongs to a different study");
        }
        for (std::size_t i = 0; i < saved.trials.size(); ++i) {
            const auto& t = saved.trials[i];
            if (t.trial_id != static_cast<int>(i) || !same_config(t.config, grid[i])) {
                throw Error(ErrorCode::CheckpointCorrupt, "checkpoint trial " + std::to_string(i) + " does not match grid");
            }
            if (t.status == TrialStatus::running) break;
            report.trials.push_back(t);
        }
        log::info("resuming study at trial " + std::to_string(report.trials.size()) + " of " +
                  std::to_string(grid.size()));
    }

    for (std::size_t i = report.trials.size(); i < grid.size(); ++i) {
        Trial trial;
        trial.trial_id = static_cast<int>(i);
        trial.config = grid[i];
        const auto& finished = report.trials;
        const EpochReporter reporter = [&](int epoch, double value) {
            trial.history.push_back(value);
            std::vector<double> pool;
            for (const auto& t : finished) {
                if (static_cast<int>(t.history.size()) >= epoch) pool.push_back(t.history[static_cast<std::size_t>(epoch - 1)]);
            }
            if (median_prune(std::move(pool), value, epoch, space.prune_warmup) == PruneDecision::prune) {
                trial.status = TrialStatus::pruned;
                return false;
            }
            return true;
        };
        train_fn(trial.config, seed, reporter);
        if (trial.status == TrialStatus::running) trial.status = TrialStatus::complete;
        trial.best_mcc = trial.history.empty() ? 0.0 : *std::max_element(trial.history.begin(), trial.history.end());
        log::info("trial " + std::to_string(i) + " " + status_name(trial.status) + " after " +
                  std::to_string(trial.history.size()) + " epochs, best mcc " + std::to_string(trial.best_mcc));
        report.trials.push_back(std::move(trial));
        refresh_best(report);
        if (checkpoint) write_checkpoint(report, *checkpoint);
    }
    refresh_best(report);
    return report;
}

}  // namespace turngrab
