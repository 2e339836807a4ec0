#pragma once

#include "superres/detect.hpp"
#include "superres/estimate.hpp"
#include "superres/geometry.hpp"
#include "superres/noise.hpp"
#include "superres/signals.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace superres {

using json = nlohmann::json;

/// Invalid experiment configuration; `path` names the offending field.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// One fully resolved experiment point (a config after sweep expansion).
struct Scenario {
    std::string label;
    json values;  ///< sweep coordinates of this point
    ArrayGeometry geom;
    Direction center;
    DirectionSet truth;
    SignalModel signal;
    std::vector<NoiseComponent> noise;
    /// Per-element power spread c for receiver noise redrawn each trial; negative when absent.
    double fluctuation = -1.0;
    double fluctuation_sigma2 = 1.0;
    /// Shared noise model when the covariance does not change between trials.
    std::shared_ptr<const NoiseModel> noise_model;
    CMat A;   ///< transfer matrix of the true directions
    RVec rms; ///< sqrt(E|z_k|^2), the clipping reference
    std::vector<Perturbation> perturbations;
    EstimatorSpec estimator;
    /// Stage directions are the true ones (and E{Q} minimisers below the true count).
    bool exact_estimator = false;
    TestConfig test;
    int trials = 1;
    std::uint64_t seed = 1;
};

[[nodiscard]] json load_config_file(const std::filesystem::path& path);

/// Cross product of the `sweep` block applied to the base config. Keys are JSON
/// pointers ("/signal/snr_db") or the aliases snr_db, alpha, K, separation_bw.
[[nodiscard]] std::vector<json> expand_sweep(const json& config);

[[nodiscard]] Scenario make_scenario(const json& point);

struct TrialRecord {
    int trial = 0;
    TestOutcome outcome;
    std::string error;
};

struct PointResult {
    Scenario scenario;
    std::vector<TrialRecord> trials;
    json summary;
};

struct RunOptions {
    unsigned threads = 0;  ///< 0 = hardware concurrency
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
};

/// Output directory: explicit option, then config "output.dir", then the
/// SUPERRES_OUT_DIR environment variable, then ./superres_out.
[[nodiscard]] std::filesystem::path resolve_out_dir(const json& config, const std::optional<std::filesystem::path>& explicit_dir);

/// Runs a single trial; deterministic in (scenario, trial index).
[[nodiscard]] TrialRecord run_trial(const Scenario& scenario, int trial);

/// Runs every sweep point, writing trials_<k>.csv per point and summary.json.
std::vector<PointResult> run_experiment(const json& config, const RunOptions& options);

/// Aggregates recomputed from the per-trial outcomes.
[[nodiscard]] json summarize(const Scenario& scenario, const std::vector<TrialRecord>& trials);

/// CSV rows `trial,stage_M,accepted,q_bar,eta,u_hat..,v_hat..,iters,proj_events`.
void write_trials_csv(std::ostream& os, const Scenario& scenario, const std::vector<TrialRecord>& trials);

/// Closed-form curves: PD vs SNR / range and separation, CRLB, SA dispersion.
void theory_tables(const json& config, const std::filesystem::path& out_dir);

/// CRLB summary for the scenario of a config (first sweep point).
[[nodiscard]] json crlb_report(const json& config);

/// FNV-1a hash of the canonical config text.
[[nodiscard]] std::string config_hash(const json& config);

inline constexpr const char* version = "0.1.0";

}  // namespace superres
