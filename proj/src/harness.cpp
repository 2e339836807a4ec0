#include "superres/harness.hpp"

#include "superres/bounds.hpp"
#include "superres/qfunc.hpp"
#include "superres/stats.hpp"

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

namespace superres {

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + "/" + key, "required field missing");
    return obj.at(key);
}

template <class T>
T value_or(const json& obj, const std::string& key, T fallback, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "/" + key, e.what());
    }
}

RVec vector_or(const json& obj, const std::string& key, const std::string& path) {
    const auto v = value_or<std::vector<double>>(obj, key, {}, path);
    return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SignalKind parse_signal_kind(const std::string& s, const std::string& path) {
    if (s == "deterministic") return SignalKind::deterministic;
    if (s == "phase_fluct") return SignalKind::phase_fluct;
    if (s == "uniform_phase") return SignalKind::uniform_phase;
    if (s == "rayleigh") return SignalKind::rayleigh;
    throw ConfigError(path, "unknown signal model '" + s + "'");
}

Correction parse_variant(const std::string& s, const std::string& path) {
    if (s == "plain") return Correction::plain;
    if (s == "log") return Correction::log;
    if (s == "arctan") return Correction::arctan;
    if (s == "hard_limit") return Correction::hard_limit;
    if (s == "sign") return Correction::sign;
    throw ConfigError(path, "unknown correction variant '" + s + "'");
}

DirectionSet parse_targets(const json& t, const ArrayGeometry& geom, Direction center, double bw) {
    const std::string path = "/targets";
    std::vector<Direction> dirs;
    if (t.contains("u_bw")) {
        const auto u = value_or<std::vector<double>>(t, "u_bw", {}, path);
        auto v = value_or<std::vector<double>>(t, "v_bw", std::vector<double>(u.size(), 0.0), path);
        if (v.size() != u.size()) throw ConfigError(path + "/v_bw", "length differs from u_bw");
        if (geom.kind() == ArrayKind::linear && std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; }))
            throw ConfigError(path + "/v_bw", "linear arrays have no v coordinate");
        for (std::size_t i = 0; i < u.size(); ++i) dirs.push_back({center.u + u[i] * bw, center.v + v[i] * bw});
    } else {
        const int count = value_or<int>(t, "count", 2, path);
        const double sep = require(t, "separation_bw", path).get<double>();
        if (count < 1) throw ConfigError(path + "/count", "must be at least 1");
        for (int i = 0; i < count; ++i) dirs.push_back({center.u + (i - (count - 1) / 2.0) * sep * bw, center.v});
    }
    if (dirs.empty()) throw ConfigError(path, "no targets given");
    DirectionSet out(std::move(dirs));
    if (!out.visible()) throw ConfigError(path, "targets outside the visible region");
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

json interval(std::size_t k, std::size_t n) {
    const auto [lo, hi] = wilson_interval(k, n);
    return json::array({lo, hi});
}

/// Applies one sweep key to a config copy.
void apply_override(json& cfg, const std::string& key, const json& value) {
    static const std::map<std::string, std::string> aliases = {
        {"snr_db", "/signal/snr_db"}, {"alpha", "/test/alpha"}, {"K", "/test/K"},
        {"separation_bw", "/targets/separation_bw"}};
    std::string ptr = key;
    if (auto it = aliases.find(key); it != aliases.end()) ptr = it->second;
    if (ptr.empty() || ptr[0] != '/') throw ConfigError("/sweep/" + key, "unknown sweep key");
    cfg[json::json_pointer(ptr)] = value;
}

CVec deterministic_amplitudes(const SignalModel& m) {
    CVec b(m.size());
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double phase = m.mean_phase.size() ? m.mean_phase[i] : 0.0;
        b[i] = (m.kind == SignalKind::rayleigh ? std::sqrt(m.power[i]) : m.magnitude[i]) * std::exp(j1 * phase);
    }
    return b;
}

}  // namespace

json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("<file>", "cannot open " + path.string());
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("<file>", e.what());
    }
}

std::vector<json> expand_sweep(const json& config) {
    std::vector<json> points{config};
    points[0].erase("sweep");
    points[0]["_point"] = json::object();
    if (!config.contains("sweep")) return points;
    const json& sweep = config.at("sweep");
    if (!sweep.is_object()) throw ConfigError("/sweep", "must be an object");
    for (const auto& [key, values] : sweep.items()) {
        if (!values.is_array() || values.empty()) throw ConfigError("/sweep/" + key, "must be a non-empty array");
        std::vector<json> next;
        for (const auto& base : points)
            for (const auto& v : values) {
                json p = base;
                apply_override(p, key, v);
                p["_point"][key] = v;
                next.push_back(std::move(p));
            }
        points = std::move(next);
    }
    return points;
}

Scenario make_scenario(const json& point) {
    const std::string array_name = require(point, "array", "").get<std::string>();
    std::optional<ArrayGeometry> geom;
    try {
        geom = ArrayGeometry::resolve(array_name);
    } catch (const std::exception& e) {
        throw ConfigError("/array", e.what());
    }
    const json center_j = point.value("center", json::object());
    const Direction center{value_or<double>(center_j, "u", 0.0, "/center"), value_or<double>(center_j, "v", 0.0, "/center")};
    const double bw = beamwidth(*geom);
    const DirectionSet truth = parse_targets(require(point, "targets", ""), *geom, center, bw);
    const int M = static_cast<int>(truth.size());

    // Noise.
    std::vector<NoiseComponent> noise;
    double fluctuation = -1.0;
    double fluct_sigma2 = 1.0;
    double white_sigma2 = 0.0;
    const json noise_j = point.value("noise", json::array({json{{"type", "white"}, {"sigma2", 1.0}}}));
    for (std::size_t i = 0; i < noise_j.size(); ++i) {
        const json& c = noise_j[i];
        const std::string path = "/noise/" + std::to_string(i);
        const std::string type = require(c, "type", path).get<std::string>();
        if (type == "white") {
            const double s2 = value_or<double>(c, "sigma2", 1.0, path);
            noise.push_back(WhiteNoise{s2});
            white_sigma2 += s2;
        } else if (type == "linear_jammer") {
            noise.push_back(LinearJammer{value_or<double>(c, "power", 0.0, path), value_or<double>(c, "width", 0.1, path),
                                         value_or<double>(c, "u0", 0.0, path)});
        } else if (type == "planar_jammer") {
            noise.push_back(PlanarJammer{value_or<double>(c, "power", 0.0, path), value_or<double>(c, "radius", 0.1, path),
                                         value_or<double>(c, "u0", 0.0, path), value_or<double>(c, "v0", 0.0, path)});
        } else if (type == "fluctuating") {
            fluct_sigma2 = value_or<double>(c, "sigma2", 1.0, path);
            fluctuation = value_or<double>(c, "c", 0.25, path);
            if (!(fluctuation >= 0.0 && fluctuation < 1.0)) throw ConfigError(path + "/c", "must lie in [0,1)");
            white_sigma2 += fluct_sigma2;
        } else {
            throw ConfigError(path + "/type", "unknown noise component '" + type + "'");
        }
    }
    if (white_sigma2 <= 0.0) white_sigma2 = 1.0;

    // Signal.
    const json& sig = require(point, "signal", "");
    const SignalKind kind = parse_signal_kind(require(sig, "model", "/signal").get<std::string>(), "/signal/model");
    const double snr_db = require(sig, "snr_db", "/signal").get<double>();
    RVec phases = vector_or(sig, "phases_deg", "/signal") * (pi / 180.0);
    if (phases.size() && phases.size() != M) throw ConfigError("/signal/phases_deg", "needs one entry per target");
    SignalModel signal = SignalModel::with_snr(kind, M, snr_db, white_sigma2, phases,
                                               value_or<double>(sig, "phase_std_deg", 0.0, "/signal") * pi / 180.0);
    signal.doppler = value_or<double>(sig, "doppler_deg", 0.0, "/signal") * pi / 180.0;

    // Test.
    const json test_j = point.value("test", json::object());
    TestConfig test;
    test.alpha = value_or<double>(test_j, "alpha", 0.05, "/test");
    test.K = value_or<int>(test_j, "K", 1, "/test");
    test.sigma2 = value_or<double>(test_j, "sigma2", white_sigma2, "/test");
    const std::string mode = value_or<std::string>(test_j, "mode", "chi2", "/test");
    if (mode == "chi2")
        test.mode = ThresholdMode::chi2;
    else if (mode == "normal")
        test.mode = ThresholdMode::normal;
    else
        throw ConfigError("/test/mode", "expected chi2 or normal");
    if (test_j.contains("element_powers")) test.element_powers = vector_or(test_j, "element_powers", "/test");

    // Estimator.
    const json est_j = point.value("estimator", json{{"kind", "sa"}});
    const std::string est_kind = value_or<std::string>(est_j, "kind", "sa", "/estimator");
    EstimatorSpec estimator;
    bool exact = false;
    if (est_kind == "sa") {
        estimator.kind = EstimatorKind::sa;
        auto& sa = estimator.sa;
        sa.variant = parse_variant(value_or<std::string>(est_j, "variant", "hard_limit", "/estimator"), "/estimator/variant");
        if (est_j.contains("mu")) sa.mu = est_j.at("mu").get<double>();
        if (est_j.contains("delta")) sa.delta = est_j.at("delta").get<double>();
        if (est_j.contains("eta")) sa.eta = est_j.at("eta").get<double>();
        sa.eta_factor = value_or<double>(est_j, "eta_factor", 0.8, "/estimator");
        sa.saturate = value_or<bool>(est_j, "saturate", false, "/estimator");
        sa.iterations = value_or<int>(est_j, "iterations", 17, "/estimator");
        sa.epsilon = value_or<double>(est_j, "epsilon", 0.1, "/estimator");
        sa.spread = value_or<double>(est_j, "spread", 0.9, "/estimator");
        if (sa.iterations < 1) throw ConfigError("/estimator/iterations", "must be at least 1");
        if (!(sa.epsilon > 0.0 && sa.epsilon < 1.0)) throw ConfigError("/estimator/epsilon", "must lie in (0,1)");
        if (sa.mu && !(*sa.mu > 0.0)) throw ConfigError("/estimator/mu", "must be positive");
    } else if (est_kind == "grid") {
        estimator.kind = EstimatorKind::grid;
        estimator.grid.divisions = value_or<int>(est_j, "divisions", 6, "/estimator");
        estimator.grid_snapshots = value_or<int>(est_j, "snapshots", 1, "/estimator");
        if (estimator.grid_snapshots < 1) throw ConfigError("/estimator/snapshots", "must be at least 1");
    } else if (est_kind == "exact") {
        estimator.kind = EstimatorKind::fixed;
        exact = true;
    } else {
        throw ConfigError("/estimator/kind", "expected sa, grid or exact");
    }
    test.M_max = value_or<int>(test_j, "M_max", exact ? M : M + 1, "/test");
    if (exact && test.M_max > M) throw ConfigError("/test/M_max", "the exact estimator covers stages up to the true count");
    try {
        test.validate(geom->size());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/test", e.what());
    }

    Scenario s{.label = {}, .values = point.value("_point", json::object()), .geom = *geom, .center = center, .truth = truth,
               .signal = signal};
    s.noise = noise;
    s.fluctuation = fluctuation;
    s.fluctuation_sigma2 = fluct_sigma2;
    s.estimator = estimator;
    s.exact_estimator = exact;
    s.test = test;
    s.trials = value_or<int>(point, "trials", 100, "");
    s.seed = value_or<std::uint64_t>(point, "seed", 1, "");
    if (s.trials < 1) throw ConfigError("/trials", "must be at least 1");
    s.label = s.values.dump();
    s.A = transfer_matrix(s.geom, s.truth);

    const CMat B = amplitude_covariance(signal).B;
    if (exact) {
        const auto dp = detection_probability(s.geom, s.truth, B, test);
        s.estimator.fixed = dp.stage_estimates;
        s.estimator.fixed.push_back(truth);
    }

    std::vector<NoiseComponent> mean_components = noise;
    if (fluctuation >= 0.0) mean_components.push_back(WhiteNoise{fluct_sigma2});
    try {
        const NoiseModel mean_noise(s.geom, mean_components);
        const CMat C = s.A * B * s.A.adjoint() + mean_noise.covariance();
        s.rms = C.diagonal().real().cwiseMax(0.0).cwiseSqrt();
        if (fluctuation < 0.0) s.noise_model = std::make_shared<const NoiseModel>(mean_noise);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("/noise", e.what());
    }

    const json pert_j = point.value("perturbations", json::array());
    for (std::size_t i = 0; i < pert_j.size(); ++i) {
        const json& p = pert_j[i];
        const std::string path = "/perturbations/" + std::to_string(i);
        const std::string type = require(p, "type", path).get<std::string>();
        if (type == "coupling") {
            try {
                s.perturbations.push_back(Coupling{load_coupling_matrix(require(p, "file", path).get<std::string>(), s.geom.size())});
            } catch (const std::exception& e) {
                throw ConfigError(path + "/file", e.what());
            }
        } else if (type == "quantize") {
            double step = value_or<double>(p, "step", 0.0, path);
            if (p.contains("bits")) step = quantizer_step(p.at("bits").get<int>(), value_or<double>(p, "clip", 1.0, path) * s.rms.mean());
            if (!(step > 0.0)) throw ConfigError(path, "quantizer needs a positive step or a bit count");
            s.perturbations.push_back(Quantize{step});
        } else if (type == "clip") {
            s.perturbations.push_back(Clip{value_or<double>(p, "bound", 1.0, path)});
        } else {
            throw ConfigError(path + "/type", "unknown perturbation '" + type + "'");
        }
    }
    return s;
}

std::filesystem::path resolve_out_dir(const json& config, const std::optional<std::filesystem::path>& explicit_dir) {
    if (explicit_dir) return *explicit_dir;
    if (config.contains("output") && config["output"].contains("dir")) return config["output"]["dir"].get<std::string>();
    if (const char* env = std::getenv("SUPERRES_OUT_DIR"); env && *env) return env;
    return "superres_out";
}

TrialRecord run_trial(const Scenario& s, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    try {
        Rng rng(mix_seed(s.seed, static_cast<std::uint64_t>(trial)));
        std::shared_ptr<const NoiseModel> noise = s.noise_model;
        if (!noise) {
            auto comps = s.noise;
            comps.push_back(FluctuatingWhite{draw_fluctuating_powers(s.geom.size(), s.fluctuation_sigma2, s.fluctuation, rng)});
            noise = std::make_shared<const NoiseModel>(s.geom, std::move(comps));
        }
        int index = 0;
        GeneratorStream stream([&] {
            const CVec b = draw_amplitudes(s.signal, rng, index++);
            CVec z = s.A * b + noise->sample(rng);
            if (!s.perturbations.empty()) z = apply_perturbations(s.perturbations, z, s.rms);
            return z;
        });
        rec.outcome = multihypothesis_test(stream, s.geom, s.center, s.test, s.estimator);
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    return rec;
}

void write_trials_csv(std::ostream& os, const Scenario& s, const std::vector<TrialRecord>& trials) {
    const int cols = s.test.M_max;
    os << "trial,stage_M,accepted,q_bar,eta";
    for (int i = 1; i <= cols; ++i) os << ",u_hat" << i;
    for (int i = 1; i <= cols; ++i) os << ",v_hat" << i;
    os << ",iters,proj_events\n";
    for (const auto& t : trials) {
        if (!t.error.empty()) continue;
        for (const auto& st : t.outcome.stages) {
            os << t.trial << ',' << st.M << ',' << (st.accepted ? 1 : 0) << ',' << fmt17(st.q_bar) << ',' << fmt17(st.eta);
            for (int i = 0; i < cols; ++i) os << ',' << (i < static_cast<int>(st.estimate.size()) ? fmt17(st.estimate[i].u) : "");
            for (int i = 0; i < cols; ++i) os << ',' << (i < static_cast<int>(st.estimate.size()) ? fmt17(st.estimate[i].v) : "");
            os << ',' << st.iterations << ',' << st.projections << '\n';
        }
    }
}

json summarize(const Scenario& s, const std::vector<TrialRecord>& trials) {
    const int M = static_cast<int>(s.truth.size());
    const double bw = beamwidth(s.geom);
    std::size_t valid = 0, detected = 0, over = 0, under = 0, errors = 0;
    std::vector<std::vector<double>> est(static_cast<std::size_t>(M) * 2);
    for (const auto& t : trials) {
        if (!t.error.empty()) {
            ++errors;
            continue;
        }
        ++valid;
        const int m_hat = t.outcome.M_hat;
        if (m_hat == M) ++detected;
        if (m_hat > M) ++over;
        if (m_hat < M) ++under;
        for (const auto& st : t.outcome.stages)
            if (st.M == M)
                for (int i = 0; i < M; ++i) {
                    est[i].push_back(st.estimate[i].u);
                    est[M + i].push_back(st.estimate[i].v);
                }
    }
    json out;
    out["label"] = s.label;
    out["values"] = s.values;
    out["trials"] = trials.size();
    out["errors"] = errors;
    const double n = static_cast<double>(std::max<std::size_t>(valid, 1));
    out["pd"] = detected / n;
    out["pd_ci95"] = interval(detected, valid);
    out["pf1"] = over / n;
    out["pf1_ci95"] = interval(over, valid);
    out["p_under"] = under / n;
    const DirectionSet truth = s.truth.canonical();
    json std_bw = json::array(), bias_bw = json::array();
    const int dims = s.geom.kind() == ArrayKind::planar ? 2 : 1;
    for (int d = 0; d < dims; ++d)
        for (int i = 0; i < M; ++i) {
            const auto& v = est[d * M + i];
            if (v.size() < 2) {
                std_bw.push_back(nullptr);
                bias_bw.push_back(nullptr);
                continue;
            }
            const double mean = mean_of(v);
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            std_bw.push_back(std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) / bw);
            bias_bw.push_back((mean - (d == 0 ? truth[i].u : truth[i].v)) / bw);
        }
    out["direction_samples"] = est.empty() ? 0 : est[0].size();
    out["std_bw"] = std_bw;
    out["bias_bw"] = bias_bw;
    try {
        TestConfig normal = s.test;
        normal.mode = ThresholdMode::normal;
        normal.M_max = std::max(normal.M_max, M);
        out["pd_theory"] = detection_probability(s.geom, s.truth, amplitude_covariance(s.signal).B, normal).pd;
    } catch (const std::exception&) {
        out["pd_theory"] = nullptr;
    }
    return out;
}

std::vector<PointResult> run_experiment(const json& config, const RunOptions& options) {
    json cfg = config;
    if (options.seed) cfg["seed"] = *options.seed;
    const auto points = expand_sweep(cfg);
    const auto out_dir = resolve_out_dir(cfg, options.out_dir);
    std::filesystem::create_directories(out_dir);
    const unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());

    std::vector<PointResult> results;
    json summary;
    summary["version"] = version;
    summary["config_hash"] = config_hash(cfg);
    summary["seed"] = cfg.value("seed", std::uint64_t{1});
    summary["points"] = json::array();
    for (std::size_t k = 0; k < points.size(); ++k) {
        PointResult pr{make_scenario(points[k]), {}, {}};
        const auto& s = pr.scenario;
        pr.trials.resize(static_cast<std::size_t>(s.trials));
        std::atomic<int> next{0};
        auto worker = [&] {
            for (int t; (t = next.fetch_add(1)) < s.trials;) pr.trials[static_cast<std::size_t>(t)] = run_trial(s, t);
        };
        {
            std::vector<std::jthread> pool;
            for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
            worker();
        }
        const auto csv_path = out_dir / ("trials_" + std::to_string(k) + ".csv");
        std::ofstream csv(csv_path);
        write_trials_csv(csv, s, pr.trials);
        pr.summary = summarize(s, pr.trials);
        pr.summary["csv"] = csv_path.filename().string();
        summary["points"].push_back(pr.summary);
        results.push_back(std::move(pr));
    }
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << '\n';
    return results;
}

std::string config_hash(const json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(config.dump()));
    return buf;
}

void theory_tables(const json& config, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const Scenario base = make_scenario(expand_sweep(config).front());
    const json th = config.value("theory", json::object());
    auto grid = [&](const char* key, double lo, double hi, double step) {
        if (th.contains(key)) return th.at(key).get<std::vector<double>>();
        std::vector<double> v;
        for (double x = lo; x <= hi + 1e-9; x += step) v.push_back(x);
        return v;
    };
    const auto snrs = grid("snr_db", -5.0, 20.0, 1.0);
    const auto seps = grid("separation_bw", 0.1, 1.0, 0.05);
    const auto Ks = th.value("K", std::vector<int>{1, 2, 3});
    const auto mu_factors = th.value("mu_factors", std::vector<double>{0.6, 0.8, 1.0, 1.2, 1.4});
    const int iterations = th.value("iterations", 17);
    const auto& geom = base.geom;
    const auto N = geom.size();
    const double bw = beamwidth(geom);
    const int M = static_cast<int>(base.truth.size());
    const double sigma2 = base.test.sigma2;
    const double snr0 = config.at("signal").at("snr_db").get<double>();
    const SignalKind kind = base.signal.kind;
    const RVec phases = base.signal.mean_phase;
    const double phase_std = base.signal.phase_std.size() ? base.signal.phase_std[0] : 0.0;
    auto model_at = [&](double snr_db, int m) {
        return SignalModel::with_snr(kind, m, snr_db, sigma2, phases.size() == m ? phases : RVec(), phase_std);
    };
    auto pair_at = [&](double sep) {
        return DirectionSet({{base.center.u - sep * bw / 2.0, base.center.v}, {base.center.u + sep * bw / 2.0, base.center.v}});
    };
    TestConfig cfg = base.test;
    cfg.mode = ThresholdMode::normal;
    cfg.M_max = std::max(cfg.M_max, M);

    {
        std::ofstream os(out_dir / "pd_vs_snr.csv");
        os << "snr_db,range_ratio,K,pd,beta1\n";
        for (int K : Ks)
            for (double snr : snrs) {
                cfg.K = K;
                const auto dp = detection_probability(geom, base.truth, amplitude_covariance(model_at(snr, M)).B, cfg);
                const double range = std::pow(2.0 / (static_cast<double>(N) * db_to_linear(snr)), 0.25);
                os << fmt17(snr) << ',' << fmt17(range) << ',' << K << ',' << fmt17(dp.pd) << ','
                   << (dp.beta.empty() ? std::string() : fmt17(dp.beta[0])) << '\n';
            }
    }
    {
        std::ofstream os(out_dir / "pd_vs_separation.csv");
        os << "separation_bw,snr_db,K,pd,beta1\n";
        for (int K : Ks)
            for (double sep : seps) {
                cfg.K = K;
                const auto dp = detection_probability(geom, pair_at(sep), amplitude_covariance(model_at(snr0, 2)).B, cfg);
                os << fmt17(sep) << ',' << fmt17(snr0) << ',' << K << ',' << fmt17(dp.pd) << ',' << fmt17(dp.beta[0]) << '\n';
            }
    }
    auto crlb_pair = [&](const DirectionSet& dirs, double snr) {
        const auto det = SignalModel::with_snr(SignalKind::deterministic, 2, snr, sigma2, phases.size() == 2 ? phases : RVec());
        const auto ray = SignalModel::with_snr(SignalKind::rayleigh, 2, snr, sigma2);
        double d = std::numeric_limits<double>::quiet_NaN(), r = d;
        try {
            d = crlb_directions(geom, dirs, deterministic_amplitudes(det), 1, sigma2).std_bw[0];
        } catch (const std::exception&) {
        }
        try {
            r = crlb_model4(geom, dirs, ray.power, 1, sigma2).std_bw[0];
        } catch (const std::exception&) {
        }
        return std::pair{d, r};
    };
    if (geom.kind() == ArrayKind::linear) {
        std::ofstream os(out_dir / "crlb_vs_separation.csv");
        os << "separation_bw,snr_db,crlb_deterministic_bw,crlb_rayleigh_bw\n";
        for (double sep : seps) {
            const auto [d, r] = crlb_pair(pair_at(sep), snr0);
            os << fmt17(sep) << ',' << fmt17(snr0) << ',' << fmt17(d) << ',' << fmt17(r) << '\n';
        }
        std::ofstream os2(out_dir / "crlb_vs_snr.csv");
        const double sep0 = config.contains("targets") && config["targets"].contains("separation_bw")
                                ? config["targets"]["separation_bw"].get<double>()
                                : 0.5;
        os2 << "snr_db,separation_bw,crlb_deterministic_bw,crlb_rayleigh_bw\n";
        for (double snr : snrs) {
            const auto [d, r] = crlb_pair(pair_at(sep0), snr);
            os2 << fmt17(snr) << ',' << fmt17(sep0) << ',' << fmt17(d) << ',' << fmt17(r) << '\n';
        }

        std::ofstream os3(out_dir / "sa_dispersion.csv");
        os3 << "separation_bw,mu_factor,mu,sa_std_bw,crlb_std_bw,iterations\n";
        for (double sep : seps) {
            const auto dirs = pair_at(sep);
            const CMat B = amplitude_covariance(model_at(snr0, 2)).B / sigma2;
            const double mu_bar = optimal_step(geom, dirs, B);
            const auto curv = curvature_analysis(geom, dirs, B);
            for (double f : mu_factors) {
                const auto ac = asymptotic_covariance(geom, dirs, B, f * mu_bar);
                const double n = iterations;
                os3 << fmt17(sep) << ',' << fmt17(f) << ',' << fmt17(f * mu_bar) << ','
                    << fmt17(std::sqrt(ac.covariance(0, 0) / n) / bw) << ',' << fmt17(curv.crlb_std_bw[0] / std::sqrt(n))
                    << ',' << iterations << '\n';
            }
        }
    }
}

json crlb_report(const json& config) {
    const Scenario s = make_scenario(expand_sweep(config).front());
    const int M = static_cast<int>(s.truth.size());
    const double sigma2 = s.test.sigma2;
    json out;
    out["array"] = s.geom.name();
    out["beamwidth"] = beamwidth(s.geom);
    out["K"] = s.test.K;
    const SignalModel det = s.signal.kind == SignalKind::deterministic || s.signal.kind == SignalKind::phase_fluct
                                ? s.signal
                                : SignalModel::with_snr(SignalKind::deterministic, M, config["signal"]["snr_db"].get<double>(), sigma2);
    const SignalModel ray = s.signal.kind == SignalKind::rayleigh
                                ? s.signal
                                : SignalModel::with_snr(SignalKind::rayleigh, M, config["signal"]["snr_db"].get<double>(), sigma2);
    auto to_json = [](const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    try {
        out["deterministic_std_bw"] = to_json(crlb_directions(s.geom, s.truth, deterministic_amplitudes(det), s.test.K, sigma2).std_bw);
    } catch (const std::exception& e) {
        out["deterministic_error"] = e.what();
    }
    try {
        out["rayleigh_std_bw"] = to_json(crlb_model4(s.geom, s.truth, ray.power, s.test.K, sigma2).std_bw);
    } catch (const std::exception& e) {
        out["rayleigh_error"] = e.what();
    }
    const auto curv = curvature_analysis(s.geom, s.truth, amplitude_covariance(s.signal).B / sigma2);
    out["curvature_eigenvalues"] = to_json(curv.eigenvalues);
    out["eccentricity"] = curv.eccentricity;
    return out;
}

}  // namespace superres
