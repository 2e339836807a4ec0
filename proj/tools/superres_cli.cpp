#include "superres/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

enum ExitCode { ok = 0, config_error = 1, runtime_error = 2 };

int run_guarded(const std::function<void()>& body) {
    try {
        body();
        return ok;
    } catch (const superres::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime_error;
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace superres;
    CLI::App app{"Monte Carlo harness for maximum-likelihood angular superresolution"};
    app.require_subcommand(1);

    std::string config_path;
    unsigned threads = 0;
    std::string out_dir;
    std::uint64_t seed = 0;
    auto* run = app.add_subcommand("run", "run a Monte Carlo experiment");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--threads", threads, "worker threads (default: all cores)");
    run->add_option("--out", out_dir, "output directory");
    auto* seed_opt = run->add_option("--seed", seed, "override the base seed");

    std::string theory_config, theory_out;
    auto* theory = app.add_subcommand("theory", "write closed-form curves");
    theory->add_option("config", theory_config, "experiment config (JSON)")->required();
    theory->add_option("--out", theory_out, "output directory");

    std::string array;
    int M = 1;
    std::string mode = "strong";
    std::size_t tuples = 10000;
    double radius = 0.99;
    std::uint64_t reg_seed = 1;
    auto* reg = app.add_subcommand("check-regularity", "sample-based strong/weak M-regularity check");
    reg->add_option("array", array, "preset name or position file")->required();
    reg->add_option("--M", M, "number of targets")->required();
    reg->add_option("--mode", mode, "strong or weak")->check(CLI::IsMember({"strong", "weak"}));
    reg->add_option("--tuples", tuples, "number of probed direction tuples");
    reg->add_option("--radius", radius, "probe radius around the origin");
    reg->add_option("--seed", reg_seed, "sampling seed");

    std::string crlb_config;
    auto* crlb = app.add_subcommand("crlb", "print Cramer-Rao bounds for a config");
    crlb->add_option("config", crlb_config, "experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? ok : config_error;
    }

    if (*run)
        return run_guarded([&] {
            const json cfg = load_config_file(config_path);
            RunOptions opts;
            opts.threads = threads;
            if (!out_dir.empty()) opts.out_dir = out_dir;
            if (seed_opt->count()) opts.seed = seed;
            const auto results = run_experiment(cfg, opts);
            for (const auto& r : results) std::cout << r.summary.dump() << '\n';
        });
    if (*theory)
        return run_guarded([&] {
            const json cfg = load_config_file(theory_config);
            const auto dir = resolve_out_dir(cfg, theory_out.empty() ? std::nullopt : std::optional<std::filesystem::path>(theory_out));
            theory_tables(cfg, dir);
            std::cout << "wrote theory tables to " << dir.string() << '\n';
        });
    if (*reg)
        return run_guarded([&] {
            std::optional<ArrayGeometry> geom;
            try {
                geom = ArrayGeometry::resolve(array);
            } catch (const std::exception& e) {
                throw ConfigError("array", e.what());
            }
            Rng rng(reg_seed);
            ProbeSpec probe;
            probe.radius = radius;
            probe.tuples = tuples;
            const auto rep = check_regularity(*geom, M, mode == "strong" ? RegularityMode::strong : RegularityMode::weak, probe, rng);
            json out{{"array", geom->name()}, {"M", M}, {"mode", mode}, {"regular", rep.regular},
                     {"tuple_size", rep.tuple_size}, {"tuples_checked", rep.tuples_checked},
                     {"worst_ratio", rep.worst_ratio}, {"note", rep.note}};
            json witness = json::array();
            for (const auto& d : rep.witness) witness.push_back({d.u, d.v});
            out["witness"] = witness;
            std::cout << out.dump(2) << '\n';
        });
    if (*crlb) return run_guarded([&] { std::cout << crlb_report(load_config_file(crlb_config)).dump(2) << '\n'; });
    return ok;
}
