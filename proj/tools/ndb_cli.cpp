// ndb: run a scenario, write its outputs and manifest.
//   ndb --scenario fig3c --set ensemble.n=100 --out out
//   ndb --from-manifest out/fig3c/<stamp>/manifest.json

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ndb/scenarios.hpp"

namespace {

enum Exit { ok = 0, config_error = 1, physics_error = 2, check_failed = 3 };

// "--section.key value" or "--section.key=value" left over by the parser.
std::vector<ndb::ConfigEntry> dotted_extras(const std::vector<std::string>& rest) {
    std::vector<ndb::ConfigEntry> out;
    for (std::size_t i = 0; i < rest.size(); ++i) {
        const std::string& a = rest[i];
        if (a.rfind("--", 0) != 0 || a.find('.') == std::string::npos) {
            throw ndb::ParseError("unexpected argument '" + a + "'");
        }
        std::string body = a.substr(2);
        if (body.find('=') == std::string::npos) {
            if (i + 1 >= rest.size()) throw ndb::ParseError("missing value for '" + a + "'");
            body += "=" + rest[++i];
        }
        out.push_back(ndb::parse_override(body));
    }
    return out;
}

void print_summary(const ndb::ScenarioResult& r, const std::filesystem::path& dir) {
    std::cout << r.scenario << " -> " << dir.string() << "\n";
    if (r.summary.contains("mean_K")) {
        std::cout << "  mean eps " << r.summary["mean_K"].get<double>() << " K +- " << r.summary["sem_K"].get<double>()
                  << " (" << r.summary["completed"].get<std::size_t>() << " completed)\n";
    }
    if (r.summary.contains("checks")) {
        for (const auto& c : r.summary["checks"]) {
            std::cout << "  " << (c["pass"].get<bool>() ? "ok   " : "FAIL ") << c["check"].get<std::string>() << " "
                      << c["value"].get<double>() << " (limit " << c["limit"].get<double>() << ")\n";
        }
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Nanodumbbell feedback-cooling simulator"};
    app.allow_extras();
    std::string config_path, scenario, out_dir, manifest_path;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> sets;
    bool list = false;
    app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
    app.add_option("--scenario", scenario, "fig2a fig2b fig3b fig3c fig3d fig4a fig4b fig5a fig5b validate");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out_dir, "output root (default out)");
    app.add_option("--set", sets, "override, section.key=value (repeatable)")->take_all();
    app.add_option("--from-manifest", manifest_path, "re-run a manifest and compare checksums")
        ->check(CLI::ExistingFile);
    app.add_flag("--list", list, "list scenarios and config keys");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    if (list) {
        std::cout << "scenarios:";
        for (const auto& s : ndb::scenario_names()) std::cout << " " << s;
        std::cout << "\nkeys:\n";
        const ndb::RunConfig d;
        for (const auto& k : ndb::config_keys()) std::cout << "  " << k << " = " << ndb::get_config_value(d, k) << "\n";
        return ok;
    }

    ndb::RunConfig cfg;
    std::optional<nlohmann::json> manifest;
    if (!manifest_path.empty()) {
        std::ifstream in(manifest_path);
        try {
            manifest = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ndb::ParseError(std::string("manifest: ") + e.what());
        }
        cfg = ndb::config_from_manifest(*manifest);
    } else {
        if (scenario.empty()) throw ndb::ParseError("--scenario is required (see --list)");
        cfg = ndb::scenario_config(scenario);
        if (!config_path.empty()) ndb::apply_entries(cfg, ndb::read_config_file(config_path));
        if (seed) cfg.experiment.thermal.seed = *seed;
        for (const auto& s : sets) ndb::apply_entries(cfg, {ndb::parse_override(s)});
        ndb::apply_entries(cfg, dotted_extras(app.remaining()));
    }
    if (!out_dir.empty()) cfg.output.dir = out_dir;
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    const ndb::ScenarioResult result = ndb::run_scenario(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto dir = ndb::write_run(cfg, result, secs);
    print_summary(result, dir);

    if (manifest) {
        const auto bad = ndb::compare_checksums(*manifest, result);
        if (!bad.empty()) {
            std::cerr << "re-run differs from the manifest:";
            for (const auto& b : bad) std::cerr << " " << b;
            std::cerr << "\n";
            return check_failed;
        }
        std::cout << "  all " << result.files.size() << " outputs match the manifest checksums\n";
    }
    if (!result.checks_passed) return check_failed;
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ndb::ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const ndb::ValidationError& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return config_error;
    } catch (const ndb::UnknownScenario& e) {
        std::cerr << e.what() << "\n";
        return config_error;
    } catch (const ndb::InvalidMaterial& e) {
        std::cerr << "invalid material: " << e.what() << "\n";
        return config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return physics_error;
    }
}
