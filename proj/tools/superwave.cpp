// superwave command line: runs configured or built-in jobs.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "superwave/errors.hpp"
#include "superwave/harness.hpp"

namespace {

struct Common {
    std::string config;
    std::string out;
    int jobs = 0;
    bool force = false;
    bool quiet = false;
    std::vector<std::string> set;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
    auto* opt = cmd->add_option("--config", c.config, "flat key = value job file");
    if (config_required) opt->required();
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--jobs", c.jobs, "parallel grid points")->check(CLI::PositiveNumber);
    cmd->add_flag("--force", c.force, "rerun even when outputs are up to date");
    cmd->add_option("--set", c.set, "override one config key (key=value), repeatable");
    cmd->add_flag("-q,--quiet", c.quiet, "no progress output");
}

int run(superwave::JobConfig config, const Common& c) {
    for (const auto& kv : c.set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw superwave::ValidationError("--set expects key=value, got '" + kv + "'");
        superwave::apply_config_key(config, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!c.out.empty()) config.out_dir = c.out;
    if (c.jobs > 0) config.jobs = c.jobs;
    superwave::RunOptions opts;
    opts.force = c.force;
    if (!c.quiet) opts.log = &std::cerr;
    const auto report = superwave::run_job(config, opts);
    for (const auto& f : report.outputs) std::cout << f << '\n';
    std::cout << report.manifest_path << '\n';
    if (report.failures) std::cerr << report.failures << " failed point(s), see the manifest\n";
    return report.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"superwave: layered atomic-array interface simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", SUPERWAVE_VERSION);

    const std::vector<std::pair<superwave::JobKind, std::string>> kinds{
        {superwave::JobKind::map, "reflectivity map over (a, a_z)"},
        {superwave::JobKind::scaling, "inefficiency versus atom number, with power-law fits"},
        {superwave::JobKind::scan, "analytic multi-order scan"},
        {superwave::JobKind::design, "four-layer shift designs"},
        {superwave::JobKind::ray, "finite and infinite ray-optics reflectivity"},
        {superwave::JobKind::resonance, "resonant reflectivity over (a, a_z, N, w)"},
    };
    std::vector<Common> commons(kinds.size());
    std::vector<CLI::App*> cmds;
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        auto* cmd = app.add_subcommand(superwave::to_string(kinds[i].first), kinds[i].second);
        add_common(cmd, commons[i], true);
        cmds.push_back(cmd);
    }

    Common repro_opts;
    std::string job_name;
    bool list = false;
    auto* repro = app.add_subcommand("repro", "run a built-in figure job");
    repro->add_option("job", job_name, "fig2a, fig2b, fig2c, fig3, fig4a, fig4b, fig4c, fig5a, fig5b, design4");
    repro->add_flag("--list", list, "list built-in jobs");
    add_common(repro, repro_opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            if (!cmds[i]->parsed()) continue;
            superwave::JobConfig config = superwave::load_job_config(commons[i].config);
            config.kind = kinds[i].first;
            return run(config, commons[i]);
        }
        if (list) {
            for (const auto& n : superwave::builtin_job_names()) std::cout << n << '\n';
            return 0;
        }
        if (job_name.empty()) throw superwave::ValidationError("repro needs a job name (see --list)");
        superwave::JobConfig config = superwave::builtin_job(job_name);
        // A config file given to repro overrides keys of the built-in protocol.
        if (!repro_opts.config.empty()) config = superwave::load_job_config(repro_opts.config, config);
        return run(config, repro_opts);
    } catch (const superwave::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
