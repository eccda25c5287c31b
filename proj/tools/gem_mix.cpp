// gem-mix: command-line front end over the gemmix C API.
//
// Exit codes: 0 success (including a not-contractive bounds report), 1 spec
// or usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "gemmix.h"

namespace {

constexpr int kExitSpecError = 1;
constexpr int kExitRuntime = 2;

const std::vector<std::string> kKinds = {"convergence",        "region-probe", "verify-gs", "deviation-scaling",
                                         "rademacher-scaling", "stochastic",   "bounds"};

int report_failure(gemmix_status status, const std::string& context) {
    std::cerr << "gem-mix: " << context << ": " << gemmix_last_error() << '\n';
    return status == GEMMIX_ERR_INVALID_ARGUMENT || status == GEMMIX_ERR_NULL ? kExitSpecError : kExitRuntime;
}

std::string take(char* s) {
    std::string out = s ? s : "";
    gemmix_string_free(s);
    return out;
}

struct RunArgs {
    std::string spec;
    std::optional<std::uint64_t> seed;
    std::string out;
    unsigned threads = 0;
    bool against_best_fixed_point = false;
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
    cmd->add_option("--spec", args.spec, "Experiment spec file (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "Master seed; overrides the seed in the spec");
    cmd->add_option("--out", args.out, "Output directory")->required();
    cmd->add_option("--threads", args.threads, "Worker threads (0 = all cores)");
    cmd->add_flag("--against-best-fixed-point", args.against_best_fixed_point,
                  "Measure convergence error against the truth-initialized sample-EM fixed point");
}

// Loads the spec file and applies the command-line overrides.
int load_specs(const RunArgs& args, gemmix_specs** specs) {
    gemmix_set_threads(args.threads);
    if (auto st = gemmix_specs_load(args.spec.c_str(), specs); st != GEMMIX_OK) {
        return report_failure(st, "cannot load spec");
    }
    if (args.seed) gemmix_specs_set_seed(*specs, *args.seed);
    if (args.against_best_fixed_point) gemmix_specs_set_against_best_fixed_point(*specs, 1);
    return 0;
}

int run_kind(const std::string& kind, const RunArgs& args) {
    gemmix_specs* specs = nullptr;
    if (int rc = load_specs(args, &specs); rc != 0) return rc;
    std::size_t count = 0;
    gemmix_specs_count(specs, &count);
    std::size_t matched = 0;
    int rc = 0;
    for (std::size_t i = 0; i < count && rc == 0; ++i) {
        char* k = nullptr;
        gemmix_specs_kind(specs, i, &k);
        if (take(k) != kind) continue;
        ++matched;
        char* summary = nullptr;
        if (auto st = gemmix_run_experiment(specs, i, args.out.c_str(), &summary); st != GEMMIX_OK) {
            rc = report_failure(st, kind + " failed");
            break;
        }
        std::cout << take(summary) << '\n';
    }
    gemmix_specs_destroy(specs);
    if (rc == 0 && matched == 0) {
        std::cerr << "gem-mix: spec file holds no '" << kind << "' experiment\n";
        return kExitSpecError;
    }
    return rc;
}

int run_suite(const RunArgs& args) {
    gemmix_specs* specs = nullptr;
    if (int rc = load_specs(args, &specs); rc != 0) return rc;
    char* manifest = nullptr;
    std::size_t failures = 0;
    const auto st = gemmix_run_suite(specs, args.out.c_str(), &manifest, &failures);
    gemmix_specs_destroy(specs);
    if (st != GEMMIX_OK) return report_failure(st, "suite failed");
    std::cout << take(manifest) << '\n';
    if (failures > 0) {
        std::cerr << "gem-mix: " << failures << " experiment(s) failed; see manifest.json\n";
        return kExitRuntime;
    }
    return 0;
}

int run_sample(const std::string& config, std::size_t n, std::uint64_t seed, const std::string& out) {
    gemmix_mixture* mixture = nullptr;
    if (auto st = gemmix_mixture_load(config.c_str(), &mixture); st != GEMMIX_OK) {
        return report_failure(st, "cannot load config");
    }
    gemmix_sample* sample = nullptr;
    auto st = gemmix_sample_draw(mixture, n, seed, &sample);
    gemmix_mixture_destroy(mixture);
    if (st != GEMMIX_OK) return report_failure(st, "sampling failed");
    st = gemmix_sample_write_csv(sample, out.c_str());
    gemmix_sample_destroy(sample);
    if (st != GEMMIX_OK) return report_failure(st, "cannot write sample");
    return 0;
}

int run_inspect(const std::string& config, std::size_t n, const std::string& mode) {
    gemmix_mixture* mixture = nullptr;
    if (auto st = gemmix_mixture_load(config.c_str(), &mixture); st != GEMMIX_OK) {
        return report_failure(st, "cannot load config");
    }
    const gemmix_radius_mode radius = mode == "explicit" ? GEMMIX_RADIUS_EXPLICIT
                                      : mode == "asymptotic" ? GEMMIX_RADIUS_ASYMPTOTIC
                                                             : GEMMIX_RADIUS_SOLVED;
    char* json = nullptr;
    const auto st = gemmix_bound_report(mixture, radius, n, &json);
    gemmix_mixture_destroy(mixture);
    if (st != GEMMIX_OK) return report_failure(st, "bound report failed");
    std::cout << take(json) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradient EM experiments for isotropic Gaussian mixtures"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(gemmix_version()));

    std::vector<RunArgs> kind_args(kKinds.size());
    std::vector<CLI::App*> kind_cmds;
    for (std::size_t k = 0; k < kKinds.size(); ++k) {
        auto* cmd = app.add_subcommand(kKinds[k], "Run the '" + kKinds[k] + "' experiments of a spec file");
        add_run_options(cmd, kind_args[k]);
        kind_cmds.push_back(cmd);
    }

    RunArgs suite_args;
    auto* suite = app.add_subcommand("suite", "Run every experiment of a spec file and write manifest.json");
    add_run_options(suite, suite_args);

    std::string sample_config, sample_out;
    std::size_t sample_n = 0;
    std::uint64_t sample_seed = 0;
    auto* sample = app.add_subcommand("sample", "Draw a sample from a mixture config and write it as CSV");
    sample->add_option("--config", sample_config, "Mixture config (JSON)")->required()->check(CLI::ExistingFile);
    sample->add_option("--n", sample_n, "Number of points")->required();
    sample->add_option("--seed", sample_seed, "Seed");
    sample->add_option("--out", sample_out, "Output CSV path")->required();

    std::string inspect_config, inspect_mode = "solved";
    std::size_t inspect_n = 12000;
    auto* inspect = app.add_subcommand("inspect", "Print separation statistics and closed-form bounds as JSON");
    inspect->add_option("--config", inspect_config, "Mixture config (JSON)")->required()->check(CLI::ExistingFile);
    inspect->add_option("--n", inspect_n, "Sample size for the deviation bound");
    inspect->add_option("--radius-mode", inspect_mode, "explicit | solved | asymptotic")
        ->check(CLI::IsMember({"explicit", "solved", "asymptotic"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitSpecError;
    }

    for (std::size_t k = 0; k < kKinds.size(); ++k) {
        if (kind_cmds[k]->parsed()) return run_kind(kKinds[k], kind_args[k]);
    }
    if (suite->parsed()) return run_suite(suite_args);
    if (sample->parsed()) return run_sample(sample_config, sample_n, sample_seed, sample_out);
    if (inspect->parsed()) return run_inspect(inspect_config, inspect_n, inspect_mode);
    return kExitSpecError;
}
