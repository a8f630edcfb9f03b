#include <cstdint>
#include <string>

#include "CLI11.hpp"
#include "hyperlv/hyperlv.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Hypergraph Lotka-Volterra competition: simulate, enumerate equilibria, sweep, verify"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    std::string k_list;
    std::string t_list;
    std::uint64_t seed = 1;
    bool quiet = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "run configuration (JSON)")->required();
        sub->add_option("--out", out_dir, "directory for relative output paths");
        sub->add_option("--seed", seed, "random seed for randomized checks");
        sub->add_flag("--quiet", quiet, "suppress progress output");
    };
    auto* simulate = app.add_subcommand("simulate", "integrate from the configured initial state");
    auto* equilibria = app.add_subcommand("equilibria", "enumerate equilibria with stability verdicts");
    auto* sweep = app.add_subcommand("sweep", "outcome table over k and t values");
    auto* verify = app.add_subcommand("verify", "run the invariant checks at the configured parameters");
    for (auto* sub : {simulate, equilibria, sweep, verify}) add_common(sub);
    sweep->add_option("--k-list", k_list, "comma-separated k values")->required();
    sweep->add_option("--t-list", t_list, "comma-separated interaction orders (default: config t)");

    CLI11_PARSE(app, argc, argv);

    hyperlv::CommandOptions opts;
    opts.out_dir = out_dir;
    opts.seed = seed;
    opts.quiet = quiet;
    if (*simulate) return hyperlv::cmd_simulate(config, opts);
    if (*equilibria) return hyperlv::cmd_equilibria(config, opts);
    if (*sweep) return hyperlv::cmd_sweep(config, k_list, t_list, opts);
    return hyperlv::cmd_verify(config, opts);
}
