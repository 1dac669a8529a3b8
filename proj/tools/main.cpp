// hetcouple: reference solves, Schwarz coupling, error sweeps and self-verification.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hetcouple/cli.hpp"

namespace {

struct Flags {
    std::string config, preset, out, lambda, l0, tol;
    int jobs = -1;
};

void add_flags(CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--preset", f.preset, "built-in case")->check(CLI::IsMember({"rect1", "funnel2"}));
    sub->add_option("--out", f.out, "output directory (created if missing)");
    sub->add_option("--lambda", f.lambda, "Robin coefficient, or 'opt'");
    sub->add_option("--l0", f.l0, "interface location");
    sub->add_option("--jobs", f.jobs, "sweep workers (0: all processors)")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", f.tol, "Schwarz tolerance");
}

hetcouple::RunConfig resolve(const Flags& f) {
    hetcouple::KeyValues file;
    if (!f.config.empty()) file = hetcouple::read_config_file(f.config);
    hetcouple::KeyValues over;
    if (!f.preset.empty()) over["preset"] = f.preset;
    if (!f.out.empty()) over["out"] = f.out;
    if (!f.lambda.empty()) over["lambda"] = f.lambda;
    if (!f.l0.empty()) over["L0"] = f.l0;
    if (!f.tol.empty()) over["tol"] = f.tol;
    if (f.jobs >= 0) over["jobs"] = std::to_string(f.jobs);
    return hetcouple::resolve_config(file, over);
}

}  // namespace

int main(int argc, char** argv) {
    using namespace hetcouple::cli;
    CLI::App app{"Coupled 1-D / 2-D Laplacian solver with Robin-exchange Schwarz iteration"};
    app.require_subcommand(1);
    Flags flags;
    auto* ref = app.add_subcommand("reference", "full-domain 2-D solve");
    auto* cpl = app.add_subcommand("couple", "Schwarz coupling at L0");
    auto* swp = app.add_subcommand("sweep", "interface, epsilon or lambda sweep");
    auto* ver = app.add_subcommand("verify", "built-in verification checks");
    for (auto* s : {ref, cpl, swp, ver}) add_flags(s, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return Usage;
    }

    try {
        const auto cfg = resolve(flags);
        if (*ref) return cmd_reference(cfg, std::cout);
        if (*cpl) return cmd_couple(cfg, std::cout);
        if (*swp) return cmd_sweep(cfg, std::cout);
        return cmd_verify(cfg, std::cout);
    } catch (const hetcouple::ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return Usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return Usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
