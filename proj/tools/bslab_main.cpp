// bslab: Birman-Schwinger bound states of -Delta - alpha*mu in the plane.
// Either `bslab run config.json` or the minimal flag form; artifacts carry
// a provenance header and reproduce byte-for-byte.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bslab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Bound states of a 2D Schrodinger operator with a measure "
                 "potential (Birman-Schwinger discretization)"};
    app.require_subcommand(0, 1);

    std::string config_path;
    CLI::App* run = app.add_subcommand("run", "execute a JSON config");
    run->add_option("config", config_path, "path to the config file")
        ->required();

    std::string measure, command, alpha_csv, k_csv, out_path;
    app.add_option("--measure", measure,
                   "measure shorthand: circle:R:N or segment:ax:ay:bx:by:N");
    app.add_option("--command", command,
                   "one of gamma_sweep, bound_state, cmu, eigenfunction, "
                   "kato_check, perturbation, convergence, norm_limit");
    app.add_option("--alpha", alpha_csv, "comma-separated coupling list");
    app.add_option("--k", k_csv, "comma-separated k (or eps) list");
    app.add_option("--out", out_path, "output artifact path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (run->parsed())
        return bslab::run_config_file(config_path, std::cerr);

    if (command.empty() || measure.empty() || out_path.empty()) {
        std::cerr << "error: flag form needs --measure, --command and --out "
                     "(or use: bslab run config.json)\n";
        return 2;
    }
    try {
        const nlohmann::json cfg =
            bslab::config_from_flags(measure, command, alpha_csv, k_csv, out_path);
        return bslab::run_config_json(cfg, std::cerr);
    } catch (const bslab::validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
