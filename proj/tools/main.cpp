#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sparsedisc/experiments.hpp"

int main(int argc, char** argv) {
    using namespace sparsedisc;

    RunConfig cfg;
    std::string norm = "l1";
    double gamma = -1.0;

    CLI::App app{"Sparsity-preserving discretization and localized SLS synthesis"};
    app.set_config("--config", "", "Flat `key = value` file using the long flag names; command-line flags win");
    app.add_option("command", cfg.command, "discretize | bounds | synthesize | simulate")
        ->required()
        ->check(CLI::IsMember({"discretize", "bounds", "synthesize", "simulate"}));

    app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    app.add_option("--input", cfg.a_path, "Continuous-time A (Matrix Market or dense text)");
    app.add_option("--b", cfg.b_path, "Continuous-time B (identity when omitted)");
    app.add_option("--system", cfg.system, "grid | chain | file")->capture_default_str();
    app.add_option("--grid", cfg.topology, "Topology file (bundled case57 when omitted)");
    app.add_option("--chain-states", cfg.chain_states, "States of the chain system")->capture_default_str();
    app.add_option("--zero-tol", cfg.zero_tol, "Support threshold for file inputs")->capture_default_str();
    app.add_option("--x-mask", cfg.x_mask_path, "Phi_x locality mask file (nonzero = allowed)");
    app.add_option("--u-mask", cfg.u_mask_path, "Phi_u locality mask file (nonzero = allowed)");

    app.add_option("--tau", cfg.tau, "Sample time")->capture_default_str();
    app.add_option("--horizon", cfg.horizon, "FIR horizon T")->capture_default_str();
    app.add_option("--locality", cfg.locality, "Locality radius d in hops")->capture_default_str();
    app.add_option("--norm", norm, "Norm on Delta: l1 | e1 | hinf")->capture_default_str();
    app.add_option("--gamma", gamma, "Fixed gamma in [0, 1); skips bisection");
    app.add_option("--bisect-tol", cfg.bisect_tol, "Bisection tolerance on gamma")->capture_default_str();
    app.add_flag("--paper-literal", cfg.paper_literal, "Minimize the cost at fixed --gamma (default 0)");
    app.add_flag("--robust", cfg.robust, "Cap the model-error bound built from dense-minus-sparse residuals");
    app.add_option("--alpha-grid", cfg.alpha_grid, "Budget splits searched in robust mode")->delimiter(',');
    app.add_option("--hinf-grid", cfg.hinf_grid, "Frequency samples for hinf")->capture_default_str();
    app.add_option("--max-iterations", cfg.max_iterations, "ADMM iteration cap")->capture_default_str();
    app.add_flag("--sweep", cfg.sweep, "Feasibility sweep over horizons x localities");
    app.add_option("--sweep-horizons", cfg.sweep_horizons, "Horizons for --sweep")->delimiter(',');
    app.add_option("--sweep-localities", cfg.sweep_localities, "Localities for --sweep")->delimiter(',');

    app.add_option("--impulse-bus", cfg.impulse_bus, "1-based disturbance channel hit at k = 0")->capture_default_str();
    app.add_option("--steps", cfg.steps, "Simulation steps")->capture_default_str();
    app.add_flag("--no-disturbance", cfg.no_disturbance, "Simulate with w = 0");

    app.add_option("--sizes", cfg.sizes, "Dimensions for bounds")->delimiter(',');
    app.add_option("--bandwidth", cfg.bandwidth, "Bandwidth s for bounds")->capture_default_str();
    app.add_option("--alpha", cfg.alpha, "Target ||A tau||_max for bounds")->capture_default_str();
    app.add_option("--samples", cfg.samples, "Random matrices per size")->capture_default_str();
    app.add_option("--family", cfg.family, "diagdom | uniform")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }
    try {
        cfg.norm = parse_delta_norm(norm);
    } catch (const InvalidInput& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    }
    if (gamma >= 0.0 || app.count("--gamma") > 0) {
        cfg.gamma = gamma;
    }
    return run_command(cfg);
}
