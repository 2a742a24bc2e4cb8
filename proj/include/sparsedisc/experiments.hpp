#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sparsedisc/discretize.hpp"
#include "sparsedisc/grid.hpp"
#include "sparsedisc/sls.hpp"

namespace sparsedisc {

// Knobs shared by all subcommands. Unused fields are ignored by a given command.
struct RunConfig {
    std::string command;
    std::string out_dir = "out";
    unsigned long long seed = 1;

    // inputs
    std::string a_path;      // continuous-time A_hat (discretize, system=file)
    std::string b_path;      // continuous-time B_hat; identity when empty
    std::string system = "grid";  // grid | chain | file
    std::string topology;    // topology file; bundled case57 when empty
    Index chain_states = 6;
    double zero_tol = 0.0;
    std::string x_mask_path;
    std::string u_mask_path;

    // discretization / model
    double tau = 0.2;

    // synthesis
    Index horizon = 5;
    int locality = 4;
    DeltaNorm norm = DeltaNorm::L1;
    std::optional<double> gamma;
    double bisect_tol = 1e-3;
    bool paper_literal = false;
    bool robust = false;
    std::vector<double> alpha_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int hinf_grid = 64;
    int max_iterations = 50000;
    bool sweep = false;
    std::vector<Index> sweep_horizons = {2, 3, 4, 5, 6};
    std::vector<int> sweep_localities = {1, 2, 3, 4, 5, 6};

    // simulation
    int impulse_bus = 3;  // 1-based disturbance channel
    Index steps = 50;
    bool no_disturbance = false;

    // bounds
    std::vector<Index> sizes = {20, 40, 60, 100, 200};
    Index bandwidth = 4;
    double alpha = 0.5;
    int samples = 5;
    std::string family = "diagdom";  // diagdom | uniform

    void validate() const;
};

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitInfeasible = 3;
inline constexpr int kExitNumerical = 4;

enum class BandFamily { DiagDominant, Uniform };

[[nodiscard]] BandFamily parse_band_family(const std::string& name);
[[nodiscard]] DeltaNorm parse_delta_norm(const std::string& name);

// Random n x n matrix of bandwidth s scaled so ||M||_max = alpha.
// DiagDominant: off-diagonal band entries uniform(-1, 1), diagonal = -(row abs sum).
// Uniform: every band entry uniform(-1, 1).
[[nodiscard]] Matrix random_banded(Index n, Index s, double alpha, BandFamily family, std::mt19937_64& rng);

// x[k+1] = A x + w + u on a path graph: A tridiagonal with `diag` on the diagonal and `off`
// beside it, B1 = B2 = I, cost [x; u].
[[nodiscard]] DiscretePlant chain_plant(Index n, double diag = 1.0, double off = 0.5);

// Output map penalizing [x; u]: C1 = [I; 0], D11 = 0, D12 = [0; I].
struct StateInputCost {
    Matrix c1;
    Matrix d11;
    Matrix d12;
};
[[nodiscard]] StateInputCost state_input_cost(Index states, Index disturbances, Index inputs);

// A control problem ready for synthesis: sparse nominal plant, dense truth, masks, labels.
struct ControlProblem {
    DiscretePlant nominal;
    DiscretePlant truth;
    SupportMask adjacency;     // state graph used for locality
    SupportMask actuators;     // inputs x states
    LocalityConstraint locality;
    std::vector<Index> state_node;          // bus (grid) or state index per state, 0-based
    std::vector<std::string> state_kind;    // theta / omega / x
    Eigen::MatrixXi node_distance;          // hop counts between nodes
};

[[nodiscard]] ControlProblem build_problem(const RunConfig& cfg);

// Model-error budgets from the dense-minus-nominal residuals in the norms matching `norm`.
[[nodiscard]] RobustnessBudget empirical_budget(const ControlProblem& problem, DeltaNorm norm);

[[nodiscard]] SynthesisSettings synthesis_settings(const RunConfig& cfg, const ControlProblem& problem);

// Subcommands. Each writes into cfg.out_dir and returns an exit code.
int cmd_discretize(const RunConfig& cfg);
int cmd_bounds(const RunConfig& cfg);
int cmd_synthesize(const RunConfig& cfg);
int cmd_simulate(const RunConfig& cfg);

// Dispatches on cfg.command and maps exceptions to exit codes (message on stderr).
int run_command(const RunConfig& cfg);

}  // namespace sparsedisc
