#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sparsedisc/discretize.hpp"
#include "sparsedisc/fir.hpp"
#include "sparsedisc/support_mask.hpp"

namespace sparsedisc {

// ============================================================================
// Robust bounds on the residual Delta = [Delta_A Delta_B][Phi_x; Phi_u]
// ============================================================================

enum class DeltaNorm { L1, E1, HinfSampled };

// Scalar model-error budgets. model_a / model_b are eps (L1, infinity-norm budgets),
// nu (E1, 1-norm budgets) or rho (HinfSampled, 2-norm budgets). alpha splits the
// budget between Phi_x and Phi_u and must lie strictly inside (0, 1); E1 ignores it.
struct RobustnessBudget {
    DeltaNorm norm = DeltaNorm::L1;
    double model_a = 0.0;
    double model_b = 0.0;
    double alpha = 0.5;

    void validate() const;
};

// max{(eps_A/alpha) ||Phi_x||_L1, (eps_B/(1-alpha)) ||Phi_u||_L1}
[[nodiscard]] double robust_bound_l1(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget);

// ||[nu_A Phi_x; nu_B Phi_u]||_E1
[[nodiscard]] double robust_bound_e1(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget);

// ||[(rho_A/sqrt(alpha)) Phi_x; (rho_B/sqrt(1-alpha)) Phi_u]||_Hinf on the sampled grid.
[[nodiscard]] double robust_bound_hinf(const FirTransfer& phi_x, const FirTransfer& phi_u,
                                       const RobustnessBudget& budget, int grid_points);

// Dispatches on budget.norm.
[[nodiscard]] double robust_bound(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget,
                                  int grid_points = 64);

// Spectral expansion of [zI - A, -B2][Phi_x; Phi_u] - I with Phi_x[1] = I:
//   Delta[k] = Phi_x[k+1] - A Phi_x[k] - B2 Phi_u[k]  (k < T),   Delta[T] = -A Phi_x[T] - B2 Phi_u[T].
// Throws ContractViolation if Phi_x[1] differs from I by more than 1e-12.
[[nodiscard]] FirTransfer sls_residual(const Matrix& a, const Matrix& b2, const FirTransfer& phi_x,
                                       const FirTransfer& phi_u);

// Norm of an FIR transfer in the sense used for Delta.
[[nodiscard]] double delta_norm(const FirTransfer& g, DeltaNorm norm, int grid_points = 64);

// ============================================================================
// Locality
// ============================================================================

// One mask per spectral component of Phi_x (n x n) and Phi_u (n_u x n).
struct LocalityConstraint {
    std::vector<SupportMask> x_masks;
    std::vector<SupportMask> u_masks;
    int d = -1;  // hop radius the masks came from, -1 when supplied directly
    Index horizon = 0;

    // Same masks at every k = 1..T.
    static LocalityConstraint uniform(const SupportMask& x_mask, const SupportMask& u_mask, Index horizon);
    void validate(Index states, Index inputs) const;
};

// All-pairs hop counts by breadth-first search; -1 marks unreachable pairs.
[[nodiscard]] Eigen::MatrixXi hop_distances(const SupportMask& adjacency);

// Phi_x mask true at (i,j) iff dist(i,j) <= d; Phi_u mask true at (a,j) iff
// min over states s with actuator_map(a,s) of dist(s,j) <= d. adjacency must be
// symmetric with a true diagonal.
[[nodiscard]] LocalityConstraint locality_mask(const SupportMask& adjacency, const SupportMask& actuator_map, int d,
                                               Index horizon);

// ============================================================================
// Synthesis
// ============================================================================

enum class SynthesisStatus { Optimal, Infeasible, SolverLimit };

struct AdmmSettings {
    double eps_abs = 1e-7;
    double eps_rel = 1e-6;
    double eps_infeasible = 1e-6;
    int max_iterations = 50000;
    double rho = 1.0;
    double relaxation = 1.6;  // over-relaxation factor in (0, 2)
    bool adaptive_rho = true;
    int check_interval = 10;
    int max_refactorizations = 12;
};

struct SynthesisSettings {
    DeltaNorm norm = DeltaNorm::L1;
    // When set, the nominal constraint is imposed exactly and the robust bound of
    // budget.norm replaces ||Delta|| in the cap (norm is then taken from the budget).
    std::optional<RobustnessBudget> budget;
    std::vector<double> alpha_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    int hinf_grid = 64;
    AdmmSettings admm;
    // Restrict the solve to these columns of Phi; empty means all. Columns outside
    // the set keep Phi_x = I at k = 1 and zeros elsewhere.
    std::vector<Index> columns;
};

struct SynthesisOutcome {
    FirTransfer phi_x;
    FirTransfer phi_u;
    FirTransfer delta;  // nominal residual sls_residual(A, B2, phi_x, phi_u)
    DeltaNorm norm = DeltaNorm::L1;
    double gamma = 0.0;
    double cost = 0.0;                // ||[C1 D12][Phi_x; Phi_u]||_H2^2
    double capped_value = 0.0;        // ||Delta|| or the robust bound, whichever was capped
    double constraint_violation = 0.0;
    double kkt_residual = 0.0;
    double sensitivity = 0.0;         // -d cost / d gamma from the cap multiplier; NaN for gamma = 0 solves
    std::optional<double> alpha;      // budget split used in robust mode
    SynthesisStatus status = SynthesisStatus::Infeasible;
    int iterations = 0;
    std::string certificate;
    std::vector<double> column_cost;
    std::vector<double> column_seconds;

    [[nodiscard]] bool optimal() const { return status == SynthesisStatus::Optimal; }
    [[nodiscard]] double merit() const { return cost / (1.0 - gamma); }
};

// Minimizes ||[C1 D12][Phi_x; Phi_u]||_H2^2 over FIR responses supported on the locality
// masks with Phi_x[1] = I, subject to ||Delta|| <= gamma - 1e-9 (or Delta = 0 when gamma = 0).
// In robust mode the nominal residual is forced to zero and the robust bound is capped instead.
// Throws MaskIdentityConflict when a diagonal entry of the k = 1 Phi_x mask is false.
[[nodiscard]] SynthesisOutcome synthesize(const DiscretePlant& plant, const LocalityConstraint& locality, double gamma,
                                          const SynthesisSettings& settings = {});

// Bisection over gamma in [0, 1) on the merit cost / (1 - gamma). The merit is unimodal, and the
// sign of its slope is read from cost - sensitivity * (1 - gamma) at each midpoint. Robust mode
// searches settings.alpha_grid at every gamma. Throws AllInfeasible if nothing is feasible.
[[nodiscard]] SynthesisOutcome synthesize_bisect(const DiscretePlant& plant, const LocalityConstraint& locality,
                                                 const SynthesisSettings& settings, double bisect_tol);

[[nodiscard]] std::string to_string(DeltaNorm norm);
[[nodiscard]] std::string to_string(SynthesisStatus status);

}  // namespace sparsedisc
