#include "sparsedisc/sls.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace sparsedisc {

void RobustnessBudget::validate() const {
    if (!(model_a >= 0.0) || !(model_b >= 0.0) || !std::isfinite(model_a) || !std::isfinite(model_b)) {
        throw InvalidInput("RobustnessBudget: budgets must be finite and nonnegative");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidInput("RobustnessBudget: alpha must lie in (0, 1)");
    }
}

namespace {

void require_pair(const FirTransfer& phi_x, const FirTransfer& phi_u) {
    if (phi_x.horizon() != phi_u.horizon() || phi_x.cols() != phi_u.cols()) {
        throw InvalidInput("robust bound: Phi_x and Phi_u must share horizon and column count");
    }
}

}  // namespace

double robust_bound_l1(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget) {
    budget.validate();
    require_pair(phi_x, phi_u);
    return std::max(budget.model_a / budget.alpha * l1_norm(phi_x),
                    budget.model_b / (1.0 - budget.alpha) * l1_norm(phi_u));
}

double robust_bound_e1(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget) {
    budget.validate();
    require_pair(phi_x, phi_u);
    return e1_norm(stack(phi_x.scaled(budget.model_a), phi_u.scaled(budget.model_b)));
}

double robust_bound_hinf(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget,
                         int grid_points) {
    budget.validate();
    require_pair(phi_x, phi_u);
    const double sx = budget.model_a / std::sqrt(budget.alpha);
    const double su = budget.model_b / std::sqrt(1.0 - budget.alpha);
    return hinf_norm_sampled(stack(phi_x.scaled(sx), phi_u.scaled(su)), grid_points);
}

double robust_bound(const FirTransfer& phi_x, const FirTransfer& phi_u, const RobustnessBudget& budget,
                    int grid_points) {
    switch (budget.norm) {
        case DeltaNorm::L1: return robust_bound_l1(phi_x, phi_u, budget);
        case DeltaNorm::E1: return robust_bound_e1(phi_x, phi_u, budget);
        case DeltaNorm::HinfSampled: return robust_bound_hinf(phi_x, phi_u, budget, grid_points);
    }
    throw InvalidInput("robust_bound: unknown norm");
}

FirTransfer sls_residual(const Matrix& a, const Matrix& b2, const FirTransfer& phi_x, const FirTransfer& phi_u) {
    const Index n = a.rows();
    if (a.cols() != n || b2.rows() != n) {
        throw InvalidInput("sls_residual: A must be square and B2 must have n rows");
    }
    if (phi_x.rows() != n || phi_x.cols() != n || phi_u.rows() != b2.cols() || phi_u.cols() != n) {
        throw InvalidInput("sls_residual: Phi_x must be n x n and Phi_u n_u x n");
    }
    if (phi_x.horizon() != phi_u.horizon()) {
        throw InvalidInput("sls_residual: horizons differ");
    }
    if ((phi_x[1] - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12) {
        throw ContractViolation("sls_residual: Phi_x[1] must equal the identity");
    }
    const Index horizon = phi_x.horizon();
    std::vector<Matrix> taps;
    taps.reserve(static_cast<std::size_t>(horizon));
    for (Index k = 1; k <= horizon; ++k) {
        Matrix tap = -a * phi_x[k] - b2 * phi_u[k];
        if (k < horizon) {
            tap += phi_x[k + 1];
        }
        taps.push_back(std::move(tap));
    }
    return FirTransfer(std::move(taps));
}

double delta_norm(const FirTransfer& g, DeltaNorm norm, int grid_points) {
    switch (norm) {
        case DeltaNorm::L1: return l1_norm(g);
        case DeltaNorm::E1: return e1_norm(g);
        case DeltaNorm::HinfSampled: return hinf_norm_sampled(g, grid_points);
    }
    throw InvalidInput("delta_norm: unknown norm");
}

// ============================================================================
// Locality
// ============================================================================

LocalityConstraint LocalityConstraint::uniform(const SupportMask& x_mask, const SupportMask& u_mask, Index horizon) {
    if (horizon < 1) {
        throw InvalidInput("LocalityConstraint: horizon must be at least 1");
    }
    LocalityConstraint out;
    out.x_masks.assign(static_cast<std::size_t>(horizon), x_mask);
    out.u_masks.assign(static_cast<std::size_t>(horizon), u_mask);
    out.horizon = horizon;
    return out;
}

void LocalityConstraint::validate(Index states, Index inputs) const {
    if (horizon < 1 || x_masks.size() != static_cast<std::size_t>(horizon) ||
        u_masks.size() != static_cast<std::size_t>(horizon)) {
        throw InvalidInput("LocalityConstraint: need one Phi_x and one Phi_u mask per tap");
    }
    for (const auto& m : x_masks) {
        if (m.rows() != states || m.cols() != states) {
            throw InvalidInput("LocalityConstraint: Phi_x masks must be n x n");
        }
    }
    for (const auto& m : u_masks) {
        if (m.rows() != inputs || m.cols() != states) {
            throw InvalidInput("LocalityConstraint: Phi_u masks must be n_u x n");
        }
    }
}

Eigen::MatrixXi hop_distances(const SupportMask& adjacency) {
    const Index n = adjacency.rows();
    if (adjacency.cols() != n) {
        throw InvalidInput("hop_distances: adjacency must be square");
    }
    Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(n, n, -1);
    std::deque<Index> queue;
    for (Index src = 0; src < n; ++src) {
        dist(src, src) = 0;
        queue.assign(1, src);
        while (!queue.empty()) {
            const Index v = queue.front();
            queue.pop_front();
            for (Index w = 0; w < n; ++w) {
                if (adjacency(v, w) && dist(src, w) < 0) {
                    dist(src, w) = dist(src, v) + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    return dist;
}

LocalityConstraint locality_mask(const SupportMask& adjacency, const SupportMask& actuator_map, int d, Index horizon) {
    const Index n = adjacency.rows();
    if (adjacency.cols() != n || !(adjacency == adjacency.transpose())) {
        throw InvalidInput("locality_mask: adjacency must be square and symmetric");
    }
    for (Index i = 0; i < n; ++i) {
        if (!adjacency(i, i)) {
            throw InvalidInput("locality_mask: adjacency must have a true diagonal");
        }
    }
    if (actuator_map.cols() != n) {
        throw InvalidInput("locality_mask: actuator map must be n_u x n");
    }
    if (d < 0) {
        throw InvalidInput("locality_mask: d must be nonnegative");
    }
    const Eigen::MatrixXi dist = hop_distances(adjacency);
    const auto within = [&](Index i, Index j) { return dist(i, j) >= 0 && dist(i, j) <= d; };

    SupportMask x_mask(n, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            x_mask.set(i, j, within(i, j));
        }
    }
    SupportMask u_mask(actuator_map.rows(), n);
    for (Index a = 0; a < actuator_map.rows(); ++a) {
        for (Index s = 0; s < n; ++s) {
            if (!actuator_map(a, s)) {
                continue;
            }
            for (Index j = 0; j < n; ++j) {
                if (within(s, j)) {
                    u_mask.set(a, j);
                }
            }
        }
    }
    LocalityConstraint out = LocalityConstraint::uniform(x_mask, u_mask, horizon);
    out.d = d;
    return out;
}

std::string to_string(DeltaNorm norm) {
    switch (norm) {
        case DeltaNorm::L1: return "l1";
        case DeltaNorm::E1: return "e1";
        case DeltaNorm::HinfSampled: return "hinf";
    }
    return "?";
}

std::string to_string(SynthesisStatus status) {
    switch (status) {
        case SynthesisStatus::Optimal: return "optimal";
        case SynthesisStatus::Infeasible: return "infeasible";
        case SynthesisStatus::SolverLimit: return "solver_limit";
    }
    return "?";
}

}  // namespace sparsedisc
