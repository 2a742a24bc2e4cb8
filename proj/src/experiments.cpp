#include "sparsedisc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "sparsedisc/bounds.hpp"
#include "sparsedisc/matexp.hpp"
#include "sparsedisc/matrix_io.hpp"
#include "sparsedisc/sim.hpp"

namespace sparsedisc {

namespace fs = std::filesystem;

void RunConfig::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw InvalidInput("config: tau must be positive");
    }
    if (horizon < 1) {
        throw InvalidInput("config: horizon must be at least 1");
    }
    if (locality < 0) {
        throw InvalidInput("config: locality must be nonnegative");
    }
    if (gamma && !(*gamma >= 0.0 && *gamma < 1.0)) {
        throw InvalidInput("config: gamma must lie in [0, 1)");
    }
    if (!(bisect_tol > 0.0 && bisect_tol < 1.0)) {
        throw InvalidInput("config: bisect-tol must lie in (0, 1)");
    }
    for (const double a : alpha_grid) {
        if (!(a > 0.0 && a < 1.0)) {
            throw InvalidInput("config: alpha grid values must lie in (0, 1)");
        }
    }
    if (alpha_grid.empty()) {
        throw InvalidInput("config: alpha grid is empty");
    }
    if (!(zero_tol >= 0.0)) {
        throw InvalidInput("config: zero-tol must be nonnegative");
    }
    if (steps < 1) {
        throw InvalidInput("config: steps must be at least 1");
    }
    if (chain_states < 2) {
        throw InvalidInput("config: chain needs at least 2 states");
    }
    if (samples < 1 || bandwidth < 0 || !(alpha >= 0.0)) {
        throw InvalidInput("config: samples >= 1, bandwidth >= 0 and alpha >= 0 required");
    }
    if (max_iterations < 1 || hinf_grid < 64) {
        throw InvalidInput("config: max-iterations >= 1 and hinf-grid >= 64 required");
    }
    if (system != "grid" && system != "chain" && system != "file") {
        throw InvalidInput("config: system must be grid, chain or file");
    }
}

BandFamily parse_band_family(const std::string& name) {
    if (name == "diagdom") {
        return BandFamily::DiagDominant;
    }
    if (name == "uniform") {
        return BandFamily::Uniform;
    }
    throw InvalidInput("unknown matrix family '" + name + "' (diagdom, uniform)");
}

DeltaNorm parse_delta_norm(const std::string& name) {
    if (name == "l1") {
        return DeltaNorm::L1;
    }
    if (name == "e1") {
        return DeltaNorm::E1;
    }
    if (name == "hinf") {
        return DeltaNorm::HinfSampled;
    }
    throw InvalidInput("unknown norm '" + name + "' (l1, e1, hinf)");
}

Matrix random_banded(Index n, Index s, double alpha, BandFamily family, std::mt19937_64& rng) {
    if (n < 1 || s < 0 || !(alpha >= 0.0)) {
        throw InvalidInput("random_banded: need n >= 1, s >= 0, alpha >= 0");
    }
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Matrix m = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = std::max<Index>(0, i - s); j <= std::min<Index>(n - 1, i + s); ++j) {
            if (family == BandFamily::Uniform || i != j) {
                m(i, j) = unit(rng);
            }
        }
        if (family == BandFamily::DiagDominant) {
            m(i, i) = -m.row(i).cwiseAbs().sum();
        }
    }
    const double peak = matrix_norm(m, NormKind::Max);
    if (peak > 0.0) {
        m *= alpha / peak;
    }
    return m;
}

StateInputCost state_input_cost(Index states, Index disturbances, Index inputs) {
    StateInputCost out;
    out.c1 = Matrix::Zero(states + inputs, states);
    out.c1.topRows(states).setIdentity();
    out.d11 = Matrix::Zero(states + inputs, disturbances);
    out.d12 = Matrix::Zero(states + inputs, inputs);
    out.d12.bottomRows(inputs).setIdentity();
    return out;
}

DiscretePlant chain_plant(Index n, double diag, double off) {
    DiscretePlant p;
    p.a = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        p.a(i, i) = diag;
        if (i + 1 < n) {
            p.a(i, i + 1) = off;
            p.a(i + 1, i) = off;
        }
    }
    p.b1 = Matrix::Identity(n, n);
    p.b2 = Matrix::Identity(n, n);
    const StateInputCost cost = state_input_cost(n, n, n);
    p.c1 = cost.c1;
    p.d11 = cost.d11;
    p.d12 = cost.d12;
    p.tau = 1.0;
    return p;
}

namespace {

DiscretePlant discretize_with_cost(const ContinuousPlant& plant, double tau, DiscretizationMethod method,
                                   double zero_tol) {
    const StateInputCost cost = state_input_cost(plant.states(), plant.b1_hat.cols(), plant.b2_hat.cols());
    return discretize_all(plant, cost.c1, cost.d11, cost.d12, tau, method, zero_tol);
}

LocalityConstraint masks_from_files(const RunConfig& cfg, Index states, Index inputs) {
    const SupportMask x = read_mask(cfg.x_mask_path);
    const SupportMask u = cfg.u_mask_path.empty() ? SupportMask::full(inputs, states) : read_mask(cfg.u_mask_path);
    LocalityConstraint loc = LocalityConstraint::uniform(x, u, cfg.horizon);
    loc.validate(states, inputs);
    return loc;
}

}  // namespace

ControlProblem build_problem(const RunConfig& cfg) {
    cfg.validate();
    ControlProblem pb;
    if (cfg.system == "grid") {
        const GridSpec spec = cfg.topology.empty() ? case57_topology() : read_topology(cfg.topology);
        const GridModel model = linearize(spec);
        pb.nominal = discretize_with_cost(model.plant, cfg.tau, DiscretizationMethod::Projected, cfg.zero_tol);
        pb.truth = discretize_with_cost(model.plant, cfg.tau, DiscretizationMethod::ZohExact, cfg.zero_tol);
        pb.adjacency = model.state_adjacency;
        pb.actuators = model.actuator_map;
        for (Index s = 0; s < model.index.states; ++s) {
            const Index bus = model.index.bus_of(s);
            pb.state_node.push_back(bus);
            pb.state_kind.push_back(model.index.theta(bus) == s ? "theta" : "omega");
        }
        pb.node_distance = hop_distances(model.bus_adjacency);
    } else if (cfg.system == "chain") {
        pb.nominal = chain_plant(cfg.chain_states);
        pb.truth = pb.nominal;
        const Index n = cfg.chain_states;
        pb.adjacency = support(pb.nominal.a) | SupportMask::identity(n);
        pb.actuators = SupportMask::identity(n);
        for (Index s = 0; s < n; ++s) {
            pb.state_node.push_back(s);
            pb.state_kind.emplace_back("x");
        }
        pb.node_distance = hop_distances(pb.adjacency);
    } else {
        if (cfg.a_path.empty()) {
            throw InvalidInput("system=file needs --input with the continuous-time A");
        }
        ContinuousPlant cp;
        cp.a_hat = read_matrix(cfg.a_path);
        const Index n = cp.a_hat.rows();
        cp.b2_hat = cfg.b_path.empty() ? Matrix::Identity(n, n) : read_matrix(cfg.b_path);
        cp.b1_hat = Matrix::Identity(n, n);
        cp.validate();
        pb.nominal = discretize_with_cost(cp, cfg.tau, DiscretizationMethod::Projected, cfg.zero_tol);
        pb.truth = discretize_with_cost(cp, cfg.tau, DiscretizationMethod::ZohExact, cfg.zero_tol);
        const SupportMask s = support(cp.a_hat, cfg.zero_tol);
        pb.adjacency = s | s.transpose() | SupportMask::identity(n);
        pb.actuators = support(cp.b2_hat, cfg.zero_tol).transpose();
        for (Index i = 0; i < n; ++i) {
            pb.state_node.push_back(i);
            pb.state_kind.emplace_back("x");
        }
        pb.node_distance = hop_distances(pb.adjacency);
    }
    if (!cfg.x_mask_path.empty()) {
        pb.locality = masks_from_files(cfg, pb.nominal.states(), pb.nominal.inputs());
    } else {
        pb.locality = locality_mask(pb.adjacency, pb.actuators, cfg.locality, cfg.horizon);
    }
    return pb;
}

RobustnessBudget empirical_budget(const ControlProblem& problem, DeltaNorm norm) {
    const Matrix da = problem.truth.a - problem.nominal.a;
    const Matrix db = problem.truth.b2 - problem.nominal.b2;
    const NormKind kind = norm == DeltaNorm::L1 ? NormKind::Infinity
                                                : (norm == DeltaNorm::E1 ? NormKind::One : NormKind::Two);
    RobustnessBudget b;
    b.norm = norm;
    b.model_a = matrix_norm(da, kind);
    b.model_b = matrix_norm(db, kind);
    return b;
}

SynthesisSettings synthesis_settings(const RunConfig& cfg, const ControlProblem& problem) {
    SynthesisSettings s;
    s.norm = cfg.norm;
    s.alpha_grid = cfg.alpha_grid;
    s.hinf_grid = cfg.hinf_grid;
    s.admm.max_iterations = cfg.max_iterations;
    if (cfg.robust) {
        s.budget = empirical_budget(problem, cfg.norm);
    }
    return s;
}

// ============================================================================
// Output helpers
// ============================================================================

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw InvalidInput("cannot create output directory " + dir + ": " + ec.message());
    }
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_fir(const std::string& path, const FirTransfer& g) {
    CsvWriter csv(path, {"k", "row", "col", "value"});
    for (Index k = 1; k <= g.horizon(); ++k) {
        for (Index j = 0; j < g.cols(); ++j) {
            for (Index i = 0; i < g.rows(); ++i) {
                if (g[k](i, j) != 0.0) {
                    csv.cell(k).cell(i + 1).cell(j + 1).cell(g[k](i, j)).end_row();
                }
            }
        }
    }
}

class KeyValueCsv {
public:
    explicit KeyValueCsv(const std::string& path) : csv_(path, {"key", "value"}) {}
    void put(const std::string& key, const std::string& value) { csv_.cell(key).cell(value).end_row(); }
    void put(const std::string& key, double value) { csv_.cell(key).cell(value).end_row(); }
    void put(const std::string& key, long long value) { csv_.cell(key).cell(value).end_row(); }

private:
    CsvWriter csv_;
};

std::string sanitize(std::string text) {
    std::replace(text.begin(), text.end(), ',', ';');
    std::replace(text.begin(), text.end(), '\n', ' ');
    return text;
}

int status_exit(SynthesisStatus status) {
    switch (status) {
        case SynthesisStatus::Optimal: return kExitOk;
        case SynthesisStatus::Infeasible: return kExitInfeasible;
        case SynthesisStatus::SolverLimit: return kExitNumerical;
    }
    return kExitNumerical;
}

SynthesisOutcome solve(const RunConfig& cfg, const ControlProblem& pb) {
    const SynthesisSettings settings = synthesis_settings(cfg, pb);
    if (cfg.paper_literal || cfg.gamma) {
        if (!settings.budget) {
            return synthesize(pb.nominal, pb.locality, cfg.gamma.value_or(0.0), settings);
        }
        // Fixed gamma with budgets: best alpha on the grid.
        std::optional<SynthesisOutcome> best;
        for (const double a : settings.alpha_grid) {
            SynthesisSettings s = settings;
            s.budget->alpha = a;
            SynthesisOutcome o = synthesize(pb.nominal, pb.locality, cfg.gamma.value_or(0.0), s);
            if (!best || (o.optimal() && (!best->optimal() || o.cost < best->cost))) {
                best = std::move(o);
            }
        }
        return *best;
    }
    return synthesize_bisect(pb.nominal, pb.locality, settings, cfg.bisect_tol);
}

void write_outcome(const std::string& dir, const RunConfig& cfg, const ControlProblem& pb, const SynthesisOutcome& o,
                   double seconds) {
    write_fir(join(dir, "phi_x.csv"), o.phi_x);
    write_fir(join(dir, "phi_u.csv"), o.phi_u);
    write_fir(join(dir, "delta.csv"), o.delta);

    const FirTransfer dense_delta = sls_residual(pb.truth.a, pb.truth.b2, o.phi_x, o.phi_u);
    const StabilityReport stab = check_robust_stability(dense_delta);

    KeyValueCsv summary(join(dir, "summary.csv"));
    summary.put("status", to_string(o.status));
    summary.put("norm", to_string(o.norm));
    summary.put("mode", cfg.robust ? "robust" : "nominal");
    summary.put("objective", cfg.paper_literal || cfg.gamma ? "fixed_gamma" : "merit_bisection");
    summary.put("gamma", o.gamma);
    summary.put("cost", o.cost);
    summary.put("merit", o.merit());
    summary.put("capped_value", o.capped_value);
    summary.put("nominal_delta_norm", delta_norm(o.delta, o.norm, cfg.hinf_grid));
    summary.put("constraint_violation", o.constraint_violation);
    summary.put("kkt_residual", o.kkt_residual);
    summary.put("sensitivity", o.sensitivity);
    summary.put("alpha", o.alpha ? *o.alpha : std::nan(""));
    summary.put("iterations", static_cast<long long>(o.iterations));
    summary.put("horizon", static_cast<long long>(pb.locality.horizon));
    summary.put("locality", static_cast<long long>(pb.locality.d));
    summary.put("dense_delta_l1", l1_norm(dense_delta));
    summary.put("dense_spectral_radius", stab.spectral_radius);
    summary.put("dense_stable", stab.stable ? "true" : "false");
    summary.put("certificate", sanitize(o.certificate));

    CsvWriter columns(join(dir, "columns.csv"), {"column", "cost"});
    for (std::size_t c = 0; c < o.column_cost.size(); ++c) {
        columns.cell(static_cast<long long>(c + 1)).cell(o.column_cost[c]).end_row();
    }

    std::ofstream timing(join(dir, "timing.txt"));
    timing << "total_seconds " << seconds << '\n';
    for (std::size_t c = 0; c < o.column_seconds.size(); ++c) {
        timing << "column " << c + 1 << ' ' << o.column_seconds[c] << '\n';
    }
}

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ============================================================================
// Commands
// ============================================================================

int cmd_discretize(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.a_path.empty()) {
        throw InvalidInput("discretize needs --input with the continuous-time A");
    }
    const Matrix a_hat = read_matrix(cfg.a_path);
    if (a_hat.rows() != a_hat.cols()) {
        throw InvalidInput("discretize: A must be square");
    }
    const Index n = a_hat.rows();
    const Matrix b_hat = cfg.b_path.empty() ? Matrix::Identity(n, n) : read_matrix(cfg.b_path);
    if (b_hat.rows() != n) {
        throw InvalidInput("discretize: B must have as many rows as A");
    }
    ensure_dir(cfg.out_dir);

    const ZohPair zoh = zoh_pair(a_hat, b_hat, cfg.tau);
    const Matrix a_trunc = truncate_first_order(a_hat, cfg.tau);
    const Matrix a_proj = project_a(a_hat, cfg.tau, cfg.zero_tol);
    const Matrix b_proj = project_b(a_hat, b_hat, cfg.tau, cfg.zero_tol);
    write_matrix(join(cfg.out_dir, "A_zoh.mtx"), zoh.a);
    write_matrix(join(cfg.out_dir, "B_zoh.mtx"), zoh.b);
    write_matrix(join(cfg.out_dir, "A_trunc.mtx"), a_trunc);
    write_matrix(join(cfg.out_dir, "B_trunc.mtx"), cfg.tau * b_hat);
    write_matrix(join(cfg.out_dir, "A_proj.mtx"), a_proj);
    write_matrix(join(cfg.out_dir, "B_proj.mtx"), b_proj);

    KeyValueCsv summary(join(cfg.out_dir, "summary.csv"));
    summary.put("n", static_cast<long long>(n));
    summary.put("tau", cfg.tau);
    try {
        const TustinPair t = tustin(a_hat, b_hat, cfg.tau);
        write_matrix(join(cfg.out_dir, "A_tustin.mtx"), t.a);
        write_matrix(join(cfg.out_dir, "B_tustin.mtx"), t.b);
        summary.put("tustin", "written");
    } catch (const SingularPencil&) {
        summary.put("tustin", "singular");
    }

    const BandedProfile prof = banded_profile(a_hat, cfg.tau, cfg.zero_tol);
    summary.put("bandwidth", static_cast<long long>(prof.s));
    summary.put("alpha", prof.alpha);

    const EmpiricalDelta proj = empirical_delta(zoh.a, a_proj);
    summary.put("delta_proj_2norm", proj.norms.rho);
    summary.put("delta_proj_infnorm", proj.norms.eps);
    summary.put("delta_proj_1norm", proj.norms.nu);
    const EmpiricalDelta proj_b = empirical_delta(zoh.b, b_proj);
    summary.put("delta_proj_b_2norm", proj_b.norms.rho);
    summary.put("delta_proj_b_infnorm", proj_b.norms.eps);
    summary.put("delta_proj_b_1norm", proj_b.norms.nu);
    if (prof.s >= 1 && n >= 2) {
        const DeltaBounds bound = delta_norm_bounds(static_cast<std::size_t>(n), prof.alpha,
                                                    static_cast<std::size_t>(prof.s));
        summary.put("bound_2norm", bound.rho);
        summary.put("bound_infnorm", bound.eps);
        summary.put("bound_1norm", bound.nu);
    } else {
        summary.put("bound_2norm", "not_applicable");
        summary.put("bound_infnorm", "not_applicable");
        summary.put("bound_1norm", "not_applicable");
    }

    const double norm2 = matrix_norm(a_hat, NormKind::Two);
    summary.put("delta_trunc_2norm", matrix_norm(zoh.a - a_trunc, NormKind::Two));
    try {
        summary.put("truncation_bound", truncation_bound(norm2, cfg.tau));
    } catch (const BoundInapplicable&) {
        summary.put("truncation_bound", "inapplicable");
    }
    return kExitOk;
}

int cmd_bounds(const RunConfig& cfg) {
    cfg.validate();
    const BandFamily family = parse_band_family(cfg.family);
    if (cfg.bandwidth < 1) {
        throw InvalidInput("bounds: bandwidth must be at least 1");
    }
    ensure_dir(cfg.out_dir);
    std::mt19937_64 rng(cfg.seed);
    const auto start = std::chrono::steady_clock::now();

    CsvWriter csv(join(cfg.out_dir, "bounds.csv"),
                  {"n", "sample", "s", "alpha", "empirical_2norm", "bound_2norm", "empirical_infnorm", "bound_infnorm",
                   "empirical_1norm", "bound_1norm", "gap_2norm", "gap_infnorm", "gap_1norm", "dominates"});
    bool all_dominate = true;
    std::ofstream timing(join(cfg.out_dir, "timing.txt"));
    for (const Index n : cfg.sizes) {
        if (n < 2) {
            throw InvalidInput("bounds: sizes must be at least 2");
        }
        const auto size_start = std::chrono::steady_clock::now();
        const Index s = std::min(cfg.bandwidth, n - 1);
        for (int sample = 0; sample < cfg.samples; ++sample) {
            const Matrix scaled = random_banded(n, s, cfg.alpha, family, rng);
            const Matrix a_hat = scaled / cfg.tau;
            const Matrix dense = expm(a_hat * cfg.tau);
            const Matrix sparse = project_a(a_hat, cfg.tau);
            const EmpiricalDelta emp = empirical_delta(dense, sparse);
            const double alpha = matrix_norm(a_hat * cfg.tau, NormKind::Max);
            const DeltaBounds bound =
                delta_norm_bounds(static_cast<std::size_t>(n), alpha, static_cast<std::size_t>(s));
            const auto gap = [](double b, double e) { return e > 0.0 ? b / e : std::numeric_limits<double>::infinity(); };
            const bool dominates = bound.rho >= emp.norms.rho && bound.eps >= emp.norms.eps && bound.nu >= emp.norms.nu;
            all_dominate = all_dominate && dominates;
            csv.cell(n).cell(sample).cell(s).cell(alpha);
            csv.cell(emp.norms.rho).cell(bound.rho).cell(emp.norms.eps).cell(bound.eps);
            csv.cell(emp.norms.nu).cell(bound.nu);
            csv.cell(gap(bound.rho, emp.norms.rho)).cell(gap(bound.eps, emp.norms.eps)).cell(gap(bound.nu, emp.norms.nu));
            csv.cell(dominates ? "true" : "false").end_row();
        }
        timing << "n " << n << " seconds " << elapsed(size_start) << '\n';
    }
    timing << "total_seconds " << elapsed(start) << '\n';
    if (!all_dominate) {
        std::cerr << "bounds: at least one sample violates the bound (see bounds.csv)\n";
    }
    return kExitOk;
}

int cmd_synthesize(const RunConfig& cfg) {
    const ControlProblem pb = build_problem(cfg);
    ensure_dir(cfg.out_dir);

    if (cfg.sweep) {
        RunConfig sweep_cfg = cfg;
        CsvWriter csv(join(cfg.out_dir, "sweep.csv"), {"horizon", "locality", "status", "cost", "nominal_delta_l1",
                                                         "dense_delta_l1", "dense_spectral_radius", "dense_stable"});
        std::ofstream timing(join(cfg.out_dir, "timing.txt"));
        const SynthesisSettings settings = synthesis_settings(cfg, pb);
        for (const Index t : cfg.sweep_horizons) {
            for (const int d : cfg.sweep_localities) {
                sweep_cfg.horizon = t;
                sweep_cfg.locality = d;
                const auto start = std::chrono::steady_clock::now();
                const LocalityConstraint loc = locality_mask(pb.adjacency, pb.actuators, d, t);
                const SynthesisOutcome o = synthesize(pb.nominal, loc, sweep_cfg.gamma.value_or(0.0), settings);
                csv.cell(t).cell(d).cell(to_string(o.status));
                if (o.optimal()) {
                    const FirTransfer dense = sls_residual(pb.truth.a, pb.truth.b2, o.phi_x, o.phi_u);
                    const StabilityReport stab = check_robust_stability(dense);
                    csv.cell(o.cost).cell(l1_norm(o.delta)).cell(l1_norm(dense)).cell(stab.spectral_radius);
                    csv.cell(stab.stable ? "true" : "false");
                } else {
                    csv.cell("").cell("").cell("").cell("").cell("");
                }
                csv.end_row();
                timing << "T " << t << " d " << d << " seconds " << elapsed(start) << '\n';
            }
        }
        return kExitOk;
    }

    const auto start = std::chrono::steady_clock::now();
    const SynthesisOutcome o = solve(cfg, pb);
    write_outcome(cfg.out_dir, cfg, pb, o, elapsed(start));
    return status_exit(o.status);
}

int cmd_simulate(const RunConfig& cfg) {
    const ControlProblem pb = build_problem(cfg);
    ensure_dir(cfg.out_dir);
    const auto start = std::chrono::steady_clock::now();
    const SynthesisOutcome o = solve(cfg, pb);
    write_outcome(cfg.out_dir, cfg, pb, o, elapsed(start));
    if (!o.optimal()) {
        return status_exit(o.status);
    }

    const Index channel = cfg.impulse_bus - 1;
    if (channel < 0 || channel >= pb.nominal.disturbances()) {
        throw InvalidInput("simulate: impulse-bus out of range");
    }
    const std::vector<Vector> w = cfg.no_disturbance ? std::vector<Vector>{} : impulse(pb.nominal.disturbances(), channel);
    const Index node = channel;

    CsvWriter traj(join(cfg.out_dir, "trajectory.csv"), {"model", "k", "node", "state", "kind", "value", "log10_abs"});
    CsvWriter summary(join(cfg.out_dir, "simulation.csv"),
                      {"model", "peak", "final_max_abs", "decay_step", "max_abs_beyond_locality", "stable",
                       "spectral_radius"});
    for (const bool dense : {false, true}) {
        const DiscretePlant& plant = dense ? pb.truth : pb.nominal;
        const std::string model = dense ? "dense" : "nominal";
        const Trajectory tr = closed_loop(plant, SlsController(o.phi_x, o.phi_u), w, cfg.steps);
        double peak = 0.0;
        double beyond = 0.0;
        std::vector<double> step_max;
        for (std::size_t k = 0; k < tr.x.size(); ++k) {
            const Vector& x = tr.x[k];
            step_max.push_back(x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
            peak = std::max(peak, step_max.back());
            for (Index s = 0; s < x.size(); ++s) {
                const Index nd = pb.state_node[static_cast<std::size_t>(s)];
                const int dist = pb.node_distance(node, nd);
                if (dist < 0 || dist > cfg.locality) {
                    beyond = std::max(beyond, std::abs(x(s)));
                }
                traj.cell(model).cell(static_cast<long long>(k)).cell(nd + 1).cell(s + 1);
                traj.cell(pb.state_kind[static_cast<std::size_t>(s)]).cell(x(s)).cell(std::log10(std::abs(x(s))));
                traj.end_row();
            }
        }
        long long decay = -1;
        for (std::size_t k = step_max.size(); k-- > 0;) {
            if (step_max[k] > 1e-6 * peak) {
                decay = static_cast<long long>(k + 1);
                break;
            }
        }
        if (peak == 0.0) {
            decay = 0;
        }
        const StabilityReport stab =
            check_robust_stability(sls_residual(plant.a, plant.b2, o.phi_x, o.phi_u));
        summary.cell(model).cell(peak).cell(step_max.back()).cell(decay).cell(beyond);
        summary.cell(stab.stable ? "true" : "false").cell(stab.spectral_radius).end_row();
    }
    std::ofstream timing(join(cfg.out_dir, "timing.txt"), std::ios::app);
    timing << "simulate_seconds " << elapsed(start) << '\n';
    return kExitOk;
}

int run_command(const RunConfig& cfg) {
    try {
        if (cfg.command == "discretize") {
            return cmd_discretize(cfg);
        }
        if (cfg.command == "bounds") {
            return cmd_bounds(cfg);
        }
        if (cfg.command == "synthesize") {
            return cmd_synthesize(cfg);
        }
        if (cfg.command == "simulate") {
            return cmd_simulate(cfg);
        }
        throw InvalidInput("unknown command '" + cfg.command + "'");
    } catch (const AllInfeasible& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const MaskIdentityConflict& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const InvalidInput& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const DomainError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const ContractViolation& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    }
}

}  // namespace sparsedisc
