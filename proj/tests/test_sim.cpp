#include <catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "sparsedisc/experiments.hpp"
#include "sparsedisc/sim.hpp"
#include "sparsedisc/sls.hpp"

using namespace sparsedisc;
using Catch::Approx;

namespace {

SupportMask path_adjacency(Index n) {
    SupportMask m(n, n);
    for (Index i = 0; i < n; ++i) {
        m.set(i, i);
        if (i + 1 < n) {
            m.set(i, i + 1);
            m.set(i + 1, i);
        }
    }
    return m;
}

SynthesisOutcome chain_design(const DiscretePlant& p, int d, Index horizon) {
    const auto loc = locality_mask(path_adjacency(p.states()), SupportMask::identity(p.states()), d, horizon);
    SynthesisOutcome o = synthesize(p, loc, 0.0);
    REQUIRE(o.optimal());
    return o;
}

FirTransfer random_fir(Index n, Index horizon, std::mt19937_64& rng) {
    std::vector<Matrix> taps;
    for (Index k = 0; k < horizon; ++k) {
        taps.push_back(oracle::random_matrix(n, n, rng));
    }
    return FirTransfer(std::move(taps));
}

}  // namespace

TEST_CASE("zero input gives zero trajectory", "[sim]") {
    const DiscretePlant p = chain_plant(6);
    const SynthesisOutcome o = chain_design(p, 2, 5);
    SlsController c(o.phi_x, o.phi_u);
    for (int k = 0; k < 10; ++k) {
        CHECK(c.step(Vector::Zero(6)).cwiseAbs().maxCoeff() == 0.0);
    }
    const Trajectory t = closed_loop(p, SlsController(o.phi_x, o.phi_u), {}, 20);
    CHECK(t.x.size() == 21);
    CHECK(t.u.size() == 20);
    for (const auto& x : t.x) {
        CHECK(x.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("nominal impulse response equals the spectral components", "[sim][property]") {
    const DiscretePlant p = chain_plant(6);
    const SynthesisOutcome o = chain_design(p, 2, 5);
    for (Index ch = 0; ch < 6; ++ch) {
        const Trajectory t = closed_loop(p, SlsController(o.phi_x, o.phi_u), impulse(6, ch), 12);
        for (Index k = 1; k <= 5; ++k) {
            CHECK((t.x[static_cast<std::size_t>(k)] - o.phi_x[k].col(ch)).cwiseAbs().maxCoeff() <= 1e-8);
            CHECK((t.u[static_cast<std::size_t>(k)] - o.phi_u[k].col(ch)).cwiseAbs().maxCoeff() <= 1e-8);
        }
        // Deadbeat after T steps.
        for (Index k = 6; k <= 12; ++k) {
            CHECK(t.x[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff() <= 1e-8);
        }
    }
}

TEST_CASE("energy of the impulse response equals the column H2 norm", "[sim][property]") {
    const DiscretePlant p = chain_plant(6);
    const SynthesisOutcome o = chain_design(p, 2, 5);
    for (Index ch = 0; ch < 6; ++ch) {
        const Trajectory t = closed_loop(p, SlsController(o.phi_x, o.phi_u), impulse(6, ch), 10);
        double energy = 0.0;
        for (std::size_t k = 0; k < t.u.size(); ++k) {
            energy += (p.c1 * t.x[k] + p.d12 * t.u[k]).squaredNorm();
        }
        const double want = std::pow(h2_norm(stack(o.phi_x.col(ch), o.phi_u.col(ch))), 2);
        CHECK(energy == Approx(want).epsilon(1e-6));
    }
}

TEST_CASE("mismatched plant follows the convolution series", "[sim][property]") {
    const DiscretePlant nominal = chain_plant(6);
    const SynthesisOutcome o = chain_design(nominal, 2, 5);
    DiscretePlant truth = nominal;
    std::mt19937_64 rng(61);
    truth.a += oracle::random_matrix(6, 6, rng, -0.02, 0.02);
    const FirTransfer delta = sls_residual(truth.a, truth.b2, o.phi_x, o.phi_u);
    const auto want = oracle::convolution_response(o.phi_x.taps(), delta.taps(), Vector::Unit(6, 2), 50);
    const Trajectory t = closed_loop(truth, SlsController(o.phi_x, o.phi_u), impulse(6, 2), 50);
    for (int k = 1; k <= 50; ++k) {
        const double scale = std::max(1.0, want[static_cast<std::size_t>(k)].cwiseAbs().maxCoeff());
        CHECK((t.x[static_cast<std::size_t>(k)] - want[static_cast<std::size_t>(k)]).cwiseAbs().maxCoeff() <=
              1e-9 * scale);
    }
}

TEST_CASE("stability examples", "[sim][stability]") {
    const StabilityReport zero = check_robust_stability(FirTransfer::zeros(3, 3, 2));
    CHECK(zero.stable);
    CHECK(zero.spectral_radius == 0.0);
    for (const double c : {0.3, -0.7, 0.999, 1.0, -1.5}) {
        const StabilityReport r = check_robust_stability(FirTransfer({Matrix::Identity(3, 3) * c}));
        CHECK(r.spectral_radius == Approx(std::abs(c)).epsilon(1e-12));
        CHECK(r.stable == (std::abs(c) < 1.0));
    }
    CHECK_THROWS_AS(check_robust_stability(FirTransfer({Matrix::Zero(2, 3)})), InvalidInput);
}

TEST_CASE("companion matrix layout", "[sim][stability]") {
    const FirTransfer d({Matrix::Constant(1, 1, 0.2), Matrix::Constant(1, 1, -0.3)});
    Matrix want(2, 2);
    want << -0.2, 0.3, 1.0, 0.0;
    CHECK(companion_matrix(d) == want);
    // Roots of z^2 + 0.2 z - 0.3.
    const double root = (-0.2 - std::sqrt(0.04 + 1.2)) / 2.0;
    CHECK(check_robust_stability(d).spectral_radius == Approx(std::abs(root)).epsilon(1e-12));
}

TEST_CASE("small gain implies stability; power and dense agree", "[sim][stability][property]") {
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 30; ++trial) {
        FirTransfer d = random_fir(8, 4, rng);
        d = d.scaled(0.5 / l1_norm(d));
        const StabilityReport dense = check_robust_stability(d, RadiusMethod::Dense);
        CHECK(dense.stable);
        CHECK(dense.spectral_radius < 1.0);
        CHECK(dense.spectral_radius ==
              Approx(oracle::dense_spectral_radius(companion_matrix(d))).epsilon(1e-10));
    }
    for (int trial = 0; trial < 10; ++trial) {
        FirTransfer d = random_fir(10, 3, rng);
        d = d.scaled(1.2 / l1_norm(d));
        const double want = oracle::dense_spectral_radius(companion_matrix(d));
        const StabilityReport power = check_robust_stability(d, RadiusMethod::Power);
        CHECK(power.spectral_radius == Approx(want).epsilon(2e-2));
    }
}

TEST_CASE("nominal grid response stays within the locality radius", "[sim][grid]") {
    RunConfig cfg;
    const ControlProblem pb = build_problem(cfg);
    const SynthesisOutcome o = synthesize(pb.nominal, pb.locality, 0.0);
    REQUIRE(o.optimal());
    const Index channel = 2;  // bus 3
    const Trajectory t = closed_loop(pb.nominal, SlsController(o.phi_x, o.phi_u), impulse(pb.nominal.disturbances(), channel), 50);
    double outside = 0.0;
    for (const auto& x : t.x) {
        for (Index s = 0; s < x.size(); ++s) {
            const Index bus = pb.state_node[static_cast<std::size_t>(s)];
            if (pb.node_distance(channel, bus) > cfg.locality) {
                outside = std::max(outside, std::abs(x(s)));
            }
        }
    }
    CHECK(outside <= 1e-10);
}
