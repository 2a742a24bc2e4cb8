#include <catch_amalgamated.hpp>

#include <sstream>

#include "sparsedisc/grid.hpp"

using namespace sparsedisc;

TEST_CASE("two-generator line", "[grid]") {
    const GridSpec spec = GridSpec::uniform(2, {0, 1}, {{0, 1, 1.0}});
    const GridModel m = linearize(spec);
    Matrix want(4, 4);
    want << 0, 1, 0, 0,
           -1, -1, 1, 0,
            0, 0, 0, 1,
            1, 0, -1, -1;
    CHECK(m.plant.a_hat == want);
    CHECK(m.index.states == 4);
    CHECK(m.index.theta(1) == 2);
    CHECK(m.index.omega(1) == 3);
    CHECK(m.plant.b2_hat(1, 0) == -1.0);
    CHECK(m.plant.b2_hat(3, 1) == -1.0);
    CHECK(m.plant.b1_hat == m.plant.b2_hat);
}

TEST_CASE("disconnected networks are rejected", "[grid][errors]") {
    CHECK_THROWS_AS(linearize(GridSpec::uniform(1, {}, {})), InvalidInput);
    CHECK_THROWS_AS(linearize(GridSpec::uniform(3, {0}, {{0, 1, 1.0}})), InvalidInput);
    GridSpec bad = GridSpec::uniform(2, {0}, {{0, 1, 1.0}});
    bad.damping(1) = 0.0;
    CHECK_THROWS_AS(linearize(bad), InvalidInput);
}

TEST_CASE("star network theta rows are Laplacian", "[grid][property]") {
    GridSpec spec = GridSpec::uniform(4, {0}, {{0, 1, 2.0}, {0, 2, 0.5}, {0, 3, 1.5}});
    spec.inertia(0) = 3.0;
    spec.damping << 2.0, 0.5, 4.0, 1.0;
    const GridModel m = linearize(spec);
    std::vector<Index> thetas;
    for (Index b = 0; b < 4; ++b) {
        thetas.push_back(m.index.theta(b));
    }
    const Index w0 = m.index.omega(0);
    for (Index b = 1; b < 4; ++b) {
        double sum = 0.0;
        for (const Index t : thetas) {
            sum += m.plant.a_hat(thetas[static_cast<std::size_t>(b)], t);
        }
        CHECK(std::abs(sum) <= 1e-12);
    }
    double sum = 0.0;
    for (const Index t : thetas) {
        sum += m.plant.a_hat(w0, t);
    }
    CHECK(std::abs(sum) <= 1e-12);
    CHECK(m.plant.a_hat(w0, w0) == -2.0 / 3.0);
    CHECK(m.plant.a_hat(thetas[1], thetas[0]) == 2.0 / 0.5);
}

TEST_CASE("parallel lines are summed", "[grid]") {
    const GridModel m = linearize(GridSpec::uniform(2, {}, {{0, 1, 1.0}, {1, 0, 2.0}}));
    CHECK(m.plant.a_hat(0, 1) == 3.0);
    CHECK(m.plant.a_hat(0, 0) == -3.0);
}

TEST_CASE("bundled 57-bus case", "[grid]") {
    const GridSpec spec = case57_topology();
    CHECK(spec.buses == 57);
    Index gens = 0;
    for (const bool g : spec.generator) {
        gens += g ? 1 : 0;
    }
    CHECK(gens == 7);
    for (const Index g : {1, 2, 3, 6, 8, 9, 12}) {
        CHECK(spec.generator[static_cast<std::size_t>(g - 1)]);
    }
    const GridModel m = linearize(spec);
    CHECK(m.index.states == 64);
    CHECK(m.plant.a_hat.rows() == 64);
    for (Index j = 0; j < m.plant.b2_hat.cols(); ++j) {
        CHECK((m.plant.b2_hat.col(j).array() != 0.0).count() == 1);
    }
    // Coupling only between neighboring buses.
    for (Index i = 0; i < 64; ++i) {
        for (Index j = 0; j < 64; ++j) {
            if (m.plant.a_hat(i, j) != 0.0) {
                CHECK(m.bus_adjacency(m.index.bus_of(i), m.index.bus_of(j)));
                CHECK(m.state_adjacency(i, j));
            }
        }
    }
    // Theta rows of load buses sum to zero.
    for (Index b = 0; b < 57; ++b) {
        if (!spec.generator[static_cast<std::size_t>(b)]) {
            const Index r = m.index.theta(b);
            double sum = 0.0;
            for (Index c = 0; c < 57; ++c) {
                sum += m.plant.a_hat(r, m.index.theta(c));
            }
            CHECK(std::abs(sum) <= 1e-12);
        }
    }
}

TEST_CASE("topology parsing", "[grid][io]") {
    std::istringstream ok("# comment\n1 2\n2 3 0.5  # inline\n\nG: 1 3\n");
    const GridSpec spec = parse_topology(ok);
    CHECK(spec.buses == 3);
    CHECK(spec.edges.size() == 2);
    CHECK(spec.edges[1].h == 0.5);
    CHECK(spec.generator[0]);
    CHECK_FALSE(spec.generator[1]);
    CHECK(spec.generator[2]);

    const auto line_of = [](const std::string& text) -> std::size_t {
        std::istringstream in(text);
        try {
            (void)parse_topology(in);
        } catch (const ParseError& e) {
            return e.line();
        }
        return 0;
    };
    CHECK(line_of("1 2\n2 x\n") == 2);
    CHECK(line_of("1 2\n\n0 2\n") == 3);
    CHECK(line_of("1 2\n2 2\n") == 2);
    CHECK(line_of("1 2 -1\n") == 1);
    CHECK(line_of("1 2\nG: 1 q\n") == 2);
    CHECK(line_of("1 2 3 4\n") == 1);
    CHECK_THROWS_AS(read_topology("/nonexistent/case.topo"), InvalidInput);
}
