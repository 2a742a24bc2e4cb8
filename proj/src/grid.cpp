#include "sparsedisc/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "sparsedisc/sls.hpp"

namespace sparsedisc {

GridSpec GridSpec::uniform(Index buses, const std::vector<Index>& generators, std::vector<GridEdge> edges, double m,
                           double d) {
    GridSpec spec;
    spec.buses = buses;
    spec.generator.assign(static_cast<std::size_t>(std::max<Index>(buses, 0)), false);
    for (const Index g : generators) {
        if (g < 0 || g >= buses) {
            throw InvalidInput("GridSpec: generator bus out of range");
        }
        spec.generator[static_cast<std::size_t>(g)] = true;
    }
    spec.inertia = Vector::Constant(buses, m);
    spec.damping = Vector::Constant(buses, d);
    spec.edges = std::move(edges);
    return spec;
}

void GridSpec::validate() const {
    if (buses < 1 || generator.size() != static_cast<std::size_t>(buses) || inertia.size() != buses ||
        damping.size() != buses) {
        throw InvalidInput("GridSpec: per-bus arrays must have one entry per bus");
    }
    for (Index i = 0; i < buses; ++i) {
        if (!(damping(i) > 0.0) || !std::isfinite(damping(i))) {
            throw InvalidInput("GridSpec: damping must be positive at bus " + std::to_string(i + 1));
        }
        if (generator[static_cast<std::size_t>(i)] && (!(inertia(i) > 0.0) || !std::isfinite(inertia(i)))) {
            throw InvalidInput("GridSpec: inertia must be positive at generator bus " + std::to_string(i + 1));
        }
    }
    for (const auto& e : edges) {
        if (e.from < 0 || e.to < 0 || e.from >= buses || e.to >= buses || e.from == e.to) {
            throw InvalidInput("GridSpec: edge endpoints must be distinct buses in range");
        }
        if (!(e.h > 0.0) || !std::isfinite(e.h)) {
            throw InvalidInput("GridSpec: edge coupling must be positive");
        }
    }
}

Index GridIndexMap::omega(Index bus) const {
    if (!generator.at(static_cast<std::size_t>(bus))) {
        throw InvalidInput("GridIndexMap: load bus " + std::to_string(bus + 1) + " has no frequency state");
    }
    return offset[static_cast<std::size_t>(bus)] + 1;
}

Index GridIndexMap::bus_of(Index state) const {
    for (std::size_t b = offset.size(); b-- > 0;) {
        if (offset[b] <= state) {
            return static_cast<Index>(b);
        }
    }
    throw InvalidInput("GridIndexMap: state out of range");
}

GridModel linearize(const GridSpec& spec) {
    spec.validate();
    const Index nb = spec.buses;

    GridModel model;
    GridIndexMap& idx = model.index;
    idx.generator = spec.generator;
    for (Index b = 0; b < nb; ++b) {
        idx.offset.push_back(idx.states);
        idx.states += spec.generator[static_cast<std::size_t>(b)] ? 2 : 1;
    }
    const Index n = idx.states;

    Matrix h = Matrix::Zero(nb, nb);
    model.bus_adjacency = SupportMask::identity(nb);
    for (const auto& e : spec.edges) {
        h(e.from, e.to) += e.h;
        h(e.to, e.from) += e.h;
        model.bus_adjacency.set(e.from, e.to);
        model.bus_adjacency.set(e.to, e.from);
    }
    const Eigen::MatrixXi dist = hop_distances(model.bus_adjacency);
    if ((dist.array() < 0).any()) {
        throw InvalidInput("linearize: network is disconnected");
    }
    // A bus with no lines at all is isolated even when it is the only one.
    std::vector<bool> touched(static_cast<std::size_t>(nb), false);
    for (const auto& e : spec.edges) {
        touched[static_cast<std::size_t>(e.from)] = touched[static_cast<std::size_t>(e.to)] = true;
    }
    for (Index i = 0; i < nb; ++i) {
        if (!touched[static_cast<std::size_t>(i)]) {
            throw InvalidInput("linearize: bus " + std::to_string(i + 1) + " has no lines");
        }
    }

    Matrix a = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(n, nb);
    for (Index i = 0; i < nb; ++i) {
        const bool gen = spec.generator[static_cast<std::size_t>(i)];
        const Index row = gen ? idx.omega(i) : idx.theta(i);
        const double scale = gen ? spec.inertia(i) : spec.damping(i);
        if (gen) {
            a(idx.theta(i), idx.omega(i)) = 1.0;
            a(row, idx.omega(i)) = -spec.damping(i) / scale;
        }
        for (Index j = 0; j < nb; ++j) {
            if (h(i, j) != 0.0) {
                a(row, idx.theta(i)) -= h(i, j) / scale;
                a(row, idx.theta(j)) += h(i, j) / scale;
            }
        }
        b(row, i) = -1.0 / scale;
    }
    model.plant = {a, b, b};

    model.state_adjacency = SupportMask(n, n);
    for (Index s = 0; s < n; ++s) {
        for (Index r = 0; r < n; ++r) {
            model.state_adjacency.set(s, r, model.bus_adjacency(idx.bus_of(s), idx.bus_of(r)));
        }
    }
    model.actuator_map = SupportMask(nb, n);
    for (Index s = 0; s < n; ++s) {
        model.actuator_map.set(idx.bus_of(s), s);
    }
    return model;
}

GridSpec parse_topology(std::istream& in, const std::string& source) {
    std::vector<GridEdge> edges;
    std::vector<Index> generators;
    Index buses = 0;
    std::string line;
    std::size_t line_no = 0;
    const auto parse_bus = [&](const std::string& token) {
        std::size_t used = 0;
        long value = 0;
        try {
            value = std::stol(token, &used);
        } catch (const std::exception&) {
            throw ParseError(source, line_no, "expected a bus index, got '" + token + "'");
        }
        if (used != token.size() || value < 1) {
            throw ParseError(source, line_no, "bus indices are positive integers, got '" + token + "'");
        }
        buses = std::max<Index>(buses, value);
        return static_cast<Index>(value - 1);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream tokens(line);
        std::string first;
        if (!(tokens >> first)) {
            continue;
        }
        if (first == "G:" || first == "G") {
            std::string token;
            if (first == "G" && (!(tokens >> token) || token != ":")) {
                throw ParseError(source, line_no, "generator line must start with 'G:'");
            }
            while (tokens >> token) {
                generators.push_back(parse_bus(token));
            }
            continue;
        }
        std::string second;
        if (!(tokens >> second)) {
            throw ParseError(source, line_no, "edge line needs two bus indices");
        }
        GridEdge e{parse_bus(first), parse_bus(second), 1.0};
        std::string third;
        if (tokens >> third) {
            std::size_t used = 0;
            try {
                e.h = std::stod(third, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != third.size() || !(e.h > 0.0) || !std::isfinite(e.h)) {
                throw ParseError(source, line_no, "coupling H must be a positive number, got '" + third + "'");
            }
        }
        std::string extra;
        if (tokens >> extra) {
            throw ParseError(source, line_no, "unexpected token '" + extra + "'");
        }
        if (e.from == e.to) {
            throw ParseError(source, line_no, "self-loop on bus " + first);
        }
        edges.push_back(e);
    }
    if (buses == 0) {
        throw ParseError(source, line_no, "no buses found");
    }
    return GridSpec::uniform(buses, generators, std::move(edges));
}

GridSpec read_topology(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("read_topology: cannot open " + path);
    }
    return parse_topology(in, path);
}

std::string data_dir() {
    if (const char* env = std::getenv("SPARSEDISC_DATA_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
#ifdef SPARSEDISC_DATA_DIR
    return SPARSEDISC_DATA_DIR;
#else
    return "data";
#endif
}

GridSpec case57_topology() {
    const std::string path = data_dir() + "/case57.topo";
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("case57_topology: missing bundled data file " + path);
    }
    return parse_topology(in, path);
}

}  // namespace sparsedisc
