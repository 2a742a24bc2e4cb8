#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sparsedisc/discretize.hpp"
#include "sparsedisc/support_mask.hpp"

namespace sparsedisc {

// Undirected line between buses (0-based) with coupling H > 0.
struct GridEdge {
    Index from = 0;
    Index to = 0;
    double h = 1.0;
};

struct GridSpec {
    Index buses = 0;
    std::vector<bool> generator;  // per bus; the rest are loads
    Vector inertia;               // M_i, read only for generators
    Vector damping;               // D_i
    std::vector<GridEdge> edges;  // parallel lines are summed

    // Synthetic parameters M = m, D = d on every bus.
    static GridSpec uniform(Index buses, const std::vector<Index>& generators, std::vector<GridEdge> edges,
                            double m = 1.0, double d = 1.0);
    void validate() const;
};

// Generator bus -> [theta, omega]; load bus -> [theta]; states in bus order.
struct GridIndexMap {
    std::vector<Index> offset;
    std::vector<bool> generator;
    Index states = 0;

    [[nodiscard]] Index theta(Index bus) const { return offset.at(static_cast<std::size_t>(bus)); }
    // Throws InvalidInput for load buses.
    [[nodiscard]] Index omega(Index bus) const;
    [[nodiscard]] Index bus_of(Index state) const;
};

struct GridModel {
    ContinuousPlant plant;          // B1_hat = B2_hat, one column per bus
    GridIndexMap index;
    SupportMask bus_adjacency;      // buses x buses, self-loops included
    SupportMask state_adjacency;    // states adjacent iff same bus or neighboring buses
    SupportMask actuator_map;       // buses x states, actuator a owns the states of bus a
};

//   generator:  theta' = omega,  M omega' = -D omega - sum_j H_ij (theta_i - theta_j) - d_i - u_i
//   load:       D theta' = -sum_j H_ij (theta_i - theta_j) - d_i - u_i
// Throws InvalidInput on nonpositive M or D, bad edges, or a disconnected network.
[[nodiscard]] GridModel linearize(const GridSpec& spec);

// Topology text: `i j [H]` per line (1-based), `G: i1 i2 ...`, `#` comments.
// Bus count is the largest index seen. M = D = 1 on every bus.
[[nodiscard]] GridSpec parse_topology(std::istream& in, const std::string& source = "<topology>");
[[nodiscard]] GridSpec read_topology(const std::string& path);

// Bundled data directory (SPARSEDISC_DATA_DIR environment variable overrides the build-time path).
[[nodiscard]] std::string data_dir();

// IEEE 57-bus lines with generators {1, 2, 3, 6, 8, 9, 12} and M = D = H = 1.
[[nodiscard]] GridSpec case57_topology();

}  // namespace sparsedisc
