#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "skm/linear_system.hpp"
#include "skm/rng.hpp"

namespace skm {

/// Undirected simple graph: edges (i, j) with i < j, unique, no self-loops.
struct Graph {
    std::size_t vertex_count = 0;
    std::vector<std::pair<std::size_t, std::size_t>> edges;

    std::size_t edge_count() const { return edges.size(); }
    std::vector<std::size_t> degrees() const;
    bool connected() const;
};

Graph complete_graph(std::size_t n);

/// Preferential attachment starting from a complete graph on n_initial
/// vertices; each newcomer attaches edges_per_step distinct edges with
/// probability proportional to current degree.
Graph barabasi_albert(std::size_t n_final, std::size_t n_initial,
                      std::size_t edges_per_step, Philox& rng);

/// |E| x |V| matrix with +1 at the lower vertex index and -1 at the higher.
SparseMatrixCSR incidence_matrix(const Graph& g);

/// One "i j" pair per line, 0-based.
void write_edge_list(const Graph& g, const std::string& path);

struct AcSystem {
    LinearSystem system;       // Q x = 0, x_ref = mean(node_values) * ones
    std::vector<double> x0;    // the initial node values
};

/// Average-consensus system on a connected graph.
AcSystem ac_system(const Graph& g, std::vector<double> node_values);

}  // namespace skm
