#include "skm/graphs.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <vector>

namespace skm {

std::vector<std::size_t> Graph::degrees() const {
    std::vector<std::size_t> d(vertex_count, 0);
    for (const auto& [i, j] : edges) {
        ++d[i];
        ++d[j];
    }
    return d;
}

bool Graph::connected() const {
    if (vertex_count == 0) return false;
    std::vector<std::vector<std::size_t>> adj(vertex_count);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<bool> seen(vertex_count, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        for (std::size_t w : adj[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++visited;
                stack.push_back(w);
            }
        }
    }
    return visited == vertex_count;
}

Graph complete_graph(std::size_t n) {
    if (n < 2) throw std::invalid_argument("complete_graph: need at least 2 vertices");
    Graph g;
    g.vertex_count = n;
    g.edges.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.edges.emplace_back(i, j);
    return g;
}

Graph barabasi_albert(std::size_t n_final, std::size_t n_initial,
                      std::size_t edges_per_step, Philox& rng) {
    if (n_initial < 2)
        throw std::invalid_argument("barabasi_albert: seed graph needs >= 2 vertices");
    if (n_final < n_initial)
        throw std::invalid_argument("barabasi_albert: n_final < n_initial");
    if (edges_per_step < 1 || edges_per_step > n_initial)
        throw std::invalid_argument("barabasi_albert: edges_per_step out of [1, n_initial]");

    Graph g = complete_graph(n_initial);
    g.vertex_count = n_final;

    // target list: each vertex appears once per unit of degree
    std::vector<std::size_t> targets;
    targets.reserve(2 * (g.edges.size() + (n_final - n_initial) * edges_per_step));
    for (const auto& [i, j] : g.edges) {
        targets.push_back(i);
        targets.push_back(j);
    }

    std::vector<std::size_t> chosen;
    for (std::size_t v = n_initial; v < n_final; ++v) {
        chosen.clear();
        while (chosen.size() < edges_per_step) {
            const std::size_t t = targets[rng.next_below(targets.size())];
            if (std::find(chosen.begin(), chosen.end(), t) == chosen.end())
                chosen.push_back(t);
        }
        for (std::size_t t : chosen) {
            g.edges.emplace_back(std::min(t, v), std::max(t, v));
            targets.push_back(t);
            targets.push_back(v);
        }
    }
    return g;
}

SparseMatrixCSR incidence_matrix(const Graph& g) {
    const std::size_t m = g.edge_count();
    std::vector<std::size_t> rp(m + 1), ci(2 * m);
    std::vector<double> vals(2 * m);
    for (std::size_t e = 0; e < m; ++e) {
        const auto& [i, j] = g.edges[e];
        if (i >= j || j >= g.vertex_count)
            throw std::invalid_argument("incidence_matrix: malformed edge");
        rp[e + 1] = 2 * (e + 1);
        ci[2 * e] = i;
        ci[2 * e + 1] = j;
        vals[2 * e] = 1.0;
        vals[2 * e + 1] = -1.0;
    }
    return SparseMatrixCSR(m, g.vertex_count, std::move(rp), std::move(ci),
                           std::move(vals));
}

void write_edge_list(const Graph& g, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("write_edge_list: cannot open " + path);
    for (const auto& [i, j] : g.edges) f << i << ' ' << j << '\n';
    if (!f) throw std::runtime_error("write_edge_list: write failed for " + path);
}

AcSystem ac_system(const Graph& g, std::vector<double> node_values) {
    if (node_values.size() != g.vertex_count)
        throw std::invalid_argument("ac_system: node values length != vertex count");
    if (!g.connected())
        throw std::invalid_argument(
            "ac_system: graph is disconnected; the consensus limit is not unique");

    double mean = 0.0;
    for (double v : node_values) mean += v;
    mean /= static_cast<double>(node_values.size());

    AcSystem out;
    std::vector<double> zero(g.edge_count(), 0.0);
    std::vector<double> ref(g.vertex_count, mean);
    out.system = make_system(Matrix(incidence_matrix(g)), std::move(zero),
                             std::move(ref), true);
    out.x0 = std::move(node_values);
    return out;
}

}  // namespace skm
