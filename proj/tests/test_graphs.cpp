#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <vector>

#include "skm/graphs.hpp"
#include "skm/linear_system.hpp"

using namespace skm;

TEST_CASE("complete graphs") {
    const Graph k3 = complete_graph(3);
    CHECK(k3.edges == std::vector<std::pair<std::size_t, std::size_t>>{
                          {0, 1}, {0, 2}, {1, 2}});
    CHECK(complete_graph(100).edge_count() == 4950);
    CHECK(complete_graph(300).edge_count() == 44850);
    CHECK(complete_graph(2).edge_count() == 1);
    CHECK_THROWS(complete_graph(1));
}

TEST_CASE("preferential attachment: counts, validity, determinism") {
    Philox rng(7);
    const Graph k5 = barabasi_albert(5, 5, 5, rng);
    CHECK(k5.edge_count() == 10);  // no growth steps: the seed clique

    Philox rng2(7);
    const Graph g = barabasi_albert(300, 5, 5, rng2);
    CHECK(g.vertex_count == 300);
    CHECK(g.edge_count() == 10 + 295 * 5);
    CHECK(g.connected());

    // edges unique, i < j
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : g.edges) {
        CHECK(e.first < e.second);
        CHECK(e.second < g.vertex_count);
        CHECK(seen.insert(e).second);
    }

    Philox rng3(7);
    const Graph same = barabasi_albert(300, 5, 5, rng3);
    CHECK(same.edges == g.edges);
    Philox rng4(8);
    const Graph other = barabasi_albert(300, 5, 5, rng4);
    CHECK(other.edges != g.edges);

    Philox bad(1);
    CHECK_THROWS(barabasi_albert(10, 1, 1, bad));
    CHECK_THROWS(barabasi_albert(4, 5, 1, bad));
    CHECK_THROWS(barabasi_albert(10, 5, 6, bad));
}

TEST_CASE("scale-free degree distribution is heavy tailed") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Philox rng(1000 + seed);
        const Graph g = barabasi_albert(300, 5, 5, rng);
        auto deg = g.degrees();
        std::sort(deg.begin(), deg.end());
        const std::size_t median = deg[deg.size() / 2];
        const std::size_t max = deg.back();
        CHECK(max >= 5 * median);
    }
}

TEST_CASE("incidence matrix layout") {
    Graph single;
    single.vertex_count = 2;
    single.edges = {{0, 1}};
    const auto q1 = incidence_matrix(single);
    CHECK(q1.rows == 1);
    CHECK(q1.cols == 2);
    CHECK(q1.values == std::vector<double>{1.0, -1.0});

    const auto q3 = incidence_matrix(complete_graph(3));
    CHECK(q3.rows == 3);
    CHECK(q3.cols == 3);
    Matrix m(q3);
    // rows (1,-1,0), (1,0,-1), (0,1,-1)
    const std::vector<double> e0{1.0, 0.0, 0.0}, e1{0.0, 1.0, 0.0},
        e2{0.0, 0.0, 1.0};
    CHECK(m.row_dot(0, e0) == 1.0);
    CHECK(m.row_dot(0, e1) == -1.0);
    CHECK(m.row_dot(2, e1) == 1.0);
    CHECK(m.row_dot(2, e2) == -1.0);

    const auto q100 = incidence_matrix(complete_graph(100));
    CHECK(q100.rows == 4950);
    CHECK(q100.cols == 100);

    // every row norm squared is 2, rows sum to zero, Q 1 = 0
    const auto norms = row_norms_sq(Matrix(q100));
    for (double v : norms) CHECK(v == 2.0);
    const std::vector<double> ones(100, 1.0);
    std::vector<double> out(4950);
    Matrix(q100).apply(ones, out);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("consensus systems") {
    SUBCASE("already-converged values") {
        auto ac = ac_system(complete_graph(3), {1.0, 1.0, 1.0});
        CHECK(ac.system.x_ref == std::vector<double>{1.0, 1.0, 1.0});
        CHECK(ac.x0 == std::vector<double>{1.0, 1.0, 1.0});
    }
    SUBCASE("mean of two endpoint values") {
        Graph edge;
        edge.vertex_count = 2;
        edge.edges = {{0, 1}};
        auto ac = ac_system(edge, {0.0, 2.0});
        CHECK(ac.system.x_ref == std::vector<double>{1.0, 1.0});
    }
    SUBCASE("fixed point of the consensus system is the mean") {
        Philox rng(11);
        std::vector<double> values(100);
        for (auto& v : values) v = rng.next_gaussian();
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= 100.0;
        auto ac = ac_system(complete_graph(100), values);
        const auto fp = fixed_point(ac.system, ac.x0);
        for (double v : fp) CHECK(v == doctest::Approx(mean).epsilon(1e-10));
    }
    SUBCASE("disconnected graphs are rejected") {
        Graph two;
        two.vertex_count = 4;
        two.edges = {{0, 1}, {2, 3}};
        CHECK_THROWS_WITH(ac_system(two, {1.0, 2.0, 3.0, 4.0}),
                          doctest::Contains("disconnected"));
    }
    SUBCASE("value count must match") {
        CHECK_THROWS(ac_system(complete_graph(3), {1.0, 2.0}));
    }
}

TEST_CASE("edge list export") {
    const Graph g = complete_graph(3);
    const std::string path = "k3_edges.txt";
    write_edge_list(g, path);
    std::ifstream f(path);
    std::string line;
    std::getline(f, line);
    CHECK(line == "0 1");
    std::getline(f, line);
    CHECK(line == "0 2");
    std::getline(f, line);
    CHECK(line == "1 2");
}
