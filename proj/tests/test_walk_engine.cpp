#include <catch2/catch.hpp>

#include "mandate/autodiff.hpp"
#include "mandate/synth.hpp"
#include "mandate/walk.hpp"
#include "test_util.hpp"

using namespace mandate;

namespace {

std::vector<NodeId> all_nodes(std::size_t n) {
    std::vector<NodeId> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<NodeId>(i);
    return v;
}

}  // namespace

TEST_CASE("walk operator on K2 flips probability mass") {
    const auto w = walk_operator(csr_from_edges(2, {{0, 1}}));
    const Tensor d = walk_dense(w);
    CHECK(d.at(0, 0) == 0.0);
    CHECK(d.at(0, 1) == 1.0);
    CHECK(d.at(1, 0) == 1.0);
    CHECK(d.at(1, 1) == 0.0);
    CHECK(w.self_loop_repaired.empty());
}

TEST_CASE("walk operator on P3 splits the middle row") {
    const auto w = walk_operator(csr_from_edges(3, {{0, 1}, {1, 2}}));
    const Tensor d = walk_dense(w);
    CHECK(d.at(1, 0) == 0.5);
    CHECK(d.at(1, 1) == 0.0);
    CHECK(d.at(1, 2) == 0.5);
}

TEST_CASE("isolated nodes get a repairing self loop") {
    const auto w = walk_operator(csr_from_edges(3, {{0, 1}}));
    REQUIRE(w.self_loop_repaired == std::vector<NodeId>{2});
    const Tensor d = walk_dense(w);
    CHECK(d.at(2, 2) == 1.0);
    CHECK(d.at(2, 0) == 0.0);
    CHECK(d.at(2, 1) == 0.0);
}

TEST_CASE("walk operator rejects non-square input") {
    CsrMatrix m;
    m.rows = 2;
    m.cols = 3;
    m.row_ptr = {0, 0, 0};
    CHECK_THROWS_AS(walk_operator(m), UsageError);
}

TEST_CASE("walk operator rows sum to one") {
    const auto edges = testutil::random_edges(60, 0.08, 123);
    const auto w = walk_operator(csr_from_edges(60, edges));
    const Tensor d = walk_dense(w);
    for (std::size_t i = 0; i < 60; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 60; ++j) {
            s += d.at(i, j);
            CHECK(d.at(i, j) >= 0.0);
        }
        CHECK(std::abs(s - 1.0) <= 1e-9);
    }
}

TEST_CASE("pe_rows matches hand-computed powers on P3 and K2") {
    const auto w3 = walk_operator(csr_from_edges(3, {{0, 1}, {1, 2}}));
    const std::vector<NodeId> src = {0};
    const auto anchors = all_nodes(3);
    const PeTable pe = pe_rows(w3, src, 2, anchors);
    CHECK(pe.hops[0].at(0, 0) == 0.0);
    CHECK(pe.hops[0].at(0, 1) == 1.0);
    CHECK(pe.hops[0].at(0, 2) == 0.0);
    CHECK(pe.hops[1].at(0, 0) == 0.5);
    CHECK(pe.hops[1].at(0, 1) == 0.0);
    CHECK(pe.hops[1].at(0, 2) == 0.5);

    const auto w2 = walk_operator(csr_from_edges(2, {{0, 1}}));
    const PeTable pe2 = pe_rows(w2, src, 2, all_nodes(2));
    CHECK(pe2.hops[1].at(0, 0) == 1.0);  // W^2 = I on K2
    CHECK(pe2.hops[1].at(0, 1) == 0.0);
}

TEST_CASE("hop one of pe_rows is the operator row itself") {
    const auto edges = testutil::random_edges(40, 0.1, 77);
    const auto w = walk_operator(csr_from_edges(40, edges));
    const auto nodes = all_nodes(40);
    const PeTable pe = pe_rows(w, nodes, 1, nodes);
    const Tensor d = walk_dense(w);
    for (std::size_t i = 0; i < 40; ++i)
        for (std::size_t j = 0; j < 40; ++j)
            CHECK(pe.hops[0].at(i, j) == Approx(d.at(i, j)).margin(1e-15));
}

TEST_CASE("pe_rows rejects degenerate arguments") {
    const auto w = walk_operator(csr_from_edges(3, {{0, 1}, {1, 2}}));
    const auto nodes = all_nodes(3);
    CHECK_THROWS_AS(pe_rows(w, nodes, 0, nodes), UsageError);
    CHECK_THROWS_AS(pe_rows(w, nodes, 2, std::vector<NodeId>{}), UsageError);
    CHECK_THROWS_AS(pe_rows(w, std::vector<NodeId>{9}, 2, nodes), UsageError);
}

TEST_CASE("full-anchor pe rows stay stochastic across hops") {
    const auto edges = testutil::random_edges(80, 0.06, 321);
    const auto w = walk_operator(csr_from_edges(80, edges));
    const auto nodes = all_nodes(80);
    const PeTable pe = pe_rows(w, nodes, 4, nodes);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t s = 0; s < 80; ++s) {
            double sum = 0.0;
            for (std::size_t a = 0; a < 80; ++a) {
                const double v = pe.hops[k].at(s, a);
                CHECK(v >= 0.0);
                CHECK(v <= 1.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
}

TEST_CASE("sparse iterated products agree with dense powers") {
    const auto edges = testutil::random_edges(50, 0.1, 999);
    const auto w = walk_operator(csr_from_edges(50, edges));
    const auto nodes = all_nodes(50);
    const PeTable pe = pe_rows(w, nodes, 4, nodes);
    const Tensor d = walk_dense(w);
    for (std::size_t k = 1; k <= 4; ++k) {
        const Tensor ref = testutil::dense_power(d, k);
        for (std::size_t i = 0; i < 50; ++i)
            for (std::size_t j = 0; j < 50; ++j)
                CHECK(std::abs(pe.hops[k - 1].at(i, j) - ref.at(i, j)) <= 1e-12);
    }
}

TEST_CASE("combine_scales selects, zeroes, and weights hops") {
    const auto w = walk_operator(csr_from_edges(2, {{0, 1}}));
    const auto nodes = all_nodes(2);
    const PeTable pe = pe_rows(w, nodes, 2, nodes);

    SECTION("theta = (1,0) selects hop one") {
        const Tensor out = combine_scales(pe, std::vector<double>{1.0, 0.0});
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j)
                CHECK(out.at(i, j) == pe.hops[0].at(i, j));
    }
    SECTION("all-zero theta gives the zero matrix") {
        const Tensor out = combine_scales(pe, std::vector<double>{0.0, 0.0});
        for (double v : out.data) CHECK(v == 0.0);
    }
    SECTION("frozen PPR weights on K2, alpha = 0.5") {
        const Tensor out = combine_scales(pe, frozen_ppr_theta(0.5, 2));
        CHECK(out.at(0, 0) == Approx(0.125).margin(1e-15));
        CHECK(out.at(0, 1) == Approx(0.25).margin(1e-15));
    }
    SECTION("length mismatch is rejected") {
        CHECK_THROWS_AS(combine_scales(pe, std::vector<double>{1.0}), UsageError);
    }
}

TEST_CASE("the recorded scale-mix path matches the plain combination") {
    const auto w = walk_operator(csr_from_edges(6, testutil::random_edges(6, 0.5, 61)));
    const auto nodes = all_nodes(6);
    const PeTable pe = pe_rows(w, nodes, 3, nodes);
    const std::vector<double> theta = {0.7, -0.2, 0.05};
    const Tensor plain = combine_scales(pe, theta);

    Tape t;
    Var theta_v = t.leaf(Tensor::vec(theta));
    Var acc;
    for (std::size_t k = 0; k < 3; ++k) {
        Var term = scale(t.constant(pe.hops[k]), entry(theta_v, k));
        acc = acc.valid() ? add(acc, term) : term;
    }
    for (std::size_t i = 0; i < plain.numel(); ++i)
        CHECK(std::abs(t.value(acc).data[i] - plain.data[i]) <= 1e-15);
}

TEST_CASE("spd oracle on P3 and disconnected graphs") {
    MultiRelGraph g;
    g.num_nodes = 5;
    g.feature_dim = 1;
    g.features = Tensor({5, 1});
    g.labels.assign(5, 0);
    g.relation_names = {"r"};
    g.adjacencies = {csr_from_edges(5, {{0, 1}, {1, 2}, {3, 4}})};
    const auto dist = spd_reference(g, 0);
    CHECK(dist[0 * 5 + 2] == 2);
    CHECK(dist[0 * 5 + 0] == 0);
    CHECK(dist[1 * 5 + 1] == 0);
    CHECK(dist[0 * 5 + 3] == kUnreachable);
    CHECK(dist[4 * 5 + 1] == kUnreachable);
}

TEST_CASE("ppr_reference basics and errors") {
    const auto w = walk_operator(csr_from_edges(2, {{0, 1}}));
    SECTION("K = 1 is alpha (1-alpha) W") {
        const Tensor p = ppr_reference(w, 0.3, 1);
        const Tensor d = walk_dense(w);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(p.data[i] == Approx(0.3 * 0.7 * d.data[i]).margin(1e-15));
    }
    SECTION("cross-checks combine_scales on K2") {
        const auto nodes = all_nodes(2);
        const Tensor via_pe =
            combine_scales(pe_rows(w, nodes, 2, nodes), frozen_ppr_theta(0.5, 2));
        const Tensor via_dense = ppr_reference(w, 0.5, 2);
        for (std::size_t i = 0; i < 4; ++i)
            CHECK(std::abs(via_pe.data[i] - via_dense.data[i]) <= 1e-15);
    }
    SECTION("alpha outside (0,1) is rejected") {
        CHECK_THROWS_AS(ppr_reference(w, 0.0, 2), UsageError);
        CHECK_THROWS_AS(ppr_reference(w, 1.0, 2), UsageError);
        CHECK_THROWS_AS(frozen_ppr_theta(-0.1, 2), UsageError);
    }
}

TEST_CASE("ppr equivalence holds on random graphs") {
    for (std::uint64_t seed : {11ull, 22ull, 33ull}) {
        const std::size_t n = 40 + 20 * static_cast<std::size_t>(seed % 3);
        const auto w = walk_operator(csr_from_edges(n, testutil::random_edges(n, 0.07, seed)));
        const auto nodes = all_nodes(n);
        const PeTable pe = pe_rows(w, nodes, 4, nodes);
        for (double alpha : {0.15, 0.5}) {
            const Tensor a = combine_scales(pe, frozen_ppr_theta(alpha, 4));
            const Tensor b = ppr_reference(w, alpha, 4);
            for (std::size_t i = 0; i < a.numel(); ++i)
                CHECK(std::abs(a.data[i] - b.data[i]) <= 1e-10);
        }
    }
}

TEST_CASE("shortest paths are recovered by the first positive hop") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        const std::size_t n = 30 + 15 * static_cast<std::size_t>(seed);
        MultiRelGraph g;
        g.num_nodes = n;
        g.feature_dim = 1;
        g.features = Tensor({n, 1});
        g.labels.assign(n, 0);
        g.relation_names = {"r"};
        g.adjacencies = {csr_from_edges(n, testutil::random_edges(n, 2.5 / n, seed))};

        const auto dist = spd_reference(g, 0);
        const auto w = walk_operator(g.adjacencies[0]);
        const auto nodes = all_nodes(n);
        const std::size_t K = 4;
        const PeTable pe = pe_rows(w, nodes, K, nodes);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const int d = dist[i * n + j];
                if (d != kUnreachable && d <= static_cast<int>(K)) {
                    for (int k = 1; k < d; ++k)
                        REQUIRE(pe.hops[k - 1].at(i, j) == 0.0);
                    REQUIRE(pe.hops[d - 1].at(i, j) > 0.0);
                } else {
                    for (std::size_t k = 1; k <= K; ++k)
                        REQUIRE(pe.hops[k - 1].at(i, j) == 0.0);
                }
            }
    }
}

TEST_CASE("pe_rows is exactly equivariant under node relabeling") {
    const std::size_t n = 48;
    const auto edges = testutil::random_edges(n, 0.09, 2024);
    const auto w = walk_operator(csr_from_edges(n, edges));
    const auto nodes = all_nodes(n);
    const PeTable pe = pe_rows(w, nodes, 3, nodes);

    // random permutation pi
    std::vector<NodeId> pi(nodes);
    Rng rng(5150);
    rng.shuffle(pi);

    std::vector<Edge> relabeled;
    for (const Edge& e : edges) relabeled.emplace_back(pi[e.first], pi[e.second]);
    const auto w2 = walk_operator(csr_from_edges(n, relabeled));
    // sources and anchors permuted accordingly: position s now asks node pi[s]
    const PeTable pe2 = pe_rows(w2, pi, 3, pi);

    for (std::size_t k = 0; k < 3; ++k)
        for (std::size_t s = 0; s < n; ++s)
            for (std::size_t a = 0; a < n; ++a)
                REQUIRE(pe2.hops[k].at(s, a) == pe.hops[k].at(s, a));
}

TEST_CASE("pe cache round trip and staleness") {
    const auto w = walk_operator(csr_from_edges(6, testutil::random_edges(6, 0.5, 8)));
    const auto nodes = all_nodes(6);
    const PeTable pe = pe_rows(w, nodes, 2, nodes);
    const std::string dir = testutil::scratch_dir("pecache");
    const std::string path = dir + "/pe_rel_0.bin";
    save_pe_cache(pe, 0xabcdef, path);

    const PeTable back = load_pe_cache(path, 0xabcdef);
    CHECK(back.k_hops == pe.k_hops);
    CHECK(back.sources == pe.sources);
    CHECK(back.anchors == pe.anchors);
    for (std::size_t k = 0; k < pe.k_hops; ++k)
        CHECK(back.hops[k].data == pe.hops[k].data);

    CHECK_THROWS_AS(load_pe_cache(path, 0x123456), DataError);
    CHECK_THROWS_AS(load_pe_cache(dir + "/nope.bin", 0xabcdef), DataError);

    std::ofstream(dir + "/garbage.bin", std::ios::binary) << "not a cache at all";
    CHECK_THROWS_AS(load_pe_cache(dir + "/garbage.bin", 0xabcdef), DataError);
}

TEST_CASE("truncating a PE table keeps the leading hops") {
    const auto w = walk_operator(csr_from_edges(5, testutil::random_edges(5, 0.6, 4)));
    const auto nodes = all_nodes(5);
    const PeTable pe = pe_rows(w, nodes, 3, nodes);
    const PeTable t = pe.truncated(2);
    CHECK(t.k_hops == 2);
    CHECK(t.hops[0].data == pe.hops[0].data);
    CHECK(t.hops[1].data == pe.hops[1].data);
    CHECK_THROWS_AS(pe.truncated(0), UsageError);
    CHECK_THROWS_AS(pe.truncated(9), UsageError);
}
