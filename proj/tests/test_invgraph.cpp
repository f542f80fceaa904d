#include <doctest.h>

#include <qinv/analyzer.hpp>
#include <qinv/attractor.hpp>
#include <qinv/errors.hpp>
#include <qinv/invgraph.hpp>

#include <cmath>
#include <sstream>

using namespace qinv;

namespace {

AffineIFS scalar_ifs(double a, std::initializer_list<double> cs) {
    AffineIFS f;
    for (double c : cs) f.maps.push_back({Matrix::Constant(1, 1, a), Vector::Constant(1, c)});
    return f;
}

std::size_t edge_count(const InvGraph& g) {
    std::size_t n = 0;
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
        if (g.alive[v]) g.for_each_successor(v, [&](std::size_t, bool) { ++n; });
    return n;
}

struct Fixture {
    AffineIFS f = scalar_ifs(0.5, {-1, 0, 1});
    AttractorApprox H = compute_attractor(f, 8);
    Strip strip = Strip::coordinate(1, 1);
};

}  // namespace

TEST_CASE("de Bruijn structure") {
    const Fixture fx;
    const InvGraph g0 = build_graph(fx.H.cover, fx.f, 0, fx.strip, 1);
    CHECK(g0.num_vertices() == 3);
    CHECK(edge_count(g0) == 9);
    const InvGraph g1 = build_graph(fx.H.cover, fx.f, 1, fx.strip, 1);
    CHECK(g1.num_vertices() == 9);
    for (std::size_t v = 0; v < 9; ++v) {
        std::size_t out = 0;
        g1.for_each_successor(v, [&](std::size_t, bool) { ++out; });
        CHECK(out == 3);
    }
}

TEST_CASE("shift edges follow word overlap") {
    const Fixture fx;
    const InvGraph g = build_graph(fx.H.cover, fx.f, 3, fx.strip, 1);
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        CHECK(g.vertex_of(g.word(v)) == v);
        std::vector<bool> succ(g.num_vertices(), false);
        g.for_each_successor(v, [&](std::size_t w, bool proper) {
            succ[w] = true;
            CHECK(proper == (g.word(w).back() != g.zero_symbol));
        });
        const auto wv = g.word(v);
        for (std::size_t w = 0; w < g.num_vertices(); ++w) {
            const auto ww = g.word(w);
            const bool overlap = std::equal(wv.begin() + 1, wv.end(), ww.begin());
            CHECK(succ[w] == overlap);
        }
    }
}

TEST_CASE("vertex budget") {
    const Fixture fx;
    CHECK_THROWS_AS(build_graph(fx.H.cover, fx.f, 6, fx.strip, 1, 100), BudgetExceeded);
}

TEST_CASE("long proper paths") {
    const Fixture fx;
    // Full shift over {-1,0,1}: every cycle survives.
    InvGraph g = build_graph(fx.H.cover, fx.f, 0, fx.strip, 1);
    for (auto& a : g.alive) a = 1;
    const LongPathResult all = has_arbitrarily_long_proper_paths(g);
    CHECK(all.found);
    REQUIRE(all.witness);
    const auto word = all.witness->flattened();
    CHECK(word[all.witness->proper_position + all.witness->left_cycle.size()] != g.zero_symbol);

    // Only the zero vertex: its self loop is not proper.
    for (std::size_t v = 0; v < g.num_vertices(); ++v) g.alive[v] = g.word(v).back() == g.zero_symbol;
    CHECK_FALSE(has_arbitrarily_long_proper_paths(g).found);
}

TEST_CASE("halving system with unit translates has the alternating witness") {
    // Depth-2 pieces of the alternating word reach +-1 exactly; depth 3 clears them.
    const Fixture fx;
    const InvGraph g = build_graph(fx.H.cover, fx.f, 3, fx.strip, 1);
    const PruneResult in = prune_internal(g);
    const LongPathResult r = has_arbitrarily_long_proper_paths(in.graph);
    REQUIRE(r.found);
    REQUIRE(r.witness);

    // Alphabet {0,1} has exactly the difference symbols {-1,0,1} of the graph.
    const QuantizedSystem sys = make_system(Matrix::Constant(1, 1, 0.5), Matrix::Ones(1, 1),
                                            {Vector::Constant(1, 0), Vector::Constant(1, 1)}, 1);
    const OrbitReplay rep = replay_witness(split_dynamics(sys), *r.witness);
    CHECK(rep.ok);
    for (const auto& z : rep.states) CHECK(std::abs(z(0)) <= 1.0 + 1e-9);
}

TEST_CASE("pruning") {
    const Fixture fx;
    const InvGraph g = build_graph(fx.H.cover, fx.f, 1, fx.strip, 1);
    const PruneResult in = prune_internal(g);
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
        if (in.graph.alive[v]) CHECK(g.status(v).status == StripStatus::Inside);
    const InvGraph out = prune_outside(g);
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
        CHECK(bool(out.alive[v]) == !g.status(v).disjoint_from_open);

    // Everything inside: nothing is removed.
    const AffineIFS small = scalar_ifs(0.25, {-0.25, 0, 0.25});
    const AttractorApprox Hs = compute_attractor(small, 8);
    const InvGraph gs = build_graph(Hs.cover, small, 1, fx.strip, 1);
    CHECK(prune_internal(gs).graph.alive_count() == gs.num_vertices());

    // Far translates: even the zero piece [-3,3] leaves the strip.
    const AffineIFS far = scalar_ifs(0.5, {-3, 0, 3});
    const AttractorApprox Hf = compute_attractor(far, 8);
    const InvGraph gf = build_graph(Hf.cover, far, 0, fx.strip, 1);
    const InvGraph kept = prune_internal(gf).graph;
    CHECK(kept.alive_count() == 0);
    CHECK_FALSE(has_arbitrarily_long_proper_paths(kept).found);
}

TEST_CASE("strict boundary mode") {
    // Attractor [-2,2] touches the strip boundary at +-1 through pieces.
    const Fixture fx;
    const InvGraph g = build_graph(fx.H.cover, fx.f, 0, fx.strip, 1);
    const PruneResult loose = prune_internal(g, false);
    const PruneResult strict = prune_internal(g, true);
    CHECK(loose.boundary_seen);
    CHECK_FALSE(loose.inconclusive);
    CHECK(strict.inconclusive);
}

TEST_CASE("pieces shrink with depth") {
    // H_w lies inside the piece of its suffix, so a suffix inside the strip
    // keeps the longer word inside and a word meeting the strip has a suffix
    // meeting it too.
    const Fixture fx;
    const InvGraph g1 = build_graph(fx.H.cover, fx.f, 1, fx.strip, 1);
    const InvGraph g2 = build_graph(fx.H.cover, fx.f, 2, fx.strip, 1);
    const InvGraph in1 = prune_internal(g1).graph, in2 = prune_internal(g2).graph;
    const InvGraph out1 = prune_outside(g1), out2 = prune_outside(g2);
    for (std::size_t v = 0; v < g2.num_vertices(); ++v) {
        auto w = g2.word(v);
        w.erase(w.begin());
        const std::size_t s = g1.vertex_of(w);
        if (in1.alive[s]) CHECK(in2.alive[v]);
        if (out2.alive[v]) CHECK(out1.alive[s]);
    }
}

TEST_CASE("stopping depth") {
    const AffineIFS small = scalar_ifs(0.25, {-0.25, 0, 0.25});
    const AttractorApprox Hs = compute_attractor(small, 8);
    const PieceModel ms = PieceModel::forward(Hs.cover, small, Strip::coordinate(1, 1), 1);
    CHECK(stopping_k(ms, 4) == 0);

    // Cantor set with translate t = 10/9: the point 1 = 0.9 t sits in a gap of
    // the second generation, so depth-0 pieces straddle it and depth-1 pieces do not.
    const AffineIFS f = scalar_ifs(0.2, {-10.0 / 9.0, 0, 10.0 / 9.0});
    const AttractorApprox H = compute_attractor(f, 10);
    const PieceModel m = PieceModel::forward(H.cover, f, Strip::coordinate(1, 1), 1);
    CHECK(stopping_k(m, 8) == 1);
    CHECK_THROWS_AS(stopping_k(m, 0), KMaxExceeded);

    const Fixture fx;
    const PieceModel mt = PieceModel::forward(fx.H.cover, fx.f, fx.strip, 1);
    CHECK_THROWS_AS(stopping_k(mt, 3), NotSeparated);
}

TEST_CASE("steps profile after separation") {
    const AffineIFS far = scalar_ifs(0.5, {-3, 0, 3});
    const AttractorApprox Hf = compute_attractor(far, 8);
    // At depth 1 the piece of (-3, +3) is [0, 3], which meets the strip; the
    // alternating orbit +-2 is only excluded at depth 3.
    const InvGraph g1 = build_graph(Hf.cover, far, 1, Strip::coordinate(1, 1), 1);
    CHECK(has_arbitrarily_long_proper_paths(prune_outside(g1)).found);
    const InvGraph g = build_graph(Hf.cover, far, 3, Strip::coordinate(1, 1), 1);
    const InvGraph maybe = prune_outside(g);
    REQUIRE_FALSE(has_arbitrarily_long_proper_paths(maybe).found);
    const StepsProfile prof = steps_profile(maybe);
    CHECK(prof.best_steps == 1);
}

TEST_CASE("edge list format") {
    const Fixture fx;
    const InvGraph g = build_graph(fx.H.cover, fx.f, 0, fx.strip, 1);
    std::ostringstream os;
    write_edge_list(os, g);
    std::istringstream is(os.str());
    std::string line;
    std::size_t v = 0, e = 0;
    while (std::getline(is, line)) {
        if (line.rfind("v ", 0) == 0) ++v;
        if (line.rfind("e ", 0) == 0) ++e;
    }
    CHECK(v == 3);
    CHECK(e == 9);
}
