// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/box_cover.hpp>
#include <qinv/system_model.hpp>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qinv {

/// One factor of the dynamics carried by graph pieces. A forward factor maps
/// its invariant set through the first symbols of a word in time order; a
/// backward factor pulls its set back through the last symbols, starting from
/// the final one.
struct PieceFactor {
    AffineIFS maps;     // one map per symbol
    BoxCover set;       // invariant set of the maps
    Matrix to_strip;    // r x q: contribution of this factor to the strip coordinates
    bool backward = false;
};

/// Everything needed to materialize the pieces of a depth-k graph.
struct PieceModel {
    std::vector<PieceFactor> factors;  // at most one forward and one backward factor
    std::size_t num_symbols = 0;
    std::size_t zero_symbol = 0;
    int strip_rows = 1;
    int level = 8;

    /// Single forward factor with the given strip; pieces are images of H.
    static PieceModel forward(const BoxCover& H, const AffineIFS& ifs, const Strip& strip, std::size_t zero_symbol);
};

struct PieceStatus {
    StripStatus status = StripStatus::Inside;
    bool disjoint_from_open = false;
    std::size_t cells = 0;  // cells of the projected piece
};

/// Depth-k graph over words of length k+1. Vertex ids are the words read as
/// base-n numbers, first symbol most significant, so the successors of w are
/// (w mod n^k) * n + s. An edge is proper when its new symbol s is nonzero.
struct InvGraph {
    int depth_k = 0;
    std::size_t num_symbols = 0;
    std::size_t zero_symbol = 0;
    std::size_t split = 0;                 // symbols on the forward side of a word
    std::vector<std::uint32_t> piece;      // per vertex
    std::vector<PieceStatus> pieces;       // per distinct piece
    std::vector<std::uint8_t> alive;       // per vertex
    std::size_t distinct_forward = 0;
    std::size_t distinct_backward = 0;

    std::size_t num_vertices() const { return piece.size(); }
    std::vector<std::size_t> word(std::size_t v) const;
    std::size_t vertex_of(const std::vector<std::size_t>& word) const;
    const PieceStatus& status(std::size_t v) const { return pieces[piece[v]]; }
    /// Successors of v among alive vertices.
    template <typename F>
    void for_each_successor(std::size_t v, F&& fn) const {
        const std::size_t base = (v % block()) * num_symbols;
        for (std::size_t s = 0; s < num_symbols; ++s)
            if (alive[base + s]) fn(base + s, s != zero_symbol);
    }
    std::size_t block() const;  // n^k
    std::size_t alive_count() const;
};

/// Builds all vertices and classifies every piece against the strip.
/// Throws BudgetExceeded above vertex_budget vertices.
InvGraph build_graph(const PieceModel& model, int k, std::size_t vertex_budget = 1000000);

/// Spec-style entry: pieces are images of the forward-invariant cover H.
InvGraph build_graph(const BoxCover& H, const AffineIFS& ifs, int k, const Strip& strip, std::size_t zero_symbol,
                     std::size_t vertex_budget = 1000000);

struct PruneResult {
    InvGraph graph;
    bool boundary_seen = false;  // some surviving-candidate piece met the strip boundary
    bool inconclusive = false;   // strict mode and boundary_seen
};

/// Keeps vertices whose piece lies inside the open strip. Boundary pieces are
/// dropped; with strict set they make the result inconclusive.
PruneResult prune_internal(const InvGraph& g, bool strict = false);

/// Keeps vertices whose piece may meet the open strip.
InvGraph prune_outside(const InvGraph& g);

/// Bi-infinite input pattern: left cycle repeated forever in the past, then
/// the middle word, then the right cycle forever. An empty cycle stands for
/// the zero symbol.
struct PathWitness {
    std::vector<std::size_t> left_cycle;
    std::vector<std::size_t> middle;
    std::vector<std::size_t> right_cycle;
    std::size_t proper_position = 0;  // index into middle of a nonzero symbol
    // States z(t), t in [check_begin, check_end], of the flattened sequence
    // (z(t) precedes symbol t) belong to path vertices and must stay in the strip.
    std::size_t check_begin = 0;
    std::size_t check_end = 0;

    std::vector<std::size_t> flattened() const;
};

struct LongPathResult {
    bool found = false;
    std::optional<PathWitness> witness;
    std::size_t proper_edges = 0;
};

/// True when some proper edge (u, w) has u reachable from a cycle or w
/// reaching a cycle, so walks through it are unbounded.
LongPathResult has_arbitrarily_long_proper_paths(const InvGraph& g);

/// Steps needed after a proper edge as a function of the strip history of
/// its source. Valid only when no long proper paths exist.
struct StepsProfile {
    std::vector<int> steps;  // steps[l] = 1 + max post length over proper edges with source history >= l
    int best_steps = 1;
    int best_waiting = 0;
};

StepsProfile steps_profile(const InvGraph& g);

/// Smallest k <= k_max at which every piece meeting the open strip lies inside
/// it. Throws NotSeparated when H touches the strip boundary and KMaxExceeded.
int stopping_k(const PieceModel& model, int k_max, std::size_t vertex_budget = 1000000);

/// Edge list: "v <id> <word> <status>" and "e <from> <to> <proper>" lines.
void write_edge_list(std::ostream& os, const InvGraph& g);

}  // namespace qinv
