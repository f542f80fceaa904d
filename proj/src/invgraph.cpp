// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/invgraph.hpp>

#include <qinv/errors.hpp>

#include <algorithm>
#include <deque>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace qinv {

namespace {

std::size_t ipow(std::size_t b, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
}

double dpow(std::size_t b, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= static_cast<double>(b);
    return r;
}

struct IndexHash {
    std::size_t operator()(const std::vector<std::uint32_t>& v) const noexcept {
        std::uint64_t h = 14695981039346656037ULL ^ v.size();
        for (auto x : v) {
            h ^= x;
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

using IndexSet = std::vector<std::uint32_t>;  // sorted indices into the cells of a factor set

// Images and projections of single cells of a factor set, computed on first use.
class CellImages {
public:
    explicit CellImages(const PieceFactor& f)
        : f_(f), n_(f.maps.size()), images_(n_ * f.set.size()), done_(n_ * f.set.size(), 0) {}

    // Cells of the set touching the image of cell i under map s.
    const IndexSet& image(std::uint32_t i, std::size_t s) {
        const std::size_t key = static_cast<std::size_t>(i) * n_ + s;
        if (!done_[key]) {
            IndexSet& out = images_[key];
            const AffineMap& m = f_.maps.maps[s];
            for_each_touching_cell(affine_image(m.M, m.c, f_.set.cell_box(f_.set.cells[i])), f_.set.level,
                                   [&](const Cell& x) {
                                       const std::ptrdiff_t j = f_.set.find(x);
                                       if (j >= 0) out.push_back(static_cast<std::uint32_t>(j));
                                   });
            std::sort(out.begin(), out.end());
            done_[key] = 1;
        }
        return images_[key];
    }

    const PieceFactor& factor() const { return f_; }

private:
    const PieceFactor& f_;
    std::size_t n_;
    std::vector<IndexSet> images_;
    std::vector<std::uint8_t> done_;
};

// Distinct pieces with an index from words to piece ids.
struct PieceTable {
    std::vector<IndexSet> pieces;
    std::vector<std::uint32_t> of_word;
    std::unordered_map<IndexSet, std::uint32_t, IndexHash> ids;

    std::uint32_t intern(IndexSet&& c) {
        auto it = ids.find(c);
        if (it != ids.end()) return it->second;
        const auto id = static_cast<std::uint32_t>(pieces.size());
        ids.emplace(c, id);
        pieces.push_back(std::move(c));
        return id;
    }
};

IndexSet image_in_set(const IndexSet& piece, std::size_t s, CellImages& cache) {
    IndexSet out;
    for (auto i : piece) {
        const IndexSet& img = cache.image(i, s);
        out.insert(out.end(), img.begin(), img.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Pieces for all words of the given length over one factor. Forward factors
// index words first symbol most significant and apply symbols in order;
// backward factors apply the last symbol first.
PieceTable factor_pieces(CellImages& cache, std::size_t n, int length) {
    const PieceFactor& f = cache.factor();
    PieceTable cur;
    IndexSet all(f.set.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::uint32_t>(i);
    cur.intern(std::move(all));
    cur.of_word = {0};
    for (int j = 1; j <= length; ++j) {
        PieceTable next;
        const std::size_t prev_words = cur.of_word.size();
        next.of_word.assign(prev_words * n, 0);
        // Image cache per (previous piece, symbol).
        std::map<std::pair<std::uint32_t, std::size_t>, std::uint32_t> seen;
        for (std::size_t w = 0; w < prev_words; ++w) {
            for (std::size_t s = 0; s < n; ++s) {
                const std::uint32_t src = cur.of_word[w];
                auto key = std::make_pair(src, s);
                auto it = seen.find(key);
                std::uint32_t id;
                if (it != seen.end()) {
                    id = it->second;
                } else {
                    id = next.intern(image_in_set(cur.pieces[src], s, cache));
                    seen.emplace(key, id);
                }
                // forward: new word = old * n + s (s is the latest symbol);
                // backward: new word = s * n^(j-1) + old (s is the earliest symbol).
                const std::size_t word = f.backward ? s * prev_words + w : w * n + s;
                next.of_word[word] = id;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

// Projections of single set cells onto the strip coordinates, computed on first use.
class CellProjections {
public:
    CellProjections(const BoxCover& set, const Matrix& to_strip, int level)
        : set_(set), to_strip_(to_strip), level_(level), cells_(set.size()), done_(set.size(), 0) {}

    const std::vector<Cell>& of(std::uint32_t i) {
        if (!done_[i]) {
            const Vector zero = Vector::Zero(to_strip_.rows());
            for_each_cell(affine_image(to_strip_, zero, set_.cell_box(set_.cells[i])), level_,
                          [&](const Cell& x) { cells_[i].push_back(x); });
            done_[i] = 1;
        }
        return cells_[i];
    }

    BoxCover project(const IndexSet& piece) {
        BoxCover out(static_cast<int>(to_strip_.rows()), level_);
        for (auto i : piece) {
            const auto& c = of(i);
            out.cells.insert(out.cells.end(), c.begin(), c.end());
        }
        out.normalize();
        return out;
    }

private:
    const BoxCover& set_;
    const Matrix& to_strip_;
    int level_;
    std::vector<std::vector<Cell>> cells_;
    std::vector<std::uint8_t> done_;
};

BoxCover project(const BoxCover& piece, const Matrix& to_strip, int level) {
    std::unordered_set<Cell, CellHash> acc;
    const Vector zero = Vector::Zero(to_strip.rows());
    for (const auto& c : piece.cells)
        for_each_cell(affine_image(to_strip, zero, piece.cell_box(c)), level, [&](const Cell& x) { acc.insert(x); });
    BoxCover out(static_cast<int>(to_strip.rows()), level);
    out.cells.assign(acc.begin(), acc.end());
    out.normalize();
    return out;
}

PieceStatus classify(const BoxCover& projected, int rows) {
    PieceStatus st;
    st.cells = projected.size();
    if (projected.empty()) {
        st.status = StripStatus::Outside;
        st.disjoint_from_open = true;
        return st;
    }
    const auto cls = strip_predicate(projected, Strip::coordinate(rows, rows));
    st.status = cls.status;
    st.disjoint_from_open = cls.disjoint_from_open;
    return st;
}

struct CycleInfo {
    std::vector<std::int64_t> scc;        // component id per vertex, -1 if dead
    std::vector<std::uint8_t> nontrivial;  // per component
    std::vector<std::uint8_t> from_cycle;  // per vertex
    std::vector<std::uint8_t> to_cycle;
};

template <typename F>
void for_each_predecessor(const InvGraph& g, std::size_t v, F&& fn) {
    const std::size_t blk = g.block();
    const std::size_t base = v / g.num_symbols;
    const bool proper = (v % g.num_symbols) != g.zero_symbol;
    for (std::size_t c = 0; c < g.num_symbols; ++c) {
        const std::size_t u = base + c * blk;
        if (g.alive[u]) fn(u, proper);
    }
}

CycleInfo analyze_cycles(const InvGraph& g) {
    const std::size_t N = g.num_vertices();
    CycleInfo info;
    info.scc.assign(N, -1);
    info.from_cycle.assign(N, 0);
    info.to_cycle.assign(N, 0);
    // Iterative Tarjan.
    std::vector<std::int64_t> index(N, -1), low(N, 0);
    std::vector<std::uint8_t> on_stack(N, 0);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call;  // vertex, next symbol
    std::int64_t counter = 0;
    std::int64_t comps = 0;
    for (std::size_t root = 0; root < N; ++root) {
        if (!g.alive[root] || index[root] >= 0) continue;
        call.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            auto& [v, s] = call.back();
            const std::size_t base = (v % g.block()) * g.num_symbols;
            bool descended = false;
            while (s < g.num_symbols) {
                const std::size_t w = base + s++;
                if (!g.alive[w]) continue;
                if (index[w] < 0) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.emplace_back(w, 0);
                    descended = true;
                    break;
                }
                if (on_stack[w]) low[v] = std::min(low[v], index[w]);
            }
            if (descended) continue;
            const std::size_t vv = v;
            if (low[vv] == index[vv]) {
                std::size_t size = 0;
                while (true) {
                    const std::size_t w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    info.scc[w] = comps;
                    ++size;
                    if (w == vv) break;
                }
                bool self_loop = false;
                g.for_each_successor(vv, [&](std::size_t w, bool) { self_loop |= (w == vv); });
                info.nontrivial.push_back(size > 1 || self_loop);
                ++comps;
            }
            call.pop_back();
            if (!call.empty()) {
                const std::size_t parent = call.back().first;
                low[parent] = std::min(low[parent], low[vv]);
            }
        }
    }
    std::deque<std::size_t> q;
    for (std::size_t v = 0; v < N; ++v)
        if (g.alive[v] && info.nontrivial[static_cast<std::size_t>(info.scc[v])]) {
            info.from_cycle[v] = 1;
            info.to_cycle[v] = 1;
        }
    for (std::size_t v = 0; v < N; ++v)
        if (info.from_cycle[v]) q.push_back(v);
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop_front();
        g.for_each_successor(v, [&](std::size_t w, bool) {
            if (!info.from_cycle[w]) {
                info.from_cycle[w] = 1;
                q.push_back(w);
            }
        });
    }
    for (std::size_t v = 0; v < N; ++v)
        if (info.to_cycle[v]) q.push_back(v);
    while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop_front();
        for_each_predecessor(g, v, [&](std::size_t u, bool) {
            if (!info.to_cycle[u]) {
                info.to_cycle[u] = 1;
                q.push_back(u);
            }
        });
    }
    return info;
}

// Shortest path src -> t with target(t), following successors (forward) or
// predecessors, optionally inside one component. Returns {src} when src
// itself is a target and an empty list when no target is reachable.
template <typename Pred>
std::vector<std::size_t> bfs_path(const InvGraph& g, std::size_t src, Pred target, bool forward,
                                  const std::vector<std::int64_t>* scc = nullptr, std::int64_t comp = -1) {
    if (target(src)) return {src};
    std::unordered_map<std::size_t, std::size_t> parent{{src, src}};
    std::deque<std::size_t> q{src};
    std::size_t found = src;
    bool done = false;
    while (!q.empty() && !done) {
        const std::size_t v = q.front();
        q.pop_front();
        auto visit = [&](std::size_t w, bool) {
            if (done || (scc && (*scc)[w] != comp)) return;
            if (!parent.emplace(w, v).second) return;
            if (target(w)) {
                found = w;
                done = true;
                return;
            }
            q.push_back(w);
        };
        if (forward)
            g.for_each_successor(v, visit);
        else
            for_each_predecessor(g, v, visit);
    }
    if (!done) return {};
    std::vector<std::size_t> path{found};
    while (path.back() != src) path.push_back(parent.at(path.back()));
    std::reverse(path.begin(), path.end());
    return path;
}

// Symbols fed along a forward vertex path (the new symbol of each edge).
std::vector<std::size_t> edge_symbols(const InvGraph& g, const std::vector<std::size_t>& path) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i < path.size(); ++i) out.push_back(path[i] % g.num_symbols);
    return out;
}

// Cycle through v inside its component, as the symbols of its edges starting
// with the edge out of v.
std::vector<std::size_t> cycle_symbols(const InvGraph& g, const CycleInfo& info, std::size_t v) {
    bool self_loop = false;
    g.for_each_successor(v, [&](std::size_t w, bool) { self_loop |= (w == v); });
    if (self_loop) return {v % g.num_symbols};
    const std::int64_t comp = info.scc[v];
    // BFS from successors of v back to v.
    std::unordered_map<std::size_t, std::size_t> parent;
    std::deque<std::size_t> q;
    g.for_each_successor(v, [&](std::size_t w, bool) {
        if (info.scc[w] == comp && parent.emplace(w, v).second) q.push_back(w);
    });
    while (!q.empty()) {
        const std::size_t x = q.front();
        q.pop_front();
        bool done = false;
        g.for_each_successor(x, [&](std::size_t w, bool) {
            if (done) return;
            if (w == v) {
                parent[static_cast<std::size_t>(-1)] = x;
                done = true;
                return;
            }
            if (info.scc[w] == comp && parent.emplace(w, x).second) q.push_back(w);
        });
        if (done) break;
    }
    std::vector<std::size_t> path{v};
    std::size_t cur = parent.at(static_cast<std::size_t>(-1));
    while (cur != v) {
        path.push_back(cur);
        cur = parent.at(cur);
    }
    path.push_back(v);
    std::reverse(path.begin(), path.end());
    return edge_symbols(g, path);
}

}  // namespace

PieceModel PieceModel::forward(const BoxCover& H, const AffineIFS& ifs, const Strip& strip, std::size_t zero_symbol) {
    PieceModel m;
    m.factors.push_back({ifs, H, strip.rows, false});
    m.num_symbols = ifs.size();
    m.zero_symbol = zero_symbol;
    m.strip_rows = static_cast<int>(strip.rows.rows());
    m.level = H.level;
    return m;
}

std::size_t InvGraph::block() const { return ipow(num_symbols, depth_k); }

std::size_t InvGraph::alive_count() const {
    return static_cast<std::size_t>(std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

std::vector<std::size_t> InvGraph::word(std::size_t v) const {
    std::vector<std::size_t> w(static_cast<std::size_t>(depth_k + 1));
    for (int i = depth_k; i >= 0; --i) {
        w[static_cast<std::size_t>(i)] = v % num_symbols;
        v /= num_symbols;
    }
    return w;
}

std::size_t InvGraph::vertex_of(const std::vector<std::size_t>& w) const {
    if (w.size() != static_cast<std::size_t>(depth_k + 1)) throw DimensionMismatch("word length must be k+1");
    std::size_t v = 0;
    for (auto s : w) {
        if (s >= num_symbols) throw IndexOutOfRange("symbol outside the alphabet");
        v = v * num_symbols + s;
    }
    return v;
}

std::vector<std::size_t> PathWitness::flattened() const {
    std::vector<std::size_t> out = left_cycle;
    out.insert(out.end(), middle.begin(), middle.end());
    out.insert(out.end(), right_cycle.begin(), right_cycle.end());
    return out;
}

InvGraph build_graph(const PieceModel& model, int k, std::size_t vertex_budget) {
    if (k < 0) throw InvalidSystem("graph depth must be >= 0");
    if (model.factors.empty() || model.factors.size() > 2) throw InvalidSystem("piece model needs one or two factors");
    const std::size_t n = model.num_symbols;
    if (dpow(n, k + 1) > static_cast<double>(vertex_budget))
        throw BudgetExceeded(std::to_string(n) + "^" + std::to_string(k + 1) + " vertices exceed the budget of " +
                             std::to_string(vertex_budget));
    const PieceFactor* fwd = nullptr;
    const PieceFactor* bwd = nullptr;
    for (const auto& f : model.factors) {
        if (f.maps.size() != n) throw DimensionMismatch("factor map count differs from the alphabet");
        (f.backward ? bwd : fwd) = &f;
    }
    const int a = fwd && bwd ? (k + 2) / 2 : fwd ? k + 1 : 0;
    const int b = k + 1 - a;

    InvGraph g;
    g.depth_k = k;
    g.num_symbols = n;
    g.zero_symbol = model.zero_symbol;
    g.split = static_cast<std::size_t>(a);

    PieceTable ft;
    PieceTable bt;
    std::vector<BoxCover> fproj;
    std::vector<BoxCover> bproj;
    if (fwd) {
        CellImages cache(*fwd);
        ft = factor_pieces(cache, n, a);
        CellProjections proj(fwd->set, fwd->to_strip, model.level);
        for (const auto& c : ft.pieces) fproj.push_back(proj.project(c));
        g.distinct_forward = ft.pieces.size();
    }
    if (bwd) {
        CellImages cache(*bwd);
        bt = factor_pieces(cache, n, b);
        CellProjections proj(bwd->set, bwd->to_strip, model.level);
        for (const auto& c : bt.pieces) bproj.push_back(proj.project(c));
        g.distinct_backward = bt.pieces.size();
    }

    const std::size_t N = ipow(n, k + 1);
    const std::size_t suffix_words = ipow(n, b);
    g.piece.assign(N, 0);
    g.alive.assign(N, 1);
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> pair_id;
    for (std::size_t v = 0; v < N; ++v) {
        const std::uint32_t fi = fwd ? ft.of_word[v / suffix_words] : 0;
        const std::uint32_t bi = bwd ? bt.of_word[v % suffix_words] : 0;
        auto [it, inserted] = pair_id.emplace(std::make_pair(fi, bi), static_cast<std::uint32_t>(g.pieces.size()));
        if (inserted) {
            if (fwd && bwd) {
                const BoxCover& x = fproj[fi];
                const BoxCover& y = bproj[bi];
                g.pieces.push_back(classify(x.empty() || y.empty() ? BoxCover(model.strip_rows, model.level)
                                                                   : minkowski_sum(x, y),
                                            model.strip_rows));
            } else {
                g.pieces.push_back(classify(fwd ? fproj[fi] : bproj[bi], model.strip_rows));
            }
        }
        g.piece[v] = it->second;
    }
    return g;
}

InvGraph build_graph(const BoxCover& H, const AffineIFS& ifs, int k, const Strip& strip, std::size_t zero_symbol,
                     std::size_t vertex_budget) {
    return build_graph(PieceModel::forward(H, ifs, strip, zero_symbol), k, vertex_budget);
}

PruneResult prune_internal(const InvGraph& g, bool strict) {
    PruneResult res{g, false, false};
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        if (!g.alive[v]) continue;
        const auto& st = g.status(v);
        if (st.status == StripStatus::Boundary && !st.disjoint_from_open) res.boundary_seen = true;
        if (st.status != StripStatus::Inside) res.graph.alive[v] = 0;
    }
    res.inconclusive = strict && res.boundary_seen;
    return res;
}

InvGraph prune_outside(const InvGraph& g) {
    InvGraph out = g;
    for (std::size_t v = 0; v < g.num_vertices(); ++v)
        if (g.status(v).disjoint_from_open) out.alive[v] = 0;
    return out;
}

LongPathResult has_arbitrarily_long_proper_paths(const InvGraph& g) {
    LongPathResult res;
    const CycleInfo info = analyze_cycles(g);
    const std::size_t N = g.num_vertices();
    std::size_t best_u = N, best_w = N;
    int best_kind = 3;  // 0: on a cycle, 1: after a cycle, 2: before a cycle
    for (std::size_t u = 0; u < N; ++u) {
        if (!g.alive[u]) continue;
        g.for_each_successor(u, [&](std::size_t w, bool proper) {
            if (!proper) return;
            ++res.proper_edges;
            int kind = 3;
            if (info.scc[u] == info.scc[w] && info.nontrivial[static_cast<std::size_t>(info.scc[u])])
                kind = 0;
            else if (info.from_cycle[u])
                kind = 1;
            else if (info.to_cycle[w])
                kind = 2;
            if (kind < best_kind) {
                best_kind = kind;
                best_u = u;
                best_w = w;
            }
        });
    }
    if (best_kind == 3) return res;
    res.found = true;
    PathWitness wit;
    const std::size_t n = g.num_symbols;
    const std::size_t k = static_cast<std::size_t>(g.depth_k);
    const std::size_t a = g.split;
    auto on_cycle = [&](std::size_t x) { return info.nontrivial[static_cast<std::size_t>(info.scc[x])] != 0; };
    if (best_kind == 0) {
        // Cycle made of the proper edge u -> w and a path w -> u in the component.
        const std::vector<std::size_t> back = bfs_path(
            g, best_w, [&](std::size_t x) { return x == best_u; }, true, &info.scc, info.scc[best_u]);
        std::vector<std::size_t> cyc{best_w % n};
        const auto syms = edge_symbols(g, back);
        cyc.insert(cyc.end(), syms.begin(), syms.end());
        wit.left_cycle = cyc;
        wit.middle = cyc;
        wit.right_cycle = cyc;
        wit.proper_position = 0;
        wit.check_begin = 0;
        wit.check_end = 3 * cyc.size();
    } else if (best_kind == 1) {
        // Nearest cycle vertex c upstream of u, then c -> ... -> u -> w.
        const std::vector<std::size_t> up = bfs_path(g, best_u, on_cycle, false);
        std::vector<std::size_t> path(up.rbegin(), up.rend());
        path.push_back(best_w);
        const std::size_t c = path.front();
        wit.left_cycle = cycle_symbols(g, info, c);
        const std::size_t L = wit.left_cycle.size();
        const std::size_t reps = (k + 1 + L - 1) / L;
        for (std::size_t r = 0; r < reps; ++r) wit.middle.insert(wit.middle.end(), wit.left_cycle.begin(), wit.left_cycle.end());
        const auto syms = edge_symbols(g, path);
        wit.middle.insert(wit.middle.end(), syms.begin(), syms.end());
        wit.right_cycle = {g.zero_symbol};
        wit.proper_position = wit.middle.size() - 1;
        wit.check_begin = 0;
        wit.check_end = L + reps * L - 1 - k + a + syms.size();
    } else {
        // u's window, then u -> w -> ... -> c with c on a cycle.
        const std::vector<std::size_t> down = bfs_path(g, best_w, on_cycle, true);
        std::vector<std::size_t> path{best_u};
        path.insert(path.end(), down.begin(), down.end());
        const std::size_t c = path.back();
        wit.left_cycle = {g.zero_symbol};
        wit.middle = g.word(best_u);
        const auto syms = edge_symbols(g, path);
        wit.middle.insert(wit.middle.end(), syms.begin(), syms.end());
        wit.right_cycle = cycle_symbols(g, info, c);
        wit.proper_position = k + 1;
        wit.check_begin = 1 + a;
        wit.check_end = wit.left_cycle.size() + wit.middle.size() + wit.right_cycle.size();
    }
    res.witness = wit;
    return res;
}

StepsProfile steps_profile(const InvGraph& g) {
    const CycleInfo info = analyze_cycles(g);
    const std::size_t N = g.num_vertices();
    // Longest path ending at each vertex, over vertices not reachable from a cycle.
    std::vector<int> pre(N, 0), post(N, 0);
    {
        std::vector<int> indeg(N, 0);
        std::deque<std::size_t> q;
        for (std::size_t v = 0; v < N; ++v) {
            if (!g.alive[v] || info.from_cycle[v]) continue;
            for_each_predecessor(g, v, [&](std::size_t, bool) { ++indeg[v]; });
        }
        for (std::size_t v = 0; v < N; ++v)
            if (g.alive[v] && !info.from_cycle[v] && indeg[v] == 0) q.push_back(v);
        while (!q.empty()) {
            const std::size_t v = q.front();
            q.pop_front();
            g.for_each_successor(v, [&](std::size_t w, bool) {
                if (info.from_cycle[w]) return;
                pre[w] = std::max(pre[w], pre[v] + 1);
                if (--indeg[w] == 0) q.push_back(w);
            });
        }
    }
    {
        std::vector<int> outdeg(N, 0);
        std::deque<std::size_t> q;
        for (std::size_t v = 0; v < N; ++v) {
            if (!g.alive[v] || info.to_cycle[v]) continue;
            g.for_each_successor(v, [&](std::size_t, bool) { ++outdeg[v]; });
        }
        for (std::size_t v = 0; v < N; ++v)
            if (g.alive[v] && !info.to_cycle[v] && outdeg[v] == 0) q.push_back(v);
        while (!q.empty()) {
            const std::size_t w = q.front();
            q.pop_front();
            for_each_predecessor(g, w, [&](std::size_t u, bool) {
                if (info.to_cycle[u]) return;
                post[u] = std::max(post[u], post[w] + 1);
                if (--outdeg[u] == 0) q.push_back(u);
            });
        }
    }
    int max_pre = 0;
    std::vector<std::pair<int, int>> proper;  // (pre of source, post of target)
    for (std::size_t u = 0; u < N; ++u) {
        if (!g.alive[u]) continue;
        g.for_each_successor(u, [&](std::size_t w, bool is_proper) {
            if (!is_proper) return;
            if (info.from_cycle[u] || info.to_cycle[w])
                throw InvalidSystem("steps profile requested for a graph with long proper paths");
            proper.emplace_back(pre[u], post[w]);
            max_pre = std::max(max_pre, pre[u]);
        });
    }
    StepsProfile prof;
    const int top = proper.empty() ? 0 : max_pre + 1;
    for (int l = 0; l <= top; ++l) {
        int worst = 0;
        for (const auto& [pr, po] : proper)
            if (pr >= l) worst = std::max(worst, po);
        prof.steps.push_back(1 + worst);
    }
    prof.best_steps = *std::min_element(prof.steps.begin(), prof.steps.end());
    for (std::size_t l = 0; l < prof.steps.size(); ++l)
        if (prof.steps[l] == prof.best_steps) {
            prof.best_waiting = static_cast<int>(l);
            break;
        }
    return prof;
}

int stopping_k(const PieceModel& model, int k_max, std::size_t vertex_budget) {
    for (const auto& f : model.factors) {
        const BoxCover proj = project(f.set, f.to_strip, model.level);
        if (model.factors.size() == 1 && classify(proj, model.strip_rows).status == StripStatus::Boundary)
            throw NotSeparated("invariant set touches the strip boundary at level " + std::to_string(model.level));
    }
    for (int k = 0; k <= k_max; ++k) {
        const InvGraph g = build_graph(model, k, vertex_budget);
        bool ok = true;
        for (const auto& st : g.pieces)
            if (!st.disjoint_from_open && st.status != StripStatus::Inside) ok = false;
        if (ok) return k;
    }
    throw KMaxExceeded("no depth up to " + std::to_string(k_max) + " separates the pieces from the strip boundary");
}

void write_edge_list(std::ostream& os, const InvGraph& g) {
    os << "# depth " << g.depth_k << " symbols " << g.num_symbols << " zero " << g.zero_symbol << '\n';
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        if (!g.alive[v]) continue;
        os << "v " << v << ' ';
        const auto w = g.word(v);
        for (std::size_t i = 0; i < w.size(); ++i) os << (i ? "." : "") << w[i];
        os << ' ' << to_string(g.status(v).status) << '\n';
    }
    for (std::size_t v = 0; v < g.num_vertices(); ++v) {
        if (!g.alive[v]) continue;
        g.for_each_successor(v, [&](std::size_t w, bool proper) { os << "e " << v << ' ' << w << ' ' << proper << '\n'; });
    }
}

}  // namespace qinv
