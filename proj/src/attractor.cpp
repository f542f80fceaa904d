// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/attractor.hpp>

#include <qinv/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>

namespace qinv {

namespace {

double inf_norm(const Matrix& M) { return M.cwiseAbs().rowwise().sum().maxCoeff(); }

// Largest ||M_w||_inf over words of each length 0..max_len; stops early once
// a length with norm below one is found.
std::vector<double> word_norms(const AffineIFS& ifs, int max_len) {
    std::vector<double> out{1.0};
    const int q = ifs.dim();
    if (ifs.shared_linear_part()) {
        Matrix P = Matrix::Identity(q, q);
        for (int k = 1; k <= max_len; ++k) {
            P = ifs.maps.front().M * P;
            out.push_back(inf_norm(P));
            if (out.back() < 1.0) break;
        }
        return out;
    }
    std::vector<Matrix> layer{Matrix::Identity(q, q)};
    for (int k = 1; k <= max_len; ++k) {
        if (static_cast<double>(layer.size()) * static_cast<double>(ifs.size()) > 2e5) break;
        std::vector<Matrix> next;
        double best = 0.0;
        for (const auto& P : layer)
            for (const auto& f : ifs.maps) {
                next.push_back(f.M * P);
                best = std::max(best, inf_norm(next.back()));
            }
        layer = std::move(next);
        out.push_back(best);
        if (best < 1.0) break;
    }
    return out;
}

}  // namespace

ContractionCertificate contraction_certificate(const AffineIFS& ifs, int max_power) {
    ifs.validate();
    const std::vector<double> norms = word_norms(ifs, max_power);
    const int k = static_cast<int>(norms.size()) - 1;
    if (k < 1 || !(norms.back() < 1.0))
        throw NotContractive("no word length up to " + std::to_string(max_power) + " gives a contraction");
    ContractionCertificate cert;
    cert.k = k;
    cert.rho_k = norms.back();
    cert.partial_sum = 0.0;
    for (int j = 0; j < k; ++j) cert.partial_sum += norms[static_cast<std::size_t>(j)];
    double cmax = 0.0;
    for (const auto& f : ifs.maps) {
        cmax = std::max(cmax, f.c.cwiseAbs().maxCoeff());
        cert.max_norm = std::max(cert.max_norm, inf_norm(f.M));
    }
    cert.radius = cert.partial_sum * cmax / (1.0 - cert.rho_k);
    return cert;
}

BoxCover hutchinson_step(const BoxCover& cover, const AffineIFS& ifs) {
    ifs.validate();
    if (ifs.dim() != cover.dim) throw DimensionMismatch("IFS and cover dimensions differ");
    std::unordered_set<Cell, CellHash> acc;
    for (const auto& c : cover.cells) {
        const IntervalBox box = cover.cell_box(c);
        for (const auto& f : ifs.maps)
            for_each_cell(affine_image(f.M, f.c, box), cover.level, [&](const Cell& x) { acc.insert(x); });
    }
    BoxCover out(cover.dim, cover.level);
    out.cells.assign(acc.begin(), acc.end());
    out.normalize();
    return out;
}

int restrict_to_fixpoint(BoxCover& cover, const AffineIFS& ifs, const AttractorOptions& opts) {
    ifs.validate();
    if (ifs.dim() != cover.dim) throw DimensionMismatch("IFS and cover dimensions differ");
    // Closure under images, recorded as a CSR graph in discovery order.
    std::vector<Cell> cells = cover.cells;
    std::unordered_map<Cell, std::uint32_t, CellHash> index;
    index.reserve(cells.size() * 2);
    for (std::uint32_t i = 0; i < cells.size(); ++i) index.emplace(cells[i], i);
    std::vector<std::uint64_t> offsets{0};
    std::vector<std::uint32_t> targets;
    std::vector<std::uint32_t> scratch;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const IntervalBox box = cover.cell_box(cells[i]);
        scratch.clear();
        for (const auto& f : ifs.maps) {
            for_each_cell(affine_image(f.M, f.c, box), cover.level, [&](const Cell& x) {
                auto [it, inserted] = index.emplace(x, static_cast<std::uint32_t>(cells.size()));
                if (inserted) {
                    cells.push_back(x);
                    if (cells.size() > opts.cell_budget)
                        throw BudgetExceeded("attractor closure exceeds " + std::to_string(opts.cell_budget) +
                                             " cells at level " + std::to_string(cover.level));
                }
                scratch.push_back(it->second);
            });
        }
        std::sort(scratch.begin(), scratch.end());
        scratch.erase(std::unique(scratch.begin(), scratch.end()), scratch.end());
        targets.insert(targets.end(), scratch.begin(), scratch.end());
        offsets.push_back(targets.size());
    }
    // Peel cells without predecessors; they cannot hold attractor points.
    const std::size_t n = cells.size();
    std::vector<std::uint32_t> indeg(n, 0);
    for (auto t : targets) ++indeg[t];
    std::vector<bool> removed(n, false);
    std::vector<std::uint32_t> layer;
    for (std::uint32_t i = 0; i < n; ++i)
        if (indeg[i] == 0) layer.push_back(i);
    int rounds = 0;
    while (!layer.empty()) {
        if (++rounds > opts.max_iters)
            throw NoFixpointAtResolution("cover did not stabilize within " + std::to_string(opts.max_iters) +
                                         " iterations at level " + std::to_string(cover.level));
        std::vector<std::uint32_t> next;
        for (auto i : layer) {
            removed[i] = true;
            for (auto e = offsets[i]; e < offsets[i + 1]; ++e) {
                const auto t = targets[e];
                if (--indeg[t] == 0 && !removed[t]) next.push_back(t);
            }
        }
        layer = std::move(next);
    }
    cover.cells.clear();
    for (std::size_t i = 0; i < n; ++i)
        if (!removed[i]) cover.cells.push_back(cells[i]);
    cover.normalize();
    return rounds;
}

AttractorApprox compute_attractor(const AffineIFS& ifs, int level, const AttractorOptions& opts) {
    if (level < 0) throw InvalidSystem("level must be >= 0");
    const ContractionCertificate cert = contraction_certificate(ifs);
    const int q = ifs.dim();
    const double r = cert.radius * (1.0 + 1e-9) + 1e-300;
    const IntervalBox ball{Vector::Constant(q, -r), Vector::Constant(q, r)};
    if (cell_count(ball, 0) > static_cast<double>(opts.coarse_cells))
        throw BudgetExceeded("a-priori ball needs more than " + std::to_string(opts.coarse_cells) +
                             " cells even at level 0");
    int start = 0;
    while (start < level && cell_count(ball, start + 1) <= static_cast<double>(opts.coarse_cells)) ++start;

    AttractorApprox out;
    out.certificate = cert;
    out.cover = cover_box(ball, start, opts.cell_budget);
    for (int L = start; L <= level; ++L) {
        if (L > start) out.cover = refine(out.cover, L);
        out.iterations = restrict_to_fixpoint(out.cover, ifs, opts);
    }
    const double h = out.cover.cell_width();
    const double eps = q == 1 ? h : h * (1.0 + cert.max_norm);
    out.hausdorff_bound = eps * cert.partial_sum / (1.0 - cert.rho_k) * (1.0 + 1e-12);
    return out;
}

AttractorApprox compute_attractor(const AffineIFS& ifs, int level, int max_iters) {
    AttractorOptions opts;
    opts.max_iters = max_iters;
    return compute_attractor(ifs, level, opts);
}

bool SeparationResult::all_proper_separated() const {
    bool any = false;
    for (std::size_t i = 0; i < separated.size(); ++i) {
        if (!proper[i]) continue;
        any = true;
        if (!separated[i]) return false;
    }
    return any;
}

SeparationResult separation_check(const BoxCover& cover, const AffineIFS& ifs, const Strip& strip, int history,
                                  std::vector<bool> proper) {
    ifs.validate();
    if (ifs.dim() != cover.dim || strip.dim() != cover.dim)
        throw DimensionMismatch("separation check on mismatched dimensions");
    if (proper.empty())
        for (const auto& f : ifs.maps) proper.push_back(!f.c.isZero(0.0));
    if (proper.size() != ifs.size()) throw DimensionMismatch("proper flags do not match the maps");

    const BoxCover start = cells_meeting_strip(cover, strip);
    BoxCover cur = start;
    for (int s = 0; s < history; ++s) {
        std::unordered_set<Cell, CellHash> acc;
        for (const auto& c : cur.cells) {
            const IntervalBox box = cur.cell_box(c);
            for (const auto& f : ifs.maps)
                for_each_touching_cell(affine_image(f.M, f.c, box), cover.level, [&](const Cell& x) {
                    if (start.contains(x)) acc.insert(x);
                });
        }
        BoxCover next(cover.dim, cover.level);
        next.cells.assign(acc.begin(), acc.end());
        next.normalize();
        cur = std::move(next);
    }

    SeparationResult res;
    res.proper = proper;
    res.history = history;
    res.start_cells = cur.size();
    for (std::size_t i = 0; i < ifs.size(); ++i) {
        if (!proper[i]) {
            res.separated.push_back(false);
            continue;
        }
        const auto& f = ifs.maps[i];
        bool ok = true;
        for (const auto& c : cur.cells) {
            const IntervalBox img = affine_image(f.M, f.c, cur.cell_box(c));
            bool meets_open = false;
            classify_box(img, strip, &meets_open);
            if (!meets_open) continue;
            for_each_touching_cell(img, cover.level, [&](const Cell& x) {
                if (start.contains(x)) ok = false;
            });
            if (!ok) break;
        }
        res.separated.push_back(ok);
    }
    return res;
}

}  // namespace qinv
