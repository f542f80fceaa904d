// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/box_cover.hpp>

#include <qinv/errors.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace qinv {

namespace {

std::int32_t to_index(double v) {
    if (!(v >= -2147483000.0 && v <= 2147483000.0))
        throw BudgetExceeded("cell index out of the representable range");
    return static_cast<std::int32_t>(v);
}

void check_dim(int dim) {
    if (dim < 1 || dim > kMaxCoverDim)
        throw DimensionMismatch("cover dimension must be in [1, " + std::to_string(kMaxCoverDim) + "]");
}

}  // namespace

BoxCover::BoxCover(int dim_, int level_, std::vector<Cell> cells_) : dim(dim_), level(level_), cells(std::move(cells_)) {
    check_dim(dim);
    if (level < 0) throw InvalidSystem("cover level must be >= 0");
    normalize();
}

double BoxCover::cell_width() const { return std::ldexp(1.0, -level); }

IntervalBox BoxCover::cell_box(const Cell& c) const {
    const double h = cell_width();
    IntervalBox box{Vector(dim), Vector(dim)};
    for (int j = 0; j < dim; ++j) {
        box.lo(j) = c[j] * h;
        box.hi(j) = (static_cast<double>(c[j]) + 1.0) * h;
    }
    return box;
}

IntervalBox BoxCover::hull() const {
    if (cells.empty()) throw InvalidSystem("hull of an empty cover");
    Cell lo = cells.front();
    Cell hi = cells.front();
    for (const auto& c : cells)
        for (int j = 0; j < dim; ++j) {
            lo[j] = std::min(lo[j], c[j]);
            hi[j] = std::max(hi[j], c[j]);
        }
    IntervalBox a = cell_box(lo);
    IntervalBox b = cell_box(hi);
    return {a.lo, b.hi};
}

bool BoxCover::contains(const Cell& c) const { return std::binary_search(cells.begin(), cells.end(), c); }

std::ptrdiff_t BoxCover::find(const Cell& c) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), c);
    if (it == cells.end() || *it != c) return -1;
    return it - cells.begin();
}

void BoxCover::normalize() {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
}

void cell_range(double a, double b, double h, std::int32_t& lo, std::int32_t& hi) {
    const double fl = std::floor(a / h);
    double up = std::ceil(b / h) - 1.0;
    if (up < fl) up = fl;
    lo = to_index(fl);
    hi = to_index(up);
}

double cell_count(const IntervalBox& box, int level) {
    const double h = std::ldexp(1.0, -level);
    double n = 1.0;
    for (Eigen::Index j = 0; j < box.dim(); ++j) {
        const double fl = std::floor(box.lo(j) / h);
        double up = std::ceil(box.hi(j) / h) - 1.0;
        if (up < fl) up = fl;
        n *= (up - fl + 1.0);
        if (n > 1e18) return 1e18;
    }
    return n;
}

void for_each_cell(const IntervalBox& box, int level, const std::function<void(const Cell&)>& fn) {
    const int dim = static_cast<int>(box.dim());
    check_dim(dim);
    const double h = std::ldexp(1.0, -level);
    Cell lo{};
    Cell hi{};
    for (int j = 0; j < dim; ++j) cell_range(box.lo(j), box.hi(j), h, lo[j], hi[j]);
    Cell cur = lo;
    while (true) {
        fn(cur);
        int j = 0;
        for (; j < dim; ++j) {
            if (cur[j] < hi[j]) {
                ++cur[j];
                break;
            }
            cur[j] = lo[j];
        }
        if (j == dim) break;
    }
}

void for_each_touching_cell(const IntervalBox& box, int level, const std::function<void(const Cell&)>& fn) {
    const int dim = static_cast<int>(box.dim());
    check_dim(dim);
    const double h = std::ldexp(1.0, -level);
    Cell lo{};
    Cell hi{};
    for (int j = 0; j < dim; ++j) {
        lo[j] = to_index(std::ceil(box.lo(j) / h) - 1.0);
        hi[j] = to_index(std::floor(box.hi(j) / h));
    }
    Cell cur = lo;
    while (true) {
        fn(cur);
        int j = 0;
        for (; j < dim; ++j) {
            if (cur[j] < hi[j]) {
                ++cur[j];
                break;
            }
            cur[j] = lo[j];
        }
        if (j == dim) break;
    }
}

BoxCover cover_box(const IntervalBox& box, int level, std::size_t max_cells) {
    if (cell_count(box, level) > static_cast<double>(max_cells))
        throw BudgetExceeded("box needs more than " + std::to_string(max_cells) + " cells");
    BoxCover out(static_cast<int>(box.dim()), level);
    for_each_cell(box, level, [&](const Cell& c) { out.cells.push_back(c); });
    out.normalize();
    return out;
}

BoxCover refine(const BoxCover& cover, int level) {
    if (level < cover.level) throw InvalidSystem("refine to a coarser level");
    if (level == cover.level) return cover;
    const int shift = level - cover.level;
    const std::int64_t k = std::int64_t{1} << shift;
    const double n = std::pow(static_cast<double>(k), cover.dim) * static_cast<double>(cover.size());
    if (n > 5e8) throw BudgetExceeded("refinement would create too many cells");
    BoxCover out(cover.dim, level);
    out.cells.reserve(static_cast<std::size_t>(n));
    for (const auto& c : cover.cells) {
        Cell base{};
        for (int j = 0; j < cover.dim; ++j) base[j] = to_index(static_cast<double>(c[j]) * static_cast<double>(k));
        Cell off{};
        while (true) {
            Cell x = base;
            for (int j = 0; j < cover.dim; ++j) x[j] += off[j];
            out.cells.push_back(x);
            int j = 0;
            for (; j < cover.dim; ++j) {
                if (++off[j] < k) break;
                off[j] = 0;
            }
            if (j == cover.dim) break;
        }
    }
    out.normalize();
    return out;
}

BoxCover coarsen(const BoxCover& cover, int level) {
    if (level > cover.level) throw InvalidSystem("coarsen to a finer level");
    const int shift = cover.level - level;
    BoxCover out(cover.dim, level);
    out.cells.reserve(cover.size());
    for (const auto& c : cover.cells) {
        Cell x{};
        for (int j = 0; j < cover.dim; ++j) x[j] = c[j] >> shift;  // arithmetic shift floors
        out.cells.push_back(x);
    }
    out.normalize();
    return out;
}

bool is_subset(const BoxCover& a, const BoxCover& b) {
    if (a.dim != b.dim) throw DimensionMismatch("subset test on covers of different dimension");
    if (a.level != b.level) {
        if (a.level > b.level) return is_subset(a, refine(b, a.level));
        return is_subset(refine(a, b.level), b);
    }
    return std::includes(b.cells.begin(), b.cells.end(), a.cells.begin(), a.cells.end());
}

BoxCover set_union(const BoxCover& a, const BoxCover& b) {
    if (a.dim != b.dim || a.level != b.level) throw DimensionMismatch("union of covers on different grids");
    BoxCover out(a.dim, a.level);
    std::set_union(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end(), std::back_inserter(out.cells));
    return out;
}

BoxCover set_intersection(const BoxCover& a, const BoxCover& b) {
    if (a.dim != b.dim || a.level != b.level) throw DimensionMismatch("intersection of covers on different grids");
    BoxCover out(a.dim, a.level);
    std::set_intersection(a.cells.begin(), a.cells.end(), b.cells.begin(), b.cells.end(),
                          std::back_inserter(out.cells));
    return out;
}

BoxCover negate(const BoxCover& cover) {
    BoxCover out(cover.dim, cover.level);
    out.cells.reserve(cover.size());
    for (const auto& c : cover.cells) {
        Cell x{};
        for (int j = 0; j < cover.dim; ++j) x[j] = -c[j] - 1;
        out.cells.push_back(x);
    }
    out.normalize();
    return out;
}

BoxCover minkowski_sum(const BoxCover& a, const BoxCover& b) {
    if (a.dim != b.dim) throw DimensionMismatch("Minkowski sum of covers of different dimension");
    if (a.level != b.level) {
        const int level = std::max(a.level, b.level);
        return minkowski_sum(refine(a, level), refine(b, level));
    }
    BoxCover out(a.dim, a.level);
    const double n = static_cast<double>(a.size()) * static_cast<double>(b.size()) * std::ldexp(1.0, a.dim);
    if (n > 4e8) throw BudgetExceeded("Minkowski sum too large");
    std::unordered_set<Cell, CellHash> acc;
    for (const auto& x : a.cells)
        for (const auto& y : b.cells) {
            Cell s{};
            for (int j = 0; j < a.dim; ++j) s[j] = x[j] + y[j];
            for (unsigned mask = 0; mask < (1u << a.dim); ++mask) {
                Cell t = s;
                for (int j = 0; j < a.dim; ++j) t[j] += (mask >> j) & 1u;
                acc.insert(t);
            }
        }
    out.cells.assign(acc.begin(), acc.end());
    out.normalize();
    return out;
}

BoxCover affine_image(const BoxCover& cover, const Matrix& M, const Vector& c, int out_level) {
    if (M.cols() != cover.dim) throw DimensionMismatch("map and cover dimensions differ");
    std::unordered_set<Cell, CellHash> acc;
    for (const auto& cell : cover.cells) {
        const IntervalBox img = qinv::affine_image(M, c, cover.cell_box(cell));
        for_each_cell(img, out_level, [&](const Cell& x) { acc.insert(x); });
    }
    BoxCover out(static_cast<int>(M.rows()), out_level);
    out.cells.assign(acc.begin(), acc.end());
    out.normalize();
    return out;
}

Strip Strip::coordinate(int p, int d) {
    Strip s;
    s.rows = Matrix::Zero(p, d);
    s.rows.leftCols(p).setIdentity();
    return s;
}

std::string to_string(StripStatus s) {
    switch (s) {
        case StripStatus::Inside: return "Inside";
        case StripStatus::Outside: return "Outside";
        case StripStatus::Boundary: return "Boundary";
    }
    return "?";
}

StripStatus classify_box(const IntervalBox& box, const Strip& strip, bool* meets_open) {
    const IntervalBox proj = linear_image(strip.rows, box);
    bool inside = true;
    bool outside = false;
    bool open = true;
    for (Eigen::Index j = 0; j < proj.dim(); ++j) {
        const double lo = proj.lo(j);
        const double hi = proj.hi(j);
        if (!(lo > -1.0 && hi < 1.0)) inside = false;
        if (lo > 1.0 || hi < -1.0) outside = true;
        if (lo >= 1.0 || hi <= -1.0) open = false;
    }
    if (meets_open) *meets_open = open;
    if (inside) return StripStatus::Inside;
    if (outside) return StripStatus::Outside;
    return StripStatus::Boundary;
}

StripClassification strip_predicate(const BoxCover& cover, const Strip& strip) {
    if (strip.dim() != cover.dim) throw DimensionMismatch("strip and cover dimensions differ");
    StripClassification out;
    for (const auto& c : cover.cells) {
        bool open = false;
        switch (classify_box(cover.cell_box(c), strip, &open)) {
            case StripStatus::Inside: ++out.inside; break;
            case StripStatus::Outside: ++out.outside; break;
            case StripStatus::Boundary: ++out.boundary; break;
        }
        if (open) out.disjoint_from_open = false;
    }
    if (out.boundary > 0)
        out.status = StripStatus::Boundary;
    else if (out.outside > 0)
        out.status = StripStatus::Outside;
    else
        out.status = StripStatus::Inside;
    return out;
}

StripClassification strip_predicate(const BoxCover& cover, int p) {
    return strip_predicate(cover, Strip::coordinate(p, cover.dim));
}

BoxCover cells_meeting_strip(const BoxCover& cover, const Strip& strip) {
    BoxCover out(cover.dim, cover.level);
    for (const auto& c : cover.cells) {
        bool open = false;
        classify_box(cover.cell_box(c), strip, &open);
        if (open) out.cells.push_back(c);
    }
    return out;
}

void write_csv(std::ostream& os, const BoxCover& cover) {
    os << "dim,level\n" << cover.dim << ',' << cover.level << '\n';
    for (const auto& c : cover.cells) {
        for (int j = 0; j < cover.dim; ++j) os << (j ? "," : "") << c[j];
        os << '\n';
    }
}

BoxCover read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "dim,level") throw ParseError("line 1: expected header 'dim,level'");
    int dim = 0;
    int level = 0;
    char comma = 0;
    if (!std::getline(is, line)) throw ParseError("line 2: missing dim,level values");
    {
        std::istringstream ls(line);
        if (!(ls >> dim >> comma >> level) || comma != ',') throw ParseError("line 2: malformed dim,level values");
    }
    BoxCover out(dim, level);
    int lineno = 2;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        Cell c{};
        for (int j = 0; j < dim; ++j) {
            if (j && (!(ls >> comma) || comma != ',')) throw ParseError("line " + std::to_string(lineno) + ": expected ','");
            if (!(ls >> c[j])) throw ParseError("line " + std::to_string(lineno) + ": expected integer");
        }
        out.cells.push_back(c);
    }
    out.normalize();
    return out;
}

void write_svg(std::ostream& os, const BoxCover& cover, int axis_i, int axis_j, const std::string& title) {
    if (axis_i < 0 || axis_i >= cover.dim || axis_j < 0 || axis_j >= cover.dim)
        throw IndexOutOfRange("projection axis outside the cover dimension");
    std::vector<std::pair<std::int32_t, std::int32_t>> pts;
    pts.reserve(cover.size());
    for (const auto& c : cover.cells) pts.emplace_back(c[axis_i], axis_j == axis_i ? 0 : c[axis_j]);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::int32_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    if (!pts.empty()) {
        x0 = x1 = pts.front().first;
        y0 = y1 = pts.front().second;
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    const long w = static_cast<long>(x1) - x0 + 1;
    const long hgt = static_cast<long>(y1) - y0 + 1;
    const double h = cover.cell_width();
    const long scale = std::max(1L, 800L / std::max(w, hgt));
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"0 0 " << w << ' ' << hgt
       << "\" width=\"" << w * scale << "\" height=\"" << hgt * scale << "\" shape-rendering=\"crispEdges\">\n";
    os << "<title>" << (title.empty() ? "box cover" : title) << "</title>\n";
    os << "<desc>axes " << axis_i << ',' << axis_j << "; level " << cover.level << "; x in [" << x0 * h << ", "
       << (x1 + 1.0) * h << "], y in [" << y0 * h << ", " << (y1 + 1.0) * h << "]</desc>\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << w << "\" height=\"" << hgt << "\" fill=\"white\"/>\n";
    os << "<g fill=\"black\">\n";
    for (const auto& [x, y] : pts)
        os << "<rect x=\"" << (x - x0) << "\" y=\"" << (y1 - y) << "\" width=\"1\" height=\"1\"/>\n";
    os << "</g>\n</svg>\n";
}

}  // namespace qinv
