// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/interval.hpp>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace qinv {

inline constexpr int kMaxCoverDim = 8;

/// Integer index of a grid cell; entries past the cover dimension are zero.
using Cell = std::array<std::int32_t, kMaxCoverDim>;

struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
        std::uint64_t h = 14695981039346656037ULL;
        for (auto v : c) {
            h ^= static_cast<std::uint32_t>(v);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h ^ (h >> 29));
    }
};

/// Finite union of closed dyadic cells prod [i_j h, (i_j + 1) h] with h = 2^-level.
/// Cells are kept sorted and unique.
struct BoxCover {
    int dim = 0;
    int level = 0;
    std::vector<Cell> cells;

    BoxCover() = default;
    BoxCover(int dim_, int level_, std::vector<Cell> cells_ = {});

    double cell_width() const;
    std::size_t size() const { return cells.size(); }
    bool empty() const { return cells.empty(); }
    IntervalBox cell_box(const Cell& c) const;
    /// Bounding box of the union; requires a nonempty cover.
    IntervalBox hull() const;
    bool contains(const Cell& c) const;
    /// Index of c in cells, or -1.
    std::ptrdiff_t find(const Cell& c) const;
    /// Sorts and deduplicates cells.
    void normalize();

    bool operator==(const BoxCover& o) const { return dim == o.dim && level == o.level && cells == o.cells; }
};

/// Grid range lo..hi (inclusive) of cells covering the closed interval [a, b].
void cell_range(double a, double b, double h, std::int32_t& lo, std::int32_t& hi);

/// Calls fn on each cell of the grid at the given level meeting the closed box.
void for_each_cell(const IntervalBox& box, int level, const std::function<void(const Cell&)>& fn);

/// Calls fn on each closed cell sharing at least one point with the closed box.
void for_each_touching_cell(const IntervalBox& box, int level, const std::function<void(const Cell&)>& fn);

/// Number of cells the closed box occupies at the given level (saturating).
double cell_count(const IntervalBox& box, int level);

/// Cover of a closed box; throws BudgetExceeded above max_cells.
BoxCover cover_box(const IntervalBox& box, int level, std::size_t max_cells = std::size_t{1} << 24);

BoxCover refine(const BoxCover& cover, int level);
BoxCover coarsen(const BoxCover& cover, int level);
bool is_subset(const BoxCover& a, const BoxCover& b);
BoxCover set_union(const BoxCover& a, const BoxCover& b);
BoxCover set_intersection(const BoxCover& a, const BoxCover& b);
BoxCover negate(const BoxCover& cover);

/// Outer cover of { x + y : x in a, y in b }. Covers at different levels are
/// brought to the finer level first.
BoxCover minkowski_sum(const BoxCover& a, const BoxCover& b);

/// Outer cover of the image of every cell under z -> M z + c.
BoxCover affine_image(const BoxCover& cover, const Matrix& M, const Vector& c, int out_level);

/// Open strip { x : |rows x|_inf < 1 }.
struct Strip {
    Matrix rows;

    /// Strip on the first p coordinates of R^d.
    static Strip coordinate(int p, int d);
    int dim() const { return static_cast<int>(rows.cols()); }
};

enum class StripStatus { Inside, Outside, Boundary };

std::string to_string(StripStatus s);

struct StripClassification {
    StripStatus status = StripStatus::Inside;
    bool disjoint_from_open = true;  // no cell meets the open strip
    std::size_t inside = 0;
    std::size_t outside = 0;
    std::size_t boundary = 0;
};

/// Classification of one closed box against a strip.
StripStatus classify_box(const IntervalBox& box, const Strip& strip, bool* meets_open = nullptr);

/// Inside when every cell lies in the open strip, Boundary when some cell meets
/// the strip boundary, Outside otherwise.
StripClassification strip_predicate(const BoxCover& cover, const Strip& strip);
StripClassification strip_predicate(const BoxCover& cover, int p);

/// Cells of the cover that meet the open strip.
BoxCover cells_meeting_strip(const BoxCover& cover, const Strip& strip);

/// CSV: header "dim,level", then one comma-separated index row per cell.
void write_csv(std::ostream& os, const BoxCover& cover);
BoxCover read_csv(std::istream& is);

/// SVG 1.1 with one rect per distinct cell of the projection onto axes (i, j).
void write_svg(std::ostream& os, const BoxCover& cover, int axis_i, int axis_j, const std::string& title = {});

}  // namespace qinv
