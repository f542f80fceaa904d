// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/box_cover.hpp>
#include <qinv/system_model.hpp>

#include <cstddef>
#include <vector>

namespace qinv {

/// Smallest k with rho_k = max over words w of length k of ||M_w||_inf below one,
/// and the a-priori radius of a ball holding the attractor.
struct ContractionCertificate {
    int k = 1;
    double rho_k = 0.0;
    double partial_sum = 1.0;  // sum_{j<k} max ||M_w||_inf over words of length j
    double radius = 0.0;
    double max_norm = 0.0;     // max ||M||_inf over the maps
};

/// Throws NotContractive when no k up to max_power works.
ContractionCertificate contraction_certificate(const AffineIFS& ifs, int max_power = 64);

struct AttractorOptions {
    int max_iters = 1 << 20;
    std::size_t cell_budget = std::size_t{1} << 24;
    std::size_t coarse_cells = std::size_t{1} << 18;
};

struct AttractorApprox {
    BoxCover cover;
    double hausdorff_bound = 0.0;
    ContractionCertificate certificate;
    int iterations = 0;  // peeling rounds at the final level
};

/// Outer grid rounding of the union of the cell images under every map.
BoxCover hutchinson_step(const BoxCover& cover, const AffineIFS& ifs);

/// Cover X at the given level with hutchinson_step(X) == X that contains the
/// attractor. Coarse levels are solved first and refined.
AttractorApprox compute_attractor(const AffineIFS& ifs, int level, const AttractorOptions& opts = {});
AttractorApprox compute_attractor(const AffineIFS& ifs, int level, int max_iters);

/// Largest subset of cover that is a fixed point of the rounded Hutchinson
/// operator after closing it under images. Returns the number of peeling rounds.
int restrict_to_fixpoint(BoxCover& cover, const AffineIFS& ifs, const AttractorOptions& opts = {});

struct SeparationResult {
    std::vector<bool> separated;  // per map; false for maps that are not proper
    std::vector<bool> proper;
    int history = 0;
    std::size_t start_cells = 0;  // cells of the cover meeting the strip after the history steps

    bool all_proper_separated() const;
};

/// For every proper map f, checks that f maps the cells of cover meeting the
/// open strip, restricted to those with `history` preceding steps inside the
/// strip, to boxes disjoint from the open strip or from every cover cell that
/// meets the strip. By default a map is proper when its translate is nonzero.
SeparationResult separation_check(const BoxCover& cover, const AffineIFS& ifs, const Strip& strip, int history = 0,
                                  std::vector<bool> proper = {});

}  // namespace qinv
