// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include <qinv/analyzer.hpp>

#include <qinv/errors.hpp>
#include <qinv/exact_lp.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <unordered_map>

namespace qinv {

std::string to_string(Property p) {
    switch (p) {
        case Property::ULDI: return "ULDI";
        case Property::ULI: return "ULI";
        case Property::NotULDI: return "NotULDI";
        case Property::NotULI: return "NotULI";
        case Property::Inconclusive: return "Inconclusive";
    }
    return "?";
}

std::string to_string(CertificateKind c) {
    switch (c) {
        case CertificateKind::None: return "None";
        case CertificateKind::SeparationCert: return "SeparationCert";
        case CertificateKind::PathWitness: return "PathWitness";
        case CertificateKind::AttractorInStrip: return "AttractorInStrip";
        case CertificateKind::OneDRule: return "OneDRule";
        case CertificateKind::GraphProof: return "GraphProof";
        case CertificateKind::QSeparation: return "QSeparation";
        case CertificateKind::PeriodicCollision: return "PeriodicCollision";
        case CertificateKind::Implied: return "Implied";
    }
    return "?";
}

bool QuantizationSetQ::contains(const Vector& x, const Vector& xp) const {
    for (int i = 0; i < p; ++i)
        if (std::floor(x(i)) != std::floor(xp(i))) return false;
    return true;
}

bool QuantizationSetQ::may_meet(const IntervalBox& a, const IntervalBox& b) const {
    for (int i = 0; i < p; ++i) {
        // Closed boxes: floors reachable in a are floor(lo)..floor(hi).
        if (std::floor(a.hi(i)) < std::floor(b.lo(i)) || std::floor(b.hi(i)) < std::floor(a.lo(i))) return false;
    }
    return true;
}

bool QuantizationSetQ::contains_all(const IntervalBox& a, const IntervalBox& b) const {
    for (int i = 0; i < p; ++i) {
        const double f = std::floor(a.lo(i));
        if (std::floor(a.hi(i)) != f || std::floor(b.lo(i)) != f || std::floor(b.hi(i)) != f) return false;
    }
    return true;
}

namespace {

QuantizedSystem canonical_of(const QuantizedSystem& sys) {
    sys.validate();
    return sys.is_canonical() ? sys : canonicalize(sys).system;
}

// Fixed point of the composition of the maps of word, applied in order.
Vector periodic_point(const AffineIFS& ifs, const std::vector<std::size_t>& word) {
    const int q = ifs.dim();
    Matrix M = Matrix::Identity(q, q);
    Vector c = Vector::Zero(q);
    for (std::size_t s : word) {
        const auto& f = ifs.maps.at(s);
        c = f.M * c + f.c;
        M = f.M * M;
    }
    const Matrix I = Matrix::Identity(q, q);
    return (I - M).fullPivLu().solve(c);
}

double spectral_radius(const Matrix& A) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A.cast<std::complex<double>>(), false);
    double r = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) r = std::max(r, std::abs(es.eigenvalues()(i)));
    return r;
}

Strip rows_strip(const Matrix& to_p, const std::vector<int>& rows) {
    Strip s;
    s.rows = Matrix(static_cast<Eigen::Index>(rows.size()), to_p.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) s.rows.row(static_cast<Eigen::Index>(i)) = to_p.row(rows[i]);
    return s;
}

std::vector<int> rows_without(const Matrix& other, int p) {
    std::vector<int> out;
    const double scale = 1.0 + (other.size() ? other.cwiseAbs().maxCoeff() : 0.0);
    for (int i = 0; i < p; ++i)
        if (other.cols() == 0 || other.row(i).cwiseAbs().maxCoeff() <= 1e-12 * scale) out.push_back(i);
    return out;
}

constexpr std::size_t kMinkowskiPairBudget = 4000000;

Verdict base_verdict(const AnalyzerOptions& opts) {
    Verdict v;
    v.resolution_level = opts.level;
    return v;
}

}  // namespace

SplitDynamics split_dynamics(const QuantizedSystem& canonical, double marginal_tol) {
    SplitDynamics sd;
    sd.diff = build_difference(canonical);
    sd.split = spectral_split(sd.diff.A, marginal_tol);
    const int p = canonical.p;
    const int dc = sd.split.dc();
    const int de = sd.split.de();
    if (dc > kMaxCoverDim || de > kMaxCoverDim)
        throw DimensionMismatch("factor dimension above " + std::to_string(kMaxCoverDim));
    const Matrix& A = sd.diff.A;
    const Matrix& B = sd.diff.B;
    const Matrix& Ec = sd.split.Ec_basis;
    const Matrix& Ee = sd.split.Ee_basis;
    if (dc > 0) {
        sd.Lc = sd.split.Lc();
        sd.c_forward = forward_ifs(sd.Lc * A * Ec, sd.Lc * B, sd.diff.diff_alphabet);
    }
    if (de > 0) {
        sd.Le = sd.split.Le();
        sd.e_forward = forward_ifs(sd.Le * A * Ee, sd.Le * B, sd.diff.diff_alphabet);
        sd.e_backward = build_inverse(sd.e_forward);
    }
    sd.c_to_p = Ec.topRows(p);
    sd.e_to_p = Ee.topRows(p);
    sd.J_c = dc > 0 ? rows_without(sd.e_to_p, p) : std::vector<int>{};
    sd.J_e = de > 0 ? rows_without(sd.c_to_p, p) : std::vector<int>{};
    return sd;
}

OrbitReplay replay_witness(const SplitDynamics& sd, const PathWitness& w) {
    OrbitReplay r;
    const auto seq = w.flattened();
    const std::size_t len = seq.size();
    const std::size_t zero = sd.diff.zero_index;
    const auto left = w.left_cycle.empty() ? std::vector<std::size_t>{zero} : w.left_cycle;
    const auto right = w.right_cycle.empty() ? std::vector<std::size_t>{zero} : w.right_cycle;
    const int d = static_cast<int>(sd.diff.A.rows());
    const int p = sd.diff.p;
    const int dc = sd.split.dc();
    const int de = sd.split.de();

    std::vector<Vector> xi(len + 1), eta(len + 1);
    if (dc > 0) {
        xi[0] = periodic_point(sd.c_forward, left);
        for (std::size_t t = 0; t < len; ++t) xi[t + 1] = step(sd.c_forward, xi[t], seq[t]);
    }
    if (de > 0) {
        eta[len] = periodic_point(sd.e_forward, right);
        for (std::size_t t = len; t-- > 0;) eta[t] = step(sd.e_backward, eta[t + 1], seq[t]);
    }
    r.states.resize(len + 1);
    for (std::size_t t = 0; t <= len; ++t) {
        Vector z = Vector::Zero(d);
        if (dc > 0) z += sd.split.Ec_basis * xi[t];
        if (de > 0) z += sd.split.Ee_basis * eta[t];
        r.states[t] = z;
    }
    for (std::size_t t = 0; t < len; ++t) r.inputs.push_back(sd.diff.diff_alphabet[seq[t]]);

    double worst = 0.0;
    const std::size_t end = std::min(w.check_end, len);
    for (std::size_t t = w.check_begin; t <= end; ++t)
        worst = std::max(worst, r.states[t].head(p).cwiseAbs().maxCoeff());
    double residual = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
        const Vector next = sd.diff.A * r.states[t] + sd.diff.B * r.inputs[t];
        residual = std::max(residual, (next - r.states[t + 1]).cwiseAbs().maxCoeff() /
                                          (1.0 + r.states[t + 1].cwiseAbs().maxCoeff()));
    }
    const bool has_proper = w.proper_position < w.middle.size() && w.middle[w.proper_position] != zero;
    r.margin = 1.0 - worst;
    r.ok = worst <= 1.0 + 1e-9 && residual <= 1e-8 && has_proper;
    return r;
}

UldiSetup prepare_uldi(const QuantizedSystem& canonical, const AnalyzerOptions& opts) {
    UldiSetup st;
    st.sd = split_dynamics(canonical, opts.marginal_tol);
    AttractorOptions ao;
    ao.cell_budget = opts.cell_budget;
    if (st.sd.split.dc() > 0) st.Tc = compute_attractor(st.sd.c_forward, opts.level, ao);
    if (st.sd.split.de() > 0) st.Te = compute_attractor(st.sd.e_backward, opts.level, ao);
    if (st.Tc) st.model.factors.push_back({st.sd.c_forward, st.Tc->cover, st.sd.c_to_p, false});
    if (st.Te) st.model.factors.push_back({st.sd.e_backward, st.Te->cover, st.sd.e_to_p, true});
    st.model.num_symbols = st.sd.diff.diff_alphabet.size();
    st.model.zero_symbol = st.sd.diff.zero_index;
    st.model.strip_rows = canonical.p;
    st.model.level = opts.level;
    return st;
}

HistoryCheck history_polytope_check(const DifferenceSystem& diff, int h, std::size_t program_budget) {
    HistoryCheck out;
    const int d = static_cast<int>(diff.A.rows());
    const int p = diff.p;
    const std::size_t ns = diff.diff_alphabet.size();
    out.symbols.assign(ns, true);
    out.symbols[diff.zero_index] = false;

    std::size_t words = 1;
    for (int j = 0; j < h; ++j) {
        words *= ns;
        if (words * 2 * static_cast<std::size_t>(p) > program_budget) {
            out.within_budget = false;
            out.symbols.assign(ns, false);
            return out;
        }
    }
    out.words = words;

    using RVec = std::vector<Rational>;
    auto mat = [&](const Matrix& M) {
        RationalMatrix R(M.rows(), RVec(M.cols()));
        for (Eigen::Index i = 0; i < M.rows(); ++i)
            for (Eigen::Index j = 0; j < M.cols(); ++j) R[i][j] = Rational(M(i, j));
        return R;
    };
    auto mul = [&](const RationalMatrix& X, const RationalMatrix& Y) {
        RationalMatrix Z(X.size(), RVec(Y[0].size(), Rational(0)));
        for (std::size_t i = 0; i < X.size(); ++i)
            for (std::size_t k = 0; k < Y.size(); ++k)
                if (sgn(X[i][k]) != 0)
                    for (std::size_t j = 0; j < Y[0].size(); ++j) Z[i][j] += X[i][k] * Y[k][j];
        return Z;
    };
    auto apply = [&](const RationalMatrix& X, const RVec& v) {
        RVec r(X.size(), Rational(0));
        for (std::size_t i = 0; i < X.size(); ++i)
            for (std::size_t j = 0; j < v.size(); ++j) r[i] += X[i][j] * v[j];
        return r;
    };

    const RationalMatrix A = mat(diff.A);
    const RationalMatrix B = mat(diff.B);
    std::vector<RVec> Bw(ns);
    for (std::size_t s = 0; s < ns; ++s) {
        RVec w(diff.diff_alphabet[s].size());
        for (std::size_t j = 0; j < w.size(); ++j) w[j] = Rational(diff.diff_alphabet[s](j));
        Bw[s] = apply(B, w);
    }
    std::vector<RationalMatrix> P(h + 2);
    P[0] = RationalMatrix(d, RVec(d, Rational(0)));
    for (int i = 0; i < d; ++i) P[0][i][i] = 1;
    for (int j = 1; j <= h + 1; ++j) P[j] = mul(A, P[j - 1]);

    std::vector<std::size_t> word(h, 0);
    for (std::size_t wi = 0; wi < words; ++wi) {
        std::size_t rest = wi;
        for (int j = 0; j < h; ++j) {
            word[j] = rest % ns;
            rest /= ns;
        }
        // z(j) = P[j] z + o_j for the free start state z.
        RationalMatrix G;
        RVec rhs;
        RVec o(d, Rational(0));
        for (int j = 0; j <= h; ++j) {
            if (j > 0) {
                o = apply(A, o);
                for (int i = 0; i < d; ++i) o[i] += Bw[word[j - 1]][i];
            }
            for (int i = 0; i < p; ++i) {
                RVec neg(d);
                for (int c = 0; c < d; ++c) neg[c] = -P[j][i][c];
                G.push_back(P[j][i]);
                rhs.push_back(1 - o[i]);
                G.push_back(std::move(neg));
                rhs.push_back(1 + o[i]);
            }
        }
        const RVec base = apply(A, o);
        std::vector<std::optional<Rational>> lo(p), hi(p);
        bool empty = false;
        for (int i = 0; i < p && !empty; ++i) {
            const LpResult up = lp_maximize(G, rhs, P[h + 1][i]);
            ++out.programs;
            if (up.status == LpStatus::Infeasible) {
                empty = true;
                break;
            }
            if (up.status == LpStatus::Optimal) hi[i] = up.value;
            RVec neg(d);
            for (int c = 0; c < d; ++c) neg[c] = -P[h + 1][i][c];
            const LpResult down = lp_maximize(G, rhs, neg);
            ++out.programs;
            if (down.status == LpStatus::Optimal) lo[i] = -down.value;
        }
        if (empty) continue;
        for (std::size_t s = 0; s < ns; ++s) {
            if (!out.symbols[s]) continue;
            bool exits = false;
            for (int i = 0; i < p && !exits; ++i) {
                const Rational k = base[i] + Bw[s][i];
                exits = (hi[i] && k + *hi[i] <= -1) || (lo[i] && k + *lo[i] >= 1);
            }
            if (!exits) out.symbols[s] = false;
        }
    }
    out.separated = true;
    for (std::size_t s = 0; s < ns; ++s)
        if (s != diff.zero_index && !out.symbols[s]) out.separated = false;
    return out;
}

Verdict decide_uldi(const QuantizedSystem& sys, int level) {
    AnalyzerOptions o;
    o.level = level;
    return decide_uldi(sys, o);
}

Verdict decide_uldi(const QuantizedSystem& sys, const AnalyzerOptions& opts) {
    const QuantizedSystem canon = canonical_of(sys);
    Verdict v = base_verdict(opts);
    const int p = canon.p;

    const DifferenceSystem diff = build_difference(canon);
    if (diff.diff_alphabet.size() == 1) {
        v.property = Property::ULDI;
        v.steps_k = 1;
        v.waiting_l = 0;
        v.certificate = CertificateKind::SeparationCert;
        v.rule = "single-input";
        v.note = "one input symbol: no pair of distinct input sequences exists";
        return v;
    }
    const SubspaceChain chain = invariant_subspace_in_kernel(diff.A, p);
    if (chain.has_invariant_subspace)
        throw UnboundedTrap("A has an invariant subspace of dimension " + std::to_string(chain.dims.back()) +
                            " inside the unquantized coordinates");

    // Exact separation on the whole difference system; needs no attractor.
    for (int h = 0; h <= opts.max_history; ++h) {
        const HistoryCheck hc = history_polytope_check(diff, h);
        if (hc.separated) {
            v.property = Property::ULDI;
            v.steps_k = 1;
            v.waiting_l = h;
            v.certificate = CertificateKind::SeparationCert;
            v.factor = "joint";
            v.history = h;
            v.separated = hc.symbols;
            v.rule = "history-polytope";
            return v;
        }
    }

    const UldiSetup setup = prepare_uldi(canon, opts);
    const SplitDynamics& sd = setup.sd;
    const std::optional<AttractorApprox>& Tc = setup.Tc;
    const std::optional<AttractorApprox>& Te = setup.Te;

    // Projection of T = Tc + Te onto the quantized coordinates.
    // Coordinatewise ranges of a Minkowski sum are sums of ranges, so the hull
    // decides Inside exactly; the cell-level sum is only formed when small.
    StripClassification whole;
    {
        std::optional<BoxCover> pc, pe;
        if (Tc) pc = affine_image(Tc->cover, sd.c_to_p, Vector::Zero(p), opts.level);
        if (Te) pe = affine_image(Te->cover, sd.e_to_p, Vector::Zero(p), opts.level);
        IntervalBox hull = pc ? pc->hull() : pe->hull();
        if (pc && pe) {
            const IntervalBox he = pe->hull();
            for (int i = 0; i < p; ++i) {
                hull.lo(i) = rounding::add_down(hull.lo(i), he.lo(i));
                hull.hi(i) = rounding::add_up(hull.hi(i), he.hi(i));
            }
        }
        const bool inside = ((hull.lo.array() > -1.0) && (hull.hi.array() < 1.0)).all();
        const bool apart = ((hull.lo.array() >= 1.0) || (hull.hi.array() <= -1.0)).any();
        v.cover_cells = (pc ? pc->size() : 0) + (pe ? pe->size() : 0);
        if (inside) {
            whole.status = StripStatus::Inside;
            whole.disjoint_from_open = false;
        } else if (apart) {
            whole.status = StripStatus::Outside;
            whole.disjoint_from_open = true;
        } else if (!(pc && pe) || pc->size() * pe->size() <= kMinkowskiPairBudget) {
            const BoxCover proj = pc && pe ? minkowski_sum(*pc, *pe) : pc ? *pc : *pe;
            whole = strip_predicate(proj, p);
            v.cover_cells = proj.size();
        } else {
            whole.status = StripStatus::Boundary;
            whole.disjoint_from_open = false;
        }
    }
    const std::vector<bool> proper = [&] {
        std::vector<bool> pr(diff.diff_alphabet.size(), true);
        pr[diff.zero_index] = false;
        return pr;
    }();

    if (whole.status == StripStatus::Inside) {
        // Every bi-infinite orbit stays in the strip; a constant nonzero input is a witness.
        const std::size_t s = diff.zero_index + 1 < diff.diff_alphabet.size() ? diff.zero_index + 1 : 0;
        PathWitness w;
        w.left_cycle = {s};
        w.middle = {s};
        w.right_cycle = {s};
        w.proper_position = 0;
        w.check_begin = 0;
        w.check_end = 3;
        v.property = Property::NotULDI;
        v.certificate = CertificateKind::AttractorInStrip;
        v.rule = "attractor-in-strip";
        v.witness = w;
        v.witness_word = w.flattened();
        v.replay = replay_witness(sd, w);
        return v;
    }
    if (whole.disjoint_from_open) {
        v.property = Property::ULDI;
        v.steps_k = 1;
        v.waiting_l = 0;
        v.certificate = CertificateKind::SeparationCert;
        v.factor = "joint";
        v.rule = "attractor-outside-strip";
        return v;
    }

    // Map-by-map separation on one factor, with growing strip history.
    for (int h = 0; h <= opts.max_history; ++h) {
        if (Tc && !sd.J_c.empty()) {
            const SeparationResult r =
                separation_check(Tc->cover, sd.c_forward, rows_strip(sd.c_to_p, sd.J_c), h, proper);
            if (r.all_proper_separated()) {
                v.property = Property::ULDI;
                v.steps_k = 1;
                v.waiting_l = h;
                v.certificate = CertificateKind::SeparationCert;
                v.factor = "contractive";
                v.history = h;
                v.separated = r.separated;
                v.rule = "separation";
                return v;
            }
        }
        if (Te && !sd.J_e.empty()) {
            const SeparationResult r =
                separation_check(Te->cover, sd.e_backward, rows_strip(sd.e_to_p, sd.J_e), h, proper);
            if (r.all_proper_separated()) {
                v.property = Property::ULDI;
                v.steps_k = h + 1;
                v.waiting_l = 0;
                v.certificate = CertificateKind::SeparationCert;
                v.factor = "expansive";
                v.history = h;
                v.separated = r.separated;
                v.rule = "separation";
                return v;
            }
        }
    }

    const PieceModel& model = setup.model;

    for (int k = 0; k <= opts.k_max; ++k) {
        InvGraph g;
        try {
            g = build_graph(model, k, opts.vertex_budget);
        } catch (const BudgetExceeded& e) {
            if (k == 0) throw;
            v.note = std::string("graph depth ") + std::to_string(k) + " exceeds the vertex budget";
            v.graph_depth = k - 1;
            return v;
        }
        const PruneResult in = prune_internal(g, opts.strict_boundary);
        if (in.inconclusive) {
            v.note = "a piece meets the strip boundary at depth " + std::to_string(k);
            v.graph_depth = k;
            return v;
        }
        const LongPathResult inside = has_arbitrarily_long_proper_paths(in.graph);
        if (inside.found && inside.witness) {
            OrbitReplay rep = replay_witness(sd, *inside.witness);
            if (rep.ok) {
                v.property = Property::NotULDI;
                v.certificate = CertificateKind::PathWitness;
                v.rule = "graph-cycle";
                v.witness = inside.witness;
                v.witness_word = inside.witness->flattened();
                v.replay = std::move(rep);
                v.graph_depth = k;
                return v;
            }
            v.note = "witness at depth " + std::to_string(k) + " failed replay";
        }
        const InvGraph maybe = prune_outside(g);
        if (!has_arbitrarily_long_proper_paths(maybe).found) {
            const StepsProfile prof = steps_profile(maybe);
            v.property = Property::ULDI;
            v.steps_k = prof.best_steps;
            v.waiting_l = prof.best_waiting;
            v.certificate = CertificateKind::GraphProof;
            v.rule = "graph-no-long-proper-paths";
            v.graph_depth = k;
            v.steps_profile = prof.steps;
            return v;
        }
    }
    v.graph_depth = opts.k_max;
    if (v.note.empty())
        v.note = "pieces meeting the strip boundary keep long proper paths alive up to depth " +
                 std::to_string(opts.k_max) + "; try a finer level";
    return v;
}

namespace {

struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const noexcept {
        std::uint64_t h = 14695981039346656037ULL;
        for (auto x : k) {
            h ^= static_cast<std::uint64_t>(x);
            h *= 1099511628211ULL;
        }
        return static_cast<std::size_t>(h);
    }
};

// Box whose ends may be open. Quantization cells are half-open, so a cover
// cell ending on an integer must not be charged with the next output value.
struct OBox {
    IntervalBox box;
    std::vector<std::uint8_t> lo_open, hi_open;
};

// An end of the image is open when some contributing end is open. Outward
// rounding only moves ends away from the set, which keeps this sound.
OBox affine_image(const AffineMap& f, const OBox& x) {
    OBox y{affine_image(f.M, f.c, x.box), {}, {}};
    const Eigen::Index rows = f.M.rows();
    y.lo_open.assign(static_cast<std::size_t>(rows), 0);
    y.hi_open.assign(static_cast<std::size_t>(rows), 0);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < f.M.cols(); ++j) {
            const double m = f.M(i, j);
            if (m == 0.0) continue;
            const auto J = static_cast<std::size_t>(j);
            const auto I = static_cast<std::size_t>(i);
            y.lo_open[I] |= m > 0.0 ? x.lo_open[J] : x.hi_open[J];
            y.hi_open[I] |= m > 0.0 ? x.hi_open[J] : x.lo_open[J];
        }
    return y;
}

// Output floors of the first p coordinates.
void floor_ranges(const OBox& b, int p, std::vector<std::pair<std::int64_t, std::int64_t>>& out) {
    for (int i = 0; i < p; ++i) {
        const double hi = b.box.hi(i);
        double top = std::floor(hi);
        if (b.hi_open[static_cast<std::size_t>(i)] && top == hi) top -= 1.0;
        out.emplace_back(static_cast<std::int64_t>(std::floor(b.box.lo(i))), static_cast<std::int64_t>(top));
    }
}

// Pieces of a closed cell: for every quantized coordinate whose upper face
// lies on an integer, the half-open body and the face itself.
std::vector<OBox> cell_pieces(const IntervalBox& cell, int p) {
    const auto d = static_cast<std::size_t>(cell.dim());
    std::vector<OBox> out{{cell, std::vector<std::uint8_t>(d, 0), std::vector<std::uint8_t>(d, 0)}};
    for (int i = 0; i < p; ++i) {
        const double top = cell.hi(i);
        if (std::floor(top) != top) continue;
        std::vector<OBox> next;
        for (OBox b : out) {
            OBox face = b;
            face.box.lo(i) = top;
            b.hi_open[static_cast<std::size_t>(i)] = 1;
            next.push_back(std::move(b));
            next.push_back(std::move(face));
        }
        out = std::move(next);
    }
    return out;
}

enum class QCheck { Separated, Collides, Budget };

// Tuples (y(0), y(1), ..., y(k)) reachable from attractor cells under words
// of length k; a tuple shared by words with different first symbols is a
// possible k-step confusion.
QCheck q_check(const BoxCover& H, const AffineIFS& ifs, int p, int k, std::size_t budget) {
    std::unordered_map<std::vector<std::int64_t>, std::size_t, KeyHash> seen;
    std::size_t count = 0;
    std::vector<std::pair<std::int64_t, std::int64_t>> ranges;
    bool collide = false;
    bool over = false;

    std::function<void(const OBox&, int, std::size_t)> rec = [&](const OBox& box, int depth, std::size_t first) {
        if (collide || over) return;
        if (depth == k) {
            std::vector<std::int64_t> key(ranges.size());
            for (std::size_t i = 0; i < ranges.size(); ++i) key[i] = ranges[i].first;
            while (true) {
                if (++count > budget) {
                    over = true;
                    return;
                }
                auto [it, inserted] = seen.emplace(key, first);
                if (!inserted && it->second != first) {
                    collide = true;
                    return;
                }
                std::size_t i = 0;
                for (; i < key.size(); ++i) {
                    if (++key[i] <= ranges[i].second) break;
                    key[i] = ranges[i].first;
                }
                if (i == key.size()) break;
            }
            return;
        }
        for (std::size_t s = 0; s < ifs.size(); ++s) {
            const OBox next = affine_image(ifs.maps[s], box);
            const std::size_t mark = ranges.size();
            floor_ranges(next, p, ranges);
            rec(next, depth + 1, depth == 0 ? s : first);
            ranges.resize(mark);
        }
    };
    for (const Cell& c : H.cells) {
        for (const OBox& b : cell_pieces(H.cell_box(c), p)) {
            ranges.clear();
            floor_ranges(b, p, ranges);
            rec(b, 0, 0);
            if (collide) return QCheck::Collides;
            if (over) return QCheck::Budget;
        }
    }
    return QCheck::Separated;
}

double grid_distance(const Vector& x, int p) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < p; ++i) {
        const double f = x(i) - std::floor(x(i));
        m = std::min(m, std::min(f, 1.0 - f));
    }
    return m;
}

struct Periodic {
    std::vector<std::size_t> word;
    std::vector<Vector> orbit;
    double margin = 0.0;
};

// Two distinct periodic input words whose periodic orbits have the same
// output at every phase, with all outputs away from the grid lines.
std::optional<std::pair<Periodic, Periodic>> periodic_collision(const AffineIFS& ifs, int p, int max_period) {
    const std::size_t n = ifs.size();
    for (int L = 1; L <= max_period; ++L) {
        std::size_t total = 1;
        for (int i = 0; i < L; ++i) total *= n;
        std::map<std::vector<std::int64_t>, Periodic> by_sig;
        for (std::size_t idx = 0; idx < total; ++idx) {
            Periodic per;
            per.word.resize(static_cast<std::size_t>(L));
            for (int i = L - 1, r = static_cast<int>(idx); i >= 0; --i) {
                per.word[static_cast<std::size_t>(i)] = static_cast<std::size_t>(r) % n;
                r /= static_cast<int>(n);
            }
            Vector x = periodic_point(ifs, per.word);
            per.margin = std::numeric_limits<double>::infinity();
            std::vector<std::int64_t> sig;
            for (int t = 0; t < L; ++t) {
                per.orbit.push_back(x);
                per.margin = std::min(per.margin, grid_distance(x, p));
                for (int i = 0; i < p; ++i) sig.push_back(static_cast<std::int64_t>(std::floor(x(i))));
                x = step(ifs, x, per.word[static_cast<std::size_t>(t)]);
            }
            if (!(per.margin > 1e-9)) continue;
            auto it = by_sig.find(sig);
            if (it != by_sig.end()) return std::make_pair(it->second, per);
            by_sig.emplace(std::move(sig), std::move(per));
        }
    }
    return std::nullopt;
}

}  // namespace

Verdict decide_uli_contractive(const QuantizedSystem& sys, int level) {
    AnalyzerOptions o;
    o.level = level;
    return decide_uli_contractive(sys, o);
}

Verdict decide_uli_contractive(const QuantizedSystem& sys, const AnalyzerOptions& opts) {
    const QuantizedSystem canon = canonical_of(sys);
    const double rho = spectral_radius(canon.A);
    if (!(rho < 1.0)) throw NotContractive("spectral radius " + std::to_string(rho) + " is not below 1");
    Verdict v = base_verdict(opts);
    if (canon.alphabet.size() == 1) {
        v.property = Property::ULI;
        v.steps_k = 1;
        v.waiting_l = 0;
        v.certificate = CertificateKind::QSeparation;
        v.rule = "single-input";
        return v;
    }
    const AffineIFS ifs = forward_ifs(canon.A, canon.B, canon.alphabet);
    AttractorOptions ao;
    ao.cell_budget = opts.cell_budget;
    const AttractorApprox H = compute_attractor(ifs, opts.level, ao);
    v.cover_cells = H.cover.size();

    bool budget_hit = false;
    for (int k = 1; k <= opts.uli_k_max; ++k) {
        const QCheck r = q_check(H.cover, ifs, canon.p, k, 20000000);
        if (r == QCheck::Separated) {
            v.property = Property::ULI;
            v.steps_k = k;
            v.waiting_l = 0;
            v.certificate = CertificateKind::QSeparation;
            v.rule = "q-separation";
            return v;
        }
        if (r == QCheck::Budget) {
            budget_hit = true;
            break;
        }
    }
    if (auto col = periodic_collision(ifs, canon.p, opts.collision_period_max)) {
        v.property = Property::NotULI;
        v.certificate = CertificateKind::PeriodicCollision;
        v.rule = "periodic-collision";
        v.witness_word = col->first.word;
        v.partner_word = col->second.word;
        v.replay.states = col->first.orbit;
        v.replay.partner_states = col->second.orbit;
        for (std::size_t s : col->first.word) v.replay.inputs.push_back(canon.alphabet[s]);
        v.replay.margin = std::min(col->first.margin, col->second.margin);
        v.replay.ok = true;
        return v;
    }
    v.note = budget_hit ? "output window enumeration exceeded its budget"
                        : "no separation up to " + std::to_string(opts.uli_k_max) +
                              " steps and no periodic collision found";
    return v;
}

OneDResult classify_1d(double a, const std::vector<double>& alphabet, const AnalyzerOptions& opts) {
    std::vector<double> U = alphabet;
    std::sort(U.begin(), U.end());
    U.erase(std::unique(U.begin(), U.end()), U.end());
    if (U.empty()) throw InvalidSystem("empty alphabet");
    OneDResult res;
    res.uldi = base_verdict(opts);
    res.uli = base_verdict(opts);
    res.uldi.certificate = CertificateKind::OneDRule;
    res.uli.certificate = CertificateKind::OneDRule;
    const double aa = std::fabs(a);

    if (U.size() == 1) {
        res.rule = "single-input";
        for (Verdict* v : {&res.uldi, &res.uli}) {
            v->steps_k = 1;
            v->waiting_l = 0;
            v->rule = res.rule;
        }
        res.uldi.property = Property::ULDI;
        res.uli.property = Property::ULI;
        return res;
    }

    // Differences, sorted and deduplicated; the smallest positive one is min |u - u'|.
    std::vector<double> V;
    for (double u : U)
        for (double w : U) V.push_back(u - w);
    std::sort(V.begin(), V.end());
    V.erase(std::unique(V.begin(), V.end()), V.end());
    // Branch tests compare the exact rational values of the doubles, so a
    // difference rounded onto |a| + 1 cannot flip a verdict.
    const Rational a_abs(aa);
    const Rational a_abs_plus_one = a_abs + 1;
    Rational min_diff(0);
    double bad = 0.0;
    for (std::size_t i = 0; i < U.size(); ++i)
        for (std::size_t j = 0; j < i; ++j) {
            const Rational diff = Rational(U[i]) - Rational(U[j]);
            if (min_diff == 0 || diff < min_diff) min_diff = diff;
            // ULDI holds in one step exactly when every nonzero difference clears |a| + 1.
            if (diff < a_abs_plus_one && (bad == 0.0 || U[i] - U[j] < bad)) bad = U[i] - U[j];
        }

    res.uldi.rule = "one-step-test";
    if (bad == 0.0) {
        res.uldi.property = Property::ULDI;
        res.uldi.steps_k = 1;
        res.uldi.waiting_l = 0;
    } else {
        res.uldi.property = Property::NotULDI;
        const auto idx = [&](double x) {
            return static_cast<std::size_t>(std::lower_bound(V.begin(), V.end(), x) - V.begin());
        };
        PathWitness w;
        if (a > 0) {
            const double x1 = -bad / (a + 1.0);
            const double x2 = bad / (a + 1.0);
            w.left_cycle = {idx(bad), idx(-bad)};
            res.uldi.replay.states = {Vector::Constant(1, x1), Vector::Constant(1, x2), Vector::Constant(1, x1)};
            res.uldi.replay.inputs = {Vector::Constant(1, bad), Vector::Constant(1, -bad)};
        } else {
            const double x = bad / (1.0 - a);
            w.left_cycle = {idx(bad)};
            res.uldi.replay.states = {Vector::Constant(1, x), Vector::Constant(1, x)};
            res.uldi.replay.inputs = {Vector::Constant(1, bad)};
        }
        w.middle = w.left_cycle;
        w.right_cycle = w.left_cycle;
        w.check_begin = 0;
        w.check_end = 3 * w.left_cycle.size();
        res.uldi.witness = w;
        res.uldi.witness_word = w.left_cycle;
        double worst = 0.0;
        double residual = 0.0;
        for (std::size_t t = 0; t < res.uldi.replay.inputs.size(); ++t) {
            worst = std::max(worst, std::fabs(res.uldi.replay.states[t](0)));
            residual = std::max(residual, std::fabs(a * res.uldi.replay.states[t](0) + res.uldi.replay.inputs[t](0) -
                                                    res.uldi.replay.states[t + 1](0)));
        }
        res.uldi.replay.margin = 1.0 - worst;
        res.uldi.replay.ok = worst < 1.0 && residual <= 1e-12 * (1.0 + bad);
        if (!res.uldi.replay.ok) {
            res.uldi.property = Property::Inconclusive;
            res.uldi.note = "the bounded orbit lies within rounding of the strip boundary";
        }
    }

    auto set_uli = [&](Property p, std::optional<int> k) {
        res.uli.property = p;
        res.uli.steps_k = k;
        res.uli.waiting_l = k ? std::optional<int>(0) : std::nullopt;
        res.uli.rule = res.rule;
    };
    if (aa < 1.0) {
        res.rule = "contractive";
        const QuantizedSystem sys = [&] {
            std::vector<Vector> alpha;
            for (double u : U) alpha.push_back(Vector::Constant(1, u));
            return make_system(Matrix::Constant(1, 1, a), Matrix::Constant(1, 1, 1.0), alpha, 1);
        }();
        res.uli = decide_uli_contractive(sys, opts);
        res.uli.rule = res.uli.rule.empty() ? res.rule : res.rule + "/" + res.uli.rule;
    } else if (aa > 2.0 && min_diff < a_abs) {
        res.rule = "expansive-close-inputs";
        set_uli(Property::NotULI, std::nullopt);
    } else if (min_diff > a_abs_plus_one) {
        res.rule = "separated-inputs";
        set_uli(Property::ULI, 1);
    } else {
        res.rule = "star";
        if (opts.assume_transcendental && res.uldi.decided()) {
            set_uli(res.uldi.property == Property::ULDI ? Property::ULI : Property::NotULI,
                    res.uldi.property == Property::ULDI ? std::optional<int>(1) : std::nullopt);
            res.uli.independence_assumed = true;
        } else {
            set_uli(Property::Inconclusive, std::nullopt);
            res.uli.note = res.uldi.decided() ? "ULI equals the ULDI verdict only for transcendental a"
                                              : "the scalar ULDI verdict is inconclusive";
        }
    }
    return res;
}

OracleReport brute_force_oracle(const QuantizedSystem& sys, int depth, int grid_density) {
    OracleOptions o;
    o.depth = depth;
    o.grid_density = grid_density;
    return brute_force_oracle(sys, o);
}

OracleReport brute_force_oracle(const QuantizedSystem& sys, const OracleOptions& opts) {
    const QuantizedSystem canon = canonical_of(sys);
    const int d = canon.d();
    const int p = canon.p;
    if (d > 2) throw DimensionMismatch("oracle needs d <= 2");
    if (opts.depth < 1 || opts.depth > 14) throw InvalidSystem("oracle depth must be in 1..14");
    if (opts.grid_density < 1) throw InvalidSystem("grid density must be positive");
    const AffineIFS ifs = forward_ifs(canon.A, canon.B, canon.alphabet);
    const std::size_t n = ifs.size();
    // Coarser grids in the plane keep the pair count manageable.
    const double dens = d == 1 ? opts.grid_density : std::max(4, opts.grid_density / 4);

    std::vector<Vector> init;
    bool sampled = false;
    if (spectral_radius(canon.A) < 1.0) {
        // Points of the attractor, one per grid bin.
        std::mt19937_64 rng(opts.seed);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        Vector x = periodic_point(ifs, {0});
        std::set<std::vector<std::int64_t>> bins;
        for (std::size_t i = 0; i < opts.samples + 50; ++i) {
            x = step(ifs, x, pick(rng));
            if (i < 50) continue;
            std::vector<std::int64_t> key(static_cast<std::size_t>(d));
            for (int j = 0; j < d; ++j) key[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(std::floor(x(j) * dens));
            if (bins.insert(key).second) init.push_back(x);
        }
        std::sort(init.begin(), init.end(), lex_less);
        sampled = true;
    } else {
        // Grid over a box holding every bounded orbit, inflated by one.
        const SpectralSplit sp = spectral_split(canon.A);
        IntervalBox hull{Vector::Zero(d), Vector::Zero(d)};
        auto add_factor = [&](const Matrix& basis, const Matrix& L, bool backward) {
            const AffineIFS f = forward_ifs(L * canon.A * basis, L * canon.B, canon.alphabet);
            const AttractorApprox att = compute_attractor(backward ? build_inverse(f) : f, 6);
            const IntervalBox img = linear_image(basis, att.cover.hull());
            hull.lo += img.lo;
            hull.hi += img.hi;
        };
        if (sp.dc() > 0) add_factor(sp.Ec_basis, sp.Lc(), false);
        if (sp.de() > 0) add_factor(sp.Ee_basis, sp.Le(), true);
        hull.lo.array() -= 1.0;
        hull.hi.array() += 1.0;
        std::vector<std::int64_t> lo(static_cast<std::size_t>(d)), cnt(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            lo[static_cast<std::size_t>(j)] = static_cast<std::int64_t>(std::floor(hull.lo(j) * dens));
            cnt[static_cast<std::size_t>(j)] =
                static_cast<std::int64_t>(std::ceil(hull.hi(j) * dens)) - lo[static_cast<std::size_t>(j)] + 1;
        }
        std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
        while (true) {
            Vector x(d);
            for (int j = 0; j < d; ++j)
                x(j) = static_cast<double>(lo[static_cast<std::size_t>(j)] + idx[static_cast<std::size_t>(j)]) / dens;
            init.push_back(x);
            int j = 0;
            for (; j < d; ++j) {
                if (++idx[static_cast<std::size_t>(j)] < cnt[static_cast<std::size_t>(j)]) break;
                idx[static_cast<std::size_t>(j)] = 0;
            }
            if (j == d) break;
        }
    }

    OracleReport rep;
    rep.depth = opts.depth;
    bool found = false;
    std::vector<std::size_t> wa, wb;
    std::function<bool(const Vector&, const Vector&, int)> dfs = [&](const Vector& x, const Vector& xp, int t) {
        if (++rep.nodes > opts.node_budget) throw BudgetExceeded("oracle node budget exhausted");
        rep.max_survival = std::max(rep.max_survival, t);
        if (t == opts.depth) return true;
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t up = 0; up < n; ++up) {
                if (t == 0 && u == up) continue;
                const Vector y = step(ifs, x, u);
                const Vector yp = step(ifs, xp, up);
                bool same = true;
                for (int i = 0; i < p && same; ++i) same = std::floor(y(i)) == std::floor(yp(i));
                if (!same) continue;
                wa.push_back(u);
                wb.push_back(up);
                if (dfs(y, yp, t + 1)) return true;
                wa.pop_back();
                wb.pop_back();
            }
        }
        return false;
    };
    // Partners share the quantization cell of x.
    for (const Vector& x : init) {
        std::vector<Vector> partners;
        if (sampled) {
            for (const Vector& y : init)
                if (QuantizationSetQ{d, p}.contains(x, y)) partners.push_back(y);
        } else {
            const int per = static_cast<int>(dens);
            for (const Vector& y : init) {
                bool same = true;
                for (int i = 0; i < p && same; ++i) same = std::floor(x(i)) == std::floor(y(i));
                if (!same) continue;
                // Offset partners half a grid step to avoid trivial x = x' pairs.
                Vector z = y;
                for (int i = 0; i < d; ++i) z(i) += 0.5 / per;
                for (int i = 0; i < p; ++i)
                    if (std::floor(z(i)) != std::floor(x(i))) same = false;
                if (same) partners.push_back(z);
            }
        }
        for (const Vector& xp : partners) {
            ++rep.initial_pairs;
            wa.clear();
            wb.clear();
            if (dfs(x, xp, 0)) {
                found = true;
                rep.x0 = x;
                rep.x0_partner = xp;
                rep.word = wa;
                rep.partner_word = wb;
                break;
            }
        }
        if (found) break;
    }
    rep.collision = found;
    rep.window = found ? opts.depth + 1 : rep.max_survival + 1;
    return rep;
}

bool is_square_free(long n) {
    if (n < 1) return false;
    for (long f = 2; f * f <= n; ++f)
        if (n % (f * f) == 0) return false;
    return true;
}

LWMatrix lw_matrix(int d, const std::vector<int>& exponents) {
    if (d < 1 || exponents.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d))
        throw DimensionMismatch("need d*d exponents");
    std::set<int> seen;
    for (int e : exponents) {
        if (!is_square_free(e)) throw NotSquareFree(std::to_string(e) + " is not a positive square-free integer");
        if (!seen.insert(e).second) throw RepeatedExponent("exponent " + std::to_string(e) + " repeats");
    }
    LWMatrix out;
    out.exponents = exponents;
    out.A = Matrix(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            out.A(i, j) = std::exp(std::sqrt(static_cast<double>(exponents[static_cast<std::size_t>(i * d + j)])));
    out.algebraic_independence = true;
    return out;
}

std::optional<double> kronecker_witness(const std::vector<double>& theta, const std::vector<double>& alphas,
                                        double eps, double lo, double hi, double step) {
    if (!(eps > 0.0) || !(step > 0.0)) throw InvalidSystem("eps and step must be positive");
    const bool with_unit = alphas.size() == theta.size() + 1;
    if (!with_unit && alphas.size() != theta.size()) throw DimensionMismatch("alphas must match theta, plus an optional offset");
    const std::size_t off = with_unit ? 1 : 0;
    auto frac = [](long double x) { return x - std::floor(x); };
    const long double L = lo;
    const long double S = step;
    for (long long i = 0;; ++i) {
        const long double l = L + static_cast<long double>(i) * S;
        if (l > static_cast<long double>(hi) + S * 1e-9L) break;
        bool ok = !with_unit || frac(static_cast<long double>(alphas[0]) + l) < eps;
        for (std::size_t j = 0; ok && j < theta.size(); ++j)
            ok = frac(static_cast<long double>(alphas[j + off]) + l * static_cast<long double>(theta[j])) < eps;
        if (ok) return static_cast<double>(l);
    }
    return std::nullopt;
}

Analysis analyze_system(const QuantizedSystem& sys, const AnalyzerOptions& opts) {
    Analysis an;
    sys.validate();
    const CanonicalForm cf = canonicalize(sys);
    an.canonical = cf.system;
    an.T = cf.T;
    an.split = spectral_split(an.canonical.A, opts.marginal_tol);
    an.uldi = decide_uldi(an.canonical, opts);

    if (an.canonical.d() == 1) {
        std::vector<double> U;
        for (const auto& u : an.canonical.alphabet) U.push_back((an.canonical.B * u)(0));
        AnalyzerOptions o = opts;
        o.assume_transcendental = opts.assume_transcendental || an.canonical.independent_entries;
        an.oned = classify_1d(an.canonical.A(0, 0), U, o);
    }

    an.uli = Verdict{};
    an.uli.resolution_level = opts.level;
    if (an.split->cls == SpectralClass::JointContractive) an.uli = decide_uli_contractive(an.canonical, opts);
    if (!an.uli.decided() && an.oned && an.oned->uli.decided()) an.uli = an.oned->uli;
    if (!an.uli.decided()) {
        if (an.uldi.property == Property::ULDI) {
            an.uli.property = Property::ULI;
            an.uli.steps_k = an.uldi.steps_k;
            an.uli.waiting_l = an.uldi.waiting_l;
            an.uli.certificate = CertificateKind::Implied;
            an.uli.rule = "implied-by-ULDI";
        } else if (an.canonical.independent_entries && an.uldi.property == Property::NotULDI) {
            an.uli.property = Property::NotULI;
            an.uli.certificate = CertificateKind::Implied;
            an.uli.independence_assumed = true;
            an.uli.rule = "equivalent-under-independence";
        } else {
            an.uli.note = "no ULI criterion applies; see the ULDI verdict";
        }
    }
    return an;
}

}  // namespace qinv
