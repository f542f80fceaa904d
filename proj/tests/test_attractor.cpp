#include <doctest.h>

#include <qinv/analyzer.hpp>
#include <qinv/attractor.hpp>
#include <qinv/errors.hpp>

#include <random>

using namespace qinv;

namespace {

AffineIFS scalar_ifs(double a, std::initializer_list<double> cs) {
    AffineIFS f;
    for (double c : cs) f.maps.push_back({Matrix::Constant(1, 1, a), Vector::Constant(1, c)});
    return f;
}

bool covered(const BoxCover& c, const Vector& x, double slack = 0.0) {
    for (const Cell& cell : c.cells) {
        IntervalBox b = c.cell_box(cell);
        b.lo.array() -= slack;
        b.hi.array() += slack;
        if (b.contains(x)) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("constant maps send any cover to the cells holding their values") {
    AffineIFS f;
    f.maps.push_back({Matrix::Zero(1, 1), Vector::Constant(1, 0.3)});
    const BoxCover c = cover_box({Vector::Constant(1, -5), Vector::Constant(1, 5)}, 3);
    const BoxCover img = hutchinson_step(c, f);
    CHECK(img.size() <= 2);
    CHECK(covered(img, Vector::Constant(1, 0.3)));
}

TEST_CASE("halving maps with translates 0 and +-1 fix [-2,2]") {
    const AffineIFS f = scalar_ifs(0.5, {-1, 0, 1});
    const AttractorApprox a = compute_attractor(f, 8);
    const IntervalBox h = a.cover.hull();
    CHECK(h.lo(0) <= -2.0);
    CHECK(h.hi(0) >= 2.0);
    CHECK(h.lo(0) >= -2.0 - a.cover.cell_width());
    CHECK(h.hi(0) <= 2.0 + a.cover.cell_width());
    CHECK(a.hausdorff_bound <= 2.0 * std::ldexp(1.0, -8) + 1e-12);
    CHECK(hutchinson_step(a.cover, f) == a.cover);
}

TEST_CASE("iterating z/2+1 shrinks toward 2") {
    const AffineIFS f = scalar_ifs(0.5, {1});
    BoxCover c = cover_box({Vector::Constant(1, 0), Vector::Constant(1, 1)}, 20);
    for (int i = 0; i < 20; ++i) c = hutchinson_step(c, f);
    const IntervalBox h = c.hull();
    CHECK(h.hi(0) - h.lo(0) <= std::ldexp(1.0, -18) + 4 * c.cell_width());
    CHECK(h.lo(0) <= 2.0);
    CHECK(h.hi(0) >= 2.0 - std::ldexp(1.0, -19));
}

TEST_CASE("single contraction concentrates at its fixed point") {
    const AttractorApprox a = compute_attractor(scalar_ifs(1.0 / 3.0, {2.0 / 3.0}), 8);
    CHECK(a.cover.size() <= 2);
    CHECK(covered(a.cover, Vector::Constant(1, 1.0)));
}

TEST_CASE("expanding maps are rejected") {
    CHECK_THROWS_AS(compute_attractor(scalar_ifs(1.5, {0, 1}), 6), NotContractive);
    CHECK_THROWS_AS(contraction_certificate(scalar_ifs(1.0, {0})), NotContractive);
}

TEST_CASE("non-normal contractions need a power") {
    AffineIFS f;
    Matrix M(2, 2);
    M << 0.5, 4, 0, 0.5;
    f.maps.push_back({M, Vector::Zero(2)});
    f.maps.push_back({M, Vector::Ones(2)});
    const ContractionCertificate cc = contraction_certificate(f);
    CHECK(cc.k > 1);
    CHECK(cc.rho_k < 1.0);
    const AttractorApprox a = compute_attractor(f, 5);
    CHECK(is_subset(hutchinson_step(a.cover, f), a.cover));
}

TEST_CASE("example 1 inverse difference attractor lies inside the strip") {
    const LWMatrix lw = lw_matrix(2, {5, 3, 2, 7});
    std::vector<Vector> alphabet;
    for (double u : {0.0, 1.0, -1.0, 2.0}) alphabet.push_back(Vector::Constant(1, u));
    const QuantizedSystem s = make_system(lw.A, Matrix::Ones(2, 1), alphabet, 1);
    const DifferenceSystem d = build_difference(s);
    const AttractorApprox a = compute_attractor(build_inverse(forward_ifs(d)), 8);
    for (const Cell& c : a.cover.cells) {
        const IntervalBox b = a.cover.cell_box(c);
        CHECK(b.lo(0) > -1.0);
        CHECK(b.hi(0) < 1.0);
    }
    CHECK(strip_predicate(a.cover, 1).status == StripStatus::Inside);
}

TEST_CASE("cover properties over random contractive systems") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(-1, 1);
    for (int inst = 0; inst < 40; ++inst) {
        const int d = 1 + inst % 2;
        Matrix A(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = 0.45 * U(rng);
        DifferenceSystem diff;
        diff.A = A;
        diff.B = Matrix::Ones(d, 1);
        const double u = 0.25 + std::abs(U(rng));
        diff.diff_alphabet = {Vector::Constant(1, -u), Vector::Constant(1, 0), Vector::Constant(1, u)};
        diff.zero_index = 1;
        const AffineIFS f = forward_ifs(diff);
        const int level = d == 1 ? 7 : 5;
        const AttractorApprox fine = compute_attractor(f, level);
        const AttractorApprox coarse = compute_attractor(f, level - 1);

        const BoxCover image = hutchinson_step(fine.cover, f);
        CHECK(is_subset(image, fine.cover));
        CHECK(image == fine.cover);
        CHECK(is_subset(coarsen(fine.cover, level - 1), coarse.cover));
        CHECK(negate(fine.cover) == fine.cover);

        // Truncated address maps land near the cover.
        std::uniform_int_distribution<std::size_t> pick(0, 2);
        for (int t = 0; t < 25; ++t) {
            Vector x = Vector::Zero(d);
            for (int k = 0; k < 30; ++k) x = step(f, x, pick(rng));
            CHECK(covered(fine.cover, x, fine.hausdorff_bound + fine.cover.cell_width()));
        }
    }
}

TEST_CASE("separation check") {
    // Example 2 contractive block with translates +-(3,6).
    Matrix Ac(2, 2);
    Ac << 0.5, 1, 0, 1.0 / 3.0;
    DifferenceSystem diff;
    diff.A = Ac;
    diff.B = (Matrix(2, 1) << 3, 6).finished();
    diff.diff_alphabet = {Vector::Constant(1, -1), Vector::Constant(1, 0), Vector::Constant(1, 1)};
    diff.zero_index = 1;
    const AffineIFS f = forward_ifs(diff);
    const AttractorApprox a = compute_attractor(f, 6);
    const SeparationResult r = separation_check(a.cover, f, Strip::coordinate(1, 2), 2);
    CHECK_FALSE(r.separated[1]);
    CHECK_FALSE(r.proper[1]);

    // a = 1/2, v = 1: the image of (-1,1) is (0.5,1.5), which meets the strip.
    const AffineIFS g = scalar_ifs(0.5, {-1, 0, 1});
    const AttractorApprox ag = compute_attractor(g, 8);
    const SeparationResult rg = separation_check(ag.cover, g, Strip::coordinate(1, 1));
    CHECK_FALSE(rg.separated[2]);
    CHECK_FALSE(rg.all_proper_separated());

    // Translates of size 3 push every strip point out.
    const AffineIFS far = scalar_ifs(0.5, {-3, 0, 3});
    const AttractorApprox af = compute_attractor(far, 8);
    const SeparationResult rf = separation_check(af.cover, far, Strip::coordinate(1, 1));
    CHECK(rf.all_proper_separated());
}
