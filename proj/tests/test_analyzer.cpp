#include <doctest.h>

#include <qinv/analyzer.hpp>
#include <qinv/errors.hpp>
#include <qinv/exact_lp.hpp>

#include <cmath>
#include <cstring>
#include <random>

using namespace qinv;

namespace {

std::vector<Vector> scalars(std::initializer_list<double> xs) {
    std::vector<Vector> out;
    for (double x : xs) out.push_back(Vector::Constant(1, x));
    return out;
}

QuantizedSystem scalar_system(double a, std::initializer_list<double> u) {
    return make_system(Matrix::Constant(1, 1, a), Matrix::Ones(1, 1), scalars(u), 1);
}

QuantizedSystem example2() {
    Matrix A(3, 3);
    A << 2, 0, 0, 0, 0.5, 1, 0, 0, 1.0 / 3.0;
    Matrix B(3, 1);
    B << 2, 3, 6;
    return make_system(A, B, scalars({0, 1}), 2);
}

QuantizedSystem example1() {
    return make_system(lw_matrix(2, {5, 3, 2, 7}).A, Matrix::Ones(2, 1), scalars({0, 1, -1, 2}), 1);
}

}  // namespace

TEST_CASE("exact linear programs") {
    // max x + y on the unit square.
    RationalMatrix A = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    std::vector<Rational> b = {1, 0, 1, 0};
    LpResult r = lp_maximize(A, b, {1, 1});
    CHECK(r.status == LpStatus::Optimal);
    CHECK(r.value == 2);

    // Negative right-hand sides need the first phase: x >= 1/3, x <= 1/2.
    RationalMatrix A2 = {{-1}, {1}};
    r = lp_maximize(A2, {Rational(-1, 3), Rational(1, 2)}, {-1});
    CHECK(r.status == LpStatus::Optimal);
    CHECK(r.value == Rational(-1, 3));

    CHECK(lp_maximize(A2, {Rational(-1), Rational(0)}, {1}).status == LpStatus::Infeasible);
    CHECK(lp_maximize({{-1}}, {0}, {1}).status == LpStatus::Unbounded);
    CHECK_THROWS_AS(lp_maximize({{1, 2}}, {0, 1}, {1, 1}), DimensionMismatch);
}

TEST_CASE("exact programs agree with vertex enumeration in the plane") {
    std::mt19937_64 rng(13);
    std::uniform_int_distribution<int> U(-5, 5);
    for (int inst = 0; inst < 100; ++inst) {
        RationalMatrix A = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
        std::vector<Rational> b = {3, 3, 3, 3};
        for (int extra = 0; extra < 3; ++extra) {
            A.push_back({U(rng), U(rng)});
            b.push_back(U(rng) + 4);
        }
        const std::vector<Rational> c = {U(rng), U(rng)};
        const LpResult r = lp_maximize(A, b, c);
        // Brute force over pairwise intersections.
        std::optional<Rational> best;
        for (std::size_t i = 0; i < A.size(); ++i)
            for (std::size_t j = i + 1; j < A.size(); ++j) {
                const Rational det = A[i][0] * A[j][1] - A[i][1] * A[j][0];
                if (det == 0) continue;
                const Rational x = (b[i] * A[j][1] - A[i][1] * b[j]) / det;
                const Rational y = (A[i][0] * b[j] - b[i] * A[j][0]) / det;
                bool feasible = true;
                for (std::size_t k = 0; k < A.size(); ++k) feasible &= A[k][0] * x + A[k][1] * y <= b[k];
                if (!feasible) continue;
                const Rational v = c[0] * x + c[1] * y;
                if (!best || v > *best) best = v;
            }
        if (best) {
            REQUIRE(r.status == LpStatus::Optimal);
            CHECK(r.value == *best);
        } else {
            CHECK(r.status == LpStatus::Infeasible);
        }
    }
}

TEST_CASE("history polytope check") {
    const DifferenceSystem d2 = build_difference(example2());
    const HistoryCheck h0 = history_polytope_check(d2, 0);
    CHECK_FALSE(h0.separated);
    const HistoryCheck h1 = history_polytope_check(d2, 1);
    CHECK(h1.separated);
    CHECK(h1.words == 3);

    // a = 1/2 with unit differences: the strip point 2/3 maps to -2/3.
    const DifferenceSystem d3 = build_difference(scalar_system(0.5, {0, 1}));
    for (int h = 0; h <= 3; ++h) CHECK_FALSE(history_polytope_check(d3, h).separated);

    // |v| >= |a| + 1 separates in one step, with equality allowed.
    CHECK(history_polytope_check(build_difference(scalar_system(0.5, {0, 1.5})), 0).separated);
    CHECK(history_polytope_check(build_difference(scalar_system(-0.5, {0, 3})), 0).separated);

    const HistoryCheck big = history_polytope_check(d3, 12, 1000);
    CHECK_FALSE(big.within_budget);
    CHECK_FALSE(big.separated);
}

TEST_CASE("quantization set") {
    const QuantizationSetQ Q{2, 1};
    CHECK(Q.contains((Vector(2) << 0.1, 5).finished(), (Vector(2) << 0.9, -5).finished()));
    CHECK_FALSE(Q.contains((Vector(2) << 0.9, 0).finished(), (Vector(2) << 1.0, 0).finished()));
    const IntervalBox a{(Vector(2) << 0.2, 0).finished(), (Vector(2) << 0.4, 1).finished()};
    const IntervalBox b{(Vector(2) << 0.5, 0).finished(), (Vector(2) << 0.7, 1).finished()};
    const IntervalBox c{(Vector(2) << 0.9, 0).finished(), (Vector(2) << 1.2, 1).finished()};
    CHECK(Q.contains_all(a, b));
    CHECK(Q.may_meet(a, c));
    CHECK_FALSE(Q.contains_all(a, c));
}

TEST_CASE("decide_uldi on the worked examples") {
    const Verdict v1 = decide_uldi(example1(), 8);
    CHECK(v1.property == Property::NotULDI);
    CHECK(v1.certificate == CertificateKind::AttractorInStrip);
    CHECK(v1.replay.ok);

    const Verdict v2 = decide_uldi(example2(), 8);
    CHECK(v2.property == Property::ULDI);
    CHECK(v2.steps_k == 1);
    CHECK(v2.certificate == CertificateKind::SeparationCert);

    const Verdict v3 = decide_uldi(scalar_system(0.5, {-1, 0, 1}), 8);
    CHECK(v3.property == Property::NotULDI);
    REQUIRE(v3.witness);
    CHECK(v3.replay.ok);
    for (const auto& z : v3.replay.states) CHECK(std::abs(z(0)) <= 1.0 + 1e-9);
}

TEST_CASE("decide_uldi preconditions") {
    Matrix A(2, 2);
    A << 2, 0, 0, 3;
    CHECK_THROWS_AS(decide_uldi(make_system(A, Matrix::Ones(2, 1), scalars({0, 1}), 1), 6), UnboundedTrap);
    CHECK_THROWS_AS(decide_uldi(scalar_system(1.0, {0, 1}), 6), MarginalSpectrum);
    const Verdict single = decide_uldi(scalar_system(3.0, {1}), 6);
    CHECK(single.property == Property::ULDI);
}

TEST_CASE("decide_uli_contractive") {
    const Verdict v3 = decide_uli_contractive(scalar_system(0.5, {-1, 0, 1}), 8);
    CHECK(v3.property == Property::ULI);
    CHECK(v3.steps_k == 1);

    const Verdict zero = decide_uli_contractive(scalar_system(0.0, {0, 5}), 8);
    CHECK(zero.property == Property::ULI);
    CHECK(zero.steps_k == 1);

    const Verdict close = decide_uli_contractive(scalar_system(0.5, {0, 0.1}), 8);
    CHECK(close.property == Property::NotULI);

    CHECK_THROWS_AS(decide_uli_contractive(scalar_system(2.0, {0, 1}), 6), NotContractive);
}

TEST_CASE("classify_1d rules") {
    const OneDResult ex3 = classify_1d(0.5, {-1, 0, 1});
    CHECK(ex3.uldi.property == Property::NotULDI);
    REQUIRE(ex3.uldi.replay.states.size() >= 2);
    for (const auto& z : ex3.uldi.replay.states) CHECK(std::abs(std::abs(z(0)) - 2.0 / 3.0) < 1e-12);
    CHECK(ex3.uli.property == Property::ULI);
    CHECK(ex3.uli.steps_k == 1);

    const OneDResult close = classify_1d(3.0, {0, 1});
    CHECK(close.rule == "expansive-close-inputs");
    CHECK(close.uli.property == Property::NotULI);

    AnalyzerOptions tr;
    tr.assume_transcendental = true;
    const OneDResult far = classify_1d(std::exp(1.0), {0, 5}, tr);
    CHECK(far.rule == "separated-inputs");
    CHECK(far.uli.property == Property::ULI);
    CHECK(far.uli.steps_k == 1);

    // min |du| exactly |a| + 1 is the star branch, not the one-step rule.
    const OneDResult edge = classify_1d(1.5, {0, 2.5});
    CHECK(edge.rule == "star");
    CHECK(edge.uldi.property == Property::ULDI);
    CHECK(edge.uli.property == Property::Inconclusive);
    const OneDResult edge_tr = classify_1d(1.5, {0, 2.5}, tr);
    CHECK(edge_tr.uli.property == Property::ULI);

    const OneDResult star_bad = classify_1d(1.5, {0, 1}, tr);
    CHECK(star_bad.rule == "star");
    CHECK(star_bad.uldi.property == Property::NotULDI);
    CHECK(star_bad.uldi.replay.ok);
    CHECK(star_bad.uli.property == Property::NotULI);

    // Rounded thirds: fl(4/3) falls short of 1 + fl(1/3) exactly, so the fixed
    // orbit v / (1 - a) sits within rounding of 1 and cannot be certified either way.
    const OneDResult tight = classify_1d(-1.0 / 3.0, {0, 4.0 / 3.0}, tr);
    CHECK(tight.rule == "contractive");
    CHECK(tight.uldi.property == Property::Inconclusive);
    // Same effect in the star branch: no ULI claim without a ULDI verdict.
    const OneDResult tight_star = classify_1d(-4.0 / 3.0, {0, 1.0 + 4.0 / 3.0}, tr);
    CHECK(tight_star.rule == "star");
    CHECK(tight_star.uldi.property == Property::Inconclusive);
    CHECK(tight_star.uli.property == Property::Inconclusive);
    // fl(7/3) clears 1 + fl(4/3) exactly, by one unit in the last place.
    CHECK(classify_1d(-4.0 / 3.0, {0, 7.0 / 3.0}).uldi.property == Property::ULDI);
    // Exactly representable equality clears the one-step test.
    CHECK(classify_1d(-0.5, {0, 1.5}).uldi.property == Property::ULDI);
    CHECK(classify_1d(-0.5, {0, 1.25}).uldi.property == Property::NotULDI);

    CHECK(classify_1d(-3.0, {0, 1}).uli.property == Property::NotULI);
    CHECK(classify_1d(2.0, {7}).rule == "single-input");
}

TEST_CASE("oracle") {
    const OracleReport ex3 = brute_force_oracle(scalar_system(0.5, {-1, 0, 1}), 8, 32);
    CHECK_FALSE(ex3.collision);
    CHECK(ex3.window == 1);

    const OracleReport a3 = brute_force_oracle(scalar_system(3.0, {0, 1}), 10, 32);
    CHECK(a3.collision);
    CHECK(a3.word.size() == a3.partner_word.size());
    CHECK(a3.word.front() != a3.partner_word.front());

    const OracleReport z = brute_force_oracle(scalar_system(0.0, {0, 5}), 1, 32);
    CHECK_FALSE(z.collision);

    Matrix A3 = Matrix::Identity(3, 3) * 0.5;
    CHECK_THROWS_AS(brute_force_oracle(make_system(A3, Matrix::Ones(3, 1), scalars({0, 1}), 1), 4, 8),
                    DimensionMismatch);
    OracleOptions tiny;
    tiny.depth = 12;
    tiny.node_budget = 100;
    CHECK_THROWS_AS(brute_force_oracle(scalar_system(0.5, {-1, 0, 1}), tiny), BudgetExceeded);
}

TEST_CASE("verdicts never contradict the oracle on small random systems") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> A(-3, 3);
    std::uniform_int_distribution<int> U(-8, 8);
    int checked = 0;
    for (int inst = 0; inst < 60; ++inst) {
        double a = A(rng);
        if (std::abs(std::abs(a) - 1.0) < 0.1) a += 0.3;
        const double u1 = U(rng) / 4.0;
        double u2 = U(rng) / 4.0;
        if (u2 == u1) u2 += 0.75;
        const QuantizedSystem s = scalar_system(a, {u1, u2});
        const Analysis an = analyze_system(s);
        OracleOptions oo;
        oo.depth = 12;
        oo.node_budget = 2000000;
        try {
            const OracleReport r = brute_force_oracle(s, oo);
            if (r.collision) CHECK(an.uli.property != Property::ULI);
            if (an.uldi.property == Property::ULDI) CHECK_FALSE(r.collision);
            ++checked;
        } catch (const BudgetExceeded&) {
        }
        CHECK_FALSE((an.uldi.property == Property::ULDI && an.uli.property == Property::NotULI));
    }
    CHECK(checked >= 50);
}

TEST_CASE("lw matrices") {
    const LWMatrix m = lw_matrix(2, {5, 3, 2, 7});
    CHECK(m.A(0, 0) == doctest::Approx(std::exp(std::sqrt(5.0))));
    CHECK(m.A(1, 1) == doctest::Approx(std::exp(std::sqrt(7.0))));
    CHECK(m.algebraic_independence);
    const LWMatrix again = lw_matrix(2, {5, 3, 2, 7});
    CHECK(std::memcmp(m.A.data(), again.A.data(), sizeof(double) * 4) == 0);
    CHECK(lw_matrix(1, {2}).A(0, 0) == doctest::Approx(std::exp(std::sqrt(2.0))));
    CHECK_THROWS_AS(lw_matrix(2, {2, 2, 3, 5}), RepeatedExponent);
    CHECK_THROWS_AS(lw_matrix(1, {4}), NotSquareFree);
    CHECK_THROWS_AS(lw_matrix(1, {0}), NotSquareFree);
    CHECK(is_square_free(30));
    CHECK_FALSE(is_square_free(18));
}

TEST_CASE("kronecker witness") {
    CHECK(kronecker_witness({1.0}, {0.0}, 0.1, 0, 10, 1) == 0.0);
    const auto l = kronecker_witness({0.5}, {0.3}, 0.01, 1.3, 1.5, 0.1);
    REQUIRE(l);
    CHECK(*l == doctest::Approx(1.4));
    CHECK_FALSE(kronecker_witness({0.5}, {0.3}, 0.01, 0, 1.3, 0.1));
}
