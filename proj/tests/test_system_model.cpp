#include <doctest.h>

#include <qinv/errors.hpp>
#include <qinv/system_model.hpp>

#include <random>

using namespace qinv;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix M(rows.size(), rows.begin()->size());
    int i = 0;
    for (const auto& r : rows) {
        int j = 0;
        for (double x : r) M(i, j++) = x;
        ++i;
    }
    return M;
}

std::vector<Vector> scalars(std::initializer_list<double> xs) {
    std::vector<Vector> out;
    for (double x : xs) out.push_back(Vector::Constant(1, x));
    return out;
}

std::vector<double> flat(const std::vector<Vector>& vs) {
    std::vector<double> out;
    for (const auto& v : vs) out.push_back(v(0));
    return out;
}

}  // namespace

TEST_CASE("make_system validates shapes and deduplicates the alphabet") {
    const auto s = make_system(mat({{0.5}}), mat({{1}}), scalars({1, 0, 1, -1}), 1);
    CHECK(flat(s.alphabet) == std::vector<double>{-1, 0, 1});
    CHECK_THROWS_AS(make_system(mat({{1, 0}}), mat({{1}}), scalars({0}), 1), DimensionMismatch);
    CHECK_THROWS_AS(make_system(mat({{1}}), mat({{1}}), {}, 1), InvalidSystem);
    CHECK_THROWS_AS(make_system(mat({{1}}), mat({{1}}), scalars({0}), 2), InvalidSystem);
    CHECK_THROWS_AS(make_system(mat({{1}}), mat({{1}}), scalars({0}), 1, 0.0), InvalidSystem);
}

TEST_CASE("canonicalize leaves a canonical system unchanged") {
    const auto s = make_system(mat({{2, 1}, {0, 3}}), mat({{1}, {1}}), scalars({0, 1}), 1);
    const CanonicalForm cf = canonicalize(s);
    CHECK(cf.identity);
    CHECK(cf.system.A == s.A);
    CHECK(cf.system.B == s.B);
}

TEST_CASE("canonicalize rescales a scalar output map") {
    const auto s = make_system(mat({{2}}), mat({{1}}), scalars({0, 1}), 1, 3.0, mat({{3}}));
    const CanonicalForm cf = canonicalize(s);
    CHECK(cf.system.A(0, 0) == doctest::Approx(2.0));
    CHECK(cf.system.B(0, 0) == doctest::Approx(1.0));
    CHECK(cf.system.delta == 1.0);
    CHECK(cf.T(0, 0) == doctest::Approx(1.0));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> x0(-3, 3);
    std::uniform_int_distribution<int> pick(0, 1);
    for (int run = 0; run < 10; ++run) {
        double raw = x0(rng);
        Vector can = cf.T * Vector::Constant(1, raw);
        for (int t = 0; t < 20; ++t) {
            CHECK(std::floor(3 * raw / 3) == quantized_output(cf.system, can)(0));
            const int u = pick(rng);
            raw = 2 * raw + u;
            can = cf.system.A * can + cf.system.B * s.alphabet[u];
        }
    }
}

TEST_CASE("canonicalize rejects a rank deficient output map") {
    const auto s = make_system(mat({{1, 0}, {0, 2}}), mat({{1}, {0}}), scalars({0, 1}), 1, 1.0, mat({{0, 0}}));
    CHECK_THROWS_AS(canonicalize(s), RankDeficientOutputMap);
}

TEST_CASE("canonicalization preserves output sequences") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-2, 2);
    for (int inst = 0; inst < 25; ++inst) {
        const int d = 1 + inst % 3;
        const int p = 1 + inst % d;
        Matrix A(d, d), B(d, 1), C(p, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = 0.6 * U(rng);
        for (int i = 0; i < d; ++i) B(i, 0) = U(rng);
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < d; ++j) C(i, j) = U(rng);
        const double delta = 0.5 + std::abs(U(rng));
        const auto raw = make_system(A, B, scalars({-1, 0, 2}), p, delta, C);
        const CanonicalForm cf = canonicalize(raw);
        Vector x(d);
        for (int i = 0; i < d; ++i) x(i) = 3 * U(rng);
        Vector z = cf.T * x;
        std::uniform_int_distribution<std::size_t> pick(0, raw.alphabet.size() - 1);
        int mismatches = 0;
        for (int t = 0; t < 50; ++t) {
            const Vector y = C * x / delta;
            // Outputs within rounding of an integer may legitimately flip.
            bool near = false;
            for (int i = 0; i < p; ++i) near |= std::abs(y(i) - std::round(y(i))) < 1e-9;
            if (!near) {
                Eigen::VectorXi raw_out(p);
                for (int i = 0; i < p; ++i) raw_out(i) = static_cast<int>(std::floor(y(i)));
                if (raw_out != quantized_output(cf.system, z)) ++mismatches;
            }
            const std::size_t u = pick(rng);
            x = A * x + B * raw.alphabet[u];
            z = cf.system.A * z + cf.system.B * cf.system.alphabet[u];
        }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("difference alphabets") {
    auto diff_of = [](std::initializer_list<double> u) {
        const auto s = make_system(mat({{0.5}}), mat({{1}}), scalars(u), 1);
        return build_difference(s);
    };
    CHECK(flat(diff_of({0, 1}).diff_alphabet) == std::vector<double>{-1, 0, 1});
    CHECK(flat(diff_of({0, 1, -1, 2}).diff_alphabet) == std::vector<double>{-3, -2, -1, 0, 1, 2, 3});
    CHECK(flat(diff_of({-1, 0, 1}).diff_alphabet) == std::vector<double>{-2, -1, 0, 1, 2});
    const DifferenceSystem d = diff_of({0, 1, -1, 2});
    CHECK(d.diff_alphabet[d.zero_index](0) == 0.0);
}

TEST_CASE("difference alphabet is symmetric with odd size") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> n(1, 4);
    std::uniform_real_distribution<double> U(-3, 3);
    for (int inst = 0; inst < 200; ++inst) {
        const int m = 1 + inst % 2;
        std::vector<Vector> alpha;
        for (int i = n(rng); i > 0; --i) {
            Vector u(m);
            for (int j = 0; j < m; ++j) u(j) = std::round(4 * U(rng)) / 4;
            alpha.push_back(u);
        }
        const auto s = make_system(Matrix::Identity(2, 2) * 0.5, Matrix::Ones(2, m), alpha, 1);
        const DifferenceSystem d = build_difference(s);
        CHECK(d.diff_alphabet.size() % 2 == 1);
        CHECK(d.diff_alphabet.size() <= s.alphabet.size() * s.alphabet.size());
        for (const auto& v : d.diff_alphabet) {
            bool found = false;
            for (const auto& w : d.diff_alphabet) found |= (w + v).cwiseAbs().maxCoeff() == 0.0;
            CHECK(found);
        }
    }
}

TEST_CASE("doubled system is block diagonal") {
    const auto s = make_system(mat({{1, 2}, {3, 4}}), mat({{1}, {0}}), scalars({0, 1}), 1);
    const DoubledSystem dbl = build_doubled(s);
    CHECK(dbl.A.rows() == 4);
    CHECK(dbl.A.topRightCorner(2, 2).isZero(0));
    CHECK(dbl.A.bottomLeftCorner(2, 2).isZero(0));
    CHECK(dbl.A.topLeftCorner(2, 2) == s.A);
    CHECK(dbl.pairs.size() == 4);
}

TEST_CASE("inverse maps") {
    AffineIFS f;
    f.maps.push_back({mat({{2}}), Vector::Constant(1, 1)});
    const AffineIFS g = build_inverse(f);
    CHECK(g.maps[0].M(0, 0) == doctest::Approx(0.5));
    CHECK(g.maps[0].c(0) == doctest::Approx(-0.5));

    AffineIFS sing;
    sing.maps.push_back({mat({{0}}), Vector::Constant(1, 1)});
    CHECK_THROWS_AS(build_inverse(sing), SingularDynamics);
}

TEST_CASE("step and round trip") {
    AffineIFS f = forward_ifs(mat({{0.5}}), mat({{1}}), scalars({1}));
    CHECK(step(f, Vector::Constant(1, 0), 0)(0) == 1.0);
    CHECK_THROWS_AS(step(f, Vector::Constant(1, 0), 3), IndexOutOfRange);

    const auto ex3 = make_system(mat({{0.5}}), mat({{1}}), scalars({-1, 0, 1}), 1);
    const DifferenceSystem d = build_difference(ex3);
    const AffineIFS fd = forward_ifs(d);
    std::size_t minus_one = 0;
    for (std::size_t i = 0; i < d.diff_alphabet.size(); ++i)
        if (d.diff_alphabet[i](0) == -1.0) minus_one = i;
    CHECK(step(fd, Vector::Constant(1, 2.0 / 3.0), minus_one)(0) == doctest::Approx(-2.0 / 3.0));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-10, 10);
    for (int inst = 0; inst < 20; ++inst) {
        Matrix A(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) A(i, j) = U(rng) / 5;
        A += 3 * Matrix::Identity(3, 3);
        const AffineIFS fw = forward_ifs(A, Matrix::Ones(3, 1), scalars({-1, 0, 2}));
        const AffineIFS bw = build_inverse(fw);
        for (int t = 0; t < 50; ++t) {
            Vector x(3);
            for (int i = 0; i < 3; ++i) x(i) = U(rng);
            const std::size_t s = static_cast<std::size_t>(t) % 3;
            CHECK((step(bw, step(fw, x, s), s) - x).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("quantized output uses left-closed cells") {
    const auto s1 = make_system(Matrix::Identity(2, 2) * 2, Matrix::Ones(2, 1), scalars({0}), 1);
    CHECK(quantized_output(s1, (Vector(2) << 0.5, -3.2).finished())(0) == 0);
    const auto s0 = make_system(mat({{2}}), mat({{1}}), scalars({0}), 1);
    CHECK(quantized_output(s0, Vector::Constant(1, -0.5))(0) == -1);
    CHECK(quantized_output(s0, Vector::Constant(1, 1.0))(0) == 1);
    const auto s2 = make_system(Matrix::Identity(2, 2) * 2, Matrix::Ones(2, 1), scalars({0}), 2);
    const Eigen::VectorXi y = quantized_output(s2, (Vector(2) << 1.999, 7.0).finished());
    CHECK(y(0) == 1);
    CHECK(y(1) == 7);
}

TEST_CASE("canonical basis is reproducible") {
    const Matrix b = mat({{1, 1}, {1, -1}, {0, 0}});
    const Matrix c1 = canonical_basis(b);
    const Matrix c2 = canonical_basis(b * mat({{2, 1}, {0, 3}}));
    CHECK((c1 - c2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((c1.transpose() * c1 - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
}
