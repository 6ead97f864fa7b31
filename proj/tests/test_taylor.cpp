#include <doctest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "uprop/taylor.hpp"

using namespace uprop;
using oracles::SparsePoly;

namespace {

TaylorPoly from_sparse(const SparsePoly& s, int order) {
    std::vector<std::pair<std::vector<int>, double>> terms;
    for (const auto& [e, c] : s.terms) terms.emplace_back(e, static_cast<double>(c));
    return TaylorPoly::from_terms(s.nvars, order, terms);
}

bool matches(const TaylorPoly& p, const SparsePoly& s) {
    // Every stored coefficient must agree with the sparse reference, exact.
    const auto& basis = *p.basis();
    for (int i = 0; i < basis.size(); ++i) {
        const auto e = basis.exponents(i);
        const std::vector<int> key(e.begin(), e.end());
        const auto it = s.terms.find(key);
        const double want = it == s.terms.end() ? 0.0 : static_cast<double>(it->second);
        if (p.coeff(i) != want) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("identity vars and constants") {
    const std::vector<double> center{5.0};
    const std::vector<double> scale{2.0};
    const auto v = TaylorPoly::identity_vars(1, 2, center, scale);
    CHECK(v[0].constant_part() == 5.0);
    const std::vector<int> e1{1};
    CHECK(v[0].coeff(e1) == 2.0);
    CHECK(v[0].eval(std::vector<double>{1.0}) == 7.0);

    const std::vector<double> c2{0.0, 0.0}, s2{1.0, 1.0};
    const auto d = TaylorPoly::identity_vars(2, 2, c2, s2);
    CHECK(d[0].eval(std::vector<double>{0.25, 0.5}) == 0.25);
    CHECK(d[1].eval(std::vector<double>{0.25, 0.5}) == 0.5);

    const std::vector<double> bad{-1.0};
    CHECK_THROWS_AS(TaylorPoly::identity_vars(1, 2, center, bad), std::invalid_argument);
}

TEST_CASE("binomial square and truncation") {
    auto x2 = TaylorPoly::variable(1, 2, 0, 1.0, 1.0);  // 1 + dx at order 2
    auto sq2 = x2 * x2;
    const std::vector<int> e0{0}, e1{1}, e2{2};
    CHECK(sq2.coeff(e0) == 1.0);
    CHECK(sq2.coeff(e1) == 2.0);
    CHECK(sq2.coeff(e2) == 1.0);

    auto x1 = TaylorPoly::variable(1, 1, 0, 1.0, 1.0);  // order 1: truncation
    auto sq1 = x1 * x1;
    CHECK(sq1.coeff(e0) == 1.0);
    CHECK(sq1.coeff(e1) == 2.0);
}

TEST_CASE("mismatched operands are rejected") {
    auto a = TaylorPoly::constant(2, 2, 1.0);
    auto b = TaylorPoly::constant(2, 3, 1.0);
    auto c = TaylorPoly::constant(3, 2, 1.0);
    CHECK_THROWS_AS(a + b, std::invalid_argument);
    CHECK_THROWS_AS(a * c, std::invalid_argument);
}

TEST_CASE("multiplication matches exhaustive expansion on random instances") {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 3;
        const int k = 1 + (trial / 3) % 4;
        const auto sa = oracles::random_sparse(rng, n, k, 6);
        const auto sb = oracles::random_sparse(rng, n, k, 6);
        const auto product = from_sparse(sa, k) * from_sparse(sb, k);
        CHECK(matches(product, sa.times(sb).truncated(k)));
    }
}

TEST_CASE("ring axioms on random instances") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 1 + trial % 3;
        const int k = 2 + trial % 3;
        const auto a = from_sparse(oracles::random_sparse(rng, n, k, 5), k);
        const auto b = from_sparse(oracles::random_sparse(rng, n, k, 5), k);
        const auto c = from_sparse(oracles::random_sparse(rng, n, k, 5), k);
        // Exact with integer coefficients.
        CHECK((a + b).coeffs()[1] == (b + a).coeffs()[1]);
        const auto ab = a * b;
        const auto ba = b * a;
        for (int i = 0; i < ab.basis()->size(); ++i) CHECK(ab.coeff(i) == ba.coeff(i));
        const auto left = (a * b) * c;
        const auto right = a * (b * c);
        for (int i = 0; i < left.basis()->size(); ++i) CHECK(left.coeff(i) == right.coeff(i));
        const auto dist1 = a * (b + c);
        const auto dist2 = a * b + a * c;
        for (int i = 0; i < dist1.basis()->size(); ++i) CHECK(dist1.coeff(i) == dist2.coeff(i));
    }
}

TEST_CASE("composition: scaling, identity, kappa-style rescale") {
    // f = dx1^2 composed with [2 dx1] -> 4 dx1^2
    auto f = TaylorPoly::from_terms(1, 2, {{{2}, 1.0}});
    auto g = TaylorPoly::variable(1, 2, 0, 2.0);
    auto comp = TaylorPoly::compose(f, {g});
    const std::vector<int> e2{2};
    CHECK(comp.coeff(e2) == 4.0);

    // compose(f, identity) == f on random instances
    std::mt19937 rng(23);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 3;
        const int k = 1 + trial % 4;
        const auto sp = oracles::random_sparse(rng, n, k, 6);
        const auto p = from_sparse(sp, k);
        std::vector<TaylorPoly> id;
        for (int v = 0; v < n; ++v) id.push_back(TaylorPoly::variable(n, k, v));
        const auto back = TaylorPoly::compose(p, id);
        for (int i = 0; i < p.basis()->size(); ++i) CHECK(back.coeff(i) == p.coeff(i));
    }

    // f = 1 + dx1 dx2 with [dx1, dx2/h], h = 0.5 -> 1 + 2 dx1 dx2
    auto f2 = TaylorPoly::from_terms(2, 2, {{{0, 0}, 1.0}, {{1, 1}, 1.0}});
    const double h = 0.5;
    std::vector<TaylorPoly> args{TaylorPoly::variable(2, 2, 0),
                                 TaylorPoly::variable(2, 2, 1, 1.0 / h)};
    auto f2c = TaylorPoly::compose(f2, args);
    const std::vector<int> e11{1, 1};
    CHECK(f2c.coeff(e11) == 2.0);
    // rescale_vars is the fast path for the same operation.
    const std::vector<double> factors{1.0, 1.0 / h};
    auto f2r = f2.rescale_vars(factors);
    for (int i = 0; i < f2r.basis()->size(); ++i) CHECK(f2r.coeff(i) == f2c.coeff(i));
}

TEST_CASE("composition matches exhaustive substitution on random instances") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 2;
        const int k = 1 + trial % 4;
        const auto sf = oracles::random_sparse(rng, n, k, 4);
        std::vector<SparsePoly> sargs;
        std::vector<TaylorPoly> args;
        for (int v = 0; v < n; ++v) {
            // Zero constant part keeps the truncated composition exact.
            auto sa = oracles::random_sparse(rng, 2, k, 3);
            sa.terms.erase(std::vector<int>{0, 0});
            sargs.push_back(sa);
            args.push_back(from_sparse(sa, k));
        }
        const auto got = TaylorPoly::compose(from_sparse(sf, k), args);
        const auto want = sf.compose(sargs).truncated(k);
        CHECK(matches(got, want));
    }
}

TEST_CASE("compose rejects argument-count mismatch") {
    auto f = TaylorPoly::from_terms(2, 2, {{{1, 1}, 1.0}});
    std::vector<TaylorPoly> one{TaylorPoly::variable(2, 2, 0)};
    CHECK_THROWS_AS(TaylorPoly::compose(f, one), std::invalid_argument);
    std::vector<TaylorPoly> mixed{TaylorPoly::variable(2, 2, 0), TaylorPoly::variable(2, 3, 0)};
    CHECK_THROWS_AS(TaylorPoly::compose(f, mixed), std::invalid_argument);
}

TEST_CASE("rescale_vars equals composition with scaled identities") {
    std::mt19937 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 3;
        const int k = 1 + trial % 4;
        const auto p = from_sparse(oracles::random_sparse(rng, n, k, 6), k);
        std::vector<double> factors(n);
        std::vector<TaylorPoly> scaled;
        for (int v = 0; v < n; ++v) {
            factors[v] = std::uniform_real_distribution<double>(0.25, 4.0)(rng);
            scaled.push_back(TaylorPoly::variable(n, k, v, factors[v]));
        }
        const auto a = p.rescale_vars(factors);
        const auto b = TaylorPoly::compose(p, scaled);
        for (int i = 0; i < a.basis()->size(); ++i) {
            CHECK(a.coeff(i) == doctest::Approx(b.coeff(i)).epsilon(1e-14));
        }
    }
}

TEST_CASE("partial derivatives") {
    auto p = TaylorPoly::from_terms(2, 3, {{{2, 0}, 1.0}, {{1, 1}, 1.0}, {{0, 0}, 3.0}});
    auto dx = p.partial(0);
    const std::vector<int> e10{1, 0}, e01{0, 1}, e00{0, 0};
    CHECK(dx.coeff(e10) == 2.0);
    CHECK(dx.coeff(e01) == 1.0);
    CHECK(dx.coeff(e00) == 0.0);
    auto dy = p.partial(1);
    CHECK(dy.coeff(e10) == 1.0);
    CHECK(TaylorPoly::constant(2, 3, 5.0).partial(0).is_zero());
}

TEST_CASE("eval matches naive monomial sum") {
    std::mt19937 rng(41);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 1 + trial % 3;
        const int k = 1 + trial % 4;
        const auto sp = oracles::random_sparse(rng, n, k, 8);
        const auto p = from_sparse(sp, k);
        std::vector<double> pt(n);
        for (auto& x : pt) x = unif(rng);
        const double got = p.eval(pt);
        const double want = sp.eval(pt);
        CHECK(got == doctest::Approx(want).epsilon(1e-13));
    }
    // Constant at the origin.
    auto p = TaylorPoly::from_terms(2, 2, {{{0, 0}, 4.5}, {{1, 0}, 2.0}});
    CHECK(p.eval(std::vector<double>{0.0, 0.0}) == 4.5);
    CHECK(TaylorPoly::variable(1, 2, 0, 2.0, 1.0).eval(std::vector<double>{0.5}) == 2.0);
}

TEST_CASE("intrinsics: stated expansions") {
    const std::vector<int> e0{0}, e1{1}, e2{2}, e3{3};
    auto x = TaylorPoly::variable(1, 2, 0, 1.0, 4.0);  // 4 + dx
    auto s = sqrt(x);
    CHECK(s.coeff(e0) == doctest::Approx(2.0));
    CHECK(s.coeff(e1) == doctest::Approx(0.25));
    CHECK(s.coeff(e2) == doctest::Approx(-1.0 / 64.0));

    auto y = TaylorPoly::variable(1, 3, 0, 1.0, 1.0);  // 1 + dx
    auto r = reciprocal(y);
    CHECK(r.coeff(e0) == doctest::Approx(1.0));
    CHECK(r.coeff(e1) == doctest::Approx(-1.0));
    CHECK(r.coeff(e2) == doctest::Approx(1.0));
    CHECK(r.coeff(e3) == doctest::Approx(-1.0));

    auto z = TaylorPoly::variable(1, 2, 0);  // 0 + dx
    auto ez = exp(z);
    CHECK(ez.coeff(e0) == doctest::Approx(1.0));
    CHECK(ez.coeff(e1) == doctest::Approx(1.0));
    CHECK(ez.coeff(e2) == doctest::Approx(0.5));
}

TEST_CASE("intrinsics: singular expansion points rejected") {
    auto z = TaylorPoly::variable(1, 2, 0);  // constant part 0
    CHECK_THROWS_AS(reciprocal(z), std::domain_error);
    CHECK_THROWS_AS(sqrt(z), std::domain_error);
    auto neg = TaylorPoly::variable(1, 2, 0, 1.0, -1.0);
    CHECK_THROWS_AS(sqrt(neg), std::domain_error);
    auto zero2 = TaylorPoly::variable(2, 2, 0);
    CHECK_THROWS_AS(atan2(zero2 - zero2, zero2 - zero2), std::domain_error);
}

TEST_CASE("intrinsics match finite differences of the scalar function") {
    // First-derivative check: expand about c, compare linear coefficient to a
    // central difference with step 1e-5 at relative tolerance 1e-6.
    struct Case {
        double center;
        double (*fn)(double);
        TaylorPoly (*lift)(const TaylorPoly&);
    };
    const Case cases[] = {
        {0.7, [](double v) { return 1.0 / v; }, reciprocal},
        {2.3, [](double v) { return std::sqrt(v); }, sqrt},
        {0.4, [](double v) { return std::exp(v); }, exp},
        {1.1, [](double v) { return std::sin(v); }, sin},
        {1.1, [](double v) { return std::cos(v); }, cos},
    };
    const std::vector<int> e1{1};
    for (const auto& c : cases) {
        auto p = c.lift(TaylorPoly::variable(1, 3, 0, 1.0, c.center));
        const double fd = oracles::central_diff(c.fn, c.center);
        CHECK(p.coeff(e1) == doctest::Approx(fd).epsilon(1e-6));
    }
    // atan2 pair, both slots varying.
    auto y = TaylorPoly::variable(2, 3, 0, 1.0, 0.8);
    auto x = TaylorPoly::variable(2, 3, 1, 1.0, 1.7);
    auto a = atan2(y, x);
    CHECK(a.constant_part() == doctest::Approx(std::atan2(0.8, 1.7)));
    const std::vector<int> ey{1, 0}, ex{0, 1};
    const double fdy =
        oracles::central_diff([](double v) { return std::atan2(v, 1.7); }, 0.8);
    const double fdx =
        oracles::central_diff([](double v) { return std::atan2(0.8, v); }, 1.7);
    CHECK(a.coeff(ey) == doctest::Approx(fdy).epsilon(1e-6));
    CHECK(a.coeff(ex) == doctest::Approx(fdx).epsilon(1e-6));
    // asin
    auto s = asin(TaylorPoly::variable(1, 3, 0, 1.0, 0.3));
    const double fds = oracles::central_diff([](double v) { return std::asin(v); }, 0.3);
    CHECK(s.constant_part() == doctest::Approx(std::asin(0.3)));
    CHECK(s.coeff(e1) == doctest::Approx(fds).epsilon(1e-6));
}

TEST_CASE("pow_int") {
    auto x = TaylorPoly::variable(1, 3, 0, 1.0, 2.0);
    auto p3 = pow_int(x, 3);
    CHECK(p3.constant_part() == doctest::Approx(8.0));
    auto pm2 = pow_int(x, -2);
    CHECK(pm2.constant_part() == doctest::Approx(0.25));
    CHECK(pow_int(x, 0).constant_part() == 1.0);
    // Consistency with repeated multiplication.
    auto xx = x * x * x;
    for (int i = 0; i < 4; ++i) CHECK(p3.coeff(i) == doctest::Approx(xx.coeff(i)));
}

TEST_CASE("structured-text round trip") {
    std::mt19937 rng(53);
    const auto p = from_sparse(oracles::random_sparse(rng, 3, 3, 8), 3);
    std::stringstream ss;
    p.write(ss);
    const auto q = TaylorPoly::read(ss);
    CHECK(q.nvars() == p.nvars());
    CHECK(q.order() == p.order());
    for (int i = 0; i < p.basis()->size(); ++i) CHECK(q.coeff(i) == p.coeff(i));
    std::stringstream bad("nope 1 2 3");
    CHECK_THROWS(TaylorPoly::read(bad));
}
