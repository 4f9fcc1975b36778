#include <doctest.h>

#include "invmeas/error.hpp"
#include "invmeas/estimators.hpp"
#include "invmeas/examples.hpp"
#include "invmeas/field_spec.hpp"
#include "invmeas/grid.hpp"
#include "invmeas/mesh.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <cmath>

using namespace invmeas;

namespace {

SdeProblem coarse(const std::string& name, double dt = 0.01) {
    SdeProblem p(example(name));
    p.dt = dt;
    p.taming = p.cs.has_singularities();
    return p;
}

const ScalarField kOne = ScalarField::constant(2, 1.0);

std::vector<Point> origin() { return {make_point({0.0, 0.0})}; }

} // namespace

TEST_CASE("krylov: zero field") {
    const auto p = coarse("ou");
    const auto mesh = mesh_disk(1.0, 0.1);
    const auto rep = krylov_check(p, parse_field("const:0", 2), kOne, parse_grid("ball:1:4", 2), 0.5, 2.0, mesh, 50, 1);
    for (const auto& e : rep.estimates) CHECK(e.mean == 0.0);
    CHECK(rep.ratio == 0.0);
}

TEST_CASE("krylov: linearity and monotonicity with a shared seed") {
    const auto p = coarse("ou");
    const auto& rho = *p.cs.reference_density;
    const auto mesh = mesh_disk(1.0, 0.1);
    const auto grid = parse_grid("ball:1:9", 2);
    const auto g = parse_field("ball:0,0:0.5:0.1", 2);
    const auto base = krylov_check(p, g, rho, grid, 1.0, 2.0, mesh, 200, 7);
    for (double c : {0.5, 2.0, 10.0}) {
        const auto scaled_rep = krylov_check(p, scaled(g, c), rho, grid, 1.0, 2.0, mesh, 200, 7);
        for (std::size_t i = 0; i < grid.size(); ++i)
            CHECK(scaled_rep.estimates[i].mean == doctest::Approx(c * base.estimates[i].mean).epsilon(1e-12));
        CHECK(scaled_rep.ratio == doctest::Approx(base.ratio).epsilon(1e-12));
    }
    const auto bigger = krylov_check(p, parse_field("ball:0,0:0.9:0.1", 2), rho, grid, 1.0, 2.0, mesh, 200, 7);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(bigger.estimates[i].mean >= base.estimates[i].mean);
}

TEST_CASE("krylov: ratio stable across seeds") {
    const auto p = coarse("ou");
    const auto mesh = mesh_disk(1.0, 0.1);
    const auto grid = parse_grid("ball:1:9", 2);
    const auto g = parse_field("ball:0,0:1:0.1", 2);
    std::vector<double> ratios;
    for (std::uint64_t seed : {1, 2, 3})
        ratios.push_back(krylov_check(p, g, *p.cs.reference_density, grid, 1.0, 2.0, mesh, 400, seed).ratio);
    const double mean = (ratios[0] + ratios[1] + ratios[2]) / 3.0;
    for (double r : ratios) {
        CHECK(std::isfinite(r));
        CHECK(std::abs(r - mean) <= 0.2 * mean);
    }
}

TEST_CASE("krylov: negative g is refused") {
    const auto p = coarse("ou");
    const auto mesh = mesh_disk(1.0, 0.1);
    CHECK_THROWS_AS(krylov_check(p, parse_field("coord:1:5", 2), kOne, parse_grid("points:0.5,0;-0.5,0", 2), 0.2,
                                 2.0, mesh, 20, 1),
                    Error);
}

TEST_CASE("moment_report: deterministic exponential path") {
    const CoefficientSet cs("linear", MatrixField::identity(2), MatrixField::zero(2, Symmetry::antisymmetric),
                            VectorField(2, [](const Point& x) { return Point(x); }), 4.0);
    SdeProblem p(cs);
    p.noise_scale = 0.0;
    p.dt = 1e-3;
    const auto bundle = simulate(p, {make_point({1.0, 0.0})}, 2.0, 1, 0, {100});
    std::vector<double> ts;
    for (int k = 1; k <= 20; ++k) ts.push_back(0.1 * k);
    const auto rep = moment_report(bundle, ts);
    CHECK(rep.C6 == doctest::Approx(1.0).epsilon(0.01));
    CHECK(rep.monotone);
    CHECK(rep.envelope_dominates);
    CHECK_FALSE(rep.contaminated);
}

TEST_CASE("moment_report: Brownian motion and OU") {
    const auto bm = simulate(coarse("identity"), origin(), 2.0, 400, 4, {10});
    std::vector<double> ts;
    for (int k = 1; k <= 20; ++k) ts.push_back(0.1 * k);
    const auto rep = moment_report(bm, ts);
    CHECK(rep.monotone);
    CHECK(rep.envelope_dominates);
    // c sqrt(t): the sup moment doubles roughly between t = 0.5 and t = 2.
    CHECK(rep.sup_moment.back().mean / rep.sup_moment[4].mean == doctest::Approx(2.0).epsilon(0.15));

    const auto ou = simulate(coarse("ou", 0.02), origin(), 20.0, 400, 4, {50});
    std::vector<double> late;
    for (int k = 1; k <= 20; ++k) late.push_back(1.0 * k);
    const auto orep = moment_report(ou, late);
    CHECK(orep.monotone);
    CHECK(orep.C6 <= 0.1);
}

TEST_CASE("moment_report: contamination") {
    const CoefficientSet cs("outward", MatrixField::identity(2), MatrixField::zero(2, Symmetry::antisymmetric),
                            VectorField(2, [](const Point& x) { return Point(20.0 * x); }), 4.0);
    SdeProblem p(cs);
    p.dt = 0.01;
    p.stop_radius = 10.0;
    const auto bundle = simulate(p, origin(), 1.0, 50, 2);
    const auto rep = moment_report(bundle, {0.5, 1.0});
    CHECK(rep.contaminated);
    CHECK_FALSE(rep.warning.empty());
    CHECK(rep.surviving_paths < 50);
}

TEST_CASE("growth hypothesis") {
    const auto grid = parse_grid("ball:10:10000", 2);
    const auto ou = example("ou");
    const auto zero = ScalarField::constant(2, 0.0);
    CHECK(growth_hypothesis_check(ou, zero, zero, 1.0, grid).pass());

    const auto inf = example("infsin");
    REQUIRE(inf.growth.has_value());
    CHECK(growth_hypothesis_check(inf, inf.growth->h1, inf.growth->h2, 1.0, grid).pass());

    const CoefficientSet quad("quadratic", MatrixField::identity(2), MatrixField::zero(2, Symmetry::antisymmetric),
                              VectorField(2, [](const Point& x) { return make_point({x(0) * x(0), 0.0}); }), 4.0);
    const auto bad = growth_hypothesis_check(quad, zero, zero, 1.0, grid);
    CHECK_FALSE(bad.pass());
    REQUIRE_FALSE(bad.offending.empty());
    // x1^2 exceeds |x| + 1 only once |x1| passes the golden ratio.
    for (const auto& pc : bad.offending) {
        CHECK(std::abs(pc.x(0)) > 0.5 * (1.0 + std::sqrt(5.0)) - 1e-9);
        CHECK(pc.x(0) * pc.x(0) > pc.x.norm() + 1.0);
    }
}

TEST_CASE("non-explosion criterion") {
    const auto grid = parse_grid("annulus:2:12:10000", 2);
    const auto ou = nonexplosion_criterion(example("ou"), grid, 2.0, 0.5);
    CHECK(ou.pass());
    CHECK(ou.points_checked == 10000);
    CHECK_FALSE(nonexplosion_criterion(example("identity"), grid, 2.0, 0.01).pass());
    CHECK_FALSE(nonexplosion_criterion(example("infsin"), grid, 2.0, 0.1).pass());

    // At |x| = 2 the ou left-hand side is -3.8 against the bound -2.5.
    const auto at2 = nonexplosion_criterion(example("ou"), {make_point({2.0, 0.0})}, 2.0, 0.5);
    CHECK(at2.worst_margin == doctest::Approx(1.3));
    const auto inside = nonexplosion_criterion(example("ou"), {make_point({1.0, 0.0})}, 2.0, 0.5);
    CHECK(inside.points_skipped == 1);
    CHECK_FALSE(inside.pass());
}

TEST_CASE("semigroup examples") {
    const auto xs = parse_grid("ball:0.5:4", 2);
    const auto one = semigroup_mc(coarse("identity"), parse_field("const:1", 2), 1.0, xs, 200, 1);
    for (const auto& e : one.estimates) CHECK(e.mean == 1.0);

    const auto pts = parse_grid("points:1,0;0,1", 2);
    const auto ou = semigroup_mc(coarse("ou"), parse_field("coord:1:100", 2), 5.0, pts, 2000, 2);
    for (const auto& e : ou.estimates) CHECK(std::abs(e.mean) <= 3 * e.std_error + std::exp(-5.0));
    CHECK(ou.modulus.size() == 1);

    const auto far = semigroup_mc(coarse("identity", 0.001), parse_field("bump:5,5:0.5", 2), 0.01, xs, 50, 3, 0.4);
    CHECK(far.suspicious);

    BoundedField liar = parse_field("const:1", 2);
    liar.field = ScalarField::constant(2, 2.0);
    CHECK_THROWS_AS(semigroup_mc(coarse("identity"), liar, 0.1, xs, 5, 1), Error);
}

TEST_CASE("Clopper-Pearson intervals") {
    const auto [lo0, hi0] = clopper_pearson(0, 100, 0.95);
    CHECK(lo0 == 0.0);
    CHECK(hi0 == doctest::Approx(1.0 - std::pow(0.025, 0.01)));
    const auto [lo, hi] = clopper_pearson(30, 100, 0.95);
    CHECK(boost::math::cdf(boost::math::complement(boost::math::binomial(100, lo), 29)) == doctest::Approx(0.025));
    CHECK(boost::math::cdf(boost::math::binomial(100, hi), 30) == doctest::Approx(0.025));
    const auto [lon, hin] = clopper_pearson(100, 100, 0.95);
    CHECK(hin == 1.0);
    CHECK(lon == doctest::Approx(std::pow(0.025, 0.01)));
}

TEST_CASE("irreducibility examples") {
    const auto p = coarse("identity");
    const auto centre = irreducibility_probe(p, {make_point({0.0, 0.0}), 1.0}, 1.0, origin(), 4000, 5);
    const auto& c = centre.cells[0];
    CHECK(c.lower <= 1.0 - std::exp(-0.5));
    CHECK(c.upper >= 1.0 - std::exp(-0.5));

    const auto far = irreducibility_probe(coarse("identity", 0.001), {make_point({3.0, 0.0}), 0.2}, 0.01, origin(), 200, 5);
    CHECK(far.cells[0].hits == 0);
    CHECK(far.cells[0].upper > 0.0);

    const auto whole = irreducibility_probe(p, {make_point({0.0, 0.0}), 50.0}, 1.0, origin(), 200, 5);
    CHECK(whole.cells[0].estimate == 1.0);
}

TEST_CASE("resolvent examples") {
    const auto p = coarse("ou", 0.02);
    const auto xs = parse_grid("ball:0.5:3", 2);
    const auto one = resolvent_mc(p, parse_field("const:1", 2), 1.0, xs, 8.0, 50, 1, 1e-3);
    for (const auto& e : one.estimates) {
        CHECK(e.mean == doctest::Approx(1.0 - std::exp(-8.0)).epsilon(1e-3));
        CHECK(e.std_error <= 1e-12);
    }
    CHECK(one.truncation_bound == doctest::Approx(std::exp(-8.0)));

    const auto zero = resolvent_mc(p, parse_field("const:0", 2), 1.0, xs, 8.0, 50, 1, 1e-3);
    for (const auto& e : zero.estimates) CHECK(e.mean == 0.0);

    const auto g = parse_field("ball:0,0:0.5:0.1", 2);
    const auto a1 = resolvent_mc(p, g, 1.0, xs, 8.0, 100, 4, 1e-3);
    const auto a2 = resolvent_mc(p, g, 2.0, xs, 8.0, 100, 4, 1e-3);
    for (std::size_t i = 0; i < xs.size(); ++i) CHECK(a2.estimates[i].mean <= a1.estimates[i].mean);

    CHECK_THROWS_WITH_AS(resolvent_mc(p, g, 1.0, xs, 2.0, 10, 1, 1e-3), doctest::Contains("T_cut must be at least"),
                         Error);
}

TEST_CASE("subinvariance examples") {
    const auto mesh = mesh_disk(1.0, 0.25);
    const auto p = coarse("infsin");
    const auto zero = subinvariance_check(p, kOne, parse_field("const:0", 2), 0.5, mesh, 5, 1);
    CHECK(zero.lhs == 0.0);
    CHECK(zero.rhs == 0.0);
    CHECK(zero.pass);

    const auto rep = subinvariance_check(p, kOne, parse_field("bump:0,0:0.5", 2), 0.5, mesh, 20, 1);
    CHECK(rep.pass);
    CHECK(rep.lhs <= rep.rhs + 3 * rep.lhs_std_error);
    CHECK(rep.starts == 3 * static_cast<std::size_t>(mesh.num_triangles()));
}
