#include <doctest.h>

#include "invmeas/error.hpp"
#include "invmeas/examples.hpp"
#include "invmeas/random.hpp"
#include "invmeas/sde.hpp"

#include <cmath>

using namespace invmeas;

namespace {

CoefficientSet custom(VectorField H) {
    return CoefficientSet("custom", MatrixField::identity(2), MatrixField::zero(2, Symmetry::antisymmetric),
                          std::move(H), 4.0);
}

} // namespace

TEST_CASE("Philox4x32-10 known answers") {
    using C = Philox4x32::Counter;
    CHECK(Philox4x32::block(C{0, 0, 0, 0}, {0, 0}) == C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::block(C{~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
          C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("RandomStream moments and independence of keys") {
    RandomStream a(42, 0, 0);
    RandomStream b(42, 0, 1);
    const int n = 200000;
    double s = 0.0, s2 = 0.0, u = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = a.normal();
        const double w = b.normal();
        s += z;
        s2 += z * z;
        cross += z * w;
        const double v = a.uniform();
        CHECK_FALSE((v <= 0.0 || v >= 1.0));
        u += v;
    }
    CHECK(std::abs(s / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
    CHECK(std::abs(cross / n) < 5.0 / std::sqrt(n));
    CHECK(std::abs(u / n - 0.5) < 5.0 * std::sqrt(1.0 / 12.0 / n));

    RandomStream c(42, 0, 0);
    RandomStream d(42, 0, 0);
    for (int i = 0; i < 10; ++i) CHECK(c.normal() == d.normal());
}

TEST_CASE("factor_sigma examples") {
    CHECK((factor_sigma(Matrix::Identity(2, 2)) - Matrix::Identity(2, 2)).norm() == 0.0);
    Matrix a(2, 2);
    a << 2, 1, 1, 2;
    const Matrix s = factor_sigma(a);
    CHECK(s(0, 0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(s(0, 1) == 0.0);
    CHECK(s(1, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(s(1, 1) == doctest::Approx(std::sqrt(1.5)));
    CHECK((s * s.transpose() - a).cwiseAbs().maxCoeff() <= 1e-12 * a.cwiseAbs().maxCoeff());

    const Point x = make_point({0.3, 1.2});
    const Matrix iso = (1.0 + x.squaredNorm()) * Matrix::Identity(2, 2);
    CHECK((factor_sigma(iso) - std::sqrt(1.0 + x.squaredNorm()) * Matrix::Identity(2, 2)).norm() <= 1e-14);

    Matrix bad(2, 2);
    bad << 1, 2, 2, 1;
    CHECK_THROWS_WITH_AS(factor_sigma(bad), doctest::Contains("order 2"), CoefficientError);
}

TEST_CASE("tame") {
    const Point b = make_point({3.0, 4.0});
    CHECK((tame(b, 0.1) - b / 1.5).norm() <= 1e-15);
    const Point inf = make_point({std::numeric_limits<double>::infinity(), 0.0});
    const Point t = tame(inf, 0.01);
    CHECK(t(0) == doctest::Approx(100.0));
    CHECK(t(1) == 0.0);
}

TEST_CASE("SdeProblem validation") {
    SdeProblem p(example("ou"));
    p.ball_radii = {1.0, 2.0};
    p.stop_radius = 1.5;
    CHECK_THROWS_AS(p.validate(), Error);
    p.stop_radius = 10.0;
    p.ball_radii = {2.0, 1.0};
    CHECK_THROWS_AS(p.validate(), Error);
    p.ball_radii = {};
    p.drift_mode = DriftMode::Ghat;
    CHECK_THROWS_AS(p.validate(), Error);
    p.drift_mode = DriftMode::G;
    p.dt = 0.01;
    CHECK(p.steps_for(1.0) == 100);
    CHECK_THROWS_AS(p.steps_for(0.015), Error);
}

TEST_CASE("Brownian motion law, coarse step") {
    SdeProblem p(example("identity"));
    p.dt = 0.01;
    const int n = 10000;
    const auto bundle = simulate(p, {make_point({0.0, 0.0})}, 1.0, n, 17);
    const auto rec = static_cast<std::size_t>(bundle.record_index(1.0));
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
    for (int k = 0; k < n; ++k) {
        const Point x = bundle.state(bundle.path(0, k), rec);
        mean += Eigen::Vector2d(x(0), x(1));
        second += Eigen::Vector2d(x(0), x(1)) * Eigen::Vector2d(x(0), x(1)).transpose();
    }
    mean /= n;
    second /= n;
    const double se_mean = 1.0 / std::sqrt(n);
    CHECK(std::abs(mean(0)) <= 3 * se_mean);
    CHECK(std::abs(mean(1)) <= 3 * se_mean);
    CHECK(std::abs(second(0, 0) - 1.0) <= 3 * std::sqrt(2.0 / n));
    CHECK(std::abs(second(1, 1) - 1.0) <= 3 * std::sqrt(2.0 / n));
    CHECK(std::abs(second(0, 1)) <= 3 * std::sqrt(1.0 / n));
}

TEST_CASE("OU second moment, coarse step") {
    SdeProblem p(example("ou"));
    p.dt = 0.005;
    const int n = 10000;
    const auto bundle = simulate(p, {make_point({0.0, 0.0})}, 2.0, n, 5);
    for (double t : {0.5, 1.0, 2.0}) {
        const auto rec = static_cast<std::size_t>(bundle.record_index(t));
        double s = 0.0, s2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double r2 = bundle.state(bundle.path(0, k), rec).squaredNorm();
            s += r2;
            s2 += r2 * r2;
        }
        const double m = s / n;
        const double se = std::sqrt((s2 / n - m * m) / (n - 1));
        // Euler bias at this step is below one standard error.
        CHECK(std::abs(m - (1.0 - std::exp(-2.0 * t))) <= 3 * se + 0.005);
    }
}

TEST_CASE("determinism across worker counts") {
    SdeProblem p(example("growth-demo"));
    p.dt = 0.01;
    p.taming = true;
    p.ball_radii = {0.5, 1.0};
    const std::vector<Point> starts = {make_point({0.0, 0.0}), make_point({0.3, -0.2})};
    p.workers = 1;
    const auto a = simulate(p, starts, 1.0, 37, 99);
    p.workers = 3;
    const auto b = simulate(p, starts, 1.0, 37, 99);
    REQUIRE(a.paths.size() == b.paths.size());
    for (std::size_t i = 0; i < a.paths.size(); ++i) {
        CHECK(a.paths[i].states == b.paths[i].states);
        CHECK(a.paths[i].running_sup == b.paths[i].running_sup);
        CHECK(a.paths[i].exit_times == b.paths[i].exit_times);
    }
    const auto c = simulate(p, starts, 1.0, 37, 100);
    CHECK(a.paths[0].states != c.paths[0].states);
}

TEST_CASE("exit times are monotone in the radius") {
    SdeProblem p(example("identity"));
    p.dt = 0.01;
    p.ball_radii = {0.25, 0.5, 1.0, 2.0};
    const auto bundle = simulate(p, {make_point({0.0, 0.0})}, 2.0, 200, 3);
    int exited = 0;
    for (const auto& rec : bundle.paths) {
        for (std::size_t k = 1; k < rec.exit_times.size(); ++k) CHECK(rec.exit_times[k - 1] <= rec.exit_times[k]);
        exited += std::isfinite(rec.exit_times[0]) ? 1 : 0;
    }
    CHECK(exited > 150);
}

TEST_CASE("absorption at the stop radius") {
    SdeProblem p(custom(VectorField(2, [](const Point& x) { return Point(50.0 * make_point({1.0, 0.0}) + 0.0 * x); })));
    p.dt = 0.01;
    p.stop_radius = 5.0;
    const auto bundle = simulate(p, {make_point({0.0, 0.0})}, 1.0, 20, 1);
    CHECK(bundle.exploded_count() == 20);
    for (const auto& rec : bundle.paths) {
        CHECK(rec.explosion_time < 0.2);
        CHECK_FALSE(rec.diagnostic.empty());
        const Point last = bundle.state(rec, bundle.record_times.size() - 1);
        CHECK(last.norm() >= 5.0);
    }
}

TEST_CASE("non-finite states are flagged, not silent") {
    SdeProblem p(custom(VectorField(2, [](const Point& x) {
        return x.norm() > 0.3 ? make_point({std::nan(""), 0.0}) : make_point({0.0, 0.0});
    })));
    p.dt = 0.01;
    PathStepper s(p, make_point({0.5, 0.0}), 1, 0, 0);
    s.step();
    CHECK(s.absorbed());
    CHECK(s.diagnostic().find("non-finite") != std::string::npos);
}

TEST_CASE("untamed steps refuse singular drift; tamed steps pass") {
    SdeProblem p(example("infsin"));
    p.taming = false;
    PathStepper s(p, make_point({0.0, 0.1}), 1, 0, 0);
    CHECK_THROWS_AS(s.step(), CoefficientError);
    p.taming = true;
    PathStepper t(p, make_point({0.0, 0.1}), 1, 0, 0);
    t.step();
    CHECK(t.state().allFinite());
}

TEST_CASE("taming is neutral to first order for bounded smooth drift") {
    SdeProblem p(custom(VectorField(2, [](const Point& x) { return make_point({std::sin(x(1)), std::cos(x(0))}); })));
    auto max_gap = [&](double dt) {
        p.dt = dt;
        double gap = 0.0;
        for (std::uint32_t path = 0; path < 20; ++path) {
            SdeProblem tamed = p;
            tamed.taming = true;
            PathStepper a(p, make_point({0.0, 0.0}), 8, 0, path);
            PathStepper b(tamed, make_point({0.0, 0.0}), 8, 0, path);
            const long n = p.steps_for(1.0);
            for (long k = 0; k < n; ++k) {
                a.step();
                b.step();
                gap = std::max(gap, (a.state() - b.state()).norm());
            }
        }
        return gap;
    };
    const double g1 = max_gap(0.01);
    const double g2 = max_gap(0.005);
    CHECK(g1 < 0.05);
    CHECK(g1 / g2 >= 1.6);
}

TEST_CASE("weak-order sanity for OU") {
    SdeProblem p(example("ou"));
    auto bias = [&](double dt) {
        p.dt = dt;
        const int n = 100000;
        const auto bundle = simulate(p, {make_point({0.0, 0.0})}, 1.0, n, 21);
        const auto rec = static_cast<std::size_t>(bundle.record_index(1.0));
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += bundle.state(bundle.path(0, k), rec).squaredNorm();
        return std::abs(s / n - (1.0 - std::exp(-2.0)));
    };
    const double b1 = bias(0.1);
    const double b2 = bias(0.05);
    MESSAGE("OU weak bias " << b1 << " -> " << b2);
    CHECK(b1 / b2 >= 1.5);
}

TEST_CASE("noise_scale 0 gives the explicit Euler ODE path") {
    SdeProblem p(custom(VectorField(2, [](const Point& x) { return Point(x); })));
    p.noise_scale = 0.0;
    p.dt = 0.001;
    const auto bundle = simulate(p, {make_point({1.0, 0.0})}, 1.0, 1, 0);
    const Point end = bundle.state(bundle.paths[0], bundle.record_times.size() - 1);
    CHECK(end(0) == doctest::Approx(std::pow(1.001, 1000)).epsilon(1e-12));
}
