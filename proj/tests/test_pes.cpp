#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "superscar/pes/legendre.hpp"
#include "superscar/pes/masses.hpp"
#include "superscar/pes/mep.hpp"
#include "superscar/pes/surrogates.hpp"

using namespace superscar;
using namespace superscar::pes;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

LegendreSeries parse(const std::string& text) {
    std::istringstream is(text);
    return parse_coefficients(is);
}

// A nine-term series mixing every analytic form and two tables.
const char* kMixed = R"(# test surface
legendre-series Λ=4 r_unit=bohr e_unit=hartree
lambda 0
analytic morse 0.05 1.1 4.2
lambda 1
analytic exponential 0.3 0.9
lambda 2
table 6
2.0 0.010
3.0 0.006
4.0 0.003
5.5 0.001
7.0 0.0004
9.0 0.0001
lambda 3
analytic inverse-power -2.5 6
lambda 4
analytic polynomial 0.001 -0.0002 0.00001
)";

// Independent oracle: direct sum with the standard library Legendre polynomials.
double direct_sum(const LegendreSeries& s, double R, double theta) {
    double v = 0.0;
    for (int l = 0; l <= s.lambda_max(); ++l)
        v += std::legendre(static_cast<unsigned>(l), std::cos(theta)) * evaluate_curve(s.curves()[l], R).value;
    return v * energy_scale(s.unit());
}

} // namespace

TEST_CASE("Legendre series special angles", "[pes][legendre]") {
    const auto s = parse(kMixed);
    const auto surf = make_series_surface(s, RadialDomain{2.0, 9.0});
    for (double R : {2.5, 3.7, 6.1}) {
        double sum = 0.0, alt = 0.0;
        for (int l = 0; l <= 4; ++l) {
            const double v = evaluate_curve(s.curves()[l], R).value;
            sum += v;
            alt += (l % 2 ? -1.0 : 1.0) * v;
        }
        CHECK_THAT(surf.evaluate(R, 0.0), WithinRel(sum, 1e-14));
        CHECK_THAT(surf.evaluate(R, units::kPi), WithinRel(alt, 1e-13));
    }
}

TEST_CASE("single v2 constant at a right angle gives -c/2", "[pes][legendre]") {
    const auto s = parse("legendre-series Λ=2 r_unit=bohr e_unit=hartree\n"
                         "lambda 0\nanalytic constant 0\nlambda 1\nanalytic constant 0\n"
                         "lambda 2\nanalytic constant 0.8\n");
    const auto surf = make_series_surface(s);
    CHECK_THAT(surf.evaluate(3.0, units::kPi / 2), WithinAbs(-0.4, 1e-15));
}

TEST_CASE("v1 = R has no radial force at a right angle", "[pes][legendre]") {
    const auto s = parse("legendre-series Lambda=1 r_unit=bohr e_unit=hartree\n"
                         "lambda 0\nanalytic constant 0\nlambda 1\nanalytic polynomial 0 1\n");
    const auto surf = make_series_surface(s);
    CHECK_THAT(surf.gradient(3.3, units::kPi / 2).dR, WithinAbs(0.0, 1e-15));
    CHECK_THAT(surf.gradient(3.3, 0.0).dtheta, WithinAbs(0.0, 1e-15));
}

TEST_CASE("Legendre evaluation matches direct summation", "[pes][legendre][property]") {
    const auto s = parse(kMixed);
    const auto surf = make_series_surface(s, RadialDomain{2.0, 9.0});
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uR(2.0, 9.0), uT(0.0, units::kPi);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double R = uR(rng), th = uT(rng);
        const double ref = direct_sum(s, R, th);
        worst = std::max(worst, std::abs(surf.evaluate(R, th) - ref) / std::max(std::abs(ref), 1e-300));
    }
    CHECK(worst <= 1e-12);
}

TEST_CASE("cm-1 coefficient files are converted to hartree", "[pes][legendre]") {
    const auto s = parse("legendre-series Λ=0 r_unit=bohr e_unit=cm-1\nlambda 0\nanalytic constant 219474.6313632\n");
    CHECK_THAT(make_series_surface(s).evaluate(4.0, 1.0), WithinRel(1.0, 1e-15));
}

TEST_CASE("gradient and curvature agree with finite differences", "[pes][gradient][property]") {
    const std::vector<PotentialSurface> surfaces{make_series_surface(parse(kMixed), RadialDomain{2.0, 9.0}),
                                                 make_surrogate("licn-surrogate", {}, {1.0, 12.0})};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uR(2.6, 8.0), uT(0.05, units::kPi - 0.05);
    const double h = std::cbrt(std::numeric_limits<double>::epsilon());
    for (const auto& surf : surfaces) {
        double worst = 0.0;
        for (int i = 0; i < 500; ++i) {
            const double R = uR(rng), th = uT(rng);
            const auto g = surf.gradient(R, th);
            const double hR = h * R, hT = h * std::max(th, 1.0);
            const double fR = (surf.evaluate(R + hR, th) - surf.evaluate(R - hR, th)) / (2 * hR);
            const double fT = (surf.evaluate(R, th + hT) - surf.evaluate(R, th - hT)) / (2 * hT);
            const double scale = std::max({std::abs(g.dR), std::abs(g.dtheta), 1e-4});
            worst = std::max({worst, std::abs(g.dR - fR) / scale, std::abs(g.dtheta - fT) / scale});
        }
        INFO(surf.describe());
        CHECK(worst <= 1e-6);
    }
}

TEST_CASE("surfaces are even about the linear configurations", "[pes][symmetry][property]") {
    const auto surf = make_series_surface(parse(kMixed), RadialDomain{2.0, 9.0});
    const auto sur = make_surrogate("licn-surrogate", {}, {1.0, 12.0});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uR(2.5, 8.5), uT(0.0, units::kPi);
    for (int i = 0; i < 200; ++i) {
        const double R = uR(rng), th = uT(rng);
        const auto a = surf.local_extended(R, -th), b = surf.local_extended(R, th);
        CHECK(a.v == b.v);
        CHECK(a.d1 == -b.d1);
        CHECK_THAT(b.v, WithinAbs(surf.evaluate(R, th), 1e-15));
        CHECK_THAT(sur.local_extended(R, 2 * units::kPi - th).v, WithinRel(sur.evaluate(R, th), 1e-12));
    }
    for (double R : {3.0, 4.4, 6.0}) {
        CHECK_THAT(sur.gradient(R, 0.0).dtheta, WithinAbs(0.0, 1e-14));
        CHECK_THAT(sur.gradient(R, units::kPi).dtheta, WithinAbs(0.0, 1e-14));
    }
}

TEST_CASE("out-of-domain evaluation names the coordinate", "[pes][errors]") {
    const auto surf = make_surrogate("separable", {}, {2.0, 6.0});
    try {
        surf.evaluate(7.0, 1.0);
        FAIL("no throw");
    } catch (const DomainError& e) {
        CHECK(e.coordinate() == "R");
    }
    try {
        surf.evaluate(4.0, -0.1);
        FAIL("no throw");
    } catch (const DomainError& e) {
        CHECK(e.coordinate() == "theta");
    }
}

TEST_CASE("coefficient file validation", "[pes][legendre][errors]") {
    SECTION("constant file evaluates everywhere to its value") {
        const auto s = parse("legendre-series Λ=0 r_unit=bohr e_unit=hartree\nlambda 0\nanalytic constant 0.1\n");
        const auto surf = make_series_surface(s);
        CHECK(surf.evaluate(1.0, 0.3) == 0.1);
        CHECK(surf.evaluate(15.0, 2.9) == 0.1);
    }
    SECTION("missing lambda block") {
        std::string text = "legendre-series Λ=9 r_unit=bohr e_unit=hartree\n";
        for (int l = 0; l <= 9; ++l) {
            if (l == 3) continue;
            text += "lambda " + std::to_string(l) + "\nanalytic constant 0\n";
        }
        try {
            parse(text);
            FAIL("no throw");
        } catch (const ParseError& e) {
            CHECK(e.line() == 8); // where "lambda 4" appears
            CHECK(std::string(e.what()).find("lambda 3") != std::string::npos);
        }
    }
    SECTION("non-monotone table") {
        CHECK_THROWS_AS(parse("legendre-series Λ=0 r_unit=bohr e_unit=hartree\nlambda 0\ntable 3\n"
                              "1 0\n2 0\n1.5 0\n"),
                        ParseError);
    }
    SECTION("wrong arity, unknown form, bad header, trailing text") {
        CHECK_THROWS_AS(parse("legendre-series Λ=0 r_unit=bohr e_unit=hartree\nlambda 0\nanalytic morse 1 2\n"),
                        ParseError);
        CHECK_THROWS_AS(parse("legendre-series Λ=0 r_unit=bohr e_unit=hartree\nlambda 0\nanalytic spline 1\n"),
                        ParseError);
        CHECK_THROWS_AS(parse("legendre-series Λ=0 r_unit=angstrom e_unit=hartree\nlambda 0\nanalytic constant 1\n"),
                        ParseError);
        CHECK_THROWS_AS(parse("legendre-series Λ=0 r_unit=bohr e_unit=hartree\nlambda 0\nanalytic constant 1\n"
                              "lambda 1\nanalytic constant 1\n"),
                        ParseError);
    }
}

TEST_CASE("coefficient files round-trip", "[pes][legendre]") {
    const auto s = parse(kMixed);
    std::ostringstream once;
    write_coefficients(once, s);
    const auto back = parse(once.str());
    std::ostringstream twice;
    write_coefficients(twice, back);
    CHECK(once.str() == twice.str());
    for (double R : {2.2, 4.4, 8.8})
        for (double th : {0.0, 1.0, 2.5}) {
            const auto a = make_series_surface(s, RadialDomain{2.0, 9.0}).evaluate(R, th);
            const auto b = make_series_surface(back, RadialDomain{2.0, 9.0}).evaluate(R, th);
            CHECK(a == b);
        }
}

TEST_CASE("natural spline reproduces straight lines and is C2", "[pes][spline]") {
    const CubicSpline line({0.0, 1.0, 2.5, 4.0}, {1.0, 3.0, 6.0, 9.0});
    for (double x : {0.3, 1.7, 3.9}) {
        CHECK_THAT(line(x).value, WithinAbs(1.0 + 2.0 * x, 1e-14));
        CHECK_THAT(line(x).curvature, WithinAbs(0.0, 1e-13));
    }
    const CubicSpline s({0.0, 0.5, 1.2, 2.0, 3.1}, {0.0, 0.4, -0.2, 0.9, 0.1});
    for (double knot : {0.5, 1.2, 2.0}) {
        const auto a = s(knot - 1e-9), b = s(knot + 1e-9);
        CHECK_THAT(a.value, WithinAbs(b.value, 1e-8));
        CHECK_THAT(a.slope, WithinAbs(b.slope, 1e-7));
        CHECK_THAT(a.curvature, WithinAbs(b.curvature, 1e-6));
    }
    CHECK_THAT(s(0.0).curvature, WithinAbs(0.0, 1e-14));
    CHECK_THAT(s(3.1).curvature, WithinAbs(0.0, 1e-12));
}

TEST_CASE("reduced masses", "[pes][masses]") {
    const auto m = MassParameters::licn();
    const double amu = units::kElectronMassPerAmu;
    CHECK_THAT(m.mu1, WithinRel(amu * 7.016003 * 26.003074 / 33.019077, 1e-15));
    CHECK_THAT(m.mu2, WithinRel(amu * 12.0 * 14.003074 / 26.003074, 1e-15));
    CHECK_THROWS_AS(MassParameters::make(7.0, 0.0, 14.0, 2.186), ConfigError);
    CHECK_THROWS_AS(MassParameters::make(7.0, 12.0, 14.0, -1.0), ConfigError);
}

TEST_CASE("minimum energy path", "[pes][mep]") {
    SECTION("separable surface has a flat path") {
        const auto surf = make_surrogate("separable", {{"R0", 4.3}}, {2.0, 7.0});
        const auto mep = minimum_energy_path(surf, uniform_theta_grid(91));
        for (const auto& p : mep.samples()) CHECK_THAT(p.radius, WithinAbs(4.3, 1e-10));
    }
    SECTION("built-in path 4 + 0.5 cos theta is recovered") {
        const auto surf = make_surrogate("shifted-path", {{"R0", 4.0}, {"dR", 0.5}}, {2.0, 7.0});
        const auto mep = minimum_energy_path(surf, uniform_theta_grid(181));
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> uT(0.0, units::kPi);
        for (int i = 0; i < 200; ++i) {
            const double th = uT(rng);
            CHECK_THAT(mep.radius(th), WithinAbs(4.0 + 0.5 * std::cos(th), 1e-6));
        }
        CHECK_THAT(mep.slope(0.0), WithinAbs(0.0, 1e-14));
        CHECK_THAT(mep.slope(units::kPi), WithinAbs(0.0, 1e-14));
    }
    SECTION("radial force vanishes and curvature is positive at every sample") {
        const auto surf = make_surrogate("licn-surrogate", {}, {1.0, 12.0});
        const auto mep = minimum_energy_path(surf, uniform_theta_grid(361));
        for (const auto& p : mep.samples()) {
            CHECK(std::abs(surf.gradient(p.radius, p.theta).dR) <= 1e-9);
            CHECK(surf.hessian(p.radius, p.theta).RR > 0.0);
            CHECK_THAT(p.energy, WithinAbs(surf.evaluate(p.radius, p.theta), 1e-15));
        }
    }
    SECTION("no bracketed minimum names the angle") {
        // a monotone radial profile has no interior minimum
        const auto s = parse("legendre-series Λ=0 r_unit=bohr e_unit=hartree\nlambda 0\nanalytic exponential 1 1\n");
        const auto surf = make_series_surface(s, RadialDomain{1.0, 5.0});
        CHECK_THROWS_AS(minimum_energy_path(surf, uniform_theta_grid(5)), PathError);
    }
}
