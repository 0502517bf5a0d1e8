#include <doctest.h>

#include <cmath>

#include "ancov/model.hpp"
#include "ancov/rng.hpp"

using namespace ancov;

TEST_CASE("measure: constant and empty interval") {
    auto m = IntensityMeasure::constant(2.0);
    CHECK(measure(m, 0, 3) == doctest::Approx(6.0));
    CHECK(measure(m, 5, 5) == 0.0);
    CHECK_THROWS_AS(measure(m, 1, 0), std::invalid_argument);
}

TEST_CASE("measure: piecewise hand sum") {
    // rate 1 below 0, 1 on (0,1], 3 beyond 1
    auto m = IntensityMeasure::piecewise({0.0, 1.0}, {1.0, 1.0, 3.0});
    CHECK(measure(m, 0.5, 1.5) == doctest::Approx(0.5 * 1 + 0.5 * 3));
}

TEST_CASE("measure: additivity over abutting intervals") {
    auto m = IntensityMeasure::piecewise({0.0, 2.0, 5.0}, {0.5, 2.0, 0.0, 1.5});
    QuadConfig q;
    double whole = measure(m, -3, 8);
    double split = measure(m, -3, 1.3) + measure(m, 1.3, 8);
    CHECK(whole == doctest::Approx(split).epsilon(1e-12));

    auto d = IntensityMeasure::density([](double x) { return 0.5 + 0.4 * std::sin(x); }, 1.0);
    double dw = measure(d, -2, 3, q);
    double ds = measure(d, -2, 0.7, q) + measure(d, 0.7, 3, q);
    CHECK(dw == doctest::Approx(ds).epsilon(1e-9));
}

TEST_CASE("density intensity audits its bound") {
    CHECK_THROWS_AS(IntensityMeasure::density([](double) { return 2.0; }, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(IntensityMeasure::density([](double x) { return x; }, 1.0),
                    std::invalid_argument);  // negative on the audit grid
}

TEST_CASE("survival conventions") {
    auto det = LengthLaw::deterministic(1.0);
    CHECK(det.survival(1.0) == 1.0);  // closed at the atom
    CHECK(det.survival(1.0 + 1e-12) == 0.0);
    auto ex = LengthLaw::exponential(1.0);
    CHECK(ex.survival(0.0) == 1.0);
    auto ex2 = LengthLaw::exponential(2.0);
    CHECK(ex2.survival(2.0) == doctest::Approx(std::exp(-1.0)));
    CHECK_THROWS_AS(ex.survival(-0.5), std::invalid_argument);

    auto uni = LengthLaw::uniform(0.5, 1.5);
    CHECK(uni.survival(0.2) == 1.0);
    CHECK(uni.survival(1.0) == doctest::Approx(0.5));
    CHECK(uni.survival(2.0) == 0.0);

    auto at = LengthLaw::atoms({0.5, 2.0}, {0.25, 0.75});
    CHECK(at.survival(0.5) == doctest::Approx(1.0));
    CHECK(at.survival(1.0) == doctest::Approx(0.75));
}

TEST_CASE("survival is a proper survival function on a grid") {
    for (auto law : {LengthLaw::deterministic(1.5), LengthLaw::exponential(0.7),
                     LengthLaw::uniform(0.2, 2.0), LengthLaw::atoms({0.3, 1.0, 4.0}, {0.2, 0.5, 0.3})}) {
        CHECK(law.survival(0.0) == 1.0);
        double prev = 1.0;
        for (double t = 0.0; t < 8.0; t += 0.05) {
            double s = law.survival(t);
            CHECK(s <= prev + 1e-15);
            prev = s;
        }
        CHECK(law.survival(50.0) <= 1e-15);
    }
}

TEST_CASE("quantile brackets the survival") {
    for (auto law : {LengthLaw::exponential(2.0), LengthLaw::uniform(0.0, 3.0)}) {
        for (double p : {0.1, 0.5, 0.9, 0.999}) {
            double q = law.quantile(p);
            CHECK(law.survival(q + 1e-9) <= 1 - p + 1e-6);
            CHECK(law.survival(std::max(q - 1e-9, 0.0)) >= 1 - p - 1e-6);
        }
    }
    // atom laws: survival jumps across the quantile
    auto det = LengthLaw::deterministic(2.0);
    CHECK(det.quantile(0.5) == 2.0);
    CHECK(det.survival(2.0 + 1e-12) <= 0.5);
}

TEST_CASE("mean excess matches the survival integral") {
    QuadConfig q;
    for (auto law : {LengthLaw::deterministic(1.0), LengthLaw::exponential(1.3),
                     LengthLaw::uniform(0.5, 2.5), LengthLaw::atoms({0.5, 2.0}, {0.4, 0.6})}) {
        for (double u : {0.0, 0.3, 1.0, 2.2}) {
            double direct = integrate([&](double t) { return law.survival(t); }, u, 50.0, q,
                                      {law.param1(), law.param2(), 0.5, 2.0});
            CHECK(law.mean_excess(u) == doctest::Approx(direct).epsilon(1e-7));
        }
    }
}

TEST_CASE("empirical survival matches survival() within binomial bands") {
    RngStream rng(42, 0);
    auto laws = {LengthLaw::exponential(1.0), LengthLaw::uniform(0.5, 2.0),
                 LengthLaw::atoms({0.5, 1.0, 3.0}, {0.3, 0.5, 0.2})};
    const int n = 100000;
    for (const auto& law : laws) {
        std::vector<double> sample(n);
        for (auto& s : sample) {
            // inversion through the quantile covers every variant
            s = law.quantile(rng.uniform());
        }
        for (double t : {0.1, 0.5, 1.0, 1.9}) {
            double emp = 0;
            for (double s : sample) emp += (s >= t) ? 1 : 0;
            emp /= n;
            double sv = law.survival(t);
            double band = 3 * std::sqrt(std::max(sv * (1 - sv), 1e-12) / n) + 1e-9;
            CHECK(std::abs(emp - sv) <= band);
        }
    }
}

TEST_CASE("ModelSpec homogeneous flag") {
    auto hom = homogeneous_spec(1.0, 1.0, LengthLaw::deterministic(1.0));
    CHECK(hom.homogeneous());
    ModelSpec inhom(IntensityMeasure::piecewise({0.0}, {1.0, 2.0}),
                    IntensityMeasure::constant(1.0),
                    PositionLengthMap(LengthLaw::deterministic(1.0)));
    CHECK_FALSE(inhom.homogeneous());
    CHECK_THROWS_AS(inhom.kappa(), std::logic_error);
}

TEST_CASE("left-end intensity is the clone rate for homogeneous models") {
    QuadConfig q;
    auto spec1 = homogeneous_spec(1.0, 1.0, LengthLaw::deterministic(1.0));
    for (double y : {-3.0, 0.0, 7.5})
        CHECK(left_end_intensity(spec1, y, q) == doctest::Approx(1.0).epsilon(1e-8));
    auto spec3 = homogeneous_spec(3.0, 1.0, LengthLaw::exponential(1.0));
    for (double y : {-1.0, 2.0})
        CHECK(left_end_intensity(spec3, y, q) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("left-end intensity of a one-sided clone field") {
    // clones only to the right of 0, unit lengths: left ends live on [-1, inf)
    QuadConfig q;
    ModelSpec spec(IntensityMeasure::piecewise({0.0}, {0.0, 1.0}),
                   IntensityMeasure::constant(1.0),
                   PositionLengthMap(LengthLaw::deterministic(1.0)));
    CHECK(left_end_intensity(spec, -0.5, q) == doctest::Approx(1.0));  // right end at 0.5
    CHECK(left_end_intensity(spec, -1.5, q) == doctest::Approx(0.0));
    CHECK(left_end_intensity(spec, 2.0, q) == doctest::Approx(1.0));
}

TEST_CASE("position-dependent length law lookup") {
    PositionLengthMap map({0.0, 10.0}, {LengthLaw::deterministic(1.0),
                                        LengthLaw::exponential(2.0),
                                        LengthLaw::deterministic(3.0)});
    CHECK(map.at(-1.0).kind() == LengthLaw::Kind::Deterministic);
    CHECK(map.at(5.0).kind() == LengthLaw::Kind::Exponential);
    CHECK(map.at(11.0).param1() == 3.0);
    CHECK(map.support_top_sup() == kInf);
    CHECK(map.quantile_sup(0.5) >= 3.0);
}
