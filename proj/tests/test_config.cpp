#include <doctest.h>

#include "ancov/config.hpp"

using namespace ancov;

TEST_CASE("defaults serialize and round-trip") {
    RunConfig c;
    std::string text = serialize_config(c);
    RunConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);  // idempotent
    CHECK(back.clones_rate == c.clones_rate);
    CHECK(back.reps == c.reps);
}

TEST_CASE("piecewise and atom schemas round-trip") {
    RunConfig c;
    c.clones_kind = "piecewise";
    c.clones_breaks = {0.0, 2.5};
    c.clones_rates = {0.5, 2.0, 0.5};
    c.lengths_kind = "atoms";
    c.lengths_values = {0.5, 1.5};
    c.lengths_probs = {0.25, 0.75};
    c.grid = {0.5, 1.0};
    c.exact_quantities = {"rho", "variance_exact"};
    std::string text = serialize_config(c);
    RunConfig back = parse_config(text);
    CHECK(serialize_config(back) == text);
    CHECK(back.clones_rates.size() == 3);
    CHECK(back.lengths_probs[1] == 0.75);
    CHECK(back.exact_quantities[1] == "variance_exact");
}

TEST_CASE("unknown keys and malformed lines are rejected") {
    CHECK_THROWS_AS(parse_config("model.clones.ratee = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.G 100\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("run.G = asdf\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("model.lengths.kind = weibull\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("output.format = yaml\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("quad.abs_tol = -1\n"), ConfigError);
    CHECK_NOTHROW(parse_config("# comment only\n\n"));
}

TEST_CASE("to_model builds the requested spec") {
    RunConfig c;
    c.clones_rate = 2.0;
    c.anchors_rate = 3.0;
    c.lengths_kind = "exponential";
    c.lengths_param1 = 1.5;
    ModelSpec spec = c.to_model();
    CHECK(spec.homogeneous());
    CHECK(spec.kappa() == 2.0);
    CHECK(spec.alpha() == 3.0);
    CHECK(spec.length_law().kind() == LengthLaw::Kind::Exponential);

    c.anchors_kind = "piecewise";
    c.anchors_breaks = {1.0};
    c.anchors_rates = {0.0, 1.0};
    CHECK_FALSE(c.to_model().homogeneous());
}

TEST_CASE("threads resolution") {
    RunConfig c;
    c.threads = 3;
    CHECK(c.effective_threads() == 3);
    c.threads = 0;
    CHECK(c.effective_threads() >= 1);
}
