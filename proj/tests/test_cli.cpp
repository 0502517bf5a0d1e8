#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ancov/cli.hpp"

using namespace ancov;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    std::string path = "/tmp/ancov_test_" + name;
    std::ofstream f(path);
    f << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run(std::vector<std::string> args) {
    std::vector<const char*> argv = {"ancov"};
    for (auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

double record_value(const std::string& csv, const std::string& quantity) {
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(quantity + ",", 0) == 0) {
            std::size_t q2 = line.rfind(',');
            std::size_t q1 = line.rfind(',', q2 - 1);
            return std::stod(line.substr(q1 + 1, q2 - q1 - 1));
        }
    }
    FAIL("quantity not found in csv: ", quantity);
    return 0;
}

}  // namespace

TEST_CASE("exact: rho of the empty clone field is one") {
    std::string cfg = write_temp("rho0.cfg",
                                 "model.clones.rate = 0\n"
                                 "exact.quantities = rho\n");
    std::string out = "/tmp/ancov_test_rho0.csv";
    CHECK(run({"exact", "--config", cfg, "--out", out}) == 0);
    CHECK(record_value(slurp(out), "rho") == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("exact: anchored mean and tau bound reference values") {
    std::string cfg = write_temp("exact.cfg",
                                 "run.G = 0\n"
                                 "exact.quantities = n_anchored_mean,tau_bound\n");
    std::string out = "/tmp/ancov_test_exact.csv";
    CHECK(run({"exact", "--config", cfg, "--out", out}) == 0);
    std::string csv = slurp(out);
    CHECK(record_value(csv, "n_anchored_mean") == doctest::Approx(0.6321205588285577).epsilon(1e-8));
    CHECK(record_value(csv, "tau_bound") == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("exact: json output carries the same value") {
    std::string cfg = write_temp("json.cfg", "exact.quantities = phi\nrun.u = 2\n");
    std::string out = "/tmp/ancov_test_phi.json";
    CHECK(run({"exact", "--config", cfg, "--out", out, "--format", "json"}) == 0);
    std::string text = slurp(out);
    CHECK(text.find("\"quantity\": \"phi\"") != std::string::npos);
    CHECK(text.find("0.86466") != std::string::npos);
}

TEST_CASE("simulate: degenerate models give full ocean") {
    std::string cfg = write_temp("sim0.cfg",
                                 "model.clones.rate = 0\n"
                                 "run.G = 40\nrun.reps = 50\n");
    std::string out = "/tmp/ancov_test_sim0.csv";
    CHECK(run({"simulate", "--config", cfg, "--out", out}) == 0);
    std::string csv = slurp(out);
    CHECK(record_value(csv, "ocean_mean") == doctest::Approx(40.0));
    CHECK(record_value(csv, "ocean_variance") == doctest::Approx(0.0));
}

TEST_CASE("simulate: identical bytes across reruns and thread counts") {
    std::string cfg = write_temp("simdet.cfg", "run.G = 20\nrun.reps = 300\nrun.seed = 5\n");
    std::string o1 = "/tmp/ancov_test_det1.csv", o2 = "/tmp/ancov_test_det2.csv";
    CHECK(run({"simulate", "--config", cfg, "--out", o1, "--threads", "1"}) == 0);
    CHECK(run({"simulate", "--config", cfg, "--out", o2, "--threads", "4"}) == 0);
    CHECK(slurp(o1) == slurp(o2));
    CHECK(run({"simulate", "--config", cfg, "--out", o2, "--threads", "1"}) == 0);
    CHECK(slurp(o1) == slurp(o2));
}

TEST_CASE("simulate: realization dump writes the three csv files") {
    std::string cfg = write_temp("dump.cfg",
                                 "run.G = 15\nrun.reps = 10\nrun.seed = 2\n"
                                 "simulate.dump_prefix = /tmp/ancov_test_dump\n");
    CHECK(run({"simulate", "--config", cfg, "--out", "/tmp/ancov_test_dump.csv"}) == 0);
    CHECK(slurp("/tmp/ancov_test_dump_clones.csv").rfind("right_end,length\n", 0) == 0);
    CHECK(slurp("/tmp/ancov_test_dump_anchors.csv").rfind("position\n", 0) == 0);
    CHECK(slurp("/tmp/ancov_test_dump_islands.csv").rfind("start,end\n", 0) == 0);
}

TEST_CASE("simulate: --seed override changes the sample, same seed repeats it") {
    std::string cfg = write_temp("seedover.cfg", "run.G = 20\nrun.reps = 200\nrun.seed = 5\n");
    std::string a = "/tmp/ancov_test_sa.csv", b = "/tmp/ancov_test_sb.csv";
    CHECK(run({"simulate", "--config", cfg, "--out", a, "--seed", "6"}) == 0);
    CHECK(run({"simulate", "--config", cfg, "--out", b, "--seed", "7"}) == 0);
    CHECK(slurp(a) != slurp(b));
    CHECK(run({"simulate", "--config", cfg, "--out", b, "--seed", "6"}) == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("verify: quadrature invariants pass on the unit model") {
    std::string cfg = write_temp("ver.cfg", "verify.tests = sandwich,envelopes\n");
    std::string out = "/tmp/ancov_test_ver.csv";
    CHECK(run({"verify", "--config", cfg, "--out", out}) == 0);
    std::string csv = slurp(out);
    CHECK(csv.find("variance_sandwich") != std::string::npos);
    CHECK(csv.find("component_envelopes") != std::string::npos);
}

TEST_CASE("scan: empty grid yields empty output with success") {
    std::string cfg = write_temp("scan0.cfg",
                                 "scan.parameter = kappa\nscan.quantity = rho\n");
    std::string out = "/tmp/ancov_test_scan0.csv";
    CHECK(run({"scan", "--config", cfg, "--out", out}) == 0);
    CHECK(slurp(out) == "quantity,params,value,stderr\n");
}

TEST_CASE("scan: rho decreases along an alpha grid") {
    std::string cfg = write_temp("scan.cfg",
                                 "scan.parameter = alpha\n"
                                 "scan.quantity = rho\n"
                                 "scan.values = 0.5,1,2,8\n");
    std::string out = "/tmp/ancov_test_scan.csv";
    CHECK(run({"scan", "--config", cfg, "--out", out}) == 0);
    std::istringstream in(slurp(out));
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> values;
    while (std::getline(in, line)) {
        std::size_t q2 = line.rfind(',');
        std::size_t q1 = line.rfind(',', q2 - 1);
        values.push_back(std::stod(line.substr(q1 + 1, q2 - q1 - 1)));
    }
    REQUIRE(values.size() == 4);
    for (std::size_t i = 1; i < values.size(); ++i) CHECK(values[i] < values[i - 1]);
}

TEST_CASE("exit codes: config, numeric, parse") {
    std::string bad_key = write_temp("bad.cfg", "model.clones.bogus = 1\n");
    CHECK(run({"exact", "--config", bad_key}) == 2);
    CHECK(run({"exact", "--config", "/tmp/ancov_no_such_file.cfg"}) == 2);

    // a window of two clone lengths is far from the Gaussian regime, so the
    // normality check genuinely fails and verify exits 1
    std::string small_window = write_temp("cltsmall.cfg",
                                          "verify.tests = clt\n"
                                          "run.G = 2\nrun.reps = 2000\nrun.seed = 3\n");
    CHECK(run({"verify", "--config", small_window, "--out", "/tmp/ancov_test_clt.csv"}) == 1);

    // starved subdivision budget cannot reach the requested tolerance
    std::string starved = write_temp("starved.cfg",
                                     "exact.quantities = rho\n"
                                     "model.lengths.kind = exponential\n"
                                     "model.lengths.param1 = 1\n"
                                     "quad.abs_tol = 1e-16\n"
                                     "quad.rel_tol = 1e-16\n"
                                     "quad.tail_mass = 1e-17\n"
                                     "quad.max_subdiv = 3\n");
    CHECK(run({"exact", "--config", starved}) == 3);
}
