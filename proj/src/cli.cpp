#include "ancov/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ancov/formulas.hpp"
#include "ancov/sampler.hpp"
#include "ancov/stats.hpp"

namespace ancov {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string records_to_csv(const std::vector<Record>& records) {
    std::ostringstream os;
    os << "quantity,params,value,stderr\n";
    for (const Record& r : records) {
        os << r.quantity << ",\"" << r.params << "\"," << fmt(r.value) << ',';
        if (std::isfinite(r.stderr_)) os << fmt(r.stderr_);
        os << '\n';
    }
    return os.str();
}

std::string records_to_json(const std::vector<Record>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Record& r : records) {
        nlohmann::json row = {{"quantity", r.quantity}, {"params", r.params}, {"value", r.value}};
        if (std::isfinite(r.stderr_)) row["stderr"] = r.stderr_;
        arr.push_back(row);
    }
    return arr.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<TestReport>& reports) {
    std::ostringstream os;
    os << "test,statistic,score,score_kind,pass,seed,reps,note\n";
    for (const TestReport& t : reports) {
        bool has_p = std::isfinite(t.p_value);
        bool has_z = std::isfinite(t.z_score);
        os << t.name << ',' << fmt(t.statistic) << ',';
        if (has_p) os << fmt(t.p_value) << ",p_value";
        else if (has_z) os << fmt(t.z_score) << ",z_score";
        else os << ",none";
        os << ',' << (t.pass ? "1" : "0") << ',' << t.seed << ',' << t.reps << ",\"" << t.note
           << "\"\n";
    }
    return os.str();
}

std::string reports_to_json(const std::vector<TestReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const TestReport& t : reports) {
        nlohmann::json row = {{"test", t.name},  {"statistic", t.statistic},
                              {"pass", t.pass},  {"seed", t.seed},
                              {"reps", t.reps}};
        if (std::isfinite(t.p_value)) row["p_value"] = t.p_value;
        if (std::isfinite(t.z_score)) row["z_score"] = t.z_score;
        if (!t.note.empty()) row["note"] = t.note;
        arr.push_back(row);
    }
    return arr.dump(2) + "\n";
}

namespace {

std::string model_params(const RunConfig& c) {
    std::ostringstream os;
    os << "clones=" << c.clones_kind;
    if (c.clones_kind == "constant") os << ":" << fmt(c.clones_rate);
    os << ";anchors=" << c.anchors_kind;
    if (c.anchors_kind == "constant") os << ":" << fmt(c.anchors_rate);
    os << ";lengths=" << c.lengths_kind << ":" << fmt(c.lengths_param1);
    if (c.lengths_kind == "uniform") os << ":" << fmt(c.lengths_param2);
    return os.str();
}

HomogeneousParams hom_params(const RunConfig& c) {
    ModelSpec spec = c.to_model();
    if (!spec.homogeneous())
        throw ConfigError("this quantity needs a homogeneous model (constant rates)");
    return as_homogeneous(spec);
}

}  // namespace

std::vector<Record> cmd_exact(const RunConfig& c) {
    std::vector<Record> out;
    ModelSpec spec = c.to_model();
    std::string base = model_params(c);
    std::vector<std::string> quantities = c.exact_quantities;
    if (quantities.empty()) quantities = {"rho"};

    // values are computed before each Record is built so an exception cannot
    // escape mid-aggregate (keeps older gcc from leaking the partial strings)
    for (const std::string& q : quantities) {
        if (q == "n_clone_mean") {
            double v = mean_clone_count(spec, c.x, c.quad);
            out.push_back({q, base + ";x=" + fmt(c.x), v});
        } else if (q == "n_anchored_mean") {
            double v = mean_anchored_count(spec, c.x, c.quad);
            out.push_back({q, base + ";x=" + fmt(c.x), v});
        } else if (q == "r_point") {
            double v = r_one_point(spec, c.z, c.quad);
            out.push_back({q, base + ";z=" + fmt(c.z), v});
        } else if (q == "rho") {
            double v = rho_hom(hom_params(c), c.quad);
            out.push_back({q, base, v});
        } else if (q == "j") {
            double v = j_weighted(hom_params(c), c.quad);
            out.push_back({q, base, v});
        } else if (q == "r_pair") {
            TwoPointDecomposition d = r_two_point(spec, c.z, c.zp, c.quad);
            std::string p = base + ";z=" + fmt(c.z) + ";zp=" + fmt(c.zp);
            out.push_back({"r_pair", p, d.total});
            out.push_back({"r_pair_r0", p, d.r0});
            out.push_back({"r_pair_r1", p, d.r1});
            out.push_back({"r_pair_r2", p, d.r2});
            out.push_back({"r_pair_r3", p, d.r3});
        } else if (q == "variance_constants") {
            VarianceConstants vc = variance_constants(hom_params(c), c.quad);
            out.push_back({"nu", base, vc.nu()});
            out.push_back({"lambda", base, vc.lambda()});
            out.push_back({"nu0", base, vc.nu0});
            out.push_back({"nu1", base, vc.nu1});
            out.push_back({"nu3", base, vc.nu3});
            out.push_back({"lambda0", base, vc.lambda0});
            out.push_back({"lambda1", base, vc.lambda1});
            out.push_back({"lambda3", base, vc.lambda3});
        } else if (q == "variance_exact") {
            double v = variance_exact(hom_params(c), c.G, c.quad);
            out.push_back({q, base + ";G=" + fmt(c.G), v});
        } else if (q == "tau_bound") {
            double v = tau_bound(hom_params(c), c.G);
            out.push_back({q, base + ";G=" + fmt(c.G), v});
        } else if (q == "phi") {
            double v = phi(c.u);
            out.push_back({q, "u=" + fmt(c.u), v});
        } else if (q == "nu_vanishing") {
            double v = nu_vanishing(hom_params(c), c.quad);
            out.push_back({q, base, v});
        } else if (q == "asymptotics") {
            LimitAsymptotics la = limit_asymptotics(hom_params(c), c.quad);
            out.push_back({"nu_smallL3", base, la.nu_smallL3});
            out.push_back({"ocean_deficit_smallKappa", base, la.ocean_deficit_smallKappa});
            out.push_back({"ocean_deficit_smallL", base, la.ocean_deficit_smallL});
        } else if (q == "mixing_bound") {
            double v = mixing_bound(hom_params(c), c.n, c.quad);
            out.push_back({q, base + ";n=" + fmt(c.n), v});
        } else if (q == "third_moment") {
            ThirdMomentResult tm = third_moment(hom_params(c), c.G, c.quad, c.seed);
            out.push_back({q, base + ";G=" + fmt(c.G), tm.value, tm.stderr_});
        } else if (q == "inhom_bounds") {
            if (c.bounds_kappa.size() != 2 || c.bounds_alpha.size() != 2)
                throw ConfigError("inhom_bounds needs bounds.kappa = lo,hi and bounds.alpha = lo,hi");
            HomogeneousParams hp = hom_params(c);
            UniformBandParams band{c.bounds_kappa[0], c.bounds_kappa[1], c.bounds_alpha[0],
                                   c.bounds_alpha[1], hp.lengths, hp.lengths};
            InhomogeneousBounds b = inhomogeneous_bounds(band, c.quad);
            out.push_back({"rho_minus", base, b.rho_minus});
            out.push_back({"rho_plus", base, b.rho_plus});
            out.push_back({"nu_minus", base, b.nu_minus});
            out.push_back({"nu_plus", base, b.nu_plus});
        } else {
            throw ConfigError("exact: unknown quantity '" + q + "'");
        }
    }
    return out;
}

std::vector<Record> cmd_simulate(const RunConfig& c) {
    ModelSpec spec = c.to_model();
    OceanStats st = estimate_ocean(spec, c.G, c.reps, c.seed, c.effective_threads());
    std::string p = model_params(c) + ";G=" + fmt(c.G) + ";reps=" + std::to_string(c.reps) +
                    ";seed=" + std::to_string(c.seed);
    std::vector<Record> out;
    out.push_back({"ocean_mean", p, st.mean, st.se_mean});
    out.push_back({"ocean_mean_fraction", p, st.mean / c.G, st.se_mean / c.G});
    out.push_back({"ocean_variance", p, st.variance, st.se_variance});
    out.push_back({"ocean_third_central", p, st.third_central, st.se_third});

    if (!c.simulate_dump_prefix.empty()) {
        double pad = pad_width(spec, 1e-9);
        RngStream crng(c.seed, 0), arng(c.seed, 1);
        CloneSet clones = sample_clones(spec, c.G, pad, crng);
        AnchorSet anchors = sample_anchors(spec, c.G, pad, arng);
        IslandSet isl = islands(anchored_clones(clones, anchors));
        std::ofstream fc(c.simulate_dump_prefix + "_clones.csv");
        write_clones_csv(fc, clones);
        std::ofstream fa(c.simulate_dump_prefix + "_anchors.csv");
        write_anchors_csv(fa, anchors);
        std::ofstream fi(c.simulate_dump_prefix + "_islands.csv");
        write_islands_csv(fi, isl);
    }
    return out;
}

namespace {

// quadrature-level invariants exposed through `verify`
TestReport sandwich_check(const RunConfig& c) {
    TestReport t;
    t.name = "variance_sandwich";
    t.seed = c.seed;
    auto analysis = two_point_analysis(hom_params(c), c.quad);
    VarianceConstants vc = analysis->constants();
    double worst = 0;
    bool pass = true;
    std::vector<double> gs = c.grid;
    if (gs.empty())
        for (int g = 1; g <= 20; ++g) gs.push_back(g);
    for (double G : gs) {
        double v = analysis->variance(G);
        double lo = vc.nu() * G - vc.lambda(), hi = vc.nu() * G;
        double slack = 1e-7 * (1.0 + G);
        worst = std::max({worst, lo - v, v - hi});
        if (v < lo - slack || v > hi + slack) pass = false;
    }
    t.statistic = worst;
    t.pass = pass;
    return t;
}

TestReport envelope_check(const RunConfig& c) {
    TestReport t;
    t.name = "component_envelopes";
    t.seed = c.seed;
    auto analysis = two_point_analysis(hom_params(c), c.quad);
    double alpha = analysis->params().alpha;
    double j = analysis->j_weighted();
    double worst = 0;
    bool pass = true;
    std::vector<double> zs = c.grid;
    if (zs.empty()) zs = {0.05, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
    for (double z : zs) {
        double e = std::exp(-alpha * z);
        double caps[3] = {e * j, alpha * z * e * j * j, (1 + alpha * z) * e * j * j};
        int comps[3] = {0, 1, 3};
        for (int i = 0; i < 3; ++i) {
            double v = analysis->rbar(comps[i], z);
            worst = std::max(worst, v - caps[i]);
            if (v > caps[i] + 1e-8) pass = false;
        }
    }
    t.statistic = worst;
    t.pass = pass;
    return t;
}

TestReport mean_check(const RunConfig& c) {
    ModelSpec spec = c.to_model();
    OceanStats st = estimate_ocean(spec, c.G, c.reps, c.seed, c.effective_threads());
    double rho = rho_hom(hom_params(c), c.quad);
    TestReport t;
    t.name = "mean_vs_rho";
    t.seed = c.seed;
    t.reps = c.reps;
    t.statistic = st.mean / c.G;
    t.z_score = (st.mean / c.G - rho) / (st.se_mean / c.G);
    t.pass = std::abs(t.z_score) <= 3.0;
    return t;
}

}  // namespace

std::vector<TestReport> cmd_verify(const RunConfig& c) {
    ModelSpec spec = c.to_model();
    int threads = c.effective_threads();
    std::vector<std::string> tests = c.verify_tests;
    if (tests.empty())
        tests = {"mean", "fkg", "dispersion_clone", "dispersion_anchored", "sandwich",
                 "envelopes", "clt", "wiener", "left_end"};

    std::vector<TestReport> out;
    // each test has its own minimum replication count; lift run.reps to it
    auto at_least = [&](std::uint64_t floor_reps) { return std::max(c.reps, floor_reps); };
    for (const std::string& name : tests) {
        if (name == "mean") out.push_back(mean_check(c));
        else if (name == "fkg")
            out.push_back(fkg_test(spec, c.z, c.zp, at_least(1000), c.seed, threads));
        else if (name == "clt") out.push_back(clt_test(spec, c.G, c.reps, c.seed, threads));
        else if (name == "wiener") {
            std::vector<double> grid = c.grid;
            if (grid.empty()) grid = {0.5, 1.0};
            out.push_back(wiener_covariance_test(spec, c.G, grid, c.reps, c.seed, threads));
        } else if (name == "dispersion_clone")
            out.push_back(count_dispersion_test(spec, c.x, at_least(10000), c.seed, false, threads));
        else if (name == "dispersion_anchored")
            out.push_back(count_dispersion_test(spec, c.x, at_least(10000), c.seed, true, threads));
        else if (name == "left_end")
            out.push_back(left_end_equivalence_test(spec, c.G, 10, 4, c.reps, c.seed, threads));
        else if (name == "sandwich") out.push_back(sandwich_check(c));
        else if (name == "envelopes") out.push_back(envelope_check(c));
        else throw ConfigError("verify: unknown test '" + name + "'");
    }
    return out;
}

std::vector<Record> cmd_scan(const RunConfig& c) {
    std::vector<Record> out;
    if (c.scan_values.empty()) return out;
    if (c.scan_parameter.empty() || c.scan_quantity.empty())
        throw ConfigError("scan needs scan.parameter and scan.quantity");

    for (double v : c.scan_values) {
        RunConfig point = c;
        if (c.scan_parameter == "kappa") point.clones_rate = v;
        else if (c.scan_parameter == "alpha") point.anchors_rate = v;
        else if (c.scan_parameter == "G") point.G = v;
        else if (c.scan_parameter == "z") point.zp = v;
        else throw ConfigError("scan: unknown parameter '" + c.scan_parameter + "'");

        std::string p = model_params(point) + ";" + c.scan_parameter + "=" + fmt(v);
        double value = 0;
        if (c.scan_quantity == "rho") {
            value = rho_hom(hom_params(point), c.quad);
        } else if (c.scan_quantity == "nu") {
            value = variance_constants(hom_params(point), c.quad).nu();
        } else if (c.scan_quantity == "nu_over_kappa") {
            double k = point.clones_rate;
            if (k <= 0) throw ConfigError("scan: nu_over_kappa needs kappa > 0");
            value = variance_constants(hom_params(point), c.quad).nu() / k;
        } else if (c.scan_quantity == "variance_exact") {
            value = variance_exact(hom_params(point), point.G, c.quad);
        } else if (c.scan_quantity == "r_pair") {
            value = r_two_point(point.to_model(), point.z, point.zp, c.quad).total;
        } else if (c.scan_quantity == "tau_bound") {
            value = tau_bound(hom_params(point), point.G);
        } else if (c.scan_quantity == "mixing_bound") {
            value = mixing_bound(hom_params(point), point.n, c.quad);
        } else {
            throw ConfigError("scan: unknown quantity '" + c.scan_quantity + "'");
        }
        out.push_back({c.scan_quantity, p, value});
    }
    return out;
}

namespace {

void write_output(const std::string& text, const std::string& path) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + path);
    f << text;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"anchored-coverage model toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, format;
    std::uint64_t seed = 0, reps = 0;
    int threads = 0;
    bool have_seed = false, have_reps = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--out", out_path, "output path (default: stdout)");
        sub->add_option("--format", format, "csv or json");
        sub->add_option("--seed", seed, "override run.seed")->each([&](std::string) {
            have_seed = true;
        });
        sub->add_option("--reps", reps, "override run.reps")->each([&](std::string) {
            have_reps = true;
        });
        sub->add_option("--threads", threads, "override worker count");
    };

    CLI::App* exact = app.add_subcommand("exact", "evaluate closed-form quantities");
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo ocean statistics");
    CLI::App* verify = app.add_subcommand("verify", "statistical test battery");
    CLI::App* scan = app.add_subcommand("scan", "evaluate a quantity over a parameter grid");
    for (CLI::App* sub : {exact, simulate, verify, scan}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        RunConfig config = load_config_file(config_path);
        if (have_seed) config.seed = seed;
        if (have_reps) config.reps = reps;
        if (threads > 0) config.threads = threads;
        if (!format.empty()) {
            if (format != "csv" && format != "json") throw ConfigError("--format must be csv|json");
            config.output_format = format;
        }
        if (!out_path.empty()) config.output_path = out_path;
        bool json = config.output_format == "json";

        if (exact->parsed()) {
            auto records = cmd_exact(config);
            write_output(json ? records_to_json(records) : records_to_csv(records),
                         config.output_path);
            return 0;
        }
        if (simulate->parsed()) {
            auto records = cmd_simulate(config);
            write_output(json ? records_to_json(records) : records_to_csv(records),
                         config.output_path);
            return 0;
        }
        if (scan->parsed()) {
            auto records = cmd_scan(config);
            write_output(json ? records_to_json(records) : records_to_csv(records),
                         config.output_path);
            return 0;
        }
        auto reports = cmd_verify(config);
        bool all_pass = true;
        for (const TestReport& t : reports) {
            std::cerr << (t.pass ? "PASS " : "FAIL ") << t.name;
            if (std::isfinite(t.p_value)) std::cerr << "  p=" << t.p_value;
            else if (std::isfinite(t.z_score)) std::cerr << "  z=" << t.z_score;
            if (!t.note.empty()) std::cerr << "  (" << t.note << ")";
            std::cerr << "\n";
            all_pass = all_pass && t.pass;
        }
        write_output(json ? reports_to_json(reports) : reports_to_csv(reports),
                     config.output_path);
        return all_pass ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace ancov
