#include "ancov/config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ancov {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for " + key + ": '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: bad integer value for " + key + ": '" + v + "'");
    }
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    return out;
}

std::vector<std::string> parse_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

std::string join(const std::vector<std::string>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    return os.str();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
        std::string key = trim(s.substr(0, eq));
        std::string val = trim(s.substr(eq + 1));

        if (key == "model.clones.kind") c.clones_kind = val;
        else if (key == "model.clones.rate") c.clones_rate = parse_double(key, val);
        else if (key == "model.clones.breaks") c.clones_breaks = parse_list(key, val);
        else if (key == "model.clones.rates") c.clones_rates = parse_list(key, val);
        else if (key == "model.anchors.kind") c.anchors_kind = val;
        else if (key == "model.anchors.rate") c.anchors_rate = parse_double(key, val);
        else if (key == "model.anchors.breaks") c.anchors_breaks = parse_list(key, val);
        else if (key == "model.anchors.rates") c.anchors_rates = parse_list(key, val);
        else if (key == "model.lengths.kind") c.lengths_kind = val;
        else if (key == "model.lengths.param1") c.lengths_param1 = parse_double(key, val);
        else if (key == "model.lengths.param2") c.lengths_param2 = parse_double(key, val);
        else if (key == "model.lengths.values") c.lengths_values = parse_list(key, val);
        else if (key == "model.lengths.probs") c.lengths_probs = parse_list(key, val);
        else if (key == "run.G") c.G = parse_double(key, val);
        else if (key == "run.reps") c.reps = parse_u64(key, val);
        else if (key == "run.seed") c.seed = parse_u64(key, val);
        else if (key == "run.threads") c.threads = static_cast<int>(parse_u64(key, val));
        else if (key == "run.z") c.z = parse_double(key, val);
        else if (key == "run.zp") c.zp = parse_double(key, val);
        else if (key == "run.x") c.x = parse_double(key, val);
        else if (key == "run.u") c.u = parse_double(key, val);
        else if (key == "run.n") c.n = parse_double(key, val);
        else if (key == "run.grid") c.grid = parse_list(key, val);
        else if (key == "quad.abs_tol") c.quad.abs_tol = parse_double(key, val);
        else if (key == "quad.rel_tol") c.quad.rel_tol = parse_double(key, val);
        else if (key == "quad.tail_mass") c.quad.tail_mass = parse_double(key, val);
        else if (key == "quad.max_subdiv") c.quad.max_subdiv = static_cast<int>(parse_u64(key, val));
        else if (key == "exact.quantities") c.exact_quantities = parse_names(val);
        else if (key == "verify.tests") c.verify_tests = parse_names(val);
        else if (key == "scan.parameter") c.scan_parameter = val;
        else if (key == "scan.values") c.scan_values = parse_list(key, val);
        else if (key == "scan.quantity") c.scan_quantity = val;
        else if (key == "simulate.dump_prefix") c.simulate_dump_prefix = val;
        else if (key == "bounds.kappa") c.bounds_kappa = parse_list(key, val);
        else if (key == "bounds.alpha") c.bounds_alpha = parse_list(key, val);
        else if (key == "output.format") c.output_format = val;
        else if (key == "output.path") c.output_path = val;
        else throw ConfigError("config: unknown key '" + key + "'");
    }

    if (c.clones_kind != "constant" && c.clones_kind != "piecewise")
        throw ConfigError("config: model.clones.kind must be constant or piecewise");
    if (c.anchors_kind != "constant" && c.anchors_kind != "piecewise")
        throw ConfigError("config: model.anchors.kind must be constant or piecewise");
    if (c.lengths_kind != "deterministic" && c.lengths_kind != "exponential" &&
        c.lengths_kind != "uniform" && c.lengths_kind != "atoms")
        throw ConfigError("config: model.lengths.kind must be one of "
                          "deterministic|exponential|uniform|atoms");
    if (c.output_format != "csv" && c.output_format != "json")
        throw ConfigError("config: output.format must be csv or json");
    try {
        c.quad.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream os;
    os.precision(17);
    os << "model.clones.kind = " << c.clones_kind << '\n';
    if (c.clones_kind == "constant") {
        os << "model.clones.rate = " << c.clones_rate << '\n';
    } else {
        os << "model.clones.breaks = " << join(c.clones_breaks) << '\n';
        os << "model.clones.rates = " << join(c.clones_rates) << '\n';
    }
    os << "model.anchors.kind = " << c.anchors_kind << '\n';
    if (c.anchors_kind == "constant") {
        os << "model.anchors.rate = " << c.anchors_rate << '\n';
    } else {
        os << "model.anchors.breaks = " << join(c.anchors_breaks) << '\n';
        os << "model.anchors.rates = " << join(c.anchors_rates) << '\n';
    }
    os << "model.lengths.kind = " << c.lengths_kind << '\n';
    if (c.lengths_kind == "atoms") {
        os << "model.lengths.values = " << join(c.lengths_values) << '\n';
        os << "model.lengths.probs = " << join(c.lengths_probs) << '\n';
    } else {
        os << "model.lengths.param1 = " << c.lengths_param1 << '\n';
        if (c.lengths_kind == "uniform")
            os << "model.lengths.param2 = " << c.lengths_param2 << '\n';
    }
    os << "run.G = " << c.G << '\n';
    os << "run.reps = " << c.reps << '\n';
    os << "run.seed = " << c.seed << '\n';
    if (c.threads) os << "run.threads = " << c.threads << '\n';
    os << "run.z = " << c.z << '\n';
    os << "run.zp = " << c.zp << '\n';
    os << "run.x = " << c.x << '\n';
    os << "run.u = " << c.u << '\n';
    os << "run.n = " << c.n << '\n';
    if (!c.grid.empty()) os << "run.grid = " << join(c.grid) << '\n';
    os << "quad.abs_tol = " << c.quad.abs_tol << '\n';
    os << "quad.rel_tol = " << c.quad.rel_tol << '\n';
    os << "quad.tail_mass = " << c.quad.tail_mass << '\n';
    os << "quad.max_subdiv = " << c.quad.max_subdiv << '\n';
    if (!c.exact_quantities.empty()) os << "exact.quantities = " << join(c.exact_quantities) << '\n';
    if (!c.verify_tests.empty()) os << "verify.tests = " << join(c.verify_tests) << '\n';
    if (!c.scan_parameter.empty()) os << "scan.parameter = " << c.scan_parameter << '\n';
    if (!c.scan_values.empty()) os << "scan.values = " << join(c.scan_values) << '\n';
    if (!c.scan_quantity.empty()) os << "scan.quantity = " << c.scan_quantity << '\n';
    if (!c.simulate_dump_prefix.empty())
        os << "simulate.dump_prefix = " << c.simulate_dump_prefix << '\n';
    if (!c.bounds_kappa.empty()) os << "bounds.kappa = " << join(c.bounds_kappa) << '\n';
    if (!c.bounds_alpha.empty()) os << "bounds.alpha = " << join(c.bounds_alpha) << '\n';
    os << "output.format = " << c.output_format << '\n';
    if (!c.output_path.empty()) os << "output.path = " << c.output_path << '\n';
    return os.str();
}

ModelSpec RunConfig::to_model() const {
    IntensityMeasure clones =
        clones_kind == "constant"
            ? IntensityMeasure::constant(clones_rate)
            : IntensityMeasure::piecewise(clones_breaks, clones_rates);
    IntensityMeasure anchors =
        anchors_kind == "constant"
            ? IntensityMeasure::constant(anchors_rate)
            : IntensityMeasure::piecewise(anchors_breaks, anchors_rates);
    LengthLaw law = LengthLaw::deterministic(1.0);
    if (lengths_kind == "deterministic") law = LengthLaw::deterministic(lengths_param1);
    else if (lengths_kind == "exponential") law = LengthLaw::exponential(lengths_param1);
    else if (lengths_kind == "uniform") law = LengthLaw::uniform(lengths_param1, lengths_param2);
    else law = LengthLaw::atoms(lengths_values, lengths_probs);
    return ModelSpec(std::move(clones), std::move(anchors), PositionLengthMap(std::move(law)));
}

int RunConfig::effective_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("ANCOV_THREADS")) {
        int t = std::atoi(env);
        if (t > 0) return t;
    }
    return 1;
}

}  // namespace ancov
