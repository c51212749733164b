#include "sovdebt/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sovdebt {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kColumns = "x,V,dV,p,dp,u_star,v_star,res_V,res_p";
constexpr std::size_t kColumnCount = 9;

void put17(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << buf;
}

double parse_field(std::string_view s, const std::string& source, std::size_t line) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = first + s.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || first == last)
        throw IoError(source + ":" + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

// Non-finite numbers become null in JSON.
ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json optional_num(const std::optional<double>& v) {
    return v ? num(*v) : ordered_json(nullptr);
}

ordered_json array_of(const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(num(x));
    return a;
}

ordered_json estimate_json(const McEstimate& e) {
    ordered_json j;
    j["mean"] = num(e.mean);
    j["standard_error"] = num(e.standard_error);
    j["n_paths"] = e.n_paths;
    j["truncation_bias_bound"] = num(e.truncation_bias_bound);
    return j;
}

}  // namespace

void write_solution(std::ostream& out, const Solution& s, const Model& model) {
    const std::size_t n = s.grid.nodes.size();
    const std::vector<double>* cols[] = {&s.grid.nodes, &s.V,      &s.dV,     &s.p,    &s.dp,
                                         &s.u_star,     &s.v_star, &s.res_V, &s.res_p};
    for (const auto* c : cols)
        if (c->size() != n) throw IoError("solution columns do not match the grid");

    const ModelParams& p = model.params;
    ordered_json h;
    h["format"] = "sovdebt-solution";
    h["version"] = 1;
    h["n"] = n;
    h["x_star"] = p.x_star;
    h["epsilon"] = s.epsilon;
    h["iterations"] = s.iterations;
    h["converged"] = s.converged;
    h["params"] = {{"r", p.r},
                   {"lambda", p.lambda},
                   {"mu", p.mu},
                   {"sigma", p.sigma},
                   {"B", p.bankruptcy_cost},
                   {"x_star", p.x_star},
                   {"v_max", p.v_max},
                   {"alpha_L", model.costs.alpha_L()},
                   {"alpha_c", model.costs.alpha_c()},
                   {"kappa", model.risk.kappa()},
                   {"q", model.risk.q()},
                   {"m", model.salvage.m()}};
    out << "# " << h.dump() << '\n' << kColumns << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < kColumnCount; ++c) {
            if (c) out << ',';
            put17(out, (*cols[c])[i]);
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing solution");
}

void write_solution(const std::filesystem::path& path, const Solution& s, const Model& model) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_solution(out, s, model);
}

SolutionFile read_solution(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
        throw IoError(source + ":1: missing JSON header line");
    SolutionFile f;
    std::size_t n = 0;
    double x_star = 0.0;
    try {
        const auto h = nlohmann::json::parse(line.substr(2));
        if (h.at("format").get<std::string>() != "sovdebt-solution")
            throw IoError(source + ":1: not a solution file");
        n = h.at("n").get<std::size_t>();
        x_star = h.at("x_star").get<double>();
        const auto& p = h.at("params");
        f.header.params = ModelParams{p.at("r").get<double>(),     p.at("lambda").get<double>(),
                                      p.at("mu").get<double>(),    p.at("sigma").get<double>(),
                                      p.at("B").get<double>(),     p.at("x_star").get<double>(),
                                      p.at("v_max").get<double>()};
        f.header.alpha_L = p.at("alpha_L").get<double>();
        f.header.alpha_c = p.at("alpha_c").get<double>();
        f.header.kappa = p.at("kappa").get<double>();
        f.header.q = p.at("q").get<double>();
        f.header.m = p.at("m").get<double>();
        f.header.epsilon = h.at("epsilon").get<double>();
        f.header.iterations = h.at("iterations").get<std::size_t>();
        f.header.converged = h.at("converged").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(source + ":1: bad header: " + e.what());
    }
    if (!std::getline(in, line) || line != kColumns)
        throw IoError(source + ":2: expected column line '" + std::string(kColumns) + "'");
    if (n < 3) throw IoError(source + ":1: header n must be at least 3");

    Solution& s = f.solution;
    s.grid.n = n;
    s.grid.x_star = x_star;
    s.grid.h = x_star / static_cast<double>(n - 1);
    std::vector<double>* cols[] = {&s.grid.nodes, &s.V,      &s.dV,     &s.p,    &s.dp,
                                   &s.u_star,     &s.v_star, &s.res_V, &s.res_p};
    for (auto* c : cols) c->reserve(n);
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::size_t start = 0;
        for (std::size_t c = 0; c < kColumnCount; ++c) {
            const auto comma = line.find(',', start);
            const bool last = c + 1 == kColumnCount;
            if (last != (comma == std::string::npos))
                throw IoError(source + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(kColumnCount) + " fields");
            const std::string_view field(line.data() + start,
                                         (last ? line.size() : comma) - start);
            cols[c]->push_back(parse_field(field, source, line_no));
            start = comma + 1;
        }
    }
    if (s.grid.nodes.size() != n)
        throw IoError(source + ": header says " + std::to_string(n) + " rows, found " +
                      std::to_string(s.grid.nodes.size()));
    if (s.grid.nodes.front() != 0.0 || s.grid.nodes.back() != x_star)
        throw IoError(source + ": x column must run from 0 to x_star");
    s.epsilon = f.header.epsilon;
    s.iterations = f.header.iterations;
    s.converged = f.header.converged;
    return f;
}

SolutionFile read_solution(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_solution(in, path.string());
}

std::string header_mismatch(const SolutionHeader& h, const Model& model) {
    const ModelParams& p = model.params;
    const std::pair<const char*, std::pair<double, double>> fields[] = {
        {"r", {h.params.r, p.r}},
        {"lambda", {h.params.lambda, p.lambda}},
        {"mu", {h.params.mu, p.mu}},
        {"sigma", {h.params.sigma, p.sigma}},
        {"B", {h.params.bankruptcy_cost, p.bankruptcy_cost}},
        {"x_star", {h.params.x_star, p.x_star}},
        {"v_max", {h.params.v_max, p.v_max}},
        {"alpha_L", {h.alpha_L, model.costs.alpha_L()}},
        {"alpha_c", {h.alpha_c, model.costs.alpha_c()}},
        {"kappa", {h.kappa, model.risk.kappa()}},
        {"q", {h.q, model.risk.q()}},
        {"m", {h.m, model.salvage.m()}},
    };
    for (const auto& [name, vals] : fields) {
        if (vals.first != vals.second) {
            std::ostringstream os;
            os.precision(17);
            os << "parameter mismatch: " << name << " is " << vals.first << " in the solution but "
               << vals.second << " in the config";
            return os.str();
        }
    }
    return {};
}

std::string to_json(const BoundsReport& b, const BoundCurves* curves) {
    ordered_json j;
    j["theta_min"] = num(b.theta_min);
    j["K1"] = num(b.K1);
    j["x1"] = num(b.x1);
    j["M1"] = num(b.M1);
    j["log_M_star"] = num(b.log_M_star);
    j["gamma"] = num(b.gamma);
    j["k"] = num(b.k);
    j["log_k"] = num(b.log_k);
    j["x_bar0"] = num(b.x_bar0);
    j["log_x_bar0"] = num(b.log_x_bar0);
    j["beta_star"] = b.beta_star ? num(*b.beta_star) : ordered_json("divergent");
    j["v_dead_zone"] = num(b.v_dead_zone);
    j["log_v_dead_zone"] = num(b.log_v_dead_zone);
    j["C1"] = num(b.C1);
    j["salvage_lipschitz"] = num(b.salvage_lipschitz);
    if (curves) {
        ordered_json c;
        c["x_diamond"] = optional_num(curves->x_diamond.value);
        if (!curves->x_diamond.value) c["x_diamond_reason"] = curves->x_diamond.reason;
        c["x"] = array_of(curves->x);
        c["beta"] = array_of(curves->beta);
        c["V1"] = array_of(curves->V1);
        c["V2"] = array_of(curves->V2);
        c["p_minus"] = array_of(curves->p_minus);
        j["curves"] = std::move(c);
    }
    return j.dump(2);
}

std::string to_json(const VerificationReport& r) {
    ordered_json j;
    j["passed"] = r.passed();
    ordered_json checks = ordered_json::array();
    for (const auto& c : r.checks) {
        ordered_json e;
        e["name"] = c.name;
        e["status"] = to_string(c.status);
        e["worst_violation"] = num(c.worst_violation);
        e["witness"] = optional_num(c.witness);
        e["detail"] = c.detail;
        checks.push_back(std::move(e));
    }
    j["checks"] = std::move(checks);
    return j.dump(2);
}

std::string to_json(const RegimeClassification& c) {
    ordered_json j;
    j["label"] = to_string(c.label);
    ordered_json dv;
    dv["beta_star"] = c.beta_star ? num(*c.beta_star) : ordered_json("divergent");
    dv["threshold"] = num(c.devalue_threshold);
    dv["holds"] = c.devalue_test;
    j["devalue_pay_test"] = std::move(dv);
    ordered_json na;
    na["x_star"] = num(c.x_star);
    na["x_star_threshold"] = num(c.x_star_threshold);
    na["fast_blowup"] = c.fast_blowup;
    na["holds"] = c.no_action_test;
    j["no_action_test"] = std::move(na);
    return j.dump(2);
}

std::string to_json(const ContinuationTrace& t) {
    ordered_json j;
    ordered_json levels = ordered_json::array();
    for (const auto& l : t.levels) {
        ordered_json e;
        e["epsilon"] = num(l.epsilon);
        e["iterations"] = l.iterations;
        e["max_residual"] = num(l.max_residual);
        e["diff_V"] = num(l.diff_V);
        e["diff_p"] = num(l.diff_p);
        levels.push_back(std::move(e));
    }
    j["levels"] = std::move(levels);
    j["continuation_error"] = num(t.continuation_error());
    return j.dump(2);
}

std::string to_json(const McResult& r, const SimConfig& sim) {
    ordered_json j;
    j["x0"] = num(sim.x0);
    j["dt"] = num(sim.dt);
    j["horizon"] = num(r.horizon);
    j["seed"] = sim.seed;
    j["salvage_at_threshold"] = sim.salvage_at_threshold;
    j["running_cost_bound"] = num(r.running_cost_bound);
    j["value"] = estimate_json(r.value);
    j["bond"] = estimate_json(r.bond);
    j["outcomes"] = {{"hazard", r.hazard_count},
                     {"threshold", r.threshold_count},
                     {"repaid", r.repaid_count},
                     {"truncated", r.truncated_count}};
    return j.dump(2);
}

std::string to_json(const DeviationResult& r, const Perturbation& p) {
    ordered_json j;
    j["control"] = p.control == Perturbation::Control::U ? "u" : "v";
    j["delta"] = num(p.delta);
    j["from"] = num(p.from);
    j["to"] = num(p.to);
    j["delta_cost"] = num(r.delta_cost);
    j["standard_error"] = num(r.standard_error);
    j["ci_low"] = num(r.ci_low);
    j["ci_high"] = num(r.ci_high);
    j["base_cost"] = num(r.base_cost);
    j["perturbed_cost"] = num(r.perturbed_cost);
    return j.dump(2);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sovdebt
