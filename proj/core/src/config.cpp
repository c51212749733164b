#include "sovdebt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

namespace sovdebt {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string num17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Entry {
    std::string value;
    int line = 0;
    bool used = false;
};

struct Section {
    int line = 0;
    std::map<std::string, Entry> keys;
};

// Reads values out of one section, flagging anything left unread.
class SectionReader {
public:
    SectionReader(const std::string& source, const std::string& name, Section* section,
                  std::initializer_list<std::string_view> known)
        : source_(source), name_(name), section_(section) {
        if (!section_) return;
        // report the earliest stray key before any missing-key error, since it is often a typo
        const Entry* stray = nullptr;
        std::string stray_key;
        for (const auto& [k, e] : section_->keys) {
            if (std::find(known.begin(), known.end(), k) != known.end()) continue;
            if (!stray || e.line < stray->line) stray = &e, stray_key = k;
        }
        if (stray) fail(stray->line, "unknown key '" + stray_key + "' in section [" + name_ + "]");
    }

    std::optional<double> number(const std::string& key) {
        Entry* e = find(key);
        if (!e) return std::nullopt;
        return parse_double(*e, key);
    }

    double required(const std::string& key) {
        auto v = number(key);
        if (!v) fail(section_ ? section_->line : 0, "missing required key '" + key + "'");
        return *v;
    }

    std::optional<std::uint64_t> integer(const std::string& key) {
        Entry* e = find(key);
        if (!e) return std::nullopt;
        std::uint64_t out = 0;
        const char* first = e->value.data();
        const char* last = first + e->value.size();
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last)
            fail(e->line, "'" + key + "' expects a non-negative integer, got '" + e->value + "'");
        return out;
    }

    std::optional<bool> boolean(const std::string& key) {
        Entry* e = find(key);
        if (!e) return std::nullopt;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        fail(e->line, "'" + key + "' expects true or false, got '" + e->value + "'");
    }

    std::optional<std::string> text(const std::string& key) {
        Entry* e = find(key);
        if (!e) return std::nullopt;
        return e->value;
    }

    std::optional<std::vector<double>> list(const std::string& key) {
        Entry* e = find(key);
        if (!e) return std::nullopt;
        std::vector<double> out;
        std::stringstream ss(e->value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            Entry tmp{trim(item), e->line, true};
            out.push_back(parse_double(tmp, key));
        }
        if (out.empty()) fail(e->line, "'" + key + "' is an empty list");
        return out;
    }

    /// Line of `key`, or of the section header when the key is absent.
    int line_of(const std::string& key) const {
        if (!section_) return 0;
        auto it = section_->keys.find(key);
        return it != section_->keys.end() ? it->second.line : section_->line;
    }

    void require(bool ok, const std::string& key, const std::string& what) {
        if (!ok) fail(line_of(key), "'" + key + "' " + what);
    }

    void finish() {
        if (!section_) return;
        for (const auto& [k, e] : section_->keys)
            if (!e.used) fail(e.line, "unknown key '" + k + "' in section [" + name_ + "]");
    }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(source_, line, "[" + name_ + "] " + msg);
    }

private:
    Entry* find(const std::string& key) {
        if (!section_) return nullptr;
        auto it = section_->keys.find(key);
        if (it == section_->keys.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    double parse_double(const Entry& e, const std::string& key) const {
        double out = 0.0;
        const char* first = e.value.data();
        const char* last = first + e.value.size();
        if (first != last && *first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc() || ptr != last || first == last)
            fail(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
        return out;
    }

    const std::string& source_;
    std::string name_;
    Section* section_;
};

const std::vector<std::string> kSections{"model", "costs", "risk", "salvage", "solver", "sim", "output"};

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                                  : source + ": " + message),
      line_(line) {}

RunConfig parse_config(std::string_view text, const std::string& source) {
    std::map<std::string, Section> sections;
    Section* current = nullptr;
    std::string current_name;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string_view raw =
            text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        std::string line = trim(raw);
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line = trim(line.substr(0, c));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(source, line_no, "malformed section header");
            current_name = trim(line.substr(1, line.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), current_name) == kSections.end())
                throw ConfigError(source, line_no, "unknown section [" + current_name + "]");
            if (sections.count(current_name))
                throw ConfigError(source, line_no, "duplicate section [" + current_name + "]");
            current = &sections[current_name];
            current->line = line_no;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value'");
        if (!current) throw ConfigError(source, line_no, "key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(source, line_no, "empty key");
        if (value.empty()) throw ConfigError(source, line_no, "empty value for '" + key + "'");
        if (current->keys.count(key))
            throw ConfigError(source, line_no,
                              "duplicate key '" + key + "' in section [" + current_name + "]");
        current->keys[key] = Entry{value, line_no, false};
    }

    const auto section = [&](const std::string& name) -> Section* {
        auto it = sections.find(name);
        return it == sections.end() ? nullptr : &it->second;
    };
    for (const char* needed : {"model", "costs", "risk", "salvage"})
        if (!section(needed)) throw ConfigError(source, 0, std::string("missing section [") + needed + "]");

    RunConfig cfg;
    ModelParams& prm = cfg.model.params;

    SectionReader model(source, "model", section("model"),
                        {"r", "lambda", "mu", "sigma", "B", "x_star", "v_max"});
    prm.r = model.required("r");
    prm.lambda = model.required("lambda");
    prm.mu = model.required("mu");
    prm.sigma = model.required("sigma");
    prm.bankruptcy_cost = model.required("B");
    prm.x_star = model.required("x_star");
    prm.v_max = model.required("v_max");
    model.require(prm.r > 0.0, "r", "must be > 0");
    model.require(prm.lambda >= 0.0, "lambda", "must be >= 0");
    model.require(prm.sigma > 0.0, "sigma", "must be > 0 (the diffusion must not degenerate)");
    model.require(prm.bankruptcy_cost >= 0.0, "B", "must be >= 0");
    model.require(prm.x_star > 0.0, "x_star", "must be > 0");
    model.require(prm.v_max >= 0.0, "v_max", "must be >= 0");
    model.finish();

    SectionReader costs(source, "costs", section("costs"),
                        {"family", "alpha_L", "alpha_c"});
    const std::string cost_family = costs.text("family").value_or("barrier");
    costs.require(cost_family == "barrier", "family", "must be 'barrier'");
    const double alpha_L = costs.required("alpha_L");
    const double alpha_c = costs.required("alpha_c");
    costs.require(alpha_L >= 0.0, "alpha_L", "must be >= 0");
    costs.require(alpha_c >= 0.0, "alpha_c", "must be >= 0");
    costs.finish();
    cfg.model.costs = CostSpec::barrier(alpha_L, alpha_c, prm.v_max);

    SectionReader risk(source, "risk", section("risk"),
                       {"family", "kappa", "q"});
    const std::string risk_family = risk.text("family").value_or("power");
    risk.require(risk_family == "power", "family", "must be 'power'");
    const double kappa = risk.required("kappa");
    const double q = risk.required("q");
    risk.require(kappa > 0.0, "kappa", "must be > 0");
    risk.require(q > 0.0, "q", "must be > 0");
    risk.finish();
    cfg.model.risk = RiskSpec::power(kappa, q, prm.x_star);

    SectionReader salvage(source, "salvage", section("salvage"),
                          {"family", "m"});
    const std::string salvage_family = salvage.text("family").value_or("linear");
    salvage.require(salvage_family == "linear", "family", "must be 'linear'");
    const double m = salvage.required("m");
    salvage.require(m >= 0.0 && m < 1.0, "m", "must lie in [0, 1) so that theta(x*) > 0");
    salvage.finish();
    cfg.model.salvage = SalvageSpec::linear(m, prm.x_star);

    const ValidationReport report = validate_params(cfg.model);
    if (const AssumptionCheck* bad = report.first_failure()) {
        std::string msg = "model assumption failed: " + bad->name;
        if (bad->witness) msg += " at x = " + num17(*bad->witness);
        if (!bad->detail.empty()) msg += " (" + bad->detail + ")";
        throw ConfigError(source, 0, msg);
    }

    SectionReader solver(source, "solver", section("solver"),
                         {"n", "epsilon_schedule", "time_step_safety", "steady_state_tol",
                          "max_iterations", "policy_iteration", "howard_threshold"});
    if (auto v = solver.integer("n")) cfg.solver.n = *v;
    if (auto v = solver.list("epsilon_schedule")) cfg.solver.epsilon_schedule = *v;
    if (auto v = solver.number("time_step_safety")) cfg.solver.time_step_safety = *v;
    if (auto v = solver.number("steady_state_tol")) cfg.solver.steady_state_tol = *v;
    if (auto v = solver.integer("max_iterations")) cfg.solver.max_iterations = *v;
    if (auto v = solver.boolean("policy_iteration")) cfg.solver.policy_iteration = *v;
    if (auto v = solver.number("howard_threshold")) cfg.solver.howard_threshold = *v;
    solver.finish();
    try {
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        solver.fail(section("solver") ? section("solver")->line : 0, e.what());
    }

    SectionReader sim(source, "sim", section("sim"),
                      {"dt", "horizon", "n_paths", "seed", "x0", "threads", "salvage_at_threshold"});
    if (auto v = sim.number("dt")) cfg.sim.dt = *v;
    if (auto v = sim.number("horizon")) cfg.sim.horizon = *v;
    if (auto v = sim.integer("n_paths")) cfg.sim.n_paths = *v;
    if (auto v = sim.integer("seed")) cfg.sim.seed = *v;
    if (auto v = sim.number("x0")) cfg.sim.x0 = *v;
    if (auto v = sim.integer("threads")) cfg.sim.threads = *v;
    if (auto v = sim.boolean("salvage_at_threshold")) cfg.sim.salvage_at_threshold = *v;
    sim.finish();
    sim.require(cfg.sim.x0 <= prm.x_star, "x0", "must lie in [0, x_star]");
    try {
        cfg.sim.validate();
    } catch (const std::invalid_argument& e) {
        sim.fail(section("sim") ? section("sim")->line : 0, e.what());
    }

    SectionReader output(source, "output", section("output"), {"dir"});
    if (auto v = output.text("dir")) cfg.output_dir = *v;
    output.finish();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string(), 0, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.string());
}

std::string to_config_text(const RunConfig& c) {
    const ModelParams& p = c.model.params;
    std::ostringstream os;
    os << "[model]\n"
       << "r = " << num17(p.r) << "\nlambda = " << num17(p.lambda) << "\nmu = " << num17(p.mu)
       << "\nsigma = " << num17(p.sigma) << "\nB = " << num17(p.bankruptcy_cost)
       << "\nx_star = " << num17(p.x_star) << "\nv_max = " << num17(p.v_max) << "\n\n";
    os << "[costs]\nfamily = barrier\nalpha_L = " << num17(c.model.costs.alpha_L())
       << "\nalpha_c = " << num17(c.model.costs.alpha_c()) << "\n\n";
    os << "[risk]\nfamily = power\nkappa = " << num17(c.model.risk.kappa())
       << "\nq = " << num17(c.model.risk.q()) << "\n\n";
    os << "[salvage]\nfamily = linear\nm = " << num17(c.model.salvage.m()) << "\n\n";
    os << "[solver]\nn = " << c.solver.n << "\nepsilon_schedule = ";
    for (std::size_t i = 0; i < c.solver.epsilon_schedule.size(); ++i)
        os << (i ? ", " : "") << num17(c.solver.epsilon_schedule[i]);
    os << "\ntime_step_safety = " << num17(c.solver.time_step_safety)
       << "\nsteady_state_tol = " << num17(c.solver.steady_state_tol)
       << "\nmax_iterations = " << c.solver.max_iterations
       << "\npolicy_iteration = " << (c.solver.policy_iteration ? "true" : "false")
       << "\nhoward_threshold = " << num17(c.solver.howard_threshold) << "\n\n";
    os << "[sim]\ndt = " << num17(c.sim.dt) << "\n";
    if (c.sim.horizon) os << "horizon = " << num17(*c.sim.horizon) << "\n";
    os << "n_paths = " << c.sim.n_paths << "\nseed = " << c.sim.seed << "\nx0 = " << num17(c.sim.x0)
       << "\nthreads = " << c.sim.threads
       << "\nsalvage_at_threshold = " << (c.sim.salvage_at_threshold ? "true" : "false") << "\n\n";
    os << "[output]\ndir = " << c.output_dir << "\n";
    return os.str();
}

}  // namespace sovdebt
