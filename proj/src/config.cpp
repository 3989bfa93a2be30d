#include "rvmret/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rvmret/errors.hpp"

namespace rvmret {

namespace {

using nlohmann::json;

struct Position {
    int line = 1;
    int column = 1;
};

Position position_of(const std::string& text, std::size_t offset) {
    Position p;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

// Line of "key": searched after the section's own key, a good guess for hand-written files.
int line_of_key(const std::string& text, const std::string& section, const std::string& key) {
    std::size_t from = 0;
    if (!section.empty()) {
        const std::size_t s = text.find("\"" + section + "\"");
        if (s != std::string::npos) from = s + section.size() + 2;
    }
    std::size_t at = text.find("\"" + key + "\"", from);
    if (at == std::string::npos) at = text.find("\"" + key + "\"");
    if (at == std::string::npos) return 0;
    return position_of(text, at).line;
}

class Reader {
public:
    Reader(const std::string& text, const std::string& source) : text_(text), source_(source) {}

    [[noreturn]] void fail(const std::string& section, const std::string& key,
                           const std::string& what) const {
        std::ostringstream os;
        os << source_;
        const int line = line_of_key(text_, section, key);
        if (line > 0) os << ":" << line;
        os << ": " << (section.empty() ? key : section + "." + key) << ": " << what;
        throw ConfigError(os.str());
    }

    // Reads keys of one object; unknown keys are errors.
    class Section {
    public:
        Section(const Reader& r, const json& obj, std::string name)
            : r_(r), obj_(obj), name_(std::move(name)) {
            if (!obj_.is_object()) r_.fail("", name_, "expected an object");
        }
        ~Section() = default;

        template <class T>
        void get(const std::string& key, T& out) {
            seen_.insert(key);
            auto it = obj_.find(key);
            if (it == obj_.end()) return;
            try {
                if constexpr (std::is_same_v<T, bool>) {
                    if (!it->is_boolean()) throw std::runtime_error("expected true or false");
                } else if constexpr (std::is_integral_v<T>) {
                    if (!it->is_number_integer()) throw std::runtime_error("expected an integer");
                    if constexpr (std::is_unsigned_v<T>) {
                        if (it->is_number_integer() && !it->is_number_unsigned())
                            throw std::runtime_error("expected a nonnegative integer");
                    }
                } else if constexpr (std::is_floating_point_v<T>) {
                    if (!it->is_number()) throw std::runtime_error("expected a number");
                } else if constexpr (std::is_same_v<T, std::string>) {
                    if (!it->is_string()) throw std::runtime_error("expected a string");
                }
                out = it->template get<T>();
            } catch (const std::exception& e) {
                r_.fail(name_, key, e.what());
            }
        }

        void get_list(const std::string& key, std::vector<double>& out) {
            seen_.insert(key);
            auto it = obj_.find(key);
            if (it == obj_.end()) return;
            if (!it->is_array()) r_.fail(name_, key, "expected a list of numbers");
            out.clear();
            for (const auto& v : *it) {
                if (!v.is_number()) r_.fail(name_, key, "expected a list of numbers");
                out.push_back(v.get<double>());
            }
        }

        void finish() const {
            for (auto it = obj_.begin(); it != obj_.end(); ++it)
                if (!seen_.count(it.key())) r_.fail(name_, it.key(), "unknown key");
        }

        void check(bool ok, const std::string& key, const std::string& what) const {
            if (!ok) r_.fail(name_, key, what);
        }

    private:
        const Reader& r_;
        const json& obj_;
        std::string name_;
        std::set<std::string> seen_;
    };

private:
    const std::string& text_;
    std::string source_;
};

json to_json_impl(const RunConfig& c) {
    const PicardConfig& p = c.picard;
    const QuadratureSpec& q = p.quad;
    const DiagnosticsConfig& d = c.diagnostics;
    json j;
    j["initial_data"] = {{"R", p.R},
                         {"amplitude", p.amplitude},
                         {"profile", p.profile},
                         {"delta_lattice", q.delta_lattice},
                         {"delta_threshold", p.delta_threshold}};
    j["grid"] = {{"t_min", q.t_min},
                 {"t_max", q.t_max},
                 {"half_width", q.half_width},
                 {"n_t", q.n_t},
                 {"n_x", q.n_x},
                 {"domain_policy", q.domain_policy == DomainPolicy::Chained ? "chained" : "fixed"},
                 {"memory_ceiling_mb", q.memory_ceiling_mb}};
    j["quadrature"] = {
        {"momentum_nodes", q.momentum_nodes},
        {"momentum_rule", q.momentum_rule == MomentumRuleKind::Box ? "box" : "adapted"},
        {"box_boundary_tol", q.box_boundary_tol},
        {"angular_nodes_theta", q.angular_nodes_theta},
        {"angular_nodes_phi", q.angular_nodes_phi},
        {"radial_nodes", q.radial_nodes},
        {"radial_panel", q.radial_panel},
        {"ode_max_step", q.ode_max_step},
        {"ode_min_steps", q.ode_min_steps},
        {"ode_tol", q.ode_tol},
        {"fd_source_step", q.fd_source_step},
        {"fd_field_step", q.fd_field_step},
        {"fd_jacobian_step", q.fd_jacobian_step},
        {"support_margin", q.support_margin},
        {"support_threshold", q.support_threshold},
        {"use_cube_symmetry", q.use_cube_symmetry}};
    j["iteration"] = {{"max_iter", q.max_iter}, {"min_iter", q.min_iter}, {"tolerance", q.tolerance}};
    j["diagnostics"] = {{"radii", d.radii},
                        {"v_interval", {d.v1, d.v2}},
                        {"u_interval", {d.u1, d.u2}},
                        {"fsc_eta", d.fsc_eta},
                        {"fsc_alpha", d.fsc_alpha},
                        {"samples", d.samples},
                        {"energy_nodes", d.energy_nodes},
                        {"momentum_nodes", d.momentum_nodes},
                        {"min_decay_probes", d.min_decay_probes},
                        {"lp_tolerance", d.lp_tolerance},
                        {"energy_tolerance", d.energy_tolerance},
                        {"radiation_fraction", d.radiation_fraction}};
    j["output"] = {{"directory", c.output_dir}};
    j["seed"] = c.seed;
    j["threads"] = p.threads;
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        const Position pos = position_of(text, at);
        std::ostringstream os;
        os << source << ":" << pos.line << ":" << pos.column << ": syntax error: " << e.what();
        throw ConfigError(os.str());
    }
    const Reader reader(text, source);
    if (!root.is_object()) reader.fail("", "<root>", "expected an object");

    RunConfig c;
    PicardConfig& p = c.picard;
    QuadratureSpec& q = p.quad;
    DiagnosticsConfig& d = c.diagnostics;
    const json empty = json::object();
    auto section = [&](const char* name) -> const json& {
        auto it = root.find(name);
        return it == root.end() ? empty : *it;
    };

    {
        Reader::Section s(reader, section("initial_data"), "initial_data");
        s.get("R", p.R);
        s.get("amplitude", p.amplitude);
        s.get("profile", p.profile);
        s.get("delta_lattice", q.delta_lattice);
        s.get("delta_threshold", p.delta_threshold);
        s.finish();
        s.check(p.R > 0, "R", "must be > 0");
        s.check(p.amplitude >= 0, "amplitude", "must be >= 0");
        s.check(p.profile == "cubic-bump", "profile", "unknown profile '" + p.profile + "'");
    }
    {
        Reader::Section s(reader, section("grid"), "grid");
        std::string policy = "fixed";
        s.get("t_min", q.t_min);
        s.get("t_max", q.t_max);
        s.get("half_width", q.half_width);
        s.get("n_t", q.n_t);
        s.get("n_x", q.n_x);
        s.get("domain_policy", policy);
        s.get("memory_ceiling_mb", q.memory_ceiling_mb);
        s.finish();
        s.check(policy == "fixed" || policy == "chained", "domain_policy",
                "expected \"fixed\" or \"chained\"");
        q.domain_policy = policy == "chained" ? DomainPolicy::Chained : DomainPolicy::Fixed;
    }
    {
        Reader::Section s(reader, section("quadrature"), "quadrature");
        std::string rule = "adapted";
        s.get("momentum_nodes", q.momentum_nodes);
        s.get("momentum_rule", rule);
        s.get("box_boundary_tol", q.box_boundary_tol);
        s.get("angular_nodes_theta", q.angular_nodes_theta);
        s.get("angular_nodes_phi", q.angular_nodes_phi);
        s.get("radial_nodes", q.radial_nodes);
        s.get("radial_panel", q.radial_panel);
        s.get("ode_max_step", q.ode_max_step);
        s.get("ode_min_steps", q.ode_min_steps);
        s.get("ode_tol", q.ode_tol);
        s.get("fd_source_step", q.fd_source_step);
        s.get("fd_field_step", q.fd_field_step);
        s.get("fd_jacobian_step", q.fd_jacobian_step);
        s.get("support_margin", q.support_margin);
        s.get("support_threshold", q.support_threshold);
        s.get("use_cube_symmetry", q.use_cube_symmetry);
        s.finish();
        s.check(rule == "adapted" || rule == "box", "momentum_rule", "expected \"adapted\" or \"box\"");
        q.momentum_rule = rule == "box" ? MomentumRuleKind::Box : MomentumRuleKind::Adapted;
    }
    {
        Reader::Section s(reader, section("iteration"), "iteration");
        s.get("max_iter", q.max_iter);
        s.get("min_iter", q.min_iter);
        s.get("tolerance", q.tolerance);
        s.finish();
    }
    {
        Reader::Section s(reader, section("diagnostics"), "diagnostics");
        std::vector<double> v{d.v1, d.v2}, u{d.u1, d.u2};
        s.get_list("radii", d.radii);
        s.get_list("v_interval", v);
        s.get_list("u_interval", u);
        s.get("fsc_eta", d.fsc_eta);
        s.get("fsc_alpha", d.fsc_alpha);
        s.get("samples", d.samples);
        s.get("energy_nodes", d.energy_nodes);
        s.get("momentum_nodes", d.momentum_nodes);
        s.get("min_decay_probes", d.min_decay_probes);
        s.get("lp_tolerance", d.lp_tolerance);
        s.get("energy_tolerance", d.energy_tolerance);
        s.get("radiation_fraction", d.radiation_fraction);
        s.finish();
        s.check(v.size() == 2 && v[0] < v[1], "v_interval", "expected [v1, v2] with v1 < v2");
        s.check(u.size() == 2 && u[0] < u[1], "u_interval", "expected [u1, u2] with u1 < u2");
        s.check(!d.radii.empty(), "radii", "needs at least one radius");
        for (std::size_t k = 0; k < d.radii.size(); ++k)
            s.check(d.radii[k] > 0 && (k == 0 || d.radii[k] > d.radii[k - 1]), "radii",
                    "must be positive and increasing");
        s.check(d.fsc_alpha > 0.5, "fsc_alpha", "must be > 1/2");
        s.check(d.samples >= 1, "samples", "must be >= 1");
        s.check(d.energy_nodes >= 2, "energy_nodes", "must be >= 2");
        s.check(d.momentum_nodes >= 1, "momentum_nodes", "must be >= 1");
        d.v1 = v[0];
        d.v2 = v[1];
        d.u1 = u[0];
        d.u2 = u[1];
    }
    {
        Reader::Section s(reader, section("output"), "output");
        s.get("directory", c.output_dir);
        s.finish();
    }
    for (auto it = root.begin(); it != root.end(); ++it) {
        static const std::set<std::string> known{"initial_data", "grid",   "quadrature", "iteration",
                                                 "diagnostics",  "output", "seed",       "threads"};
        if (!known.count(it.key())) reader.fail("", it.key(), "unknown key");
    }
    {
        Reader::Section s(reader, root, "");
        s.get("seed", c.seed);
        s.get("threads", p.threads);
        s.check(p.threads >= 1, "threads", "must be >= 1");
    }
    try {
        q.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

std::string config_to_json(const RunConfig& config) { return to_json_impl(config).dump(2) + "\n"; }

}  // namespace rvmret
