#include "rvmret/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "rvmret/diagnostics.hpp"
#include "rvmret/errors.hpp"
#include "rvmret/lightcone.hpp"
#include "rvmret/picard.hpp"

namespace rvmret {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << s;
    if (!out) throw Error("write failed: " + p.string());
}

RunConfig resolve(const CommonOptions& opt) {
    RunConfig c = load_config(opt.config_path);
    if (opt.out) c.output_dir = *opt.out;
    if (opt.seed) c.seed = *opt.seed;
    if (opt.threads) {
        if (*opt.threads < 1) throw ConfigError("--threads must be >= 1");
        c.picard.threads = *opt.threads;
    }
    return c;
}

std::string table_name(int n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "field_%03d.bin", n);
    return buf;
}

json record_json(const IterateRecord& r, const std::string& table) {
    return {{"n", r.n},
            {"table", table},
            {"norm_w34", r.norm_w34},
            {"norm_w1", r.norm_w1},
            {"delta_norm", r.delta_norm},
            {"contraction_ratio", r.contraction_ratio},
            {"grad_norm_w1", r.grad_norm_w1},
            {"grad_delta_norm", r.grad_delta_norm},
            {"grad_ratio", r.grad_ratio},
            {"drift_bound", r.drift_bound},
            {"truncation_bound", r.truncation_bound},
            {"nodes_computed", r.nodes_computed},
            {"sphere_nodes", r.sphere_nodes},
            {"seconds", r.seconds},
            {"converged", r.converged}};
}

class Csv {
public:
    explicit Csv(std::ostream& out) : out_(out) {}
    Csv& header(std::initializer_list<std::string> cols) {
        bool first = true;
        for (const auto& c : cols) {
            out_ << (first ? "" : ",") << csv_cell(c);
            first = false;
        }
        out_ << "\n";
        return *this;
    }
    template <class... T>
    void row(const T&... v) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
        out_ << "\n";
    }

private:
    static std::string cell(double v) { return num(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "true" : "false"; }
    static std::string cell(const std::string& s) { return csv_cell(s); }
    static std::string cell(const char* s) { return csv_cell(s); }
    std::ostream& out_;
};

json load_json(const fs::path& p) {
    try {
        return json::parse(read_file(p));
    } catch (const json::exception& e) {
        throw Error(p.string() + ": " + e.what());
    }
}

double json_number(const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

}  // namespace

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string final_table_path(const std::string& run_dir) {
    const fs::path summary = fs::path(run_dir) / "summary.json";
    if (!fs::exists(summary)) throw Error("no summary.json in " + run_dir);
    const json s = load_json(summary);
    if (!s.contains("final_table") || !s["final_table"].is_string())
        throw Error(summary.string() + " names no final field table");
    const fs::path t = fs::path(run_dir) / s["final_table"].get<std::string>();
    if (!fs::exists(t)) throw Error("missing field table " + t.string());
    return t.string();
}

std::array<FieldValue, 4> table_gradient(const FieldTable& table, double t, const Vec3& x) {
    std::array<FieldValue, 4> d{};
    for (int dir = 0; dir < 4; ++dir) {
        const double h = table.axis(dir).step();
        auto shifted = [&](double s) {
            double tt = t;
            Vec3 xx = x;
            if (dir == 0)
                tt += s;
            else
                xx[dir - 1] += s;
            return std::pair{tt, xx};
        };
        const auto [tp, xp] = shifted(h);
        const auto [tm, xm] = shifted(-h);
        const bool up = table.contains(tp, xp), down = table.contains(tm, xm);
        FieldValue a, b;
        double span = 0.0;
        if (up && down) {
            a = table.interpolate(tp, xp);
            b = table.interpolate(tm, xm);
            span = 2.0 * h;
        } else if (up) {
            a = table.interpolate(tp, xp);
            b = table.interpolate(t, x);
            span = h;
        } else if (down) {
            a = table.interpolate(t, x);
            b = table.interpolate(tm, xm);
            span = h;
        } else {
            continue;
        }
        d[dir] = FieldValue{(a.E - b.E) / span, (a.B - b.B) / span};
    }
    return d;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const CommonOptions& opt, std::ostream& log) {
    RunConfig cfg;
    try {
        cfg = resolve(opt);
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    const fs::path dir = cfg.output_dir;
    json summary;
    int code = kExitError;
    try {
        fs::create_directories(dir);
        write_file(dir / "config.json", config_to_json(cfg));
        std::ofstream jsonl(dir / "iterates.jsonl", std::ios::binary);
        std::ofstream csvf(dir / "iterates.csv", std::ios::binary);
        if (!jsonl || !csvf) throw Error("cannot write iterate logs in " + dir.string());
        Csv csv(csvf);
        csv.header({"n", "norm_w34", "norm_w1", "delta_norm", "contraction_ratio", "grad_norm_w1",
                    "grad_delta_norm", "grad_ratio", "drift_bound", "truncation_bound", "seconds"});
        std::string last_table;
        auto on_iterate = [&](const IterateRecord& r) {
            const std::string name = table_name(r.n);
            r.field->write((dir / name).string());
            last_table = name;
            jsonl << record_json(r, name).dump() << "\n";
            jsonl.flush();
            csv.row(r.n, r.norm_w34, r.norm_w1, r.delta_norm, r.contraction_ratio, r.grad_norm_w1,
                    r.grad_delta_norm, r.grad_ratio, r.drift_bound, r.truncation_bound, r.seconds);
            csvf.flush();
            if (!opt.quiet)
                log << "iterate " << r.n << ": |F| = " << num(r.norm_w34)
                    << ", |F_n - F_n-1| = " << num(r.delta_norm)
                    << ", ratio = " << num(r.contraction_ratio) << " (" << r.seconds << " s)\n";
        };
        const InitialData data(cfg.picard.R, cfg.picard.amplitude, cfg.picard.profile,
                               cfg.picard.quad.delta_lattice);
        summary["Delta"] = data.Delta();
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const RunResult res = run(cfg.picard, on_iterate);
            summary["status"] = res.converged ? "converged" : "not_converged";
            summary["converged"] = res.converged;
            summary["iterations"] = res.records.size();
            summary["warnings"] = res.warnings;
            for (const auto& w : res.warnings)
                if (!opt.quiet) log << "warning: " << w << "\n";
            code = res.converged ? kExitOk : kExitError;
            if (!res.converged)
                log << "error: no convergence within max_iter = " << cfg.picard.quad.max_iter << "\n";
        } catch (const NonContraction& e) {
            summary["status"] = "non_contraction";
            summary["converged"] = false;
            summary["message"] = e.what();
            log << "error: " << e.what() << "\n";
            code = kExitCheckFailed;
        } catch (const std::exception& e) {
            summary["status"] = "error";
            summary["converged"] = false;
            summary["message"] = e.what();
            log << "error: " << e.what() << "\n";
            code = kExitError;
        }
        summary["seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!last_table.empty()) summary["final_table"] = last_table;
        summary["threads"] = cfg.picard.threads;
        summary["seed"] = cfg.seed;
        write_file(dir / "summary.json", summary.dump(2) + "\n");
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    return code;
}

// ---------------------------------------------------------------- verify-lemma4

int cmd_verify_lemma4(const CommonOptions& opt, const Lemma4Options& l4, std::ostream& log) {
    std::uint64_t seed = opt.seed.value_or(1);
    std::vector<std::pair<ConeFamily, double>> pairs;
    try {
        if (!opt.config_path.empty() && !opt.seed) seed = load_config(opt.config_path).seed;
        if (l4.families.empty() && l4.q_values.empty()) {
            pairs = {{ConeFamily::I1, 4.0},  {ConeFamily::I1, 5.0}, {ConeFamily::I1, 5.75},
                     {ConeFamily::I2, 3.0},  {ConeFamily::I2, 4.75}, {ConeFamily::I2, 5.0},
                     {ConeFamily::II, 3.0}};
        } else {
            if (l4.families.empty() || l4.q_values.empty())
                throw std::invalid_argument("--family and --q must be given together");
            for (const auto& f : l4.families)
                for (double q : l4.q_values) pairs.emplace_back(parse_family(f), q);
        }
        if (l4.samples < 1) throw std::invalid_argument("--samples must be >= 1");
        for (const auto& [f, q] : pairs) validate_query({f, q, 0.0, 0.0});
    } catch (const std::exception& e) {
        log << "error: invalid query: " << e.what() << "\n";
        return kExitError;
    }

    const auto pts = bound_sample_points(l4.samples, seed);
    std::ostringstream samples_csv, summary_csv, trick_csv;
    Csv sc(samples_csv), mc(summary_csv), tc(trick_csv);
    tc.header({"t", "x_norm", "R", "a", "samples", "max_ratio", "bound", "pass"});
    sc.header({"family", "q", "t", "x_norm", "value", "shape", "ratio"});
    mc.header({"family", "q", "samples", "fitted_constant", "subsample_constant", "max_t",
               "max_x", "finite", "stable", "inconclusive", "pass"});
    bool all = true;
    try {
        for (const auto& [f, q] : pairs) {
            const BoundCheckReport r = check_bounds(f, q, pts);
            for (const BoundSample& s : r.samples)
                sc.row(family_name(f), q, s.t, s.x_norm, s.value, s.shape, s.ratio);
            mc.row(family_name(f), q, r.samples.size(), r.fitted_constant,
                   r.subsample_constant, r.max_t, r.max_x, r.finite, r.stable, r.inconclusive, r.pass);
            all = all && r.pass;
            if (!opt.quiet)
                log << family_name(f) << " q=" << q << ": C = " << num(r.fitted_constant)
                    << (r.inconclusive ? " (stability inconclusive)" : "") << " "
                    << (r.pass ? "PASS" : "FAIL") << "\n";
        }
        // bounded cone domain ratio for R = 1, beta = 2R
        const double a = a_of_beta(2.0);
        const std::size_t ntrick = std::min<std::size_t>(pts.size(), 10);
        for (std::size_t k = 0; k < ntrick; ++k) {
            const TrickReport r = check_trick_inequality(pts[k].first, pts[k].second, 1.0, a, 2000,
                                                         seed + k);
            tc.row(pts[k].first, pts[k].second, 1.0, a, r.samples, r.max_ratio, r.bound, r.pass);
            all = all && r.pass;
            if (!opt.quiet)
                log << "trick t=" << num(pts[k].first) << " |x|=" << num(pts[k].second)
                    << ": max ratio " << num(r.max_ratio) << " <= " << num(r.bound) << " "
                    << (r.pass ? "PASS" : "FAIL") << "\n";
        }
        if (opt.out) {
            fs::create_directories(*opt.out);
            write_file(fs::path(*opt.out) / "lemma4_samples.csv", samples_csv.str());
            write_file(fs::path(*opt.out) / "lemma4_summary.csv", summary_csv.str());
            write_file(fs::path(*opt.out) / "lemma4_trick.csv", trick_csv.str());
        } else if (opt.quiet) {
            log << summary_csv.str();
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    return all ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- verify-lemma-a

int cmd_verify_lemma_a(const CommonOptions& opt, int count, std::ostream& log) {
    std::uint64_t seed = opt.seed.value_or(1);
    std::ostringstream out;
    Csv csv(out);
    csv.header({"case", "t", "x_norm", "a", "b", "n", "reduced", "direct", "rel_error", "pass"});
    constexpr double kTol = 1e-6;
    bool all = true;
    try {
        if (!opt.config_path.empty() && !opt.seed) seed = load_config(opt.config_path).seed;
        if (count < 0) throw std::invalid_argument("--count must be >= 0");
        auto record = [&](const std::string& name, const std::function<double(double, double)>& g,
                          double t, double x, double a, double b, int n, double exact) {
            const double red = lemma_a_reduce(g, t, x, a, b, n);
            const double dir = std::isnan(exact) ? shell_integral_direct(g, t, x, a, b, n) : exact;
            const double err = std::abs(red - dir) / std::abs(dir);
            const bool ok = err <= kTol;
            all = all && ok;
            csv.row(name, t, x, a, b, n, red, dir, err, ok);
            if (!opt.quiet)
                log << name << ": reduced " << num(red) << " direct " << num(dir) << " rel "
                    << num(err) << " " << (ok ? "PASS" : "FAIL") << "\n";
        };
        auto one = [](double, double) { return 1.0; };
        record("shell_n1", one, 0.5, 1.5, 1.0, 2.0, 1, 6.0 * kPi);
        record("shell_n2", one, 0.5, 1.5, 1.0, 2.0, 2, 4.0 * kPi);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(0, 1);
        for (int k = 0; k < count; ++k) {
            const double c1 = 0.1 + u(rng), c2 = 0.05 + 0.5 * u(rng), c3 = 0.8 * u(rng),
                         c4 = 3.0 * u(rng);
            auto g = [=](double tau, double lam) {
                return std::exp(-c2 * lam * lam) * (1 + c3 * std::cos(c4 * lam)) / (1 + c1 * tau * tau);
            };
            const double t = -3 + 6 * u(rng), x = 0.2 + 3 * u(rng);
            const double a = 0.1 + u(rng), b = a + 0.5 + 3 * u(rng);
            record("random_" + std::to_string(k), g, t, x, a, b, 1 + k % 3, std::nan(""));
        }
        if (opt.out) {
            fs::create_directories(*opt.out);
            write_file(fs::path(*opt.out) / "lemma_a.csv", out.str());
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    return all ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- probe

int cmd_probe(const std::string& run_dir, const std::string& points_path, std::ostream& csv_out,
              std::ostream& log) {
    FieldTable table;
    std::vector<std::array<double, 4>> pts;
    try {
        table = FieldTable::read(final_table_path(run_dir));
        std::ifstream in(points_path);
        if (!in) throw Error("cannot read points file " + points_path);
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
            std::array<double, 4> p{};
            std::stringstream ss(line);
            std::string cell;
            int k = 0;
            bool numeric = true;
            while (std::getline(ss, cell, ',')) {
                if (k >= 4) {
                    numeric = false;
                    break;
                }
                try {
                    std::size_t used = 0;
                    p[k] = std::stod(cell, &used);
                    if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
                } catch (const std::exception&) {
                    numeric = false;
                }
                ++k;
            }
            if (!numeric || k != 4) {
                if (row == 0 && pts.empty() && line.find('t') != std::string::npos) continue;  // header
                throw Error("points file row " + std::to_string(row) + ": expected t,x1,x2,x3");
            }
            const Vec3 x{p[1], p[2], p[3]};
            if (!table.contains(p[0], x)) {
                std::ostringstream os;
                os << "points file row " << row << ": (" << num(p[0]) << ", " << num(p[1]) << ", "
                   << num(p[2]) << ", " << num(p[3]) << ") is outside the table domain";
                throw DomainExceeded(os.str());
            }
            pts.push_back(p);
            ++row;
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    static const char* comp[6] = {"E1", "E2", "E3", "B1", "B2", "B3"};
    static const char* dirs[4] = {"t", "x1", "x2", "x3"};
    std::vector<std::string> cols{"t", "x1", "x2", "x3"};
    for (auto c : comp) cols.emplace_back(c);
    for (auto d : dirs)
        for (auto c : comp) cols.push_back(std::string("d") + c + "_d" + d);
    for (std::size_t k = 0; k < cols.size(); ++k) csv_out << (k ? "," : "") << cols[k];
    csv_out << "\n";
    for (const auto& p : pts) {
        const Vec3 x{p[1], p[2], p[3]};
        const FieldValue v = table.interpolate(p[0], x);
        const auto g = table_gradient(table, p[0], x);
        csv_out << num(p[0]) << "," << num(p[1]) << "," << num(p[2]) << "," << num(p[3]);
        auto put = [&](const FieldValue& f) {
            for (int i = 0; i < 3; ++i) csv_out << "," << num(f.E[i]);
            for (int i = 0; i < 3; ++i) csv_out << "," << num(f.B[i]);
        };
        put(v);
        for (const auto& d : g) put(d);
        csv_out << "\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------- diagnose

namespace {

struct Check {
    Check(std::string n, bool p) : name(std::move(n)), property(p) {}
    std::string name;
    bool property = false;  // property of the solution, else an internal consistency check
    bool pass = false;
    json detail;
};

double field_norm(const FieldValue& v) { return std::sqrt(norm2(v.E) + norm2(v.B)); }

double gradient_norm(const std::array<FieldValue, 4>& g) {
    double s = 0.0;
    for (int d = 1; d <= 3; ++d) s += norm2(g[d].E) + norm2(g[d].B);
    return std::sqrt(s);
}

}  // namespace

int cmd_diagnose(const CommonOptions& opt, const std::string& run_dir, std::ostream& log) {
    const fs::path dir = run_dir;
    RunConfig cfg;
    std::shared_ptr<const FieldTable> F;
    try {
        cfg = load_config((dir / "config.json").string());
        if (opt.seed) cfg.seed = *opt.seed;
        F = std::make_shared<const FieldTable>(FieldTable::read(final_table_path(run_dir)));
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    std::vector<Check> checks;
    auto say = [&](const Check& c) {
        if (!opt.quiet)
            log << (c.property ? "[property]    " : "[consistency] ") << c.name << ": "
                << (c.pass ? "PASS" : "FAIL") << "\n";
    };
    try {
        const PicardConfig& pc = cfg.picard;
        const DiagnosticsConfig& dc = cfg.diagnostics;
        QuadratureSpec quad = pc.quad;
        quad.momentum_nodes = dc.momentum_nodes;
        const InitialData data(pc.R, pc.amplitude, pc.profile, quad.delta_lattice);
        auto field = std::make_shared<const TableField>(F);
        const double drift = drift_bound(*F);
        const CharacteristicDensity f(data, field, pc.quad, std::max(drift, 1e-9));
        const bool zero = pc.amplitude == 0.0;
        std::vector<double> times;
        for (std::size_t i = 0; i < F->axis(0).count; ++i) times.push_back(F->axis(0).node(i));
        // the layer closest to t = 0 is the reference
        std::vector<double> lp_times = times;
        std::stable_sort(lp_times.begin(), lp_times.end(),
                         [](double a, double b) { return std::abs(a) < std::abs(b); });

        // energy
        {
            Check c{"energy_conservation", true};
            EnergyOptions eo;
            eo.spatial_nodes = dc.energy_nodes;
            std::ostringstream s;
            Csv csv(s);
            csv.header({"t", "kinetic", "field_energy", "total", "field_tail_bound"});
            double ref = 0.0, worst = 0.0;
            for (double t : lp_times) {
                const EnergyReport e = energies(t, f, *field, quad, eo);
                csv.row(e.t, e.kinetic, e.field_energy, e.total, e.field_tail_bound);
                if (t == lp_times.front()) ref = e.total;
                worst = std::max(worst, ref == 0.0 ? std::abs(e.total) : std::abs(e.total - ref) / ref);
            }
            write_file(dir / "energies.csv", s.str());
            c.pass = worst <= dc.energy_tolerance;
            c.detail = {{"max_relative_drift", worst}, {"tolerance", dc.energy_tolerance}};
            checks.push_back(c);
            say(c);
        }
        // radiation
        {
            Check c{"incoming_radiation", true};
            try {
                const RadiationReport r =
                    incoming_radiation(dc.v1, dc.v2, dc.u1, dc.u2, dc.radii, *field);
                std::ostringstream s;
                Csv csv(s);
                csv.header({"r", "incoming", "outgoing"});
                for (std::size_t k = 0; k < r.radii.size(); ++k)
                    csv.row(r.radii[k], r.incoming[k], r.outgoing[k]);
                write_file(dir / "radiation.csv", s.str());
                c.pass = r.incoming_decreasing &&
                         std::abs(r.incoming_limit) <= dc.radiation_fraction * std::abs(r.outgoing_limit);
                c.detail = {{"incoming_limit", r.incoming_limit},
                            {"outgoing_limit", r.outgoing_limit},
                            {"incoming_decreasing", r.incoming_decreasing},
                            {"fraction", dc.radiation_fraction}};
            } catch (const DomainExceeded& e) {
                c.pass = false;
                c.detail = {{"error", e.what()}};
            }
            checks.push_back(c);
            say(c);
        }
        // free streaming condition
        {
            Check c{"free_streaming_condition", false};
            std::mt19937_64 rng(cfg.seed);
            std::uniform_real_distribution<double> ut(F->axis(0).min, F->axis(0).max), u(-1, 1);
            std::vector<std::pair<double, Vec3>> sample;
            const double L = F->axis(1).max;
            for (int k = 0; k < dc.samples; ++k) {
                const double t = ut(rng);
                const double rad = std::min(pc.R + std::abs(t), L);
                Vec3 x{u(rng), u(rng), u(rng)};
                if (norm2(x) > 1.0) {
                    --k;
                    continue;
                }
                sample.emplace_back(t, rad * x);
            }
            auto grad = [&](double t, const Vec3& x) { return table_gradient(*F, t, x); };
            const FscReport r = fsc_check(*field, grad, pc.R, dc.fsc_eta, dc.fsc_alpha, sample);
            c.pass = r.pass;
            c.detail = {{"eta_measured", r.eta_measured}, {"eta_field", r.eta_field},
                        {"eta_gradient", r.eta_gradient}, {"eta", r.eta},
                        {"alpha", r.alpha},               {"samples", r.samples},
                        {"Delta", data.Delta()}};
            checks.push_back(c);
            say(c);
        }
        // decay
        {
            std::vector<DecayProbe> fp, gp;
            const Axis& ax = F->axis(1);
            std::ostringstream s, loglog;
            Csv csv(s);
            csv.header({"t", "x_norm", "field", "gradient"});
            for (std::size_t it = 0; it < F->axis(0).count; ++it) {
                const double t = F->axis(0).node(it);
                for (std::size_t i = 0; i < ax.count; ++i) {
                    const double xi = ax.node(i);
                    if (xi < 0) continue;
                    for (const Vec3& x : {Vec3{xi, 0, 0}, Vec3{xi, xi, xi}}) {
                        if (xi == 0 && x.y != 0) continue;
                        const double v = field_norm(F->interpolate(t, x));
                        const double g = gradient_norm(table_gradient(*F, t, x));
                        csv.row(t, norm(x), v, g);
                        if (v > 0) {
                            fp.push_back({t, norm(x), v});
                            loglog << num(std::log(1 + std::abs(t - norm(x)))) << " "
                                   << num(std::log(v * (1 + std::abs(t) + norm(x)))) << "\n";
                        }
                        if (g > 0) gp.push_back({t, norm(x), g});
                    }
                }
            }
            write_file(dir / "decay_probes.csv", s.str());
            write_file(dir / "decay_loglog.dat", loglog.str());
            Check c{"decay_field", true}, g{"decay_gradient", true};
            if (zero || fp.empty()) {
                c.pass = g.pass = true;
                c.detail = g.detail = {{"trivial", true}};
            } else {
                try {
                    const DecayFit a = decay_fit(fp);
                    c.pass = a.used >= dc.min_decay_probes && a.alpha1 >= 0.95 && a.alpha2 >= 0.95 &&
                             a.residual <= 0.15;
                    c.detail = {{"C", a.C},           {"alpha1", a.alpha1}, {"alpha2", a.alpha2},
                                {"residual", a.residual}, {"probes", a.used}};
                    const DecayFit b = decay_fit(gp);
                    g.pass = b.alpha2 >= a.alpha2 - 0.05;
                    g.detail = {{"C", b.C},           {"alpha1", b.alpha1}, {"alpha2", b.alpha2},
                                {"residual", b.residual}, {"probes", b.used}};
                } catch (const IllConditioned& e) {
                    c.pass = g.pass = false;
                    c.detail = g.detail = {{"error", e.what()}};
                }
            }
            checks.push_back(c);
            say(c);
            checks.push_back(g);
            say(g);
        }
        // Lp norms
        {
            LpOptions lo;
            lo.spatial_nodes = dc.energy_nodes;
            const auto rows = lp_conservation(f, lp_times, quad, lo);
            std::ostringstream s;
            Csv csv(s);
            csv.header({"t", "l1", "l2", "linf", "drift_l1", "drift_l2", "drift_linf"});
            double d1 = 0, dinf = 0;
            for (const LpRow& r : rows) {
                csv.row(r.t, r.l1, r.l2, r.linf, r.drift_l1, r.drift_l2, r.drift_linf);
                d1 = std::max(d1, r.drift_l1);
                dinf = std::max(dinf, r.drift_linf);
            }
            write_file(dir / "lp.csv", s.str());
            Check a{"lp_linf_conservation", true}, b{"lp_l1_conservation", false};
            a.pass = dinf <= 1e-3;
            a.detail = {{"max_drift", dinf}, {"tolerance", 1e-3}};
            b.pass = d1 <= dc.lp_tolerance;
            b.detail = {{"max_drift", d1}, {"tolerance", dc.lp_tolerance}};
            checks.push_back(a);
            say(a);
            checks.push_back(b);
            say(b);
        }
        // momentum support volume along x = 0
        {
            Check c{"support_volume_decay", true};
            std::ostringstream s;
            Csv csv(s);
            csv.header({"t", "volume"});
            std::vector<std::pair<double, double>> pts;
            for (double t : times) {
                const double v = support_volume(t, {0, 0, 0}, f, quad);
                csv.row(t, v);
                if (std::abs(t) >= pc.R && v > 0) pts.emplace_back(std::log(1 + std::abs(t)), std::log(v));
            }
            write_file(dir / "support_volume.csv", s.str());
            if (zero) {
                c.pass = true;
                c.detail = {{"trivial", true}};
            } else if (pts.size() < 2) {
                c.pass = false;
                c.detail = {{"error", "fewer than two times with |t| >= R and nonzero volume"}};
            } else {
                double mx = 0, my = 0;
                for (auto [x, y] : pts) {
                    mx += x;
                    my += y;
                }
                mx /= pts.size();
                my /= pts.size();
                double sxy = 0, sxx = 0;
                for (auto [x, y] : pts) {
                    sxy += (x - mx) * (y - my);
                    sxx += (x - mx) * (x - mx);
                }
                const double slope = sxx > 0 ? sxy / sxx : 0.0;
                c.pass = sxx > 0 && slope <= -2.5;
                c.detail = {{"exponent", slope}, {"threshold", -2.5}};
            }
            checks.push_back(c);
            say(c);
        }
        // maximal momentum
        {
            Check c{"momentum_bound", true};
            double pmax = 0.0;
            for (double t : times) pmax = std::max(pmax, max_momentum_estimate(t, f, quad));
            c.pass = pmax <= 2.0 * pc.R;
            c.detail = {{"max_momentum", pmax}, {"bound", 2.0 * pc.R}};
            checks.push_back(c);
            say(c);
        }
        // uniqueness class
        {
            Check c{"uniqueness_class", true};
            const UniquenessReport u = uniqueness_class_check(*F);
            std::ostringstream s;
            Csv csv(s);
            csv.header({"t", "l2"});
            for (std::size_t k = 0; k < u.t.size(); ++k) csv.row(u.t[k], u.l2[k]);
            write_file(dir / "uniqueness.csv", s.str());
            c.pass = u.pass;
            c.detail = {{"l2_at_t_min", u.l2.empty() ? 0.0 : u.l2.front()}};
            checks.push_back(c);
            say(c);
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    json out;
    bool property_ok = true, all_ok = true;
    for (const Check& c : checks) {
        out["checks"].push_back({{"name", c.name},
                                 {"tag", c.property ? "property" : "consistency"},
                                 {"pass", c.pass},
                                 {"detail", c.detail}});
        all_ok = all_ok && c.pass;
        if (c.property) property_ok = property_ok && c.pass;
    }
    out["pass"] = all_ok;
    out["property_checks_pass"] = property_ok;
    try {
        write_file(dir / "diagnose.json", out.dump(2) + "\n");
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    return property_ok ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------- report

int cmd_report(const std::string& run_dir, std::ostream& out, std::ostream& log) {
    const fs::path dir = run_dir;
    try {
        const json summary = load_json(dir / "summary.json");
        out << "# Run report: " << run_dir << "\n\n";
        out << "- status: " << summary.value("status", "unknown") << "\n";
        if (summary.contains("Delta")) out << "- Delta: " << num(json_number(summary["Delta"])) << "\n";
        if (summary.contains("seconds"))
            out << "- wall time: " << num(json_number(summary["seconds"])) << " s\n";
        if (summary.contains("message"))
            out << "- message: " << summary["message"].get<std::string>() << "\n";
        if (summary.contains("warnings"))
            for (const auto& w : summary["warnings"]) out << "- warning: " << w.get<std::string>() << "\n";
        out << "\n## Iterates\n\n";
        out << "| n | norm 3/4 | delta | ratio | gradient delta | gradient ratio | drift | seconds |\n";
        out << "|---|---|---|---|---|---|---|---|\n";
        std::ifstream in(dir / "iterates.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const json r = json::parse(line);
            out << "| " << r["n"].get<int>() << " | " << num(json_number(r["norm_w34"])) << " | "
                << num(json_number(r["delta_norm"])) << " | "
                << num(json_number(r["contraction_ratio"])) << " | "
                << num(json_number(r["grad_delta_norm"])) << " | "
                << num(json_number(r["grad_ratio"])) << " | " << num(json_number(r["drift_bound"]))
                << " | " << num(json_number(r["seconds"])) << " |\n";
        }
        if (fs::exists(dir / "diagnose.json")) {
            const json d = load_json(dir / "diagnose.json");
            out << "\n## Diagnostics\n\n| check | tag | result | detail |\n|---|---|---|---|\n";
            for (const auto& c : d["checks"])
                out << "| " << c["name"].get<std::string>() << " | " << c["tag"].get<std::string>()
                    << " | " << (c["pass"].get<bool>() ? "PASS" : "FAIL") << " | "
                    << c["detail"].dump() << " |\n";
        } else {
            out << "\nNo diagnostics yet (run `diagnose`).\n";
        }
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kExitError;
    }
    return kExitOk;
}

}  // namespace rvmret
