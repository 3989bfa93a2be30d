// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "json.hpp"
#include "oracles.hpp"
#include "rvmret/commands.hpp"
#include "rvmret/diagnostics.hpp"
#include "rvmret/lightcone.hpp"
#include "rvmret/picard.hpp"
#include "rvmret/retarded_field.hpp"

using namespace rvmret;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3g", v);
    return b;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// shared state for criteria 5 to 10
struct Run {
    fs::path dir;
    RunConfig cfg;
    std::vector<json> records;
    json diagnose;
    bool ok = false;
    std::string error;
};

Run g_run;

void prepare_run(const fs::path& root) {
    g_run.dir = root / "run1";
    fs::remove_all(root);
    fs::create_directories(root);
    CommonOptions o;
    o.config_path = std::string(RVMRET_SOURCE_DIR) + "/configs/acceptance.json";
    o.out = g_run.dir.string();
    o.threads = 1;
    o.quiet = true;
    std::ostringstream log;
    const int sim = cmd_simulate(o, log);
    g_run.cfg = load_config((g_run.dir / "config.json").string());
    std::ifstream in(g_run.dir / "iterates.jsonl");
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) g_run.records.push_back(json::parse(line));
    if (sim != kExitOk) {
        g_run.error = "simulate exit " + std::to_string(sim) + ": " + log.str();
        return;
    }
    const int diag = cmd_diagnose(o, g_run.dir.string(), log);
    if (diag == kExitError) {
        g_run.error = "diagnose failed: " + log.str();
        return;
    }
    g_run.diagnose = json::parse(slurp(g_run.dir / "diagnose.json"));
    g_run.ok = true;
}

const json& check_named(const std::string& name) {
    for (const auto& c : g_run.diagnose["checks"])
        if (c["name"] == name) return c;
    throw std::runtime_error("diagnose.json has no check " + name);
}

std::shared_ptr<const FieldTable> table(int n) {
    char b[32];
    std::snprintf(b, sizeof b, "field_%03d.bin", n);
    return std::make_shared<const FieldTable>(FieldTable::read((g_run.dir / b).string()));
}

// ---------------------------------------------------------------- 1

Outcome lemma_a() {
    auto one = [](double, double) { return 1.0; };
    double worst_shell = 0.0;
    for (double x : {0.4, 1.5, 6.0})
        for (double t : {-1.0, 0.0, 2.0}) {
            worst_shell = std::max(worst_shell, std::abs(lemma_a_reduce(one, t, x, 1, 2, 1) / (6 * pi) - 1));
            worst_shell = std::max(worst_shell, std::abs(lemma_a_reduce(one, t, x, 1, 2, 2) / (4 * pi) - 1));
        }
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> u(0, 1);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double c1 = 0.1 + u(rng), c2 = 0.05 + 0.5 * u(rng), c3 = 0.8 * u(rng), c4 = 3 * u(rng);
        auto g = [=](double tau, double lam) {
            return std::exp(-c2 * lam * lam) * (1 + c3 * std::cos(c4 * lam)) / (1 + c1 * tau * tau);
        };
        const double t = -3 + 6 * u(rng), x = 0.2 + 3 * u(rng);
        const double a = 0.1 + u(rng), b = a + 0.5 + 3 * u(rng);
        const int n = 1 + k % 3;
        const double ref = oracle::shell_integral(g, t, x, a, b, n);
        worst = std::max(worst, std::abs(lemma_a_reduce(g, t, x, a, b, n) - ref) / std::abs(ref));
    }
    return {worst <= 1e-6 && worst_shell <= 1e-9,
            "random worst rel " + fmt(worst) + ", shells worst rel " + fmt(worst_shell)};
}

// ---------------------------------------------------------------- 2

Outcome lemma4() {
    const auto pts = bound_sample_points(200, 2024);
    int on_cone = 0, on_zero = 0;
    for (auto [t, x] : pts) {
        on_cone += t == x;
        on_zero += t == 0;
    }
    const std::vector<std::pair<ConeFamily, double>> pairs{
        {ConeFamily::I1, 4}, {ConeFamily::I1, 5}, {ConeFamily::I1, 5.75}, {ConeFamily::I2, 3},
        {ConeFamily::I2, 4.75}, {ConeFamily::I2, 5}, {ConeFamily::II, 3}};
    bool ok = on_cone > 0 && on_zero > 0;
    std::string detail;
    for (auto [f, q] : pairs) {
        const BoundCheckReport r = check_bounds(f, q, pts);
        ok = ok && r.pass && r.finite && !r.inconclusive;
        detail += family_name(f) + "/" + fmt(q) + " C=" + fmt(r.fitted_constant) + " sub=" +
                  fmt(r.subsample_constant) + (r.pass ? "" : " FAIL") + "; ";
    }
    return {ok, detail};
}

// ---------------------------------------------------------------- 3

Outcome representation() {
    // both sides converged in momentum and angle; 8 x 16 misses 11% inside the support at t ~ 2
    QuadratureSpec q;
    q.momentum_nodes = 12;
    q.angular_nodes_theta = 16;
    q.angular_nodes_phi = 32;
    const FreeStreamingDensity f(InitialData(1.0, 1.0), 0.05);
    const NullField nf;
    std::mt19937_64 rng(303);
    std::uniform_real_distribution<double> ut(-3, 3), ur(0.5, 5);
    std::normal_distribution<double> n(0, 1);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        const double t = ut(rng);
        Vec3 w{n(rng), n(rng), n(rng)};
        const Vec3 x = (ur(rng) / norm(w)) * w;
        const FieldValue raw = field_raw(t, x, f, q);
        const FieldValue rep = field_repr(t, x, f, nf, q);
        worst = std::max(worst, magnitude(raw - rep) / std::max(magnitude(raw), magnitude(rep)));
    }
    return {worst <= 1e-2, "worst relative disagreement " + fmt(worst) + " over 20 points"};
}

// ---------------------------------------------------------------- 4

Outcome chain_rule() {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-2, 2), c(0.2, 1.5);
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
        const double a = c(rng), b = c(rng), w = c(rng);
        const TestFunction g{
            [=](double t, const Vec3& y) { return std::exp(-a * norm2(y)) * std::cos(w * t) + b * t * y.x; },
            [=](double t, const Vec3& y) { return -w * std::exp(-a * norm2(y)) * std::sin(w * t) + b * y.x; },
            [=](double t, const Vec3& y) {
                return (-2 * a * std::exp(-a * norm2(y)) * std::cos(w * t)) * y + Vec3{b * t, 0, 0};
            }};
        const double t = u(rng);
        const Vec3 x{u(rng), u(rng), u(rng)}, y{u(rng), u(rng), u(rng)}, p{u(rng), u(rng), u(rng)};
        worst = std::max(worst, chain_rule_identity_residual(t, x, y, p, g));
    }
    return {worst <= 1e-6, "worst residual " + fmt(worst) + " over 100 configurations"};
}

// ---------------------------------------------------------------- 5

Outcome contraction() {
    if (g_run.records.size() < 3) return {false, "run produced " + std::to_string(g_run.records.size()) +
                                                     " iterates: " + g_run.error};
    auto num = [](const json& j) { return j.is_number() ? j.get<double>() : std::nan(""); };
    const double d2 = num(g_run.records[1]["delta_norm"]), d3 = num(g_run.records[2]["delta_norm"]);
    const double g2 = num(g_run.records[1]["grad_delta_norm"]), g3 = num(g_run.records[2]["grad_delta_norm"]);
    const InitialData data(g_run.cfg.picard.R, g_run.cfg.picard.amplitude);
    const bool ok = d2 > d3 && d3 / d2 < 0.5 && g3 / g2 < 1.0;
    return {ok, "Delta " + fmt(data.Delta()) + ", |F2-F1| " + fmt(d2) + ", |F3-F2| " + fmt(d3) +
                    ", ratio " + fmt(d3 / d2) + ", gradient ratio " + fmt(g3 / g2) + ", run " +
                    fmt(num(json::parse(slurp(g_run.dir / "summary.json"))["seconds"])) + " s"};
}

// ---------------------------------------------------------------- 6

Outcome decay() {
    if (!g_run.ok) return {false, g_run.error};
    const json& f = check_named("decay_field");
    const json& g = check_named("decay_gradient");
    const json& d = f["detail"];
    if (d.contains("error")) return {false, d["error"].get<std::string>()};
    const double a1 = d["alpha1"], a2 = d["alpha2"], res = d["residual"];
    const int probes = d["probes"];
    const double ga2 = g["detail"].value("alpha2", std::nan(""));
    const bool ok = probes >= 40 && a1 >= 0.95 && a2 >= 0.95 && res <= 0.15 && ga2 >= a2 - 0.05;
    return {ok, std::to_string(probes) + " probes, alpha1 " + fmt(a1) + ", alpha2 " + fmt(a2) +
                    ", residual " + fmt(res) + ", gradient alpha2 " + fmt(ga2)};
}

// ---------------------------------------------------------------- 7

Outcome kinetic() {
    if (!g_run.ok) return {false, g_run.error};
    const PicardConfig& pc = g_run.cfg.picard;
    const QuadratureSpec& quad = pc.quad;
    const InitialData data(pc.R, pc.amplitude, pc.profile, quad.delta_lattice);
    const auto F1 = table(1), F2 = table(2);
    auto field1 = std::make_shared<const TableField>(F1), field2 = std::make_shared<const TableField>(F2);
    // no support hint: values are the raw pullback along characteristics
    const CharacteristicDensity f2(data, field1, quad, std::nullopt, false);
    const CharacteristicDensity f3(data, field2, quad, std::nullopt, false);
    const FreeStreamingDensity f1(data, std::nullopt);
    const CharacteristicDensity f3h(data, field2, quad, std::max(drift_bound(*F2), 1e-9));

    double pmax = 0.0;
    for (std::size_t i = 0; i < F2->axis(0).count; ++i)
        pmax = std::max(pmax, max_momentum_estimate(F2->axis(0).node(i), f3h, quad));

    const double a = a_of_beta(2.0 * pc.R);
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> ut(quad.t_min, quad.t_max), u(-1, 1), extra(1e-6, 2.0);
    std::normal_distribution<double> n(0, 1);
    int nonzero = 0;
    for (int k = 0; k < 200; ++k) {
        const double t = ut(rng);
        Vec3 w{n(rng), n(rng), n(rng)};
        const Vec3 x = ((pc.R + a * std::abs(t) + extra(rng)) / norm(w)) * w;
        Vec3 p{u(rng), u(rng), u(rng)};
        p = (2.0 * pc.R) * p;
        for (const Density* f : {static_cast<const Density*>(&f1), static_cast<const Density*>(&f2),
                                 static_cast<const Density*>(&f3)})
            nonzero += (*f)(t, x, p) != 0.0;
    }

    double jac = 0.0;
    for (int k = 0; k < 50; ++k) {
        Vec3 x0{u(rng), u(rng), u(rng)}, p0{u(rng), u(rng), u(rng)};
        if (norm2(x0) + norm2(p0) >= 1.0) {
            --k;
            continue;
        }
        x0 = pc.R * x0;
        p0 = pc.R * p0;
        const double t = ut(rng);
        jac = std::max(jac, std::abs(flow_jacobian(t, x0 + t * p_hat(p0), p0, *field2, quad) - 1.0));
    }

    const json& lp = check_named("lp_linf_conservation");
    const double linf = lp["detail"]["max_drift"];
    const bool ok = pmax <= 2.0 * pc.R && nonzero == 0 && jac <= 1e-3 && linf <= 1e-3;
    return {ok, "max momentum " + fmt(pmax) + " (bound " + fmt(2 * pc.R) + "), nonzero outside support " +
                    std::to_string(nonzero) + "/600, max |J-1| " + fmt(jac) + ", sup f drift " + fmt(linf)};
}

// ---------------------------------------------------------------- 8

Outcome radiation() {
    // control: outgoing pulse
    auto g = [](double u) { return std::abs(u) < 1 ? std::pow(1 - u * u, 3) : 0.0; };
    const LambdaField pulse([&](double t, const Vec3& x) { return outgoing_pulse(t, x, g); }, {});
    const RadiationReport c = incoming_radiation(0.0, 1.0, -1.0, 1.0, {2, 3, 4, 5}, pulse);
    bool control = c.outgoing_limit > 0;
    for (std::size_t k = 0; k < c.radii.size(); ++k)
        control = control && std::abs(c.incoming[k]) <= 1e-12 * c.outgoing[k] && c.outgoing[k] > 0;
    if (!g_run.ok) return {false, g_run.error};
    const json& r = check_named("incoming_radiation");
    const json& d = r["detail"];
    if (d.contains("error")) return {false, d["error"].get<std::string>()};
    return {control && r["pass"].get<bool>(),
            std::string("control ") + (control ? "ok" : "FAIL") + ", run incoming limit " +
                fmt(d["incoming_limit"]) + ", outgoing limit " + fmt(d["outgoing_limit"]) +
                ", decreasing " + (d["incoming_decreasing"].get<bool>() ? "yes" : "no")};
}

// ---------------------------------------------------------------- 9

Outcome energy() {
    QuadratureSpec q;
    q.momentum_nodes = 8;
    const FreeStreamingDensity f(InitialData(1.0, 1.0), 1e-9);
    const NullField nf;
    EnergyOptions o;
    o.spatial_nodes = 16;
    const double k0 = energies(0.0, f, nf, q, o).kinetic;
    double free = 0.0;
    for (double t : {-3.0, 2.0, 4.0}) free = std::max(free, std::abs(energies(t, f, nf, q, o).kinetic / k0 - 1));
    if (!g_run.ok) return {false, g_run.error};
    const json& r = check_named("energy_conservation");
    const double drift = r["detail"]["max_relative_drift"];
    return {drift <= 0.05 && free <= 5e-3,
            "run drift " + fmt(drift) + ", free streaming drift " + fmt(free)};
}

// ---------------------------------------------------------------- 10

Outcome reproducibility(const fs::path& root) {
    if (g_run.records.empty()) return {false, "no first run: " + g_run.error};
    CommonOptions o;
    o.config_path = (g_run.dir / "config.json").string();
    o.out = (root / "run2").string();
    o.threads = 1;
    o.quiet = true;
    std::ostringstream log;
    cmd_simulate(o, log);
    int same = 0, total = 0;
    for (const auto& rec : g_run.records) {
        const std::string name = rec["table"];
        ++total;
        const std::string a = slurp(g_run.dir / name), b = slurp(root / "run2" / name);
        same += !a.empty() && a == b;
    }
    return {total > 0 && same == total, std::to_string(same) + "/" + std::to_string(total) +
                                            " tables byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "rvmret_acceptance";
    int failed = 0;
    auto report = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << ", "
                  << fmt(s) << " s): " << o.detail << std::endl;
    };
    report(1, "lemma A equivalence", lemma_a);
    report(2, "lemma 4/5 bounds", lemma4);
    report(3, "representation oracle", representation);
    report(4, "chain-rule identities", chain_rule);
    const auto t0 = std::chrono::steady_clock::now();
    try {
        prepare_run(root);
    } catch (const std::exception& e) {
        g_run.error = e.what();
    }
    std::cout << "acceptance run and diagnostics: "
              << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) << " s"
              << std::endl;
    report(5, "Picard contraction", contraction);
    report(6, "decay", decay);
    report(7, "kinetic structure", kinetic);
    report(8, "radiation", radiation);
    report(9, "energy", energy);
    report(10, "reproducibility", [&] { return reproducibility(root); });
    std::cout << (10 - failed) << "/10 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
