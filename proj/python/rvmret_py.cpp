#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rvmret/commands.hpp"
#include "rvmret/config.hpp"
#include "rvmret/diagnostics.hpp"
#include "rvmret/errors.hpp"
#include "rvmret/lightcone.hpp"
#include "rvmret/picard.hpp"

namespace py = pybind11;
using namespace rvmret;

namespace {

CommonOptions common(const std::string& config, std::optional<std::string> out,
                     std::optional<std::uint64_t> seed, std::optional<int> threads, bool quiet) {
    CommonOptions o;
    o.config_path = config;
    o.out = std::move(out);
    o.seed = seed;
    o.threads = threads;
    o.quiet = quiet;
    return o;
}

// runs a command, returns (exit code, log text)
template <class F>
py::tuple logged(F&& fn) {
    std::ostringstream log;
    int code = 0;
    {
        py::gil_scoped_release release;
        code = fn(log);
    }
    return py::make_tuple(code, log.str());
}

py::dict bound_report(const BoundCheckReport& r) {
    py::dict d;
    d["family"] = family_name(r.family);
    d["q"] = r.q;
    d["fitted_constant"] = r.fitted_constant;
    d["subsample_constant"] = r.subsample_constant;
    d["max_t"] = r.max_t;
    d["max_x"] = r.max_x;
    d["finite"] = r.finite;
    d["stable"] = r.stable;
    d["inconclusive"] = r.inconclusive;
    d["pass"] = r.pass;
    std::vector<std::array<double, 5>> rows;
    for (const auto& s : r.samples) rows.push_back({s.t, s.x_norm, s.value, s.shape, s.ratio});
    d["samples"] = rows;
    return d;
}

}  // namespace

PYBIND11_MODULE(_rvmret, m) {
    m.doc() = "Retarded relativistic Vlasov-Maxwell solver and verification suite";

    static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
    py::register_exception<DomainExceeded>(m, "DomainExceeded", base.ptr());
    py::register_exception<ToleranceNotMet>(m, "ToleranceNotMet", base.ptr());
    py::register_exception<SingularAtOrigin>(m, "SingularAtOrigin", base.ptr());
    py::register_exception<NonConvergent>(m, "NonConvergent", base.ptr());
    py::register_exception<InfeasibleBudget>(m, "InfeasibleBudget", base.ptr());
    py::register_exception<NonContraction>(m, "NonContraction", base.ptr());
    py::register_exception<IllConditioned>(m, "IllConditioned", base.ptr());
    py::register_exception<SupportMarginExceeded>(m, "SupportMarginExceeded", base.ptr());
    py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

    m.def("a_of_beta", &a_of_beta, py::arg("beta"));
    m.def("initial_delta", [](double R, double amplitude) { return InitialData(R, amplitude).Delta(); },
          py::arg("R") = 1.0, py::arg("amplitude") = 1.0);
    m.def("initial_value",
          [](double R, double amplitude, std::array<double, 3> x, std::array<double, 3> p) {
              return InitialData(R, amplitude)({x[0], x[1], x[2]}, {p[0], p[1], p[2]});
          },
          py::arg("R"), py::arg("amplitude"), py::arg("x"), py::arg("p"));

    // light cone
    m.def("lemma_a_reduce", &lemma_a_reduce, py::arg("g"), py::arg("t"), py::arg("x_norm"),
          py::arg("a_lo"), py::arg("b_hi"), py::arg("n"));
    m.def("shell_integral_direct", &shell_integral_direct, py::arg("g"), py::arg("t"),
          py::arg("x_norm"), py::arg("a_lo"), py::arg("b_hi"), py::arg("n"), py::arg("nodes") = 32);
    m.def("eval_cone",
          [](const std::string& family, double q, double t, double x) {
              return eval_cone({parse_family(family), q, t, x});
          },
          py::arg("family"), py::arg("q"), py::arg("t"), py::arg("x_norm"));
    m.def("bound_shape",
          [](const std::string& family, double q, double t, double x) {
              return bound_shape(parse_family(family), q, t, x);
          },
          py::arg("family"), py::arg("q"), py::arg("t"), py::arg("x_norm"));
    m.def("bound_sample_points", &bound_sample_points, py::arg("count"), py::arg("seed"),
          py::arg("extent") = 20.0);
    m.def("check_bounds",
          [](const std::string& family, double q, const std::vector<std::pair<double, double>>& pts) {
              return bound_report(check_bounds(parse_family(family), q, pts));
          },
          py::arg("family"), py::arg("q"), py::arg("sample"));

    // diagnostics on plain data
    m.def("decay_fit",
          [](const std::vector<std::array<double, 3>>& probes) {
              std::vector<DecayProbe> p;
              for (const auto& r : probes) p.push_back({r[0], r[1], r[2]});
              const DecayFit f = decay_fit(p);
              py::dict d;
              d["C"] = f.C;
              d["alpha1"] = f.alpha1;
              d["alpha2"] = f.alpha2;
              d["residual"] = f.residual;
              d["used"] = f.used;
              return d;
          },
          py::arg("probes"), "Fit |F| ~ C (1+|t|+|x|)^-alpha1 (1+|t-|x||)^-alpha2 to (t, |x|, |F|) rows.");

    // field tables
    m.def("read_table",
          [](const std::string& path) {
              const FieldTable T = FieldTable::read(path);
              std::vector<py::ssize_t> shape;
              py::list axes;
              for (int k = 0; k < 4; ++k) {
                  shape.push_back(static_cast<py::ssize_t>(T.axis(k).count));
                  axes.append(py::make_tuple(T.axis(k).min, T.axis(k).max, T.axis(k).count));
              }
              shape.push_back(FieldTable::kComponents);
              py::array_t<double> values(shape);
              std::copy(T.values().begin(), T.values().end(), values.mutable_data());
              return py::make_tuple(axes, values);
          },
          py::arg("path"), "Returns (axes, values) with values shaped (n_t, n_x1, n_x2, n_x3, 6).");
    m.def("interpolate",
          [](const std::string& path, double t, std::array<double, 3> x) {
              const FieldTable T = FieldTable::read(path);
              const FieldValue v = T.interpolate(t, {x[0], x[1], x[2]});
              return std::array<double, 6>{v.E.x, v.E.y, v.E.z, v.B.x, v.B.y, v.B.z};
          },
          py::arg("path"), py::arg("t"), py::arg("x"));
    m.def("final_table_path", &final_table_path, py::arg("run_dir"));

    // configuration
    m.def("normalize_config", [](const std::string& text) { return config_to_json(parse_config(text)); },
          py::arg("text"), "Parse a JSON config and return it with every default filled in.");

    // commands: each returns (exit_code, log)
    m.def("simulate",
          [](const std::string& config, std::optional<std::string> out, std::optional<std::uint64_t> seed,
             std::optional<int> threads, bool quiet) {
              const CommonOptions o = common(config, out, seed, threads, quiet);
              return logged([&](std::ostream& log) { return cmd_simulate(o, log); });
          },
          py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
          py::arg("threads") = py::none(), py::arg("quiet") = true);
    m.def("diagnose",
          [](const std::string& run_dir, std::optional<std::uint64_t> seed, bool quiet) {
              const CommonOptions o = common("", std::nullopt, seed, std::nullopt, quiet);
              return logged([&](std::ostream& log) { return cmd_diagnose(o, run_dir, log); });
          },
          py::arg("run_dir"), py::arg("seed") = py::none(), py::arg("quiet") = true);
    m.def("verify_lemma4",
          [](std::vector<std::string> families, std::vector<double> q, int samples,
             std::optional<std::string> out, std::optional<std::uint64_t> seed) {
              const CommonOptions o = common("", out, seed, std::nullopt, true);
              Lemma4Options l;
              l.families = std::move(families);
              l.q_values = std::move(q);
              l.samples = samples;
              return logged([&](std::ostream& log) { return cmd_verify_lemma4(o, l, log); });
          },
          py::arg("families") = std::vector<std::string>{}, py::arg("q") = std::vector<double>{},
          py::arg("samples") = 200, py::arg("out") = py::none(), py::arg("seed") = py::none());
    m.def("verify_lemma_a",
          [](int count, std::optional<std::string> out, std::optional<std::uint64_t> seed) {
              const CommonOptions o = common("", out, seed, std::nullopt, true);
              return logged([&](std::ostream& log) { return cmd_verify_lemma_a(o, count, log); });
          },
          py::arg("count") = 10, py::arg("out") = py::none(), py::arg("seed") = py::none());
    m.def("probe",
          [](const std::string& run_dir, const std::string& points) {
              std::ostringstream csv;
              py::tuple r = logged([&](std::ostream& log) { return cmd_probe(run_dir, points, csv, log); });
              return py::make_tuple(r[0], csv.str(), r[1]);
          },
          py::arg("run_dir"), py::arg("points"), "Returns (exit_code, csv, log).");
    m.def("report",
          [](const std::string& run_dir) {
              std::ostringstream md;
              py::tuple r = logged([&](std::ostream& log) { return cmd_report(run_dir, md, log); });
              return py::make_tuple(r[0], md.str(), r[1]);
          },
          py::arg("run_dir"), "Returns (exit_code, markdown, log).");
}
