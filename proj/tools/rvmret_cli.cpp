#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "rvmret/commands.hpp"

using namespace rvmret;

int main(int argc, char** argv) {
    CLI::App app{"Solver and verification suite for the retarded relativistic Vlasov-Maxwell system"};
    app.require_subcommand(1);

    CommonOptions common;
    std::string out, run_dir, points;
    std::uint64_t seed = 0;
    int threads = 0;
    auto add_common = [&](CLI::App* sub, bool need_config) {
        auto* c = sub->add_option("--config", common.config_path, "run configuration (JSON)");
        if (need_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out, "output directory (or file for probe/report)");
        sub->add_option("--seed", seed, "seed for sampling-based checks");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", common.quiet, "only errors on stderr");
    };

    auto* sim = app.add_subcommand("simulate", "run the Picard iteration and write a run directory");
    add_common(sim, true);

    Lemma4Options l4;
    auto* lem4 = app.add_subcommand("verify-lemma4", "check the weighted light-cone integral bounds");
    add_common(lem4, false);
    lem4->add_option("--family", l4.families, "I1, I2 or II (repeatable)");
    lem4->add_option("--q", l4.q_values, "exponent q (repeatable)");
    lem4->add_option("--samples", l4.samples, "sample count");

    int count = 10;
    auto* lema = app.add_subcommand("verify-lemma-a", "compare the reduction with direct 3-D quadrature");
    add_common(lema, false);
    lema->add_option("--count", count, "random integrands");

    auto* probe = app.add_subcommand("probe", "evaluate the final field of a run at listed points");
    add_common(probe, false);
    probe->add_option("run_dir", run_dir, "run directory")->required();
    probe->add_option("points", points, "CSV file of t,x1,x2,x3 rows")->required();

    auto* diag = app.add_subcommand("diagnose", "run the diagnostics over a finished run");
    add_common(diag, false);
    diag->add_option("run_dir", run_dir, "run directory")->required();

    auto* rep = app.add_subcommand("report", "markdown summary of a run directory");
    add_common(rep, false);
    rep->add_option("run_dir", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    for (auto* sub : app.get_subcommands()) {
        if (sub->count("--out")) common.out = out;
        if (sub->count("--seed")) common.seed = seed;
        if (sub->count("--threads")) common.threads = threads;
    }

    // file output for probe and report when --out is given
    auto with_output = [&](auto&& fn) {
        if (!common.out) return fn(std::cout);
        std::ofstream f(*common.out, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write " << *common.out << "\n";
            return static_cast<int>(kExitError);
        }
        return fn(f);
    };

    if (*sim) return cmd_simulate(common, std::cerr);
    if (*lem4) return cmd_verify_lemma4(common, l4, std::cerr);
    if (*lema) return cmd_verify_lemma_a(common, count, std::cerr);
    if (*probe) return with_output([&](std::ostream& o) { return cmd_probe(run_dir, points, o, std::cerr); });
    if (*diag) return cmd_diagnose(common, run_dir, std::cerr);
    if (*rep) return with_output([&](std::ostream& o) { return cmd_report(run_dir, o, std::cerr); });
    return kExitError;
}
