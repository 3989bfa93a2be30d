#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rvmret/config.hpp"
#include "rvmret/field_table.hpp"

namespace rvmret {

/// Flags shared by every command. Unset values fall back to the config file.
struct CommonOptions {
    std::string config_path;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool quiet = false;
};

/// Exit codes: 0 success, 1 input or numeric failure, 2 a checked property failed
/// (NonContraction for simulate).
enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitCheckFailed = 2 };

/// Runs the Picard iteration and writes the run directory: config.json, field_NNN.bin,
/// iterates.jsonl, iterates.csv, summary.json.
int cmd_simulate(const CommonOptions& opt, std::ostream& log);

struct Lemma4Options {
    std::vector<std::string> families;  // empty: the default (family, q) pairs
    std::vector<double> q_values;
    int samples = 200;
};

/// Bound checks for the weighted cone integrals plus the trick inequality; writes
/// lemma4_samples.csv and lemma4_summary.csv into --out (if given).
int cmd_verify_lemma4(const CommonOptions& opt, const Lemma4Options& l4, std::ostream& log);

/// Reduction vs direct 3-D product rule on random smooth radial integrands and the
/// closed-form shells; writes lemma_a.csv into --out (if given).
int cmd_verify_lemma_a(const CommonOptions& opt, int count, std::ostream& log);

/// Evaluates the final field table of a run and its finite-difference gradient at the
/// (t, x1, x2, x3) rows of a CSV file; writes CSV to `csv_out`.
int cmd_probe(const std::string& run_dir, const std::string& points_path, std::ostream& csv_out,
              std::ostream& log);

/// Diagnostics over a finished run; writes diagnose.json and CSVs into the run directory.
int cmd_diagnose(const CommonOptions& opt, const std::string& run_dir, std::ostream& log);

/// Markdown summary of a run directory (and its diagnostics, if present).
int cmd_report(const std::string& run_dir, std::ostream& out, std::ostream& log);

// helpers shared with the tests and the Python module

/// Path of the final field table named in summary.json. Throws Error if missing.
std::string final_table_path(const std::string& run_dir);

/// Finite-difference spatial gradient of a table-backed field: central differences with the
/// grid step where both neighbours are inside the grid, one-sided otherwise.
std::array<FieldValue, 4> table_gradient(const FieldTable& table, double t, const Vec3& x);

/// RFC 4180 quoting of one CSV cell.
std::string csv_cell(const std::string& s);

}  // namespace rvmret
