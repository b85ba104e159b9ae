#pragma once

// The command implementations behind the `sshash` executable, plus the sweep
// machinery they share with the acceptance harness.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sshash/run_config.hpp"
#include "sshash/stats.hpp"

namespace sshash {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 2, kExitData = 3, kExitInternal = 4 };

/// Dataset label for outputs: dataset_name, else "synthetic" or the file stem.
std::string dataset_label(const RunConfig& config);

/// Split selector for hash/evaluate: "train", "val", "test" or "all".
std::vector<std::size_t> rows_for(const LabeledDataset& data, std::string_view split_name);

struct TrainOutputs {
    std::filesystem::path checkpoint;
    std::filesystem::path log;
};

/// Trains one model: <out>/model.ckpt, train_log.csv, train_timing.csv, config.resolved.
TrainOutputs cmd_train(const RunConfig& config, std::ostream& msg);

/// Writes the code file of the selected rows (ids are dataset row numbers).
void cmd_hash(const RunConfig& config, const std::filesystem::path& checkpoint,
              std::string_view split_name, const std::filesystem::path& output,
              std::ostream& msg);

/// Ranks every query code against the index codes:
/// CSV "query_id,rank,item_id,distance,truncated".
void cmd_search(const std::filesystem::path& index_codes, const std::filesystem::path& query_codes,
                std::size_t k, const std::filesystem::path& output, std::ostream& msg);

/// Queries from `split_name` against the train split: <out>/metrics.csv and,
/// when requested, <out>/per_query.csv.
EvalReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint,
                        std::string_view split_name, bool per_query, std::ostream& msg);

/// Writes <out>/features.txt and labels.txt for the configured synthetic spec.
void cmd_synth(const RunConfig& config, std::ostream& msg);

struct RunKey {
    std::string method;
    double rho = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
};

struct RunRecord {
    std::string dataset;
    std::string method;
    std::string latent;
    std::size_t bits = 0;
    double rho = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::uint64_t seed = 0;
    double val_precision = 0.0;
    double val_map = 0.0;
    double test_precision = 0.0;
    double test_map = 0.0;
    double seconds = 0.0;  // kept out of the deterministic CSV
};

/// Every (method, rho, grid point, seed) run, grid pruned to max_runs. Weights
/// a method does not use are fixed to 0 and collapse their grid axis.
std::vector<RunKey> plan_sweep(const RunConfig& config);

/// Trains one sweep run on a copy of `data` and scores it on val and test.
RunRecord execute_run(const LabeledDataset& data, const RunConfig& config, const RunKey& key);

/// Executes the runs on up to config.threads workers. `commit` sees every
/// record exactly once, serialized and in key order.
std::vector<RunRecord> execute_runs(
    const LabeledDataset& data, const RunConfig& config, const std::vector<RunKey>& keys,
    const std::function<void(std::size_t, const RunRecord&)>& commit = {});

/// Seed of the supervision mask drawn for a training seed.
std::uint64_t mask_seed(std::uint64_t seed) noexcept;

struct SummaryRow {
    std::string dataset;
    std::string method;
    std::string latent;
    std::size_t bits = 0;
    double rho = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    std::size_t seeds = 0;
    double val_precision = 0.0;
    double test_precision = 0.0;
    double test_precision_sd = 0.0;
    double test_map = 0.0;
};

/// Per (dataset, method, bits, rho): the grid point with the best mean
/// validation precision (first in grid order on ties), with test metrics
/// averaged over its seeds.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs);

void write_runs_header(std::ostream& out);
void write_run_row(std::ostream& out, const RunRecord& r);
std::vector<RunRecord> read_runs(std::istream& in);
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);
std::vector<SummaryRow> read_summary(std::istream& in);

/// Runs (or resumes) the sweep: <out>/runs.csv (append-only, one row per run),
/// runs_timing.csv, summary.csv and config.resolved.
std::vector<SummaryRow> cmd_sweep(const RunConfig& config, std::ostream& msg);

/// (dataset, bits) -> methods x rho-levels score table of mean test precision;
/// rho levels missing any method are dropped.
std::map<std::pair<std::string, std::size_t>, ScoreTable> score_tables(
    const std::vector<SummaryRow>& rows);

struct StatsRow {
    std::string dataset;
    std::size_t bits = 0;
    std::string test;        // "friedman" or "nemenyi"
    std::string comparison;  // "all" or "<method>-vs-<method>"
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t blocks = 0;
    std::size_t methods = 0;
};

/// Friedman per table; Nemenyi of the reference method against every other
/// when Friedman rejects at `level` (p < level).
std::vector<StatsRow> significance(const std::string& dataset, std::size_t bits,
                                   const ScoreTable& table, double level,
                                   const std::string& reference = "ssb-vae");
void write_stats(std::ostream& out, const std::vector<StatsRow>& rows);

/// Accepts runs.csv, summary.csv or a single score table CSV; writes
/// <out>/stats.csv and one scores_<dataset>_b<bits>.csv per table.
std::vector<StatsRow> cmd_stats(const RunConfig& config, const std::filesystem::path& input,
                                std::ostream& msg);

}  // namespace sshash
