// sshash: train, hash, search, evaluate, sweep and test semi-supervised
// binary hashing models from the command line.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "sshash/commands.hpp"
#include "sshash/model.hpp"

namespace {

struct CommonOptions {
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> dataset;
    std::optional<std::size_t> bits;
    std::optional<std::string> mode;
    std::optional<std::string> rho;
    std::optional<std::size_t> k;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config_file, "key = value configuration file");
    cmd->add_option("--set", o.overrides, "override a config key (key=value), repeatable");
    cmd->add_option("--seed", o.seed, "training seed");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--dataset", o.dataset, "feature file, or 'synthetic'");
    cmd->add_option("--bits", o.bits, "code length B");
    cmd->add_option("--mode", o.mode, "ssb-vae, psh-gs, vdsh-s, unsup or a supervision mode");
    cmd->add_option("--rho", o.rho, "supervision ratio in (0, 1]");
    cmd->add_option("--k", o.k, "retrieval depth");
}

sshash::RunConfig resolve(const CommonOptions& o) {
    sshash::RunConfig c;
    if (!o.config_file.empty()) c.apply_file(o.config_file);
    if (o.seed) c.set("seed", std::to_string(*o.seed));
    if (o.out) c.set("out", *o.out);
    if (o.dataset) c.set("dataset", *o.dataset);
    if (o.bits) c.set("bits", std::to_string(*o.bits));
    if (o.mode) c.set("mode", *o.mode);
    if (o.rho) c.set("rho", *o.rho);
    if (o.k) c.set("k", std::to_string(*o.k));
    for (const auto& s : o.overrides) c.apply_override(s);
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace sshash;
    CLI::App app{"Semi-supervised binary hashing with Bernoulli variational autoencoders"};
    app.require_subcommand(1);

    CommonOptions train_opts, hash_opts, eval_opts, sweep_opts, stats_opts, synth_opts;
    std::string checkpoint, split_name = "test", codes_out;
    std::string index_file, query_file, ranking_out;
    std::size_t search_k = 100;
    bool per_query = false;
    std::string stats_input;

    auto* train_cmd = app.add_subcommand("train", "train a model and write its checkpoint");
    add_common(train_cmd, train_opts);

    auto* hash_cmd = app.add_subcommand("hash", "emit hash codes for a dataset split");
    add_common(hash_cmd, hash_opts);
    hash_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    hash_cmd->add_option("--split", split_name, "train, val, test or all")->capture_default_str();
    hash_cmd->add_option("-o,--output", codes_out, "code file (default <out>/codes.txt)");

    auto* search_cmd = app.add_subcommand("search", "rank query codes against indexed codes");
    search_cmd->add_option("--index", index_file, "code file to search")->required();
    search_cmd->add_option("--queries", query_file, "code file of queries")->required();
    search_cmd->add_option("--k", search_k, "neighbours per query")->capture_default_str();
    search_cmd->add_option("-o,--output", ranking_out, "ranking CSV")->required();

    auto* eval_cmd = app.add_subcommand("evaluate", "p@k and MAP@k of a checkpoint");
    add_common(eval_cmd, eval_opts);
    eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    eval_cmd->add_option("--split", split_name, "query split")->capture_default_str();
    eval_cmd->add_flag("--per-query", per_query, "also write per_query.csv");

    auto* sweep_cmd = app.add_subcommand("sweep", "supervision-ratio sweep with weight selection");
    add_common(sweep_cmd, sweep_opts);

    auto* stats_cmd = app.add_subcommand("stats", "Friedman and Nemenyi tests on sweep output");
    add_common(stats_cmd, stats_opts);
    stats_cmd->add_option("input", stats_input, "runs.csv, summary.csv or score table")->required();

    auto* synth_cmd = app.add_subcommand("synth", "write the synthetic dataset as dense files");
    add_common(synth_cmd, synth_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) {
            cmd_train(resolve(train_opts), std::cout);
        } else if (*hash_cmd) {
            const auto config = resolve(hash_opts);
            const std::filesystem::path out =
                codes_out.empty() ? config.out / "codes.txt" : std::filesystem::path(codes_out);
            cmd_hash(config, checkpoint, split_name, out, std::cout);
        } else if (*search_cmd) {
            cmd_search(index_file, query_file, search_k, ranking_out, std::cout);
        } else if (*eval_cmd) {
            cmd_evaluate(resolve(eval_opts), checkpoint, split_name, per_query, std::cout);
        } else if (*sweep_cmd) {
            cmd_sweep(resolve(sweep_opts), std::cout);
        } else if (*stats_cmd) {
            cmd_stats(resolve(stats_opts), stats_input, std::cout);
        } else if (*synth_cmd) {
            cmd_synth(resolve(synth_opts), std::cout);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const InvalidInput& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitOk;
}
