#include "sshash/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#ifdef SSHASH_HAVE_OPENMP
#include <omp.h>
#endif

#include "sshash/evaluate.hpp"

namespace sshash {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos
                                                                      : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

double cell_double(const std::string& c, std::size_t line_no) {
    double v = 0.0;
    const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
    if (res.ec != std::errc{} || res.ptr != c.data() + c.size())
        throw InvalidInput("line " + std::to_string(line_no) + ": bad number '" + c + "'");
    return v;
}

std::uint64_t cell_uint(const std::string& c, std::size_t line_no) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
    if (res.ec != std::errc{} || res.ptr != c.data() + c.size())
        throw InvalidInput("line " + std::to_string(line_no) + ": bad integer '" + c + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path,
                       std::ios::openmode mode = std::ios::out | std::ios::trunc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, mode);
    if (!out) throw InvalidInput("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open " + path.string());
    return in;
}

bool method_uses_pairs(const TrainConfig& t) {
    return t.mode == SupervisionMode::pairwise_gt || t.mode == SupervisionMode::selfsup;
}

/// Reads a CSV with the expected header; returns the data lines' cells.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_csv(
    std::istream& in, const std::string& header) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
    std::string line;
    std::size_t line_no = 0;
    bool seen_header = false;
    const std::size_t columns = split_csv(header).size();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!seen_header) {
            if (line != header)
                throw InvalidInput("line " + std::to_string(line_no) + ": expected header '" +
                                   header + "'");
            seen_header = true;
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != columns)
            throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(columns) + " fields, got " +
                               std::to_string(cells.size()));
        rows.emplace_back(line_no, std::move(cells));
    }
    return rows;
}

const std::string kRunsHeader =
    "dataset,method,latent,bits,rho,alpha,beta,seed,val_precision,val_map,test_precision,test_map";
const std::string kTimingHeader = "dataset,method,bits,rho,alpha,beta,seed,seconds";
const std::string kSummaryHeader =
    "dataset,method,latent,bits,rho,alpha,beta,seeds,val_precision,test_precision,"
    "test_precision_sd,test_map";
const std::string kStatsHeader = "dataset,bits,test,comparison,statistic,p_value,blocks,methods";

std::string run_id(const std::string& dataset, const std::string& method, std::size_t bits,
                   double rho, double alpha, double beta, std::uint64_t seed) {
    return dataset + '|' + method + '|' + std::to_string(bits) + '|' + fmt(rho) + '|' +
           fmt(alpha) + '|' + fmt(beta) + '|' + std::to_string(seed);
}

std::string first_data_line(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line.front() != '#') return line;
    }
    return {};
}

}  // namespace

std::uint64_t mask_seed(std::uint64_t seed) noexcept { return seed ^ 0x9e3779b97f4a7c15ULL; }

std::string dataset_label(const RunConfig& config) {
    if (!config.dataset_name.empty()) return config.dataset_name;
    if (config.dataset == "synthetic") return "synthetic";
    return std::filesystem::path(config.dataset).stem().string();
}

std::vector<std::size_t> rows_for(const LabeledDataset& data, std::string_view split_name) {
    if (split_name == "train") return data.rows_in(Split::train);
    if (split_name == "val") return data.rows_in(Split::val);
    if (split_name == "test") return data.rows_in(Split::test);
    if (split_name == "all") {
        std::vector<std::size_t> rows(data.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        return rows;
    }
    throw UsageError("unknown split '" + std::string(split_name) +
                     "' (expected train, val, test or all)");
}

TrainOutputs cmd_train(const RunConfig& config, std::ostream& msg) {
    const TrainConfig tc = config.resolved_train();
    LabeledDataset data = load_dataset(config);
    if (tc.mode != SupervisionMode::unsup) {
        if (!data.has_labels())
            throw InvalidInput("mode '" + std::string(to_string(tc.mode)) + "' needs labels");
        apply_supervision(data, config.rho, mask_seed(tc.seed), config.mask_strategy);
    }
    const TrainResult result = train(data, tc);

    config.write_resolved();
    TrainOutputs outputs{config.out / "model.ckpt", config.out / "train_log.csv"};
    save_checkpoint(outputs.checkpoint, result.model);
    auto log = open_out(outputs.log);
    log << "epoch,total,reconstruction,kl,supervised,pairwise,batches,batches_without_labels,"
           "batches_without_pairs\n";
    auto timing = open_out(config.out / "train_timing.csv");
    timing << "epoch,seconds\n";
    for (const auto& e : result.log.epochs) {
        log << e.epoch << ',' << fmt(e.total) << ',' << fmt(e.reconstruction) << ',' << fmt(e.kl)
            << ',' << fmt(e.supervised) << ',' << fmt(e.pairwise) << ',' << e.batches << ','
            << e.batches_without_labels << ',' << e.batches_without_pairs << '\n';
        timing << e.epoch << ',' << fmt(e.seconds) << '\n';
    }
    msg << "trained " << method_name(tc.mode, tc.latent) << " (" << tc.bits << " bits, "
        << tc.epochs << " epochs, rho " << fmt(config.rho) << ") -> " << outputs.checkpoint.string()
        << '\n';
    if (!result.log.epochs.empty())
        msg << "final epoch loss " << fmt(result.log.epochs.back().total) << '\n';
    return outputs;
}

void cmd_hash(const RunConfig& config, const std::filesystem::path& checkpoint,
              std::string_view split_name, const std::filesystem::path& output,
              std::ostream& msg) {
    const ModelBundle model = load_checkpoint(checkpoint);
    const LabeledDataset data = load_dataset(config);
    const auto rows = rows_for(data, split_name);
    const auto codes = hash_rows(model, data, rows);
    const std::vector<std::uint64_t> ids(rows.begin(), rows.end());
    auto out = open_out(output);
    write_code_file(out, model.bits, ids, codes);
    config.write_resolved();
    msg << "hashed " << rows.size() << " rows to " << model.bits << "-bit codes -> "
        << output.string() << '\n';
}

void cmd_search(const std::filesystem::path& index_codes, const std::filesystem::path& query_codes,
                std::size_t k, const std::filesystem::path& output, std::ostream& msg) {
    if (k == 0) throw UsageError("k must be positive");
    auto index_in = open_in(index_codes);
    auto query_in = open_in(query_codes);
    const CodeFile items = read_code_file(index_in);
    const CodeFile queries = read_code_file(query_in);
    if (items.bits != queries.bits)
        throw InvalidInput("index codes have " + std::to_string(items.bits) +
                           " bits, query codes " + std::to_string(queries.bits));
    const HashIndex index(items.bits, items.codes, items.ids);
    const auto rankings = top_k_batch(queries.codes, index, k, queries.ids);
    auto out = open_out(output);
    out << "query_id,rank,item_id,distance,truncated\n";
    for (const auto& r : rankings)
        for (std::size_t i = 0; i < r.neighbors.size(); ++i)
            out << r.query_id << ',' << i + 1 << ',' << r.neighbors[i].id << ','
                << r.neighbors[i].distance << ',' << (r.truncated ? 1 : 0) << '\n';
    msg << "ranked " << rankings.size() << " queries against " << index.size() << " codes"
        << (k > index.size() ? " (k capped at index size)" : "") << " -> " << output.string()
        << '\n';
}

EvalReport cmd_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint,
                        std::string_view split_name, bool per_query, std::ostream& msg) {
    const ModelBundle model = load_checkpoint(checkpoint);
    const LabeledDataset data = load_dataset(config);
    if (!data.has_labels()) throw InvalidInput("evaluation needs a labelled dataset");
    const auto queries = rows_for(data, split_name);
    if (queries.empty()) throw InvalidInput("split '" + std::string(split_name) + "' is empty");
    const HashIndex index = build_index(model, data, data.rows_in(Split::train));
    const EvalReport report = evaluate(model, data, queries, index, config.k, config.map_definition);

    config.write_resolved();
    auto out = open_out(config.out / "metrics.csv");
    out << "split,k,queries,mean_precision,mean_map,map_definition,truncated\n"
        << split_name << ',' << report.k << ',' << report.per_query.size() << ','
        << fmt(report.mean_precision) << ',' << fmt(report.mean_map) << ','
        << (config.map_definition == MapDefinition::mean_precision ? "mean-precision"
                                                                   : "relevant-ranks")
        << ',' << (report.truncated ? 1 : 0) << '\n';
    if (per_query) {
        auto pq = open_out(config.out / "per_query.csv");
        pq << "query_id,precision,map,retrieved,truncated\n";
        for (const auto& q : report.per_query)
            pq << q.query_id << ',' << fmt(q.precision) << ',' << fmt(q.map) << ',' << q.retrieved
               << ',' << (q.truncated ? 1 : 0) << '\n';
    }
    msg << "p@" << config.k << " = " << fmt(report.mean_precision) << ", MAP@" << config.k
        << " = " << fmt(report.mean_map) << " over " << report.per_query.size() << " queries"
        << (report.truncated ? " (truncated rankings)" : "") << '\n';
    return report;
}

void cmd_synth(const RunConfig& config, std::ostream& msg) {
    const LabeledDataset data = make_synthetic(config.synthetic);
    auto features = open_out(config.out / "features.txt");
    write_dense(features, data.features);
    auto labels = open_out(config.out / "labels.txt");
    write_labels(labels, data.labels);
    config.write_resolved();
    msg << "wrote " << data.size() << " x " << data.dim() << " synthetic rows, "
        << data.num_classes << " classes -> " << config.out.string() << '\n';
}

std::vector<RunKey> plan_sweep(const RunConfig& config) {
    struct Point {
        double alpha, beta;
    };
    std::vector<RunKey> keys;
    std::vector<std::pair<std::string, std::vector<Point>>> per_method;
    for (const auto& method : config.methods) {
        TrainConfig t;
        apply_method(t, method);
        const std::vector<double> alphas =
            method_uses_pairs(t) ? config.alpha_grid : std::vector<double>{0.0};
        const std::vector<double> betas =
            t.mode != SupervisionMode::unsup ? config.beta_grid : std::vector<double>{0.0};
        std::vector<Point> grid;
        for (double a : alphas)
            for (double b : betas) grid.push_back({a, b});
        per_method.emplace_back(method, std::move(grid));
    }

    std::size_t keep = 0;  // grid points per (method, rho); 0 keeps them all
    if (config.max_runs > 0) {
        std::size_t total = 0;
        for (const auto& [m, grid] : per_method)
            total += grid.size() * config.rhos.size() * config.seeds.size();
        if (total > config.max_runs) {
            const std::size_t slots =
                config.methods.size() * config.rhos.size() * config.seeds.size();
            if (slots > config.max_runs)
                throw UsageError("max_runs = " + std::to_string(config.max_runs) +
                                 " is below one grid point per method, rho and seed (" +
                                 std::to_string(slots) + ")");
            keep = config.max_runs / slots;
        }
    }

    for (const auto& [method, full] : per_method) {
        std::vector<Point> grid = full;
        if (keep > 0 && keep < grid.size()) {
            // Evenly spaced points of the grid in row-major order; one point is the middle.
            std::vector<Point> thinned;
            for (std::size_t i = 0; i < keep; ++i) {
                const std::size_t idx =
                    keep == 1 ? (grid.size() - 1) / 2 : i * (grid.size() - 1) / (keep - 1);
                thinned.push_back(grid[idx]);
            }
            grid = std::move(thinned);
        }
        for (double rho : config.rhos)
            for (const auto& p : grid)
                for (auto seed : config.seeds) keys.push_back({method, rho, p.alpha, p.beta, seed});
    }
    return keys;
}

RunRecord execute_run(const LabeledDataset& data, const RunConfig& config, const RunKey& key) {
    const auto started = std::chrono::steady_clock::now();
    RunConfig rc = config;
    apply_method(rc.train, key.method);
    rc.train.weights.pairwise = key.alpha;
    rc.train.weights.pointwise = key.beta;
    rc.train.seed = key.seed;
    rc.rho = key.rho;
    const TrainConfig tc = rc.resolved_train();

    if (!data.has_labels()) throw InvalidInput("sweeps need a labelled dataset");
    LabeledDataset local = data;
    if (tc.mode != SupervisionMode::unsup)
        apply_supervision(local, key.rho, mask_seed(key.seed), config.mask_strategy);
    const TrainResult result = train(local, tc);

    RunRecord r;
    r.dataset = dataset_label(config);
    r.method = key.method;
    r.latent = std::string(to_string(tc.latent));
    r.bits = tc.bits;
    r.rho = key.rho;
    r.alpha = key.alpha;
    r.beta = key.beta;
    r.seed = key.seed;
    const HashIndex index = build_index(result.model, local, local.rows_in(Split::train));
    const auto val_rows = local.rows_in(Split::val);
    const auto test_rows = local.rows_in(Split::test);
    if (test_rows.empty()) throw InvalidInput("sweeps need a nonempty test split");
    if (val_rows.empty()) {
        r.val_precision = r.val_map = std::nan("");
    } else {
        const auto val = evaluate(result.model, local, val_rows, index, config.k);
        r.val_precision = val.mean_precision;
        r.val_map = val.mean_map;
    }
    const auto test = evaluate(result.model, local, test_rows, index, config.k);
    r.test_precision = test.mean_precision;
    r.test_map = test.mean_map;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return r;
}

std::vector<RunRecord> execute_runs(
    const LabeledDataset& data, const RunConfig& config, const std::vector<RunKey>& keys,
    const std::function<void(std::size_t, const RunRecord&)>& commit) {
    std::vector<RunRecord> records(keys.size());
    std::vector<std::uint8_t> done(keys.size(), 0);
    std::size_t next_commit = 0;
    std::mutex lock;
    std::exception_ptr failure;

    const auto finish = [&](std::size_t i, RunRecord r) {
        std::lock_guard guard(lock);
        records[i] = std::move(r);
        done[i] = 1;
        while (next_commit < keys.size() && done[next_commit]) {
            if (commit && !failure) commit(next_commit, records[next_commit]);
            ++next_commit;
        }
    };

    const auto n = static_cast<std::ptrdiff_t>(keys.size());
#ifdef SSHASH_HAVE_OPENMP
    const int threads = static_cast<int>(std::max<std::size_t>(1, config.threads));
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        {
            std::lock_guard guard(lock);
            if (failure) continue;
        }
        try {
            finish(static_cast<std::size_t>(i),
                   execute_run(data, config, keys[static_cast<std::size_t>(i)]));
        } catch (...) {
            std::lock_guard guard(lock);
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return records;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& runs) {
    struct Cell {
        double alpha, beta;
        std::vector<const RunRecord*> runs;
    };
    // Group key keeps first-seen order for grid points.
    std::map<std::tuple<std::string, std::string, std::size_t, double>, std::vector<Cell>> groups;
    std::vector<std::tuple<std::string, std::string, std::size_t, double>> order;
    for (const auto& r : runs) {
        const auto key = std::make_tuple(r.dataset, r.method, r.bits, r.rho);
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) order.push_back(key);
        auto& cells = it->second;
        auto cell = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) {
            return c.alpha == r.alpha && c.beta == r.beta;
        });
        if (cell == cells.end()) {
            cells.push_back({r.alpha, r.beta, {}});
            cell = std::prev(cells.end());
        }
        cell->runs.push_back(&r);
    }

    std::vector<SummaryRow> rows;
    for (const auto& key : order) {
        const auto& cells = groups.at(key);
        const Cell* best = nullptr;
        double best_val = -1.0;
        for (const auto& c : cells) {
            double val = 0.0;
            for (const auto* r : c.runs) val += r->val_precision;
            val /= static_cast<double>(c.runs.size());
            if (std::isnan(val)) val = -0.5;  // no validation split: first point wins
            if (!best || val > best_val) {
                best = &c;
                best_val = val;
            }
        }
        SummaryRow s;
        s.dataset = std::get<0>(key);
        s.method = std::get<1>(key);
        s.bits = std::get<2>(key);
        s.rho = std::get<3>(key);
        s.latent = best->runs.front()->latent;
        s.alpha = best->alpha;
        s.beta = best->beta;
        s.seeds = best->runs.size();
        const auto n = static_cast<double>(best->runs.size());
        for (const auto* r : best->runs) {
            s.val_precision += r->val_precision;
            s.test_precision += r->test_precision;
            s.test_map += r->test_map;
        }
        s.val_precision /= n;
        s.test_precision /= n;
        s.test_map /= n;
        double ss = 0.0;
        for (const auto* r : best->runs)
            ss += (r->test_precision - s.test_precision) * (r->test_precision - s.test_precision);
        s.test_precision_sd = best->runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        rows.push_back(s);
    }
    return rows;
}

void write_runs_header(std::ostream& out) { out << kRunsHeader << '\n'; }

void write_run_row(std::ostream& out, const RunRecord& r) {
    out << r.dataset << ',' << r.method << ',' << r.latent << ',' << r.bits << ',' << fmt(r.rho)
        << ',' << fmt(r.alpha) << ',' << fmt(r.beta) << ',' << r.seed << ','
        << fmt(r.val_precision) << ',' << fmt(r.val_map) << ',' << fmt(r.test_precision) << ','
        << fmt(r.test_map) << '\n';
}

std::vector<RunRecord> read_runs(std::istream& in) {
    std::vector<RunRecord> runs;
    for (const auto& [line_no, c] : read_csv(in, kRunsHeader)) {
        RunRecord r;
        r.dataset = c[0];
        r.method = c[1];
        r.latent = c[2];
        r.bits = cell_uint(c[3], line_no);
        r.rho = cell_double(c[4], line_no);
        r.alpha = cell_double(c[5], line_no);
        r.beta = cell_double(c[6], line_no);
        r.seed = cell_uint(c[7], line_no);
        r.val_precision = cell_double(c[8], line_no);
        r.val_map = cell_double(c[9], line_no);
        r.test_precision = cell_double(c[10], line_no);
        r.test_map = cell_double(c[11], line_no);
        runs.push_back(r);
    }
    return runs;
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
    out << kSummaryHeader << '\n';
    for (const auto& s : rows)
        out << s.dataset << ',' << s.method << ',' << s.latent << ',' << s.bits << ','
            << fmt(s.rho) << ',' << fmt(s.alpha) << ',' << fmt(s.beta) << ',' << s.seeds << ','
            << fmt(s.val_precision) << ',' << fmt(s.test_precision) << ','
            << fmt(s.test_precision_sd) << ',' << fmt(s.test_map) << '\n';
}

std::vector<SummaryRow> read_summary(std::istream& in) {
    std::vector<SummaryRow> rows;
    for (const auto& [line_no, c] : read_csv(in, kSummaryHeader)) {
        SummaryRow s;
        s.dataset = c[0];
        s.method = c[1];
        s.latent = c[2];
        s.bits = cell_uint(c[3], line_no);
        s.rho = cell_double(c[4], line_no);
        s.alpha = cell_double(c[5], line_no);
        s.beta = cell_double(c[6], line_no);
        s.seeds = cell_uint(c[7], line_no);
        s.val_precision = cell_double(c[8], line_no);
        s.test_precision = cell_double(c[9], line_no);
        s.test_precision_sd = cell_double(c[10], line_no);
        s.test_map = cell_double(c[11], line_no);
        rows.push_back(s);
    }
    return rows;
}

std::vector<SummaryRow> cmd_sweep(const RunConfig& config, std::ostream& msg) {
    (void)config.resolved_train();
    const LabeledDataset data = load_dataset(config);
    if (!data.has_labels()) throw InvalidInput("sweeps need a labelled dataset");
    const auto plan = plan_sweep(config);
    const std::string dataset = dataset_label(config);
    const std::size_t bits = config.train.bits;

    std::filesystem::create_directories(config.out);
    const auto runs_path = config.out / "runs.csv";
    const auto timing_path = config.out / "runs_timing.csv";
    std::vector<RunRecord> previous;
    if (std::filesystem::exists(runs_path)) {
        std::ifstream in(runs_path);
        previous = read_runs(in);
    }
    std::set<std::string> completed;
    for (const auto& r : previous)
        completed.insert(run_id(r.dataset, r.method, r.bits, r.rho, r.alpha, r.beta, r.seed));

    std::vector<RunKey> todo;
    for (const auto& k : plan)
        if (!completed.count(run_id(dataset, k.method, bits, k.rho, k.alpha, k.beta, k.seed)))
            todo.push_back(k);
    msg << "sweep: " << plan.size() << " planned runs, " << plan.size() - todo.size()
        << " already complete\n";

    config.write_resolved();
    const bool fresh = previous.empty();
    auto runs_out = open_out(runs_path, fresh ? std::ios::out | std::ios::trunc : std::ios::app);
    const bool timing_fresh = !std::filesystem::exists(timing_path) || fresh;
    auto timing_out =
        open_out(timing_path, timing_fresh ? std::ios::out | std::ios::trunc : std::ios::app);
    if (fresh) write_runs_header(runs_out);
    if (timing_fresh) timing_out << kTimingHeader << '\n';
    runs_out.flush();

    const auto fresh_runs = execute_runs(data, config, todo, [&](std::size_t, const RunRecord& r) {
        write_run_row(runs_out, r);
        runs_out.flush();
        timing_out << r.dataset << ',' << r.method << ',' << r.bits << ',' << fmt(r.rho) << ','
                   << fmt(r.alpha) << ',' << fmt(r.beta) << ',' << r.seed << ','
                   << fmt(r.seconds) << '\n';
        timing_out.flush();
        msg << "  " << r.method << " rho=" << fmt(r.rho) << " alpha=" << fmt(r.alpha)
            << " beta=" << fmt(r.beta) << " seed=" << r.seed
            << " test p@k=" << fmt(r.test_precision) << std::endl;
    });

    // The summary covers every planned run, old and new.
    std::set<std::string> planned;
    for (const auto& k : plan)
        planned.insert(run_id(dataset, k.method, bits, k.rho, k.alpha, k.beta, k.seed));
    std::map<std::string, RunRecord> by_id;
    for (const auto& r : previous) by_id[run_id(r.dataset, r.method, r.bits, r.rho, r.alpha, r.beta, r.seed)] = r;
    for (const auto& r : fresh_runs) by_id[run_id(r.dataset, r.method, r.bits, r.rho, r.alpha, r.beta, r.seed)] = r;
    std::vector<RunRecord> all;
    for (const auto& k : plan)
        all.push_back(by_id.at(run_id(dataset, k.method, bits, k.rho, k.alpha, k.beta, k.seed)));
    const auto summary = summarize(all);
    auto sum_out = open_out(config.out / "summary.csv");
    write_summary(sum_out, summary);
    msg << "sweep: wrote " << summary.size() << " summary rows -> "
        << (config.out / "summary.csv").string() << '\n';
    return summary;
}

std::map<std::pair<std::string, std::size_t>, ScoreTable> score_tables(
    const std::vector<SummaryRow>& rows) {
    std::map<std::pair<std::string, std::size_t>, std::vector<const SummaryRow*>> groups;
    for (const auto& r : rows) groups[{r.dataset, r.bits}].push_back(&r);

    std::map<std::pair<std::string, std::size_t>, ScoreTable> tables;
    for (const auto& [key, members] : groups) {
        std::vector<std::string> methods;
        std::vector<double> rhos;
        for (const auto* r : members) {
            if (std::find(methods.begin(), methods.end(), r->method) == methods.end())
                methods.push_back(r->method);
            if (std::find(rhos.begin(), rhos.end(), r->rho) == rhos.end()) rhos.push_back(r->rho);
        }
        std::sort(rhos.begin(), rhos.end(), std::greater<>());
        ScoreTable t;
        t.methods = methods;
        std::vector<double> values;
        for (double rho : rhos) {
            std::vector<double> row(methods.size(), std::nan(""));
            for (const auto* r : members)
                if (r->rho == rho) {
                    const auto j = static_cast<std::size_t>(
                        std::find(methods.begin(), methods.end(), r->method) - methods.begin());
                    row[j] = r->test_precision;
                }
            if (std::any_of(row.begin(), row.end(), [](double v) { return std::isnan(v); }))
                continue;
            t.blocks.push_back(fmt(rho));
            values.insert(values.end(), row.begin(), row.end());
        }
        t.scores = Matrix(t.blocks.size(), methods.size(), std::move(values));
        tables.emplace(key, std::move(t));
    }
    return tables;
}

std::vector<StatsRow> significance(const std::string& dataset, std::size_t bits,
                                   const ScoreTable& table, double level,
                                   const std::string& reference) {
    if (table.num_methods() < 2 || table.num_blocks() < 2)
        throw InvalidInput("dataset '" + dataset + "' at " + std::to_string(bits) +
                           " bits: need at least 2 methods at 2 supervision levels, got " +
                           std::to_string(table.num_methods()) + " methods at " +
                           std::to_string(table.num_blocks()) + " complete levels");
    std::vector<StatsRow> rows;
    const auto f = friedman(table);
    rows.push_back({dataset, bits, "friedman", "all", f.statistic, f.p_value, table.num_blocks(),
                    table.num_methods()});
    if (!(f.p_value < level)) return rows;

    const auto n = nemenyi(table);
    const auto ref = std::find(table.methods.begin(), table.methods.end(), reference);
    for (std::size_t i = 0; i < table.num_methods(); ++i) {
        for (std::size_t j = i + 1; j < table.num_methods(); ++j) {
            std::size_t a = i, b = j;
            if (ref != table.methods.end()) {
                const auto r = static_cast<std::size_t>(ref - table.methods.begin());
                if (i != r && j != r) continue;
                if (j == r) std::swap(a, b);
            }
            rows.push_back({dataset, bits, "nemenyi",
                            table.methods[a] + "-vs-" + table.methods[b], n.q(a, b),
                            n.p_values(a, b), table.num_blocks(), table.num_methods()});
        }
    }
    return rows;
}

void write_stats(std::ostream& out, const std::vector<StatsRow>& rows) {
    out << kStatsHeader << '\n';
    for (const auto& r : rows)
        out << r.dataset << ',' << r.bits << ',' << r.test << ',' << r.comparison << ','
            << fmt(r.statistic) << ',' << fmt(r.p_value) << ',' << r.blocks << ',' << r.methods
            << '\n';
}

std::vector<StatsRow> cmd_stats(const RunConfig& config, const std::filesystem::path& input,
                                std::ostream& msg) {
    const std::string header = first_data_line(input);
    std::map<std::pair<std::string, std::size_t>, ScoreTable> tables;
    if (header == kRunsHeader) {
        auto in = open_in(input);
        tables = score_tables(summarize(read_runs(in)));
    } else if (header == kSummaryHeader) {
        auto in = open_in(input);
        tables = score_tables(read_summary(in));
    } else if (header.starts_with("block,")) {
        auto in = open_in(input);
        tables.emplace(std::make_pair(config.dataset_name.empty() ? input.stem().string()
                                                                  : config.dataset_name,
                                      config.train.bits),
                       read_score_table(in));
    } else {
        throw InvalidInput(input.string() + ": not a runs, summary or score-table CSV");
    }
    if (tables.empty()) throw InvalidInput(input.string() + ": no rows");

    std::vector<StatsRow> rows;
    for (const auto& [key, table] : tables) {
        const auto part = significance(key.first, key.second, table, config.stats_level);
        rows.insert(rows.end(), part.begin(), part.end());
        auto table_out = open_out(config.out / ("scores_" + key.first + "_b" +
                                                std::to_string(key.second) + ".csv"));
        write_score_table(table_out, table);
    }
    auto out = open_out(config.out / "stats.csv");
    write_stats(out, rows);
    config.write_resolved();
    for (const auto& r : rows)
        msg << r.dataset << " " << r.bits << " bits " << r.test << " " << r.comparison
            << ": p = " << fmt(r.p_value) << '\n';
    return rows;
}

}  // namespace sshash
