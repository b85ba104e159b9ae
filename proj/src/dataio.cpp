#include "sshash/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>

#include "sshash/latent.hpp"

namespace sshash {

std::vector<std::size_t> LabeledDataset::rows_in(Split s) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) rows.push_back(i);
    return rows;
}

Matrix LabeledDataset::label_matrix(std::span<const std::size_t> rows) const {
    if (!has_labels()) throw InvalidInput("dataset has no labels");
    Matrix y(rows.size(), static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (int c : labels.at(rows[i])) y(i, static_cast<std::size_t>(c)) = 1.0;
    return y;
}

void LabeledDataset::validate() const {
    if (!features.all_finite()) throw InvalidInput("dataset: non-finite feature value");
    if (split.size() != size() || supervised.size() != size())
        throw InvalidInput("dataset: split/supervision arrays do not match row count");
    for (std::size_t i = 0; i < size(); ++i)
        if (supervised[i] && split[i] != Split::train)
            throw InvalidInput("dataset: supervised flag on a non-train row");
    if (!has_labels()) return;
    if (labels.size() != size()) throw InvalidInput("dataset: label count does not match row count");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto& l = labels[i];
        if (l.empty() || (!multi_label && l.size() != 1))
            throw InvalidInput("dataset: row " + std::to_string(i) + " has " +
                               std::to_string(l.size()) + " labels");
        for (int c : l)
            if (c < 0 || c >= num_classes)
                throw InvalidInput("dataset: row " + std::to_string(i) + " label " +
                                   std::to_string(c) + " outside [0, " +
                                   std::to_string(num_classes) + ")");
        if (!std::is_sorted(l.begin(), l.end()) ||
            std::adjacent_find(l.begin(), l.end()) != l.end())
            throw InvalidInput("dataset: row " + std::to_string(i) + " labels not sorted/unique");
    }
}

namespace {

class LineReader {
public:
    LineReader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

    // Next non-blank, non-comment line; trailing '#' comments are stripped.
    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InvalidInput(what_ + " line " + std::to_string(line_no_) + ": " + msg);
    }

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::istream& in_;
    std::string what_;
    std::size_t line_no_ = 0;
};

std::vector<std::string_view> tokens(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse(std::string_view tok, T& v) {
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return ec == std::errc{} && p == tok.data() + tok.size();
}

void append_number(std::string& s, double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    s.append(buf, p);
}

LabelSet parse_label_list(std::string_view tok, LineReader& reader, int num_classes,
                          bool multi_label) {
    LabelSet set;
    std::size_t start = 0;
    while (start <= tok.size()) {
        const std::size_t comma = std::min(tok.find(',', start), tok.size());
        int c = 0;
        if (!parse(tok.substr(start, comma - start), c))
            reader.fail("bad label '" + std::string(tok) + "'");
        if (c < 0 || c >= num_classes)
            reader.fail("label " + std::to_string(c) + " outside [0, " +
                        std::to_string(num_classes) + ")");
        set.push_back(c);
        start = comma + 1;
    }
    if (!multi_label && set.size() != 1) reader.fail("multiple labels outside multi-label mode");
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

void init_tags(LabeledDataset& d) {
    d.split.assign(d.size(), Split::train);
    d.supervised.assign(d.size(), 0);
}

std::ifstream open_input(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw InvalidInput("cannot open '" + p.string() + "'");
    return in;
}

}  // namespace

LabeledDataset load_dense(std::istream& features, std::istream* labels) {
    LineReader reader(features, "dense features");
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    while (reader.next(line)) {
        const auto toks = tokens(line);
        if (rows == 0) cols = toks.size();
        if (toks.size() != cols)
            reader.fail("expected " + std::to_string(cols) + " values, found " +
                        std::to_string(toks.size()));
        for (auto t : toks) {
            double v = 0.0;
            if (!parse(t, v) || !std::isfinite(v)) reader.fail("bad value '" + std::string(t) + "'");
            values.push_back(v);
        }
        ++rows;
    }
    LabeledDataset d;
    d.features = Matrix(rows, cols, std::move(values));
    if (labels) {
        LineReader lr(*labels, "labels");
        while (lr.next(line)) {
            const auto toks = tokens(line);
            if (toks.size() != 1) lr.fail("expected one class id");
            int c = 0;
            if (!parse(toks[0], c) || c < 0) lr.fail("bad class id '" + std::string(toks[0]) + "'");
            d.labels.push_back({c});
            d.num_classes = std::max(d.num_classes, c + 1);
        }
        if (d.labels.size() != rows)
            throw InvalidInput("labels: " + std::to_string(d.labels.size()) + " labels for " +
                               std::to_string(rows) + " feature rows");
    }
    init_tags(d);
    return d;
}

LabeledDataset load_dense(const std::filesystem::path& features,
                          const std::optional<std::filesystem::path>& labels) {
    auto fin = open_input(features);
    if (!labels) return load_dense(fin, nullptr);
    auto lin = open_input(*labels);
    return load_dense(fin, &lin);
}

LabeledDataset load_sparse(std::istream& in, bool multi_label, bool normalize) {
    LineReader reader(in, "sparse features");
    std::string line;
    if (!reader.next(line)) throw InvalidInput("sparse features: missing 'n d K' header");
    const auto header = tokens(line);
    std::size_t n = 0, d = 0;
    int k = 0;
    if (header.size() != 3 || !parse(header[0], n) || !parse(header[1], d) || !parse(header[2], k) ||
        k < 1)
        reader.fail("header must be 'n d K'");

    LabeledDataset data;
    data.features = Matrix(n, d);
    data.num_classes = k;
    data.multi_label = multi_label;
    data.labels.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
        if (!reader.next(line))
            throw InvalidInput("sparse features: expected " + std::to_string(n) + " rows, found " +
                               std::to_string(r));
        const auto toks = tokens(line);
        data.labels.push_back(parse_label_list(toks[0], reader, k, multi_label));
        for (std::size_t t = 1; t < toks.size(); ++t) {
            const auto colon = toks[t].find(':');
            if (colon == std::string_view::npos)
                reader.fail("expected idx:val, found '" + std::string(toks[t]) + "'");
            std::size_t idx = 0;
            double v = 0.0;
            if (!parse(toks[t].substr(0, colon), idx))
                reader.fail("bad index in '" + std::string(toks[t]) + "'");
            if (!parse(toks[t].substr(colon + 1), v) || !std::isfinite(v))
                reader.fail("bad value in '" + std::string(toks[t]) + "'");
            if (idx >= d)
                reader.fail("index " + std::to_string(idx) + " outside declared dimension " +
                            std::to_string(d));
            data.features(r, idx) = v;
        }
    }
    if (reader.next(line)) reader.fail("more rows than declared in the header");
    if (normalize) max_normalize_rows(data.features);
    init_tags(data);
    return data;
}

LabeledDataset load_sparse(const std::filesystem::path& path, bool multi_label, bool normalize) {
    auto in = open_input(path);
    return load_sparse(in, multi_label, normalize);
}

void write_dense(std::ostream& out, const Matrix& features) {
    std::string line;
    for (std::size_t r = 0; r < features.rows(); ++r) {
        line.clear();
        const auto row = features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) line.push_back(' ');
            append_number(line, row[c]);
        }
        line.push_back('\n');
        out << line;
    }
}

void write_labels(std::ostream& out, std::span<const LabelSet> labels) {
    for (const auto& l : labels) {
        if (l.size() != 1) throw InvalidInput("write_labels: dense label files hold one class per row");
        out << l.front() << '\n';
    }
}

void write_sparse(std::ostream& out, const LabeledDataset& data) {
    if (!data.has_labels()) throw InvalidInput("write_sparse: sparse format requires labels");
    out << data.size() << ' ' << data.dim() << ' ' << data.num_classes << '\n';
    std::string line;
    for (std::size_t r = 0; r < data.size(); ++r) {
        line.clear();
        const auto& l = data.labels[r];
        for (std::size_t i = 0; i < l.size(); ++i) {
            if (i) line.push_back(',');
            line += std::to_string(l[i]);
        }
        const auto row = data.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] == 0.0) continue;
            line.push_back(' ');
            line += std::to_string(c);
            line.push_back(':');
            append_number(line, row[c]);
        }
        line.push_back('\n');
        out << line;
    }
}

void max_normalize_rows(Matrix& features) {
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto row = features.row(r);
        double mx = 0.0;
        for (double v : row) {
            if (v < 0.0)
                throw InvalidInput("max_normalize_rows: negative value in row " + std::to_string(r));
            mx = std::max(mx, v);
        }
        if (mx > 0.0)
            for (double& v : row) v /= mx;
    }
}

void MinMaxScaler::apply(Matrix& features) const {
    if (features.cols() != low.size()) throw InvalidInput("MinMaxScaler: column count mismatch");
    for (std::size_t r = 0; r < features.rows(); ++r) {
        auto row = features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double range = high[c] - low[c];
            row[c] = range > 0.0 ? std::clamp((row[c] - low[c]) / range, 0.0, 1.0) : 0.0;
        }
    }
}

MinMaxScaler fit_minmax(const Matrix& features, std::span<const std::size_t> rows) {
    if (rows.empty()) throw InvalidInput("fit_minmax: no rows to fit on");
    MinMaxScaler s;
    s.low.assign(features.cols(), 0.0);
    s.high.assign(features.cols(), 0.0);
    for (std::size_t c = 0; c < features.cols(); ++c) {
        s.low[c] = s.high[c] = features(rows[0], c);
        for (auto r : rows) {
            s.low[c] = std::min(s.low[c], features(r, c));
            s.high[c] = std::max(s.high[c], features(r, c));
        }
    }
    return s;
}

void split_counts(LabeledDataset& data, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                  std::uint64_t seed) {
    const std::size_t n = data.size();
    if (n_train + n_val + n_test > n)
        throw InvalidInput("split: requested " + std::to_string(n_train + n_val + n_test) +
                           " rows from " + std::to_string(n));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    data.split.assign(n, Split::unused);
    data.supervised.assign(n, 0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n_val; ++i) data.split[order[pos++]] = Split::val;
    for (std::size_t i = 0; i < n_test; ++i) data.split[order[pos++]] = Split::test;
    for (std::size_t i = 0; i < n_train; ++i) data.split[order[pos++]] = Split::train;
}

void split(LabeledDataset& data, SplitFractions f, std::uint64_t seed) {
    if (f.train < 0.0 || f.val < 0.0 || f.test < 0.0 || f.train + f.val + f.test > 1.0 + 1e-9)
        throw InvalidInput("split: fractions must be nonnegative and sum to at most 1");
    const auto n = static_cast<double>(data.size());
    const auto count = [n](double frac) {
        return static_cast<std::size_t>(std::floor(frac * n + 1e-9));
    };
    const std::size_t n_val = count(f.val);
    const std::size_t n_test = count(f.test);
    std::size_t n_train = count(f.train);
    if (std::abs(f.train + f.val + f.test - 1.0) <= 1e-9) n_train = data.size() - n_val - n_test;
    split_counts(data, n_train, n_val, n_test, seed);
}

LabeledDataset make_synthetic(const SyntheticSpec& spec) {
    if (spec.classes < 2) throw InvalidInput("synthetic: need at least 2 classes");
    if (!(spec.spread >= 0.0)) throw InvalidInput("synthetic: spread must be nonnegative");
    if (spec.dim == 0 || spec.per_class == 0) throw InvalidInput("synthetic: empty shape");
    const auto c_count = static_cast<std::size_t>(spec.classes);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    Matrix means(c_count, spec.dim);
    for (std::size_t c = 0; c < c_count; ++c) {
        auto row = means.row(c);
        double norm = 0.0;
        do {
            norm = 0.0;
            for (double& v : row) {
                v = normal(rng);
                norm += v * v;
            }
        } while (norm == 0.0);
        norm = std::sqrt(norm);
        for (double& v : row) v /= norm;
    }

    // Per-coordinate deviation spread / sqrt(d): the expected cluster radius is `spread`.
    const double sigma = spec.spread / std::sqrt(static_cast<double>(spec.dim));
    LabeledDataset d;
    const std::size_t n = c_count * spec.per_class;
    d.features = Matrix(n, spec.dim);
    d.num_classes = spec.classes;
    d.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % c_count;
        d.labels[i] = {static_cast<int>(c)};
        auto row = d.features.row(i);
        const auto mean = means.row(c);
        for (std::size_t j = 0; j < spec.dim; ++j)
            row[j] = sigmoid(mean[j] + sigma * normal(rng));
    }
    init_tags(d);
    return d;
}

std::uint64_t digest(const LabeledDataset& data) {
    std::uint64_t h = 14695981039346656037ULL;
    const auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    const std::uint64_t shape[2] = {data.size(), data.dim()};
    mix(shape, sizeof shape);
    mix(data.features.data(), data.features.size() * sizeof(double));
    for (const auto& l : data.labels) {
        const std::uint64_t len = l.size();
        mix(&len, sizeof len);
        mix(l.data(), l.size() * sizeof(int));
    }
    mix(data.split.data(), data.split.size());
    mix(data.supervised.data(), data.supervised.size());
    return h;
}

}  // namespace sshash
