#include "sshash/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sshash {

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

void check_table_shape(const ScoreTable& t) { t.validate(); }

}  // namespace

void ScoreTable::validate() const {
    if (methods.size() < 2) throw InvalidInput("score table needs at least two methods");
    if (blocks.size() < 2) throw InvalidInput("score table needs at least two blocks");
    if (scores.rows() != blocks.size() || scores.cols() != methods.size())
        throw InvalidInput("score table is " + shape_string(scores) + " but lists " +
                           std::to_string(blocks.size()) + " blocks and " +
                           std::to_string(methods.size()) + " methods");
    if (!scores.all_finite()) throw InvalidInput("score table has missing or non-finite entries");
}

void write_score_table(std::ostream& out, const ScoreTable& table) {
    table.validate();
    out << "block";
    for (const auto& m : table.methods) out << ',' << m;
    out << '\n';
    for (std::size_t b = 0; b < table.num_blocks(); ++b) {
        out << table.blocks[b];
        for (std::size_t j = 0; j < table.num_methods(); ++j)
            out << ',' << format_double(table.scores(b, j));
        out << '\n';
    }
}

ScoreTable read_score_table(std::istream& in) {
    ScoreTable table;
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split_csv(line);
        if (table.methods.empty()) {
            if (cells.size() < 2 || cells[0] != "block")
                throw InvalidInput("line " + std::to_string(line_no) +
                                   ": expected header 'block,<method>,...'");
            table.methods.assign(cells.begin() + 1, cells.end());
            continue;
        }
        if (cells.size() != table.methods.size() + 1)
            throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(table.methods.size() + 1) + " cells, got " +
                               std::to_string(cells.size()));
        table.blocks.push_back(cells[0]);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            double v = 0.0;
            const auto& c = cells[j];
            const auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc{} || res.ptr != c.data() + c.size())
                throw InvalidInput("line " + std::to_string(line_no) + ": bad score '" + c + "'");
            values.push_back(v);
        }
    }
    table.scores = Matrix(table.blocks.size(), table.methods.size(), std::move(values));
    table.validate();
    return table;
}

Matrix block_ranks(const ScoreTable& table) {
    check_table_shape(table);
    const std::size_t n = table.num_blocks();
    const std::size_t k = table.num_methods();
    Matrix ranks(n, k);
    std::vector<std::size_t> order(k);
    for (std::size_t b = 0; b < n; ++b) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return table.scores(b, i) > table.scores(b, j);
        });
        for (std::size_t start = 0; start < k;) {
            std::size_t end = start + 1;
            while (end < k && table.scores(b, order[end]) == table.scores(b, order[start])) ++end;
            const double rank = 0.5 * static_cast<double>(start + 1 + end);
            for (std::size_t i = start; i < end; ++i) ranks(b, order[i]) = rank;
            start = end;
        }
    }
    return ranks;
}

namespace {

std::vector<double> mean_ranks_of(const Matrix& ranks) {
    std::vector<double> mean(ranks.cols(), 0.0);
    for (std::size_t b = 0; b < ranks.rows(); ++b)
        for (std::size_t j = 0; j < ranks.cols(); ++j) mean[j] += ranks(b, j);
    for (double& m : mean) m /= static_cast<double>(ranks.rows());
    return mean;
}

}  // namespace

FriedmanResult friedman(const ScoreTable& table) {
    const Matrix ranks = block_ranks(table);
    const auto n = static_cast<double>(table.num_blocks());
    const auto k = static_cast<double>(table.num_methods());
    FriedmanResult r;
    r.degrees_of_freedom = static_cast<int>(table.num_methods()) - 1;
    r.mean_ranks = mean_ranks_of(ranks);

    double spread = 0.0;
    for (double m : r.mean_ranks) spread += (m - 0.5 * (k + 1.0)) * (m - 0.5 * (k + 1.0));
    const double raw = 12.0 * n / (k * (k + 1.0)) * spread;

    // Tie correction: 1 - sum(t^3 - t) / (n (k^3 - k)) over tie groups.
    double ties = 0.0;
    for (std::size_t b = 0; b < table.num_blocks(); ++b) {
        std::vector<double> row(ranks.row(b).begin(), ranks.row(b).end());
        std::sort(row.begin(), row.end());
        for (std::size_t i = 0; i < row.size();) {
            std::size_t j = i + 1;
            while (j < row.size() && row[j] == row[i]) ++j;
            const auto t = static_cast<double>(j - i);
            ties += t * t * t - t;
            i = j;
        }
    }
    const double correction = 1.0 - ties / (n * (k * k * k - k));
    if (correction <= 1e-12 || raw == 0.0) {
        r.statistic = 0.0;
        r.p_value = 1.0;
        return r;
    }
    r.statistic = raw / correction;
    r.p_value = chi_square_sf(r.statistic, k - 1.0);
    return r;
}

NemenyiResult nemenyi(const ScoreTable& table) {
    const Matrix ranks = block_ranks(table);
    const std::size_t k = table.num_methods();
    const auto n = static_cast<double>(table.num_blocks());
    const auto kd = static_cast<double>(k);
    NemenyiResult r;
    r.mean_ranks = mean_ranks_of(ranks);
    r.q = Matrix(k, k);
    r.p_values = Matrix(k, k, 1.0);
    const double scale = std::sqrt(kd * (kd + 1.0) / (6.0 * n));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double q = std::abs(r.mean_ranks[i] - r.mean_ranks[j]) / scale;
            const double p = studentized_range_sf(q * std::numbers::sqrt2, static_cast<int>(k));
            r.q(i, j) = r.q(j, i) = q;
            r.p_values(i, j) = r.p_values(j, i) = p;
        }
    }
    return r;
}

namespace {

constexpr double kGammaEps = 1e-16;
constexpr int kGammaMaxIter = 10000;

// Series for P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < kGammaMaxIter; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * kGammaEps) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < kGammaMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < kGammaEps) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

void check_gamma_args(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a))
        throw InvalidInput("incomplete gamma needs a > 0 and x >= 0");
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return x < a + 1.0 ? gamma_p_series(a, x) : 1.0 - gamma_q_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    check_gamma_args(a, x);
    if (x == 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    return x < a + 1.0 ? 1.0 - gamma_p_series(a, x) : gamma_q_fraction(a, x);
}

double chi_square_sf(double x, double df) {
    if (!(df > 0.0)) throw InvalidInput("chi-square needs positive degrees of freedom");
    if (x <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol) {
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace

double normal_range_sf(double w, int k) {
    if (k < 2) throw InvalidInput("range distribution needs at least two samples");
    if (std::isnan(w)) throw InvalidInput("range tail of NaN");
    if (w <= 0.0) return 1.0;
    if (std::isinf(w)) return 0.0;
    // P(R > w) = k * int phi(z) [Phi(z)^(k-1) - (Phi(z) - Phi(z - w))^(k-1)] dz,
    // with the bracket expanded as d * sum a^i (a - d)^(k-2-i) to avoid cancellation.
    const int n = k - 1;
    const auto integrand = [w, n](double z) {
        const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
        const double a = normal_cdf(z);
        const double d = normal_cdf(z - w);
        const double rest = a - d;
        double sum = 0.0;
        double ai = 1.0;
        for (int i = 0; i < n; ++i) {
            sum += ai * std::pow(rest, n - 1 - i);
            ai *= a;
        }
        return phi * d * sum;
    };
    // The integrand vanishes outside roughly [-9, w + 9]; split at the peak region.
    const double lo = -9.0;
    const double hi = w + 9.0;
    const double mid = 0.5 * w;
    const double value = adaptive_simpson(integrand, lo, mid, 1e-13) +
                         adaptive_simpson(integrand, mid, hi, 1e-13);
    return std::clamp(static_cast<double>(k) * value, 0.0, 1.0);
}

double studentized_range_sf(double q, int k) { return normal_range_sf(q, k); }

}  // namespace sshash
