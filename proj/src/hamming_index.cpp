#include "sshash/hamming_index.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sshash/kernels.hpp"
#include "sshash/matrix.hpp"

namespace sshash {

bool labels_overlap(const LabelSet& a, const LabelSet& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) return true;
        if (*ia < *ib)
            ++ia;
        else
            ++ib;
    }
    return false;
}

HashIndex::HashIndex(std::size_t bits, std::span<const BitCode> codes,
                     std::vector<std::uint64_t> ids, std::vector<LabelSet> labels)
    : bits_(bits), words_(BitCode::words_for(bits)), ids_(std::move(ids)),
      labels_(std::move(labels)) {
    if (bits == 0) throw InvalidInput("HashIndex: zero-bit codes");
    if (codes.size() != ids_.size())
        throw InvalidInput("HashIndex: " + std::to_string(codes.size()) + " codes but " +
                           std::to_string(ids_.size()) + " ids");
    if (!labels_.empty() && labels_.size() != ids_.size())
        throw InvalidInput("HashIndex: label array length differs from code count");
    packed_.reserve(codes.size() * words_);
    for (const auto& c : codes) {
        if (c.bits() != bits)
            throw InvalidInput("HashIndex: code of " + std::to_string(c.bits()) +
                               " bits in a " + std::to_string(bits) + "-bit index");
        packed_.insert(packed_.end(), c.words().begin(), c.words().end());
    }
}

BitCode HashIndex::code(std::size_t i) const {
    if (i >= size()) throw InvalidInput("HashIndex::code: index out of range");
    BitCode c(bits_);
    for (std::size_t b = 0; b < bits_; ++b)
        if ((packed_[i * words_ + b / 64] >> (b % 64)) & 1U) c.set(b);
    return c;
}

namespace {

void check_query(const BitCode& q, const HashIndex& index, std::size_t k) {
    if (index.empty()) throw InvalidState("top_k: empty index");
    if (k == 0) throw InvalidInput("top_k: k must be at least 1");
    if (q.bits() != index.bits())
        throw InvalidInput("top_k: query has " + std::to_string(q.bits()) +
                           " bits, index has " + std::to_string(index.bits()));
}

// Selects the k smallest (distance, id) entries from a full distance row.
Ranking select(std::span<const std::uint32_t> dist, const HashIndex& index, std::size_t k,
               std::uint64_t query_id, const LabelSet* query_labels) {
    Ranking r;
    r.query_id = query_id;
    r.truncated = k > index.size();
    const std::size_t take = std::min(k, index.size());

    std::vector<std::size_t> histogram(index.bits() + 2, 0);
    for (auto d : dist) ++histogram[d];
    std::uint32_t threshold = 0;
    for (std::size_t seen = 0; threshold <= index.bits(); ++threshold) {
        seen += histogram[threshold];
        if (seen >= take) break;
    }

    const auto ids = index.ids();
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < dist.size(); ++i)
        if (dist[i] <= threshold) candidates.push_back(i);
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        return dist[a] != dist[b] ? dist[a] < dist[b] : ids[a] < ids[b];
    });
    candidates.resize(take);

    r.neighbors.reserve(take);
    for (auto i : candidates) r.neighbors.push_back({ids[i], dist[i]});
    if (query_labels && index.has_labels()) {
        r.relevant.reserve(take);
        for (auto i : candidates)
            r.relevant.push_back(labels_overlap(*query_labels, index.labels(i)) ? 1 : 0);
    }
    return r;
}

}  // namespace

Ranking top_k(const BitCode& query, const HashIndex& index, std::size_t k, std::uint64_t query_id,
              const LabelSet* query_labels) {
    check_query(query, index, k);
    std::vector<std::uint32_t> dist(index.size());
    kernels::serial::hamming_scan(query.words(), index.packed(), index.words_per_code(), dist);
    return select(dist, index, k, query_id, query_labels);
}

std::vector<Ranking> top_k_batch(std::span<const BitCode> queries, const HashIndex& index,
                                 std::size_t k, std::span<const std::uint64_t> query_ids,
                                 std::span<const LabelSet> query_labels) {
    if (!query_ids.empty() && query_ids.size() != queries.size())
        throw InvalidInput("top_k_batch: query id count differs from query count");
    if (!query_labels.empty() && query_labels.size() != queries.size())
        throw InvalidInput("top_k_batch: query label count differs from query count");
    if (queries.empty()) return {};
    for (const auto& q : queries) check_query(q, index, k);

    const std::size_t words = index.words_per_code();
    std::vector<std::uint64_t> packed;
    packed.reserve(queries.size() * words);
    for (const auto& q : queries) packed.insert(packed.end(), q.words().begin(), q.words().end());
    std::vector<std::uint32_t> dist(queries.size() * index.size());
    kernels::hamming_scan(packed, index.packed(), words, dist);

    std::vector<Ranking> out;
    out.reserve(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const std::span<const std::uint32_t> row(dist.data() + q * index.size(), index.size());
        out.push_back(select(row, index, k, query_ids.empty() ? q : query_ids[q],
                             query_labels.empty() ? nullptr : &query_labels[q]));
    }
    return out;
}

namespace {
std::size_t usable(const Ranking& r, std::size_t k) {
    if (r.relevant.size() != r.neighbors.size())
        throw InvalidInput("ranking has no relevance flags");
    return std::min(k, r.relevant.size());
}
}  // namespace

double precision_at_k(const Ranking& ranking, std::size_t k) {
    const std::size_t n = usable(ranking, k);
    if (n == 0) return 0.0;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < n; ++j) hits += ranking.relevant[j];
    return static_cast<double>(hits) / static_cast<double>(n);
}

double map_at_k(const Ranking& ranking, std::size_t k) {
    const std::size_t n = usable(ranking, k);
    if (n == 0) return 0.0;
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        hits += ranking.relevant[j];
        sum += static_cast<double>(hits) / static_cast<double>(j + 1);
    }
    return sum / static_cast<double>(n);
}

double average_precision_at_k(const Ranking& ranking, std::size_t k) {
    const std::size_t n = usable(ranking, k);
    std::size_t hits = 0;
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!ranking.relevant[j]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(j + 1);
    }
    return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

EvalReport evaluate_codes(std::span<const BitCode> queries, std::span<const LabelSet> query_labels,
                          const HashIndex& index, std::size_t k,
                          std::span<const std::uint64_t> query_ids, MapDefinition map_definition) {
    if (query_labels.size() != queries.size())
        throw InvalidInput("evaluate: queries need ground-truth labels");
    if (!index.has_labels()) throw InvalidInput("evaluate: index has no labels");
    const auto rankings = top_k_batch(queries, index, k, query_ids, query_labels);
    EvalReport rep;
    rep.k = k;
    rep.per_query.reserve(rankings.size());
    for (const auto& r : rankings) {
        QueryMetrics q;
        q.query_id = r.query_id;
        q.precision = precision_at_k(r, k);
        q.map = map_definition == MapDefinition::mean_precision ? map_at_k(r, k)
                                                                : average_precision_at_k(r, k);
        q.retrieved = r.neighbors.size();
        q.truncated = r.truncated;
        rep.truncated = rep.truncated || r.truncated;
        rep.mean_precision += q.precision;
        rep.mean_map += q.map;
        rep.per_query.push_back(q);
    }
    if (!rep.per_query.empty()) {
        rep.mean_precision /= static_cast<double>(rep.per_query.size());
        rep.mean_map /= static_cast<double>(rep.per_query.size());
    }
    return rep;
}

void write_code_file(std::ostream& out, std::size_t bits, std::span<const std::uint64_t> ids,
                     std::span<const BitCode> codes) {
    if (ids.size() != codes.size()) throw InvalidInput("write_code_file: ids/codes length mismatch");
    out << bits << ' ' << codes.size() << '\n';
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i].bits() != bits) throw InvalidInput("write_code_file: inconsistent code length");
        out << ids[i] << ' ' << codes[i].to_hex() << '\n';
    }
}

namespace {

bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        return true;
    }
    return false;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line_no, const char* what) {
    T v{};
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size())
        throw InvalidInput("code file line " + std::to_string(line_no) + ": bad " + what + " '" +
                           std::string(tok) + "'");
    return v;
}

}  // namespace

CodeFile read_code_file(std::istream& in) {
    CodeFile f;
    std::string line;
    std::size_t line_no = 0;
    if (!next_content_line(in, line, line_no)) throw InvalidInput("code file: missing header");
    std::istringstream header(line);
    std::string bits_tok, n_tok, extra;
    if (!(header >> bits_tok >> n_tok) || (header >> extra))
        throw InvalidInput("code file line " + std::to_string(line_no) + ": header must be 'B n'");
    f.bits = parse_number<std::size_t>(bits_tok, line_no, "bit count");
    const auto n = parse_number<std::size_t>(n_tok, line_no, "row count");
    if (f.bits == 0) throw InvalidInput("code file: zero-bit codes");
    f.ids.reserve(n);
    f.codes.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!next_content_line(in, line, line_no))
            throw InvalidInput("code file: expected " + std::to_string(n) + " codes, found " +
                               std::to_string(i));
        std::istringstream row(line);
        std::string id_tok, hex;
        if (!(row >> id_tok >> hex) || (row >> extra))
            throw InvalidInput("code file line " + std::to_string(line_no) +
                               ": expected '<id> <hex>'");
        f.ids.push_back(parse_number<std::uint64_t>(id_tok, line_no, "id"));
        try {
            f.codes.push_back(BitCode::from_hex(hex, f.bits));
        } catch (const InvalidInput& e) {
            throw InvalidInput("code file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (next_content_line(in, line, line_no))
        throw InvalidInput("code file line " + std::to_string(line_no) + ": more rows than header");
    return f;
}

}  // namespace sshash
