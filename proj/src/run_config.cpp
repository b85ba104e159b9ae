#include "sshash/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace sshash {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view why) {
    throw UsageError("config key '" + std::string(key) + "': invalid value '" +
                     std::string(value) + "' (" + std::string(why) + ")");
}

double parse_double(std::string_view key, std::string_view v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(out))
        bad_value(key, v, "expected a number");
    return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
        bad_value(key, v, "expected a nonnegative integer");
    return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    bad_value(key, v, "expected true or false");
}

std::vector<std::string> split_list(std::string_view v) {
    std::vector<std::string> items;
    std::size_t start = 0;
    while (start <= v.size()) {
        const auto comma = v.find(',', start);
        const auto end = comma == std::string_view::npos ? v.size() : comma;
        auto item = trim(v.substr(start, end - start));
        if (!item.empty()) items.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return items;
}

std::string fmt(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T, class F>
std::string join(const std::vector<T>& items, F f) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? "," : "") + f(items[i]);
    return s;
}

std::vector<double> parse_grid(std::string_view key, std::string_view v) {
    // "decades:LO:HI" or a comma list.
    if (v.starts_with("decades:")) {
        const auto rest = v.substr(8);
        const auto colon = rest.find(':');
        if (colon == std::string_view::npos) bad_value(key, v, "expected decades:LO:HI");
        const auto lo = parse_double(key, rest.substr(0, colon));
        const auto hi = parse_double(key, rest.substr(colon + 1));
        if (lo != std::floor(lo) || hi != std::floor(hi) || lo > hi)
            bad_value(key, v, "decade bounds must be ordered integers");
        return decade_grid(static_cast<int>(lo), static_cast<int>(hi));
    }
    std::vector<double> out;
    for (const auto& item : split_list(v)) {
        const double x = parse_double(key, item);
        if (x < 0.0) bad_value(key, v, "weights must be nonnegative");
        out.push_back(x);
    }
    return out;
}

std::vector<std::size_t> parse_sizes(std::string_view key, std::string_view v) {
    std::vector<std::size_t> out;
    for (const auto& item : split_list(v)) {
        const auto x = parse_uint(key, item);
        if (x == 0) bad_value(key, v, "layer widths must be positive");
        out.push_back(static_cast<std::size_t>(x));
    }
    return out;
}

struct KeyDef {
    std::string name;
    std::function<void(RunConfig&, std::string_view)> set;
    std::function<std::string(const RunConfig&)> get;
};

const std::vector<KeyDef>& key_table() {
    using C = RunConfig;
    using V = std::string_view;
    static const std::vector<KeyDef> table = {
        {"dataset", [](C& c, V v) { c.dataset = v; }, [](const C& c) { return c.dataset; }},
        {"dataset_name", [](C& c, V v) { c.dataset_name = v; },
         [](const C& c) { return c.dataset_name; }},
        {"format",
         [](C& c, V v) {
             if (v != "dense" && v != "sparse") bad_value("format", v, "expected dense or sparse");
             c.format = v;
         },
         [](const C& c) { return c.format; }},
        {"labels", [](C& c, V v) { c.labels = v; }, [](const C& c) { return c.labels; }},
        {"multi_label", [](C& c, V v) { c.multi_label = parse_bool("multi_label", v); },
         [](const C& c) { return std::string(c.multi_label ? "true" : "false"); }},
        {"normalize", [](C& c, V v) { c.normalize = parse_bool("normalize", v); },
         [](const C& c) { return std::string(c.normalize ? "true" : "false"); }},
        {"scale",
         [](C& c, V v) {
             if (v == "auto") c.scaling = FeatureScaling::automatic;
             else if (v == "minmax") c.scaling = FeatureScaling::minmax;
             else if (v == "none") c.scaling = FeatureScaling::none;
             else bad_value("scale", v, "expected auto, minmax or none");
         },
         [](const C& c) {
             switch (c.scaling) {
                 case FeatureScaling::minmax: return std::string("minmax");
                 case FeatureScaling::none: return std::string("none");
                 default: return std::string("auto");
             }
         }},
        {"synthetic_classes",
         [](C& c, V v) {
             const auto x = parse_uint("synthetic_classes", v);
             if (x < 2) bad_value("synthetic_classes", v, "need at least 2 classes");
             c.synthetic.classes = static_cast<int>(x);
         },
         [](const C& c) { return std::to_string(c.synthetic.classes); }},
        {"synthetic_per_class",
         [](C& c, V v) { c.synthetic.per_class = parse_uint("synthetic_per_class", v); },
         [](const C& c) { return std::to_string(c.synthetic.per_class); }},
        {"synthetic_dim", [](C& c, V v) { c.synthetic.dim = parse_uint("synthetic_dim", v); },
         [](const C& c) { return std::to_string(c.synthetic.dim); }},
        {"synthetic_spread",
         [](C& c, V v) {
             const double x = parse_double("synthetic_spread", v);
             if (!(x > 0.0)) bad_value("synthetic_spread", v, "must be positive");
             c.synthetic.spread = x;
         },
         [](const C& c) { return fmt(c.synthetic.spread); }},
        {"synthetic_seed", [](C& c, V v) { c.synthetic.seed = parse_uint("synthetic_seed", v); },
         [](const C& c) { return std::to_string(c.synthetic.seed); }},
        {"train_fraction", [](C& c, V v) { c.fractions.train = parse_double("train_fraction", v); },
         [](const C& c) { return fmt(c.fractions.train); }},
        {"val_fraction", [](C& c, V v) { c.fractions.val = parse_double("val_fraction", v); },
         [](const C& c) { return fmt(c.fractions.val); }},
        {"test_fraction", [](C& c, V v) { c.fractions.test = parse_double("test_fraction", v); },
         [](const C& c) { return fmt(c.fractions.test); }},
        {"train_count", [](C& c, V v) { c.train_count = parse_uint("train_count", v); },
         [](const C& c) { return std::to_string(c.train_count); }},
        {"val_count", [](C& c, V v) { c.val_count = parse_uint("val_count", v); },
         [](const C& c) { return std::to_string(c.val_count); }},
        {"test_count", [](C& c, V v) { c.test_count = parse_uint("test_count", v); },
         [](const C& c) { return std::to_string(c.test_count); }},
        {"data_seed", [](C& c, V v) { c.data_seed = parse_uint("data_seed", v); },
         [](const C& c) { return std::to_string(c.data_seed); }},

        {"mode",
         [](C& c, V v) {
             if (is_method_name(v)) {
                 apply_method(c.train, v);
                 return;
             }
             try {
                 c.train.mode = parse_supervision_mode(v);
             } catch (const InvalidInput&) {
                 bad_value("mode", v, "expected ssb-vae, psh-gs, vdsh-s, unsup, pointwise, "
                                      "pairwise-gt or selfsup");
             }
         },
         [](const C& c) { return std::string(to_string(c.train.mode)); }},
        {"latent",
         [](C& c, V v) {
             try {
                 c.train.latent = parse_latent_kind(v);
             } catch (const InvalidInput&) {
                 bad_value("latent", v, "expected bernoulli or gaussian");
             }
         },
         [](const C& c) { return std::string(to_string(c.train.latent)); }},
        {"reconstruction",
         [](C& c, V v) {
             try {
                 c.train.reconstruction = parse_reconstruction_kind(v);
             } catch (const InvalidInput&) {
                 bad_value("reconstruction", v, "expected sigmoid or gaussian");
             }
         },
         [](const C& c) { return std::string(to_string(c.train.reconstruction)); }},
        {"bits", [](C& c, V v) { c.train.bits = parse_uint("bits", v); },
         [](const C& c) { return std::to_string(c.train.bits); }},
        {"epochs", [](C& c, V v) { c.train.epochs = parse_uint("epochs", v); },
         [](const C& c) { return std::to_string(c.train.epochs); }},
        {"batch_size", [](C& c, V v) { c.train.batch_size = parse_uint("batch_size", v); },
         [](const C& c) { return std::to_string(c.train.batch_size); }},
        {"hidden", [](C& c, V v) { c.train.encoder_hidden = parse_sizes("hidden", v); },
         [](const C& c) {
             return join(c.train.encoder_hidden, [](std::size_t x) { return std::to_string(x); });
         }},
        {"decoder_hidden",
         [](C& c, V v) {
             c.train.decoder_hidden = v == "none" ? std::vector<std::size_t>{}
                                                  : parse_sizes("decoder_hidden", v);
         },
         [](const C& c) {
             if (c.train.decoder_hidden.empty()) return std::string("none");
             return join(c.train.decoder_hidden, [](std::size_t x) { return std::to_string(x); });
         }},
        {"lr", [](C& c, V v) { c.train.adam.learning_rate = parse_double("lr", v); },
         [](const C& c) { return fmt(c.train.adam.learning_rate); }},
        {"tau", [](C& c, V v) { c.train.tau = parse_double("tau", v); },
         [](const C& c) { return fmt(c.train.tau); }},
        {"kl_weight",
         [](C& c, V v) {
             c.train.kl_weight_auto = v == "auto";
             if (!c.train.kl_weight_auto) c.train.weights.kl = parse_double("kl_weight", v);
         },
         [](const C& c) {
             return c.train.kl_weight_auto ? std::string("auto") : fmt(c.train.weights.kl);
         }},
        {"beta", [](C& c, V v) { c.train.weights.pointwise = parse_double("beta", v); },
         [](const C& c) { return fmt(c.train.weights.pointwise); }},
        {"alpha", [](C& c, V v) { c.train.weights.pairwise = parse_double("alpha", v); },
         [](const C& c) { return fmt(c.train.weights.pairwise); }},
        {"margin",
         [](C& c, V v) {
             c.train.margin_auto = v == "auto";
             if (!c.train.margin_auto) c.train.weights.margin = parse_double("margin", v);
         },
         [](const C& c) {
             return c.train.margin_auto ? std::string("auto") : fmt(c.train.weights.margin);
         }},
        {"straight_through",
         [](C& c, V v) { c.train.straight_through = parse_bool("straight_through", v); },
         [](const C& c) { return std::string(c.train.straight_through ? "true" : "false"); }},
        {"pair_subsample",
         [](C& c, V v) { c.train.pair_subsample = parse_uint("pair_subsample", v); },
         [](const C& c) { return std::to_string(c.train.pair_subsample); }},
        {"rho",
         [](C& c, V v) {
             const double x = parse_double("rho", v);
             if (!(x > 0.0) || x > 1.0) bad_value("rho", v, "must lie in (0, 1]");
             c.rho = x;
         },
         [](const C& c) { return fmt(c.rho); }},
        {"mask_strategy",
         [](C& c, V v) {
             try {
                 c.mask_strategy = parse_mask_strategy(v);
             } catch (const InvalidInput&) {
                 bad_value("mask_strategy", v, "expected first-s, random or stratified");
             }
         },
         [](const C& c) { return std::string(to_string(c.mask_strategy)); }},
        {"seed", [](C& c, V v) { c.train.seed = parse_uint("seed", v); },
         [](const C& c) { return std::to_string(c.train.seed); }},

        {"k",
         [](C& c, V v) {
             c.k = parse_uint("k", v);
             if (c.k == 0) bad_value("k", v, "must be positive");
         },
         [](const C& c) { return std::to_string(c.k); }},
        {"map_definition",
         [](C& c, V v) {
             if (v == "mean-precision") c.map_definition = MapDefinition::mean_precision;
             else if (v == "relevant-ranks") c.map_definition = MapDefinition::relevant_ranks;
             else bad_value("map_definition", v, "expected mean-precision or relevant-ranks");
         },
         [](const C& c) {
             return std::string(c.map_definition == MapDefinition::mean_precision
                                    ? "mean-precision"
                                    : "relevant-ranks");
         }},

        {"methods",
         [](C& c, V v) {
             auto items = split_list(v);
             for (const auto& m : items)
                 if (!is_method_name(m))
                     bad_value("methods", v, "unknown method '" + m + "'");
             if (items.empty()) bad_value("methods", v, "empty list");
             c.methods = std::move(items);
         },
         [](const C& c) { return join(c.methods, [](const std::string& s) { return s; }); }},
        {"rhos",
         [](C& c, V v) {
             std::vector<double> out;
             for (const auto& item : split_list(v)) {
                 const double x = parse_double("rhos", item);
                 if (!(x > 0.0) || x > 1.0) bad_value("rhos", v, "levels must lie in (0, 1]");
                 out.push_back(x);
             }
             if (out.empty()) bad_value("rhos", v, "empty list");
             c.rhos = std::move(out);
         },
         [](const C& c) { return join(c.rhos, fmt); }},
        {"alpha_grid",
         [](C& c, V v) {
             c.alpha_grid = parse_grid("alpha_grid", v);
             if (c.alpha_grid.empty()) bad_value("alpha_grid", v, "empty grid");
         },
         [](const C& c) { return join(c.alpha_grid, fmt); }},
        {"beta_grid",
         [](C& c, V v) {
             c.beta_grid = parse_grid("beta_grid", v);
             if (c.beta_grid.empty()) bad_value("beta_grid", v, "empty grid");
         },
         [](const C& c) { return join(c.beta_grid, fmt); }},
        {"seeds",
         [](C& c, V v) {
             std::vector<std::uint64_t> out;
             for (const auto& item : split_list(v)) out.push_back(parse_uint("seeds", item));
             if (out.empty()) bad_value("seeds", v, "empty list");
             c.seeds = std::move(out);
         },
         [](const C& c) {
             return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
         }},
        {"max_runs", [](C& c, V v) { c.max_runs = parse_uint("max_runs", v); },
         [](const C& c) { return std::to_string(c.max_runs); }},
        {"threads",
         [](C& c, V v) {
             c.threads = parse_uint("threads", v);
             if (c.threads == 0) bad_value("threads", v, "must be positive");
         },
         [](const C& c) { return std::to_string(c.threads); }},
        {"stats_level",
         [](C& c, V v) {
             const double x = parse_double("stats_level", v);
             if (!(x > 0.0) || x >= 1.0) bad_value("stats_level", v, "must lie in (0, 1)");
             c.stats_level = x;
         },
         [](const C& c) { return fmt(c.stats_level); }},
        {"out", [](C& c, V v) { c.out = std::filesystem::path(std::string(v)); },
         [](const C& c) { return c.out.string(); }},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& def : key_table()) k.push_back(def.name);
        return k;
    }();
    return keys;
}

void RunConfig::set(std::string_view key, std::string_view value) {
    for (const auto& def : key_table()) {
        if (def.name == key) {
            def.set(*this, trim(value));
            return;
        }
    }
    throw UsageError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply_text(std::istream& in, std::string_view source) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw UsageError(std::string(source) + ":" + std::to_string(line_no) +
                             ": expected 'key = value'");
        const auto key = trim(std::string_view(text).substr(0, eq));
        try {
            set(key, std::string_view(text).substr(eq + 1));
        } catch (const UsageError& e) {
            throw UsageError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::apply_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    apply_text(in, path.string());
}

void RunConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw UsageError("override '" + std::string(assignment) + "' is not key=value");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string RunConfig::to_text() const {
    std::string text;
    for (const auto& def : key_table()) text += def.name + " = " + def.get(*this) + '\n';
    return text;
}

void RunConfig::write_resolved(const std::string& name) const {
    std::filesystem::create_directories(out);
    std::ofstream f(out / name);
    if (!f) throw InvalidInput("cannot write " + (out / name).string());
    f << to_text();
}

bool RunConfig::use_minmax() const {
    switch (scaling) {
        case FeatureScaling::minmax: return true;
        case FeatureScaling::none: return false;
        case FeatureScaling::automatic: return dataset == "synthetic" || format == "dense";
    }
    return false;
}

TrainConfig RunConfig::resolved_train() const {
    TrainConfig t = train;
    t.minmax_scale = use_minmax();
    try {
        t.validate();
    } catch (const InvalidInput& e) {
        throw UsageError(e.what());
    }
    return t;
}

bool is_method_name(std::string_view name) {
    return name == "ssb-vae" || name == "psh-gs" || name == "vdsh-s" || name == "unsup";
}

void apply_method(TrainConfig& config, std::string_view method) {
    if (method == "ssb-vae") {
        config.latent = LatentKind::bernoulli;
        config.mode = SupervisionMode::selfsup;
    } else if (method == "psh-gs") {
        config.latent = LatentKind::bernoulli;
        config.mode = SupervisionMode::pairwise_gt;
    } else if (method == "vdsh-s") {
        config.latent = LatentKind::gaussian;
        config.mode = SupervisionMode::pointwise;
    } else if (method == "unsup") {
        config.latent = LatentKind::bernoulli;
        config.mode = SupervisionMode::unsup;
    } else {
        throw UsageError("unknown method '" + std::string(method) + "'");
    }
}

std::string method_name(SupervisionMode mode, LatentKind latent) {
    if (latent == LatentKind::bernoulli && mode == SupervisionMode::selfsup) return "ssb-vae";
    if (latent == LatentKind::bernoulli && mode == SupervisionMode::pairwise_gt) return "psh-gs";
    if (latent == LatentKind::gaussian && mode == SupervisionMode::pointwise) return "vdsh-s";
    if (latent == LatentKind::bernoulli && mode == SupervisionMode::unsup) return "unsup";
    return std::string(to_string(latent)) + "-" + std::string(to_string(mode));
}

LabeledDataset load_dataset(const RunConfig& config) {
    if (config.dataset.empty()) throw UsageError("no dataset given (set 'dataset' or --dataset)");
    LabeledDataset data;
    if (config.dataset == "synthetic") {
        data = make_synthetic(config.synthetic);
    } else if (config.format == "sparse") {
        if (!std::filesystem::exists(config.dataset))
            throw UsageError("dataset file not found: " + config.dataset);
        data = load_sparse(std::filesystem::path(config.dataset), config.multi_label,
                           config.normalize);
    } else {
        if (!std::filesystem::exists(config.dataset))
            throw UsageError("dataset file not found: " + config.dataset);
        std::optional<std::filesystem::path> labels;
        if (!config.labels.empty()) {
            if (!std::filesystem::exists(config.labels))
                throw UsageError("label file not found: " + config.labels);
            labels = config.labels;
        }
        data = load_dense(std::filesystem::path(config.dataset), labels);
    }
    if (config.train_count + config.val_count + config.test_count > 0)
        split_counts(data, config.train_count, config.val_count, config.test_count,
                     config.data_seed);
    else
        split(data, config.fractions, config.data_seed);
    return data;
}

std::vector<double> decade_grid(int lo, int hi) {
    std::vector<double> grid;
    for (int e = lo; e <= hi; ++e) {
        // Parse the decimal literal so every point is the nearest double to 10^e.
        const std::string text = "1e" + std::to_string(e);
        double v = 0.0;
        std::from_chars(text.data(), text.data() + text.size(), v);
        grid.push_back(v);
    }
    return grid;
}

}  // namespace sshash
