#include "evgraph/config.hpp"

#include "evgraph/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

namespace evgraph {

namespace fs = std::filesystem;

ConfigError::ConfigError(const std::string& source, Index line, const std::string& message)
    : InvalidArgument(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                               : source + ": " + message),
      source_(source), line_(line) {}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& k) {
    return !k.empty() && std::all_of(k.begin(), k.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    });
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string source, fs::path base_dir) {
    KeyValueConfig kv;
    kv.source_ = std::move(source);
    kv.base_dir_ = std::move(base_dir);
    std::istringstream in{std::string(text)};
    std::string raw;
    Index lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(kv.source_, lineno, "expected 'key = value', got '" + line + "'");
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (!valid_key(key)) throw ConfigError(kv.source_, lineno, "invalid key '" + key + "'");
        if (value.empty()) throw ConfigError(kv.source_, lineno, "key '" + key + "' has no value");
        auto [it, inserted] = kv.entries_.emplace(key, Entry{value, lineno, false});
        if (!inserted)
            throw ConfigError(kv.source_, lineno,
                              "duplicate key '" + key + "' (first set on line " +
                                  std::to_string(it->second.line) + ")");
    }
    return kv;
}

KeyValueConfig KeyValueConfig::load(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw ConfigError(path.string(), 0, "cannot read config file");
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string(), 0, "cannot read config file");
    std::ostringstream text;
    text << in.rdbuf();
    return parse(text.str(), path.string(), path.parent_path());
}

const KeyValueConfig::Entry* KeyValueConfig::take(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
}

void KeyValueConfig::fail(const std::string& key, const std::string& message) const {
    auto it = entries_.find(key);
    throw ConfigError(source_, it == entries_.end() ? 0 : it->second.line, key + ": " + message);
}

void KeyValueConfig::fail(const std::string& message) const { throw ConfigError(source_, 0, message); }

std::optional<std::string> KeyValueConfig::get_string(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    return e->value;
}

std::optional<Index> KeyValueConfig::get_int(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    long long v = 0;
    const auto* end = e->value.data() + e->value.size();
    auto [p, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || p != end) fail(key, "expected an integer, got '" + e->value + "'");
    return static_cast<Index>(v);
}

std::optional<std::uint64_t> KeyValueConfig::get_uint64(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    std::uint64_t v = 0;
    const auto* end = e->value.data() + e->value.size();
    auto [p, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || p != end)
        fail(key, "expected a non-negative integer, got '" + e->value + "'");
    return v;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    double v = 0.0;
    const auto* end = e->value.data() + e->value.size();
    auto [p, ec] = std::from_chars(e->value.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v))
        fail(key, "expected a finite number, got '" + e->value + "'");
    return v;
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    std::string v = e->value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(key, "expected true or false, got '" + e->value + "'");
}

std::optional<fs::path> KeyValueConfig::get_path(const std::string& key) {
    const Entry* e = take(key);
    if (!e) return std::nullopt;
    fs::path p(e->value);
    if (p.is_relative() && !base_dir_.empty()) p = base_dir_ / p;
    std::error_code ec;
    if (!fs::exists(p, ec)) fail(key, "path '" + p.string() + "' does not exist");
    return p;
}

void KeyValueConfig::set(const std::string& key, std::string value) {
    auto& e = entries_[key];
    e.value = std::move(value);
    e.line = 0;
}

void KeyValueConfig::finish() const {
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [k, e] : entries_)
        if (!e.used && (!first || e.line < first->line)) {
            first = &e;
            name = k;
        }
    if (first) throw ConfigError(source_, first->line, "unknown key '" + name + "'");
}

Index default_workers() {
    return std::max<Index>(1, static_cast<Index>(std::thread::hardware_concurrency()));
}

namespace {

Index positive(KeyValueConfig& kv, const std::string& key, Index fallback, Index min = 1) {
    const Index v = kv.get_int(key).value_or(fallback);
    if (v < min) kv.fail(key, "must be at least " + std::to_string(min));
    return v;
}

double in_range(KeyValueConfig& kv, const std::string& key, double fallback, double lo, double hi,
                bool open) {
    const double v = kv.get_double(key).value_or(fallback);
    const bool ok = open ? (v > lo && v < hi) : (v >= lo && v <= hi);
    if (!ok) {
        std::ostringstream msg;
        msg << "must lie in " << (open ? "(" : "[") << format_double(lo) << ", " << format_double(hi)
            << (open ? ")" : "]");
        kv.fail(key, msg.str());
    }
    return v;
}

struct ModelKeys {
    std::vector<Architecture> architectures;
    AdamConfig adam;
};

ModelKeys model_keys(KeyValueConfig& kv, Index order, Index knots, Index privileged, Index features,
                     const AdamConfig& adam_defaults) {
    order = positive(kv, "order", order);
    knots = positive(kv, "knots", knots, 2);
    privileged = positive(kv, "privileged_size", privileged);
    features = positive(kv, "features", features);
    const bool bias = kv.get_bool("filter_bias").value_or(true);
    const auto all = default_architectures(order, knots, privileged, features, bias);

    ModelKeys out;
    const std::string list = kv.get_string("architectures").value_or("all");
    if (list == "all") {
        out.architectures = all;
    } else {
        for (const auto& name : split_list(list)) {
            auto it = std::find_if(all.begin(), all.end(), [&](const Architecture& a) { return a.name == name; });
            if (it == all.end()) {
                std::string known;
                for (const auto& a : all) known += (known.empty() ? "" : ", ") + a.name;
                kv.fail("architectures", "unknown architecture '" + name + "' (known: " + known + ")");
            }
            if (std::any_of(out.architectures.begin(), out.architectures.end(),
                            [&](const Architecture& a) { return a.name == name; }))
                kv.fail("architectures", "architecture '" + name + "' listed twice");
            out.architectures.push_back(*it);
        }
        if (out.architectures.empty()) kv.fail("architectures", "no architecture listed");
    }

    out.adam = adam_defaults;
    const double lr = kv.get_double("learning_rate").value_or(out.adam.learning_rate);
    if (!(lr > 0.0)) kv.fail("learning_rate", "must be positive");
    out.adam.learning_rate = lr;
    out.adam.beta1 = in_range(kv, "beta1", out.adam.beta1, 0.0, 1.0, false);
    if (out.adam.beta1 == 1.0) kv.fail("beta1", "must be below 1");
    out.adam.beta2 = in_range(kv, "beta2", out.adam.beta2, 0.0, 1.0, false);
    if (out.adam.beta2 == 1.0) kv.fail("beta2", "must be below 1");
    const double eps = kv.get_double("epsilon").value_or(out.adam.epsilon);
    if (!(eps > 0.0)) kv.fail("epsilon", "must be positive");
    out.adam.epsilon = eps;
    out.adam.epochs = positive(kv, "epochs", out.adam.epochs, 0);
    out.adam.batch_size = positive(kv, "batch_size", out.adam.batch_size);
    return out;
}

template <class Cfg>
void validate_as_config(const KeyValueConfig& kv, const Cfg& cfg) {
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        kv.fail(e.what());
    }
}

std::string architecture_list(const std::vector<Architecture>& as) {
    std::string s;
    for (const auto& a : as) s += (s.empty() ? "" : ", ") + a.name;
    return s;
}

void describe_model(std::ostream& os, const std::vector<Architecture>& as, const AdamConfig& adam) {
    const LayerSpec& l = as.front().layer;
    os << "architectures = " << architecture_list(as) << '\n'
       << "order = " << l.order << '\n'
       << "knots = " << l.num_knots << '\n'
       << "privileged_size = " << l.privileged_size << '\n'
       << "features = " << l.out_features << '\n'
       << "filter_bias = " << (l.bias ? "true" : "false") << '\n'
       << "learning_rate = " << format_double(adam.learning_rate) << '\n'
       << "beta1 = " << format_double(adam.beta1) << '\n'
       << "beta2 = " << format_double(adam.beta2) << '\n'
       << "epsilon = " << format_double(adam.epsilon) << '\n'
       << "epochs = " << adam.epochs << '\n'
       << "batch_size = " << adam.batch_size << '\n';
}

} // namespace

SourceLocConfig source_loc_config(KeyValueConfig& kv) {
    SourceLocConfig cfg;
    if (kv.get_bool("full_scale").value_or(false)) {
        cfg.num_train = 10000;
        cfg.num_graph_realizations = 10;
        cfg.num_data_realizations = 10;
    }
    cfg.num_nodes = positive(kv, "num_nodes", cfg.num_nodes, 2);
    cfg.num_communities = positive(kv, "num_communities", cfg.num_communities);
    if (cfg.num_nodes % cfg.num_communities != 0)
        kv.fail("num_communities", "must divide num_nodes");
    cfg.p_intra = in_range(kv, "p_intra", cfg.p_intra, 0.0, 1.0, false);
    cfg.p_inter = in_range(kv, "p_inter", cfg.p_inter, 0.0, 1.0, false);
    cfg.num_train = positive(kv, "num_train", cfg.num_train);
    cfg.num_test = positive(kv, "num_test", cfg.num_test);
    cfg.t_min = positive(kv, "t_min", cfg.t_min, 0);
    cfg.t_max = kv.get_int("t_max").value_or(cfg.num_nodes);
    if (cfg.t_max < cfg.t_min || cfg.t_max > cfg.num_nodes)
        kv.fail("t_max", "must satisfy t_min <= t_max <= num_nodes");
    if (auto mode = kv.get_string("source_mode")) {
        try {
            cfg.source_mode = parse_source_mode(*mode);
        } catch (const InvalidArgument& e) {
            kv.fail("source_mode", e.what());
        }
    }
    cfg.num_graph_realizations = positive(kv, "num_graph_realizations", cfg.num_graph_realizations);
    cfg.num_data_realizations = positive(kv, "num_data_realizations", cfg.num_data_realizations);
    cfg.master_seed = kv.get_uint64("master_seed").value_or(cfg.master_seed);
    cfg.workers = positive(kv, "workers", default_workers());
    auto model = model_keys(kv, 4, 5, 5, 32, cfg.adam);
    cfg.architectures = std::move(model.architectures);
    cfg.adam = model.adam;
    kv.finish();
    validate_as_config(kv, cfg);
    return cfg;
}

AuthorSettings author_settings(KeyValueConfig& kv) {
    AuthorSettings s;
    AuthorConfig& cfg = s.config;
    s.corpus = kv.get_path("corpus");
    s.function_words = kv.get_path("function_words");
    cfg.target_author = kv.get_string("target_author").value_or("");
    if (cfg.target_author.empty()) kv.fail("missing required key 'target_author'");
    cfg.sizes.train = positive(kv, "train_size", 608);
    cfg.sizes.val = positive(kv, "val_size", 68, 0);
    cfg.sizes.test = positive(kv, "test_size", 170);
    cfg.num_realizations = positive(kv, "num_realizations", cfg.num_realizations);
    cfg.wan.window = positive(kv, "wan_window", cfg.wan.window);
    cfg.wan.decay = in_range(kv, "wan_decay", cfg.wan.decay, 0.0, 1.0, true);
    cfg.wan.normalize = kv.get_bool("wan_normalize").value_or(cfg.wan.normalize);
    cfg.master_seed = kv.get_uint64("master_seed").value_or(cfg.master_seed);
    cfg.workers = positive(kv, "workers", default_workers());
    auto model = model_keys(kv, 1, 2, 2, 2, cfg.adam);
    cfg.architectures = std::move(model.architectures);
    cfg.adam = model.adam;
    kv.finish();
    validate_as_config(kv, cfg);
    return s;
}

std::string describe(const SourceLocConfig& cfg) {
    std::ostringstream os;
    os << "num_nodes = " << cfg.num_nodes << '\n'
       << "num_communities = " << cfg.num_communities << '\n'
       << "p_intra = " << format_double(cfg.p_intra) << '\n'
       << "p_inter = " << format_double(cfg.p_inter) << '\n'
       << "num_train = " << cfg.num_train << '\n'
       << "num_test = " << cfg.num_test << '\n'
       << "t_min = " << cfg.t_min << '\n'
       << "t_max = " << cfg.t_max << '\n'
       << "source_mode = " << to_string(cfg.source_mode) << '\n'
       << "num_graph_realizations = " << cfg.num_graph_realizations << '\n'
       << "num_data_realizations = " << cfg.num_data_realizations << '\n'
       << "master_seed = " << cfg.master_seed << '\n'
       << "workers = " << cfg.workers << '\n';
    describe_model(os, cfg.architectures, cfg.adam);
    return os.str();
}

std::string describe(const AuthorSettings& s) {
    const AuthorConfig& cfg = s.config;
    std::ostringstream os;
    os << "corpus = " << (s.corpus ? s.corpus->string() : "(command line)") << '\n'
       << "function_words = " << (s.function_words ? s.function_words->string() : "(built-in)") << '\n'
       << "target_author = " << cfg.target_author << '\n'
       << "train_size = " << cfg.sizes.train << '\n'
       << "val_size = " << cfg.sizes.val << '\n'
       << "test_size = " << cfg.sizes.test << '\n'
       << "num_realizations = " << cfg.num_realizations << '\n'
       << "wan_window = " << cfg.wan.window << '\n'
       << "wan_decay = " << format_double(cfg.wan.decay) << '\n'
       << "wan_normalize = " << (cfg.wan.normalize ? "true" : "false") << '\n'
       << "master_seed = " << cfg.master_seed << '\n'
       << "workers = " << cfg.workers << '\n';
    describe_model(os, cfg.architectures, cfg.adam);
    return os.str();
}

} // namespace evgraph
