#include "fedids/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace fedids {

using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

/// Position of the quote closing the string opened at `open`, or npos.
std::size_t closing_quote(std::string_view s, std::size_t open) {
    for (std::size_t i = open + 1; i < s.size(); ++i) {
        if (s[i] == '\\') ++i;
        else if (s[i] == '"') return i;
    }
    return std::string_view::npos;
}

std::string strip_comment(std::string_view line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') {
            const auto close = closing_quote(line, i);
            if (close == std::string_view::npos) return std::string(line);
            i = close;
        } else if (line[i] == '#') {
            return std::string(line.substr(0, i));
        }
    }
    return std::string(line);
}

json parse_value(std::string_view text, std::size_t line);

json parse_array(std::string_view body, std::size_t line) {
    json out = json::array();
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i < body.size() && body[i] == '"') {
            const auto close = closing_quote(body, i);
            if (close == std::string_view::npos) throw ConfigError("line " + std::to_string(line) + ": unterminated string");
            i = close;
            continue;
        }
        if (i < body.size() && body[i] == '[') throw ConfigError("line " + std::to_string(line) + ": nested arrays are not supported");
        if (i == body.size() || body[i] == ',') {
            const auto item = trim(body.substr(start, i - start));
            if (item.empty()) {
                // A trailing comma is allowed; an empty slot elsewhere is not.
                if (i != body.size()) throw ConfigError("line " + std::to_string(line) + ": empty array element");
            } else {
                out.push_back(parse_value(item, line));
            }
            start = i + 1;
        }
    }
    return out;
}

json parse_value(std::string_view text, std::size_t line) {
    const auto where = "line " + std::to_string(line) + ": ";
    if (text.empty()) throw ConfigError(where + "missing value");
    if (text.front() == '"') {
        const auto close = closing_quote(text, 0);
        if (close != text.size() - 1) throw ConfigError(where + "malformed string");
        try {
            return json::parse(text);
        } catch (const json::exception&) {
            throw ConfigError(where + "malformed string escape");
        }
    }
    if (text.front() == '[') {
        if (text.back() != ']') throw ConfigError(where + "unterminated array");
        return parse_array(text.substr(1, text.size() - 2), line);
    }
    if (text == "true") return true;
    if (text == "false") return false;
    const char* b = text.data();
    const char* e = text.data() + text.size();
    const char* digits = (*b == '+') ? b + 1 : b;
    if (*b != '-') {
        std::uint64_t u = 0;
        if (auto [p, ec] = std::from_chars(digits, e, u); ec == std::errc() && p == e) return u;
    } else {
        std::int64_t i = 0;
        if (auto [p, ec] = std::from_chars(b, e, i); ec == std::errc() && p == e) return i;
    }
    double d = 0.0;
    if (auto [p, ec] = std::from_chars(digits, e, d); ec == std::errc() && p == e && std::isfinite(d)) {
        return d;
    }
    throw ConfigError(where + "cannot parse value '" + std::string(text) + "'");
}

struct Entry {
    json value;
    std::size_t line = 0;
};

std::map<std::string, Entry> parse_entries(const std::string& text) {
    std::map<std::string, Entry> entries;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(strip_comment(raw));
        if (line.empty()) continue;
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError(where + "empty section name");
            static const std::set<std::string> known{"data", "data.targets", "tokenizer", "model",
                                                     "fed",  "baseline",     "synth",     "synth.counts"};
            if (!known.contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const auto key = trim(std::string_view(line).substr(0, eq));
        if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-.") !=
                               std::string::npos) {
            throw ConfigError(where + "invalid key '" + key + "'");
        }
        const auto full = section.empty() ? key : section + "." + key;
        auto value = parse_value(trim(std::string_view(line).substr(eq + 1)), line_no);
        if (!entries.emplace(full, Entry{std::move(value), line_no}).second) {
            throw ConfigError(where + "duplicate key '" + full + "'");
        }
    }
    return entries;
}

// Typed accessors with errors that name the key.

[[noreturn]] void type_error(const std::string& key, const Entry& e, const char* expected) {
    throw ConfigError("line " + std::to_string(e.line) + ": " + key + " must be " + expected);
}

std::uint64_t as_u64(const std::string& key, const Entry& e) {
    if (!e.value.is_number_unsigned()) type_error(key, e, "a non-negative integer");
    return e.value.get<std::uint64_t>();
}

double as_double(const std::string& key, const Entry& e) {
    if (!e.value.is_number()) type_error(key, e, "a number");
    return e.value.get<double>();
}

bool as_bool(const std::string& key, const Entry& e) {
    if (!e.value.is_boolean()) type_error(key, e, "true or false");
    return e.value.get<bool>();
}

std::string as_string(const std::string& key, const Entry& e) {
    if (!e.value.is_string()) type_error(key, e, "a string");
    return e.value.get<std::string>();
}

Vec3 as_vec3(const std::string& key, const Entry& e) {
    if (!e.value.is_array() || e.value.size() != 3 ||
        !std::all_of(e.value.begin(), e.value.end(), [](const json& v) { return v.is_number(); })) {
        type_error(key, e, "an array of three numbers");
    }
    return {e.value[0].get<double>(), e.value[1].get<double>(), e.value[2].get<double>()};
}

std::vector<std::string> as_strings(const std::string& key, const Entry& e) {
    if (!e.value.is_array() || !std::all_of(e.value.begin(), e.value.end(), [](const json& v) { return v.is_string(); })) {
        type_error(key, e, "an array of strings");
    }
    return e.value.get<std::vector<std::string>>();
}

/// One configurable scalar: how to read it from an entry and how to write it back.
struct Field {
    std::string key;
    std::function<void(const std::string&, const Entry&)> set;
    std::function<json()> get;
};

template <class T>
Field size_field(std::string key, T& target) {
    return {std::move(key), [&target](const std::string& k, const Entry& e) { target = static_cast<T>(as_u64(k, e)); },
            [&target] { return json(static_cast<std::uint64_t>(target)); }};
}

Field double_field(std::string key, double& target) {
    return {std::move(key), [&target](const std::string& k, const Entry& e) { target = as_double(k, e); },
            [&target] { return json(target); }};
}

Field bool_field(std::string key, bool& target) {
    return {std::move(key), [&target](const std::string& k, const Entry& e) { target = as_bool(k, e); },
            [&target] { return json(target); }};
}

Field string_field(std::string key, std::string& target) {
    return {std::move(key), [&target](const std::string& k, const Entry& e) { target = as_string(k, e); },
            [&target] { return json(target); }};
}

Field vec3_field(std::string key, Vec3& target) {
    return {std::move(key), [&target](const std::string& k, const Entry& e) { target = as_vec3(k, e); },
            [&target] { return json::array({target.x, target.y, target.z}); }};
}

std::vector<Field> fields(ExperimentConfig& c) {
    std::vector<Field> f;
    // data
    f.push_back(string_field("data.source", c.data.source));
    f.push_back(string_field("data.path", c.data.path));
    f.push_back({"data.format",
                 [&c](const std::string& k, const Entry& e) {
                     try {
                         c.data.format = parse_record_format(as_string(k, e));
                     } catch (const std::invalid_argument& ex) {
                         throw ConfigError("line " + std::to_string(e.line) + ": " + ex.what());
                     }
                 },
                 [&c] { return json(std::string(to_string(c.data.format))); }});
    f.push_back(bool_field("data.resample", c.data.resample));
    f.push_back(bool_field("data.strict", c.data.strict));
    f.push_back(size_field("data.resample_seed", c.data.resample_seed));
    f.push_back(double_field("data.split_ratio", c.data.split_ratio));
    f.push_back(size_field("data.split_seed", c.data.split_seed));
    f.push_back(string_field("data.out_dir", c.out_dir));
    // tokenizer
    f.push_back(size_field("tokenizer.max_len", c.tokenizer.max_len));
    f.push_back(size_field("tokenizer.vocab_size", c.tokenizer.vocab_size));
    // model
    f.push_back(size_field("model.d_model", c.model.d_model));
    f.push_back(size_field("model.n_heads", c.model.n_heads));
    f.push_back(size_field("model.n_layers", c.model.n_layers));
    f.push_back(size_field("model.d_ff", c.model.d_ff));
    f.push_back(double_field("model.layernorm_epsilon", c.model.layernorm_epsilon));
    // fed
    f.push_back(bool_field("fed.enabled", c.fl_bert));
    f.push_back(bool_field("fed.eval_rounds", c.eval_rounds));
    f.push_back(size_field("fed.n_clients", c.fed.n_clients));
    f.push_back(size_field("fed.rounds", c.fed.rounds));
    f.push_back(size_field("fed.local_epochs", c.fed.local_epochs));
    f.push_back(size_field("fed.batch_size", c.fed.batch_size));
    f.push_back({"fed.partition",
                 [&c](const std::string& k, const Entry& e) {
                     try {
                         c.fed.partition = parse_partition_strategy(as_string(k, e));
                     } catch (const std::invalid_argument& ex) {
                         throw ConfigError("line " + std::to_string(e.line) + ": " + ex.what());
                     }
                 },
                 [&c] { return json(std::string(to_string(c.fed.partition))); }});
    f.push_back(double_field("fed.dirichlet_alpha", c.fed.dirichlet_alpha));
    f.push_back({"fed.aggregation",
                 [&c](const std::string& k, const Entry& e) {
                     try {
                         c.fed.aggregation = parse_aggregation_mode(as_string(k, e));
                     } catch (const std::invalid_argument& ex) {
                         throw ConfigError("line " + std::to_string(e.line) + ": " + ex.what());
                     }
                 },
                 [&c] { return json(std::string(to_string(c.fed.aggregation))); }});
    f.push_back(size_field("fed.reinit_every", c.fed.reinit_every));
    f.push_back(size_field("fed.seed", c.fed.seed));
    f.push_back(double_field("fed.learning_rate", c.fed.optimizer.learning_rate));
    f.push_back(double_field("fed.beta1", c.fed.optimizer.beta1));
    f.push_back(double_field("fed.beta2", c.fed.optimizer.beta2));
    f.push_back(double_field("fed.epsilon", c.fed.optimizer.epsilon));
    f.push_back(size_field("fed.threads", c.fed.threads));
    f.push_back(bool_field("fed.wire_precision", c.fed.wire_precision));
    // baseline
    f.push_back({"baseline.models",
                 [&c](const std::string& k, const Entry& e) { c.baseline.models = as_strings(k, e); },
                 [&c] { return json(c.baseline.models); }});
    f.push_back(size_field("baseline.max_features", c.baseline.max_features));
    f.push_back(double_field("baseline.lr_learning_rate", c.baseline.lr.learning_rate));
    f.push_back(size_field("baseline.lr_epochs", c.baseline.lr.epochs));
    f.push_back(double_field("baseline.lr_l2", c.baseline.lr.l2));
    f.push_back(double_field("baseline.svm_lambda", c.baseline.svm.lambda));
    f.push_back(size_field("baseline.svm_epochs", c.baseline.svm.epochs));
    f.push_back(size_field("baseline.svm_seed", c.baseline.svm.seed));
    f.push_back(size_field("baseline.knn_k", c.baseline.knn_k));
    f.push_back(bool_field("baseline.knn_condense", c.baseline.knn_condense));
    f.push_back(size_field("baseline.rf_trees", c.baseline.rf.n_trees));
    f.push_back(size_field("baseline.rf_max_depth", c.baseline.rf.max_depth));
    f.push_back(size_field("baseline.rf_m_try", c.baseline.rf.m_try));
    f.push_back(bool_field("baseline.rf_bootstrap", c.baseline.rf.bootstrap));
    f.push_back(size_field("baseline.rf_seed", c.baseline.rf.seed));
    // synth
    f.push_back(double_field("synth.area", c.synth.area));
    f.push_back(double_field("synth.speed_min", c.synth.speed_min));
    f.push_back(double_field("synth.speed_max", c.synth.speed_max));
    f.push_back(double_field("synth.beacon_interval", c.synth.beacon_interval));
    f.push_back(size_field("synth.beacons_per_vehicle", c.synth.beacons_per_vehicle));
    f.push_back(double_field("synth.start_time", c.synth.start_time));
    f.push_back(vec3_field("synth.fixed_position", c.synth.fixed_position));
    f.push_back(vec3_field("synth.offset", c.synth.offset));
    f.push_back(double_field("synth.random_min", c.synth.random_min));
    f.push_back(double_field("synth.random_max", c.synth.random_max));
    f.push_back(double_field("synth.random_offset_scale", c.synth.random_offset_scale));
    f.push_back(double_field("synth.stop_fraction", c.synth.stop_fraction));
    f.push_back(size_field("synth.seed", c.synth.seed));
    return f;
}

/// Per-label count tables: `<prefix>.<label> = <count>`.
struct LabelTable {
    std::string prefix;
    std::map<int, std::size_t>* target;
};

int parse_label_key(const std::string& key, const std::string& suffix, const Entry& e) {
    int label = 0;
    const auto [p, ec] = std::from_chars(suffix.data(), suffix.data() + suffix.size(), label);
    if (ec != std::errc() || p != suffix.data() + suffix.size() || !is_attacker_label(label)) {
        throw ConfigError("line " + std::to_string(e.line) + ": " + key + ": '" + suffix +
                          "' is not an attacker label (0, 1, 2, 4, 8 or 16)");
    }
    return label;
}

std::string render(const json& v) {
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + render(v[i]);
        return out + "]";
    }
    return v.dump();
}

}  // namespace

void ExperimentConfig::override_seeds(std::uint64_t seed) {
    data.resample_seed = seed;
    data.split_seed = seed;
    fed.seed = seed;
    baseline.svm.seed = seed;
    baseline.rf.seed = seed;
    synth.seed = seed;
}

void ExperimentConfig::validate() const {
    if (data.source != "synthetic" && data.source != "file") {
        throw ConfigError("data.source must be \"synthetic\" or \"file\", not \"" + data.source + "\"");
    }
    if (data.source == "file" && data.path.empty()) throw ConfigError("data.path is required when data.source = \"file\"");
    if (!(data.split_ratio > 0.0 && data.split_ratio < 1.0)) throw ConfigError("data.split_ratio must be in (0, 1)");
    if (tokenizer.max_len < 2) throw ConfigError("tokenizer.max_len must be at least 2");
    if (tokenizer.vocab_size < Vocabulary::kReserved + 1) throw ConfigError("tokenizer.vocab_size must be at least 5");
    for (const auto& m : baseline.models) {
        if (m != "rf" && m != "svm" && m != "lr" && m != "knn") {
            throw ConfigError("baseline.models: unknown model \"" + m + "\" (expected rf, svm, lr or knn)");
        }
    }
    if (baseline.max_features == 0) throw ConfigError("baseline.max_features must be at least 1");
    if (baseline.knn_k == 0) throw ConfigError("baseline.knn_k must be at least 1");
    try {
        fed.validate();
        synth.validate();
        auto m = model;
        m.vocab_size = tokenizer.vocab_size;
        m.max_len = tokenizer.max_len;
        m.n_classes = std::max<std::size_t>(m.n_classes, 2);
        m.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    auto entries = parse_entries(text);
    for (auto& field : fields(c)) {
        if (const auto it = entries.find(field.key); it != entries.end()) {
            field.set(field.key, it->second);
            entries.erase(it);
        }
    }
    const LabelTable tables[] = {{"data.targets.", &c.data.targets}, {"synth.counts.", &c.synth.counts}};
    bool synth_counts_seen = false;
    for (auto it = entries.begin(); it != entries.end();) {
        bool consumed = false;
        for (const auto& t : tables) {
            if (it->first.rfind(t.prefix, 0) != 0) continue;
            const auto label = parse_label_key(it->first, it->first.substr(t.prefix.size()), it->second);
            if (t.target == &c.synth.counts && !synth_counts_seen) {
                // An explicit table replaces the default counts.
                c.synth.counts.clear();
                synth_counts_seen = true;
            }
            (*t.target)[label] = static_cast<std::size_t>(as_u64(it->first, it->second));
            consumed = true;
        }
        it = consumed ? entries.erase(it) : std::next(it);
    }
    if (!entries.empty()) {
        const auto& [key, e] = *entries.begin();
        throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string to_toml(const ExperimentConfig& config) {
    auto copy = config;
    std::string out;
    std::string section;
    const auto open = [&](const std::string& s) {
        if (s == section) return;
        out += (out.empty() ? "" : "\n") + ("[" + s + "]\n");
        section = s;
    };
    const auto table = [&](const std::string& name, const std::map<int, std::size_t>& m) {
        if (m.empty()) return;
        open(name);
        for (const auto& [label, n] : m) out += std::to_string(label) + " = " + std::to_string(n) + "\n";
    };
    for (const auto& f : fields(copy)) {
        const auto dot = f.key.find('.');
        const auto s = f.key.substr(0, dot);
        if (s != section && section == "data") table("data.targets", copy.data.targets);
        open(s);
        out += f.key.substr(dot + 1) + " = " + render(f.get()) + "\n";
    }
    table("synth.counts", copy.synth.counts);
    return out;
}

}  // namespace fedids
