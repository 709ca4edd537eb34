#include "fedids/veremi.hpp"

#include "fedids/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace fedids {

namespace {

std::string with_line(std::size_t line, const std::string& what) {
    return line == 0 ? what : "line " + std::to_string(line) + ": " + what;
}

void check_label(int label, std::size_t line) {
    if (!is_attacker_label(label)) {
        throw ParseError(line, "unknown attacker label " + std::to_string(label));
    }
}

double finite_or_throw(double value, std::size_t line, std::string_view field) {
    if (!std::isfinite(value)) {
        throw ParseError(line, "non-finite value in field '" + std::string(field) + "'");
    }
    return value;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <class T>
T parse_number(std::string_view text, std::size_t line, std::string_view field) {
    text = trim(text);
    T value{};
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc{} || ptr != last) {
        if constexpr (std::is_floating_point_v<T>) {
            // from_chars accepts "inf"/"nan"; report those as non-finite below.
            if (ec == std::errc::result_out_of_range) {
                throw ParseError(line, "non-finite value in field '" + std::string(field) + "'");
            }
        }
        throw ParseError(line, "malformed field '" + std::string(field) + "': '" +
                                   std::string(text) + "'");
    }
    if constexpr (std::is_floating_point_v<T>) {
        finite_or_throw(value, line, field);
    }
    return value;
}

MessageRecord parse_csv_row(std::string_view row, std::size_t line) {
    static constexpr std::array<std::string_view, 10> kFields{
        "sendtime", "sender", "messageID", "pos_x", "pos_y",
        "pos_z",    "spd_x",  "spd_y",     "spd_z", "attackerType"};
    std::array<std::string_view, 10> cells{};
    std::size_t n = 0;
    std::size_t start = 0;
    for (;;) {
        const auto comma = row.find(',', start);
        if (n == cells.size()) {
            throw ParseError(line, "expected 10 comma-separated fields, found more");
        }
        cells[n++] = row.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                         : comma - start);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (n != cells.size()) {
        throw ParseError(line, "expected 10 comma-separated fields, found " + std::to_string(n));
    }
    MessageRecord r;
    r.send_time = parse_number<double>(cells[0], line, kFields[0]);
    r.sender_id = parse_number<std::int64_t>(cells[1], line, kFields[1]);
    r.message_id = parse_number<std::int64_t>(cells[2], line, kFields[2]);
    r.position = {parse_number<double>(cells[3], line, kFields[3]),
                  parse_number<double>(cells[4], line, kFields[4]),
                  parse_number<double>(cells[5], line, kFields[5])};
    r.speed = {parse_number<double>(cells[6], line, kFields[6]),
               parse_number<double>(cells[7], line, kFields[7]),
               parse_number<double>(cells[8], line, kFields[8])};
    r.attacker_type = parse_number<int>(cells[9], line, kFields[9]);
    check_label(r.attacker_type, line);
    if (r.send_time < 0.0) {
        throw ParseError(line, "negative send time");
    }
    return r;
}

double json_number(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) {
        throw ParseError(line, std::string("missing or non-numeric key '") + key + "'");
    }
    return finite_or_throw(it->get<double>(), line, key);
}

std::int64_t json_integer(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end() || !(it->is_number_integer() || it->is_number_unsigned())) {
        throw ParseError(line, std::string("missing or non-integer key '") + key + "'");
    }
    if (it->is_number_unsigned() && it->get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
        throw ParseError(line, std::string("integer out of range for key '") + key + "'");
    }
    return it->get<std::int64_t>();
}

Vec3 json_vec3(const nlohmann::json& obj, const char* key, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_array() || it->size() != 3) {
        throw ParseError(line, std::string("key '") + key + "' must be an array of 3 numbers");
    }
    std::array<double, 3> v{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!(*it)[i].is_number()) {
            throw ParseError(line, std::string("key '") + key + "' must be an array of 3 numbers");
        }
        v[i] = finite_or_throw((*it)[i].get<double>(), line, key);
    }
    return {v[0], v[1], v[2]};
}

MessageRecord parse_json_row(std::string_view row, std::size_t line) {
    nlohmann::json obj;
    try {
        obj = nlohmann::json::parse(row);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) {
        throw ParseError(line, "expected a JSON object");
    }
    MessageRecord r;
    r.send_time = json_number(obj, "sendTime", line);
    r.sender_id = json_integer(obj, "sender", line);
    r.message_id = json_integer(obj, "messageID", line);
    r.position = json_vec3(obj, "pos", line);
    r.speed = json_vec3(obj, "spd", line);
    const auto label = json_integer(obj, "attackerType", line);
    if (label < INT32_MIN || label > INT32_MAX || !is_attacker_label(static_cast<int>(label))) {
        throw ParseError(line, "unknown attacker label " + std::to_string(label));
    }
    r.attacker_type = static_cast<int>(label);
    if (r.send_time < 0.0) {
        throw ParseError(line, "negative send time");
    }
    return r;
}

// Shortest representation that parses back to the same double.
std::string round_trip(double value) {
    std::array<char, 64> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

}  // namespace

bool is_attacker_label(int label) noexcept {
    return std::find(kAttackerLabels.begin(), kAttackerLabels.end(), label) != kAttackerLabels.end();
}

std::string_view attack_name(int label) {
    switch (label) {
        case 0: return "BENIGN";
        case 1: return "Constant Attack";
        case 2: return "Constant Offset Attack";
        case 4: return "Random Attack";
        case 8: return "Random Offset Attack";
        case 16: return "Eventual Stop Attack";
        default: throw std::invalid_argument("unknown attacker label " + std::to_string(label));
    }
}

RecordFormat parse_record_format(std::string_view name) {
    if (name == "jsonl") return RecordFormat::jsonl;
    if (name == "csv") return RecordFormat::csv;
    throw std::invalid_argument("unknown record format '" + std::string(name) + "' (expected jsonl or csv)");
}

std::string_view to_string(RecordFormat format) {
    return format == RecordFormat::jsonl ? "jsonl" : "csv";
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(with_line(line, what)), line_(line) {}

std::vector<MessageRecord> parse_records(std::istream& source, RecordFormat format) {
    std::vector<MessageRecord> records;
    std::string row;
    std::size_t line = 0;
    bool header_seen = false;
    while (std::getline(source, row)) {
        ++line;
        const auto view = trim(row);
        if (view.empty()) continue;
        if (format == RecordFormat::csv) {
            if (!header_seen) {
                if (view != kCsvHeader) {
                    throw ParseError(line, "unexpected CSV header '" + std::string(view) + "'");
                }
                header_seen = true;
                continue;
            }
            records.push_back(parse_csv_row(view, line));
        } else {
            records.push_back(parse_json_row(view, line));
        }
    }
    return records;
}

void write_records(std::ostream& sink, std::span<const MessageRecord> records, RecordFormat format) {
    if (format == RecordFormat::csv) {
        sink << kCsvHeader << '\n';
        for (const auto& r : records) {
            sink << round_trip(r.send_time) << ',' << r.sender_id << ',' << r.message_id << ','
                 << round_trip(r.position.x) << ',' << round_trip(r.position.y) << ','
                 << round_trip(r.position.z) << ',' << round_trip(r.speed.x) << ','
                 << round_trip(r.speed.y) << ',' << round_trip(r.speed.z) << ',' << r.attacker_type
                 << '\n';
        }
        return;
    }
    for (const auto& r : records) {
        sink << "{\"sendTime\":" << round_trip(r.send_time) << ",\"sender\":" << r.sender_id
             << ",\"messageID\":" << r.message_id << ",\"pos\":[" << round_trip(r.position.x) << ','
             << round_trip(r.position.y) << ',' << round_trip(r.position.z) << "],\"spd\":["
             << round_trip(r.speed.x) << ',' << round_trip(r.speed.y) << ','
             << round_trip(r.speed.z) << "],\"attackerType\":" << r.attacker_type << "}\n";
    }
}

ResampleTargets veremi_resample_targets() {
    return {{0, 50000}, {1, 30473}, {2, 30473}, {4, 30510}, {8, 29460}, {16, 28832}};
}

std::vector<MessageRecord> resample(std::span<const MessageRecord> records,
                                    const ResampleTargets& targets, std::uint64_t seed,
                                    bool strict) {
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_label[records[i].attacker_type].push_back(i);
    }
    std::vector<MessageRecord> out;
    for (const auto& [label, target] : targets) {
        auto& pool = by_label[label];
        if (pool.size() < target && strict) {
            throw std::invalid_argument("resample: label " + std::to_string(label) + " has " +
                                        std::to_string(pool.size()) + " records, target is " +
                                        std::to_string(target));
        }
        const std::size_t take = std::min(target, pool.size());
        // Partial Fisher-Yates: the first `take` slots become a uniform sample.
        Rng rng(derive_seed(seed, 0x5E5A, static_cast<std::uint64_t>(label)));
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        std::vector<std::size_t> chosen(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
        std::sort(chosen.begin(), chosen.end());
        for (const auto i : chosen) {
            out.push_back(records[i]);
        }
    }
    return out;
}

std::string format_fixed2(double value) {
    std::array<char, 400> buf{};
    const auto [ptr, ec] =
        std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, 2);
    if (ec != std::errc{}) {
        throw std::invalid_argument("format_fixed2: value not representable");
    }
    std::string s(buf.data(), ptr);
    if (s == "-0.00") {
        s = "0.00";
    }
    return s;
}

std::string build_text(const MessageRecord& r) {
    std::string text;
    text.reserve(96);
    text += format_fixed2(r.send_time);
    text += ' ';
    text += std::to_string(r.sender_id);
    text += ' ';
    text += std::to_string(r.message_id);
    for (const double v : {r.position.x, r.position.y, r.position.z, r.speed.x, r.speed.y, r.speed.z}) {
        text += ' ';
        text += format_fixed2(v);
    }
    return text;
}

LabelMapping LabelMapping::from_labels(std::span<const int> raw_labels) {
    LabelMapping m;
    m.labels_.assign(raw_labels.begin(), raw_labels.end());
    std::sort(m.labels_.begin(), m.labels_.end());
    m.labels_.erase(std::unique(m.labels_.begin(), m.labels_.end()), m.labels_.end());
    return m;
}

int LabelMapping::to_index(int raw_label) const {
    const auto it = std::lower_bound(labels_.begin(), labels_.end(), raw_label);
    if (it == labels_.end() || *it != raw_label) {
        throw std::out_of_range("label " + std::to_string(raw_label) + " is not in the mapping");
    }
    return static_cast<int>(it - labels_.begin());
}

int LabelMapping::to_raw(int class_index) const {
    if (class_index < 0 || static_cast<std::size_t>(class_index) >= labels_.size()) {
        throw std::out_of_range("class index " + std::to_string(class_index) + " is out of range");
    }
    return labels_[static_cast<std::size_t>(class_index)];
}

EncodedDataset encode_labels(std::span<const MessageRecord> records) {
    std::vector<int> raw;
    raw.reserve(records.size());
    for (const auto& r : records) {
        if (!is_attacker_label(r.attacker_type)) {
            throw std::invalid_argument("unknown attacker label " + std::to_string(r.attacker_type));
        }
        raw.push_back(r.attacker_type);
    }
    EncodedDataset out;
    out.mapping = LabelMapping::from_labels(raw);
    out.examples.reserve(records.size());
    for (const auto& r : records) {
        out.examples.push_back({build_text(r), out.mapping.to_index(r.attacker_type), r.attacker_type});
    }
    return out;
}

DatasetSplit split_train_test(std::span<const LabeledText> examples, double ratio, std::uint64_t seed) {
    if (examples.empty()) {
        throw std::invalid_argument("split_train_test: no examples");
    }
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw std::invalid_argument("split_train_test: ratio must lie in (0, 1)");
    }
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, 0x5B117));
    rng.shuffle(std::span<std::size_t>(order));
    const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(examples.size())));

    DatasetSplit split;
    split.seed = seed;
    split.ratio = ratio;
    split.train.reserve(n_train);
    split.test.reserve(examples.size() - n_train);
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? split.train : split.test).push_back(examples[order[i]]);
    }
    return split;
}

}  // namespace fedids
