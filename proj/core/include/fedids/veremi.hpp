#pragma once

// Ingestion of VeReMi-style beacon logs: parsing, class-balanced resampling,
// text serialization, label encoding and the train/test split.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedids {

/// The attacker labels that occur in VeReMi. 0 is benign; the others are the
/// position-falsification attacks (constant, constant offset, random,
/// random offset, eventual stop).
inline constexpr std::array<int, 6> kAttackerLabels{0, 1, 2, 4, 8, 16};

bool is_attacker_label(int label) noexcept;

/// Human-readable attack name for a raw label ("BENIGN", "Constant Attack", ...).
std::string_view attack_name(int label);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

/// One VANET beacon plus its ground-truth attacker label.
struct MessageRecord {
    double send_time = 0.0;
    std::int64_t sender_id = 0;
    std::int64_t message_id = 0;
    Vec3 position;
    Vec3 speed;
    int attacker_type = 0;

    friend bool operator==(const MessageRecord&, const MessageRecord&) = default;
};

enum class RecordFormat { jsonl, csv };

RecordFormat parse_record_format(std::string_view name);
std::string_view to_string(RecordFormat format);

/// Raised for malformed input; `line()` is 1-based and 0 when not applicable.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

/// CSV header line, exactly as written and expected.
inline constexpr std::string_view kCsvHeader =
    "sendtime,sender,messageID,pos_x,pos_y,pos_z,spd_x,spd_y,spd_z,attackerType";

std::vector<MessageRecord> parse_records(std::istream& source, RecordFormat format);
void write_records(std::ostream& sink, std::span<const MessageRecord> records, RecordFormat format);

/// Per-label record counts after resampling.
using ResampleTargets = std::map<int, std::size_t>;

/// Target counts from the balanced VeReMi subset.
ResampleTargets veremi_resample_targets();

/// Selects exactly `targets[label]` records per label, uniformly without
/// replacement. Labels missing from `targets` are dropped. Output is ordered by
/// label, then by input position. In lenient mode a label with too few records
/// contributes all of them.
std::vector<MessageRecord> resample(std::span<const MessageRecord> records,
                                    const ResampleTargets& targets, std::uint64_t seed,
                                    bool strict = true);

/// Renders a real with exactly two decimals, ties to even on the exact binary
/// value. A negative value that rounds to zero renders as "0.00".
std::string format_fixed2(double value);

/// Space-joined: send_time sender message_id pos.x pos.y pos.z spd.x spd.y spd.z.
std::string build_text(const MessageRecord& record);

struct LabeledText {
    std::string text;
    int class_index = 0;
    int raw_label = 0;

    friend bool operator==(const LabeledText&, const LabeledText&) = default;
};

/// Ascending distinct raw labels mapped onto 0..n-1.
class LabelMapping {
  public:
    LabelMapping() = default;
    static LabelMapping from_labels(std::span<const int> raw_labels);

    int to_index(int raw_label) const;
    int to_raw(int class_index) const;
    const std::vector<int>& labels() const noexcept { return labels_; }
    std::size_t size() const noexcept { return labels_.size(); }

    friend bool operator==(const LabelMapping&, const LabelMapping&) = default;

  private:
    std::vector<int> labels_;
};

struct EncodedDataset {
    std::vector<LabeledText> examples;
    LabelMapping mapping;
};

EncodedDataset encode_labels(std::span<const MessageRecord> records);

struct DatasetSplit {
    std::vector<LabeledText> train;
    std::vector<LabeledText> test;
    std::uint64_t seed = 0;
    double ratio = 0.8;
};

/// Seeded uniform shuffle; the first floor(ratio * N) examples become the
/// training set. Not stratified.
DatasetSplit split_train_test(std::span<const LabeledText> examples, double ratio,
                              std::uint64_t seed);

}  // namespace fedids
