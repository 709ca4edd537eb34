#include "fedids/rng.hpp"
#include "fedids/veremi.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

using namespace fedids;

namespace {

std::vector<MessageRecord> parse(const std::string& text, RecordFormat f) {
    std::istringstream in(text);
    return parse_records(in, f);
}

const std::string kHeader = std::string(kCsvHeader) + "\n";

MessageRecord record(int label, double t = 1.0, std::int64_t id = 0) {
    MessageRecord r;
    r.send_time = t;
    r.sender_id = id;
    r.message_id = id;
    r.attacker_type = label;
    r.position = {t, 2.0 * t, 0.0};
    return r;
}

std::vector<MessageRecord> random_records(Rng& rng, std::size_t n) {
    std::vector<MessageRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        MessageRecord r;
        r.send_time = rng.uniform(0.0, 1e5);
        r.sender_id = static_cast<std::int64_t>(rng.below(1000));
        r.message_id = static_cast<std::int64_t>(i);
        r.position = {rng.uniform(-1e5, 1e5), rng.uniform(-1e5, 1e5), rng.uniform(-10, 10)};
        r.speed = {rng.uniform(-40, 40), rng.uniform(-40, 40), 0.0};
        r.attacker_type = kAttackerLabels[rng.below(kAttackerLabels.size())];
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST_CASE("csv row parses into a record") {
    const auto recs = parse(kHeader + "25200.0,101,7,500.25,1000.5,0.0,12.5,-3.2,0.0,1\n", RecordFormat::csv);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].attacker_type == 1);
    CHECK(recs[0].send_time == 25200.0);
    CHECK(recs[0].sender_id == 101);
    CHECK(recs[0].message_id == 7);
    CHECK(recs[0].position == Vec3{500.25, 1000.5, 0.0});
    CHECK(recs[0].speed == Vec3{12.5, -3.2, 0.0});
}

TEST_CASE("jsonl line parses and unknown labels are rejected") {
    const std::string ok =
        R"({"sendTime": 1.5, "sender": 3, "messageID": 9, "pos": [1,2,3], "spd": [4,5,6], "attackerType": 16})";
    const auto recs = parse(ok + "\n", RecordFormat::jsonl);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].attacker_type == 16);
    CHECK(recs[0].speed == Vec3{4, 5, 6});

    const std::string bad =
        R"({"sendTime": 1.5, "sender": 3, "messageID": 9, "pos": [1,2,3], "spd": [4,5,6], "attackerType": 99})";
    try {
        parse(ok + "\n" + bad + "\n", RecordFormat::jsonl);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("unknown attacker label") != std::string::npos);
    }
}

TEST_CASE("empty input gives no records") {
    CHECK(parse("", RecordFormat::jsonl).empty());
    CHECK(parse("", RecordFormat::csv).empty());
    CHECK(parse(kHeader, RecordFormat::csv).empty());
}

TEST_CASE("malformed rows report their line") {
    CHECK_THROWS_AS(parse("a,b\n", RecordFormat::csv), ParseError);
    try {
        parse(kHeader + "1,2,3,4,5,6,7,8,9,0\n1,2,3,4,5\n", RecordFormat::csv);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse(kHeader + "1,2,3,nan,5,6,7,8,9,0\n", RecordFormat::csv), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,2,3,inf,5,6,7,8,9,0\n", RecordFormat::csv), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,2,3,4x,5,6,7,8,9,0\n", RecordFormat::csv), ParseError);
    CHECK_THROWS_AS(parse(kHeader + "1,2,3,4,5,6,7,8,9,3\n", RecordFormat::csv), ParseError);
    CHECK_THROWS_AS(parse(R"({"sendTime": 1})" "\n", RecordFormat::jsonl), ParseError);
    CHECK_THROWS_AS(parse("{not json\n", RecordFormat::jsonl), ParseError);
}

TEST_CASE("write_records round-trips both formats") {
    Rng rng(11);
    const auto recs = random_records(rng, 200);
    for (const auto f : {RecordFormat::csv, RecordFormat::jsonl}) {
        std::ostringstream out;
        write_records(out, recs, f);
        CHECK(parse(out.str(), f) == recs);
    }
}

TEST_CASE("build_text follows the field template") {
    MessageRecord r;
    r.send_time = 25200.0;
    r.sender_id = 101;
    r.message_id = 7;
    r.position = {500.25, 1000.5, 0.0};
    r.speed = {12.5, -3.2, 0.0};
    CHECK(build_text(r) == "25200.00 101 7 500.25 1000.50 0.00 12.50 -3.20 0.00");
    CHECK(build_text(MessageRecord{}) == "0.00 0 0 0.00 0.00 0.00 0.00 0.00 0.00");
}

TEST_CASE("two-decimal rendering agrees with the exact decimal oracle") {
    CHECK(format_fixed2(2.005) == "2.00");
    CHECK(testing::exact_fixed2(2.005) == "2.00");
    CHECK(format_fixed2(-0.001) == "0.00");
    // Exact binary ties resolve to even.
    CHECK(format_fixed2(0.125) == "0.12");
    CHECK(format_fixed2(0.375) == "0.38");
    CHECK(format_fixed2(-2.5) == "-2.50");

    Rng rng(5);
    for (int i = 0; i < 20000; ++i) {
        double v = 0.0;
        switch (i % 4) {
            case 0: v = rng.uniform(-1e6, 1e6); break;
            case 1: v = std::round(rng.uniform(-1e5, 1e5) * 1000.0) / 1000.0; break;  // near-ties
            case 2: v = (static_cast<double>(rng.below(400000)) - 200000.0) / 8.0; break;    // exact ties
            default: v = rng.uniform(-1.0, 1.0) * 1e-3; break;
        }
        const auto expected = testing::exact_fixed2(v);
        INFO("value ", v);
        CHECK(format_fixed2(v) == (expected == "-0.00" ? "0.00" : expected));
    }
}

TEST_CASE("build_text has nine fields that parse back to the rendered precision") {
    Rng rng(21);
    for (const auto& r : random_records(rng, 500)) {
        const auto text = build_text(r);
        CHECK(text.find('\n') == std::string::npos);
        std::vector<std::string> fields;
        std::istringstream in(text);
        for (std::string f; std::getline(in, f, ' ');) fields.push_back(f);
        REQUIRE(fields.size() == 9);
        CHECK(std::stoll(fields[1]) == r.sender_id);
        CHECK(std::stoll(fields[2]) == r.message_id);
        const double reals[] = {r.send_time, r.position.x, r.position.y, r.position.z, r.speed.x, r.speed.y, r.speed.z};
        const std::size_t slots[] = {0, 3, 4, 5, 6, 7, 8};
        for (std::size_t k = 0; k < 7; ++k) {
            const auto& f = fields[slots[k]];
            CHECK(f.size() >= 4);
            CHECK(f[f.size() - 3] == '.');
            double back = 0.0;
            std::from_chars(f.data(), f.data() + f.size(), back);
            CHECK(std::fabs(back - reals[k]) <= 0.005 + 1e-9 * std::fabs(reals[k]));
        }
    }
}

TEST_CASE("resample picks exact per-label counts") {
    std::vector<MessageRecord> recs;
    for (int i = 0; i < 50; ++i) recs.push_back(record(0, i, i));
    for (int i = 0; i < 20; ++i) recs.push_back(record(4, 100 + i, 100 + i));
    for (int i = 0; i < 10; ++i) recs.push_back(record(1, 200 + i, 200 + i));
    const ResampleTargets targets{{0, 10}, {4, 20}, {1, 3}};
    const auto out = resample(recs, targets, 3);
    REQUIRE(out.size() == 33);
    std::map<int, std::size_t> counts;
    for (const auto& r : out) ++counts[r.attacker_type];
    CHECK(counts == std::map<int, std::size_t>{{0, 10}, {1, 3}, {4, 20}});
    // Label-ascending, then input order; contents untouched.
    for (std::size_t i = 1; i < out.size(); ++i) {
        CHECK((out[i - 1].attacker_type < out[i].attacker_type ||
               (out[i - 1].attacker_type == out[i].attacker_type && out[i - 1].message_id < out[i].message_id)));
    }
    for (const auto& r : out) {
        CHECK(std::find(recs.begin(), recs.end(), r) != recs.end());
    }
    CHECK(resample(recs, targets, 3) == out);
    CHECK(resample(recs, targets, 4) != out);

    CHECK_THROWS_AS(resample(recs, {{1, 11}}, 0), std::invalid_argument);
    CHECK(resample(recs, {{1, 11}}, 0, false).size() == 10);
}

TEST_CASE("resample with targets equal to the available counts is a permutation") {
    Rng rng(8);
    const auto recs = random_records(rng, 300);
    ResampleTargets all;
    for (const auto& r : recs) ++all[r.attacker_type];
    auto out = resample(recs, all, 1);
    auto key = [](const MessageRecord& r) { return r.message_id; };
    std::vector<std::int64_t> a, b;
    for (const auto& r : recs) a.push_back(key(r));
    for (const auto& r : out) b.push_back(key(r));
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("resample is uniform over records of a label") {
    std::vector<MessageRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back(record(2, i, i));
    std::vector<int> hits(10, 0);
    const int trials = 4000;
    for (int s = 0; s < trials; ++s) {
        for (const auto& r : resample(recs, {{2, 3}}, static_cast<std::uint64_t>(s))) ++hits[r.message_id];
    }
    // Each record is chosen with probability 3/10.
    for (const int h : hits) CHECK(std::abs(h - trials * 3 / 10) < 120);
}

TEST_CASE("label encoding sorts distinct labels") {
    std::vector<MessageRecord> recs;
    for (const int l : {16, 8, 4, 2, 1, 0, 16}) recs.push_back(record(l));
    const auto enc = encode_labels(recs);
    CHECK(enc.mapping.labels() == std::vector<int>{0, 1, 2, 4, 8, 16});
    CHECK(enc.mapping.to_index(16) == 5);
    CHECK(enc.mapping.to_index(4) == 3);
    for (const int l : kAttackerLabels) CHECK(enc.mapping.to_raw(enc.mapping.to_index(l)) == l);
    for (const auto& e : enc.examples) {
        CHECK(e.class_index == enc.mapping.to_index(e.raw_label));
        CHECK(!e.text.empty());
    }

    const auto two = encode_labels(std::vector<MessageRecord>{record(4), record(0), record(4)});
    CHECK(two.mapping.labels() == std::vector<int>{0, 4});
    CHECK(two.mapping.to_index(4) == 1);
    CHECK_THROWS(two.mapping.to_index(1));
}

TEST_CASE("label mapping does not depend on record order") {
    Rng rng(3);
    auto recs = random_records(rng, 100);
    const auto m1 = encode_labels(recs).mapping;
    for (int k = 0; k < 20; ++k) {
        rng.shuffle(std::span<MessageRecord>(recs));
        CHECK(encode_labels(recs).mapping == m1);
    }
}

TEST_CASE("split sizes follow floor(ratio * N)") {
    std::vector<LabeledText> five;
    for (int i = 0; i < 5; ++i) five.push_back({"t" + std::to_string(i), 0, 0});
    CHECK(split_train_test(five, 0.8, 1).train.size() == 4);
    CHECK(split_train_test(five, 0.8, 1).test.size() == 1);
    CHECK_THROWS_AS(split_train_test({}, 0.8, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_train_test(five, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(split_train_test(five, 0.0, 1), std::invalid_argument);

    std::vector<LabeledText> big(199748, LabeledText{"x", 0, 0});
    const auto s = split_train_test(big, 0.8, 0);
    CHECK(s.train.size() == 159798);
    CHECK(s.test.size() == 39950);
}

TEST_CASE("split is a seeded partition of the input") {
    std::vector<LabeledText> items;
    for (int i = 0; i < 997; ++i) items.push_back({"id" + std::to_string(i), i % 6, 0});
    const auto a = split_train_test(items, 0.8, 42);
    const auto b = split_train_test(items, 0.8, 42);
    CHECK(a.train == b.train);
    CHECK(a.test == b.test);
    std::multiset<std::string> seen;
    for (const auto& e : a.train) seen.insert(e.text);
    for (const auto& e : a.test) seen.insert(e.text);
    std::multiset<std::string> expected;
    for (const auto& e : items) expected.insert(e.text);
    CHECK(seen == expected);
    CHECK(a.train.size() + a.test.size() == items.size());
    CHECK(split_train_test(items, 0.8, 43).train != a.train);
}
