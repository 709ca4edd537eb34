#include "fedids/wire.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>

namespace fedids {

namespace {

class Writer {
  public:
    explicit Writer(Bytes& out) : out_(out) {}
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }

  private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    Bytes& out_;
};

class Reader {
  public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::span<const std::uint8_t> take(std::size_t n) {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }
    std::span<const std::uint8_t> rest() { return take(remaining()); }

  private:
    void need(std::size_t n) const {
        if (remaining() < n) throw WireError(WireError::Kind::truncated, "wire: unexpected end of payload");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

void encode_weights_into(Writer& w, const ParameterSet& params) {
    if (params.count() > std::numeric_limits<std::uint32_t>::max()) {
        throw WireError(WireError::Kind::too_large, "wire: too many tensors");
    }
    w.u32(static_cast<std::uint32_t>(params.count()));
    for (const auto& t : params.tensors()) {
        if (t.name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw WireError(WireError::Kind::too_large, "wire: tensor name longer than 65535 bytes");
        }
        if (!is_valid_utf8(t.name)) {
            throw WireError(WireError::Kind::bad_utf8, "wire: tensor name is not valid UTF-8");
        }
        if (t.shape.size() > std::numeric_limits<std::uint8_t>::max()) {
            throw WireError(WireError::Kind::dim_overflow, "wire: tensor rank above 255");
        }
        w.u16(static_cast<std::uint16_t>(t.name.size()));
        w.bytes({reinterpret_cast<const std::uint8_t*>(t.name.data()), t.name.size()});
        w.u8(static_cast<std::uint8_t>(t.shape.size()));
        for (const auto d : t.shape) w.u32(d);
        for (const double v : t.values) w.f32(static_cast<float>(v));
    }
}

ParameterSet decode_weights_from(Reader& r) {
    ParameterSet params;
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        const auto name_bytes = r.take(name_len);
        std::string name(reinterpret_cast<const char*>(name_bytes.data()), name_bytes.size());
        if (!is_valid_utf8(name)) {
            throw WireError(WireError::Kind::bad_utf8, "wire: tensor name is not valid UTF-8");
        }
        const std::uint8_t rank = r.u8();
        std::vector<std::uint32_t> shape(rank);
        std::uint64_t volume = 1;
        for (auto& d : shape) {
            d = r.u32();
            volume *= d;
            if (volume > std::numeric_limits<std::uint32_t>::max()) {
                throw WireError(WireError::Kind::dim_overflow, "wire: tensor '" + name + "' has more than 2^32-1 values");
            }
        }
        if (volume * 4 > r.remaining()) {
            throw WireError(WireError::Kind::truncated, "wire: values of tensor '" + name + "' are truncated");
        }
        std::vector<double> values(static_cast<std::size_t>(volume));
        for (auto& v : values) v = static_cast<double>(std::bit_cast<float>(r.u32()));
        if (params.find(name) != nullptr) {
            throw WireError(WireError::Kind::duplicate_name, "wire: duplicate tensor name '" + name + "'");
        }
        params.add(std::move(name), std::move(shape), std::move(values));
    }
    return params;
}

void expect_end(const Reader& r) {
    if (r.remaining() != 0) {
        throw WireError(WireError::Kind::trailing_bytes,
                        "wire: " + std::to_string(r.remaining()) + " trailing bytes after payload");
    }
}

// Fills `out` completely; returns bytes read (short only at end of stream).
std::size_t read_full(ByteSource& source, std::span<std::uint8_t> out) {
    std::size_t got = 0;
    while (got < out.size()) {
        const auto n = source.read_some(out.subspan(got));
        if (n == 0) break;
        got += n;
    }
    return got;
}

std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace

std::string_view to_string(MessageType type) {
    switch (type) {
        case MessageType::join: return "JOIN";
        case MessageType::global: return "GLOBAL";
        case MessageType::update: return "UPDATE";
        case MessageType::done: return "DONE";
        case MessageType::error: return "ERROR";
    }
    return "UNKNOWN";
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    const std::uint8_t* p = bytes.data();
    std::size_t left = bytes.size();
    while (left > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(left, 1u << 30));
        crc = ::crc32(crc, p, chunk);
        p += chunk;
        left -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

bool is_valid_utf8(std::string_view text) {
    std::size_t i = 0;
    while (i < text.size()) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            ++i;
            continue;
        } else if ((c & 0xE0) == 0xC0) {
            extra = 1;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            extra = 2;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= text.size()) return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(text[i + k]);
            if ((cc & 0xC0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3F);
        }
        static constexpr std::uint32_t kMin[] = {0, 0x80, 0x800, 0x10000};
        if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return false;
        i += extra + 1;
    }
    return true;
}

Bytes encode_weights(const ParameterSet& params) {
    Bytes out;
    out.reserve(4 + params.total_size() * 4 + params.count() * 48);
    Writer w(out);
    encode_weights_into(w, params);
    return out;
}

ParameterSet decode_weights(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    auto params = decode_weights_from(r);
    expect_end(r);
    return params;
}

Bytes frame(MessageType type, std::span<const std::uint8_t> payload) {
    if (payload.size() > std::numeric_limits<std::uint32_t>::max()) {
        throw WireError(WireError::Kind::too_large, "frame: payload exceeds 2^32-1 bytes");
    }
    Bytes header;
    Writer w(header);
    w.bytes(kFrameMagic);
    w.u8(static_cast<std::uint8_t>(type));
    w.u32(static_cast<std::uint32_t>(payload.size()));
    Bytes out(header.size() + payload.size() + 4);
    std::memcpy(out.data(), header.data(), header.size());
    if (!payload.empty()) std::memcpy(out.data() + header.size(), payload.data(), payload.size());
    const auto crc = crc32(payload);
    for (std::size_t i = 0; i < 4; ++i) out[out.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
    return out;
}

Bytes frame(const Frame& f) { return frame(f.type, f.payload); }

std::size_t BufferSource::read_some(std::span<std::uint8_t> out) {
    const auto n = std::min(out.size(), remaining());
    std::memcpy(out.data(), bytes_.data() + pos_, n);
    pos_ += n;
    return n;
}

std::optional<Frame> deframe(ByteSource& source) {
    std::array<std::uint8_t, 9> header{};
    const auto got = read_full(source, std::span<std::uint8_t>(header).first(4));
    if (got == 0) return std::nullopt;
    if (got < 4) throw FrameError(FrameError::Kind::truncated, "frame: stream ended inside the magic");
    if (!std::equal(kFrameMagic.begin(), kFrameMagic.end(), header.begin())) {
        throw FrameError(FrameError::Kind::bad_magic, "frame: bad magic");
    }
    if (read_full(source, std::span<std::uint8_t>(header).subspan(4, 1)) < 1) {
        throw FrameError(FrameError::Kind::truncated, "frame: stream ended before the message type");
    }
    const auto type = header[4];
    if (type < 1 || type > 5) {
        throw FrameError(FrameError::Kind::bad_type, "frame: unknown message type " + std::to_string(type));
    }
    if (read_full(source, std::span<std::uint8_t>(header).subspan(5, 4)) < 4) {
        throw FrameError(FrameError::Kind::truncated, "frame: stream ended inside the length");
    }
    const std::uint32_t length = le32(header.data() + 5);

    Frame f;
    f.type = static_cast<MessageType>(type);
    // Grow in chunks so a corrupt length cannot force a huge allocation up front.
    constexpr std::size_t kChunk = 1 << 16;
    while (f.payload.size() < length) {
        const auto before = f.payload.size();
        const auto want = std::min<std::size_t>(kChunk, length - before);
        f.payload.resize(before + want);
        const auto n = read_full(source, std::span<std::uint8_t>(f.payload).subspan(before, want));
        if (n < want) throw FrameError(FrameError::Kind::truncated, "frame: stream ended inside the payload");
    }
    std::array<std::uint8_t, 4> crc_bytes{};
    if (read_full(source, crc_bytes) < 4) {
        throw FrameError(FrameError::Kind::truncated, "frame: stream ended inside the checksum");
    }
    if (le32(crc_bytes.data()) != crc32(f.payload)) {
        throw FrameError(FrameError::Kind::crc_mismatch, "frame: CRC mismatch");
    }
    return f;
}

Bytes join_payload(std::uint32_t client_id) {
    Bytes out;
    Writer(out).u32(client_id);
    return out;
}

std::uint32_t parse_join(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    const auto id = r.u32();
    expect_end(r);
    return id;
}

Bytes global_payload(std::uint32_t round, const ParameterSet& weights) {
    Bytes out;
    Writer w(out);
    w.u32(round);
    encode_weights_into(w, weights);
    return out;
}

GlobalMessage parse_global(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    GlobalMessage m;
    m.round = r.u32();
    m.weights = decode_weights_from(r);
    expect_end(r);
    return m;
}

Bytes update_payload(std::uint32_t round, std::uint64_t n_examples, const ParameterSet& weights) {
    Bytes out;
    Writer w(out);
    w.u32(round);
    w.u64(n_examples);
    encode_weights_into(w, weights);
    return out;
}

UpdateMessage parse_update(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    UpdateMessage m;
    m.round = r.u32();
    m.n_examples = r.u64();
    m.weights = decode_weights_from(r);
    expect_end(r);
    return m;
}

Bytes done_payload(std::uint32_t round) {
    Bytes out;
    Writer(out).u32(round);
    return out;
}

std::uint32_t parse_done(std::span<const std::uint8_t> payload) {
    Reader r(payload);
    const auto round = r.u32();
    expect_end(r);
    return round;
}

Bytes error_payload(std::string_view message) {
    return {message.begin(), message.end()};
}

std::string parse_error_message(std::span<const std::uint8_t> payload) {
    std::string text(payload.begin(), payload.end());
    if (!is_valid_utf8(text)) {
        throw WireError(WireError::Kind::bad_utf8, "wire: error message is not valid UTF-8");
    }
    return text;
}

}  // namespace fedids
