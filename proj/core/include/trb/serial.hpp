#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "trb/errors.hpp"

namespace trb {

// Big-endian byte writer/reader used for every canonical wire layout.
// All multi-byte integers on the wire are big-endian.

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void be16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v >> 8));
        buf_.push_back(static_cast<uint8_t>(v));
    }

    void be32(uint32_t v) {
        for (int s = 24; s >= 0; s -= 8) buf_.push_back(static_cast<uint8_t>(v >> s));
    }

    void be64(uint64_t v) {
        for (int s = 56; s >= 0; s -= 8) buf_.push_back(static_cast<uint8_t>(v >> s));
    }

    void bytes(std::span<const uint8_t> b) { buf_.insert(buf_.end(), b.begin(), b.end()); }

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    uint8_t u8() { return take(1)[0]; }

    uint16_t be16() {
        auto b = take(2);
        return static_cast<uint16_t>(b[0]) << 8 | b[1];
    }

    uint32_t be32() {
        auto b = take(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = v << 8 | b[i];
        return v;
    }

    uint64_t be64() {
        auto b = take(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v = v << 8 | b[i];
        return v;
    }

    std::span<const uint8_t> bytes(size_t n) { return take(n); }

    std::span<const uint8_t> rest() {
        auto r = data_.subspan(pos_);
        pos_ = data_.size();
        return r;
    }

    size_t remaining() const { return data_.size() - pos_; }
    size_t position() const { return pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    std::span<const uint8_t> take(size_t n) {
        if (remaining() < n) throw ParseError("unexpected end of input");
        auto r = data_.subspan(pos_, n);
        pos_ += n;
        return r;
    }

    std::span<const uint8_t> data_;
    size_t pos_ = 0;
};

}  // namespace trb
