#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "dnrl/errors.hpp"

namespace dnrl {

/// One named f32 tensor in a checkpoint file.
struct CheckpointEntry {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<float> data;
};

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw ParseError("checkpoint truncated");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is) {
    const std::uint64_t lo = get_u32(is);
    const std::uint64_t hi = get_u32(is);
    return lo | (hi << 32);
}

} // namespace detail

constexpr std::uint32_t kCheckpointVersion = 1;

inline void write_checkpoint(const std::string& path, const std::vector<CheckpointEntry>& entries) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write checkpoint: " + path);
    os.write("DNRL", 4);
    detail::put_u32(os, kCheckpointVersion);
    detail::put_u32(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        detail::put_u32(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        detail::put_u32(os, static_cast<std::uint32_t>(e.dims.size()));
        std::uint64_t n = 1;
        for (auto d : e.dims) {
            detail::put_u64(os, d);
            n *= d;
        }
        if (n != e.data.size()) throw UsageError("checkpoint entry '" + e.name + "' has inconsistent dims");
        for (float f : e.data) {
            std::uint32_t bits;
            std::memcpy(&bits, &f, 4);
            detail::put_u32(os, bits);
        }
    }
    if (!os) throw ConfigError("failed writing checkpoint: " + path);
}

inline std::vector<CheckpointEntry> read_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "DNRL", 4) != 0) throw ParseError("not a checkpoint file: " + path);
    const std::uint32_t version = detail::get_u32(is);
    if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version");
    const std::uint32_t count = detail::get_u32(is);
    std::vector<CheckpointEntry> entries(count);
    for (auto& e : entries) {
        const std::uint32_t name_len = detail::get_u32(is);
        e.name.resize(name_len);
        is.read(e.name.data(), name_len);
        if (!is) throw ParseError("checkpoint truncated");
        const std::uint32_t rank = detail::get_u32(is);
        e.dims.resize(rank);
        std::uint64_t n = 1;
        for (auto& d : e.dims) {
            d = detail::get_u64(is);
            n *= d;
        }
        e.data.resize(n);
        for (auto& f : e.data) {
            const std::uint32_t bits = detail::get_u32(is);
            std::memcpy(&f, &bits, 4);
        }
    }
    return entries;
}

inline std::map<std::string, CheckpointEntry> checkpoint_index(std::vector<CheckpointEntry> entries) {
    std::map<std::string, CheckpointEntry> index;
    for (auto& e : entries) {
        const std::string name = e.name;
        if (!index.emplace(name, std::move(e)).second) throw ParseError("duplicate checkpoint entry: " + name);
    }
    return index;
}

/// Integer side-state (step counters, RNG words) rides in f32 payloads by
/// bit-casting each u64 into two f32 lanes, which round-trips exactly.
inline CheckpointEntry entry_from_u64s(const std::string& name, const std::vector<std::uint64_t>& words) {
    CheckpointEntry e{name, {words.size(), 2}, {}};
    e.data.resize(words.size() * 2);
    for (std::size_t i = 0; i < words.size(); ++i) {
        const std::uint32_t lo = static_cast<std::uint32_t>(words[i]);
        const std::uint32_t hi = static_cast<std::uint32_t>(words[i] >> 32);
        std::memcpy(&e.data[2 * i], &lo, 4);
        std::memcpy(&e.data[2 * i + 1], &hi, 4);
    }
    return e;
}

inline std::vector<std::uint64_t> u64s_from_entry(const CheckpointEntry& e) {
    if (e.data.size() % 2 != 0) throw ParseError("entry '" + e.name + "' does not hold u64 words");
    std::vector<std::uint64_t> words(e.data.size() / 2);
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::uint32_t lo, hi;
        std::memcpy(&lo, &e.data[2 * i], 4);
        std::memcpy(&hi, &e.data[2 * i + 1], 4);
        words[i] = static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
    }
    return words;
}

} // namespace dnrl
