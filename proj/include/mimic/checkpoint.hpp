#pragma once

#include "mimic/nn.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimic {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NamedArray {
    std::string name;
    std::vector<int> shape;  // empty shape = scalar (rank 0, one float)
    std::vector<float> data;
};

// Checkpoint container: magic "MIMC", u32 LE version, u32 LE array count,
// then per array: u32 LE name length + UTF-8 name, u32 LE rank,
// u32 LE dims, raw f32 LE payload.
inline constexpr uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float f) {
    static_assert(sizeof(float) == 4);
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct ByteReader {
    const std::string& buf;
    size_t pos = 0;
    uint32_t u32() {
        if (pos + 4 > buf.size()) throw IoError("checkpoint: truncated");
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        const uint32_t v = u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }
    std::string str(size_t n) {
        if (pos + n > buf.size()) throw IoError("checkpoint: truncated");
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace detail

inline std::string encode_checkpoint(const std::vector<NamedArray>& arrays) {
    std::string out = "MIMC";
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<uint32_t>(arrays.size()));
    for (const auto& a : arrays) {
        int64_t n = 1;
        for (int d : a.shape) n *= d;
        if (n != static_cast<int64_t>(a.data.size()))
            throw IoError("checkpoint: array '" + a.name + "' shape/data mismatch");
        detail::put_u32(out, static_cast<uint32_t>(a.name.size()));
        out += a.name;
        detail::put_u32(out, static_cast<uint32_t>(a.shape.size()));
        for (int d : a.shape) detail::put_u32(out, static_cast<uint32_t>(d));
        for (float f : a.data) detail::put_f32(out, f);
    }
    return out;
}

inline std::vector<NamedArray> decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 12 || bytes.substr(0, 4) != "MIMC")
        throw IoError("checkpoint: bad magic");
    detail::ByteReader r{bytes, 4};
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version));
    const uint32_t count = r.u32();
    std::vector<NamedArray> arrays;
    arrays.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedArray a;
        const uint32_t name_len = r.u32();
        a.name = r.str(name_len);
        const uint32_t rank = r.u32();
        int64_t n = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            const int dim = static_cast<int>(r.u32());
            a.shape.push_back(dim);
            n *= dim;
        }
        a.data.resize(static_cast<size_t>(n));
        for (auto& f : a.data) f = r.f32();
        arrays.push_back(std::move(a));
    }
    if (r.pos != bytes.size()) throw IoError("checkpoint: trailing bytes");
    return arrays;
}

inline void write_checkpoint(const std::string& path, const std::vector<NamedArray>& arrays) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    const std::string bytes = encode_checkpoint(arrays);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("checkpoint: write failed for '" + path + "'");
}

inline std::vector<NamedArray> read_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

// --- parameter <-> container helpers ---

inline std::vector<NamedArray> params_to_arrays(const ParamList& params) {
    std::vector<NamedArray> out;
    out.reserve(params.size());
    for (const auto& p : params)
        out.push_back({p.name, p.tensor.shape(), p.tensor.value()});
    return out;
}

inline void load_params(const ParamList& params, const std::vector<NamedArray>& arrays) {
    std::map<std::string, const NamedArray*> by_name;
    for (const auto& a : arrays) by_name[a.name] = &a;
    for (const auto& p : params) {
        auto it = by_name.find(p.name);
        if (it == by_name.end()) throw IoError("checkpoint: missing array '" + p.name + "'");
        if (it->second->shape != p.tensor.shape())
            throw IoError("checkpoint: shape mismatch for '" + p.name + "': stored " +
                          shape_str(it->second->shape) + " vs expected " +
                          shape_str(p.tensor.shape()));
        p.tensor.value() = it->second->data;
    }
}

inline const NamedArray* find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
    for (const auto& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

inline const NamedArray& require_array(const std::vector<NamedArray>& arrays,
                                       const std::string& name) {
    const NamedArray* a = find_array(arrays, name);
    if (!a) throw IoError("checkpoint: missing array '" + name + "'");
    return *a;
}

// Strings stored in the float container (one byte per float, rows padded with 0).
inline NamedArray strings_to_array(const std::string& name, const std::vector<std::string>& texts) {
    size_t width = 1;
    for (const auto& t : texts) width = std::max(width, t.size());
    NamedArray a;
    a.name = name;
    a.shape = {static_cast<int>(texts.size()), static_cast<int>(width)};
    a.data.assign(texts.size() * width, 0.0f);
    for (size_t i = 0; i < texts.size(); ++i)
        for (size_t j = 0; j < texts[i].size(); ++j)
            a.data[i * width + j] = static_cast<float>(static_cast<unsigned char>(texts[i][j]));
    return a;
}

inline std::vector<std::string> array_to_strings(const NamedArray& a) {
    if (a.shape.size() != 2) throw IoError("checkpoint: '" + a.name + "' is not a string table");
    std::vector<std::string> out;
    const size_t rows = static_cast<size_t>(a.shape[0]), width = static_cast<size_t>(a.shape[1]);
    for (size_t i = 0; i < rows; ++i) {
        std::string s;
        for (size_t j = 0; j < width; ++j) {
            const int c = static_cast<int>(a.data[i * width + j]);
            if (c == 0) break;
            s.push_back(static_cast<char>(c));
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace mimic
