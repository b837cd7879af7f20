#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "audformer/error.hpp"
#include "audformer/tensor.hpp"

// AUDT binary tensor container, used by the feature cache, checkpoints and
// the export commands.
//
//   magic   : 4 bytes "AUDT"
//   version : u16, currently 1
//   dtype   : u8, 0 = float32, 1 = float64
//   rank    : u8
//   shape   : rank x u64
//   payload : row-major values
//
// All integers and payload values are little-endian.

namespace audformer {

constexpr std::uint16_t kAudtVersion = 1;

enum class AudtDtype : std::uint8_t { f32 = 0, f64 = 1 };

template <typename T>
struct audt_dtype_of;
template <>
struct audt_dtype_of<float> {
    static constexpr AudtDtype value = AudtDtype::f32;
};
template <>
struct audt_dtype_of<double> {
    static constexpr AudtDtype value = AudtDtype::f64;
};

namespace detail {

inline void write_bytes(std::ofstream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void read_bytes(std::ifstream& is, void* p, std::size_t n,
                       const std::string& path) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw DataError("audt: truncated file " + path);
}

static_assert(std::endian::native == std::endian::little,
              "AUDT writer assumes a little-endian host");

}  // namespace detail

template <typename T>
void write_audt(const std::filesystem::path& path, const Tensor<T>& t) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("audt: cannot open for write: " + path.string());
    os.write("AUDT", 4);
    const std::uint16_t version = kAudtVersion;
    const std::uint8_t dtype = static_cast<std::uint8_t>(audt_dtype_of<T>::value);
    const std::uint8_t rank = static_cast<std::uint8_t>(t.rank());
    detail::write_bytes(os, &version, 2);
    detail::write_bytes(os, &dtype, 1);
    detail::write_bytes(os, &rank, 1);
    for (std::size_t i = 0; i < t.rank(); ++i) {
        const std::uint64_t dim = t.dim(i);
        detail::write_bytes(os, &dim, 8);
    }
    detail::write_bytes(os, t.data(), t.numel() * sizeof(T));
    if (!os) throw DataError("audt: write failed: " + path.string());
}

template <typename T>
Tensor<T> read_audt(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("audt: cannot open: " + path.string());
    char magic[4];
    detail::read_bytes(is, magic, 4, path.string());
    if (std::string(magic, 4) != "AUDT")
        throw DataError("audt: bad magic in " + path.string());
    std::uint16_t version = 0;
    std::uint8_t dtype = 0, rank = 0;
    detail::read_bytes(is, &version, 2, path.string());
    if (version != kAudtVersion)
        throw DataError("audt: unsupported version " + std::to_string(version) +
                        " in " + path.string());
    detail::read_bytes(is, &dtype, 1, path.string());
    if (dtype != static_cast<std::uint8_t>(audt_dtype_of<T>::value))
        throw DataError("audt: dtype mismatch in " + path.string());
    detail::read_bytes(is, &rank, 1, path.string());
    Shape shape(rank);
    for (std::size_t i = 0; i < rank; ++i) {
        std::uint64_t dim = 0;
        detail::read_bytes(is, &dim, 8, path.string());
        shape[i] = static_cast<std::size_t>(dim);
    }
    Tensor<T> t(shape);
    detail::read_bytes(is, t.data(), t.numel() * sizeof(T), path.string());
    return t;
}

}  // namespace audformer
