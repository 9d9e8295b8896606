#pragma once

#include "dpact/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dpact {

/// On-disk array container.
///
/// Layout (all integers little-endian):
///   bytes 0-3    magic "DPCT"
///   bytes 4-7    uint32 format version (currently 1)
///   bytes 8-15   uint64 header length H in bytes
///   bytes 16..   H bytes of UTF-8 JSON header
///   then         payload: every array in header order, IEEE-754
///                little-endian float32 or float64, no padding
///
/// The header carries {"kind", "arrays": [{"name", "shape", "dtype",
/// "units", "ordering", "offset", "bytes"}], "metadata", "provenance"}.
/// Offsets are relative to the start of the payload.
inline constexpr char kContainerMagic[4] = {'D', 'P', 'C', 'T'};
inline constexpr std::uint32_t kContainerVersion = 1;

enum class DType { float32, float64 };

std::string to_string(DType dtype);
DType dtype_from_string(const std::string& name);
std::size_t dtype_size(DType dtype);

struct ContainerArray {
    std::string name;
    std::vector<std::int64_t> shape;
    DType dtype = DType::float64;
    std::string units;
    std::string ordering;
    std::vector<double> values;  ///< row-major over `shape`

    [[nodiscard]] std::int64_t element_count() const;
};

struct Container {
    std::string kind;
    std::vector<ContainerArray> arrays;
    nlohmann::json metadata = nlohmann::json::object();
    nlohmann::json provenance = nlohmann::json::object();

    [[nodiscard]] const ContainerArray& array(const std::string& name) const;
};

std::vector<std::uint8_t> encode_container(const Container& container);
Container decode_container(const std::vector<std::uint8_t>& bytes);

void write_container(const std::filesystem::path& path, const Container& container);
Container read_container(const std::filesystem::path& path);

}  // namespace dpact
