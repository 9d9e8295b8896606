#include "dpact/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dpact {
namespace {

static_assert(std::endian::native == std::endian::little,
              "container encoding assumes a little-endian host");

template <class T>
void put(std::vector<std::uint8_t>& out, T value) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

template <class T>
T get(const std::vector<std::uint8_t>& in, std::size_t offset) {
    if (offset + sizeof(T) > in.size()) throw IoError("container: truncated data");
    T value;
    std::memcpy(&value, in.data() + offset, sizeof(T));
    return value;
}

}  // namespace

std::string to_string(DType dtype) { return dtype == DType::float32 ? "float32" : "float64"; }

DType dtype_from_string(const std::string& name) {
    if (name == "float32") return DType::float32;
    if (name == "float64") return DType::float64;
    throw IoError("container: unsupported dtype '" + name + "'");
}

std::size_t dtype_size(DType dtype) { return dtype == DType::float32 ? 4 : 8; }

std::int64_t ContainerArray::element_count() const {
    std::int64_t n = 1;
    for (auto d : shape) {
        if (d < 0) throw IoError("container: negative dimension in '" + name + "'");
        n *= d;
    }
    return n;
}

const ContainerArray& Container::array(const std::string& name) const {
    for (const auto& a : arrays)
        if (a.name == name) return a;
    throw IoError("container: no array named '" + name + "'");
}

std::vector<std::uint8_t> encode_container(const Container& container) {
    nlohmann::json header;
    header["kind"] = container.kind;
    header["arrays"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& a : container.arrays) {
        if (static_cast<std::int64_t>(a.values.size()) != a.element_count())
            throw IoError("container: array '" + a.name + "' length does not match its shape");
        const std::uint64_t bytes = a.values.size() * dtype_size(a.dtype);
        header["arrays"].push_back({{"name", a.name},
                                    {"shape", a.shape},
                                    {"dtype", to_string(a.dtype)},
                                    {"units", a.units},
                                    {"ordering", a.ordering},
                                    {"offset", offset},
                                    {"bytes", bytes}});
        offset += bytes;
    }
    header["metadata"] = container.metadata;
    header["provenance"] = container.provenance;
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    out.reserve(16 + text.size() + offset);
    out.insert(out.end(), kContainerMagic, kContainerMagic + 4);
    put<std::uint32_t>(out, kContainerVersion);
    put<std::uint64_t>(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& a : container.arrays) {
        if (a.dtype == DType::float64) {
            for (double v : a.values) put<double>(out, v);
        } else {
            for (double v : a.values) put<float>(out, static_cast<float>(v));
        }
    }
    return out;
}

Container decode_container(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kContainerMagic, 4) != 0)
        throw IoError("container: bad magic bytes");
    const auto version = get<std::uint32_t>(bytes, 4);
    if (version != kContainerVersion)
        throw IoError("container: unsupported version " + std::to_string(version));
    const auto header_len = get<std::uint64_t>(bytes, 8);
    if (16 + header_len > bytes.size()) throw IoError("container: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + 16,
                                       bytes.begin() + 16 + static_cast<std::ptrdiff_t>(header_len));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("container: malformed header: ") + e.what());
    }

    Container out;
    const std::size_t payload = 16 + header_len;
    try {
        out.kind = header.at("kind").get<std::string>();
        out.metadata = header.value("metadata", nlohmann::json::object());
        out.provenance = header.value("provenance", nlohmann::json::object());
        for (const auto& entry : header.at("arrays")) {
            ContainerArray a;
            a.name = entry.at("name").get<std::string>();
            a.shape = entry.at("shape").get<std::vector<std::int64_t>>();
            a.dtype = dtype_from_string(entry.at("dtype").get<std::string>());
            a.units = entry.value("units", "");
            a.ordering = entry.value("ordering", "");
            const auto offset = entry.at("offset").get<std::uint64_t>();
            const auto count = static_cast<std::size_t>(a.element_count());
            const std::size_t width = dtype_size(a.dtype);
            if (entry.at("bytes").get<std::uint64_t>() != count * width)
                throw IoError("container: byte count of '" + a.name + "' does not match its shape");
            if (payload + offset + count * width > bytes.size())
                throw IoError("container: payload of '" + a.name + "' is truncated");
            a.values.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::size_t at = payload + offset + i * width;
                a.values[i] = a.dtype == DType::float64 ? get<double>(bytes, at)
                                                        : static_cast<double>(get<float>(bytes, at));
            }
            out.arrays.push_back(std::move(a));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("container: malformed header: ") + e.what());
    }
    return out;
}

void write_container(const std::filesystem::path& path, const Container& container) {
    const auto bytes = encode_container(container);
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open '" + path.string() + "' for writing");
    file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw IoError("failed writing '" + path.string() + "'");
}

Container read_container(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    return decode_container(bytes);
}

}  // namespace dpact
