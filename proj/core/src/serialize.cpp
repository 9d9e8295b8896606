#include "dpact/serialize.hpp"

#include <algorithm>
#include <limits>

namespace dpact {
namespace {

using nlohmann::json;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

std::vector<double> copy_values(const double* data, Index count) {
    return std::vector<double>(data, data + count);
}

ContainerArray row_major_array(const std::string& name, const Matrix& m, const std::string& ordering) {
    const RowMatrix rm = m;
    return {name, {m.rows(), m.cols()}, DType::float64, "", ordering, copy_values(rm.data(), rm.size())};
}

Matrix matrix_from(const ContainerArray& a) {
    if (a.shape.size() != 2) throw IoError("container: array '" + a.name + "' must be two-dimensional");
    RowMatrix rm(a.shape[0], a.shape[1]);
    std::copy(a.values.begin(), a.values.end(), rm.data());
    return rm;
}

void expect_kind(const Container& c, const std::string& kind) {
    if (c.kind != kind) throw IoError("container: expected kind '" + kind + "', found '" + c.kind + "'");
}

}  // namespace

json grid_to_json(const VoxelGrid& grid) {
    const auto d = grid.dims();
    return {{"origin_m", {grid.origin()[0], grid.origin()[1], grid.origin()[2]}},
            {"spacing_m", grid.spacing()},
            {"dims", {d[0], d[1], d[2]}}};
}

VoxelGrid grid_from_json(const json& j) {
    try {
        const auto o = j.at("origin_m").get<std::array<double, 3>>();
        const auto d = j.at("dims").get<std::array<Index, 3>>();
        return VoxelGrid(Vec3(o[0], o[1], o[2]), j.at("spacing_m").get<double>(), d[0], d[1], d[2]);
    } catch (const json::exception& e) {
        throw IoError(std::string("container: malformed grid metadata: ") + e.what());
    }
}

json geometry_to_json(const ScanGeometry& g) {
    json arcs = json::array();
    for (const auto& arc : g.arcs)
        arcs.push_back({{"radius_m", arc.radius},
                        {"azimuth_offset_rad", arc.azimuth_offset},
                        {"polar_angles_rad", arc.polar_angles}});
    return {{"arcs", arcs},
            {"angular_step_rad", g.angular_step},
            {"frame_count", g.frame_count},
            {"sound_speed", g.sound_speed},
            {"sample_count", g.sample_count},
            {"sample_interval_s", g.sample_interval},
            {"frame_period_s", g.frame_period}};
}

ScanGeometry geometry_from_json(const json& j) {
    try {
        ScanGeometry g;
        for (const auto& a : j.at("arcs")) {
            TransducerArc arc;
            arc.radius = a.at("radius_m").get<double>();
            arc.azimuth_offset = a.at("azimuth_offset_rad").get<double>();
            arc.polar_angles = a.at("polar_angles_rad").get<std::vector<double>>();
            g.arcs.push_back(std::move(arc));
        }
        g.angular_step = j.at("angular_step_rad").get<double>();
        g.frame_count = j.at("frame_count").get<Index>();
        g.sound_speed = j.at("sound_speed").get<double>();
        g.sample_count = j.at("sample_count").get<Index>();
        g.sample_interval = j.at("sample_interval_s").get<double>();
        g.frame_period = j.at("frame_period_s").get<double>();
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw IoError(std::string("container: malformed geometry metadata: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw IoError(std::string("container: invalid geometry metadata: ") + e.what());
    }
}

Container to_container(const DynamicImage& image) {
    const auto d = image.grid.dims();
    Container c;
    c.kind = "dynamic-image";
    c.metadata["grid"] = grid_to_json(image.grid);
    c.arrays.push_back({"frames",
                        {image.frame_count(), d[2], d[1], d[0]},
                        DType::float64,
                        "Pa",
                        "frame, then voxel lexicographic x-fastest",
                        copy_values(image.frames.data(), image.frames.size())});
    return c;
}

DynamicImage dynamic_image_from_container(const Container& c) {
    expect_kind(c, "dynamic-image");
    DynamicImage image;
    image.grid = grid_from_json(c.metadata.at("grid"));
    const auto& a = c.array("frames");
    if (a.shape.size() != 4 || a.shape[1] * a.shape[2] * a.shape[3] != image.grid.size())
        throw IoError("container: frames shape does not match the grid");
    image.frames = Eigen::Map<const Matrix>(a.values.data(), image.grid.size(), a.shape[0]);
    return image;
}

Container to_container(const FactoredImage& image) {
    Container c;
    c.kind = "factored-image";
    c.metadata["grid"] = grid_to_json(image.grid);
    c.arrays.push_back(row_major_array("U", image.U, "row-major [voxel, component]; voxels x-fastest"));
    c.arrays.push_back({"S", {image.rank()}, DType::float64, "Pa", "component",
                        copy_values(image.S.data(), image.S.size())});
    c.arrays.push_back(row_major_array("V", image.V, "row-major [frame, component]"));
    return c;
}

FactoredImage factored_image_from_container(const Container& c) {
    expect_kind(c, "factored-image");
    FactoredImage image;
    image.grid = grid_from_json(c.metadata.at("grid"));
    image.U = matrix_from(c.array("U"));
    const auto& s = c.array("S");
    image.S = Eigen::Map<const Vector>(s.values.data(), static_cast<Index>(s.values.size()));
    image.V = matrix_from(c.array("V"));
    if (image.U.rows() != image.grid.size() || image.U.cols() != image.rank() || image.V.cols() != image.rank())
        throw IoError("container: inconsistent factor shapes");
    return image;
}

Container to_container(const MeasurementSet& data) {
    const Index Q = data.geometry.channel_count();
    const Index P = data.geometry.sample_count;
    Container c;
    c.kind = "measurement-set";
    c.metadata["geometry"] = geometry_to_json(data.geometry);
    if (data.noise)
        c.metadata["noise"] = {{"percent", data.noise->percent},
                               {"seed", data.noise->seed},
                               {"reference_max_abs", data.noise->reference_max_abs},
                               {"sigma", data.noise->sigma}};
    c.arrays.push_back({"traces",
                        {data.frame_count(), Q, P},
                        DType::float64,
                        "Pa",
                        "frame, then channel-major then time",
                        copy_values(data.frames.data(), data.frames.size())});
    return c;
}

MeasurementSet measurement_set_from_container(const Container& c) {
    expect_kind(c, "measurement-set");
    MeasurementSet data;
    data.geometry = geometry_from_json(c.metadata.at("geometry"));
    const auto& a = c.array("traces");
    if (a.shape.size() != 3 || a.shape[0] != data.geometry.frame_count ||
        a.shape[1] != data.geometry.channel_count() || a.shape[2] != data.geometry.sample_count)
        throw IoError("container: trace shape does not match the geometry");
    data.frames = Eigen::Map<const Matrix>(a.values.data(), a.shape[1] * a.shape[2], a.shape[0]);
    if (c.metadata.contains("noise")) {
        const auto& n = c.metadata["noise"];
        data.noise = NoiseDescription{n.at("percent").get<double>(), n.at("seed").get<std::uint64_t>(),
                                      n.at("reference_max_abs").get<double>(), n.at("sigma").get<double>()};
    }
    return data;
}

ContainerArray mip_array(const Matrix& frames, const VoxelGrid& grid, const std::string& name) {
    const auto d = grid.dims();
    const Index K = frames.cols();
    std::vector<double> out(static_cast<std::size_t>(K * d[0] * d[1]),
                            -std::numeric_limits<double>::infinity());
    for (Index k = 0; k < K; ++k)
        for (Index z = 0; z < d[2]; ++z)
            for (Index y = 0; y < d[1]; ++y)
                for (Index x = 0; x < d[0]; ++x) {
                    auto& m = out[static_cast<std::size_t>((k * d[1] + y) * d[0] + x)];
                    m = std::max(m, frames(grid.linear_index(x, y, z), k));
                }
    return {name, {K, d[1], d[0]}, DType::float64, "Pa", "frame, then y, then x (max over z)", std::move(out)};
}

Matrix dense_frames(const FactoredImage& image, std::span<const Index> frames) {
    Matrix out(image.voxel_count(), static_cast<Index>(frames.size()));
    for (std::size_t i = 0; i < frames.size(); ++i) out.col(static_cast<Index>(i)) = frame_column(image, frames[i] + 1);
    return out;
}

}  // namespace dpact
