#pragma once

#include "dpact/container.hpp"
#include "dpact/lowrank.hpp"
#include "dpact/phantoms.hpp"

#include <nlohmann/json.hpp>

#include <span>

namespace dpact {

nlohmann::json grid_to_json(const VoxelGrid& grid);
VoxelGrid grid_from_json(const nlohmann::json& j);

nlohmann::json geometry_to_json(const ScanGeometry& geometry);
ScanGeometry geometry_from_json(const nlohmann::json& j);

/// Array "frames", shape [K, Nz, Ny, Nx]; grid in metadata.
Container to_container(const DynamicImage& image);
DynamicImage dynamic_image_from_container(const Container& container);

/// Arrays "U" [N, R], "S" [R], "V" [K, R].
Container to_container(const FactoredImage& image);
FactoredImage factored_image_from_container(const Container& container);

/// Array "traces", shape [K, Q, P] (channel-major then time); geometry and noise in metadata.
Container to_container(const MeasurementSet& data);
MeasurementSet measurement_set_from_container(const Container& container);

/// Per-frame maximum-intensity projection along z, shape [K, Ny, Nx].
ContainerArray mip_array(const Matrix& frames, const VoxelGrid& grid, const std::string& name = "mip_z");

/// Dense frames of a factored image for the selected 0-based frames only.
Matrix dense_frames(const FactoredImage& image, std::span<const Index> frames);

}  // namespace dpact
