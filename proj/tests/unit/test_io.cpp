#include <dpact/config.hpp>
#include <dpact/container.hpp>
#include <dpact/serialize.hpp>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

using namespace dpact;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "dpact_io_tests";
    fs::create_directories(dir);
    return dir / name;
}

Container sample_container() {
    Container c;
    c.kind = "test";
    c.metadata = {{"note", "hello"}, {"n", 3}};
    c.provenance = {{"seed", 9}};
    ContainerArray a{"a", {2, 3}, DType::float64, "m", "row-major", {1.0, -2.5, 1e-300, 4.0, 5.0, 0.1}};
    ContainerArray b{"b", {4}, DType::float32, "", "row-major", {0.5, -0.25, 3.0, 1024.0}};
    c.arrays = {a, b};
    return c;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("container layout: magic, version, header length, payload") {
    const auto bytes = encode_container(sample_container());
    REQUIRE(bytes.size() > 16);
    CHECK(std::memcmp(bytes.data(), "DPCT", 4) == 0);
    std::uint32_t version = 0;
    std::uint64_t header = 0;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&header, bytes.data() + 8, 8);
    CHECK(version == 1);
    CHECK(bytes.size() == 16 + header + 6 * 8 + 4 * 4);
    const auto json = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(header));
    CHECK(json["kind"] == "test");
    CHECK(json["arrays"][0]["shape"] == nlohmann::json::array({2, 3}));
    CHECK(json["arrays"][1]["dtype"] == "float32");
    CHECK(json["arrays"][1]["offset"] == 48);
    double first = 0.0;
    std::memcpy(&first, bytes.data() + 16 + header, 8);
    CHECK(first == 1.0);
}

TEST_CASE("container round trip is bit-identical") {
    const Container c = sample_container();
    const auto bytes = encode_container(c);
    const Container d = decode_container(bytes);
    CHECK(d.kind == c.kind);
    CHECK(d.metadata == c.metadata);
    CHECK(d.provenance == c.provenance);
    CHECK(d.array("a").values == c.array("a").values);
    CHECK(d.array("b").values == c.array("b").values);
    CHECK(d.array("a").units == "m");
    CHECK(encode_container(d) == bytes);

    const fs::path path = scratch("roundtrip.dpct");
    write_container(path, c);
    std::ifstream in(path, std::ios::binary);
    const std::vector<std::uint8_t> on_disk((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(on_disk == bytes);
    CHECK(encode_container(read_container(path)) == bytes);
}

TEST_CASE("malformed containers are rejected") {
    auto bytes = encode_container(sample_container());
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK_THROWS_AS(decode_container(bad_magic), IoError);
    auto bad_version = bytes;
    bad_version[4] = 7;
    CHECK_THROWS_AS(decode_container(bad_version), IoError);
    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    CHECK_THROWS_AS(decode_container(truncated), IoError);
    CHECK_THROWS_AS(decode_container(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 10)), IoError);
    CHECK_THROWS_AS((void)sample_container().array("missing"), IoError);
    Container wrong = sample_container();
    wrong.arrays[0].values.pop_back();
    CHECK_THROWS_AS(encode_container(wrong), IoError);
    CHECK_THROWS_AS(read_container(scratch("does_not_exist.dpct")), IoError);
    CHECK_THROWS_AS(write_container(scratch("no_such_dir") / "x" / "y.dpct", sample_container()), IoError);
}

TEST_CASE("dynamic image: x-fastest ordering and exact round trip") {
    std::mt19937_64 rng(1);
    const VoxelGrid grid = VoxelGrid::centered(3, 2, 2, 0.5e-3);
    const DynamicImage img{grid, oracle::gaussian(12, 4, rng)};
    const Container c = to_container(img);
    const ContainerArray& a = c.array("frames");
    CHECK(a.shape == std::vector<std::int64_t>{4, 2, 2, 3});
    // Element [k, z, y, x] sits at ((k * Nz + z) * Ny + y) * Nx + x.
    CHECK(a.values[static_cast<std::size_t>(((2 * 2 + 1) * 2 + 0) * 3 + 2)] ==
          img.frames(grid.linear_index(2, 0, 1), 2));
    const DynamicImage back = dynamic_image_from_container(decode_container(encode_container(c)));
    CHECK(back.frames == img.frames);
    CHECK(back.grid == grid);
}

TEST_CASE("factored image and measurement set round trips") {
    std::mt19937_64 rng(2);
    SvdOptions o;
    o.max_rank = 3;
    const FactoredImage f = truncated_svd(oracle::gaussian(12, 5, rng), o, VoxelGrid::centered(3, 2, 2, 1e-3));
    const FactoredImage g = factored_image_from_container(decode_container(encode_container(to_container(f))));
    CHECK(g.U == f.U);
    CHECK(g.S == f.S);
    CHECK(g.V == f.V);
    CHECK(g.grid == f.grid);

    MeasurementSet m;
    m.geometry = fixture::arc_geometry(3, 2, 16, 3e-3, 1e-7, 2.0);
    m.frames = oracle::gaussian(48, 2, rng);
    m.noise = NoiseDescription{3.0, 11, 2.0, 0.06};
    const Container mc = to_container(m);
    CHECK(mc.array("traces").shape == std::vector<std::int64_t>{2, 3, 16});
    CHECK(mc.array("traces").values[16 + 5] == m.frames(16 + 5, 0));
    const MeasurementSet back = measurement_set_from_container(decode_container(encode_container(mc)));
    CHECK(back.frames == m.frames);
    CHECK(back.geometry == m.geometry);
    REQUIRE(back.noise.has_value());
    CHECK(back.noise->percent == 3.0);
    CHECK(back.noise->seed == 11);
    CHECK(back.noise->sigma == 0.06);

    CHECK_THROWS_AS(factored_image_from_container(mc), IoError);
}

TEST_CASE("geometry and grid JSON round trips") {
    ScanParameters p;
    p.views = 4;
    p.elements_per_arc = 7;
    p.angular_step = 0.013;
    const ScanGeometry g = make_scan_geometry(p);
    CHECK(geometry_from_json(nlohmann::json::parse(geometry_to_json(g).dump())) == g);
    const VoxelGrid grid = VoxelGrid::centered(4, 5, 6, 0.3e-3);
    CHECK(grid_from_json(nlohmann::json::parse(grid_to_json(grid).dump())) == grid);
}

TEST_CASE("maximum-intensity projection and selected dense frames") {
    const VoxelGrid grid = VoxelGrid::centered(2, 2, 3, 1e-3);
    Matrix frames = Matrix::Zero(12, 2);
    frames(grid.linear_index(1, 0, 2), 0) = 5.0;
    frames(grid.linear_index(1, 0, 0), 0) = -1.0;
    frames(grid.linear_index(0, 1, 1), 1) = 2.0;
    const ContainerArray mip = mip_array(frames, grid);
    CHECK(mip.shape == std::vector<std::int64_t>{2, 2, 2});
    CHECK(mip.values == std::vector<double>{0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 2.0, 0.0});

    std::mt19937_64 rng(3);
    SvdOptions o;
    o.max_rank = 2;
    const FactoredImage f = truncated_svd(oracle::gaussian(12, 5, rng), o, grid);
    const std::vector<Index> pick{4, 1};
    const Matrix d = dense_frames(f, pick);
    CHECK((d.col(0) - f.to_dense().col(4)).norm() <= 1e-14);
    CHECK((d.col(1) - f.to_dense().col(1)).norm() <= 1e-14);
}

TEST_CASE("config: defaults round trip and echo the solver settings") {
    ExperimentConfig c;
    c.solver.solver.max_rank = 40;
    c.solver.solver.subsets = 18;
    c.solver.solver.epsilon = 2.5e-1;
    c.phantom.frame_count = 360;
    const nlohmann::json j = to_json(c);
    CHECK(j["schema_version"] == 1);
    CHECK(j["solver"]["max_rank"] == 40);
    CHECK(j["solver"]["subsets"] == 18);
    CHECK(j["solver"]["epsilon"] == 0.25);
    const ExperimentConfig back = config_from_json(nlohmann::json::parse(j.dump()));
    CHECK(to_json(back) == j);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(back.scan_geometry() == c.scan_geometry());
}

TEST_CASE("config: validation failures are config errors") {
    const nlohmann::json base = to_json(ExperimentConfig{});
    auto with = [&](const std::function<void(nlohmann::json&)>& edit) {
        nlohmann::json j = base;
        edit(j);
        return j;
    };
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j.erase("schema_version"); })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["schema_version"] = 2; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["phantom"]["colour"] = 1; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["phantom"]["kind"] = "cube"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["geometry"]["views"] = 3; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["geometry"]["radius_m"] = 1e-3; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["geometry"]["polar_span_deg"] = 0.0; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["solver"]["subsets"] = 61; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["solver"]["max_rank"] = "four"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["noise"]["levels"] = {-1.0}; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["study"]["kind"] = "everything"; })), ConfigError);
    CHECK_THROWS_AS(config_from_json(with([](auto& j) { j["study"]["sos_candidates"] = {1500.0, 1490.0}; })),
                    ConfigError);
    CHECK_NOTHROW(config_from_json(with([](auto& j) { j["solver"]["step_size"] = nullptr; })));
}

TEST_CASE("config files, hashing and provenance") {
    const fs::path path = scratch("config.json");
    ExperimentConfig c;
    c.noise.levels = {1.0, 3.0};
    {
        std::ofstream out(path);
        out << to_json(c).dump(2);
    }
    const ExperimentConfig loaded = load_config(path);
    CHECK(config_hash(loaded) == config_hash(c));
    CHECK(config_hash(loaded).size() == 64);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

    ExperimentConfig other = c;
    other.override_seed(5);
    CHECK(config_hash(other) != config_hash(c));
    CHECK(other.noise.seed == 5);
    CHECK(other.solver.solver.seed == 5);
    CHECK(other.phantom.seed == 5);

    const nlohmann::json p = provenance(c, "simulate");
    CHECK(p["command"] == "simulate");
    CHECK(p["config_hash"] == config_hash(c));
    CHECK(p["artifact_version"] == kArtifactVersion);
    CHECK(p["seeds"]["noise"] == 0);
    CHECK(config_from_json(p["config"]).noise.levels == c.noise.levels);

    CHECK_THROWS_AS(load_config(scratch("missing.json")), IoError);
    {
        std::ofstream out(scratch("broken.json"));
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_config(scratch("broken.json")), ConfigError);
}

}

#ifdef DPACT_CONFIG_DIR
TEST_SUITE("io") {

TEST_CASE("shipped example configs load and validate") {
    int count = 0;
    for (const auto& entry : fs::directory_iterator(DPACT_CONFIG_DIR)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW((void)load_config(entry.path()));
        ++count;
    }
    CHECK(count >= 5);
}

}
#endif
