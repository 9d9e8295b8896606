#include "dpact/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

namespace dpact {
namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180.0;

// Rejects keys outside `allowed` so that typos do not silently fall back to defaults.
void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    const std::set<std::string> names(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items())
        if (!names.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + ": wrong type");
    }
}

json voxel_json(const std::array<Index, 3>& v) { return json::array({v[0], v[1], v[2]}); }

std::array<Index, 3> voxel_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw ConfigError(where + ": expected [x, y, z]");
    std::array<Index, 3> v{};
    for (std::size_t a = 0; a < 3; ++a) {
        if (!j[a].is_number_integer()) throw ConfigError(where + ": indices must be integers");
        v[a] = j[a].get<Index>();
    }
    return v;
}

}  // namespace

std::string to_string(StudyKind kind) {
    switch (kind) {
        case StudyKind::inverse_crime: return "inverse-crime";
        case StudyKind::views_sweep: return "views-sweep";
        case StudyKind::noise_sweep: return "noise-sweep";
        case StudyKind::kappa_sweep: return "kappa-sweep";
        case StudyKind::ubp_calibration: return "ubp-calibration";
    }
    return "inverse-crime";
}

StudyKind study_kind_from_string(const std::string& name) {
    for (auto k : {StudyKind::inverse_crime, StudyKind::views_sweep, StudyKind::noise_sweep,
                   StudyKind::kappa_sweep, StudyKind::ubp_calibration})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown study kind '" + name + "'");
}

void ExperimentConfig::validate() const {
    if (schema_version != kConfigSchemaVersion)
        throw ConfigError("unsupported schema_version " + std::to_string(schema_version));

    const auto& p = phantom;
    if (p.kind != "rank4" && p.kind != "blob" && p.kind != "point")
        throw ConfigError("phantom.kind must be rank4, blob or point");
    for (Index d : p.dims)
        if (d < 1) throw ConfigError("phantom.dims must be positive");
    if (p.frame_count < 1) throw ConfigError("phantom.frame_count must be >= 1");
    if (p.kind == "rank4" && p.frame_count < 4) throw ConfigError("rank4 phantom needs frame_count >= 4");
    if (!(p.spacing > 0.0)) throw ConfigError("phantom.spacing_m must be positive");
    if (p.refinement < 1) throw ConfigError("phantom.refinement must be >= 1");
    if (p.kind == "rank4" && p.refinement != 1)
        throw ConfigError("rank4 phantom is defined on the reconstruction grid only (refinement must be 1)");
    if (p.kind == "point" && p.refinement != 1) throw ConfigError("point phantom requires refinement 1");
    if (p.kind == "point")
        for (std::size_t a = 0; a < 3; ++a)
            if (p.point_voxel[a] < 0 || p.point_voxel[a] >= p.dims[a])
                throw ConfigError("phantom.point_voxel lies outside the grid");

    const auto& g = geometry;
    if (g.views != 1 && g.views != 2 && g.views != 4) throw ConfigError("geometry.views must be 1, 2 or 4");
    if (g.elements_per_arc < 1) throw ConfigError("geometry.elements_per_arc must be >= 1");
    if (!(g.radius > 0.0)) throw ConfigError("geometry.radius_m must be positive");
    if (!(g.polar_span > 0.0) || g.polar_span > std::numbers::pi)
        throw ConfigError("geometry.polar_span_deg must lie in (0, 180]");
    if (!(g.angular_step_deg > 0.0)) throw ConfigError("geometry.angular_step_deg must be positive");
    if (g.sample_count < 2) throw ConfigError("geometry.sample_count must be >= 2");
    if (!(g.sample_interval > 0.0)) throw ConfigError("geometry.sample_interval_s must be positive");
    if (!(g.sound_speed > 0.0)) throw ConfigError("geometry.sound_speed must be positive");
    if (!(g.frame_period > 0.0)) throw ConfigError("geometry.frame_period_s must be positive");

    const Vec3 half = 0.5 * grid().extent();
    if (half.norm() >= g.radius) throw ConfigError("grid does not fit inside the transducer arcs");

    if (noise.levels.empty()) throw ConfigError("noise.levels must not be empty");
    for (double level : noise.levels)
        if (!(level >= 0.0)) throw ConfigError("noise levels must be >= 0");

    try {
        solver.solver.validate(p.frame_count);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("solver: ") + e.what());
    }
    if (solver.kappa && !(*solver.kappa > 0.0)) throw ConfigError("solver.kappa must be positive");
    if (solver.kappa && p.kind == "point") throw ConfigError("solver.kappa needs a dynamic phantom");

    if (study.kind == StudyKind::views_sweep) {
        if (study.views.empty()) throw ConfigError("study.views must not be empty");
        for (int v : study.views)
            if (v != 1 && v != 2 && v != 4) throw ConfigError("study.views entries must be 1, 2 or 4");
    }
    if (study.kind == StudyKind::kappa_sweep && p.kind == "point")
        throw ConfigError("kappa-sweep needs a dynamic phantom");
    for (std::size_t i = 1; i < study.sos_candidates.size(); ++i)
        if (!(study.sos_candidates[i] > study.sos_candidates[i - 1]))
            throw ConfigError("study.sos_candidates must be strictly increasing");
    if (study.sos_candidates.size() == 1) throw ConfigError("study.sos_candidates needs at least two speeds");
    for (const auto& v : study.tac_voxels)
        for (std::size_t a = 0; a < 3; ++a)
            if (v[a] < 0 || v[a] >= p.dims[a]) throw ConfigError("study.tac_voxels entry outside the grid");
    for (Index k : study.ubp_frames)
        if (k < 1 || k > p.frame_count) throw ConfigError("study.ubp_frames entry outside 1..frame_count");
}

VoxelGrid ExperimentConfig::grid() const {
    return VoxelGrid::centered(phantom.dims[0], phantom.dims[1], phantom.dims[2], phantom.spacing);
}

VoxelGrid ExperimentConfig::simulation_grid() const {
    const Index r = phantom.refinement;
    return VoxelGrid::centered(phantom.dims[0] * r, phantom.dims[1] * r, phantom.dims[2] * r,
                               phantom.spacing / static_cast<double>(r));
}

ScanGeometry ExperimentConfig::scan_geometry(std::optional<int> views) const {
    ScanParameters params;
    params.views = views.value_or(geometry.views);
    params.frame_count = phantom.frame_count;
    params.angular_step = geometry.angular_step_deg * kDeg;
    params.radius = geometry.radius;
    params.elements_per_arc = geometry.elements_per_arc;
    params.polar_span = geometry.polar_span;
    params.sound_speed = geometry.sound_speed;
    params.sample_count = geometry.sample_count;
    params.sample_interval = geometry.sample_interval;
    params.frame_period = geometry.frame_period;
    return make_scan_geometry(params);
}

void ExperimentConfig::override_seed(std::uint64_t seed) {
    phantom.seed = seed;
    noise.seed = seed;
    solver.solver.seed = seed;
}

json to_json(const ExperimentConfig& c) {
    json doc;
    doc["schema_version"] = c.schema_version;
    doc["phantom"] = {{"kind", c.phantom.kind},
                      {"dims", voxel_json(c.phantom.dims)},
                      {"frame_count", c.phantom.frame_count},
                      {"spacing_m", c.phantom.spacing},
                      {"refinement", c.phantom.refinement},
                      {"point_voxel", voxel_json(c.phantom.point_voxel)},
                      {"seed", c.phantom.seed}};
    doc["geometry"] = {{"views", c.geometry.views},
                       {"elements_per_arc", c.geometry.elements_per_arc},
                       {"radius_m", c.geometry.radius},
                       {"polar_span_deg", c.geometry.polar_span / kDeg},
                       {"angular_step_deg", c.geometry.angular_step_deg},
                       {"sample_count", c.geometry.sample_count},
                       {"sample_interval_s", c.geometry.sample_interval},
                       {"sound_speed", c.geometry.sound_speed},
                       {"frame_period_s", c.geometry.frame_period}};
    doc["noise"] = {{"levels", c.noise.levels}, {"seed", c.noise.seed}};
    const SolverConfig& s = c.solver.solver;
    json solver = {{"max_rank", s.max_rank},
                   {"epsilon", s.epsilon},
                   {"gamma", s.gamma},
                   {"lambda", s.lambda},
                   {"subsets", s.subsets},
                   {"max_iterations", s.max_iterations},
                   {"seed", s.seed},
                   {"fista_variant", to_string(s.fista_variant)},
                   {"track_full_fidelity", s.track_full_fidelity},
                   {"oversample", s.oversample},
                   {"power_iterations", s.power_iterations},
                   {"norm_iterations", s.norm_iterations},
                   {"norm_sample_frames", s.norm_sample_frames},
                   {"divergence_ratio", s.divergence_ratio}};
    solver["step_size"] = s.step_size ? json(*s.step_size) : json(nullptr);
    solver["kappa"] = c.solver.kappa ? json(*c.solver.kappa) : json(nullptr);
    doc["solver"] = solver;
    json voxels = json::array();
    for (const auto& v : c.study.tac_voxels) voxels.push_back(voxel_json(v));
    doc["study"] = {{"kind", to_string(c.study.kind)},
                    {"views", c.study.views},
                    {"sos_candidates", c.study.sos_candidates},
                    {"tac_voxels", voxels},
                    {"ubp_frames", c.study.ubp_frames}};
    doc["output_dir"] = c.output_dir.string();
    return doc;
}

ExperimentConfig config_from_json(const json& doc) {
    ExperimentConfig c;
    check_keys(doc, "config", {"schema_version", "phantom", "geometry", "noise", "solver", "study", "output_dir"});
    if (!doc.contains("schema_version")) throw ConfigError("config: schema_version is required");
    read(doc, "schema_version", c.schema_version, "config");

    if (doc.contains("phantom")) {
        const json& p = doc["phantom"];
        check_keys(p, "phantom", {"kind", "dims", "frame_count", "spacing_m", "refinement", "point_voxel", "seed"});
        read(p, "kind", c.phantom.kind, "phantom");
        if (p.contains("dims")) c.phantom.dims = voxel_from(p["dims"], "phantom.dims");
        read(p, "frame_count", c.phantom.frame_count, "phantom");
        read(p, "spacing_m", c.phantom.spacing, "phantom");
        read(p, "refinement", c.phantom.refinement, "phantom");
        if (p.contains("point_voxel")) c.phantom.point_voxel = voxel_from(p["point_voxel"], "phantom.point_voxel");
        read(p, "seed", c.phantom.seed, "phantom");
    }
    if (doc.contains("geometry")) {
        const json& g = doc["geometry"];
        check_keys(g, "geometry", {"views", "elements_per_arc", "radius_m", "polar_span_deg", "angular_step_deg",
                                   "sample_count", "sample_interval_s", "sound_speed", "frame_period_s"});
        read(g, "views", c.geometry.views, "geometry");
        read(g, "elements_per_arc", c.geometry.elements_per_arc, "geometry");
        read(g, "radius_m", c.geometry.radius, "geometry");
        double span_deg = c.geometry.polar_span / kDeg;
        read(g, "polar_span_deg", span_deg, "geometry");
        c.geometry.polar_span = span_deg * kDeg;
        read(g, "angular_step_deg", c.geometry.angular_step_deg, "geometry");
        read(g, "sample_count", c.geometry.sample_count, "geometry");
        read(g, "sample_interval_s", c.geometry.sample_interval, "geometry");
        read(g, "sound_speed", c.geometry.sound_speed, "geometry");
        read(g, "frame_period_s", c.geometry.frame_period, "geometry");
    }
    if (doc.contains("noise")) {
        const json& n = doc["noise"];
        check_keys(n, "noise", {"levels", "seed"});
        read(n, "levels", c.noise.levels, "noise");
        read(n, "seed", c.noise.seed, "noise");
    }
    if (doc.contains("solver")) {
        const json& s = doc["solver"];
        check_keys(s, "solver", {"max_rank", "epsilon", "gamma", "lambda", "step_size", "subsets", "max_iterations",
                                 "seed", "fista_variant", "track_full_fidelity", "oversample", "power_iterations",
                                 "norm_iterations", "norm_sample_frames", "divergence_ratio", "kappa"});
        SolverConfig& sc = c.solver.solver;
        read(s, "max_rank", sc.max_rank, "solver");
        read(s, "epsilon", sc.epsilon, "solver");
        read(s, "gamma", sc.gamma, "solver");
        read(s, "lambda", sc.lambda, "solver");
        if (s.contains("step_size") && !s["step_size"].is_null()) {
            double eta = 0.0;
            read(s, "step_size", eta, "solver");
            sc.step_size = eta;
        }
        read(s, "subsets", sc.subsets, "solver");
        read(s, "max_iterations", sc.max_iterations, "solver");
        read(s, "seed", sc.seed, "solver");
        if (s.contains("fista_variant")) {
            std::string name;
            read(s, "fista_variant", name, "solver");
            try {
                sc.fista_variant = fista_variant_from_string(name);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("solver.fista_variant: ") + e.what());
            }
        }
        read(s, "track_full_fidelity", sc.track_full_fidelity, "solver");
        read(s, "oversample", sc.oversample, "solver");
        read(s, "power_iterations", sc.power_iterations, "solver");
        read(s, "norm_iterations", sc.norm_iterations, "solver");
        read(s, "norm_sample_frames", sc.norm_sample_frames, "solver");
        read(s, "divergence_ratio", sc.divergence_ratio, "solver");
        if (s.contains("kappa") && !s["kappa"].is_null()) {
            double kappa = 0.0;
            read(s, "kappa", kappa, "solver");
            c.solver.kappa = kappa;
        }
    }
    if (doc.contains("study")) {
        const json& st = doc["study"];
        check_keys(st, "study", {"kind", "views", "sos_candidates", "tac_voxels", "ubp_frames"});
        if (st.contains("kind")) {
            std::string name;
            read(st, "kind", name, "study");
            c.study.kind = study_kind_from_string(name);
        }
        read(st, "views", c.study.views, "study");
        read(st, "sos_candidates", c.study.sos_candidates, "study");
        read(st, "ubp_frames", c.study.ubp_frames, "study");
        if (st.contains("tac_voxels")) {
            if (!st["tac_voxels"].is_array()) throw ConfigError("study.tac_voxels: expected an array");
            for (const auto& v : st["tac_voxels"]) c.study.tac_voxels.push_back(voxel_from(v, "study.tac_voxels"));
        }
    }
    if (doc.contains("output_dir")) {
        std::string dir;
        read(doc, "output_dir", dir, "config");
        c.output_dir = dir;
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open config '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(file);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(doc);
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256 failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string config_hash(const ExperimentConfig& config) { return sha256_hex(to_json(config).dump()); }

json provenance(const ExperimentConfig& config, const std::string& command) {
    return {{"command", command},
            {"artifact_version", kArtifactVersion},
            {"config_hash", config_hash(config)},
            {"seeds",
             {{"phantom", config.phantom.seed}, {"noise", config.noise.seed}, {"solver", config.solver.solver.seed}}},
            {"config", to_json(config)}};
}

void write_provenance(const ExperimentConfig& config, const std::string& command,
                      const std::filesystem::path& dir) {
    const auto path = dir / "provenance.json";
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw IoError("cannot write '" + path.string() + "'");
    file << provenance(config, command).dump(2) << '\n';
    if (!file) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace dpact
