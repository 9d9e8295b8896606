#include "commands.hpp"

#include <dpact/baseline.hpp>
#include <dpact/container.hpp>
#include <dpact/metrics.hpp>
#include <dpact/serialize.hpp>
#include <dpact/studies.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

namespace dpact::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class CsvWriter {
public:
    CsvWriter(const fs::path& path, const std::string& header) : path_(path), file_(path, std::ios::trunc) {
        if (!file_) throw IoError("cannot write '" + path.string() + "'");
        file_ << std::setprecision(17) << header << '\n';
    }
    template <class... Ts>
    void row(const Ts&... values) {
        bool first = true;
        ((file_ << (first ? "" : ",") << values, first = false), ...);
        file_ << '\n';
        if (!file_) throw IoError("failed writing '" + path_.string() + "'");
    }
    std::ofstream& stream() { return file_; }

private:
    fs::path path_;
    std::ofstream file_;
};

fs::path prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw IoError("cannot write '" + path.string() + "'");
    file << doc.dump(2) << '\n';
}

std::string level_tag(double percent) {
    std::ostringstream os;
    os << percent;
    return os.str();
}

json with_provenance(Container& c, const ExperimentConfig& config, const std::string& command) {
    c.provenance = provenance(config, command);
    return c.provenance;
}

std::string voxel_label(const std::array<Index, 3>& v) {
    return "voxel_" + std::to_string(v[0]) + "_" + std::to_string(v[1]) + "_" + std::to_string(v[2]);
}

void write_tacs(const fs::path& path, const std::vector<std::array<Index, 3>>& voxels,
                const std::vector<Vector>& curves) {
    std::string header = "frame";
    for (const auto& v : voxels) header += "," + voxel_label(v);
    CsvWriter csv(path, header);
    const Index K = curves.empty() ? 0 : curves.front().size();
    for (Index k = 0; k < K; ++k) {
        csv.stream() << (k + 1);
        for (const auto& c : curves) csv.stream() << ',' << c[k];
        csv.stream() << '\n';
    }
}

void write_trace(const fs::path& path, const ConvergenceTrace& trace) {
    CsvWriter csv(path, "iteration,ratio,update_norm_sq,fidelity,nuclear_norm,temporal_penalty,rank,seconds");
    for (const auto& r : trace.records)
        csv.row(r.iteration, r.ratio, r.update_norm_sq, r.fidelity, r.nuclear_norm, r.temporal_penalty, r.rank,
                r.seconds);
}

void write_nse(const fs::path& path, const NseResult& nse) {
    CsvWriter csv(path, "frame,nse");
    for (std::size_t i = 0; i < nse.per_frame.values.size(); ++i)
        csv.row(nse.per_frame.index[i], nse.per_frame.values[i]);
}

json run_json(const RunSummary& run) {
    json corr = json::array();
    for (double c : run.tac_correlation) corr.push_back(std::isfinite(c) ? json(c) : json(nullptr));
    return {{"kappa", run.kappa},
            {"gamma", run.weights.gamma},
            {"lambda", run.weights.lambda},
            {"average_nse", run.nse.average},
            {"iterations", run.result.trace.records.size()},
            {"converged", run.result.trace.converged},
            {"step_size", run.result.trace.step_size},
            {"final_rank", run.result.image.rank()},
            {"rank_violations", run.result.trace.ranks.violations},
            {"tac_correlation", corr}};
}

// Factors, trace, nSE, TACs and (optionally) dense volumes and MIPs of one run.
void write_run(const fs::path& dir, const RunSummary& run, const DynamicImage& truth,
               const ExperimentConfig& config, const GlobalOptions& options, bool emit_volumes) {
    prepare_dir(dir);
    Container factors = to_container(run.result.image);
    with_provenance(factors, config, "reconstruct");
    factors.metadata["run"] = run_json(run);
    write_container(dir / "factors.dpct", factors);
    write_trace(dir / "trace.csv", run.result.trace);
    write_nse(dir / "nse.csv", run.nse);

    const auto voxels = default_tac_voxels(config);
    std::vector<Vector> curves;
    for (const auto& v : voxels) curves.push_back(extract_tac(run.result.image, v).values);
    write_tacs(dir / "tacs.csv", voxels, curves);
    {
        CsvWriter csv(dir / "tac_similarity.csv", "voxel,correlation");
        for (std::size_t i = 0; i < voxels.size(); ++i) csv.row(voxel_label(voxels[i]), run.tac_correlation[i]);
    }
    write_json(dir / "summary.json", run_json(run));

    if (emit_volumes || options.emit_mip) {
        const Matrix dense = run.result.image.to_dense();
        if (emit_volumes) {
            Container volumes = to_container(DynamicImage{truth.grid, dense});
            with_provenance(volumes, config, "reconstruct");
            write_container(dir / "volumes.dpct", volumes);
        }
        if (options.emit_mip) {
            Container mip;
            mip.kind = "mip";
            mip.metadata["grid"] = grid_to_json(truth.grid);
            mip.arrays.push_back(mip_array(dense, truth.grid));
            with_provenance(mip, config, "reconstruct");
            write_container(dir / "mip.dpct", mip);
        }
    }
}

MeasurementSet load_or_simulate(const ExperimentConfig& config, const std::optional<fs::path>& path) {
    if (path) return measurement_set_from_container(read_container(*path));
    return add_noise(simulate_study_data(config), config.noise.levels.front(), config.noise.seed);
}

IterationObserver progress_printer() {
    return [](const IterationRecord& r, const FactoredImage&) {
        if (r.iteration == 1 || r.iteration % 25 == 0)
            std::cerr << "  iteration " << r.iteration << "  ratio " << r.ratio << "  rank " << r.rank << '\n';
    };
}

}  // namespace

ExperimentConfig resolve_config(const GlobalOptions& options) {
    ExperimentConfig config = options.config_path ? load_config(*options.config_path) : ExperimentConfig{};
    if (options.seed) config.override_seed(*options.seed);
    if (options.output_dir) config.output_dir = *options.output_dir;
    config.validate();
    return config;
}

void cmd_phantom(const ExperimentConfig& config, const GlobalOptions& options) {
    const fs::path dir = prepare_dir(config.output_dir);
    const DynamicImage truth = build_truth(config);
    Container c = to_container(truth);
    c.metadata["phantom_kind"] = config.phantom.kind;
    with_provenance(c, config, "phantom");
    write_container(dir / "phantom.dpct", c);

    const auto voxels = default_tac_voxels(config);
    std::vector<Vector> curves;
    for (const auto& v : voxels) curves.push_back(extract_tac(truth, v).values);
    write_tacs(dir / "tacs.csv", voxels, curves);

    const Vector sigma = singular_spectrum(truth);
    {
        CsvWriter csv(dir / "spectrum.csv", "index,singular_value");
        for (Index i = 0; i < sigma.size(); ++i) csv.row(i + 1, sigma[i]);
    }
    if (options.emit_mip) {
        Container mip;
        mip.kind = "mip";
        mip.metadata["grid"] = grid_to_json(truth.grid);
        mip.arrays.push_back(mip_array(truth.frames, truth.grid));
        with_provenance(mip, config, "phantom");
        write_container(dir / "phantom_mip.dpct", mip);
    }
    write_provenance(config, "phantom", dir);
    std::cout << "phantom " << config.phantom.kind << ": " << truth.voxel_count() << " voxels x "
              << truth.frame_count() << " frames -> " << dir.string() << '\n';
}

void cmd_simulate(const ExperimentConfig& config, const GlobalOptions&) {
    const fs::path dir = prepare_dir(config.output_dir);
    const MeasurementSet clean = simulate_study_data(config);
    Container c = to_container(clean);
    with_provenance(c, config, "simulate");
    write_container(dir / "measurements.dpct", c);
    for (double level : config.noise.levels) {
        Container noisy = to_container(add_noise(clean, level, config.noise.seed));
        with_provenance(noisy, config, "simulate");
        write_container(dir / ("measurements_noise_" + level_tag(level) + "pct.dpct"), noisy);
    }
    write_provenance(config, "simulate", dir);
    std::cout << "simulated " << clean.frame_count() << " frames, " << clean.geometry.channel_count()
              << " channels x " << clean.geometry.sample_count << " samples -> " << dir.string() << '\n';
}

void cmd_reconstruct(const ExperimentConfig& config, const GlobalOptions& options,
                     const ReconstructOptions& local) {
    const fs::path dir = prepare_dir(config.output_dir);
    const DynamicImage truth = build_truth(config);
    const auto& solver = config.solver.solver;
    std::cout << "solver: R_max=" << solver.max_rank << " M=" << solver.subsets << " epsilon=" << solver.epsilon
              << " max_iterations=" << solver.max_iterations << '\n';

    switch (config.study.kind) {
        case StudyKind::inverse_crime: {
            const MeasurementSet data = load_or_simulate(config, local.data_path);
            const RunSummary run = run_reconstruction(config, data, truth, config.solver.kappa, progress_printer());
            write_run(dir, run, truth, config, options, local.emit_volumes);
            std::cout << "average nSE " << run.nse.average << " after " << run.result.trace.records.size()
                      << " iterations\n";
            break;
        }
        case StudyKind::kappa_sweep: {
            const MeasurementSet data = load_or_simulate(config, local.data_path);
            const KappaSweep sweep = kappa_sweep(config, data, truth);
            CsvWriter csv(dir / "kappa_sweep.csv", "index,kappa,gamma,lambda,average_nse,best");
            for (std::size_t i = 0; i < sweep.runs.size(); ++i) {
                const auto& run = sweep.runs[i];
                write_run(dir / ("kappa_" + std::to_string(i)), run, truth, config, options, local.emit_volumes);
                csv.row(i, run.kappa, run.weights.gamma, run.weights.lambda, run.nse.average,
                        i == sweep.best ? 1 : 0);
            }
            std::cout << "best kappa " << sweep.runs[sweep.best].kappa << " (average nSE "
                      << sweep.runs[sweep.best].nse.average << ")\n";
            break;
        }
        case StudyKind::views_sweep:
        case StudyKind::noise_sweep: {
            const bool views = config.study.kind == StudyKind::views_sweep;
            const auto points = views ? views_sweep(config) : noise_sweep(config);
            const std::string name = views ? "views" : "noise_percent";
            std::string header = name + ",kappa,average_nse";
            for (const auto& v : default_tac_voxels(config)) header += ",corr_" + voxel_label(v);
            CsvWriter csv(dir / (views ? "views_sweep.csv" : "noise_sweep.csv"), header);
            for (const auto& p : points) {
                write_run(dir / (name + "_" + level_tag(p.setting)), p.run, truth, config, options,
                          local.emit_volumes);
                csv.stream() << p.setting << ',' << p.run.kappa << ',' << p.run.nse.average;
                for (double c : p.run.tac_correlation) csv.stream() << ',' << c;
                csv.stream() << '\n';
                std::cout << name << ' ' << p.setting << ": average nSE " << p.run.nse.average << '\n';
            }
            break;
        }
        case StudyKind::ubp_calibration:
            throw ConfigError("study kind ubp-calibration is run by the 'ubp' command");
    }
    write_provenance(config, "reconstruct", dir);
}

std::vector<Index> parse_frame_list(const std::string& text, Index frame_count) {
    std::vector<Index> frames;
    std::stringstream in(text);
    std::string item;
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw ConfigError("frame list: '" + s + "' is not an integer");
        if (v < 1 || v > frame_count)
            throw ConfigError("frame list: " + s + " is outside 1.." + std::to_string(frame_count));
        return static_cast<Index>(v);
    };
    while (std::getline(in, item, ',')) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) {
            frames.push_back(number(item));
            continue;
        }
        const Index lo = number(item.substr(0, dash)), hi = number(item.substr(dash + 1));
        if (hi < lo) throw ConfigError("frame list: empty range '" + item + "'");
        for (Index k = lo; k <= hi; ++k) frames.push_back(k);
    }
    if (frames.empty()) throw ConfigError("frame list is empty");
    return frames;
}

void cmd_ubp(const ExperimentConfig& config, const GlobalOptions& options, const UbpOptions& local) {
    const fs::path dir = prepare_dir(config.output_dir);
    const MeasurementSet data = load_or_simulate(config, local.data_path);
    const VoxelGrid grid = config.grid();
    std::vector<Index> frames = config.study.ubp_frames;
    if (local.frames) frames = parse_frame_list(*local.frames, data.frame_count());
    if (frames.empty())
        throw ConfigError("ubp: give the frames to back-project with --frames or study.ubp_frames");
    for (Index k : frames)
        if (k < 1 || k > data.frame_count()) throw ConfigError("ubp: frame outside the measurement set");

    Container volumes;
    volumes.kind = "ubp-volumes";
    volumes.metadata["grid"] = grid_to_json(grid);
    const auto d = grid.dims();
    auto add_volume = [&](double speed, const FrameImage& image) {
        volumes.arrays.push_back({"ubp_" + level_tag(speed), {d[2], d[1], d[0]}, DType::float64, "a.u.",
                                  "voxel lexicographic x-fastest",
                                  std::vector<double>(image.values.data(), image.values.data() + image.values.size())});
    };

    json report;
    if (local.speed) {
        const FrameImage image = ubp_reconstruct(data, frames, grid, *local.speed);
        add_volume(*local.speed, image);
        report = {{"speed", *local.speed}, {"sharpness", sharpness_score(image)}, {"frames", frames}};
    } else {
        const SosSweepReport sweep = ubp_calibration(config, data, frames);
        CsvWriter csv(dir / "sos_sweep.csv", "speed,sharpness,suggested");
        for (std::size_t i = 0; i < sweep.speeds.size(); ++i) {
            csv.row(sweep.speeds[i], sweep.scores[i], static_cast<Index>(i) == sweep.suggested_index ? 1 : 0);
            add_volume(sweep.speeds[i], sweep.volumes[i]);
        }
        report = {{"speeds", sweep.speeds}, {"scores", sweep.scores}, {"suggested_speed", sweep.suggested_speed},
                  {"frames", frames}};
        std::cout << "suggested speed of sound " << sweep.suggested_speed << " m/s\n";
    }
    with_provenance(volumes, config, "ubp");
    write_container(dir / "ubp_volumes.dpct", volumes);
    write_json(dir / "ubp_report.json", report);
    if (options.emit_mip) std::cerr << "note: --emit-mip has no effect for static UBP volumes\n";
    write_provenance(config, "ubp", dir);
}

void cmd_metrics(const ExperimentConfig& config, const GlobalOptions&, const MetricsOptions& local) {
    const fs::path dir = prepare_dir(config.output_dir);
    const DynamicImage truth = dynamic_image_from_container(read_container(local.truth_path));
    const Container est_c = read_container(local.estimate_path);
    DynamicImage estimate;
    if (est_c.kind == "factored-image") {
        const FactoredImage f = factored_image_from_container(est_c);
        estimate = DynamicImage{f.grid, f.to_dense()};
    } else {
        estimate = dynamic_image_from_container(est_c);
    }
    if (!(estimate.grid == truth.grid) || estimate.frame_count() != truth.frame_count())
        throw ConfigError("metrics: estimate and truth have different grids or frame counts");

    const NseResult nse = nse_per_frame(estimate, truth);
    write_nse(dir / "nse.csv", nse);
    write_json(dir / "nse_summary.json", {{"average_nse", nse.average}});

    auto voxels = config.study.tac_voxels;
    if (voxels.empty()) {
        if (!(config.grid() == truth.grid))
            throw ConfigError("metrics: configure study.tac_voxels when the truth grid differs from the config grid");
        voxels = default_tac_voxels(config);
    }
    std::vector<Vector> est_curves, true_curves;
    CsvWriter sim(dir / "tac_similarity.csv", "voxel,correlation");
    for (const auto& v : voxels) {
        if (!truth.grid.contains(v[0], v[1], v[2])) throw ConfigError("metrics: TAC voxel outside the grid");
        est_curves.push_back(extract_tac(estimate, v).values);
        true_curves.push_back(extract_tac(truth, v).values);
        double corr = std::numeric_limits<double>::quiet_NaN();
        try {
            corr = tac_similarity(est_curves.back(), true_curves.back());
        } catch (const UndefinedResultError&) {
        }
        sim.row(voxel_label(v), corr);
    }
    write_tacs(dir / "tacs_estimate.csv", voxels, est_curves);
    write_tacs(dir / "tacs_truth.csv", voxels, true_curves);
    write_provenance(config, "metrics", dir);
    std::cout << "average nSE " << nse.average << '\n';
}

}  // namespace dpact::cli
