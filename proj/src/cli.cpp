#include "planarion/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>

#include <Eigen/SVD>

#include "CLI11.hpp"
#include "json.hpp"

#include "planarion/io.hpp"
#include "planarion/svg.hpp"

namespace planarion::cli {

using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

const char* kClusterColors[9] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#17becf", "#bcbd22"};

int resolve_threads(int threads) {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("PLANARION_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 0; // library picks hardware concurrency
}

PotentialSpec load_spec(const std::string& path) {
    return PotentialSpec::from_json(io::read_file(path));
}

struct ManifestTimer {
    io::RunManifest manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    ManifestTimer(std::string command, const std::vector<std::string>& argv) {
        manifest.command = std::move(command);
        manifest.argv = argv;
        manifest.version = kVersion;
    }
    void write(const std::string& primary_output) {
        manifest.duration_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        io::write_run_manifest(primary_output + ".manifest.json", manifest);
    }
};

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

void print_kv(const std::string& key, const std::string& value, const std::string& format,
              json& accum) {
    if (format == "json")
        accum[key] = json::parse(value, nullptr, false).is_discarded() ? json(value)
                                                                       : json::parse(value);
    else
        std::cout << key << " " << value << "\n";
}

// ---- subcommand implementations ------------------------------------------

struct AspectOpts {
    double xi_inv = 0;
    std::string config_path;
    std::string format = "csv";
};

int cmd_aspect(const AspectOpts& o) {
    json out;
    if (!o.config_path.empty()) {
        const IonConfiguration cfg = io::read_config_csv(o.config_path);
        print_kv("zeta", fmt("%.3f", aspect_ratio_measured(cfg)), o.format, out);
    } else {
        print_kv("zeta", fmt("%.3f", aspect_ratio_theory(o.xi_inv)), o.format, out);
    }
    if (o.format == "json") std::cout << out.dump(2) << "\n";
    return 0;
}

struct TrapcalcOpts {
    std::string spec_path;
    double qmax = 0.1;
    int n_ions = 0;
    double rel_dv = 0;
    std::string format = "csv";
};

int cmd_trapcalc(const TrapcalcOpts& o) {
    const PotentialSpec spec = load_spec(o.spec_path);
    const UnitSystem units = UnitSystem::from(spec);
    json out;
    print_kv("drive_min_mhz", fmt("%.4f", min_drive_frequency(spec, o.qmax) / kTwoPi / 1e6),
             o.format, out);
    print_kv("length_scale_um", fmt("%.4f", units.length_scale * 1e6), o.format, out);
    print_kv("energy_scale_kelvin", fmt("%.6f", units.to_kelvin(1.0)), o.format, out);
    print_kv("xi", fmt("%.6f", spec.xi()), o.format, out);
    if (o.n_ions > 0) {
        const PlanarityReport r = planarity_criterion(spec, o.n_ions);
        print_kv("planarity_ratio", fmt("%.4f", r.ratio), o.format, out);
        print_kv("planarity_threshold", fmt("%.4f", r.threshold), o.format, out);
        print_kv("planarity_margin", fmt("%.4f", r.margin), o.format, out);
        print_kv("planar_predicted", r.satisfied ? "true" : "false", o.format, out);
    }
    if (o.rel_dv != 0) {
        const SensitivityResult s = anisotropy_sensitivity(spec, o.rel_dv);
        print_kv("rel_xi_change", fmt("%.6e", s.value), o.format, out);
        if (s.hierarchy_warning)
            std::cerr << "warning: omega_1 >> omega_2 assumption violated\n";
    }
    if (o.format == "json") std::cout << out.dump(2) << "\n";
    return 0;
}

struct AnnealOpts {
    int n_ions = 0;
    std::string spec_path;
    std::string out_path;
    AnnealSchedule schedule;
    std::vector<std::string> argv;
};

int cmd_anneal(const AnnealOpts& o) {
    const PotentialSpec spec = load_spec(o.spec_path);
    ManifestTimer timer("anneal", o.argv);
    timer.manifest.inputs = {o.spec_path};
    timer.manifest.seed = o.schedule.seed;
    const IonConfiguration cfg = anneal(o.n_ions, spec, o.schedule);
    io::write_config_csv(o.out_path, cfg, spec, o.schedule.seed);
    timer.manifest.outputs = {o.out_path, o.out_path + ".meta.json"};
    timer.write(o.out_path);
    std::cout << "energy_e0 " << io::format_double(total_energy(cfg, spec)) << "\n";
    return 0;
}

struct SweepOpts {
    int n_ions = 0;
    std::string spec_path;
    std::vector<double> xi_values;
    int runs = 200;
    std::string out_path;
    std::string svg_path;
    AnnealSchedule schedule;
    int threads = 0;
    std::vector<std::string> argv;
};

void write_gap_svg(const std::string& path, const GapCurve& curve) {
    SvgPlot plot(640, 440);
    double xmin = curve.anisotropies.front(), xmax = curve.anisotropies.back();
    double ymax = 1;
    for (const auto& cls : curve.classes)
        for (const auto& e : cls) ymax = std::max(ymax, e.gap_mK);
    plot.set_view(xmin - 0.005, xmax + 0.005, 0, ymax * 1.08);
    plot.frame_and_ticks("trap anisotropy", "gap above ground configuration (mK)");
    std::vector<std::pair<double, double>> first_gap;
    for (std::size_t i = 0; i < curve.anisotropies.size(); ++i) {
        for (const auto& e : curve.classes[i])
            if (e.class_id > 0) plot.circle(curve.anisotropies[i], e.gap_mK, 3.0, "#1f77b4");
        if (curve.classes[i].size() > 1)
            first_gap.emplace_back(curve.anisotropies[i], curve.classes[i][1].gap_mK);
    }
    if (first_gap.size() > 1) plot.polyline(first_gap, "#d62728", 1.5);
    io::write_file_atomic(path, plot.finish());
}

int cmd_sweep(const SweepOpts& o) {
    const PotentialSpec spec = load_spec(o.spec_path);
    ManifestTimer timer("sweep", o.argv);
    timer.manifest.inputs = {o.spec_path};
    timer.manifest.seed = o.schedule.seed;
    const GapCurve curve = anisotropy_sweep(o.n_ions, spec, o.xi_values, o.runs, o.schedule,
                                            resolve_threads(o.threads));
    io::write_gap_curve_csv(o.out_path, curve);
    timer.manifest.outputs = {o.out_path};
    if (!o.svg_path.empty()) {
        write_gap_svg(o.svg_path, curve);
        timer.manifest.outputs.push_back(o.svg_path);
    }
    timer.write(o.out_path);
    for (std::size_t i = 0; i < curve.anisotropies.size(); ++i)
        std::cout << "xi " << fmt("%.4f", curve.anisotropies[i]) << " classes "
                  << curve.classes[i].size() << " first_gap_mK "
                  << (curve.classes[i].size() > 1 ? fmt("%.2f", curve.classes[i][1].gap_mK)
                                                  : std::string("n/a"))
                  << "\n";
    return 0;
}

struct ModesOpts {
    std::string config_path;
    std::string spec_path;
    std::string out_path;
    std::string couplings_path;
    std::string svg_path;
    std::vector<double> k_vec;
    bool oop_only = false;
    std::vector<std::string> argv;
};

int cmd_modes(const ModesOpts& o) {
    const IonConfiguration cfg = io::read_config_csv(o.config_path);
    PotentialSpec spec;
    if (!o.spec_path.empty()) {
        spec = load_spec(o.spec_path);
    } else if (auto side = io::read_config_sidecar(o.config_path)) {
        spec = *side;
    } else {
        throw std::runtime_error("modes: no --spec given and no sidecar found next to the configuration");
    }
    ManifestTimer timer("modes", o.argv);
    timer.manifest.inputs = {o.config_path};
    if (!o.spec_path.empty()) timer.manifest.inputs.push_back(o.spec_path);

    const ModeSpectrum spectrum = mode_spectrum(cfg, spec);
    if (o.oop_only) {
        const OutOfPlaneBlock block = out_of_plane_block(cfg, spec);
        std::cout << "out_of_plane_modes " << block.frequencies.size() << "\n";
        for (int m = 0; m < block.frequencies.size(); ++m)
            std::cout << "freq_khz " << fmt("%.4f", block.frequencies[m] / kTwoPi / 1e3) << "\n";
    }
    io::write_spectrum_csv(o.out_path, spectrum);
    timer.manifest.outputs = {o.out_path};
    if (!o.couplings_path.empty()) {
        if (o.k_vec.size() != 3)
            throw std::invalid_argument("modes: --k kx,ky,kz (1/m) is required for couplings");
        const CouplingTable table =
            lamb_dicke(spectrum, Eigen::Vector3d(o.k_vec[0], o.k_vec[1], o.k_vec[2]), spec);
        io::write_couplings_csv(o.couplings_path, table);
        timer.manifest.outputs.push_back(o.couplings_path);
    }
    if (!o.svg_path.empty()) {
        const auto lines = sideband_positions(spectrum);
        SvgPlot plot(640, 300);
        const double lo = lines.front().detuning_hz / 1e3, hi = lines.back().detuning_hz / 1e3;
        plot.set_view(lo * 1.05, std::min(0.0, hi * 0.95), 0, 1.2);
        plot.frame_and_ticks("red sideband detuning (kHz)", "");
        for (const auto& l : lines)
            plot.vline(l.detuning_hz / 1e3, 0, 1.0 * l.multiplicity, "#1f77b4", 1.2);
        io::write_file_atomic(o.svg_path, plot.finish());
        timer.manifest.outputs.push_back(o.svg_path);
    }
    timer.write(o.out_path);
    return 0;
}

struct RfcheckOpts {
    std::string spec_path;
    std::string check = "single";
    double q = 0.1;
    int n_ions = 8;
    double offset_l0 = 10.0;
    double kick = 1e-3;
    std::uint64_t seed = 1;
    std::string out_path;
    int threads = 0;
    std::vector<std::string> argv;
};

int rf_single(const PotentialSpec& spec, const RfcheckOpts& o);
int rf_crystal(const PotentialSpec& spec, const RfcheckOpts& o);
int rf_offnull(const PotentialSpec& spec, const RfcheckOpts& o);

int cmd_rfcheck(const RfcheckOpts& o) {
    const PotentialSpec spec = load_spec(o.spec_path);
    if (o.check == "single") return rf_single(spec, o);
    if (o.check == "crystal") return rf_crystal(spec, o);
    if (o.check == "offnull") return rf_offnull(spec, o);
    throw std::invalid_argument("rfcheck: unknown check '" + o.check + "'");
}

// Single ion kicked along x: secular peak against the pseudopotential value,
// micromotion sidebands at drive +- secular.
int rf_single(const PotentialSpec& spec, const RfcheckOpts& o) {
    const MathieuSpec mathieu = MathieuSpec::for_targets(spec, o.q);
    const UnitSystem units = UnitSystem::from(spec);
    const Eigen::Vector3d w = secular_frequencies(mathieu);

    RfIntegrationOptions opts;
    const double rf_period = kTwoPi / mathieu.drive_freq;
    opts.dt = rf_period / 100.0;
    opts.record_stride = 20;
    opts.duration = std::ceil(2e-3 / rf_period) * rf_period;
    opts.initial_velocities = PositionMatrix::Zero(1, 3);
    opts.initial_velocities(0, 0) = o.kick * spec.omega_x;

    const RfTrajectory traj = integrate(IonConfiguration::zeros(1), mathieu, units, opts);
    const auto peaks = extract_frequencies_fft(traj, 0);
    if (!o.out_path.empty()) io::write_peaks_csv(o.out_path, peaks, 0);

    const double predicted = w[0] / kTwoPi;
    double secular = 0, best_amp = 0;
    bool lower_sb = false, upper_sb = false;
    const double drive_hz = mathieu.drive_freq / kTwoPi;
    for (const auto& p : peaks) {
        if (p.freq_hz < 0.5 * drive_hz && p.amplitude > best_amp) {
            best_amp = p.amplitude;
            secular = p.freq_hz;
        }
        if (std::abs(p.freq_hz - (drive_hz - predicted)) < 0.02 * predicted) lower_sb = true;
        if (std::abs(p.freq_hz - (drive_hz + predicted)) < 0.02 * predicted) upper_sb = true;
    }
    std::cout << "secular_predicted_khz " << fmt("%.4f", predicted / 1e3) << "\n"
              << "secular_measured_khz " << fmt("%.4f", secular / 1e3) << "\n"
              << "secular_rel_dev " << fmt("%.3e", std::abs(secular - predicted) / predicted)
              << "\n"
              << "sideband_lower " << (lower_sb ? "present" : "missing") << "\n"
              << "sideband_upper " << (upper_sb ? "present" : "missing") << "\n";
    return 0;
}

// Planar crystal kicked out of plane: FFT peak set against the pseudopotential
// out-of-plane block.
int rf_crystal(const PotentialSpec& spec, const RfcheckOpts& o) {
    AnnealSchedule sched;
    sched.seed = o.seed;
    sched.sweeps = 600;
    const IonConfiguration cfg = anneal(o.n_ions, spec, sched);
    const OutOfPlaneBlock block = out_of_plane_block(cfg, spec);

    const MathieuSpec mathieu = MathieuSpec::for_targets(spec, o.q);
    const UnitSystem units = UnitSystem::from(spec);
    RfIntegrationOptions opts;
    const double rf_period = kTwoPi / mathieu.drive_freq;
    opts.dt = rf_period / 100.0;
    opts.record_stride = 20;
    opts.duration = std::ceil(2e-3 / rf_period) * rf_period;
    opts.initial_velocities = PositionMatrix::Zero(o.n_ions, 3);
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < o.n_ions; ++i)
        opts.initial_velocities(i, 0) = o.kick * spec.omega_x * gauss(rng);

    const RfTrajectory traj = integrate(cfg, mathieu, units, opts);
    const auto peaks = extract_frequencies_fft(traj, 0);
    if (!o.out_path.empty()) io::write_peaks_csv(o.out_path, peaks, 0);

    double worst = 0;
    for (int m = 0; m < block.frequencies.size(); ++m) {
        const double predicted = block.frequencies[m] / kTwoPi;
        double best = -1, best_dev = 1e9;
        for (const auto& p : peaks) {
            const double dev = std::abs(p.freq_hz - predicted);
            if (dev < best_dev) {
                best_dev = dev;
                best = p.freq_hz;
            }
        }
        const double rel = best > 0 ? best_dev / predicted : 1.0;
        worst = std::max(worst, rel);
        std::cout << "mode " << m << " predicted_khz " << fmt("%.3f", predicted / 1e3)
                  << " measured_khz " << fmt("%.3f", best / 1e3) << " rel_dev "
                  << fmt("%.3e", rel) << "\n";
    }
    std::cout << "max_rel_dev " << fmt("%.3e", worst) << "\n";
    return 0;
}

// Ion held off the rf null by a dc force: drive-frequency micromotion
// amplitude against the first-order q x / 2 prediction.
int rf_offnull(const PotentialSpec& spec, const RfcheckOpts& o) {
    const MathieuSpec mathieu = MathieuSpec::for_targets(spec, o.q);
    const UnitSystem units = UnitSystem::from(spec);
    const Eigen::Vector3d w = secular_frequencies(mathieu);

    RfIntegrationOptions opts;
    const double rf_period = kTwoPi / mathieu.drive_freq;
    opts.dt = rf_period / 100.0;
    opts.record_stride = 5;
    const double secular_period = kTwoPi / w[0];
    opts.duration = std::ceil(200.0 * secular_period / rf_period) * rf_period;
    opts.static_accel = Eigen::Vector3d(o.offset_l0 * w[0] * w[0], 0, 0);

    IonConfiguration start = IonConfiguration::zeros(1);
    start.positions(0, 0) = o.offset_l0;
    const RfTrajectory traj = integrate(start, mathieu, units, opts);
    const Eigen::MatrixXd amp = micromotion_amplitude(traj, mathieu.drive_freq);

    double mean_x = 0;
    for (std::size_t t = 0; t < traj.n_samples(); ++t) mean_x += traj.position(t, 0, 0);
    mean_x /= static_cast<double>(traj.n_samples());
    const double predicted = o.q * mean_x / 2.0;
    std::cout << "offset_l0 " << fmt("%.4f", mean_x) << "\n"
              << "amplitude_predicted_l0 " << fmt("%.5f", predicted) << "\n"
              << "amplitude_measured_l0 " << fmt("%.5f", amp(0, 0)) << "\n"
              << "rel_dev " << fmt("%.3e", std::abs(amp(0, 0) - predicted) / predicted) << "\n";
    return 0;
}

struct RenderOpts {
    std::string config_path;
    std::string outdir;
    int frames = 1;
    std::uint64_t seed = 1;
    RenderParams params;
    std::vector<std::string> argv;
};

int cmd_render(const RenderOpts& o) {
    const IonConfiguration cfg = io::read_config_csv(o.config_path);
    ManifestTimer timer("render", o.argv);
    timer.manifest.inputs = {o.config_path};
    timer.manifest.seed = o.seed;

    io::FrameSeries series;
    for (int f = 0; f < o.frames; ++f) {
        RenderParams p = o.params;
        p.noise_seed = o.seed + static_cast<std::uint64_t>(f);
        p.exposure_id = f;
        const ImageFrame frame = render(cfg, p);
        char name[32];
        std::snprintf(name, sizeof(name), "frame_%05d.pgm", f);
        io::write_pgm(o.outdir + "/" + name, frame);
        series.files.push_back(name);
        series.exposure_ids.push_back(f);
    }
    json params;
    params["width"] = o.params.width;
    params["height"] = o.params.height;
    params["psf_sigma_px"] = o.params.psf_sigma_px;
    params["scale_px_per_l0"] = o.params.scale_px_per_l0;
    params["peak_counts"] = o.params.peak_counts;
    params["background"] = o.params.background;
    params["seed"] = o.seed;
    series.render_params_json = params.dump();
    const std::string manifest_path = o.outdir + "/series.json";
    io::write_series_manifest(manifest_path, series);
    timer.manifest.outputs = series.files;
    timer.manifest.outputs.push_back(manifest_path);
    timer.write(manifest_path);
    std::cout << "frames " << o.frames << "\n";
    return 0;
}

struct ClassifyOpts {
    std::string series_path;
    int n_basis = 8;
    double eps = 0;
    int min_pts = 5;
    bool center = false;
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
    std::string out_path;
    std::string svg_path;
    std::vector<std::string> argv;
};

void write_cluster_svg(const std::string& path, const std::vector<Eigen::VectorXd>& coeffs,
                       const ClusterLabeling& labeling) {
    // oblique projection of the top-3 coefficient space
    std::vector<std::pair<double, double>> pts(coeffs.size());
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const double c1 = coeffs[i].size() > 0 ? coeffs[i][0] : 0;
        const double c2 = coeffs[i].size() > 1 ? coeffs[i][1] : 0;
        const double c3 = coeffs[i].size() > 2 ? coeffs[i][2] : 0;
        const double x = c1 + 0.35 * c3;
        const double y = c2 + 0.35 * c3;
        pts[i] = {x, y};
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
        ymin = std::min(ymin, y);
        ymax = std::max(ymax, y);
    }
    SvgPlot plot(560, 560);
    plot.set_view(xmin, xmax, ymin, ymax);
    plot.frame_and_ticks("c1 + 0.35 c3", "c2 + 0.35 c3");
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const int l = labeling.labels[i];
        plot.circle(pts[i].first, pts[i].second, 2.0,
                    l == kNoiseLabel ? "#b0b0b0" : kClusterColors[l % 9]);
    }
    io::write_file_atomic(path, plot.finish());
}

int cmd_classify(const ClassifyOpts& o) {
    const io::FrameSeries series = io::read_series_manifest(o.series_path);
    const std::string dir = std::filesystem::path(o.series_path).parent_path().string();
    ManifestTimer timer("classify", o.argv);
    timer.manifest.inputs = {o.series_path};
    timer.manifest.seed = o.seed;

    std::vector<ImageFrame> frames;
    frames.reserve(series.files.size());
    for (const auto& f : series.files)
        frames.push_back(io::read_pgm(dir.empty() ? f : dir + "/" + f));

    const EigenBasis basis = eigenpictures(frames, o.n_basis, o.center, o.seed);
    std::vector<Eigen::VectorXd> coeffs;
    coeffs.reserve(frames.size());
    for (const auto& f : frames) coeffs.push_back(project(f, basis));

    const auto standardized = standardize_coefficients(coeffs);
    const double eps = o.eps > 0 ? o.eps : default_eps(standardized);
    const ClusterLabeling labeling = cluster(standardized, eps, o.min_pts);
    const auto probs = configuration_probabilities(labeling);

    io::write_cluster_report_csv(o.out_path, labeling, probs);
    timer.manifest.outputs = {o.out_path};
    if (!o.svg_path.empty()) {
        write_cluster_svg(o.svg_path, coeffs, labeling);
        timer.manifest.outputs.push_back(o.svg_path);
    }
    timer.write(o.out_path);

    std::cout << "clusters " << labeling.n_clusters << "\n";
    std::cout << "eps " << io::format_double(eps) << "\n";
    for (std::size_t c = 0; c < probs.size(); ++c)
        std::cout << "p_" << c << " " << fmt("%.4f", probs[c]) << "\n";
    int noise = 0;
    for (int l : labeling.labels) noise += l == kNoiseLabel ? 1 : 0;
    std::cout << "noise_frames " << noise << "\n";
    return 0;
}

struct FitpotOpts {
    std::string positions_path;
    std::string spec_path;
    double omega_z_hz = 0;
    std::string out_path;
    std::string svg_path;
    std::vector<std::string> argv;
};

int cmd_fitpot(const FitpotOpts& o) {
    const io::PositionTable table = io::read_positions_csv(o.positions_path);
    ManifestTimer timer("fitpot", o.argv);
    timer.manifest.inputs = {o.positions_path};

    const PlanarMatrix f = coulomb_force_field(table.positions);
    const QuadraticFit fit = fit_quadratic(table.positions, f);
    const ResidualField res = residuals(table.positions, f, fit);

    std::optional<double> scale_um;
    if (o.omega_z_hz > 0 && table.unit == "px") {
        if (o.spec_path.empty())
            throw std::invalid_argument("fitpot: --spec is required for scale calibration");
        const PotentialSpec spec = load_spec(o.spec_path);
        scale_um = calibrate_scale(table.positions, kTwoPi * o.omega_z_hz, spec) * 1e6;
    }
    io::write_file_atomic(o.out_path, io::fit_report_json(fit, res.rms, scale_um));
    timer.manifest.outputs = {o.out_path};

    if (!o.svg_path.empty()) {
        SvgPlot plot(560, 560);
        const double ymax = table.positions.col(0).cwiseAbs().maxCoeff();
        const double zmax = table.positions.col(1).cwiseAbs().maxCoeff();
        const double r = 1.25 * std::max(ymax, zmax);
        plot.set_view(-r, r, -r, r);
        plot.frame_and_ticks("z (" + table.unit + ")", "y (" + table.unit + ")");
        const double fscale = 0.08 * r / f.cwiseAbs().maxCoeff();
        for (int i = 0; i < table.positions.rows(); ++i) {
            const double z = table.positions(i, 1), y = table.positions(i, 0);
            plot.line(z, y, z + fscale * f(i, 1), y + fscale * f(i, 0), "#2ca02c", 1.2);
            plot.circle(z, y, 2.4, "#1f77b4");
        }
        io::write_file_atomic(o.svg_path, plot.finish());
        timer.manifest.outputs.push_back(o.svg_path);
    }
    timer.write(o.out_path);
    std::cout << "xi_inv " << fmt("%.4f", fit.xi_inv) << "\n"
              << "phi " << fmt("%.5f", fit.phi) << "\n"
              << "rms_residual " << fmt("%.6e", res.rms) << "\n";
    if (scale_um) std::cout << "scale_um_per_px " << fmt("%.5f", *scale_um) << "\n";
    return 0;
}

struct VoltsOpts {
    std::string basis_path;
    std::string save_basis_path;
    std::vector<double> target = std::vector<double>(8, 0.0);
    double lambda = -1;     // absolute; negative = use lambda_rel
    double lambda_rel = 1e-3;
    double limit = 10.0;
    std::string out_path;
    std::vector<std::string> argv;
};

int cmd_volts(const VoltsOpts& o) {
    ElectrodeBasisMatrix basis;
    ManifestTimer timer("volts", o.argv);
    if (!o.basis_path.empty()) {
        basis = io::read_basis_csv(o.basis_path);
        timer.manifest.inputs = {o.basis_path};
    } else {
        basis = build_basis(SyntheticTrapGeometry{});
    }
    if (!o.save_basis_path.empty()) {
        io::write_basis_csv(o.save_basis_path, basis);
        timer.manifest.outputs.push_back(o.save_basis_path);
    }

    TargetAction target;
    Eigen::Matrix<double, 8, 1> t;
    for (int i = 0; i < 8; ++i) t[i] = o.target[i];
    target.change = MultipoleCoefficients::from_stacked(t);

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis.response);
    const double lambda =
        o.lambda >= 0 ? o.lambda : o.lambda_rel * svd.singularValues().maxCoeff();
    const VoltageSet v = solve_tikhonov(basis, target, lambda, o.limit);
    io::write_file_atomic(o.out_path, io::solver_report_json(v));
    timer.manifest.outputs.push_back(o.out_path);
    timer.write(o.out_path);

    for (int i = 0; i < v.voltages.size(); ++i)
        std::cout << "v" << i << " " << fmt("%.6f", v.voltages[i]) << "\n";
    std::cout << "residual " << fmt("%.6e", v.residual) << "\n"
              << "lambda " << io::format_double(lambda) << "\n";
    return 0;
}

int cmd_validate(const std::string& path) {
    const auto violations = io::validate_config(path);
    for (const auto& v : violations) std::cout << v << "\n";
    return violations.empty() ? 0 : 1;
}

int cmd_replay(const std::string& manifest_path) {
    const io::RunManifest manifest = io::read_run_manifest(manifest_path);
    return run(manifest.argv);
}

// ---- parse-error suggestions ----------------------------------------------

std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1,
                               prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

void print_suggestion(const CLI::App& app, const std::vector<std::string>& args) {
    std::vector<std::string> known;
    for (const auto* sub : app.get_subcommands({})) {
        known.push_back(sub->get_name());
        for (const auto* opt : sub->get_options())
            known.push_back(opt->get_name());
    }
    for (const auto* opt : app.get_options()) known.push_back(opt->get_name());

    for (const auto& raw : args) {
        std::string token = raw.substr(0, raw.find('='));
        if (token.empty()) continue;
        if (std::find(known.begin(), known.end(), token) != known.end()) continue;
        std::string best;
        std::size_t best_d = 4;
        for (const auto& k : known) {
            const std::size_t d = levenshtein(token, k);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (!best.empty() && (token.rfind("--", 0) == 0 || best_d <= 2)) {
            std::cerr << "hint: did you mean '" << best << "'?\n";
            return;
        }
    }
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"planarion: planar Coulomb crystal simulation and analysis"};
    app.require_subcommand(1);
    int exit_code = 0;

    // aspect
    AspectOpts aspect_opts;
    auto* aspect_cmd = app.add_subcommand("aspect", "Crystal aspect ratio (fluid theory or measured)");
    aspect_cmd->add_option("--xi-inv", aspect_opts.xi_inv, "inverse trap anisotropy omega_z/omega_y");
    aspect_cmd->add_option("--config", aspect_opts.config_path, "configuration CSV (measured zeta)");
    aspect_cmd->add_option("--format", aspect_opts.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    aspect_cmd->callback([&]() {
        if (aspect_opts.config_path.empty() && !(aspect_opts.xi_inv > 0))
            throw CLI::ValidationError("aspect", "give --xi-inv or --config");
        exit_code = cmd_aspect(aspect_opts);
    });

    // trapcalc
    TrapcalcOpts trap_opts;
    auto* trap_cmd = app.add_subcommand("trapcalc", "Drive-frequency bound, unit scales, planarity margin");
    trap_cmd->add_option("--spec", trap_opts.spec_path, "trap spec JSON")->required();
    trap_cmd->add_option("--qmax", trap_opts.qmax, "Mathieu q bound");
    trap_cmd->add_option("--n", trap_opts.n_ions, "ion count for the planarity criterion");
    trap_cmd->add_option("--dv", trap_opts.rel_dv, "relative rf voltage change");
    trap_cmd->add_option("--format", trap_opts.format, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    trap_cmd->callback([&]() { exit_code = cmd_trapcalc(trap_opts); });

    // anneal
    AnnealOpts anneal_opts;
    auto* anneal_cmd = app.add_subcommand("anneal", "Simulated-annealing crystal search");
    anneal_cmd->add_option("--n", anneal_opts.n_ions, "ion count")->required();
    anneal_cmd->add_option("--spec", anneal_opts.spec_path, "trap spec JSON")->required();
    anneal_cmd->add_option("--out", anneal_opts.out_path, "output configuration CSV")->required();
    anneal_cmd->add_option("--seed", anneal_opts.schedule.seed, "random seed");
    anneal_cmd->add_option("--start-temp", anneal_opts.schedule.start_temp, "start temperature (E0)");
    anneal_cmd->add_option("--end-temp", anneal_opts.schedule.end_temp, "end temperature (E0)");
    anneal_cmd->add_option("--sweeps", anneal_opts.schedule.sweeps, "annealing sweeps");
    anneal_cmd->add_option("--step", anneal_opts.schedule.step_scale, "trial step scale (l0)");
    anneal_cmd->callback([&]() {
        anneal_opts.argv = args;
        exit_code = cmd_anneal(anneal_opts);
    });

    // sweep
    SweepOpts sweep_opts;
    auto* sweep_cmd = app.add_subcommand("sweep", "Configuration census versus trap anisotropy");
    sweep_cmd->add_option("--n", sweep_opts.n_ions, "ion count")->required();
    sweep_cmd->add_option("--spec", sweep_opts.spec_path, "base trap spec JSON")->required();
    sweep_cmd->add_option("--xi", sweep_opts.xi_values, "anisotropy values")->required()->delimiter(',');
    sweep_cmd->add_option("--runs", sweep_opts.runs, "annealing runs per anisotropy");
    sweep_cmd->add_option("--out", sweep_opts.out_path, "output CSV")->required();
    sweep_cmd->add_option("--svg", sweep_opts.svg_path, "gap curve SVG");
    sweep_cmd->add_option("--seed", sweep_opts.schedule.seed, "random seed");
    sweep_cmd->add_option("--sweeps", sweep_opts.schedule.sweeps, "annealing sweeps");
    sweep_cmd->add_option("--threads", sweep_opts.threads, "worker threads (0 = auto)");
    sweep_cmd->callback([&]() {
        sweep_opts.argv = args;
        exit_code = cmd_sweep(sweep_opts);
    });

    // modes
    ModesOpts modes_opts;
    auto* modes_cmd = app.add_subcommand("modes", "Pseudopotential normal modes");
    modes_cmd->add_option("--config", modes_opts.config_path, "configuration CSV")->required();
    modes_cmd->add_option("--spec", modes_opts.spec_path, "trap spec JSON (default: sidecar)");
    modes_cmd->add_option("--out", modes_opts.out_path, "spectrum CSV")->required();
    modes_cmd->add_option("--couplings", modes_opts.couplings_path, "Lamb-Dicke table CSV");
    modes_cmd->add_option("--k", modes_opts.k_vec, "probe wavevector kx,ky,kz (1/m)")->delimiter(',');
    modes_cmd->add_option("--svg", modes_opts.svg_path, "sideband line spectrum SVG");
    modes_cmd->add_flag("--oop", modes_opts.oop_only, "print the out-of-plane block frequencies");
    modes_cmd->callback([&]() {
        modes_opts.argv = args;
        exit_code = cmd_modes(modes_opts);
    });

    // rfcheck
    RfcheckOpts rf_opts;
    auto* rf_cmd = app.add_subcommand("rfcheck", "Full rf dynamics cross-checks");
    rf_cmd->add_option("--spec", rf_opts.spec_path, "secular target spec JSON")->required();
    rf_cmd->add_option("--check", rf_opts.check, "single|crystal|offnull");
    rf_cmd->add_option("--q", rf_opts.q, "radial Mathieu q");
    rf_cmd->add_option("--n", rf_opts.n_ions, "ion count (crystal check)");
    rf_cmd->add_option("--offset", rf_opts.offset_l0, "static displacement (l0, offnull check)");
    rf_cmd->add_option("--kick", rf_opts.kick, "kick amplitude (l0)");
    rf_cmd->add_option("--seed", rf_opts.seed, "random seed");
    rf_cmd->add_option("--out", rf_opts.out_path, "peak list CSV");
    rf_cmd->add_option("--threads", rf_opts.threads, "worker threads (0 = auto)");
    rf_cmd->callback([&]() {
        rf_opts.argv = args;
        exit_code = cmd_rfcheck(rf_opts);
    });

    // render
    RenderOpts render_opts;
    auto* render_cmd = app.add_subcommand("render", "Synthetic crystal image frames");
    render_cmd->add_option("--config", render_opts.config_path, "configuration CSV")->required();
    render_cmd->add_option("--outdir", render_opts.outdir, "output directory")->required();
    render_cmd->add_option("--frames", render_opts.frames, "number of frames");
    render_cmd->add_option("--seed", render_opts.seed, "noise seed base");
    render_cmd->add_option("--width", render_opts.params.width, "frame width (px)");
    render_cmd->add_option("--height", render_opts.params.height, "frame height (px)");
    render_cmd->add_option("--sigma", render_opts.params.psf_sigma_px, "PSF sigma (px)");
    render_cmd->add_option("--scale", render_opts.params.scale_px_per_l0, "px per l0");
    render_cmd->add_option("--peak", render_opts.params.peak_counts, "peak counts per ion");
    render_cmd->add_option("--background", render_opts.params.background, "background counts");
    render_cmd->callback([&]() {
        render_opts.argv = args;
        exit_code = cmd_render(render_opts);
    });

    // classify
    ClassifyOpts classify_opts;
    auto* classify_cmd = app.add_subcommand("classify", "Eigenpicture + DBSCAN configuration analysis");
    classify_cmd->add_option("--series", classify_opts.series_path, "series manifest JSON")->required();
    classify_cmd->add_option("--n", classify_opts.n_basis, "eigenpicture count");
    classify_cmd->add_option("--eps", classify_opts.eps, "DBSCAN eps (0 = auto)");
    classify_cmd->add_option("--min-pts", classify_opts.min_pts, "DBSCAN min_pts");
    classify_cmd->add_flag("--center", classify_opts.center, "mean-center frames before PCA");
    classify_cmd->add_option("--seed", classify_opts.seed, "PCA iteration seed");
    classify_cmd->add_option("--out", classify_opts.out_path, "cluster report CSV")->required();
    classify_cmd->add_option("--svg", classify_opts.svg_path, "coefficient scatter SVG");
    classify_cmd->callback([&]() {
        classify_opts.argv = args;
        exit_code = cmd_classify(classify_opts);
    });

    // fitpot
    FitpotOpts fitpot_opts;
    auto* fitpot_cmd = app.add_subcommand("fitpot", "Trap potential fit from ion positions");
    fitpot_cmd->add_option("--positions", fitpot_opts.positions_path, "positions CSV")->required();
    fitpot_cmd->add_option("--spec", fitpot_opts.spec_path, "trap spec JSON (for calibration)");
    fitpot_cmd->add_option("--omega-z", fitpot_opts.omega_z_hz, "known omega_z / 2pi (Hz)");
    fitpot_cmd->add_option("--out", fitpot_opts.out_path, "fit report JSON")->required();
    fitpot_cmd->add_option("--svg", fitpot_opts.svg_path, "force field SVG");
    fitpot_cmd->callback([&]() {
        fitpot_opts.argv = args;
        exit_code = cmd_fitpot(fitpot_opts);
    });

    // volts
    VoltsOpts volts_opts;
    auto* volts_cmd = app.add_subcommand("volts", "Tikhonov electrode-voltage solution");
    volts_cmd->add_option("--basis", volts_opts.basis_path, "electrode basis CSV (default: synthetic)");
    volts_cmd->add_option("--save-basis", volts_opts.save_basis_path, "write the basis CSV");
    volts_cmd->add_option("--ex", volts_opts.target[0], "target Ex (V/m)");
    volts_cmd->add_option("--ey", volts_opts.target[1], "target Ey (V/m)");
    volts_cmd->add_option("--ez", volts_opts.target[2], "target Ez (V/m)");
    volts_cmd->add_option("--u1", volts_opts.target[3], "target U1 (V/m^2)");
    volts_cmd->add_option("--u2", volts_opts.target[4], "target U2 (V/m^2)");
    volts_cmd->add_option("--u3", volts_opts.target[5], "target U3 (V/m^2)");
    volts_cmd->add_option("--u4", volts_opts.target[6], "target U4 (V/m^2)");
    volts_cmd->add_option("--u5", volts_opts.target[7], "target U5 (V/m^2)");
    volts_cmd->add_option("--lambda", volts_opts.lambda, "Tikhonov lambda (absolute)");
    volts_cmd->add_option("--lambda-rel", volts_opts.lambda_rel, "lambda relative to sigma_max");
    volts_cmd->add_option("--limit", volts_opts.limit, "voltage compliance limit (V)");
    volts_cmd->add_option("--out", volts_opts.out_path, "solver report JSON")->required();
    volts_cmd->callback([&]() {
        volts_opts.argv = args;
        exit_code = cmd_volts(volts_opts);
    });

    // validate
    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate", "Schema check of an input file");
    validate_cmd->add_option("--file", validate_path, "file to check")->required();
    validate_cmd->callback([&]() { exit_code = cmd_validate(validate_path); });

    // replay
    std::string replay_path;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded manifest");
    replay_cmd->add_option("--manifest", replay_path, "run manifest JSON")->required();
    replay_cmd->callback([&]() { exit_code = cmd_replay(replay_path); });

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // help / version
        app.exit(e);
        print_suggestion(app, args);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}

int run(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(argc > 0 ? argc - 1 : 0);
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace planarion::cli
