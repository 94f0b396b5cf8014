#include "planarion/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace planarion::io {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& contents) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, target);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

double parse_double(const std::string& s, const std::string& context) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("malformed number '" + s + "' " + context);
    }
}

void append_le64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double read_le64(const std::string& data, std::size_t offset) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[offset + b])) << (8 * b);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

} // namespace

void write_config_csv(const std::string& path, const IonConfiguration& config,
                      const PotentialSpec& spec, std::uint64_t seed) {
    std::string out = "ion,x,y,z\n";
    for (int i = 0; i < config.n_ions(); ++i) {
        out += std::to_string(i);
        for (int d = 0; d < 3; ++d) out += "," + format_double(config.positions(i, d));
        out += "\n";
    }
    write_file_atomic(path, out);
    json sidecar;
    sidecar["spec"] = json::parse(spec.to_json());
    sidecar["seed"] = seed;
    write_file_atomic(path + ".meta.json", sidecar.dump(2) + "\n");
}

IonConfiguration read_config_csv(const std::string& path) {
    const auto lines = csv_lines(read_file(path));
    if (lines.empty() || split_csv_line(lines[0]) != std::vector<std::string>{"ion", "x", "y", "z"})
        throw std::runtime_error(path + ": expected header ion,x,y,z");
    IonConfiguration c;
    c.positions.resize(static_cast<Eigen::Index>(lines.size()) - 1, 3);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_csv_line(lines[r]);
        if (f.size() != 4)
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) + " needs 4 columns");
        const std::string ctx = "at " + path + ":" + std::to_string(r + 1);
        for (int d = 0; d < 3; ++d)
            c.positions(static_cast<Eigen::Index>(r) - 1, d) = parse_double(f[d + 1], ctx);
    }
    c.validate();
    return c;
}

std::optional<PotentialSpec> read_config_sidecar(const std::string& path) {
    const std::string meta = path + ".meta.json";
    if (!fs::exists(meta)) return std::nullopt;
    const json j = json::parse(read_file(meta));
    return PotentialSpec::from_json(j.at("spec").dump());
}

void write_gap_curve_csv(const std::string& path, const GapCurve& curve) {
    std::string out = "xi,class_id,energy_e0,gap_mK,occurrences\n";
    for (std::size_t i = 0; i < curve.anisotropies.size(); ++i) {
        for (const auto& e : curve.classes[i]) {
            out += format_double(curve.anisotropies[i]) + "," + std::to_string(e.class_id) + "," +
                   format_double(e.energy_e0) + "," + format_double(e.gap_mK) + "," +
                   std::to_string(e.occurrences) + "\n";
        }
    }
    write_file_atomic(path, out);
}

void write_spectrum_csv(const std::string& path, const ModeSpectrum& spectrum) {
    std::string out = "mode,freq_hz,polarization\n";
    for (int m = 0; m < spectrum.n_modes(); ++m) {
        out += std::to_string(m) + "," +
               format_double(spectrum.frequencies[m] / (2.0 * constants::pi)) + "," +
               (spectrum.labels[m] == ModePolarization::OutOfPlane ? "out_of_plane" : "in_plane") +
               "\n";
    }
    write_file_atomic(path, out);
}

void write_couplings_csv(const std::string& path, const CouplingTable& table) {
    std::string out = "ion,mode,eta\n";
    for (int i = 0; i < table.eta.rows(); ++i)
        for (int m = 0; m < table.eta.cols(); ++m) {
            if (table.excluded[m]) continue;
            out += std::to_string(i) + "," + std::to_string(m) + "," +
                   format_double(table.eta(i, m)) + "\n";
        }
    write_file_atomic(path, out);
}

void write_trajectory(const std::string& path, const RfTrajectory& traj) {
    json header;
    header["n_samples"] = traj.n_samples();
    header["n_ions"] = traj.n_ions;
    header["dt"] = traj.dt;
    header["mathieu"] = json::parse(traj.mathieu.to_json());
    const std::string htext = header.dump();

    std::string out = "PLNTRJ01";
    const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((hlen >> (8 * b)) & 0xff));
    out += htext;
    for (double t : traj.times) append_le64(out, t);
    for (double p : traj.positions) append_le64(out, p);
    for (double v : traj.velocities) append_le64(out, v);
    write_file_atomic(path, out);
}

RfTrajectory read_trajectory(const std::string& path) {
    const std::string data = read_file(path);
    if (data.size() < 12 || data.substr(0, 8) != "PLNTRJ01")
        throw std::runtime_error(path + ": not a trajectory file");
    std::uint32_t hlen = 0;
    for (int b = 0; b < 4; ++b)
        hlen |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[8 + b])) << (8 * b);
    const json header = json::parse(data.substr(12, hlen));
    RfTrajectory traj;
    const std::size_t n_samples = header.at("n_samples").get<std::size_t>();
    traj.n_ions = header.at("n_ions").get<int>();
    traj.dt = header.at("dt").get<double>();
    traj.mathieu = MathieuSpec::from_json(header.at("mathieu").dump());

    std::size_t off = 12 + hlen;
    const std::size_t n_coords = n_samples * traj.n_ions * 3;
    if (data.size() < off + 8 * (n_samples + 2 * n_coords))
        throw std::runtime_error(path + ": truncated trajectory payload");
    traj.times.resize(n_samples);
    traj.positions.resize(n_coords);
    traj.velocities.resize(n_coords);
    for (auto& t : traj.times) t = read_le64(data, off), off += 8;
    for (auto& p : traj.positions) p = read_le64(data, off), off += 8;
    for (auto& v : traj.velocities) v = read_le64(data, off), off += 8;
    return traj;
}

void write_peaks_csv(const std::string& path, const std::vector<SpectralPeak>& peaks, int axis) {
    static const char* axis_names[3] = {"x", "y", "z"};
    std::string out = "ion,axis,freq_hz,amplitude\n";
    for (const auto& p : peaks)
        out += std::to_string(p.ion) + std::string(",") + axis_names[axis] + "," +
               format_double(p.freq_hz) + "," + format_double(p.amplitude) + "\n";
    write_file_atomic(path, out);
}

void write_pgm(const std::string& path, const ImageFrame& frame) {
    std::string out = "P5\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) +
                      "\n65535\n";
    for (int k = 0; k < frame.n_pixels(); ++k) {
        const double clamped = std::clamp(frame.pixels[k], 0.0, 65535.0);
        const auto v = static_cast<std::uint16_t>(std::lround(clamped));
        out.push_back(static_cast<char>((v >> 8) & 0xff)); // big-endian per PGM
        out.push_back(static_cast<char>(v & 0xff));
    }
    write_file_atomic(path, out);
}

ImageFrame read_pgm(const std::string& path) {
    const std::string data = read_file(path);
    std::istringstream ss(data);
    std::string magic;
    ss >> magic;
    if (magic != "P5") throw std::runtime_error(path + ": not a binary PGM (P5) file");
    int w = 0, h = 0, maxval = 0;
    auto next_int = [&](int& v) {
        // skip whitespace and # comments
        for (;;) {
            const int c = ss.peek();
            if (c == '#') {
                std::string skip;
                std::getline(ss, skip);
            } else if (std::isspace(c)) {
                ss.get();
            } else {
                break;
            }
        }
        ss >> v;
    };
    next_int(w);
    next_int(h);
    next_int(maxval);
    if (!ss || w <= 0 || h <= 0 || maxval != 65535)
        throw std::runtime_error(path + ": unsupported PGM header (need maxval 65535)");
    ss.get(); // single whitespace after maxval
    const std::size_t off = static_cast<std::size_t>(ss.tellg());
    const std::size_t need = static_cast<std::size_t>(w) * h * 2;
    if (data.size() < off + need) throw std::runtime_error(path + ": truncated PGM payload");

    ImageFrame frame;
    frame.width = w;
    frame.height = h;
    frame.pixels.resize(w * h);
    for (int k = 0; k < w * h; ++k) {
        const auto hi = static_cast<unsigned char>(data[off + 2 * k]);
        const auto lo = static_cast<unsigned char>(data[off + 2 * k + 1]);
        frame.pixels[k] = hi * 256 + lo;
    }
    return frame;
}

void write_series_manifest(const std::string& path, const FrameSeries& series) {
    json j;
    j["frames"] = series.files;
    j["exposure_ids"] = series.exposure_ids;
    j["render_params"] =
        series.render_params_json.empty() ? json({}) : json::parse(series.render_params_json);
    write_file_atomic(path, j.dump(2) + "\n");
}

FrameSeries read_series_manifest(const std::string& path) {
    const json j = json::parse(read_file(path));
    FrameSeries s;
    s.files = j.at("frames").get<std::vector<std::string>>();
    s.exposure_ids = j.at("exposure_ids").get<std::vector<int>>();
    s.render_params_json = j.at("render_params").dump();
    return s;
}

void write_cluster_report_csv(const std::string& path, const ClusterLabeling& labeling,
                              const std::vector<double>& probabilities) {
    std::string out = "frame,cluster,p_i\n";
    for (std::size_t f = 0; f < labeling.labels.size(); ++f) {
        const int l = labeling.labels[f];
        out += std::to_string(f) + "," +
               (l == kNoiseLabel ? std::string("NOISE") : std::to_string(l)) + "," +
               (l == kNoiseLabel ? std::string("0") : format_double(probabilities[l])) + "\n";
    }
    write_file_atomic(path, out);
}

PositionTable read_positions_csv(const std::string& path) {
    const auto lines = csv_lines(read_file(path));
    if (lines.empty()) throw std::runtime_error(path + ": empty positions file");
    const auto header = split_csv_line(lines[0]);
    PositionTable table;
    if (header == std::vector<std::string>{"ion", "y_px", "z_px"})
        table.unit = "px";
    else if (header == std::vector<std::string>{"ion", "y_um", "z_um"})
        table.unit = "um";
    else
        throw std::runtime_error(path + ": expected header ion,y_px,z_px or ion,y_um,z_um");
    table.positions.resize(static_cast<Eigen::Index>(lines.size()) - 1, 2);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_csv_line(lines[r]);
        if (f.size() != 3)
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) + " needs 3 columns");
        const std::string ctx = "at " + path + ":" + std::to_string(r + 1);
        table.positions(static_cast<Eigen::Index>(r) - 1, 0) = parse_double(f[1], ctx);
        table.positions(static_cast<Eigen::Index>(r) - 1, 1) = parse_double(f[2], ctx);
    }
    return table;
}

std::string fit_report_json(const QuadraticFit& fit, double rms_residual,
                            std::optional<double> scale_um_per_px) {
    json j;
    j["alpha"] = fit.alpha;
    j["beta"] = fit.beta;
    j["gamma"] = fit.gamma;
    j["y0"] = fit.y0;
    j["z0"] = fit.z0;
    j["phi"] = fit.phi;
    j["xi_inv"] = fit.xi_inv;
    if (scale_um_per_px)
        j["scale_um_per_px"] = *scale_um_per_px;
    else
        j["scale_um_per_px"] = nullptr;
    j["rms_residual"] = rms_residual;
    return j.dump(2) + "\n";
}

void write_basis_csv(const std::string& path, const ElectrodeBasisMatrix& basis) {
    std::string out = "electrode,term,value\n";
    for (int e = 0; e < basis.n_electrodes(); ++e)
        for (int t = 0; t < 8; ++t)
            out += std::to_string(e) + "," + kMultipoleTermNames[t] + "," +
                   format_double(basis.response(t, e)) + "\n";
    write_file_atomic(path, out);
}

ElectrodeBasisMatrix read_basis_csv(const std::string& path) {
    const auto lines = csv_lines(read_file(path));
    if (lines.empty() ||
        split_csv_line(lines[0]) != std::vector<std::string>{"electrode", "term", "value"})
        throw std::runtime_error(path + ":1: expected header electrode,term,value");
    int max_electrode = -1;
    std::vector<std::tuple<int, int, double>> entries;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto f = split_csv_line(lines[r]);
        const std::string where = path + ":" + std::to_string(r + 1);
        if (f.size() != 3) throw std::runtime_error(where + ": need 3 columns");
        int term = -1;
        for (int t = 0; t < 8; ++t)
            if (f[1] == kMultipoleTermNames[t]) term = t;
        if (term < 0) throw std::runtime_error(where + ": unknown term '" + f[1] + "'");
        int electrode;
        try {
            electrode = std::stoi(f[0]);
        } catch (const std::exception&) {
            throw std::runtime_error(where + ": malformed electrode index '" + f[0] + "'");
        }
        if (electrode < 0) throw std::runtime_error(where + ": negative electrode index");
        entries.emplace_back(electrode, term, parse_double(f[2], "at " + where));
        max_electrode = std::max(max_electrode, electrode);
    }
    if (max_electrode < 0) throw std::runtime_error(path + ": no coefficient rows");
    ElectrodeBasisMatrix basis;
    basis.response = Eigen::Matrix<double, 8, Eigen::Dynamic>::Zero(8, max_electrode + 1);
    for (const auto& [e, t, v] : entries) basis.response(t, e) = v;
    return basis;
}

std::string solver_report_json(const VoltageSet& solution) {
    json j;
    j["voltages"] = std::vector<double>(solution.voltages.data(),
                                        solution.voltages.data() + solution.voltages.size());
    j["residual"] = solution.residual;
    j["singular_values"] =
        std::vector<double>(solution.singular_values.data(),
                            solution.singular_values.data() + solution.singular_values.size());
    return j.dump(2) + "\n";
}

void write_run_manifest(const std::string& path, const RunManifest& manifest) {
    json j;
    j["command"] = manifest.command;
    j["argv"] = manifest.argv;
    j["inputs"] = manifest.inputs;
    j["outputs"] = manifest.outputs;
    j["seed"] = manifest.seed;
    j["version"] = manifest.version;
    j["duration_s"] = manifest.duration_s;
    write_file_atomic(path, j.dump(2) + "\n");
}

RunManifest read_run_manifest(const std::string& path) {
    const json j = json::parse(read_file(path));
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.inputs = j.at("inputs").get<std::vector<std::string>>();
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.duration_s = j.at("duration_s").get<double>();
    return m;
}

std::vector<std::string> validate_config(const std::string& path) {
    std::vector<std::string> violations;
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw std::runtime_error(e.what()); // I/O error, not a schema violation
    }

    const std::string ext = fs::path(path).extension().string();
    if (ext == ".json") {
        json j;
        try {
            j = json::parse(text);
        } catch (const std::exception& e) {
            violations.push_back(std::string("JSON parse error: ") + e.what());
            return violations;
        }
        if (j.contains("omega_x_hz") || j.contains("omega_y_hz") || j.contains("omega_z_hz")) {
            for (const char* key : {"omega_x_hz", "omega_y_hz", "omega_z_hz"}) {
                if (!j.contains(key))
                    violations.push_back(std::string("missing field ") + key);
                else if (!j[key].is_number() || !(j[key].get<double>() > 0))
                    violations.push_back(std::string(key) + " must be a positive frequency in Hz");
            }
            if (!j.contains("mass_amu") || !j["mass_amu"].is_number() ||
                !(j["mass_amu"].get<double>() > 0))
                violations.push_back("mass_amu must be a positive number");
            if (!j.contains("charge_e") || !j["charge_e"].is_number() ||
                j["charge_e"].get<double>() == 0)
                violations.push_back("charge_e must be a nonzero number");
        } else if (j.contains("drive_hz")) {
            if (!j["drive_hz"].is_number() || !(j["drive_hz"].get<double>() > 0))
                violations.push_back("drive_hz must be a positive frequency in Hz");
            for (const char* key : {"q", "a"}) {
                if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
                    violations.push_back(std::string(key) + " must be an array of 3 numbers");
            }
            if (violations.empty()) {
                for (int d = 0; d < 3; ++d) {
                    const double q = j["q"][d].get<double>();
                    const double a = j["a"][d].get<double>();
                    if (0.5 * q * q + a < 0)
                        violations.push_back("unstable axis " + std::to_string(d) +
                                             ": q^2/2 + a < 0");
                }
            }
        } else {
            violations.push_back("unrecognized JSON document (expected a trap or drive spec)");
        }
        return violations;
    }

    if (ext == ".csv") {
        const auto lines = csv_lines(text);
        if (lines.empty()) {
            violations.push_back("empty CSV file");
            return violations;
        }
        const auto header = split_csv_line(lines[0]);
        if (header == std::vector<std::string>{"ion", "x", "y", "z"} ||
            header == std::vector<std::string>{"ion", "y_px", "z_px"} ||
            header == std::vector<std::string>{"ion", "y_um", "z_um"}) {
            std::set<long> seen;
            const std::size_t ncols = header.size();
            for (std::size_t r = 1; r < lines.size(); ++r) {
                const auto f = split_csv_line(lines[r]);
                const std::string row = "row " + std::to_string(r + 1);
                if (f.size() != ncols) {
                    violations.push_back(row + ": expected " + std::to_string(ncols) + " columns");
                    continue;
                }
                long ion = -1;
                try {
                    ion = std::stol(f[0]);
                } catch (const std::exception&) {
                    violations.push_back(row + ": malformed ion index '" + f[0] + "'");
                    continue;
                }
                if (!seen.insert(ion).second)
                    violations.push_back(row + ": duplicate ion index " + std::to_string(ion));
                for (std::size_t c = 1; c < ncols; ++c) {
                    try {
                        const double v = std::stod(f[c]);
                        if (!std::isfinite(v))
                            violations.push_back(row + ": non-finite value in " + header[c]);
                    } catch (const std::exception&) {
                        violations.push_back(row + ": malformed number in " + header[c]);
                    }
                }
            }
        } else {
            violations.push_back("unrecognized CSV header");
        }
        return violations;
    }

    violations.push_back("unrecognized file type " + ext);
    return violations;
}

} // namespace planarion::io
