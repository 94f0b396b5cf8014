#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "planarion/equilibrium.hpp"
#include "planarion/imaging.hpp"
#include "planarion/modes.hpp"
#include "planarion/potfit.hpp"
#include "planarion/rfdynamics.hpp"
#include "planarion/voltages.hpp"

namespace planarion::io {

/// Write a file atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

/// Shortest-round-trip decimal formatting used by every text format.
std::string format_double(double v);

// --- ion configurations: CSV `ion,x,y,z` in l0 units, JSON sidecar
//     `<path>.meta.json` with the PotentialSpec and seed -----------------------
void write_config_csv(const std::string& path, const IonConfiguration& config,
                      const PotentialSpec& spec, std::uint64_t seed);
IonConfiguration read_config_csv(const std::string& path);
std::optional<PotentialSpec> read_config_sidecar(const std::string& path);

// --- sweep results: CSV `xi,class_id,energy_e0,gap_mK,occurrences` -----------
void write_gap_curve_csv(const std::string& path, const GapCurve& curve);

// --- mode spectra: CSV `mode,freq_hz,polarization`; couplings `ion,mode,eta` -
void write_spectrum_csv(const std::string& path, const ModeSpectrum& spectrum);
void write_couplings_csv(const std::string& path, const CouplingTable& table);

// --- rf trajectories: little-endian float64 record with a JSON header --------
void write_trajectory(const std::string& path, const RfTrajectory& traj);
RfTrajectory read_trajectory(const std::string& path);

// --- spectral peaks: CSV `ion,axis,freq_hz,amplitude` ------------------------
void write_peaks_csv(const std::string& path, const std::vector<SpectralPeak>& peaks,
                     int axis);

// --- frames: binary PGM (P5, maxval 65535, big-endian samples) ---------------
void write_pgm(const std::string& path, const ImageFrame& frame);
ImageFrame read_pgm(const std::string& path);

/// Series manifest: JSON listing frame files, exposure ids, render parameters.
struct FrameSeries {
    std::vector<std::string> files;
    std::vector<int> exposure_ids;
    std::string render_params_json; // verbatim parameter block
};
void write_series_manifest(const std::string& path, const FrameSeries& series);
FrameSeries read_series_manifest(const std::string& path);

// --- cluster report: CSV `frame,cluster,p_i` ---------------------------------
void write_cluster_report_csv(const std::string& path, const ClusterLabeling& labeling,
                              const std::vector<double>& probabilities);

// --- potential-fit input/output ----------------------------------------------
/// Positions CSV `ion,y_px,z_px` or `ion,y_um,z_um`; returns the unit suffix.
struct PositionTable {
    PlanarMatrix positions;
    std::string unit; // "px" or "um"
};
PositionTable read_positions_csv(const std::string& path);
std::string fit_report_json(const QuadraticFit& fit, double rms_residual,
                            std::optional<double> scale_um_per_px);

// --- electrode basis: CSV `electrode,term,value` ------------------------------
void write_basis_csv(const std::string& path, const ElectrodeBasisMatrix& basis);
ElectrodeBasisMatrix read_basis_csv(const std::string& path);
std::string solver_report_json(const VoltageSet& solution);

// --- run manifests -------------------------------------------------------------
struct RunManifest {
    std::string command;
    std::vector<std::string> argv; // resolved arguments, command first
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::string version;
    double duration_s = 0;
};
void write_run_manifest(const std::string& path, const RunManifest& manifest);
RunManifest read_run_manifest(const std::string& path);

/// Schema check of a known input file (.json spec/mathieu, .csv configuration
/// or positions). Returns violations; empty = valid.
std::vector<std::string> validate_config(const std::string& path);

} // namespace planarion::io
