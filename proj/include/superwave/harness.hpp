#pragma once

// Configuration-driven job runner: flat key = value configs, named figure
// jobs, per-backend CSV tables and a JSON manifest per job.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "superwave/dipole_solver.hpp"
#include "superwave/lattice.hpp"
#include "superwave/ray_optics.hpp"

namespace superwave {

inline constexpr int kManifestSchemaVersion = 1;

enum class JobKind { map, scaling, scan, design, ray, resonance };
enum class Backend { analytic, dipole, ray };

std::string to_string(JobKind kind);
std::string to_string(Backend backend);
JobKind parse_job_kind(const std::string& text);

struct JobConfig {
    std::string name = "job";
    JobKind kind = JobKind::map;

    // Stack template. Scan and design jobs accept several lattices.
    std::vector<Lattice> lattices{Lattice::square};
    bool shifted = false;
    int n_z = 2;
    PatchShape patch = PatchShape::rhombus;
    // Replace each (a_z, a) by the exact resonance nearest to it (scaling,
    // resonance and ray jobs).
    bool snap_resonance = false;

    // Sweep axes. n counts atoms per layer and must be a perfect square.
    std::vector<double> a_values;
    std::vector<double> a_z_values;
    std::vector<int> n_values;
    std::vector<double> w_values;
    WaistRule::Kind waist = WaistRule::Kind::relative;

    std::vector<Backend> backends;  // empty: every backend valid for the kind

    // Design search.
    double a_min = 0.0;  // 0: lower edge of the two-shell window
    double a_max = 0.0;  // 0: upper edge
    double a_z_max = 10.0;

    // Scaling fits.
    double fit_n_min = 0.0;
    int fit_min_points = 4;

    // Ray engine toggles.
    ShiftPhase shift_phase = ShiftPhase::per_bounce;
    Splitting splitting = Splitting::per_order;

    // Tolerance overrides.
    double residual_tolerance = 1e-10;
    double integer_tolerance = 5e-3;
    double gamma_diff_tolerance = 1e-8;
    double eigen_tolerance = 1e-6;

    // Not part of the job identity.
    std::string out_dir = "out";
    int jobs = 1;

    // Throws ValidationError.
    void validate() const;
    std::vector<Backend> effective_backends() const;
    // Every result-affecting key in fixed order, one "key = value" per line.
    std::string canonical() const;
    // FNV-1a 64 of canonical(), as 16 hex digits.
    std::string hash() const;
};

// Keys: see README. Unknown keys, malformed values and empty axes throw
// ValidationError. Lists are comma-separated; "start:stop:count" expands to
// evenly spaced values including both ends.
JobConfig parse_job_config(const std::string& text, const std::string& origin = "<config>",
                           JobConfig base = {});
JobConfig load_job_config(const std::string& path, JobConfig base = {});
// Applies one key = value pair on top of an existing config.
void apply_config_key(JobConfig& config, const std::string& key, const std::string& value);

std::vector<std::string> builtin_job_names();
// Throws ValidationError for an unknown name.
JobConfig builtin_job(const std::string& name);

uint64_t fnv1a64(const std::string& text);

struct Ridge {
    int i_a = 0;
    int i_a_z = 0;
    double a = 0.0;
    double a_z = 0.0;
    double value = 0.0;
    // Chebyshev distance in grid indices from the maximum to the nearest
    // node an analytic curve passes through.
    int cell_distance = 0;
    bool on_curve = false;
};

// Interior strict 8-neighbour local maxima of an a_z-major map, each
// compared with the resonant curves of the lattice/shift branch. Points with
// ok[i] == false are neither maxima nor neighbours that block one.
std::vector<Ridge> map_ridges(Lattice lattice, bool shifted, const std::vector<double>& a_grid,
                              const std::vector<double>& a_z_grid, const std::vector<double>& values,
                              const std::vector<bool>& ok);

struct RunOptions {
    bool force = false;
    std::ostream* log = nullptr;
};

struct RunReport {
    std::string manifest_path;
    nlohmann::json manifest;
    std::vector<std::string> outputs;
    bool skipped = false;
    int failures = 0;

    int exit_code() const { return failures > 0 ? 3 : 0; }
};

// Runs the sweep for every selected backend and writes
// <out>/<name>_<backend>.csv, extra tables, and <out>/<name>_manifest.json.
// A job whose manifest already records the same hash, a clean run and
// existing outputs is skipped unless forced.
RunReport run_job(const JobConfig& config, const RunOptions& options = {});

}  // namespace superwave
