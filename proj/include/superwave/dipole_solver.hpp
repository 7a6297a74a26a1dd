#pragma once

// Coupled-dipole steady state of finite multilayer arrays under Gaussian
// drive, and reflectivity extraction by target-mode overlap.

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "superwave/greens.hpp"
#include "superwave/lattice.hpp"
#include "superwave/overlap.hpp"
#include "superwave/shifted_solver.hpp"

namespace superwave {

struct SolverOptions {
    // Dense storage for the interaction matrix and its Hessenberg reduction.
    std::size_t memory_budget_bytes = std::size_t{3} << 30;
    double residual_tolerance = 1e-10;
};

// Bytes the solver needs for `atoms` dipoles (matrix, reduction and workspace).
std::size_t solver_memory_estimate(std::size_t atoms, bool shifted);

// M0 = -1/2 I + i G with G_jl = g(r_j - r_l); the steady state at detuning d
// solves (M0 + i d I) p = -i Omega.
class DipoleSystem {
public:
    // `shifted` performs the Hessenberg reduction up front so that solves at
    // many detunings cost O(n^2) each. Throws MemoryBudgetError.
    DipoleSystem(std::vector<Vec3> positions, bool shifted, const SolverOptions& options = {});

    int size() const { return static_cast<int>(positions_.size()); }
    const std::vector<Vec3>& positions() const { return positions_; }
    const Eigen::MatrixXcd& interaction() const { return m0_; }
    bool has_shifted_solver() const { return static_cast<bool>(shifted_); }

    // Fresh LU factorisation of M0 + i d I.
    Eigen::VectorXcd solve_direct(double detuning, const Eigen::VectorXcd& drive) const;
    // Requires the shifted reduction.
    Eigen::VectorXcd solve_shifted(double detuning, const Eigen::VectorXcd& drive) const;

    // ||(M0 + i d) p + i Omega|| / ||Omega||.
    double residual(double detuning, const Eigen::VectorXcd& drive, const Eigen::VectorXcd& p) const;

    // Detuning scans stay in the reduced basis: reduce the drive once, then
    // each evaluation is one Hessenberg solve and a dot product.
    struct ReducedDrive {
        Eigen::VectorXcd rhs;  // Q^* (-i Omega)
    };
    ReducedDrive reduce(const Eigen::VectorXcd& drive) const;
    // Q^T w, so that w . p = (Q^T w) . y for p = Q y.
    Eigen::VectorXcd reduce_weights(const Eigen::VectorXcd& weights) const;
    Eigen::VectorXcd solve_reduced(double detuning, const ReducedDrive& drive) const;
    Eigen::VectorXcd expand(const Eigen::VectorXcd& reduced) const;

private:
    std::vector<Vec3> positions_;
    Eigen::MatrixXcd m0_;
    std::unique_ptr<ShiftedSolver> shifted_;
};

struct DipoleProblem {
    std::vector<Vec3> positions;
    double detuning = 0.0;
    Eigen::VectorXcd drive;
    Eigen::VectorXcd solution;
    double residual = 0.0;
};

// Focus at the transverse patch centre and the stack's mid-plane.
BeamSpec default_beam(const StackSpec& spec, double waist, Direction direction = Direction::forward);

// Omega_j = u(r_j).
Eigen::VectorXcd beam_drive(const std::vector<Vec3>& positions, const BeamSpec& beam);

// Direct solve at one detuning; throws if the residual check fails.
DipoleProblem assemble_and_solve(const StackSpec& spec, double detuning, const BeamSpec& beam,
                                 const SolverOptions& options = {});

struct ReflectivityResult {
    cplx r{0.0, 0.0};
    // Coupling efficiency: magnitude of the target-mode reflection amplitude.
    double r0 = 0.0;
    double reflectance = 0.0;  // |r|^2
    double delta_star = 0.0;
    std::optional<cplx> t;
    // 1 - |r|^2 - |t|^2: power leaving in non-target directions.
    std::optional<double> power_balance;
    double residual = 0.0;
};

ReflectivityResult reflectivity_overlap(const DipoleProblem& problem, const BeamSpec& beam,
                                        const OverlapOptions& options = {});
ReflectivityResult reflectivity_overlap(const DipoleProblem& problem, const ModeProjector& projector);

struct DetuningWindow {
    double lower;
    double upper;
};

// +/- 3 Gamma0 max(1, 1/kz_min) around zero.
DetuningWindow default_detuning_window(const StackSpec& spec);

struct ResonanceOptions {
    int coarse_points = 41;
    double tolerance = 1e-7;  // golden-section bracket width, in units of the decay rate
    int max_iterations = 200;
};

// Reflectivity as a function of detuning for a fixed system, drive and
// projector; evaluations reuse the Hessenberg reduction.
class ResonanceScanner {
public:
    ResonanceScanner(const DipoleSystem& system, const Eigen::VectorXcd& drive,
                     const ModeProjector& projector);

    cplx reflection(double detuning) const;

    // Coarse scan then golden-section refinement of r0. Throws
    // ResonanceNotBracketedError when the coarse maximum sits on a window edge.
    ReflectivityResult find(DetuningWindow window, const ResonanceOptions& options = {}) const;

    // Full solve at a detuning with residual check and transmission.
    ReflectivityResult evaluate(double detuning) const;

private:
    const DipoleSystem& system_;
    const ModeProjector& projector_;
    Eigen::VectorXcd drive_;
    DipoleSystem::ReducedDrive reduced_drive_;
    Eigen::VectorXcd reduced_weights_;
};

struct ResonanceSetup {
    OverlapOptions overlap{};
    ResonanceOptions scan{};
    SolverOptions solver{};
    std::optional<DetuningWindow> window;
};

// Builds the system, drive and projector for `spec` and locates the
// reflectivity maximum over detuning.
ReflectivityResult find_resonance(const StackSpec& spec, const BeamSpec& beam,
                                  const ResonanceSetup& setup = {});

struct WaistRule {
    enum class Kind { fixed, relative } kind = Kind::relative;
    double value = 0.3;  // waist, or waist / L
    double waist_for(const StackSpec& spec) const;
};

struct MapRow {
    double a_z = 0.0;
    double a = 0.0;
    double delta_star = 0.0;
    double r0 = 0.0;
    double t2 = 0.0;
    double residual = 0.0;
    bool ok = false;
    std::string error;
};

struct MapOptions {
    ResonanceSetup setup{};
    // Window doublings tried when the maximum lands on an edge.
    int widen_attempts = 2;
    int jobs = 1;
};

// Rows are a_z-major, matching the input grids.
std::vector<MapRow> reflectivity_map_numeric(Lattice lattice, bool shifted,
                                             const std::vector<double>& a_grid,
                                             const std::vector<double>& a_z_grid, int n_side,
                                             const WaistRule& waist, const MapOptions& options = {});

// One map point (also used by the harness).
MapRow reflectivity_map_point(const StackSpec& spec, const WaistRule& waist, const MapOptions& options);

}  // namespace superwave
