#include "superwave/dipole_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "superwave/errors.hpp"
#include "superwave/sweep.hpp"

namespace superwave {

std::size_t solver_memory_estimate(std::size_t atoms, bool shifted) {
    const std::size_t block = atoms * atoms * sizeof(cplx);
    // M0 plus an LU copy; the shifted path keeps the reduction, the row-major
    // H and one working copy per solve.
    return shifted ? 4 * block : 2 * block;
}

DipoleSystem::DipoleSystem(std::vector<Vec3> positions, bool shifted, const SolverOptions& options)
    : positions_(std::move(positions)) {
    const std::size_t n = positions_.size();
    if (solver_memory_estimate(n, shifted) > options.memory_budget_bytes)
        throw MemoryBudgetError("interaction matrix for " + std::to_string(n) +
                                " atoms exceeds the memory budget");
    const auto ni = static_cast<Eigen::Index>(n);
    m0_.resize(ni, ni);
    for (Eigen::Index j = 0; j < ni; ++j) {
        m0_(j, j) = cplx{-0.5, 0.0};
        const Vec3 pj = positions_[static_cast<std::size_t>(j)];
        for (Eigen::Index l = j + 1; l < ni; ++l) {
            const Vec3 pl = positions_[static_cast<std::size_t>(l)];
            const double dx = pj.x - pl.x;
            const double dy = pj.y - pl.y;
            const double dz = pj.z - pl.z;
            if (dx == 0.0 && dy == 0.0 && dz == 0.0)
                throw ValidationError("two atoms share a position");
            const cplx g = greens_coupling_unchecked(dx, dy, dz);
            const cplx v{-g.imag(), g.real()};  // i g
            m0_(j, l) = v;
            m0_(l, j) = v;
        }
    }
    if (shifted) shifted_ = std::make_unique<ShiftedSolver>(m0_);
}

Eigen::VectorXcd DipoleSystem::solve_direct(double detuning, const Eigen::VectorXcd& drive) const {
    if (drive.size() != m0_.rows()) throw ValidationError("drive has the wrong length");
    Eigen::MatrixXcd m = m0_;
    m.diagonal().array() += cplx{0.0, detuning};
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(m);
    const Eigen::VectorXcd rhs = cplx{0.0, -1.0} * drive;
    Eigen::VectorXcd p = lu.solve(rhs);
    if (!p.allFinite()) throw SingularMatrixError("LU solve produced non-finite dipoles");
    return p;
}

Eigen::VectorXcd DipoleSystem::solve_shifted(double detuning, const Eigen::VectorXcd& drive) const {
    if (!shifted_) throw ValidationError("system was built without the shifted reduction");
    if (drive.size() != m0_.rows()) throw ValidationError("drive has the wrong length");
    return shifted_->solve(cplx{0.0, detuning}, cplx{0.0, -1.0} * drive);
}

double DipoleSystem::residual(double detuning, const Eigen::VectorXcd& drive,
                              const Eigen::VectorXcd& p) const {
    Eigen::VectorXcd r = m0_ * p;
    r += cplx{0.0, detuning} * p;
    r += cplx{0.0, 1.0} * drive;
    const double scale = drive.norm();
    return scale > 0.0 ? r.norm() / scale : r.norm();
}

DipoleSystem::ReducedDrive DipoleSystem::reduce(const Eigen::VectorXcd& drive) const {
    if (!shifted_) throw ValidationError("system was built without the shifted reduction");
    return {shifted_->to_reduced(cplx{0.0, -1.0} * drive)};
}

Eigen::VectorXcd DipoleSystem::reduce_weights(const Eigen::VectorXcd& weights) const {
    if (!shifted_) throw ValidationError("system was built without the shifted reduction");
    return shifted_->to_reduced(weights.conjugate()).conjugate();
}

Eigen::VectorXcd DipoleSystem::solve_reduced(double detuning, const ReducedDrive& drive) const {
    return shifted_->solve_reduced(cplx{0.0, detuning}, drive.rhs);
}

Eigen::VectorXcd DipoleSystem::expand(const Eigen::VectorXcd& reduced) const {
    return shifted_->from_reduced(reduced);
}

BeamSpec default_beam(const StackSpec& spec, double waist, Direction direction) {
    const Vec2 c = patch_center(spec);
    BeamSpec beam;
    beam.waist = waist;
    beam.focus = {c.x, c.y, 0.5 * (spec.n_z - 1) * spec.a_z};
    beam.direction = direction;
    beam.validate();
    return beam;
}

Eigen::VectorXcd beam_drive(const std::vector<Vec3>& positions, const BeamSpec& beam) {
    Eigen::VectorXcd d(static_cast<Eigen::Index>(positions.size()));
    for (std::size_t j = 0; j < positions.size(); ++j)
        d(static_cast<Eigen::Index>(j)) = gaussian_mode_field(beam, positions[j]);
    return d;
}

namespace {

void check_residual(double residual, const SolverOptions& options) {
    if (!(residual < options.residual_tolerance))
        throw SingularMatrixError("linear-system residual " + std::to_string(residual) +
                                  " exceeds tolerance");
}

}  // namespace

DipoleProblem assemble_and_solve(const StackSpec& spec, double detuning, const BeamSpec& beam,
                                 const SolverOptions& options) {
    spec.validate();
    beam.validate();
    DipoleProblem problem;
    problem.positions = build_positions(spec);
    problem.detuning = detuning;
    problem.drive = beam_drive(problem.positions, beam);
    const DipoleSystem system(problem.positions, false, options);
    problem.solution = system.solve_direct(detuning, problem.drive);
    problem.residual = system.residual(detuning, problem.drive, problem.solution);
    check_residual(problem.residual, options);
    return problem;
}

ReflectivityResult reflectivity_overlap(const DipoleProblem& problem, const ModeProjector& projector) {
    ReflectivityResult res;
    res.r = projector.reflection(problem.solution);
    res.r0 = std::abs(res.r);
    res.reflectance = std::norm(res.r);
    res.delta_star = problem.detuning;
    res.t = projector.transmission(problem.solution);
    if (res.t) res.power_balance = 1.0 - res.reflectance - std::norm(*res.t);
    res.residual = problem.residual;
    return res;
}

ReflectivityResult reflectivity_overlap(const DipoleProblem& problem, const BeamSpec& beam,
                                        const OverlapOptions& options) {
    const ModeProjector projector(problem.positions, beam, options);
    return reflectivity_overlap(problem, projector);
}

DetuningWindow default_detuning_window(const StackSpec& spec) {
    double kz_min = 1.0;
    for (const auto& o : radiative_orders(spec)) kz_min = std::min(kz_min, o.kz_ratio);
    const double half = 3.0 * spec.gamma0() * std::max(1.0, 1.0 / kz_min);
    return {-half, half};
}

ResonanceScanner::ResonanceScanner(const DipoleSystem& system, const Eigen::VectorXcd& drive,
                                   const ModeProjector& projector)
    : system_(system), projector_(projector), drive_(drive) {
    reduced_drive_ = system_.reduce(drive_);
    reduced_weights_ = system_.reduce_weights(projector_.reflection_weights());
}

cplx ResonanceScanner::reflection(double detuning) const {
    const Eigen::VectorXcd y = system_.solve_reduced(detuning, reduced_drive_);
    return (reduced_weights_.array() * y.array()).sum();
}

ReflectivityResult ResonanceScanner::evaluate(double detuning) const {
    DipoleProblem problem;
    problem.detuning = detuning;
    problem.drive = drive_;
    problem.solution = system_.expand(system_.solve_reduced(detuning, reduced_drive_));
    problem.residual = system_.residual(detuning, drive_, problem.solution);
    if (!(problem.residual < 1e-10)) {
        problem.solution = system_.solve_direct(detuning, drive_);
        problem.residual = system_.residual(detuning, drive_, problem.solution);
    }
    return reflectivity_overlap(problem, projector_);
}

ReflectivityResult ResonanceScanner::find(DetuningWindow window, const ResonanceOptions& options) const {
    if (!(window.upper > window.lower)) throw ValidationError("empty detuning window");
    const int n = std::max(options.coarse_points, 3);
    const double h = (window.upper - window.lower) / (n - 1);
    int best = 0;
    double best_value = -1.0;
    for (int i = 0; i < n; ++i) {
        const double v = std::abs(reflection(window.lower + i * h));
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    if (best == 0 || best == n - 1) {
        const double edge = best == 0 ? window.lower : window.upper;
        throw ResonanceNotBracketedError("reflectivity maximum on the detuning-window edge", edge);
    }

    // Golden-section search on the bracketing cells.
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = window.lower + (best - 1) * h;
    double hi = window.lower + (best + 1) * h;
    double x1 = hi - invphi * (hi - lo);
    double x2 = lo + invphi * (hi - lo);
    double f1 = std::abs(reflection(x1));
    double f2 = std::abs(reflection(x2));
    for (int it = 0; it < options.max_iterations && hi - lo > options.tolerance; ++it) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = std::abs(reflection(x1));
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = std::abs(reflection(x2));
        }
    }
    double x = f1 >= f2 ? x1 : x2;
    // The refined value should never lose to the coarse grid point.
    if (std::max(f1, f2) < best_value) x = window.lower + best * h;
    return evaluate(x);
}

ReflectivityResult find_resonance(const StackSpec& spec, const BeamSpec& beam, const ResonanceSetup& setup) {
    spec.validate();
    beam.validate();
    const auto positions = build_positions(spec);
    const DipoleSystem system(positions, true, setup.solver);
    const Eigen::VectorXcd drive = beam_drive(positions, beam);
    const ModeProjector projector(positions, beam, setup.overlap,
                                  lattice_alignment(spec, setup.overlap.step));
    const ResonanceScanner scanner(system, drive, projector);
    ReflectivityResult res = scanner.find(setup.window.value_or(default_detuning_window(spec)), setup.scan);
    check_residual(res.residual, setup.solver);
    return res;
}

double WaistRule::waist_for(const StackSpec& spec) const {
    if (!(value > 0.0)) throw ValidationError("waist rule value must be positive");
    return kind == Kind::fixed ? value : value * spec.linear_size();
}

MapRow reflectivity_map_point(const StackSpec& spec, const WaistRule& waist, const MapOptions& options) {
    MapRow row;
    row.a_z = spec.a_z;
    row.a = spec.a;
    const BeamSpec beam = default_beam(spec, waist.waist_for(spec));
    const auto positions = build_positions(spec);
    const DipoleSystem system(positions, true, options.setup.solver);
    const Eigen::VectorXcd drive = beam_drive(positions, beam);
    const ModeProjector projector(positions, beam, options.setup.overlap,
                                  lattice_alignment(spec, options.setup.overlap.step));
    const ResonanceScanner scanner(system, drive, projector);

    DetuningWindow window = options.setup.window.value_or(default_detuning_window(spec));
    for (int attempt = 0;; ++attempt) {
        try {
            const ReflectivityResult res = scanner.find(window, options.setup.scan);
            check_residual(res.residual, options.setup.solver);
            row.delta_star = res.delta_star;
            row.r0 = res.r0;
            row.t2 = res.t ? std::norm(*res.t) : std::numeric_limits<double>::quiet_NaN();
            row.residual = res.residual;
            row.ok = true;
            return row;
        } catch (const ResonanceNotBracketedError&) {
            if (attempt >= options.widen_attempts) throw;
            window.lower *= 2.0;
            window.upper *= 2.0;
        }
    }
}

std::vector<MapRow> reflectivity_map_numeric(Lattice lattice, bool shifted, const std::vector<double>& a_grid,
                                             const std::vector<double>& a_z_grid, int n_side,
                                             const WaistRule& waist, const MapOptions& options) {
    if (a_grid.empty() || a_z_grid.empty()) throw ValidationError("map axes must be non-empty");
    std::vector<StackSpec> specs;
    specs.reserve(a_grid.size() * a_z_grid.size());
    for (double a_z : a_z_grid)
        for (double a : a_grid) {
            StackSpec s = make_bilayer(lattice, a, a_z, n_side, shifted);
            s.validate();
            specs.push_back(std::move(s));
        }
    const std::function<MapRow(const StackSpec&)> worker = [&](const StackSpec& s) {
        return reflectivity_map_point(s, waist, options);
    };
    const auto outcomes = sweep_grid(specs, worker, options.jobs);
    std::vector<MapRow> rows;
    rows.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (outcomes[i].ok()) {
            rows.push_back(*outcomes[i].value);
        } else {
            MapRow row;
            row.a_z = specs[i].a_z;
            row.a = specs[i].a;
            row.error = outcomes[i].error;
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace superwave
