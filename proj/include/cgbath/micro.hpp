// micro.hpp — Full microscopic coupled ODE-transport system on a grid.
//
// The bath is stored in the shifted variable zeta = eta + C q, which obeys a
// pure transport equation with a source supported on the basis functions:
//   zeta_t = S_t zeta_0 + int_0^t S_{t-s} C qdot_s ds.
// Cells are kept in material coordinates (attached to the transported data), so
// the lockstep shift dt = h moves the readout/deposit windows by exactly one
// cell and never touches stored values; the lab position of cell i at time t is
// material_i + t. Grid norms are therefore preserved bit-for-bit by the shift.
//
// Error budget per step: O(h^2) from the midpoint source deposit and the
// extrapolated coupling value in the z-step, O(h^2) midpoint quadrature in the
// w readout, plus the e^{-2 alpha y_max} support-truncation tail.

#pragma once

#include "cgbath/dilation.hpp"
#include "cgbath/errors.hpp"
#include "cgbath/model.hpp"
#include "cgbath/ou.hpp"
#include "cgbath/rng.hpp"
#include "cgbath/util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace cgbath::micro {

using cgbath::Mat;
using cgbath::Vec;

struct MicroConfig {
    double h{1e-3};   // grid spacing; dt = h (lockstep, exact shift)
    double T{10.0};
    bool thermal{false};
    std::uint64_t seed{0};
    int record_stride{1};
    double y_max{-1.0}; // <=0: use the basis default
};

struct MicroState {
    double t{0.0};
    Vec z;
    Mat zeta;          // d x cells, material coordinates
    double left0{0.0}; // material coordinate of the left grid edge
    double h{0.0};
    long step_count{0};
    long max_steps{0};
    std::optional<Vec> w_prev; // readout at the previous step (scheme memory)

    double material_center(int i) const { return left0 + (i + 0.5) * h; }

    // lab-frame snapshot (left/right advance with t, values are shared content)
    dilation::GridField lab_field() const {
        dilation::GridField g;
        g.h = h;
        g.left = left0 + t;
        g.right = left0 + t + h * static_cast<double>(zeta.cols());
        g.values = zeta;
        return g;
    }
};

namespace detail {

struct Geometry {
    int m{0};      // readout window cells, lab [-m h, 0]
    long steps{0}; // total admissible steps
    int cells{0};
    double left0{0.0};
};

inline Geometry geometry(const dilation::DilationBasis& basis, const MicroConfig& cfg) {
    Geometry g;
    const double ym = cfg.y_max > 0 ? cfg.y_max : basis.y_max;
    g.m = static_cast<int>(std::lround(ym / cfg.h));
    g.steps = std::lround(cfg.T / cfg.h);
    g.cells = g.m + static_cast<int>(g.steps);
    g.left0 = -cfg.h * static_cast<double>(g.cells);
    return g;
}

} // namespace detail

class Stepper {
public:
    Stepper(const model::SystemSpec& spec, const dilation::DilationBasis& basis,
            const MicroConfig& cfg)
        : spec_(spec), cfg_(cfg) {
        const auto geo = detail::geometry(basis, cfg);
        m_ = geo.m;
        i0_ = geo.cells - geo.m;
        const int d = spec.d;
        F_ = Mat(static_cast<long>(m_) * d, d);
        F_half_ = Mat(static_cast<long>(m_) * d, d);
        for (int r = 0; r < m_; ++r) {
            const double y = (r - m_ + 0.5) * cfg.h;
            F_.block(static_cast<long>(r) * d, 0, d, d) = eval_basis_matrix(basis, y);
            F_half_.block(static_cast<long>(r) * d, 0, d, d) =
                eval_basis_matrix(basis, y - 0.5 * cfg.h);
        }
        coupling_zero_ = spec.C_mat.cwiseAbs().maxCoeff() == 0.0;
    }

    // w = P zeta - C q at the current step
    Vec read_w(const MicroState& s) const {
        const long lo = window_start(s);
        Eigen::Map<const Vec> win(s.zeta.data() + lo * spec_.d,
                                  static_cast<long>(m_) * spec_.d);
        return cfg_.h * (F_.transpose() * win) - model::coupling_q(spec_, s.z);
    }

    void step(MicroState& s) const {
        if (s.step_count >= s.max_steps) {
            throw GridCoverageError("micro step: horizon exhausted, grid has no room left of the window");
        }
        const double dt = cfg_.h;
        if (coupling_zero_) {
            // decoupled: the field shifts rigidly and z follows the uncoupled flow
            const Vec w0 = Vec::Zero(spec_.d);
            const Vec k1 = zdot(s.z, w0);
            const Vec k2 = zdot(s.z + dt * k1, w0);
            s.z += 0.5 * dt * (k1 + k2);
            s.step_count += 1;
            s.t += dt;
            return;
        }
        const Vec w = read_w(s);
        const Vec w_used = s.w_prev ? Vec(1.5 * w - 0.5 * *s.w_prev) : w;

        // Heun step for z with the coupling value held at its midpoint estimate
        const Vec k1 = zdot(s.z, w_used);
        const Vec k2 = zdot(s.z + dt * k1, w_used);
        const Vec z_new = s.z + 0.5 * dt * (k1 + k2);

        // exact shift = window moves one cell left in material coordinates
        s.step_count += 1;
        s.t += dt;

        // midpoint deposit of the source int S_{dt-s} C qdot ds
        const Vec dep = spec_.C_mat * (z_new.head(spec_.n) - s.z.head(spec_.n));
        const long lo = window_start(s);
        Eigen::Map<Vec> win(s.zeta.data() + lo * spec_.d, static_cast<long>(m_) * spec_.d);
        win.noalias() += F_half_ * dep;

        s.z = z_new;
        s.w_prev = w;
    }

    int window_cells() const { return m_; }

    // add sum_j coeff_j f_j to the current readout window (support truncation
    // at -y_max leaves an e^{-2 alpha y_max} tail in later inner products)
    void expand_in_window(MicroState& s, const Vec& coeff) const {
        const long lo = window_start(s);
        Eigen::Map<Vec> win(s.zeta.data() + lo * spec_.d, static_cast<long>(m_) * spec_.d);
        win.noalias() += F_ * coeff;
    }

private:
    long window_start(const MicroState& s) const { return i0_ - s.step_count; }

    Vec zdot(const Vec& z, const Vec& w) const {
        return model::poisson_apply(spec_, z,
                                    model::grad_hamiltonian_A(spec_, z) +
                                        model::coupling_adjoint(spec_, w));
    }

    model::SystemSpec spec_;
    MicroConfig cfg_;
    int m_{0};
    long i0_{0};
    bool coupling_zero_{false};
    Mat F_;      // readout table, block row r = basis matrix at cell center
    Mat F_half_; // deposit table, sampled at cell center - h/2
};

inline void step(MicroState& state, const Stepper& stepper) { stepper.step(state); }

namespace detail {

inline MicroState blank_state(const model::SystemSpec& spec,
                              const dilation::DilationBasis& basis, const Vec& z0,
                              const MicroConfig& cfg) {
    const auto geo = geometry(basis, cfg);
    MicroState s;
    s.t = 0.0;
    s.z = z0;
    s.h = cfg.h;
    s.left0 = geo.left0;
    s.max_steps = geo.steps;
    s.zeta = Mat::Zero(spec.d, geo.cells);
    return s;
}

} // namespace detail

// zeta_0 = sum_j (w0 + C q0)_j f_j, sampled exactly on every cell
inline MicroState init_deterministic(const model::SystemSpec& spec,
                                     const dilation::DilationBasis& basis, const Vec& z0,
                                     const Vec& w0, const MicroConfig& cfg) {
    MicroState s = detail::blank_state(spec, basis, z0, cfg);
    const Vec coeff = w0 + model::coupling_q(spec, z0);
    for (int i = 0; i < s.zeta.cols(); ++i) {
        s.zeta.col(i) = eval_basis_matrix(basis, s.material_center(i)) * coeff;
    }
    return s;
}

// eta_0 = w0 + xi_0 with xi_0 grid white noise projected off W; zeta_0 adds C q0.
// Reuse a prebuilt Stepper when initializing many ensemble members.
inline MicroState init_thermal(const model::SystemSpec& spec,
                               const dilation::DilationBasis& basis, const Vec& z0,
                               const Vec& w0, const MicroConfig& cfg, Rng& rng,
                               const Stepper& stepper) {
    MicroState s = detail::blank_state(spec, basis, z0, cfg);
    const double cell_sd = 1.0 / std::sqrt(spec.beta * cfg.h);
    for (int i = 0; i < s.zeta.cols(); ++i) {
        for (int c = 0; c < spec.d; ++c) s.zeta(c, i) = cell_sd * rng.normal();
    }
    // raw white noise reproduces <f, eta> ~ N(0, |f|^2/beta) under grid inner products
    const Vec w_raw = stepper.read_w(s) + model::coupling_q(spec, z0);
    stepper.expand_in_window(s, w0 + model::coupling_q(spec, z0) - w_raw);
    return s;
}

inline MicroState init_thermal(const model::SystemSpec& spec,
                               const dilation::DilationBasis& basis, const Vec& z0,
                               const Vec& w0, const MicroConfig& cfg, Rng& rng) {
    return init_thermal(spec, basis, z0, w0, cfg, rng, Stepper(spec, basis, cfg));
}

struct Trajectory {
    std::vector<double> t;
    Mat z;    // rows 2n, one column per record
    Mat w;    // rows d
    std::vector<double> H_zw;
};

inline Trajectory run(const model::SystemSpec& spec, const dilation::DilationBasis& basis,
                      MicroState state, const MicroConfig& cfg) {
    Stepper stepper(spec, basis, cfg);
    const long steps = state.max_steps;
    const int stride = std::max(1, cfg.record_stride);
    const long records = steps / stride + 1;
    Trajectory traj;
    traj.t.reserve(records);
    traj.z = Mat(2 * spec.n, records);
    traj.w = Mat(spec.d, records);
    traj.H_zw.reserve(records);
    long col = 0;
    for (long k = 0; k <= steps; ++k) {
        if (k % stride == 0) {
            const Vec w = stepper.read_w(state);
            traj.t.push_back(state.t);
            traj.z.col(col) = state.z;
            traj.w.col(col) = w;
            traj.H_zw.push_back(model::hamiltonian_zw(spec, state.z, w));
            ++col;
        }
        if (k < steps) stepper.step(state);
    }
    return traj;
}

// discrete total energy H_A + 1/2 |eta|^2 + <C q, eta> on the grid, eta = zeta - C q . f
inline double total_energy(const model::SystemSpec& spec,
                           const dilation::DilationBasis& basis, const MicroState& s) {
    const Vec cq = model::coupling_q(spec, s.z);
    double bath = 0.0, coupling = 0.0;
    for (int i = 0; i < s.zeta.cols(); ++i) {
        const double lab = s.material_center(i) + s.t;
        Vec eta = s.zeta.col(i);
        Vec cqf = Vec::Zero(spec.d);
        if (lab <= 0.0) {
            cqf = eval_basis_matrix(basis, lab) * cq;
            eta -= cqf;
        }
        bath += 0.5 * s.h * eta.squaredNorm();
        coupling += s.h * cqf.dot(eta);
    }
    return model::hamiltonian_A(spec, s.z) + bath + coupling;
}

// Memory-kernel reformulation of the z-equation: the convolution with
// K(t) = C^* e^{-tD} C is folded into the auxiliary variable
//   M_t = e^{-tD}(w0 + C q0) + int_0^t e^{-(t-s)D} C qdot_s ds,
// which satisfies Mdot = -D M + C qdot, and w_t = Y_t + M_t - C q_t.
// An empty Y path selects the deterministic case (Y = 0) integrated with RK4;
// otherwise Euler steps are taken on the path's grid.
inline Trajectory run_kernel(const model::SystemSpec& spec, const Vec& z0, const Vec& w0,
                             const ou::OUPath& y_path, double dt, double T) {
    const long steps = std::lround(T / dt);
    const bool stochastic = !y_path.values.empty();
    if (stochastic && static_cast<long>(y_path.values.size()) < steps + 1) {
        throw ShapeError("run_kernel: Y path shorter than the integrator grid");
    }

    const auto w_eff = [&](const Vec& M, const Vec& z, long k) {
        Vec w = M - model::coupling_q(spec, z);
        if (stochastic) w += y_path.values[k];
        return w;
    };
    const auto zdot = [&](const Vec& z, const Vec& w) {
        return model::poisson_apply(spec, z,
                                    model::grad_hamiltonian_A(spec, z) +
                                        model::coupling_adjoint(spec, w));
    };

    Trajectory traj;
    traj.t.reserve(steps + 1);
    traj.z = Mat(2 * spec.n, steps + 1);
    traj.w = Mat(spec.d, steps + 1);
    traj.H_zw.reserve(steps + 1);

    Vec z = z0;
    Vec M = w0 + model::coupling_q(spec, z0);
    for (long k = 0; k <= steps; ++k) {
        const Vec w = w_eff(M, z, k);
        traj.t.push_back(k * dt);
        traj.z.col(k) = z;
        traj.w.col(k) = w;
        traj.H_zw.push_back(model::hamiltonian_zw(spec, z, w));
        if (k == steps) break;

        if (stochastic) {
            const Vec dz = zdot(z, w);
            const Vec z_new = z + dt * dz;
            M += -dt * (spec.D * M) + spec.C_mat * (z_new.head(spec.n) - z.head(spec.n));
            z = z_new;
        } else {
            // RK4 on the joint (z, M) system
            struct RHS {
                Vec dz, dM;
            };
            const auto rhs = [&](const Vec& zz, const Vec& MM) {
                const Vec w_loc = MM - model::coupling_q(spec, zz);
                const Vec dz = zdot(zz, w_loc);
                RHS r;
                r.dz = dz;
                r.dM = -(spec.D * MM) + spec.C_mat * dz.head(spec.n);
                return r;
            };
            const RHS k1 = rhs(z, M);
            const RHS k2 = rhs(z + 0.5 * dt * k1.dz, M + 0.5 * dt * k1.dM);
            const RHS k3 = rhs(z + 0.5 * dt * k2.dz, M + 0.5 * dt * k2.dM);
            const RHS k4 = rhs(z + dt * k3.dz, M + dt * k3.dM);
            z += dt / 6.0 * (k1.dz + 2.0 * k2.dz + 2.0 * k3.dz + k4.dz);
            M += dt / 6.0 * (k1.dM + 2.0 * k2.dM + 2.0 * k3.dM + k4.dM);
        }
    }
    return traj;
}

} // namespace cgbath::micro
