// generic.hpp — GENERIC structure on the extended state y = (z, w, e) and the
// axiom-verification suite.
//
// Components (v = w + C q):
//   E(y) = H_A(z) + <C q, w> + |w|^2/2 + e,      S(y) = beta e
//   J(y) = blockdiag(J_A(z), -D_skw, 0)
//   K(y) = (1/beta) [[0,0,0],[0,D_sym,-D_sym v],[0,-(D_sym v)^T,<D_sym v,v>]]
//   Sigma(y) = (0; Sigma; -v^T Sigma),           Sigma Sigma^T = 2 K
// K is PSD since x^T K x = (x_w - x_e v)^T D_sym (x_w - x_e v) / beta.

#pragma once

#include "cgbath/errors.hpp"
#include "cgbath/macrodyn.hpp"
#include "cgbath/model.hpp"
#include "cgbath/util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace cgbath::generic {

using cgbath::Mat;
using cgbath::Vec;

struct GenericStructure {
    model::SystemSpec spec;
    model::DerivedOperators ops;

    int dim() const { return 2 * spec.n + spec.d + 1; }

    Vec pack(const Vec& z, const Vec& w, double e) const {
        Vec y(dim());
        y << z, w, e;
        return y;
    }
    Vec z_of(const Vec& y) const { return y.head(2 * spec.n); }
    Vec w_of(const Vec& y) const { return y.segment(2 * spec.n, spec.d); }
    double e_of(const Vec& y) const { return y[dim() - 1]; }
    Vec v_of(const Vec& y) const {
        return w_of(y) + model::coupling_q(spec, z_of(y));
    }

    double energy(const Vec& y) const {
        return model::hamiltonian_zw(spec, z_of(y), w_of(y)) + e_of(y);
    }
    double entropy(const Vec& y) const { return spec.beta * e_of(y); }

    Vec grad_energy(const Vec& y) const {
        const auto [gz, gw] = model::grad_hamiltonian_zw(spec, z_of(y), w_of(y));
        Vec g(dim());
        g << gz, gw, 1.0;
        return g;
    }
    Vec grad_entropy(const Vec& /*y*/) const {
        Vec g = Vec::Zero(dim());
        g[dim() - 1] = spec.beta;
        return g;
    }

    Mat J(const Vec& y) const {
        Mat out = Mat::Zero(dim(), dim());
        out.topLeftCorner(2 * spec.n, 2 * spec.n) = model::poisson_matrix(spec, z_of(y));
        out.block(2 * spec.n, 2 * spec.n, spec.d, spec.d) = -ops.D_skw;
        return out;
    }

    Mat K(const Vec& y) const {
        const Vec v = v_of(y);
        const Vec dv = ops.D_sym * v;
        const int off = 2 * spec.n;
        Mat out = Mat::Zero(dim(), dim());
        out.block(off, off, spec.d, spec.d) = ops.D_sym;
        out.block(off, dim() - 1, spec.d, 1) = -dv;
        out.block(dim() - 1, off, 1, spec.d) = -dv.transpose();
        out(dim() - 1, dim() - 1) = dv.dot(v);
        return out / spec.beta;
    }

    // dim x d map applied to the d-dimensional noise
    Mat noise(const Vec& y) const {
        const Vec v = v_of(y);
        Mat out = Mat::Zero(dim(), spec.d);
        out.middleRows(2 * spec.n, spec.d) = ops.Sigma;
        out.row(dim() - 1) = -(ops.Sigma.transpose() * v).transpose();
        return out;
    }

    // closed form: only the e-row of K depends on the state
    Vec div_K() const {
        Vec out = Vec::Zero(dim());
        out[dim() - 1] = -ops.D_sym.trace() / spec.beta;
        return out;
    }
};

inline GenericStructure make_structure(const model::SystemSpec& spec) {
    return GenericStructure{spec, model::build_derived(spec)};
}

inline Vec assemble_drift(const GenericStructure& g, const Vec& y, bool with_divK = false) {
    Vec drift = g.J(y) * g.grad_energy(y) + g.K(y) * g.grad_entropy(y);
    if (with_divK) drift += g.div_K();
    return drift;
}

// (dE/dt, dS/dt) along a supplied drift
inline std::pair<double, double> energy_entropy_rates(const GenericStructure& g,
                                                      const Vec& y, const Vec& drift) {
    return {g.grad_energy(y).dot(drift), g.grad_entropy(y).dot(drift)};
}

struct CheckRow {
    std::string name;
    double max_error{0.0};
    double tol{0.0};
    bool pass{true};
};

struct StructureReport {
    std::vector<CheckRow> rows;

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
    const CheckRow& row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return r;
        throw ShapeError("StructureReport: no row named " + name);
    }
};

namespace detail {

inline double skew_error(const Mat& J) { return (J + J.transpose()).cwiseAbs().maxCoeff(); }
inline double sym_error(const Mat& K) { return (K - K.transpose()).cwiseAbs().maxCoeff(); }

inline double psd_error(const Mat& K) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()));
    return std::max(0.0, -es.eigenvalues().minCoeff());
}

// sum over cyclic permutations of <mu1, DJ(y)[J mu2] mu3> by central differences
inline double jacobi_residual(const std::function<Mat(const Vec&)>& Jfun, const Vec& y,
                              const Vec& mu1, const Vec& mu2, const Vec& mu3,
                              double fd_step) {
    const Mat Jy = Jfun(y);
    const auto term = [&](const Vec& a, const Vec& b, const Vec& c) {
        const Vec dir = Jy * b;
        const Mat Jp = Jfun(y + fd_step * dir);
        const Mat Jm = Jfun(y - fd_step * dir);
        return a.dot(((Jp - Jm) / (2.0 * fd_step)) * c);
    };
    return term(mu1, mu2, mu3) + term(mu2, mu3, mu1) + term(mu3, mu1, mu2);
}

inline double div_residual(const std::function<Mat(const Vec&)>& Mfun, const Vec& y,
                           double fd_step) {
    const int dim = static_cast<int>(y.size());
    Vec div = Vec::Zero(dim);
    for (int j = 0; j < dim; ++j) {
        Vec yp = y, ym = y;
        yp[j] += fd_step;
        ym[j] -= fd_step;
        div += (Mfun(yp).col(j) - Mfun(ym).col(j)) / (2.0 * fd_step);
    }
    return div.cwiseAbs().maxCoeff();
}

} // namespace detail

// skewness, symmetry, PSD, both non-interaction conditions, FDR, Jacobi, div J
inline StructureReport check_structure(const GenericStructure& g,
                                       const std::vector<Vec>& states, double tol = 1e-12,
                                       double fd_tol = 1e-6, double fd_step = 1e-4,
                                       std::uint64_t probe_seed = 7) {
    if (states.empty()) throw ShapeError("check_structure: need at least one state");
    StructureReport rep;
    CheckRow j_skew{"J_skew", 0, tol}, k_sym{"K_symmetric", 0, tol}, k_psd{"K_psd", 0, tol},
        nic_a{"NIC_J_gradS", 0, tol}, nic_b{"NIC_K_gradE", 0, tol}, fdr{"FDR", 0, tol},
        jac{"Jacobi_fd", 0, fd_tol}, divj{"div_J_fd", 0, fd_tol};

    Rng rng(probe_seed);
    const auto Jfun = [&](const Vec& y) { return g.J(y); };
    for (const Vec& y : states) {
        const Mat J = g.J(y);
        const Mat K = g.K(y);
        j_skew.max_error = std::max(j_skew.max_error, detail::skew_error(J));
        k_sym.max_error = std::max(k_sym.max_error, detail::sym_error(K));
        k_psd.max_error = std::max(k_psd.max_error, detail::psd_error(K));
        nic_a.max_error = std::max(nic_a.max_error,
                                   (J * g.grad_entropy(y)).cwiseAbs().maxCoeff());
        nic_b.max_error = std::max(nic_b.max_error,
                                   (K * g.grad_energy(y)).cwiseAbs().maxCoeff());
        const Mat S = g.noise(y);
        fdr.max_error = std::max(fdr.max_error,
                                 (S * S.transpose() - 2.0 * K).cwiseAbs().maxCoeff());
        for (int probe = 0; probe < 3; ++probe) {
            const Vec mu1 = rng.normal_vec(g.dim());
            const Vec mu2 = rng.normal_vec(g.dim());
            const Vec mu3 = rng.normal_vec(g.dim());
            jac.max_error = std::max(jac.max_error,
                                     std::abs(detail::jacobi_residual(Jfun, y, mu1, mu2,
                                                                      mu3, fd_step)));
        }
        divj.max_error = std::max(divj.max_error, detail::div_residual(Jfun, y, fd_step));
    }
    for (CheckRow* r : {&j_skew, &k_sym, &k_psd, &nic_a, &nic_b, &fdr, &jac, &divj}) {
        r->pass = r->max_error <= r->tol;
        rep.rows.push_back(*r);
    }
    return rep;
}

struct Diffeo {
    std::function<Vec(const Vec&)> phi;
    std::function<Mat(const Vec&)> dphi;
    std::function<Vec(const Vec&)> phi_inverse; // optional, enables the E-pullback check
};

inline Diffeo linear_diffeo(const Mat& A) {
    Eigen::PartialPivLU<Mat> lu(A);
    const double det = std::abs(lu.determinant());
    if (!(det > 1e-12)) {
        throw JacobianSingularError("linear_diffeo: matrix is singular (|det| = " +
                                    std::to_string(det) + ")");
    }
    const Mat Ainv = lu.inverse();
    Diffeo d;
    d.phi = [A](const Vec& y) { return Vec(A * y); };
    d.dphi = [A](const Vec&) { return A; };
    d.phi_inverse = [Ainv](const Vec& u) { return Vec(Ainv * u); };
    return d;
}

// Transformed structure J^ = Dphi J Dphi^T etc., re-checked at phi(states).
// For linear maps the assembled transformed drift must equal Dphi * drift.
inline StructureReport transform_structure(const GenericStructure& g, const Diffeo& phi,
                                           const std::vector<Vec>& states,
                                           double tol = 1e-10) {
    if (states.empty()) throw ShapeError("transform_structure: need at least one state");
    StructureReport rep;
    CheckRow j_skew{"That_J_skew", 0, tol}, k_sym{"That_K_symmetric", 0, tol},
        k_psd{"That_K_psd", 0, tol}, nic_a{"That_NIC_J_gradS", 0, tol},
        nic_b{"That_NIC_K_gradE", 0, tol}, fdr{"That_FDR", 0, tol},
        energy_pullback{"That_E_pullback", 0, tol}, drift_push{"That_drift_push", 0, tol};

    for (const Vec& y : states) {
        const Mat A = phi.dphi(y);
        Eigen::PartialPivLU<Mat> lu(A);
        if (std::abs(lu.determinant()) <= 1e-12) {
            throw JacobianSingularError("transform_structure: Jacobian singular at a state");
        }
        const Mat Ainv_T = lu.inverse().transpose();

        const Mat Jh = A * g.J(y) * A.transpose();
        const Mat Kh = A * g.K(y) * A.transpose();
        const Mat Sh = A * g.noise(y);
        const Vec gEh = Ainv_T * g.grad_energy(y);  // grad of E^ at phi(y)
        const Vec gSh = Ainv_T * g.grad_entropy(y);

        j_skew.max_error = std::max(j_skew.max_error, detail::skew_error(Jh));
        k_sym.max_error = std::max(k_sym.max_error, detail::sym_error(Kh));
        k_psd.max_error = std::max(k_psd.max_error, detail::psd_error(Kh));
        nic_a.max_error = std::max(nic_a.max_error, (Jh * gSh).cwiseAbs().maxCoeff());
        nic_b.max_error = std::max(nic_b.max_error, (Kh * gEh).cwiseAbs().maxCoeff());
        fdr.max_error = std::max(fdr.max_error,
                                 (Sh * Sh.transpose() - 2.0 * Kh).cwiseAbs().maxCoeff());

        if (phi.phi_inverse) {
            const Vec back = phi.phi_inverse(phi.phi(y));
            energy_pullback.max_error = std::max(energy_pullback.max_error,
                                                 std::abs(g.energy(back) - g.energy(y)));
        }
        // the Dphi-push identity for the J,K part holds pointwise for any diffeo;
        // div-K corrections would differ for nonlinear maps
        const Vec pushed = A * assemble_drift(g, y, false);
        const Vec assembled = Jh * gEh + Kh * gSh;
        drift_push.max_error = std::max(drift_push.max_error,
                                        (pushed - assembled).cwiseAbs().maxCoeff());
    }
    for (CheckRow* r : {&j_skew, &k_sym, &k_psd, &nic_a, &nic_b, &fdr, &energy_pullback,
                        &drift_push}) {
        r->pass = r->max_error <= r->tol;
        rep.rows.push_back(*r);
    }
    return rep;
}

} // namespace cgbath::generic
