// model.hpp — Problem definition: System A, bath generator, coupling, derived operators
//
// State conventions: z = (q,p) in R^{2n}; the observable bath coordinates w live
// in R^d through the orthonormal basis {f_j}, so the coupling acts as
//   C z     = C_mat * q            (d-vector)
//   C^* w   = (C_mat^T * w, 0)     (2n-vector, q-slot only)

#pragma once

#include "cgbath/errors.hpp"
#include "cgbath/util.hpp"

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <utility>

namespace cgbath::model {

using cgbath::Mat;
using cgbath::Vec;

enum class PotentialKind { quadratic, quartic };

struct SystemSpec {
    int n{1};
    int d{3};
    double beta{1.0};

    PotentialKind potential_kind{PotentialKind::quadratic};
    double pot_a{1.0}; // V = (a/2)|q|^2 ...
    double pot_b{0.0}; //   ... + (b/4) sum_i q_i^4 for the quartic variant

    std::function<double(const Vec&)> potential;
    std::function<Vec(const Vec&)> grad_potential;

    bool canonical_poisson{true};
    std::function<Mat(const Vec&)> poisson; // J_A(z), used when !canonical_poisson

    Mat D;     // d x d compression generator
    Mat C_mat; // d x n coupling coordinates, row j = c^j
};

inline void set_potential(SystemSpec& spec, PotentialKind kind, double a, double b = 0.0) {
    spec.potential_kind = kind;
    spec.pot_a = a;
    spec.pot_b = (kind == PotentialKind::quadratic) ? 0.0 : b;
    const double bb = spec.pot_b;
    spec.potential = [a, bb](const Vec& q) {
        double v = 0.5 * a * q.squaredNorm();
        if (bb != 0.0) v += 0.25 * bb * q.array().pow(4).sum();
        return v;
    };
    spec.grad_potential = [a, bb](const Vec& q) {
        Vec g = a * q;
        if (bb != 0.0) g += bb * q.array().cube().matrix();
        return g;
    };
}

inline Mat running_example_D(double theta1, double theta2, double varsigma) {
    Mat D = Mat::Zero(3, 3);
    D(0, 0) = theta1;
    D(1, 1) = theta2;
    D(2, 2) = theta2;
    D(1, 2) = -varsigma;
    D(2, 1) = varsigma;
    return D;
}

// n=1 canonical system with quadratic well and the 3-dimensional rotating bath
inline SystemSpec make_running_example(double theta1 = 1.0, double theta2 = 0.5,
                                       double varsigma = 2.0, double beta = 1.0) {
    SystemSpec spec;
    spec.n = 1;
    spec.d = 3;
    spec.beta = beta;
    set_potential(spec, PotentialKind::quadratic, 1.0);
    spec.D = running_example_D(theta1, theta2, varsigma);
    spec.C_mat = Mat(3, 1);
    spec.C_mat << 1.0, 0.5, 0.0;
    return spec;
}

struct DerivedOperators {
    Mat D_sym;
    Mat D_skw;
    Mat Sigma;          // symmetric PSD root of (D + D^T)/beta
    double alpha{0.0};  // smallest eigenvalue of D_sym
    bool coupling_confining{true}; // min eig(I - C^T C) > 0; warning flag, not an error
};

inline DerivedOperators build_derived(const SystemSpec& spec) {
    DerivedOperators out;
    out.D_sym = 0.5 * (spec.D + spec.D.transpose());
    out.D_skw = 0.5 * (spec.D - spec.D.transpose());

    Eigen::SelfAdjointEigenSolver<Mat> es(out.D_sym);
    out.alpha = es.eigenvalues().minCoeff();
    if (out.alpha <= 1e-12) {
        throw SpectralGapError("build_derived: min eigenvalue of (D+D^T)/2 is " +
                               std::to_string(out.alpha) + ", must be > 1e-12");
    }

    // unique symmetric PSD square root, fixed for seed reproducibility
    Eigen::SelfAdjointEigenSolver<Mat> es2((spec.D + spec.D.transpose()) / spec.beta);
    Vec lam = es2.eigenvalues().cwiseMax(0.0);
    out.Sigma = es2.eigenvectors() * lam.cwiseSqrt().asDiagonal() *
                es2.eigenvectors().transpose();

    Mat conf = Mat::Identity(spec.n, spec.n) - spec.C_mat.transpose() * spec.C_mat;
    Eigen::SelfAdjointEigenSolver<Mat> es3(conf);
    out.coupling_confining = es3.eigenvalues().minCoeff() > 0.0;
    return out;
}

inline double hamiltonian_A(const SystemSpec& spec, const Vec& z) {
    const auto q = z.head(spec.n);
    const auto p = z.tail(spec.n);
    return 0.5 * p.squaredNorm() + spec.potential(q);
}

inline Vec grad_hamiltonian_A(const SystemSpec& spec, const Vec& z) {
    Vec g(2 * spec.n);
    g.head(spec.n) = spec.grad_potential(z.head(spec.n));
    g.tail(spec.n) = z.tail(spec.n);
    return g;
}

inline Vec coupling_q(const SystemSpec& spec, const Vec& z) {
    return spec.C_mat * z.head(spec.n);
}

// C^* w as an element of R^{2n} (acts on the q-slot only)
inline Vec coupling_adjoint(const SystemSpec& spec, const Vec& w) {
    Vec g = Vec::Zero(2 * spec.n);
    g.head(spec.n) = spec.C_mat.transpose() * w;
    return g;
}

inline double hamiltonian_zw(const SystemSpec& spec, const Vec& z, const Vec& w) {
    return hamiltonian_A(spec, z) + coupling_q(spec, z).dot(w) + 0.5 * w.squaredNorm();
}

inline std::pair<Vec, Vec> grad_hamiltonian_zw(const SystemSpec& spec, const Vec& z,
                                               const Vec& w) {
    Vec gz = grad_hamiltonian_A(spec, z) + coupling_adjoint(spec, w);
    Vec gw = w + coupling_q(spec, z);
    return {std::move(gz), std::move(gw)};
}

inline Mat poisson_matrix(const SystemSpec& spec, const Vec& z) {
    if (spec.canonical_poisson) {
        const int n = spec.n;
        Mat J = Mat::Zero(2 * n, 2 * n);
        J.topRightCorner(n, n) = Mat::Identity(n, n);
        J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
        return J;
    }
    Mat J = spec.poisson(z);
    if ((J + J.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("poisson_matrix: user J_A(z) is not skew-symmetric");
    }
    return J;
}

inline Vec poisson_apply(const SystemSpec& spec, const Vec& z, const Vec& v) {
    if (spec.canonical_poisson) {
        const int n = spec.n;
        Vec out(2 * n);
        out.head(n) = v.tail(n);
        out.tail(n) = -v.head(n);
        return out;
    }
    return poisson_matrix(spec, z) * v;
}

} // namespace cgbath::model
