// ou.hpp — Exact simulation and statistics of the W-valued Ornstein-Uhlenbeck
// process induced by the compressed heat bath:  dY + D Y dt = Sigma dB.
//
// The per-step transition is sampled exactly (no time-discretization bias), so
// this module doubles as the unbiased oracle for the Euler-Maruyama macro SDE.

#pragma once

#include "cgbath/errors.hpp"
#include "cgbath/model.hpp"
#include "cgbath/rng.hpp"
#include "cgbath/util.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstdint>
#include <vector>

namespace cgbath::ou {

using cgbath::Mat;
using cgbath::Vec;

struct OUParams {
    Mat D;
    double beta{1.0};
    Mat Sigma;
    double dt{0.0};
    Mat E; // e^{-dt D}
    Mat Q; // step-noise covariance
    Mat L; // factor with L L^T = Q
};

namespace detail {

inline Mat psd_factor(const Mat& Q) {
    Eigen::LLT<Mat> llt(Q);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    // symmetric-eigendecomposition fallback for semi-definite or noisy Q
    Eigen::SelfAdjointEigenSolver<Mat> es(Q);
    if (es.eigenvalues().minCoeff() < -1e-10) {
        throw FactorizationError("ou: step covariance is numerically indefinite (min eig " +
                                 std::to_string(es.eigenvalues().minCoeff()) + ")");
    }
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

} // namespace detail

inline OUParams make_params(const Mat& D, double beta, const Mat& Sigma, double dt) {
    OUParams p;
    p.D = D;
    p.beta = beta;
    p.Sigma = Sigma;
    p.dt = dt;
    const int d = static_cast<int>(D.rows());
    p.E = (-dt * D).exp();
    const Mat fdr = (D + D.transpose()) / beta;
    const double scale = std::max(1.0, fdr.cwiseAbs().maxCoeff());
    if ((Sigma * Sigma.transpose() - fdr).cwiseAbs().maxCoeff() < 1e-12 * scale) {
        // Lyapunov closed form: stationary covariance is I/beta
        p.Q = (Mat::Identity(d, d) - p.E * p.E.transpose()) / beta;
    } else {
        // general noise intensity (e.g. Sigma = 0), integrate the transition covariance
        static const GaussLegendre gl(16);
        p.Q = Mat::Zero(d, d);
        const int panels = 8;
        const double w = dt / panels;
        for (int pa = 0; pa < panels; ++pa) {
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                const double s = pa * w + 0.5 * w * (gl.nodes[k] + 1.0);
                const Mat Es = (-s * D).exp();
                p.Q += (0.5 * w * gl.weights[k]) *
                       (Es * Sigma * Sigma.transpose() * Es.transpose());
            }
        }
    }
    p.L = detail::psd_factor(p.Q);
    return p;
}

inline OUParams make_params(const model::SystemSpec& spec,
                            const model::DerivedOperators& derived, double dt) {
    return make_params(spec.D, spec.beta, derived.Sigma, dt);
}

// exact Gaussian transition over dt
inline Vec exact_step(const OUParams& p, const Vec& y, Rng& rng) {
    return p.E * y + p.L * rng.normal_vec(y.size());
}

// draw from the stationary law N(0, I/beta)
inline Vec sample_stationary(const OUParams& p, Rng& rng) {
    return rng.normal_vec(p.D.rows()) / std::sqrt(p.beta);
}

// R(s,t) = E[Y_t (x) Y_s]
inline Mat covariance(const OUParams& p, double s, double t) {
    if (t >= s) return (-(t - s) * p.D).exp() / p.beta;
    return (-(s - t) * p.D.transpose()).exp() / p.beta;
}

struct OUPath {
    std::vector<double> times;
    std::vector<Vec> values;
    std::uint64_t seed{0};
};

inline OUPath sample_path(const OUParams& p, int steps, std::uint64_t master_seed,
                          std::uint64_t path_index, bool stationary_start = true) {
    Rng rng = Rng::substream(master_seed, path_index);
    OUPath path;
    path.seed = master_seed;
    path.times.reserve(steps + 1);
    path.values.reserve(steps + 1);
    Vec y = stationary_start ? sample_stationary(p, rng)
                             : Vec(Vec::Zero(p.D.rows()));
    path.times.push_back(0.0);
    path.values.push_back(y);
    for (int k = 1; k <= steps; ++k) {
        y = exact_step(p, y, rng);
        path.times.push_back(k * p.dt);
        path.values.push_back(y);
    }
    return path;
}

struct CovEstimate {
    Mat mean; // empirical (1/M) sum Y_lag (x) Y_0
    Mat se;   // per-entry standard error
};

inline CovEstimate estimate_covariance(const std::vector<OUPath>& paths, int lag_index) {
    if (paths.empty()) throw ShapeError("estimate_covariance: no paths");
    const int d = static_cast<int>(paths.front().values.front().size());
    for (const auto& p : paths) {
        if (static_cast<int>(p.values.size()) <= lag_index ||
            p.values.size() != paths.front().values.size()) {
            throw ShapeError("estimate_covariance: paths must share the time grid and cover the lag");
        }
    }
    const double M = static_cast<double>(paths.size());
    Mat mean = Mat::Zero(d, d), m2 = Mat::Zero(d, d);
    long k = 0;
    for (const auto& p : paths) {
        const Mat prod = p.values[lag_index] * p.values[0].transpose();
        ++k;
        const Mat delta = prod - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta.cwiseProduct(prod - mean);
    }
    CovEstimate est;
    est.mean = mean;
    est.se = (m2 / std::max(1.0, M - 1.0) / M).cwiseSqrt();
    return est;
}

} // namespace cgbath::ou
