// dilation.hpp — Heat-bath observables f_j, shifted Gram matrices, grid projection,
// and numerical checks of the compression property.
//
// General mode realizes f_j(y) = (D+D^T)^{1/2} e^{yD} e_j for y <= 0 (zero above),
// which makes {f_j} orthonormal in L^2(R;R^d) and gives the compression contract
//   <f_i, f_j(.-t)> = (e^{-tD})_{ij}   for t >= 0,   (e^{tD^T})_{ij} for t <= 0.
// Running-example mode is the same family for the 3x3 rotating-block generator,
// with elementary closed forms.

#pragma once

#include "cgbath/errors.hpp"
#include "cgbath/model.hpp"
#include "cgbath/util.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <utility>
#include <vector>

namespace cgbath::dilation {

using cgbath::Mat;
using cgbath::Vec;

// y_max such that the L^2 tail bound e^{-2 alpha y_max} drops below `tail`
inline double default_y_max(double alpha, double tail = 1e-13) {
    return -std::log(tail) / (2.0 * alpha);
}

struct DilationBasis {
    enum class Mode { running_example, general };

    Mode mode{Mode::running_example};
    int d{3};
    double theta1{1.0}, theta2{0.5}, varsigma{2.0}; // running example parameters
    Mat D;         // generator (both modes)
    Mat sigma_D;   // (D+D^T)^{1/2}
    double alpha{0.0};
    double y_max{0.0};
};

inline DilationBasis make_running_example_basis(double theta1 = 1.0, double theta2 = 0.5,
                                                double varsigma = 2.0, double y_max = -1.0) {
    DilationBasis b;
    b.mode = DilationBasis::Mode::running_example;
    b.d = 3;
    b.theta1 = theta1;
    b.theta2 = theta2;
    b.varsigma = varsigma;
    b.D = model::running_example_D(theta1, theta2, varsigma);
    Vec diag(3);
    diag << 2.0 * theta1, 2.0 * theta2, 2.0 * theta2;
    b.sigma_D = Mat(diag.cwiseSqrt().asDiagonal());
    b.alpha = std::min(theta1, theta2);
    b.y_max = y_max > 0 ? y_max : default_y_max(b.alpha);
    return b;
}

inline DilationBasis make_general_basis(const Mat& D, double y_max = -1.0) {
    DilationBasis b;
    b.mode = DilationBasis::Mode::general;
    b.d = static_cast<int>(D.rows());
    b.D = D;
    Eigen::SelfAdjointEigenSolver<Mat> es(D + D.transpose());
    b.alpha = 0.5 * es.eigenvalues().minCoeff();
    if (b.alpha <= 0.0) {
        throw SpectralGapError("make_general_basis: D+D^T must be positive definite");
    }
    b.sigma_D = es.eigenvectors() * es.eigenvalues().cwiseSqrt().asDiagonal() *
                es.eigenvectors().transpose();
    b.y_max = y_max > 0 ? y_max : default_y_max(b.alpha);
    return b;
}

// f_j(y), 0-based j
inline Vec eval_basis(const DilationBasis& b, int j, double y) {
    if (j < 0 || j >= b.d) throw ShapeError("eval_basis: basis index out of range");
    if (y > 0.0) return Vec::Zero(b.d);
    if (b.mode == DilationBasis::Mode::running_example) {
        Vec f = Vec::Zero(3);
        if (j == 0) {
            f[0] = std::sqrt(2.0 * b.theta1) * std::exp(b.theta1 * y);
            return f;
        }
        const double a = std::sqrt(2.0 * b.theta2) * std::exp(b.theta2 * y);
        const double c = std::cos(b.varsigma * y), s = std::sin(b.varsigma * y);
        if (j == 1) {
            f[1] = a * c;
            f[2] = a * s;
        } else {
            f[1] = -a * s;
            f[2] = a * c;
        }
        return f;
    }
    return b.sigma_D * (y * b.D).exp() * Vec::Unit(b.d, j);
}

// All basis columns at once: column j = f_j(y)
inline Mat eval_basis_matrix(const DilationBasis& b, double y) {
    if (y > 0.0) return Mat::Zero(b.d, b.d);
    if (b.mode == DilationBasis::Mode::running_example) {
        Mat F(3, 3);
        for (int j = 0; j < 3; ++j) F.col(j) = eval_basis(b, j, y);
        return F;
    }
    return b.sigma_D * (y * b.D).exp();
}

namespace detail {

// integrand of the shifted Gram: F(y)^T F(y-t) = e^{yD^T} (D+D^T) e^{(y-t)D}
inline Mat gram_integrand(const DilationBasis& b, double y, double t) {
    return eval_basis_matrix(b, y).transpose() * eval_basis_matrix(b, y - t);
}

inline Mat gram_quadrature(const DilationBasis& b, double t, double tol, int max_panels) {
    const double hi = std::min(0.0, t);
    const double lo = -b.y_max + std::min(0.0, t);
    static const GaussLegendre gl(16);
    Mat prev;
    for (int panels = 8; panels <= max_panels; panels *= 2) {
        Mat acc = Mat::Zero(b.d, b.d);
        const double w = (hi - lo) / panels;
        for (int p = 0; p < panels; ++p) {
            const double a = lo + p * w;
            for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
                const double y = a + 0.5 * w * (gl.nodes[k] + 1.0);
                acc += (0.5 * w * gl.weights[k]) * gram_integrand(b, y, t);
            }
        }
        if (prev.size() > 0 && (acc - prev).cwiseAbs().maxCoeff() < tol) return acc;
        prev = std::move(acc);
    }
    throw QuadratureError("gram_quadrature: tolerance " + std::to_string(tol) +
                          " unreachable at max panel count");
}

} // namespace detail

// <f_i, f_j(.-t)>; closed form in running-example mode, quadrature otherwise
inline Mat gram_shifted(const DilationBasis& b, double t, double quad_tol = 1e-10) {
    if (b.mode == DilationBasis::Mode::running_example) {
        if (t < 0.0) return gram_shifted(b, -t, quad_tol).transpose();
        Mat G = Mat::Zero(3, 3);
        G(0, 0) = std::exp(-b.theta1 * t);
        const double a = std::exp(-b.theta2 * t);
        const double c = std::cos(b.varsigma * t), s = std::sin(b.varsigma * t);
        G(1, 1) = a * c;
        G(1, 2) = a * s;
        G(2, 1) = -a * s;
        G(2, 2) = a * c;
        return G;
    }
    return detail::gram_quadrature(b, t, quad_tol, 4096);
}

// quadrature path regardless of mode (oracle cross-check for the closed forms)
inline Mat gram_shifted_quadrature(const DilationBasis& b, double t, double tol = 1e-10) {
    return detail::gram_quadrature(b, t, tol, 4096);
}

struct GridField {
    double left{0.0};
    double right{0.0};
    double h{0.0};
    Mat values; // d x cells, cell-centered samples

    int cells() const { return static_cast<int>(values.cols()); }
    double center(int i) const { return left + (i + 0.5) * h; }
};

inline GridField make_grid(double left, double right, double h, int d) {
    GridField g;
    g.left = left;
    g.right = right;
    g.h = h;
    const double cells_real = (right - left) / h;
    const int cells = static_cast<int>(std::lround(cells_real));
    if (std::abs(cells_real - cells) > 1e-9 || cells <= 0) {
        throw ShapeError("make_grid: (right-left)/h must be a positive integer");
    }
    g.values = Mat::Zero(d, cells);
    return g;
}

// w_j = h * sum_i f_j(y_i) . field(y_i) over cells in [-y_max, 0]
inline Vec project_P(const DilationBasis& b, const GridField& field) {
    if (field.left > -b.y_max + 1e-12 || field.right < -1e-12) {
        throw GridCoverageError("project_P: grid must cover [-y_max, 0]");
    }
    Vec w = Vec::Zero(b.d);
    for (int i = 0; i < field.cells(); ++i) {
        const double y = field.center(i);
        if (y < -b.y_max || y > 0.0) continue;
        w += field.h * eval_basis_matrix(b, y).transpose() * field.values.col(i);
    }
    return w;
}

struct CompressionReport {
    double max_error{0.0};
    double tol{0.0};
    bool pass{false};
    std::vector<std::pair<double, double>> per_t; // (t, error)
};

// || gram_shifted(t) - e^{-tD} ||_F  (t>=0; e^{tD^T} for t<0) over a list of times
inline CompressionReport verify_compression(const DilationBasis& b,
                                            const std::vector<double>& ts, double tol) {
    CompressionReport rep;
    rep.tol = tol;
    for (double t : ts) {
        const Mat expected = t >= 0.0 ? Mat((-t * b.D).exp())
                                      : Mat((t * b.D.transpose()).exp());
        const double err = (gram_shifted(b, t) - expected).norm();
        rep.per_t.emplace_back(t, err);
        rep.max_error = std::max(rep.max_error, err);
    }
    rep.pass = rep.max_error <= tol;
    return rep;
}

// || int_{-y_max}^0 e^{yD^T} (D+D^T) e^{yD} dy  -  I ||_F
inline double verify_dilation_identity(const Mat& D, double y_max) {
    const int d = static_cast<int>(D.rows());
    static const GaussLegendre gl(16);
    const Mat S = D + D.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (es.eigenvalues().minCoeff() <= 0.0) {
        throw SpectralGapError("verify_dilation_identity: D+D^T must be positive definite");
    }
    const int panels = std::max(32, static_cast<int>(y_max * 4));
    Mat acc = Mat::Zero(d, d);
    const double w = y_max / panels;
    for (int p = 0; p < panels; ++p) {
        const double a = -y_max + p * w;
        for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
            const double y = a + 0.5 * w * (gl.nodes[k] + 1.0);
            const Mat E = (y * D).exp();
            acc += (0.5 * w * gl.weights[k]) * (E.transpose() * S * E);
        }
    }
    return (acc - Mat::Identity(d, d)).norm();
}

} // namespace cgbath::dilation
