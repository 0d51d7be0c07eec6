// ensemble.hpp — Invariant-measure samplers and statistical-mechanics checks:
// random-walk Metropolis for mu_{beta,Z}, the exact nu_beta two-stage sampler,
// microcanonical partition-function asymptotics, uniform sphere-shell sampling,
// and the SDE invariance test.

#pragma once

#include "cgbath/errors.hpp"
#include "cgbath/macrodyn.hpp"
#include "cgbath/model.hpp"
#include "cgbath/rng.hpp"
#include "cgbath/util.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace cgbath::ensemble {

using cgbath::Mat;
using cgbath::Vec;

struct MeasureSpec {
    model::SystemSpec spec;
    double proposal_std{0.5};
    int burn_in{4000};
    int thin{10};
    int chains{4};
};

struct McmcDiagnostics {
    double acceptance_rate{0.0};
    double max_split_rhat{0.0};
};

namespace detail {

// log density of mu_{beta,Z} up to the normalizing constant
inline double log_target(const model::SystemSpec& spec, const Vec& z) {
    const double hc = model::hamiltonian_A(spec, z) -
                      0.5 * model::coupling_q(spec, z).squaredNorm();
    return -spec.beta * hc;
}

inline double split_rhat(const std::vector<std::vector<double>>& chains) {
    // split each chain in half; compare between- and within-half variances
    std::vector<RunningStat> halves;
    for (const auto& c : chains) {
        const std::size_t half = c.size() / 2;
        RunningStat a, b;
        for (std::size_t i = 0; i < half; ++i) a.push(c[i]);
        for (std::size_t i = half; i < 2 * half; ++i) b.push(c[i]);
        halves.push_back(a);
        halves.push_back(b);
    }
    const double m = static_cast<double>(halves.size());
    const double n = static_cast<double>(halves.front().n);
    double grand = 0.0, W = 0.0;
    for (const auto& h : halves) {
        grand += h.mean / m;
        W += h.variance() / m;
    }
    double B = 0.0;
    for (const auto& h : halves) B += (h.mean - grand) * (h.mean - grand) * n / (m - 1.0);
    if (W <= 0.0) return 1.0;
    const double var_plus = (n - 1.0) / n * W + B / n;
    return std::sqrt(var_plus / W);
}

} // namespace detail

// Random-walk Metropolis targeting exp(-beta (H_A(z) - |C z|^2 / 2)).
// Chains are monitored for monotone escape, which flags a non-integrable target.
inline std::vector<Vec> sample_mu_beta_Z(const MeasureSpec& mspec, int count,
                                         std::uint64_t seed,
                                         McmcDiagnostics* diag = nullptr) {
    const auto& spec = mspec.spec;
    const int dim = 2 * spec.n;
    const int chains = std::max(1, mspec.chains);
    const int per_chain = (count + chains - 1) / chains;
    const long steps_per_chain =
        static_cast<long>(mspec.burn_in) + static_cast<long>(per_chain) * mspec.thin;

    std::vector<Vec> samples;
    samples.reserve(static_cast<std::size_t>(per_chain) * chains);
    std::vector<std::vector<double>> rhat_tracks(chains); // first coordinate per kept draw
    long accepted = 0, proposed = 0;

    for (int c = 0; c < chains; ++c) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(c));
        Vec z = 2.0 * rng.normal_vec(dim); // dispersed starts for the diagnostic
        double lp = detail::log_target(spec, z);

        // monotone-escape detector: block minima of the effective energy -lp/beta
        const int block = 1000, window = 10;
        std::vector<double> block_min;
        double cur_min = -lp / spec.beta;
        long in_block = 0;

        for (long it = 0; it < steps_per_chain; ++it) {
            const Vec prop = z + mspec.proposal_std * rng.normal_vec(dim);
            const double lp_prop = detail::log_target(spec, prop);
            ++proposed;
            if (std::log(rng.uniform01()) < lp_prop - lp) {
                z = prop;
                lp = lp_prop;
                ++accepted;
            }
            cur_min = std::min(cur_min, -lp / spec.beta);
            if (++in_block == block) {
                block_min.push_back(cur_min);
                in_block = 0;
                cur_min = -lp / spec.beta;
                if (static_cast<int>(block_min.size()) >= window) {
                    bool escaping = true;
                    const std::size_t base = block_min.size() - window;
                    for (std::size_t b = base + 1; b < block_min.size(); ++b) {
                        if (block_min[b] >= block_min[b - 1]) {
                            escaping = false;
                            break;
                        }
                    }
                    if (escaping &&
                        block_min.back() < block_min[base] - 10.0 / spec.beta) {
                        throw DivergenceError(
                            "sample_mu_beta_Z: chain energy escapes to -infinity; "
                            "target appears non-integrable");
                    }
                }
            }
            if (it >= mspec.burn_in && (it - mspec.burn_in) % mspec.thin == 0 &&
                static_cast<int>(rhat_tracks[c].size()) < per_chain) {
                samples.push_back(z);
                rhat_tracks[c].push_back(z[0]);
            }
        }
    }

    const double rhat = chains > 1 ? detail::split_rhat(rhat_tracks) : 1.0;
    if (diag) {
        diag->acceptance_rate = static_cast<double>(accepted) / proposed;
        diag->max_split_rhat = rhat;
    }
    if (rhat >= 1.05) {
        throw DivergenceError("sample_mu_beta_Z: split-Rhat " + std::to_string(rhat) +
                              " >= 1.05, chains not mixed");
    }
    samples.resize(count);
    return samples;
}

// nu_beta factorizes: z from mu_{beta,Z}, then w | z ~ N(-C q, I/beta)
inline std::vector<std::pair<Vec, Vec>> sample_nu_beta(const MeasureSpec& mspec, int count,
                                                       std::uint64_t seed,
                                                       McmcDiagnostics* diag = nullptr) {
    const auto zs = sample_mu_beta_Z(mspec, count, seed, diag);
    Rng rng = Rng::substream(seed, 0x77ULL);
    std::vector<std::pair<Vec, Vec>> out;
    out.reserve(zs.size());
    const double sd = 1.0 / std::sqrt(mspec.spec.beta);
    for (const auto& z : zs) {
        Vec w = -model::coupling_q(mspec.spec, z) + sd * rng.normal_vec(mspec.spec.d);
        out.emplace_back(z, std::move(w));
    }
    return out;
}

// log of the microcanonical partition function: the energy shell at n/(2 beta) + e
// in n dimensions is a sphere of radius r = sqrt(n/beta + 2e), with
//   log Z = log(n omega_n) + (n-2)/2 log(n/beta + 2e),  omega_n = unit-ball volume.
inline double microcanonical_logZ(double n, double beta, double e) {
    const double r2 = n / beta + 2.0 * e;
    if (!(r2 > 0.0)) {
        throw DomainError("microcanonical_logZ: n/beta + 2e must be positive");
    }
    const double log_omega = 0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n + 1.0);
    return std::log(n) + log_omega + 0.5 * (n - 2.0) * std::log(r2);
}

inline double microcanonical_C(double n, double beta) {
    const double log_omega = 0.5 * n * std::log(M_PI) - std::lgamma(0.5 * n + 1.0);
    return std::log(n) + log_omega + 0.5 * (n - 2.0) * std::log(n / beta);
}

// logZ - C(beta,n) - beta e, evaluated in cancelled form (exact at e = 0,
// no large-number subtraction): (n-2)/2 log1p(2 beta e / n) - beta e
inline double normalized_gap(double n, double beta, double e) {
    const double x = 2.0 * beta * e / n;
    if (!(1.0 + x > 0.0) || !(n / beta > 0.0)) {
        throw DomainError("normalized_gap: n/beta + 2e must be positive");
    }
    return 0.5 * (n - 2.0) * std::log1p(x) - beta * e;
}

struct SphereStats {
    Vec mean, mean_se;
    Mat cov, cov_se;
    Vec excess_kurtosis, kurt_se;
};

// Uniform samples on the sphere of radius sqrt(n R); statistics of the first k
// coordinates. Each coordinate has exact second moment R.
inline SphereStats sphere_sample(int n, double R, int count, int k, std::uint64_t seed,
                                 int threads = 1) {
    if (k > n) throw ShapeError("sphere_sample: k must be <= n");
    Mat coords(k, count);
    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
        Rng rng = Rng::substream(seed, i);
        double sumsq = 0.0;
        Vec head(k);
        for (int j = 0; j < n; ++j) {
            const double g = rng.normal();
            sumsq += g * g;
            if (j < k) head[j] = g;
        }
        coords.col(static_cast<long>(i)) = std::sqrt(n * R / sumsq) * head;
    });

    SphereStats st;
    st.mean = coords.rowwise().mean();
    st.mean_se = Vec(k);
    st.cov = Mat::Zero(k, k);
    st.cov_se = Mat::Zero(k, k);
    st.excess_kurtosis = Vec(k);
    st.kurt_se = Vec(k);
    const double M = count;
    for (int a = 0; a < k; ++a) {
        RunningStat sa;
        for (int i = 0; i < count; ++i) sa.push(coords(a, i));
        st.mean_se[a] = sa.stderror();
        for (int b = a; b < k; ++b) {
            RunningStat sp;
            for (int i = 0; i < count; ++i) sp.push(coords(a, i) * coords(b, i));
            st.cov(a, b) = st.cov(b, a) = sp.mean;
            st.cov_se(a, b) = st.cov_se(b, a) = sp.stderror();
        }
        double m2 = 0.0, m4 = 0.0;
        for (int i = 0; i < count; ++i) {
            const double x2 = coords(a, i) * coords(a, i);
            m2 += x2 / M;
            m4 += x2 * x2 / M;
        }
        st.excess_kurtosis[a] = m4 / (m2 * m2) - 3.0;
        st.kurt_se[a] = std::sqrt(24.0 / M);
    }
    return st;
}

struct VarianceBoundReport {
    struct Row {
        int n{0};
        double estimate{0.0};
        double se{0.0};
        double bound{0.0};
        bool pass{false};
    };
    std::vector<Row> rows;
    double weight_sum{0.0}; // sum over i <= max n of lambda_i

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

// E sum_i lambda_i y_i^2 over sphere shells of radius sqrt(nR); asserted against
// the fixed factor 1.5 * R * sum lambda_i, uniformly in n
inline VarianceBoundReport variance_bound_check(
    const std::vector<int>& ns, double R, int count, std::uint64_t seed,
    const std::function<double(int)>& weight = [](int i) { return 1.0 / (double(i) * i); }) {
    VarianceBoundReport rep;
    for (int n : ns) {
        double lam_sum = 0.0;
        Vec lam(n);
        for (int i = 0; i < n; ++i) {
            lam[i] = weight(i + 1);
            lam_sum += lam[i];
        }
        RunningStat stat;
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(n));
        for (int s = 0; s < count; ++s) {
            Vec g = rng.normal_vec(n);
            const double scale = n * R / g.squaredNorm();
            stat.push(scale * g.cwiseProduct(g).dot(lam));
        }
        VarianceBoundReport::Row row;
        row.n = n;
        row.estimate = stat.mean;
        row.se = stat.stderror();
        row.bound = 1.5 * R * lam_sum;
        row.pass = row.estimate <= row.bound;
        rep.rows.push_back(row);
        rep.weight_sum = lam_sum;
    }
    return rep;
}

struct InvarianceReport {
    struct Row {
        std::string name;
        double moment_t0{0.0};
        double moment_T{0.0};
        double se{0.0};
        double allowance{0.0};
        bool pass{false};
    };
    std::vector<Row> rows;
    double T{0.0}, dt{0.0};
    int count{0};

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

// Draw from nu_beta, evolve each sample to time T with the macro SDE, and compare
// first/second moments of (z,w) at times 0 and T (paired differences, 4 SE + 5 dt).
inline InvarianceReport invariance_test(const model::SystemSpec& spec,
                                        const model::DerivedOperators& derived, double T,
                                        double dt, int count, std::uint64_t seed,
                                        int threads = 1,
                                        const MeasureSpec* mspec_in = nullptr) {
    MeasureSpec mspec;
    mspec.spec = spec;
    if (mspec_in) mspec = *mspec_in;
    const auto start = sample_nu_beta(mspec, count, seed);

    const int dim = 2 * spec.n + spec.d;
    Mat at0(dim, count), atT(dim, count);
    macrodyn::IntegratorConfig cfg;
    cfg.dt = dt;
    cfg.scheme = macrodyn::Scheme::euler_maruyama;
    const long steps = std::lround(T / dt);

    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t i) {
        Rng rng = Rng::substream(seed ^ 0x5bd1e995ULL, i);
        macrodyn::MacroState s;
        s.z = start[i].first;
        s.w = start[i].second;
        Vec y0(dim);
        y0 << s.z, s.w;
        at0.col(static_cast<long>(i)) = y0;
        for (long k = 0; k < steps; ++k) s = macrodyn::step_sde(s, spec, derived, cfg, rng);
        Vec yT(dim);
        yT << s.z, s.w;
        atT.col(static_cast<long>(i)) = yT;
    });

    InvarianceReport rep;
    rep.T = T;
    rep.dt = dt;
    rep.count = count;
    const auto push_row = [&](const std::string& name, const std::function<double(const Vec&)>& f) {
        RunningStat d0, dT, diff;
        for (int i = 0; i < count; ++i) {
            const double a = f(at0.col(i));
            const double b = f(atT.col(i));
            d0.push(a);
            dT.push(b);
            diff.push(b - a);
        }
        InvarianceReport::Row row;
        row.name = name;
        row.moment_t0 = d0.mean;
        row.moment_T = dT.mean;
        row.se = diff.stderror();
        row.allowance = 4.0 * row.se + 5.0 * dt;
        row.pass = std::abs(diff.mean) <= row.allowance;
        rep.rows.push_back(row);
    };

    for (int a = 0; a < dim; ++a) {
        push_row("mean[" + std::to_string(a) + "]",
                 [a](const Vec& y) { return y[a]; });
    }
    for (int a = 0; a < dim; ++a) {
        for (int b = a; b < dim; ++b) {
            push_row("second[" + std::to_string(a) + "," + std::to_string(b) + "]",
                     [a, b](const Vec& y) { return y[a] * y[b]; });
        }
    }
    return rep;
}

} // namespace cgbath::ensemble
