// test_ensemble.cpp — Measure samplers, microcanonical asymptotics, sphere
// statistics, variance bound, and the SDE invariance check

#include "cgbath/ensemble.hpp"
#include "cgbath/model.hpp"
#include "cgbath/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace cgbath;

namespace {

ensemble::MeasureSpec confining_mspec(double beta = 1.0) {
    ensemble::MeasureSpec m;
    m.spec = model::make_running_example(1.0, 0.5, 2.0, beta);
    m.spec.C_mat << 0.4, 0.2, 0.0;
    return m;
}

} // namespace

TEST_CASE("mu_beta_Z sampler: decoupled Gaussian case") {
    ensemble::MeasureSpec m;
    m.spec = model::make_running_example();
    m.spec.n = 2;
    m.spec.C_mat = Mat::Zero(3, 2);
    m.thin = 8;
    ensemble::McmcDiagnostics diag;
    const int M = 20000;
    auto zs = ensemble::sample_mu_beta_Z(m, M, 314, &diag);
    REQUIRE(static_cast<int>(zs.size()) == M);
    CHECK(diag.max_split_rhat < 1.05);
    CHECK(diag.acceptance_rate > 0.1);
    CHECK(diag.acceptance_rate < 0.9);

    // target is N(0, I_4); effective sample size is reduced by chain
    // autocorrelation, allow a generous factor on the iid standard error
    Mat cov = Mat::Zero(4, 4);
    Vec mean = Vec::Zero(4);
    for (const auto& z : zs) {
        mean += z / M;
        cov += z * z.transpose() / M;
    }
    const double se = std::sqrt(2.0 / M);
    CHECK(mean.cwiseAbs().maxCoeff() < 10.0 / std::sqrt(static_cast<double>(M)));
    CHECK((cov - Mat::Identity(4, 4)).cwiseAbs().maxCoeff() < 10.0 * se);
}

TEST_CASE("mu_beta_Z sampler: Laplace scaling at large beta") {
    auto m = confining_mspec(100.0);
    m.proposal_std = 0.08;
    auto zs = ensemble::sample_mu_beta_Z(m, 20000, 2718);
    // effective q-potential (1 - |C|^2) q^2 / 2, variance 1/(beta (1 - |C|^2))
    RunningStat q2;
    for (const auto& z : zs) q2.push(z[0] * z[0]);
    const double expect = 1.0 / (m.spec.beta * 0.8);
    CHECK(std::abs(q2.mean - expect) / expect < 0.2);
}

TEST_CASE("mu_beta_Z sampler: p marginal is Gaussian for a quartic potential") {
    auto m = confining_mspec(2.0);
    model::set_potential(m.spec, model::PotentialKind::quartic, 1.0, 1.0);
    auto zs = ensemble::sample_mu_beta_Z(m, 20000, 99);
    RunningStat p2;
    for (const auto& z : zs) p2.push(z[1] * z[1]);
    const double se = (1.0 / m.spec.beta) * std::sqrt(2.0 / static_cast<double>(zs.size()));
    CHECK(std::abs(p2.mean - 1.0 / m.spec.beta) < 10.0 * se);
}

TEST_CASE("non-integrable target raises DivergenceError") {
    ensemble::MeasureSpec m;
    m.spec = model::make_running_example(); // |C|^2 = 1.25 inverts the well
    CHECK_THROWS_AS(ensemble::sample_mu_beta_Z(m, 4000, 1), DivergenceError);
}

TEST_CASE("nu_beta sampler: conditional structure of w given z") {
    auto m = confining_mspec(2.0);
    const int M = 20000;
    auto samples = ensemble::sample_nu_beta(m, M, 515);

    // residual r = w + C q should be centered N(0, I/beta), independent of q
    Mat rcov = Mat::Zero(3, 3);
    Vec rmean = Vec::Zero(3);
    RunningStat cross;
    for (const auto& [z, w] : samples) {
        const Vec r = w + model::coupling_q(m.spec, z);
        rmean += r / M;
        rcov += r * r.transpose() / M;
        cross.push(r[0] * z[0]);
    }
    const double se = (1.0 / m.spec.beta) * std::sqrt(2.0 / M);
    CHECK(rmean.cwiseAbs().maxCoeff() < 4.0 / std::sqrt(M * m.spec.beta));
    CHECK((rcov - 0.5 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 4.0 * se);
    CHECK(std::abs(cross.mean) < 4.0 * cross.stderror());
}

TEST_CASE("nu_beta with zero coupling: w independent standard Gaussian") {
    ensemble::MeasureSpec m;
    m.spec = model::make_running_example(1.0, 0.5, 2.0, 4.0);
    m.spec.C_mat = Mat::Zero(3, 1);
    auto samples = ensemble::sample_nu_beta(m, 10000, 616);
    RunningStat w2;
    for (const auto& [z, w] : samples) w2.push(w.squaredNorm());
    const double expect = 3.0 / m.spec.beta;
    CHECK(std::abs(w2.mean - expect) < 4.0 * w2.stderror());
}

TEST_CASE("microcanonical logZ asymptotics") {
    CHECK(ensemble::normalized_gap(1000.0, 1.3, 0.0) == 0.0);

    // n = 1e6, beta = 1, e = 0.7: gap ~ -(2 beta e + beta^2 e^2)/n
    const double gap = ensemble::normalized_gap(1e6, 1.0, 0.7);
    CHECK(std::abs(gap) <= 1e-5);
    CHECK(gap == Catch::Approx(-1.89e-6).epsilon(1e-3));

    const double limit = -(2.0 * 0.7 + 0.49);
    for (double n : {1e4, 1e5, 1e6}) {
        const double scaled = n * ensemble::normalized_gap(n, 1.0, 0.7);
        CHECK(std::abs(scaled - limit) / std::abs(limit) < 0.01);
    }

    // direct subtraction agrees where doubles allow
    const double n = 1e6, beta = 1.0, e = 0.7;
    const double direct = ensemble::microcanonical_logZ(n, beta, e) -
                          ensemble::microcanonical_C(n, beta) - beta * e;
    CHECK(std::abs(direct - gap) < 1e-7);

    CHECK(std::isfinite(ensemble::microcanonical_logZ(1e8, 1.0, 0.7)));
    CHECK_THROWS_AS(ensemble::microcanonical_logZ(1.0, 1.0, -1.0), DomainError);
}

TEST_CASE("sphere marginals approach the Gaussian limit") {
    auto st = ensemble::sphere_sample(2000, 1.0, 50000, 3, 404);
    CHECK((st.cov - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 0.02);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(st.excess_kurtosis[i]) < 0.1);
        CHECK(std::abs(st.mean[i]) < 4.0 / std::sqrt(50000.0));
    }
}

TEST_CASE("two-dimensional sphere marginal is visibly non-Gaussian") {
    auto st = ensemble::sphere_sample(2, 1.0, 20000, 2, 405);
    // exact excess kurtosis of a circle coordinate is -1.5
    CHECK(st.excess_kurtosis[0] < -1.0);
    CHECK(std::abs(st.excess_kurtosis[0] + 1.5) < 0.1);
}

TEST_CASE("sphere coordinates have exact second moment R") {
    auto st = ensemble::sphere_sample(50, 2.5, 40000, 1, 406);
    CHECK(std::abs(st.cov(0, 0) - 2.5) < 4.0 * st.cov_se(0, 0));
}

TEST_CASE("variance bound for trace-class weights") {
    auto rep = ensemble::variance_bound_check({100}, 1.0, 20000, 31);
    REQUIRE(rep.rows.size() == 1);
    // E sum lambda_i y_i^2 = R sum lambda_i ~ 1.635 at n = 100
    CHECK(std::abs(rep.rows[0].estimate - rep.weight_sum) < 4.0 * rep.rows[0].se);
    CHECK(std::abs(rep.weight_sum - 1.635) < 2e-3);
    CHECK(rep.rows[0].pass);

    auto rep_multi = ensemble::variance_bound_check({10, 100, 1000}, 1.0, 5000, 32);
    CHECK(rep_multi.all_pass());

    auto zero = ensemble::variance_bound_check({50}, 1.0, 100, 33, [](int) { return 0.0; });
    CHECK(zero.rows[0].estimate == 0.0);
}

TEST_CASE("invariance of nu_beta under the macro SDE") {
    auto m = confining_mspec(1.0);
    auto derived = model::build_derived(m.spec);
    auto rep = ensemble::invariance_test(m.spec, derived, 1.0, 2e-3, 4000, 828, 1, &m);
    for (const auto& row : rep.rows) {
        INFO(row.name << ": t0=" << row.moment_t0 << " T=" << row.moment_T
                      << " allowance=" << row.allowance);
        CHECK(row.pass);
    }

    SECTION("negative control: zero noise collapses the variance") {
        auto dead = derived;
        dead.Sigma = Mat::Zero(3, 3);
        auto bad = ensemble::invariance_test(m.spec, dead, 1.0, 2e-3, 4000, 828, 1, &m);
        CHECK_FALSE(bad.all_pass());
    }
}

TEST_CASE("quartic potential invariance (self-consistency)") {
    auto m = confining_mspec(1.0);
    model::set_potential(m.spec, model::PotentialKind::quartic, 1.0, 0.5);
    auto derived = model::build_derived(m.spec);
    auto rep = ensemble::invariance_test(m.spec, derived, 0.5, 2e-3, 4000, 919, 1, &m);
    CHECK(rep.all_pass());
}
