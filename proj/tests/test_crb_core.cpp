#include "doctest.h"
#include "fixtures.hpp"

#include "csisense/crb_analysis.hpp"
#include "csisense/crb_core.hpp"

using namespace csisense;
using fixtures::reference;
using fixtures::reference_schedule;
using fixtures::setup_of;

TEST_SUITE("crb_core") {

TEST_CASE("Jacobian matches finite differences of the ratio model") {
    const auto s = reference();
    const auto sch = reference_schedule();
    const auto J = chi_jacobian(s, sch);
    const auto Jfd = oracle::fd_jacobian(true_params(s).to_array(), setup_of(s, sch));
    for (int c = 0; c < 6; ++c) {
        const double scale = Jfd.col(c).cwiseAbs().maxCoeff();
        const double err = (J.col(c) - Jfd.col(c)).cwiseAbs().maxCoeff();
        CHECK(err / scale < 1e-6);
    }
}

TEST_CASE("Jacobian structure") {
    const auto s = reference();
    const auto sch = reference_schedule();
    const auto J = chi_jacobian(s, sch);
    const cplx j(0.0, 1.0);
    CHECK((J.col(3) - j * J.col(2)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((J.col(5) - j * J.col(4)).cwiseAbs().maxCoeff() < 1e-14);

    auto s0 = s;
    s0.dynamic_gain = 0.0;
    CHECK(chi_jacobian(s0, sch).col(0).cwiseAbs().maxCoeff() == 0.0);

    auto sa = s;
    const cplx a = steering_phasor(s.dynamic_theta, s.antenna_spacing, s.wavelength);
    sa.statics = DirectStatics{cplx(1.0, 0.0), a};
    const auto Ja = chi_jacobian(sa, sch);
    CHECK(Ja.col(0).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(Ja.col(4).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("FIM is symmetric, PSD, inversely proportional to noise and matches the oracle") {
    const auto s = reference();
    const auto sch = reference_schedule();
    const auto F = fim(s, sch);
    CHECK((F - F.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * F.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Matrix6> es(F);
    CHECK(es.eigenvalues().minCoeff() >= -1e-9 * es.eigenvalues().maxCoeff());

    auto s2 = s;
    s2.noise_power *= 2.0;
    CHECK((fim(s2, sch) - F / 2.0).cwiseAbs().maxCoeff() <= 1e-12 * F.cwiseAbs().maxCoeff());

    const auto o = setup_of(s, sch);
    const auto alpha = true_params(s).to_array();
    const auto Fo = oracle::fim(oracle::fd_jacobian(alpha, o), oracle::eta(alpha, o));
    CHECK((F - Fo).cwiseAbs().maxCoeff() / Fo.cwiseAbs().maxCoeff() < 1e-6);

    // Im rows relate to Re rows through the j rotation: F(3,3) == F(2,2), F(5,5) == F(4,4).
    CHECK(F(3, 3) == doctest::Approx(F(2, 2)).epsilon(1e-12));
    CHECK(F(5, 5) == doctest::Approx(F(4, 4)).epsilon(1e-12));
    CHECK(std::abs(F(2, 3)) < 1e-10 * F(2, 2));
}

TEST_CASE("exact CRB agrees with the full inverse and the closed form") {
    const auto s = reference();
    const auto sch = reference_schedule();
    const auto res = crb_doppler_exact(s, sch);
    CHECK(res.condition == Conditioning::ok);
    CHECK(res.crb_fd == doctest::Approx(oracle::crb_full_inverse(res.fim)).epsilon(1e-8));
    CHECK(fixtures::max_rel(res.h_closed, res.h_matrix) < 1e-8);
    CHECK(res.closed_form_residual < 1e-8);
    CHECK(fixtures::max_rel(res.h_matrix, oracle::schur(res.fim)) < 1e-8);
    CHECK(std::abs(res.h_matrix(0, 1) - res.h_matrix(1, 0)) <= 1e-12 * res.h_matrix.cwiseAbs().maxCoeff());
    CHECK(res.crb_fd == doctest::Approx(0.0271636).epsilon(1e-5));
}

TEST_CASE("CRB is proportional to noise power") {
    const auto s = reference();
    const auto sch = reference_schedule();
    auto s2 = s;
    s2.noise_power *= 2.0;
    CHECK(crb_fd(s2, sch) == doctest::Approx(2.0 * crb_fd(s, sch)).epsilon(1e-12));
}

TEST_CASE("no dynamic path means infinite CRB") {
    auto s = reference();
    s.dynamic_gain = 0.0;
    const auto res = crb_doppler_exact(s, reference_schedule());
    CHECK(std::isinf(res.crb_fd));
    CHECK(res.condition == Conditioning::singular);
}

TEST_CASE("common phase rotation leaves the CRB unchanged") {
    auto s = reference();
    const auto agg = aggregate_statics(s);
    const auto base = crb_fd(s, reference_schedule());
    const cplx rot = std::polar(1.0, 1.234);
    s.statics = DirectStatics{agg.h_s0 * rot, agg.h_s1 * rot};
    s.dynamic_gain *= rot;
    CHECK(crb_fd(s, reference_schedule()) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("closed form agrees with the assembled H on random high-SNR scenarios") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 200; ++i) {
        const auto c = fixtures::random_high_snr_case(rng);
        const auto res = crb_doppler_exact(c.scenario, c.schedule);
        REQUIRE(res.condition != Conditioning::singular);
        CHECK(fixtures::max_rel(res.h_closed, res.h_matrix) < 1e-8);
        CHECK(res.crb_fd == doctest::Approx(oracle::crb_full_inverse(res.fim)).epsilon(1e-8));
    }
}

TEST_CASE("epsilon terms") {
    auto s = reference();
    const auto sch = reference_schedule();
    auto s0 = s;
    s0.dynamic_gain = 0.0;
    const auto e0 = epsilon_terms(s0, sch);
    const auto agg = aggregate_statics(s);
    CHECK(e0.eps_1 == doctest::Approx(128.0 / (1.0 + std::norm(agg.rho0))).epsilon(1e-12));
    for (const auto& m : e0.mu)
        CHECK(std::abs(m - cplx(1.0, 0.0)) < 1e-15);

    const auto e = epsilon_terms(s, sch);
    CHECK(e.eps_1 > 0.0);
    const cplx a = steering_phasor(s.dynamic_theta, s.antenna_spacing, s.wavelength);
    CHECK(std::abs(e.rho2 - (a - agg.rho0)) < 1e-15);
    const auto d = doppler_steering(s.doppler_hz, sch);
    for (std::size_t k = 0; k < sch.size(); ++k) {
        const cplx mu = agg.rho1 * d[k] + 1.0;
        CHECK(std::abs(e.mu[k] - mu) < 1e-14);
        CHECK(e.lambda_diag[k] ==
              doctest::Approx(1.0 / (std::norm(mu) + std::norm(a * agg.rho1 * d[k] + agg.rho0))).epsilon(1e-12));
    }
    const double b0 = std::norm(agg.rho0) + 2.0 * std::norm(agg.rho1) + 1.0;
    const double b1 = 2.0 * std::abs(agg.rho1 * (1.0 + std::conj(agg.rho0) * a));
    CHECK(b0 == doctest::Approx(2.46).epsilon(0.01));
    CHECK(b1 == doctest::Approx(0.379).epsilon(0.01));
    CHECK(e.eps_1 == doctest::Approx(128.0 / std::sqrt(b0 * b0 - b1 * b1)).epsilon(0.02));
}

TEST_CASE("CRB diverges at the worst angle with equal-magnitude statics") {
    auto s = reference();
    const cplx rho0 = std::polar(1.0, deg2rad(-30.0));
    s.statics = DirectStatics{cplx(1.0, 0.0), rho0};
    const auto ex = corollary2_extremes(cplx(1.0, 0.0), rho0, s.wavelength, s.antenna_spacing);
    const double worst = std::asin(ex.sin_theta_max_crb);
    double prev = 0.0;
    for (double off : {1e-1, 1e-2, 1e-3, 1e-4}) {
        s.dynamic_theta = worst + off;
        const double c = crb_fd(s, reference_schedule());
        CHECK(c > prev);
        prev = c;
    }
    CHECK(prev > 1e3 * crb_fd(reference(), reference_schedule()));
}

} // TEST_SUITE
