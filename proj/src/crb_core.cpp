#include "csisense/crb_core.hpp"

#include "csisense/csi_sim.hpp"

#include <cmath>
#include <limits>

namespace csisense {

ParamVector true_params(const ChannelScenario& scenario) {
    const auto agg = aggregate_statics(scenario);
    return {scenario.doppler_hz, scenario.dynamic_theta, agg.rho0, agg.rho1};
}

ChiJacobian chi_jacobian(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    schedule.validate();
    const auto agg = aggregate_statics(scenario);
    const cplx a = steering_phasor(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const cplx da = steering_phasor_derivative(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const auto d = doppler_steering(scenario.doppler_hz, schedule);
    const cplx rho2 = a - agg.rho0;
    const cplx j(0.0, 1.0);
    const double w = 2.0 * kPi * schedule.t0;

    ChiJacobian jac(static_cast<Eigen::Index>(d.size()), 6);
    for (std::size_t k = 0; k < d.size(); ++k) {
        const auto row = static_cast<Eigen::Index>(k);
        const cplx mu = agg.rho1 * d[k] + 1.0;
        const cplx d_rho1 = d[k] * rho2 / (mu * mu);
        jac(row, 0) = j * w * static_cast<double>(schedule.phi[k]) * agg.rho1 * d_rho1;
        jac(row, 1) = agg.rho1 * da * d[k] / mu;
        jac(row, 2) = 1.0 / mu;
        jac(row, 3) = j / mu;
        jac(row, 4) = d_rho1;
        jac(row, 5) = j * d_rho1;
    }
    return jac;
}

Matrix6 fim_from_jacobian(const ChiJacobian& jac, const std::vector<double>& eta) {
    Matrix6 f = Matrix6::Zero();
    for (Eigen::Index k = 0; k < jac.rows(); ++k) {
        const double wk = 2.0 / eta[static_cast<std::size_t>(k)];
        for (int p = 0; p < 6; ++p)
            for (int q = p; q < 6; ++q)
                f(p, q) += wk * (std::conj(jac(k, p)) * jac(k, q)).real();
    }
    for (int p = 0; p < 6; ++p)
        for (int q = 0; q < p; ++q)
            f(p, q) = f(q, p);
    return f;
}

Matrix6 fim(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    const auto model = ratio_model(scenario, schedule);
    return fim_from_jacobian(chi_jacobian(scenario, schedule), model.eta);
}

EpsilonTerms epsilon_terms(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    schedule.validate();
    const auto agg = aggregate_statics(scenario);
    const cplx a = steering_phasor(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const cplx da = steering_phasor_derivative(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const auto d = doppler_steering(scenario.doppler_hz, schedule);
    const double w = 2.0 * kPi * schedule.t0;

    EpsilonTerms e;
    e.rho2 = a - agg.rho0;
    e.lambda_diag.resize(d.size());
    e.mu.resize(d.size());

    cplx sum_mu, sum_dmu2, sum_phimu, sum_dmu, sum_dphimu;
    for (std::size_t k = 0; k < d.size(); ++k) {
        const double phi = schedule.phi[k];
        const cplx mu = agg.rho1 * d[k] + 1.0;
        const cplx nu = a * agg.rho1 * d[k] + agg.rho0;
        const double m2 = std::norm(mu);
        const double lam = 1.0 / (m2 + std::norm(nu));
        const cplx dc = std::conj(d[k]);
        e.lambda_diag[k] = lam;
        e.mu[k] = mu;
        e.eps_1 += lam;
        e.eps_K1 += lam * phi;
        e.eps_K2 += lam * phi * phi;
        e.eps_mu2 += lam * m2;
        sum_mu += lam * mu;
        sum_dmu2 += dc * lam * m2;
        sum_phimu += lam * phi * mu;
        sum_dmu += dc * lam * mu;
        sum_dphimu += dc * lam * phi * mu;
    }
    e.eps_K1 *= w;
    e.eps_K2 *= w * w;
    e.eps_mu1 = da * sum_mu;
    e.eps_dmu2 = std::conj(da) * sum_dmu2;
    e.eps_Kmu = w * da * sum_phimu;
    e.eps_dmu1 = sum_dmu;
    e.eps_dKmu = w * sum_dphimu;

    const double den = e.eps_1 * e.eps_mu2 - std::norm(e.eps_dmu1);
    e.gamma_11 = (e.eps_1 * std::norm(e.eps_dKmu)
                  - 2.0 * e.eps_K1 * (std::conj(e.eps_dKmu) * e.eps_dmu1).real()
                  + e.eps_mu2 * e.eps_K1 * e.eps_K1) / den;
    e.gamma_22 = (e.eps_1 * std::norm(e.eps_dmu2)
                  - 2.0 * (std::conj(e.eps_dmu2) * e.eps_dmu1 * std::conj(e.eps_mu1)).real()
                  + e.eps_mu2 * std::norm(e.eps_mu1)) / den;
    const cplx r2c = std::conj(e.rho2);
    e.gamma_12 = (r2c * std::conj(e.eps_dmu2) * (e.eps_1 * e.eps_dKmu - e.eps_K1 * e.eps_dmu1)
                  + r2c * e.eps_mu1 * (e.eps_K1 * e.eps_mu2 - std::conj(e.eps_dmu1) * e.eps_dKmu)).imag() / den;
    return e;
}

Eigen::Matrix2d h_closed_form(const ChannelScenario& scenario, const EpsilonTerms& eps) {
    const cplx da = steering_phasor_derivative(scenario.dynamic_theta, scenario.antenna_spacing, scenario.wavelength);
    const double pre = 2.0 * std::norm(scenario.dynamic_gain) / scenario.noise_power;
    Eigen::Matrix2d h;
    h(0, 0) = std::norm(eps.rho2) * (eps.eps_K2 - eps.gamma_11);
    h(0, 1) = (std::conj(eps.rho2) * eps.eps_Kmu).imag() - eps.gamma_12;
    h(1, 0) = h(0, 1);
    h(1, 1) = std::norm(da) * eps.eps_mu2 - eps.gamma_22;
    return pre * h;
}

namespace {

double normalized_condition(const Eigen::Matrix2d& h) {
    const double d0 = h(0, 0);
    const double d1 = h(1, 1);
    if (!(d0 > 0.0) || !(d1 > 0.0) || !std::isfinite(d0) || !std::isfinite(d1))
        return std::numeric_limits<double>::infinity();
    const double c = h(0, 1) / std::sqrt(d0 * d1);
    // eigenvalues of [[1, c], [c, 1]]
    const double lo = 1.0 - std::abs(c);
    const double hi = 1.0 + std::abs(c);
    if (!(lo > 0.0))
        return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace

CrbResult crb_doppler_exact(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    CrbResult res;
    res.fim = fim(scenario, schedule);

    const Eigen::Matrix2d f11 = res.fim.topLeftCorner<2, 2>();
    const Eigen::Matrix<double, 2, 4> f12 = res.fim.topRightCorner<2, 4>();
    const Eigen::Matrix4d f22 = res.fim.bottomRightCorner<4, 4>();

    const Eigen::FullPivLU<Eigen::Matrix4d> lu22(f22);
    const auto eps = epsilon_terms(scenario, schedule);
    res.h_closed = h_closed_form(scenario, eps);

    if (!lu22.isInvertible()) {
        res.h_matrix = f11;
        res.condition = Conditioning::singular;
        res.condition_number = std::numeric_limits<double>::infinity();
        res.crb_fd = std::numeric_limits<double>::infinity();
        return res;
    }
    res.h_matrix = f11 - f12 * lu22.solve(f12.transpose());
    res.h_matrix(1, 0) = res.h_matrix(0, 1);

    const double hmax = res.h_matrix.cwiseAbs().maxCoeff();
    res.closed_form_residual = hmax > 0.0 ? (res.h_matrix - res.h_closed).cwiseAbs().maxCoeff() / hmax
                                          : std::numeric_limits<double>::infinity();

    res.condition_number = normalized_condition(res.h_matrix);
    const double det = res.h_matrix.determinant();
    const double crb = res.h_matrix(1, 1) / det;
    if (!std::isfinite(res.condition_number) || !std::isfinite(crb) || !(crb > 0.0)) {
        res.condition = Conditioning::singular;
        res.crb_fd = std::numeric_limits<double>::infinity();
    } else {
        res.condition = res.condition_number > kNearSingularCondition ? Conditioning::near_singular
                                                                      : Conditioning::ok;
        res.crb_fd = crb;
    }
    return res;
}

double crb_fd(const ChannelScenario& scenario, const SymbolSchedule& schedule) {
    return crb_doppler_exact(scenario, schedule).crb_fd;
}

} // namespace csisense
