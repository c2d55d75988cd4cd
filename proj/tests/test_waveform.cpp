#include "doctest.h"
#include "fixtures.hpp"

#include "csisense/crb_analysis.hpp"
#include "csisense/errors.hpp"
#include "csisense/waveform.hpp"

#include <set>
#include <sstream>

using namespace csisense;

namespace {

std::vector<double> half_of(int k_f, const std::vector<double>& back) {
    std::vector<double> h;
    for (int i = 0; i < k_f; ++i)
        h.push_back(i);
    h.insert(h.end(), back.begin(), back.end());
    return h;
}

cplx half_sum(const std::vector<double>& half, double t0, double f) {
    cplx acc = 0.0;
    for (double p : half)
        acc += std::exp(cplx(0.0, 2.0 * kPi * p * t0 * f));
    return 2.0 * acc / (2.0 * static_cast<double>(half.size()));
}

OptimizerConfig config_with(double f_ex) {
    OptimizerConfig c;
    c.f_d_mainlobe_ex = f_ex;
    return c;
}

} // namespace

TEST_SUITE("waveform") {

TEST_CASE("noise-limited schedule layout") {
    const auto s = noise_limited_schedule(512, 128);
    REQUIRE(s.size() == 128);
    for (int i = 0; i < 64; ++i) {
        CHECK(s.phi[static_cast<std::size_t>(i)] == i);
        CHECK(s.phi[static_cast<std::size_t>(64 + i)] == 448 + i);
    }
    const auto all = noise_limited_schedule(10, 10);
    for (int i = 0; i < 10; ++i)
        CHECK(all.phi[static_cast<std::size_t>(i)] == i);
    CHECK(noise_limited_schedule(8, 4).phi == std::vector<int>{0, 1, 6, 7});
    CHECK(noise_limited_schedule(9, 5).phi == std::vector<int>{0, 1, 2, 7, 8});
    CHECK_THROWS_AS(noise_limited_schedule(8, 1), InvalidSize);
    CHECK_THROWS_AS(noise_limited_schedule(8, 9), InvalidSize);
}

TEST_CASE("noise-limited schedule attains the exhaustive maximum of L1") {
    for (int k_all = 2; k_all <= 12; ++k_all)
        for (int k = 2; k <= std::min(6, k_all); ++k) {
            const double best = oracle::max_l1_exhaustive(k_all, k);
            CHECK(l1_metric(noise_limited_schedule(k_all, k)) == doctest::Approx(best).epsilon(1e-12));
        }
}

TEST_CASE("L1 metric") {
    const std::vector<int> two{0, 1};
    CHECK(l1_metric(std::span<const int>(two)) == doctest::Approx(0.25));
    const std::vector<int> a{3, 8, 20, 21}, b{103, 108, 120, 121};
    CHECK(l1_metric(std::span<const int>(a)) == doctest::Approx(l1_metric(std::span<const int>(b))).epsilon(1e-12));
    CHECK(l1_metric(noise_limited_schedule(512, 128)) == doctest::Approx(224.0 * 224.0 + (64.0 * 64.0 - 1.0) / 12.0));
    CHECK(l1_metric(noise_limited_schedule(512, 128)) == doctest::Approx(50517.25));
    const auto r = random_schedule(512, 77, 125e-6, 4);
    CHECK(l1_metric(r) == doctest::Approx(oracle::variance(r.phi)).epsilon(1e-12));
}

TEST_CASE("envelope values") {
    const double t0 = 125e-6;
    std::vector<double> half;
    for (int i = 0; i < 64; ++i)
        half.push_back(i);
    std::vector<double> f{0.0};
    for (int i = 1; i < 300; ++i)
        f.push_back(13.1 * i);
    const auto e = envelope(half, t0, f);
    CHECK(e[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < f.size(); ++i) {
        const double x = f[i] * t0;
        CHECK(e[i] == doctest::Approx(std::abs(std::sin(kPi * 64 * x) / (64 * std::sin(kPi * x)))).epsilon(1e-9));
    }
}

TEST_CASE("pattern of a symmetric schedule is the envelope modulated by a cosine") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const auto r = random_schedule(255, 30, 125e-6, rng());
        std::vector<double> half(r.phi.begin(), r.phi.end());
        std::set<int> full;
        for (int p : r.phi) {
            full.insert(p);
            full.insert(511 - p);
        }
        if (full.size() != 60)
            continue;
        const SymbolSchedule s{{full.begin(), full.end()}, 512, 125e-6};
        REQUIRE(s.is_center_symmetric());
        std::vector<double> f;
        for (int i = 0; i <= 400; ++i)
            f.push_back(i * 10.0);
        const auto p = pattern_values(s, f);
        const auto h = s.half();
        const auto e = envelope(h, s.t0, f);
        double worst = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const cplx ep = half_sum(h, s.t0, f[i]);
            const double model = std::abs(std::cos(kPi * 511 * s.t0 * f[i] - std::arg(ep))) * std::abs(ep);
            worst = std::max(worst, std::abs(p[i] - model));
            CHECK(e[i] == doctest::Approx(std::abs(ep)).epsilon(1e-10));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("rounding perturbation bound") {
    CHECK(perturbation_bound(128, 50, 125e-6, 0.44 / 64 / 125e-6) == doctest::Approx(1.69e-2).epsilon(0.005));
    CHECK(perturbation_bound(128, 50, 125e-6, 0.0) == 0.0);

    const int k_f = 14, k_b = 50;
    const auto back = initial_back_block(512, k_f, k_b);
    const auto half = half_of(k_f, back);
    std::vector<int> ihalf(half.begin(), half.end());
    const double f_m = mainlobe_width(assemble_symmetric(ihalf, 512, 125e-6));
    std::vector<double> f;
    for (int i = 0; i <= 200; ++i)
        f.push_back(f_m * i / 200.0);
    const auto e0 = envelope(half, 125e-6, f);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int draw = 0; draw < 100; ++draw) {
        auto moved = half;
        for (int i = k_f; i < k_f + k_b; ++i)
            moved[static_cast<std::size_t>(i)] += u(rng);
        const auto e1 = envelope(moved, 125e-6, f);
        for (std::size_t i = 0; i < f.size(); ++i)
            CHECK(std::abs(e1[i] - e0[i]) <= perturbation_bound(128, k_b, 125e-6, f[i]));
    }
}

TEST_CASE("sidelobe power") {
    auto c = config_with(0.44 / (64 * 125e-6));
    std::vector<double> half;
    for (int i = 0; i < 64; ++i)
        half.push_back(i);
    const double p1 = sidelobe_power(half, c);
    CHECK(p1 == doctest::Approx(oracle::sidelobe_power(half, 125e-6, c.f_d_mainlobe_ex, 4096)).epsilon(1e-10));
    CHECK(p1 == doctest::Approx(oracle::sidelobe_power(half, 125e-6, c.f_d_mainlobe_ex, 40951)).epsilon(1e-3));

    auto zero = c;
    zero.weight_fn.points = {{0.0, 0.0}, {4000.0, 0.0}};
    CHECK(sidelobe_power(half, zero) == 0.0);
    auto two = c;
    two.weight_fn.points = {{0.0, 2.0}, {4000.0, 2.0}};
    CHECK(sidelobe_power(half, two) == doctest::Approx(2.0 * p1).epsilon(1e-12));
}

TEST_CASE("optimizer configuration is validated") {
    OptimizerConfig c;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.f_d_mainlobe_ex = 5000.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.f_d_mainlobe_ex = 20.0;
    c.quadrature_points = 100;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.quadrature_points = 4096;
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(optimize_interference_limited(512, 127, 16, c), InvalidSize);
    CHECK_THROWS_AS(optimize_interference_limited(512, 128, 65, c), InvalidSize);
}

TEST_CASE("optimizer with nothing to move returns the noise-limited schedule") {
    const auto r = optimize_interference_limited(512, 128, 64, config_with(20.0));
    CHECK(r.iterations == 0);
    CHECK(r.schedule.phi == noise_limited_schedule(512, 128).phi);
}

TEST_CASE("equally spaced starting block") {
    for (auto [k_all, k_f, k_b] : {std::tuple{512, 16, 48}, std::tuple{511, 10, 30}, std::tuple{300, 5, 7}}) {
        const auto b = initial_back_block(k_all, k_f, k_b);
        const int top = static_cast<int>(std::ceil((k_all - 1) / 2.0)) - 1;
        for (int i = 0; i < k_b; ++i)
            CHECK(b[static_cast<std::size_t>(i)] ==
                  k_f + std::round(static_cast<double>(i) * (top - k_f) / (k_b - 1)));
    }
}

TEST_CASE("step weights switch at the open interval bounds") {
    const int k_all = 512, k_f = 16;
    const std::vector<double> back{16.0, 17.0, 17.01, 100.0, 253.99, 254.0, 255.0};
    const auto w = step_weights(back, k_all, k_f);
    CHECK(w == std::vector<double>{kFrozenWeight, kFrozenWeight, 1.0, 1.0, 1.0, kFrozenWeight, kFrozenWeight});
}

TEST_CASE("rounding resolves collisions inside the allowed range") {
    const std::vector<double> back{15.2, 16.4, 16.45, 16.6, 254.9, 255.2, 255.4, 300.0};
    const auto r = round_back_block(back, 512, 16);
    for (std::size_t i = 0; i < r.size(); ++i) {
        CHECK(r[i] >= 16);
        CHECK(r[i] <= 255);
        if (i)
            CHECK(r[i] > r[i - 1]);
    }
}

TEST_CASE("optimized schedule is symmetric, sorted and unique") {
    const auto r = optimize_interference_limited(512, 128, 16, config_with(20.0));
    const auto& s = r.schedule;
    REQUIRE(s.size() == 128);
    CHECK(s.is_center_symmetric());
    for (std::size_t i = 1; i < s.size(); ++i)
        CHECK(s.phi[i] > s.phi[i - 1]);
    CHECK(s.phi.front() >= 0);
    CHECK(s.phi.back() <= 511);
    for (int i = 0; i < 16; ++i)
        CHECK(s.phi[static_cast<std::size_t>(i)] == i);
    CHECK(r.history.size() == static_cast<std::size_t>(r.iterations) + 1);
    CHECK(r.converged);
}

TEST_CASE("quadratic model gradient matches finite differences of the sidelobe power") {
    const auto c = config_with(20.0);
    const int k_f = 16;
    auto back = initial_back_block(512, k_f, 48);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto& b : back)
        b += u(rng);
    const auto half = half_of(k_f, back);
    const auto model = sidelobe_model(half, k_f, c);
    CHECK(model.power == doctest::Approx(sidelobe_power(half, c)).epsilon(1e-12));
    const auto g = model.gradient();
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& b) { return sidelobe_power(half_of(k_f, b), c); }, back, 1e-4);
    const double scale = Eigen::Map<const Eigen::VectorXd>(fd.data(), static_cast<Eigen::Index>(fd.size())).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < fd.size(); ++i)
        CHECK(std::abs(g[static_cast<Eigen::Index>(i)] - fd[i]) <= 0.05 * scale);
}

TEST_CASE("sidelobe power history is non-increasing for most random configurations") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int monotone = 0;
    for (int i = 0; i < 100; ++i) {
        const int k_all = 128 + 32 * static_cast<int>(u(rng) * 13);
        const int k = 2 * static_cast<int>((8 + u(rng) * (k_all / 4 - 8)) / 2);
        const int k_f = 1 + static_cast<int>(u(rng) * (k / 2 - 2));
        OptimizerConfig c;
        c.f_d_mainlobe_ex = 10.0 + 200.0 * u(rng);
        c.step_weight_a = std::pow(10.0, -1.0 + 2.0 * u(rng));
        c.quadrature_points = 1024;
        const auto r = optimize_interference_limited(k_all, k, k_f, c);
        bool ok = true;
        for (std::size_t j = 2; j < r.history.size(); ++j)
            ok = ok && r.history[j] <= r.history[j - 1];
        monotone += ok;
    }
    CHECK(monotone >= 90);
}

TEST_CASE("schedule text format round trip and errors") {
    const auto s = random_schedule(512, 33, 125e-6, 12);
    std::stringstream ss;
    write_schedule(ss, s);
    const auto back = read_schedule(ss);
    CHECK(back.phi == s.phi);
    CHECK(back.k_all == 512);
    CHECK(back.t0 == s.t0);

    std::stringstream no_header("1\n2\n");
    CHECK_THROWS_AS(read_schedule(no_header), InvalidSchedule);
    std::stringstream dup("# k_all=8\n# T0_s=0.000125\n1\n1\n");
    CHECK_THROWS_AS(read_schedule(dup), InvalidSchedule);
    std::stringstream junk("# k_all=8\n# T0_s=0.000125\n1\nabc\n");
    CHECK_THROWS_AS(read_schedule(junk), InvalidSchedule);
    std::stringstream range("# k_all=8\n# T0_s=0.000125\n1\n8\n");
    CHECK_THROWS_AS(read_schedule(range), InvalidSchedule);
    CHECK_THROWS_AS(load_schedule("/nonexistent/schedule.txt"), IoError);
}

} // TEST_SUITE
