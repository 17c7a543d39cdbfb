#include "doctest.h"

#include "cbf/beamform.hpp"
#include "cbf/rng.hpp"
#include "cbf/signal.hpp"
#include "cbf/types.hpp"
#include "test_util.hpp"

#include <cmath>
#include <limits>

using namespace cbf;

namespace {
const double kT = 210e-6;
const double kRate = 100e6;
}

TEST_CASE("delay map hand values") {
    CHECK(tau(0.0, 17e-6, 0.7) == 17e-6);
    CHECK(tau(2e-6, 3e-6, 0.0) == doctest::Approx(4e-6).epsilon(1e-14));
    // on-axis reflector arrival identity
    double z = 0.04, c = kSpeedOfSound, delta = 8.99e-3;
    double got = tau(delta / c, 2 * z / c, 0.0);
    double want = z / c + std::sqrt(z * z + delta * delta) / c;
    CHECK(got == doctest::Approx(want).epsilon(1e-13));
    CHECK_THROWS(tau(1e-6, -1e-9, 0.0));
}

TEST_CASE("inverse delay map and round trip") {
    CHECK(tau_inverse(0.0, 33e-6, 0.4) == 33e-6);
    CHECK(tau_inverse(2e-6, 5e-6, 0.0) == doctest::Approx(4.2e-6).epsilon(1e-14));
    CHECK(tau(2e-6, 4.2e-6, 0.0) == doctest::Approx(5e-6).epsilon(1e-14));
    CHECK_THROWS(tau_inverse(3e-6, 2.9e-6, 0.0));

    Rng rng(41);
    for (int trial = 0; trial < 2000; ++trial) {
        double gamma = rng.uniform(-12e-6, 12e-6);
        double theta = rng.uniform(-1.2, 1.2);
        double t = rng.uniform(std::abs(gamma), kT);
        double rt = tau(gamma, tau_inverse(gamma, t, theta), theta);
        CHECK(std::abs(rt - t) <= 1e-12 * t);
    }
}

TEST_CASE("opposite-sign offset maps the frame end inwards") {
    double theta = kPi / 6.0;
    for (double gamma : {-1e-6, -5e-6, -11e-6})
        CHECK(tau_inverse(gamma, kT, theta) <= kT);
}

TEST_CASE("delay map is non-decreasing past twice the offset") {
    Rng rng(42);
    for (int trial = 0; trial < 2000; ++trial) {
        double gamma = rng.uniform(-12e-6, 12e-6);
        double theta = rng.uniform(-1.2, 1.2);
        double t1 = rng.uniform(2.0 * std::abs(gamma), kT);
        double t2 = rng.uniform(t1, kT);
        CHECK(tau(gamma, t2, theta) >= tau(gamma, t1, theta) - 1e-15 * kT);
    }
}

TEST_CASE("support bound guarantees") {
    ArrayGeometry flat({0.0, 0.0, 0.0}, kSpeedOfSound, 1);
    CHECK(support_bound(flat, SteeringAngle(0.3), kT) == kT);

    auto probe = default_probe();
    double gmax = probe.gamma_max_abs();
    CHECK(support_bound(probe, SteeringAngle(0.0), kT) ==
          doctest::Approx((kT * kT - gmax * gmax) / kT).epsilon(1e-14));

    Rng rng(43);
    for (int g = 0; g < 20; ++g) {
        int count = 3 + static_cast<int>(rng.uniform_int(40));
        int ref = count / 2;
        auto geom = ArrayGeometry::linear(count, rng.uniform(0.1e-3, 0.6e-3), ref);
        for (int a = 0; a < 100; ++a) {
            double theta = -1.4 + 2.8 * a / 99.0;
            double tb = support_bound(geom, SteeringAngle(theta), kT);
            CHECK(tb <= kT * (1.0 + 1e-14));
            for (int m = 0; m < geom.count(); ++m)
                CHECK(tau(geom.gamma(m), tb, theta) <= kT * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("distortion factor") {
    CHECK(distortion_sigma(0.0, 50e-6, 0.2) == 1.0);
    double g = 7e-6;
    CHECK(distortion_sigma(g, 2.0 * g, 0.0) ==
          doctest::Approx(0.5 * (1.0 + 1.0 / std::sqrt(2.0))).epsilon(1e-12));
    double prev = std::numeric_limits<double>::infinity();
    for (double ratio = 2.0; ratio <= 4096.0; ratio *= 2.0) {
        double dev = std::abs(distortion_sigma(g, ratio * g, 0.35) - 1.0);
        CHECK(dev < prev);
        prev = dev;
    }
    CHECK(prev < 1e-5);
}

TEST_CASE("distorted support width") {
    double delta = 2e-6;
    for (double t_l : {10e-6, 40e-6, 150e-6}) {
        auto sw = distorted_support(0.0, t_l, 0.0, delta);
        double want = 2.0 * delta * (t_l + delta) / (2.0 * t_l + 2.0 * delta);
        CHECK(sw.value == doctest::Approx(want).epsilon(1e-12));
        CHECK(sw.guaranteed);
    }
    CHECK(distorted_support(3e-6, 20e-6, 0.4, 0.0).value == 0.0);
    CHECK_FALSE(distorted_support(12e-6, 20e-6, 0.0, delta).guaranteed);

    Rng rng(44);
    for (int trial = 0; trial < 500; ++trial) {
        double gamma = rng.uniform(-12e-6, 12e-6);
        double t_l = rng.uniform(2.0 * std::abs(gamma), kT);
        auto sw = distorted_support(gamma, t_l, rng.uniform(-1.2, 1.2), delta);
        CHECK(sw.guaranteed);
        CHECK(sw.value <= 2.0 * delta * (1.0 + 1e-12));
    }
}

TEST_CASE("combiner identities") {
    auto pulse = TwoWayPulse::gaussian(200e-9, 3e6);
    ArrayGeometry solo({0.0}, kSpeedOfSound, 0);
    auto tr = synthesize_fri(pulse, {FriEcho(20e-6, 1.0)}, kRate, kT);
    auto out = beamform({tr}, solo, SteeringAngle(0.0), ApodizationWindow::uniform(1));
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        CHECK(out.samples[i] == tr.samples[i]);

    ArrayGeometry coloc({0.0, 0.0, 0.0}, kSpeedOfSound, 0);
    auto out3 = beamform({tr, tr, tr}, coloc, SteeringAngle(0.1), ApodizationWindow::uniform(3));
    for (std::size_t i = 0; i < out3.samples.size(); ++i)
        CHECK(out3.samples[i] == doctest::Approx(tr.samples[i]).epsilon(1e-12));

    auto other = synthesize_fri(pulse, {FriEcho(20e-6, 1.0)}, 50e6, kT);
    CHECK_THROWS(beamform({tr, other, tr}, coloc, SteeringAngle(0.0),
                          ApodizationWindow::uniform(3)));
    CHECK_THROWS(beamform({tr, tr}, coloc, SteeringAngle(0.0), ApodizationWindow::uniform(2)));
}

TEST_CASE("on-axis reflector beamforms to the pulse at its round-trip delay") {
    auto pulse = TwoWayPulse::gaussian(200e-9, 3e6);
    auto probe = default_probe();
    double t_l = 52e-6;
    auto traces = testutil::element_traces(probe, pulse, {FriEcho(t_l, 1.0)}, 0.0, kRate, kT);
    auto bf = beamform(traces, probe, SteeringAngle(0.0), ApodizationWindow::uniform(63));

    auto ref = synthesize_fri(pulse, {FriEcho(t_l, 1.0)}, kRate, kT);
    auto env_bf = testutil::hilbert_env(bf.samples);
    auto env_ref = testutil::hilbert_env(ref.samples);
    auto peak_bf = testutil::argmax(env_bf);
    auto peak_ref = testutil::argmax(env_ref);
    CHECK(std::llabs(static_cast<long long>(peak_bf) - static_cast<long long>(peak_ref)) <= 1);
    CHECK(env_bf[peak_bf] == doctest::Approx(env_ref[peak_ref]).epsilon(0.05));
}

TEST_CASE("off-axis reflector is suppressed") {
    auto pulse = TwoWayPulse::gaussian(200e-9, 3e6);
    auto probe = default_probe();
    double z = 0.04, c = kSpeedOfSound, x0 = 3e-3;

    auto make = [&](double x) {
        std::vector<SampledTrace> traces;
        for (int m = 0; m < probe.count(); ++m) {
            double d = probe.offsets[static_cast<std::size_t>(m)];
            double t_arr = (std::sqrt(x * x + z * z) +
                            std::sqrt((x - d) * (x - d) + z * z)) / c;
            traces.push_back(synthesize_fri(pulse, {FriEcho(t_arr, 1.0)}, kRate, kT));
        }
        return beamform(traces, probe, SteeringAngle(0.0), ApodizationWindow::uniform(63));
    };

    auto on = make(0.0), off = make(x0);
    auto env_on = testutil::hilbert_env(on.samples);
    auto env_off = testutil::hilbert_env(off.samples);
    double peak_on = env_on[testutil::argmax(env_on)];
    double peak_off = env_off[testutil::argmax(env_off)];
    CHECK(peak_on >= 2.0 * peak_off);
}

TEST_CASE("projection error curves") {
    auto pulse = TwoWayPulse(200e-9, 3e6, 0.0, 2e-6, 1e-6);
    auto probe = default_probe();
    auto kappa = kappa_consecutive(630, 121);
    std::vector<double> delays = {kT / 10.0, kT / 4.0};
    auto curves = projection_error_experiment(probe, pulse, delays, SteeringAngle(0.0), kappa,
                                              kRate, kT, {31, 32, 62});
    CHECK(curves.snr_db[0][0] == std::numeric_limits<double>::infinity());
    CHECK(curves.snr_db[0][1] == std::numeric_limits<double>::infinity());
    CHECK(curves.snr_db[1][0] > 25.0);   // 0.29 mm neighbour
    CHECK(curves.snr_db[1][1] > 25.0);
    CHECK(curves.snr_db[2][1] > 10.0);   // 8.99 mm edge element
    CHECK(curves.snr_db[2][1] > curves.snr_db[2][0]);
}
