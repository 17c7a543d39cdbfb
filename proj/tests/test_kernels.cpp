#include "doctest.h"

#include "cbf/beamform.hpp"
#include "cbf/kernels.hpp"
#include "cbf/rng.hpp"
#include "cbf/signal.hpp"
#include "cbf/types.hpp"
#include "test_util.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>

using namespace cbf;

namespace {
const double kT = 210e-6;
const double kRate = 100e6;

double rel_err(std::complex<double> got, std::complex<double> want) {
    double denom = std::abs(want);
    if (denom == 0.0) return std::abs(got);
    return std::abs(got - want) / denom;
}
}

TEST_CASE("kernel spec guards") {
    auto probe = default_probe();
    double tb = support_bound(probe, SteeringAngle(0.0), kT);
    DistortedKernelSpec ok(630, probe.gamma(62), 0.0, kT, tb);
    CHECK(ok.T_m <= kT);
    CHECK(ok.T_m >= std::abs(ok.gamma));
    CHECK_THROWS(DistortedKernelSpec(630, 1e-6, 0.0, kT, kT * 1.01));
    // full-frame T_B with a nonzero offset pushes the gate past the frame end
    CHECK_THROWS(DistortedKernelSpec(630, 5e-6, 0.0, kT, kT));
}

TEST_CASE("kernel values") {
    double tb = 200e-6;
    DistortedKernelSpec ref(630, 0.0, 0.0, kT, tb);
    CHECK(kernel_q(ref, 10e-6) == std::complex<double>(1.0, 0.0));
    CHECK(kernel_q(ref, tb) == std::complex<double>(0.0, 0.0));
    CHECK(kernel_q(ref, -1e-9) == std::complex<double>(0.0, 0.0));
    CHECK(kernel_q(ref, tb - 1e-9) == std::complex<double>(1.0, 0.0));

    auto probe = default_probe();
    double gamma = probe.gamma(62);
    double tb2 = support_bound(probe, SteeringAngle(0.0), kT);
    DistortedKernelSpec spec(17, gamma, 0.0, kT, tb2);
    for (double t : {12e-6, 40e-6, 120e-6}) {
        auto got = kernel_q(spec, t);
        double gain = 1.0 + gamma * gamma / (t * t);
        double phase = (kTwoPi / kT) * 17.0 * gamma * gamma / t;
        CHECK(rel_err(got, std::polar(gain, phase)) < 1e-12);
    }
    CHECK(kernel_q(spec, std::abs(gamma) / 2.0) == std::complex<double>(0.0, 0.0));

    // g folds in the plain Fourier carrier
    double t = 40e-6;
    auto g = kernel_g(spec, t);
    auto want = kernel_q(spec, t) * std::polar(1.0, -(kTwoPi / kT) * 17.0 * t);
    CHECK(rel_err(g, want) < 1e-12);
}

TEST_CASE("kernel gain is the delay-map Jacobian") {
    Rng rng(51);
    for (int trial = 0; trial < 300; ++trial) {
        double gamma = rng.uniform(-12e-6, 12e-6);
        double theta = rng.uniform(-1.2, 1.2);
        double u = rng.uniform(std::abs(gamma) + 1e-6, kT);
        double h = 3e-6 * u;
        double fd = (tau_inverse(gamma, u + h, theta) - tau_inverse(gamma, u - h, theta)) /
                    (2.0 * h);
        double s = std::sin(theta), c = std::cos(theta);
        double denom = u - gamma * s;
        double gain = 1.0 + gamma * gamma * c * c / (denom * denom);
        CHECK(std::abs(fd - gain) <= 1e-6 * gain);
    }
}

TEST_CASE("channel of the reference element is a gated Fourier coefficient") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto trace = synthesize_fri(pulse, {FriEcho(30e-6, 1.0), FriEcho(185e-6, -0.4)}, kRate, kT);
    double tb = 190e-6;
    DistortedKernelSpec spec(630, 0.0, 0.0, kT, tb);
    auto got = xample_channel(trace, spec);

    SampledTrace gated = trace;
    for (std::size_t i = 0; i < gated.samples.size(); ++i)
        if (gated.time_at(i) >= tb) gated.samples[i] = 0.0;
    auto want = fourier_coeffs(gated, {630}).values[0];
    CHECK(std::abs(got - want) < 1e-12);

    auto zero = xample_channel(SampledTrace::zeros(kRate, kT), spec);
    CHECK(zero == std::complex<double>(0.0, 0.0));
}

TEST_CASE("channel equals the change-of-variables quadrature") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto probe = default_probe();
    double theta = 0.2;
    double tb = support_bound(probe, SteeringAngle(theta), kT);
    double t_l = 60e-6;

    for (int m : {40, 55, 62}) {
        double gamma = probe.gamma(m);
        double t_lm = tau(gamma, t_l, theta);
        auto trace = synthesize_fri(pulse, {FriEcho(t_lm, 1.0)}, kRate, kT);

        for (long long k : {570LL, 630LL, 690LL}) {
            DistortedKernelSpec spec(k, gamma, theta, kT, tb);
            auto lhs = xample_channel(trace, spec);

            SampledTrace warped = SampledTrace::zeros(kRate, kT);
            for (std::size_t i = 0; i < warped.samples.size(); ++i) {
                double t = warped.time_at(i);
                if (t >= tb) break;
                warped.samples[i] = pulse.eval(tau(gamma, t, theta) - t_lm);
            }
            auto rhs = fourier_coeffs(warped, {k}).values[0];
            CHECK(rel_err(lhs, rhs) < 1e-4);
        }
    }
}

TEST_CASE("channel averaging") {
    std::vector<std::complex<double>> vals = {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    CHECK(xample_average(vals, {1.0, 1.0, 1.0}) == std::complex<double>(1.0, 2.0));
    CHECK(xample_average(vals, {0.0, 3.5, 0.0}) == std::complex<double>(1.0, 2.0));
    vals[1] = {5.0, 0.0};
    CHECK(std::abs(xample_average(vals, {0.0, 2.0, 0.0}) - std::complex<double>(5.0, 0.0)) <
          1e-15);
    CHECK_THROWS(xample_average(vals, {0.0, 0.0, 0.0}));
    CHECK_THROWS(xample_average(vals, {1.0, 1.0}));
}

TEST_CASE("exact scheme matches the closed form on an on-axis scene") {
    // short pulse and a deep echo: the per-element envelope compression then
    // stays small enough for the undistorted closed form to hold at 1 percent
    auto pulse = TwoWayPulse(200e-9, 3e6, 0.0, 2e-6, 1e-6);
    auto probe = default_probe();
    double t1 = 180e-6;
    auto traces = testutil::element_traces(probe, pulse, {FriEcho(t1, 1.0)}, 0.0, kRate, kT);

    // spread across the -20 dB band, 630 +- 358
    std::vector<long long> kappa = {272, 400, 520, 630, 740, 860, 988};
    auto got = xample_exact(traces, probe, SteeringAngle(0.0), kappa,
                            ApodizationWindow::hanning(63));
    auto h = pulse_band(pulse, kT, kappa);
    std::complex<double> i(0.0, 1.0);
    for (std::size_t j = 0; j < kappa.size(); ++j) {
        double w = kTwoPi * static_cast<double>(kappa[j]) / kT;
        std::complex<double> want = h[j] / kT * std::exp(-i * w * t1);
        CHECK(rel_err(got.values[j], want) < 1e-2);
    }
}

TEST_CASE("ungapped and gapped index sets agree") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto probe = default_probe();
    auto traces = testutil::element_traces(probe, pulse, {FriEcho(45e-6, 0.8)}, 0.1, kRate, kT);
    auto both = xample_exact(traces, probe, SteeringAngle(0.1), {620, 621, 622, 640, 655},
                             ApodizationWindow::hanning(63));
    for (std::size_t j = 0; j < both.kappa.size(); ++j) {
        auto solo = xample_exact(traces, probe, SteeringAngle(0.1), {both.kappa[j]},
                                 ApodizationWindow::hanning(63));
        CHECK(std::abs(both.values[j] - solo.values[0]) < 1e-13);
    }
}

TEST_CASE("conjugate symmetry at the reference element") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto trace = synthesize_fri(pulse, {FriEcho(50e-6, 1.0)}, kRate, kT);
    DistortedKernelSpec pos(630, 0.0, 0.0, kT, 200e-6);
    DistortedKernelSpec neg(-630, 0.0, 0.0, kT, 200e-6);
    auto cp = xample_channel(trace, pos);
    auto cn = xample_channel(trace, neg);
    CHECK(std::abs(cn - std::conj(cp)) < 1e-15);
}

TEST_CASE("kernel bank export") {
    auto probe = default_probe();
    double tb = support_bound(probe, SteeringAngle(0.0), kT);
    DistortedKernelSpec spec(630, probe.gamma(62), 0.0, kT, tb);
    export_kernel_csv(spec, 1e6, "kernel_export.csv");
    std::ifstream f("kernel_export.csv");
    REQUIRE(f.good());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(f, line)) ++rows;
    CHECK(rows == SampledTrace::sample_count(1e6, kT) + 1);
    std::remove("kernel_export.csv");
}
