#include "cbf/kernels.hpp"

#include "cbf/beamform.hpp"
#include "cbf/parallel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace cbf {

DistortedKernelSpec::DistortedKernelSpec(long long fourier_index_, double gamma_, double theta_,
                                         double T_, double T_B_)
    : fourier_index(fourier_index_), gamma(gamma_), theta(theta_), T(T_), T_B(T_B_),
      T_m(tau(gamma_, T_B_, theta_)) {
    if (!(std::abs(theta) < kPi / 2.0))
        throw std::invalid_argument("DistortedKernelSpec: |theta| must be below pi/2");
    if (T_B < 0.0 || T_B > T)
        throw std::invalid_argument("DistortedKernelSpec: T_B must lie in [0, T]");
    // tau(tau_inverse(T)) lands a few ulp either side of T; only a real
    // overshoot means the caller's bound is wrong
    if (T_m > T * (1.0 + 1e-12))
        throw std::invalid_argument("DistortedKernelSpec: gate end beyond the frame; T_B too large");
    T_m = std::min(T_m, T);
    if (std::abs(gamma) > T_m)
        throw std::invalid_argument("DistortedKernelSpec: empty gate");
}

std::complex<double> kernel_q(const DistortedKernelSpec& spec, double t) {
    if (t < std::abs(spec.gamma) || t >= spec.T_m) return {0.0, 0.0};
    if (spec.gamma == 0.0) return {1.0, 0.0};
    double s = std::sin(spec.theta);
    double c = std::cos(spec.theta);
    double denom = t - spec.gamma * s;
    if (denom == 0.0)
        throw std::domain_error("kernel_q: singular point inside the gate");
    double gain = 1.0 + spec.gamma * spec.gamma * c * c / (denom * denom);
    double phase = (kTwoPi / spec.T) * static_cast<double>(spec.fourier_index) * spec.gamma *
                   (spec.gamma - t * s) / denom;
    return std::polar(gain, phase);
}

std::complex<double> kernel_g(const DistortedKernelSpec& spec, double t) {
    std::complex<double> q = kernel_q(spec, t);
    if (q == std::complex<double>(0.0, 0.0)) return q;
    return q * std::polar(1.0, -(kTwoPi / spec.T) * static_cast<double>(spec.fourier_index) * t);
}

std::complex<double> xample_channel(const SampledTrace& trace, const DistortedKernelSpec& spec) {
    if (trace.duration != spec.T)
        throw std::invalid_argument("xample_channel: trace duration does not match the frame");
    const std::size_t n = trace.samples.size();
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double x = trace.samples[i];
        if (x == 0.0) continue;
        acc += x * kernel_g(spec, trace.time_at(i));
    }
    return acc / static_cast<double>(n);
}

std::complex<double> xample_average(const std::vector<std::complex<double>>& values,
                                    const std::vector<double>& weights) {
    if (values.size() != weights.size())
        throw std::invalid_argument("xample_average: size mismatch");
    std::complex<double> acc(0.0, 0.0);
    double wsum = 0.0;
    for (std::size_t m = 0; m < values.size(); ++m) {
        if (weights[m] == 0.0) continue;
        if (weights[m] < 0.0) throw std::invalid_argument("xample_average: negative weight");
        acc += weights[m] * values[m];
        wsum += weights[m];
    }
    if (wsum == 0.0) throw std::invalid_argument("xample_average: all elements gated out");
    return acc / wsum;
}

MeasurementVector xample_exact(const std::vector<SampledTrace>& traces,
                               const ArrayGeometry& geometry, SteeringAngle theta,
                               const std::vector<long long>& kappa,
                               const ApodizationWindow& apodization, int threads) {
    if (static_cast<int>(traces.size()) != geometry.count())
        throw std::invalid_argument("xample_exact: trace count does not match geometry");
    if (apodization.weights.size() != traces.size())
        throw std::invalid_argument("xample_exact: apodization size mismatch");
    const double T = traces.front().duration;
    for (const auto& tr : traces)
        if (tr.duration != T || tr.rate != traces.front().rate)
            throw std::invalid_argument("xample_exact: traces must share rate and duration");

    const double tb = support_bound(geometry, theta, T);
    const std::size_t K = kappa.size();
    const std::size_t M = traces.size();

    // channels[m][j]
    std::vector<std::vector<std::complex<double>>> channels(
        M, std::vector<std::complex<double>>(K, {0.0, 0.0}));

    parallel_for(M, threads, [&](std::size_t m) {
        const double gamma = geometry.gamma(static_cast<int>(m));
        const double s = std::sin(theta.radians);
        const double c = std::cos(theta.radians);
        const SampledTrace& tr = traces[m];
        const double t_m = tau(gamma, tb, theta.radians);
        const double lo = std::abs(gamma);
        const std::size_t n = tr.samples.size();
        auto& out = channels[m];
        for (std::size_t i = 0; i < n; ++i) {
            double x = tr.samples[i];
            if (x == 0.0) continue;
            double t = tr.time_at(i);
            if (t < lo || t >= t_m) continue;
            double gain, chi;  // q = gain e^{i k chi_q}; full kernel collects chi
            if (gamma == 0.0) {
                gain = 1.0;
                chi = -kTwoPi * t / T;
            } else {
                double denom = t - gamma * s;
                gain = 1.0 + gamma * gamma * c * c / (denom * denom);
                chi = (kTwoPi / T) * gamma * (gamma - t * s) / denom - kTwoPi * t / T;
            }
            double a = x * gain;
            // e^{i k chi} advanced across kappa by multiplicative steps
            std::complex<double> p = std::polar(1.0, static_cast<double>(kappa[0]) * chi);
            std::complex<double> w1 = std::polar(1.0, chi);
            for (std::size_t j = 0; j < K; ++j) {
                if (j > 0) {
                    long long gap = kappa[j] - kappa[j - 1];
                    if (gap == 1)
                        p *= w1;
                    else
                        p = std::polar(1.0, static_cast<double>(kappa[j]) * chi);
                }
                out[j] += a * p;
            }
        }
        double inv = 1.0 / static_cast<double>(n);
        for (auto& v : out) v *= inv;
    });

    std::vector<std::complex<double>> avg(K);
    std::vector<std::complex<double>> per_element(M);
    for (std::size_t j = 0; j < K; ++j) {
        for (std::size_t m = 0; m < M; ++m) per_element[m] = channels[m][j];
        avg[j] = xample_average(per_element, apodization.weights);
    }
    return MeasurementVector(kappa, std::move(avg));
}

void export_kernel_csv(const DistortedKernelSpec& spec, double rate, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "t_s,re_g,im_g\n";
    const std::size_t n = SampledTrace::sample_count(rate, spec.T);
    char line[120];
    for (std::size_t i = 0; i < n; ++i) {
        double t = static_cast<double>(i) / rate;
        auto g = kernel_g(spec, t);
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", t, g.real(), g.imag());
        f << line;
    }
    if (!f) throw std::runtime_error(path + ": write failed");
}

} // namespace cbf
