#pragma once

#include "cbf/types.hpp"

#include <complex>
#include <string>
#include <vector>

namespace cbf {

// One modulation channel of the exact compressed-beamforming bank: Fourier
// index k_j against element offset gamma at steering angle theta.
struct DistortedKernelSpec {
    long long fourier_index;
    double gamma;
    double theta;
    double T;
    double T_B;   // beamformed support bound
    double T_m;   // element-side gate end, tau(gamma, T_B, theta)

    DistortedKernelSpec(long long fourier_index, double gamma, double theta, double T,
                        double T_B);
};

// q(t) = gate(t) * (1 + gamma^2 cos^2(theta) / (t - gamma sin(theta))^2)
//        * exp(i (2 pi / T) k gamma (gamma - t sin(theta)) / (t - gamma sin(theta)))
// with gate = indicator of [|gamma|, T_m). The gain factor is the Jacobian of
// the delay-map change of variables, the phase its residual delay.
std::complex<double> kernel_q(const DistortedKernelSpec& spec, double t);

// Full kernel g(t) = q(t) e^{-i 2 pi k t / T}.
std::complex<double> kernel_g(const DistortedKernelSpec& spec, double t);

// (1/T) integral of g * trace over the frame, trapezoid rule on the trace grid.
std::complex<double> xample_channel(const SampledTrace& trace, const DistortedKernelSpec& spec);

// Weighted average of per-element channel values; weights renormalized over
// nonzero entries, error if everything is gated out.
std::complex<double> xample_average(const std::vector<std::complex<double>>& values,
                                    const std::vector<double>& weights);

// Per-element modulation, integration, and averaging for every index in kappa.
// T_B comes from support_bound so all channel gates agree.
MeasurementVector xample_exact(const std::vector<SampledTrace>& traces,
                               const ArrayGeometry& geometry, SteeringAngle theta,
                               const std::vector<long long>& kappa,
                               const ApodizationWindow& apodization, int threads = 1);

// CSV export (t, Re g, Im g) sampled at the given rate over [0, T).
void export_kernel_csv(const DistortedKernelSpec& spec, double rate, const std::string& path);

} // namespace cbf
