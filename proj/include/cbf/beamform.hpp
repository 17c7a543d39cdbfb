#pragma once

#include "cbf/types.hpp"

#include <vector>

namespace cbf {

// Receive-path delay map: the beamformed time t pulls element data from
// tau(gamma, t, theta) = (t + sqrt(t^2 - 4 gamma t sin(theta) + 4 gamma^2)) / 2.
// Total function; the radicand is a sum of squares.
double tau(double gamma, double t, double theta);

// Inverse of tau on t >= |gamma|: (t^2 - gamma^2) / (t - gamma sin(theta)).
double tau_inverse(double gamma, double t, double theta);

// Largest beamformed time guaranteed to pull only in-frame element data:
// min over elements of tau_inverse(gamma_m, T, theta).
double support_bound(const ArrayGeometry& geometry, SteeringAngle theta, double T);

// Local time-compression factor of the delay map at an echo delay.
double distortion_sigma(double gamma, double t_l, double theta);

struct SupportWidth {
    double value;      // width of the distorted echo in beamformed time
    bool guaranteed;   // true when 2|gamma| <= t_l, where value <= 2 delta holds
};
SupportWidth distorted_support(double gamma, double t_l, double theta, double delta);

// Dynamic-focus delay-and-sum. Element m contributes w_m * phi_m(tau(gamma_m, t))
// for t >= 2|gamma_m| (earlier samples are gated out and the remaining weights
// renormalized); output is zero from support_bound onwards. Linear interpolation
// between samples.
SampledTrace beamform(const std::vector<SampledTrace>& traces, const ArrayGeometry& geometry,
                      SteeringAngle theta, const ApodizationWindow& apodization);

struct ProjectionErrorCurves {
    std::vector<double> delays;                // echo delays t_l, seconds
    std::vector<int> elements;                 // element indices probed
    std::vector<std::vector<double>> snr_db;   // [element][delay]; +inf means exact
};

// For a single on-axis reflector at each t_l: compare the Fourier projection of
// one element's distorted beamformed contribution against the reference
// element's, as 20 log10(|ref| / |element - ref|). The element trace is warped
// through tau analytically, so the curves measure distortion alone and not
// interpolation noise.
ProjectionErrorCurves projection_error_experiment(const ArrayGeometry& geometry,
                                                  const TwoWayPulse& pulse,
                                                  const std::vector<double>& delays,
                                                  SteeringAngle theta,
                                                  const std::vector<long long>& kappa,
                                                  double rate, double T,
                                                  const std::vector<int>& elements,
                                                  int threads = 1);

} // namespace cbf
