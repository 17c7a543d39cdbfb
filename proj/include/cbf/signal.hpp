#pragma once

#include "cbf/types.hpp"

#include <complex>
#include <cstdint>
#include <vector>

namespace cbf {

// Sum of delayed pulse copies sampled on a uniform grid. Echo amplitude
// modulus scales the envelope; its argument shifts the carrier phase.
// Requires every delay below duration and a rate of at least 4x the pulse's
// -50 dB band edge, the contract for the dense surrogate grid.
SampledTrace synthesize_fri(const TwoWayPulse& pulse, const std::vector<FriEcho>& echoes,
                            double rate, double duration);

// (1/T) integral of trace(t) e^{-i 2 pi k t / T} via the periodic trapezoid
// rule, which collapses to a scaled DFT bin. kappa must be strictly
// increasing with |k| below half the grid length.
MeasurementVector fourier_coeffs(const SampledTrace& trace, const std::vector<long long>& kappa);

// All S Fourier-series coefficients at once (FFT order, bin k at index k mod S).
std::vector<std::complex<double>> full_spectrum(const SampledTrace& trace);

// Pick signed indices out of a full_spectrum result.
MeasurementVector spectrum_subset(const std::vector<std::complex<double>>& spectrum,
                                  const std::vector<long long>& kappa);

// {k0 - floor(K/2), ..., k0 + ceil(K/2) - 1}
std::vector<long long> kappa_consecutive(long long k0, int K);

// K distinct indices drawn uniformly (seeded) from the set of nonnegative
// indices whose |H(2 pi k / T)| is within threshold_db of the peak.
std::vector<long long> kappa_random(const TwoWayPulse& pulse, double T, int K,
                                    double threshold_db, uint64_t seed);

// All admissible indices for kappa_random, ascending.
std::vector<long long> kappa_band(const TwoWayPulse& pulse, double T, double threshold_db);

// H(2 pi k / T) for each k, from the closed-form pulse transform.
std::vector<std::complex<double>> pulse_band(const TwoWayPulse& pulse, double T,
                                             const std::vector<long long>& kappa);

// Exact transform of the synthesized echo model (untruncated envelope):
// both carrier components kept, so it serves as an oracle at any index.
MeasurementVector closed_form_coeffs(const TwoWayPulse& pulse,
                                     const std::vector<FriEcho>& echoes, double T,
                                     const std::vector<long long>& kappa);

} // namespace cbf
