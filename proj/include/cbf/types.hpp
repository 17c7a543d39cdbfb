#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cbf {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 6.28318530717958647692;

// average soft-tissue sound speed, m/s
inline constexpr double kSpeedOfSound = 1540.0;

// Gaussian-envelope modulated pulse, hard-truncated to [0, delta).
// The truncation keeps the discarded envelope energy below 1e-6, which is
// why construction insists on delta >= 10 sigma.
struct TwoWayPulse {
    double sigma;            // envelope std dev, seconds
    double f0;               // carrier, Hz
    double beta;             // carrier phase, radians
    double delta;            // support length, seconds
    double envelope_center;  // Gaussian peak position inside [0, delta)

    TwoWayPulse(double sigma, double f0, double beta, double delta, double envelope_center);

    // centered 10-sigma support
    static TwoWayPulse gaussian(double sigma, double f0, double beta = 0.0);

    double omega0() const { return kTwoPi * f0; }

    // g(t - center) cos(w0 t + beta + extra_phase) inside the support, 0 outside
    double eval(double t) const;
    double eval_phase(double t, double extra_phase) const;

    // transform of the untruncated pulse: half e^{i beta} G(w-w0) plus the
    // mirrored carrier term, each with the envelope-center linear phase
    std::complex<double> spectrum(double omega) const;

    // sqrt(2 pi) sigma exp(-sigma^2 nu^2 / 2), transform of the centered envelope
    double envelope_spectrum(double nu) const;

    // |G(omega + w0)| / |G(omega - w0)|, leakage of the mirrored carrier term
    double carrier_ratio(double omega) const;

    // highest frequency (Hz) where the carrier-side envelope is above -drop_db
    double band_edge_hz(double drop_db) const;
};

// Smallest Fourier index at which the mirrored-carrier leakage is safely
// below 1 percent, via the sufficient bound 5T/(4 pi sigma^2 w0).
long long min_reliable_phase_index(const TwoWayPulse& pulse, double T);

struct FriEcho {
    double delay;                     // seconds, nonnegative
    std::complex<double> amplitude;   // modulus |b|, argument = carrier phase offset

    FriEcho(double delay, std::complex<double> amplitude);
};

// Uniformly sampled real trace over [0, duration).
struct SampledTrace {
    std::vector<double> samples;
    double rate;       // Hz
    double duration;   // seconds

    SampledTrace(std::vector<double> samples, double rate, double duration);
    static SampledTrace zeros(double rate, double duration);
    static std::size_t sample_count(double rate, double duration);

    double dt() const { return 1.0 / rate; }
    double time_at(std::size_t i) const { return static_cast<double>(i) / rate; }

    // dt * sum of squares
    double energy() const;
};

// Complex Fourier-series samples at a strictly increasing integer index set.
struct MeasurementVector {
    std::vector<long long> kappa;
    std::vector<std::complex<double>> values;

    MeasurementVector() = default;
    MeasurementVector(std::vector<long long> kappa, std::vector<std::complex<double>> values);

    std::size_t size() const { return kappa.size(); }
};

struct ArrayGeometry {
    std::vector<double> offsets;  // signed element positions, meters; reference at 0
    double speed;                 // m/s
    int reference_index;

    ArrayGeometry(std::vector<double> offsets, double speed, int reference_index);
    static ArrayGeometry linear(int count, double pitch, int reference_index,
                                double speed = kSpeedOfSound);

    int count() const { return static_cast<int>(offsets.size()); }
    double gamma(int m) const { return offsets[static_cast<std::size_t>(m)] / speed; }
    double gamma_max_abs() const;
};

// 63 elements at 0.29 mm pitch, center reference (projection-error study setup)
ArrayGeometry default_probe();
// 64 elements at 0.49 mm pitch (imaging and Monte-Carlo setup)
ArrayGeometry imaging_probe();

struct SteeringAngle {
    double radians;
    explicit SteeringAngle(double radians);
};

// Non-negative receive weights, normalized to sum 1 at construction.
// Time gating of early samples is applied by the combiner, not stored here.
struct ApodizationWindow {
    std::vector<double> weights;

    explicit ApodizationWindow(std::vector<double> weights);
    static ApodizationWindow uniform(int count);
    static ApodizationWindow hanning(int count);
};

} // namespace cbf
