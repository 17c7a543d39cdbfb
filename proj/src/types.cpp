#include "cbf/types.hpp"

#include <cmath>
#include <stdexcept>

namespace cbf {

TwoWayPulse::TwoWayPulse(double sigma_, double f0_, double beta_, double delta_,
                         double envelope_center_)
    : sigma(sigma_), f0(f0_), beta(beta_), delta(delta_), envelope_center(envelope_center_) {
    if (sigma <= 0.0) throw std::invalid_argument("TwoWayPulse: sigma must be positive");
    if (f0 <= 0.0) throw std::invalid_argument("TwoWayPulse: f0 must be positive");
    if (delta <= 0.0) throw std::invalid_argument("TwoWayPulse: delta must be positive");
    if (delta < 10.0 * sigma)
        throw std::invalid_argument("TwoWayPulse: delta must be at least 10 sigma");
    if (envelope_center < 0.0 || envelope_center >= delta)
        throw std::invalid_argument("TwoWayPulse: envelope_center must lie in [0, delta)");
}

TwoWayPulse TwoWayPulse::gaussian(double sigma_, double f0_, double beta_) {
    double d = 10.0 * sigma_;
    return TwoWayPulse(sigma_, f0_, beta_, d, d / 2.0);
}

double TwoWayPulse::eval(double t) const {
    return eval_phase(t, 0.0);
}

double TwoWayPulse::eval_phase(double t, double extra_phase) const {
    if (t < 0.0 || t >= delta) return 0.0;
    double u = (t - envelope_center) / sigma;
    return std::exp(-0.5 * u * u) * std::cos(omega0() * t + beta + extra_phase);
}

double TwoWayPulse::envelope_spectrum(double nu) const {
    return std::sqrt(kTwoPi) * sigma * std::exp(-0.5 * sigma * sigma * nu * nu);
}

std::complex<double> TwoWayPulse::spectrum(double omega) const {
    std::complex<double> i(0.0, 1.0);
    double w0 = omega0();
    std::complex<double> pos = 0.5 * std::exp(i * beta) * envelope_spectrum(omega - w0) *
                               std::exp(-i * (omega - w0) * envelope_center);
    std::complex<double> neg = 0.5 * std::exp(-i * beta) * envelope_spectrum(omega + w0) *
                               std::exp(-i * (omega + w0) * envelope_center);
    return pos + neg;
}

double TwoWayPulse::carrier_ratio(double omega) const {
    double w0 = omega0();
    return envelope_spectrum(omega + w0) / envelope_spectrum(omega - w0);
}

double TwoWayPulse::band_edge_hz(double drop_db) const {
    double dw = std::sqrt(2.0 * (drop_db / 20.0) * std::log(10.0)) / sigma;
    return f0 + dw / kTwoPi;
}

long long min_reliable_phase_index(const TwoWayPulse& pulse, double T) {
    double bound = 5.0 * T / (4.0 * kPi * pulse.sigma * pulse.sigma * pulse.omega0());
    return static_cast<long long>(std::ceil(bound - 1e-12));
}

FriEcho::FriEcho(double delay_, std::complex<double> amplitude_)
    : delay(delay_), amplitude(amplitude_) {
    if (delay < 0.0) throw std::invalid_argument("FriEcho: delay must be nonnegative");
}

std::size_t SampledTrace::sample_count(double rate, double duration) {
    return static_cast<std::size_t>(std::llround(rate * duration));
}

SampledTrace::SampledTrace(std::vector<double> samples_, double rate_, double duration_)
    : samples(std::move(samples_)), rate(rate_), duration(duration_) {
    if (rate <= 0.0) throw std::invalid_argument("SampledTrace: rate must be positive");
    if (duration <= 0.0) throw std::invalid_argument("SampledTrace: duration must be positive");
    if (samples.size() != sample_count(rate, duration))
        throw std::invalid_argument("SampledTrace: sample count does not match rate*duration");
}

SampledTrace SampledTrace::zeros(double rate_, double duration_) {
    return SampledTrace(std::vector<double>(sample_count(rate_, duration_), 0.0), rate_,
                        duration_);
}

double SampledTrace::energy() const {
    double s = 0.0;
    for (double v : samples) s += v * v;
    return s / rate;
}

MeasurementVector::MeasurementVector(std::vector<long long> kappa_,
                                     std::vector<std::complex<double>> values_)
    : kappa(std::move(kappa_)), values(std::move(values_)) {
    if (kappa.size() != values.size())
        throw std::invalid_argument("MeasurementVector: index/value length mismatch");
    for (std::size_t j = 1; j < kappa.size(); ++j)
        if (kappa[j] <= kappa[j - 1])
            throw std::invalid_argument("MeasurementVector: indices must be strictly increasing");
}

ArrayGeometry::ArrayGeometry(std::vector<double> offsets_, double speed_, int reference_index_)
    : offsets(std::move(offsets_)), speed(speed_), reference_index(reference_index_) {
    if (offsets.empty()) throw std::invalid_argument("ArrayGeometry: no elements");
    if (speed <= 0.0) throw std::invalid_argument("ArrayGeometry: speed must be positive");
    if (reference_index < 0 || reference_index >= count())
        throw std::invalid_argument("ArrayGeometry: reference index out of range");
    if (offsets[static_cast<std::size_t>(reference_index)] != 0.0)
        throw std::invalid_argument("ArrayGeometry: reference element offset must be zero");
}

ArrayGeometry ArrayGeometry::linear(int count_, double pitch, int reference_index_,
                                    double speed_) {
    if (count_ <= 0) throw std::invalid_argument("ArrayGeometry: count must be positive");
    std::vector<double> offs(static_cast<std::size_t>(count_));
    for (int m = 0; m < count_; ++m)
        offs[static_cast<std::size_t>(m)] = (m - reference_index_) * pitch;
    return ArrayGeometry(std::move(offs), speed_, reference_index_);
}

double ArrayGeometry::gamma_max_abs() const {
    double g = 0.0;
    for (int m = 0; m < count(); ++m) g = std::max(g, std::abs(gamma(m)));
    return g;
}

ArrayGeometry default_probe() {
    return ArrayGeometry::linear(63, 0.29e-3, 31);
}

ArrayGeometry imaging_probe() {
    return ArrayGeometry::linear(64, 0.49e-3, 32);
}

SteeringAngle::SteeringAngle(double radians_) : radians(radians_) {
    if (!(std::abs(radians) < kPi / 2.0))
        throw std::invalid_argument("SteeringAngle: |theta| must be below pi/2");
}

ApodizationWindow::ApodizationWindow(std::vector<double> weights_)
    : weights(std::move(weights_)) {
    if (weights.empty()) throw std::invalid_argument("ApodizationWindow: empty");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("ApodizationWindow: negative weight");
        sum += w;
    }
    if (sum <= 0.0) throw std::invalid_argument("ApodizationWindow: weights sum to zero");
    for (double& w : weights) w /= sum;
}

ApodizationWindow ApodizationWindow::uniform(int count) {
    if (count <= 0) throw std::invalid_argument("ApodizationWindow: count must be positive");
    return ApodizationWindow(std::vector<double>(static_cast<std::size_t>(count), 1.0));
}

ApodizationWindow ApodizationWindow::hanning(int count) {
    if (count <= 0) throw std::invalid_argument("ApodizationWindow: count must be positive");
    if (count == 1) return ApodizationWindow({1.0});
    std::vector<double> w(static_cast<std::size_t>(count));
    for (int m = 0; m < count; ++m)
        w[static_cast<std::size_t>(m)] =
            0.5 - 0.5 * std::cos(kTwoPi * m / (count - 1));
    return ApodizationWindow(std::move(w));
}

} // namespace cbf
