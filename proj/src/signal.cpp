#include "cbf/signal.hpp"

#include "cbf/fft.hpp"
#include "cbf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cbf {

SampledTrace synthesize_fri(const TwoWayPulse& pulse, const std::vector<FriEcho>& echoes,
                            double rate, double duration) {
    for (const auto& e : echoes)
        if (e.delay >= duration)
            throw std::invalid_argument("synthesize_fri: delay beyond trace duration");
    if (rate < 4.0 * pulse.band_edge_hz(50.0))
        throw std::invalid_argument("synthesize_fri: rate below 4x the -50 dB band edge");
    SampledTrace out = SampledTrace::zeros(rate, duration);
    std::size_t n = out.samples.size();
    for (const auto& e : echoes) {
        double mag = std::abs(e.amplitude);
        if (mag == 0.0) continue;
        double phase = std::arg(e.amplitude);
        // pulse support is [delay, delay + delta); widen by one sample each way
        // and let eval's own support test decide the boundary cases exactly
        long long lo = static_cast<long long>(std::ceil(e.delay * rate)) - 1;
        long long hi = static_cast<long long>(std::ceil((e.delay + pulse.delta) * rate)) + 1;
        std::size_t i0 = static_cast<std::size_t>(std::max(0LL, lo));
        std::size_t i1 = std::min(n, static_cast<std::size_t>(std::max(0LL, hi)));
        for (std::size_t i = i0; i < i1; ++i) {
            double t = static_cast<double>(i) / rate - e.delay;
            out.samples[i] += mag * pulse.eval_phase(t, phase);
        }
    }
    return out;
}

namespace {

// e^{-i 2 pi k i / S} accumulated by recurrence, re-synced every 4096 steps
// to keep phase drift near machine precision over long traces.
std::complex<double> dft_bin(const std::vector<double>& x, long long k) {
    const std::size_t s = x.size();
    const double step = -kTwoPi * static_cast<double>(k) / static_cast<double>(s);
    std::complex<double> acc(0.0, 0.0);
    std::complex<double> w = std::polar(1.0, step);
    std::complex<double> p(1.0, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        if ((i & 0xFFF) == 0)
            p = std::polar(1.0, step * static_cast<double>(i));
        acc += x[i] * p;
        p *= w;
    }
    return acc / static_cast<double>(s);
}

} // namespace

MeasurementVector fourier_coeffs(const SampledTrace& trace,
                                 const std::vector<long long>& kappa) {
    const long long s = static_cast<long long>(trace.samples.size());
    for (std::size_t j = 0; j < kappa.size(); ++j) {
        if (j > 0 && kappa[j] <= kappa[j - 1])
            throw std::invalid_argument("fourier_coeffs: indices must be strictly increasing");
        if (std::llabs(kappa[j]) >= s / 2)
            throw std::invalid_argument("fourier_coeffs: index beyond dense-grid Nyquist");
    }
    std::vector<std::complex<double>> vals(kappa.size());
    if (kappa.size() > 64) {
        auto spec = full_spectrum(trace);
        for (std::size_t j = 0; j < kappa.size(); ++j) {
            long long k = kappa[j] % s;
            if (k < 0) k += s;
            vals[j] = spec[static_cast<std::size_t>(k)];
        }
    } else {
        for (std::size_t j = 0; j < kappa.size(); ++j)
            vals[j] = dft_bin(trace.samples, kappa[j]);
    }
    return MeasurementVector(kappa, std::move(vals));
}

std::vector<std::complex<double>> full_spectrum(const SampledTrace& trace) {
    auto bins = fft_forward_real(trace.samples);
    double inv = 1.0 / static_cast<double>(trace.samples.size());
    for (auto& b : bins) b *= inv;
    return bins;
}

MeasurementVector spectrum_subset(const std::vector<std::complex<double>>& spectrum,
                                  const std::vector<long long>& kappa) {
    const long long s = static_cast<long long>(spectrum.size());
    std::vector<std::complex<double>> vals(kappa.size());
    for (std::size_t j = 0; j < kappa.size(); ++j) {
        if (std::llabs(kappa[j]) >= s / 2)
            throw std::invalid_argument("spectrum_subset: index beyond dense-grid Nyquist");
        long long k = kappa[j] % s;
        if (k < 0) k += s;
        vals[j] = spectrum[static_cast<std::size_t>(k)];
    }
    return MeasurementVector(kappa, std::move(vals));
}

std::vector<long long> kappa_consecutive(long long k0, int K) {
    if (K < 1) throw std::invalid_argument("kappa_consecutive: K must be at least 1");
    std::vector<long long> out(static_cast<std::size_t>(K));
    long long lo = k0 - K / 2;
    for (int j = 0; j < K; ++j) out[static_cast<std::size_t>(j)] = lo + j;
    return out;
}

std::vector<long long> kappa_band(const TwoWayPulse& pulse, double T, double threshold_db) {
    if (threshold_db <= 0.0) throw std::invalid_argument("kappa_band: threshold must be positive");
    long long k_hi = static_cast<long long>(std::ceil(2.0 * pulse.f0 * T)) + 1;
    double peak = 0.0;
    std::vector<double> mag(static_cast<std::size_t>(k_hi + 1));
    for (long long k = 0; k <= k_hi; ++k) {
        double m = std::abs(pulse.spectrum(kTwoPi * static_cast<double>(k) / T));
        mag[static_cast<std::size_t>(k)] = m;
        peak = std::max(peak, m);
    }
    double cut = peak * std::pow(10.0, -threshold_db / 20.0);
    std::vector<long long> band;
    for (long long k = 0; k <= k_hi; ++k)
        if (mag[static_cast<std::size_t>(k)] >= cut) band.push_back(k);
    return band;
}

std::vector<long long> kappa_random(const TwoWayPulse& pulse, double T, int K,
                                    double threshold_db, uint64_t seed) {
    if (K < 1) throw std::invalid_argument("kappa_random: K must be at least 1");
    std::vector<long long> band = kappa_band(pulse, T, threshold_db);
    if (band.size() < static_cast<std::size_t>(K))
        throw std::invalid_argument("kappa_random: fewer admissible indices than K");
    Rng rng(seed);
    // partial Fisher-Yates, then sort the chosen prefix
    for (int j = 0; j < K; ++j) {
        std::size_t pick = static_cast<std::size_t>(j) +
                           rng.uniform_int(band.size() - static_cast<std::size_t>(j));
        std::swap(band[static_cast<std::size_t>(j)], band[pick]);
    }
    band.resize(static_cast<std::size_t>(K));
    std::sort(band.begin(), band.end());
    return band;
}

std::vector<std::complex<double>> pulse_band(const TwoWayPulse& pulse, double T,
                                             const std::vector<long long>& kappa) {
    std::vector<std::complex<double>> h(kappa.size());
    for (std::size_t j = 0; j < kappa.size(); ++j)
        h[j] = pulse.spectrum(kTwoPi * static_cast<double>(kappa[j]) / T);
    return h;
}

MeasurementVector closed_form_coeffs(const TwoWayPulse& pulse,
                                     const std::vector<FriEcho>& echoes, double T,
                                     const std::vector<long long>& kappa) {
    std::complex<double> i(0.0, 1.0);
    double w0 = pulse.omega0();
    std::vector<std::complex<double>> vals(kappa.size());
    for (std::size_t j = 0; j < kappa.size(); ++j) {
        double w = kTwoPi * static_cast<double>(kappa[j]) / T;
        std::complex<double> pos = 0.5 * std::exp(i * pulse.beta) *
                                   pulse.envelope_spectrum(w - w0) *
                                   std::exp(-i * (w - w0) * pulse.envelope_center);
        std::complex<double> neg = 0.5 * std::exp(-i * pulse.beta) *
                                   pulse.envelope_spectrum(w + w0) *
                                   std::exp(-i * (w + w0) * pulse.envelope_center);
        std::complex<double> acc(0.0, 0.0);
        for (const auto& e : echoes) {
            std::complex<double> shift = std::exp(-i * w * e.delay);
            acc += shift * (e.amplitude * pos + std::conj(e.amplitude) * neg);
        }
        vals[j] = acc / T;
    }
    return MeasurementVector(kappa, std::move(vals));
}

} // namespace cbf
