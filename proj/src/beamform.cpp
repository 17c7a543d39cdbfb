#include "cbf/beamform.hpp"

#include "cbf/parallel.hpp"
#include "cbf/signal.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cbf {

double tau(double gamma, double t, double theta) {
    if (t < 0.0) throw std::invalid_argument("tau: t must be nonnegative");
    if (gamma == 0.0) return t;  // keep the reference element exact
    double s = std::sin(theta);
    double radicand = t * t - 4.0 * gamma * t * s + 4.0 * gamma * gamma;
    if (radicand < 0.0) radicand = 0.0;  // rounding only; algebraically >= 0
    return 0.5 * (t + std::sqrt(radicand));
}

double tau_inverse(double gamma, double t, double theta) {
    if (t < std::abs(gamma))
        throw std::domain_error("tau_inverse: t must be at least |gamma|");
    return (t * t - gamma * gamma) / (t - gamma * std::sin(theta));
}

double support_bound(const ArrayGeometry& geometry, SteeringAngle theta, double T) {
    if (T <= geometry.gamma_max_abs())
        throw std::invalid_argument("support_bound: frame shorter than max |gamma|");
    double tb = std::numeric_limits<double>::infinity();
    for (int m = 0; m < geometry.count(); ++m)
        tb = std::min(tb, tau_inverse(geometry.gamma(m), T, theta.radians));
    return tb;
}

double distortion_sigma(double gamma, double t_l, double theta) {
    double s = std::sin(theta);
    double radicand = t_l * t_l - 4.0 * gamma * t_l * s + 4.0 * gamma * gamma;
    if (radicand <= 0.0)
        throw std::domain_error("distortion_sigma: degenerate geometry, zero radicand");
    return 0.5 * (1.0 + (t_l - 2.0 * gamma * s) / std::sqrt(radicand));
}

SupportWidth distorted_support(double gamma, double t_l, double theta, double delta) {
    double s = std::sin(theta);
    double root = std::sqrt(std::max(0.0, t_l * t_l - 4.0 * gamma * t_l * s + 4.0 * gamma * gamma));
    double denom = root + 2.0 * delta + t_l - 2.0 * gamma * s;
    double value = denom > 0.0 ? 2.0 * delta * (root + delta) / denom : 0.0;
    return SupportWidth{value, 2.0 * std::abs(gamma) <= t_l};
}

namespace {

double interp(const SampledTrace& x, double t) {
    if (t < 0.0) return 0.0;
    double pos = t * x.rate;
    auto i = static_cast<std::size_t>(pos);
    if (i >= x.samples.size()) return 0.0;
    double frac = pos - static_cast<double>(i);
    // snap sub-ulp drift from the delay arithmetic back onto the grid
    if (frac < 1e-9) return x.samples[i];
    if (frac > 1.0 - 1e-9 && i + 1 < x.samples.size()) return x.samples[i + 1];
    double a = x.samples[i];
    double b = (i + 1 < x.samples.size()) ? x.samples[i + 1] : 0.0;
    return a + frac * (b - a);
}

} // namespace

SampledTrace beamform(const std::vector<SampledTrace>& traces, const ArrayGeometry& geometry,
                      SteeringAngle theta, const ApodizationWindow& apodization) {
    if (static_cast<int>(traces.size()) != geometry.count())
        throw std::invalid_argument("beamform: trace count does not match geometry");
    if (apodization.weights.size() != traces.size())
        throw std::invalid_argument("beamform: apodization size does not match geometry");
    const double rate = traces.front().rate;
    const double T = traces.front().duration;
    for (const auto& tr : traces)
        if (tr.rate != rate || tr.duration != T)
            throw std::invalid_argument("beamform: traces must share rate and duration");

    const double tb = support_bound(geometry, theta, T);
    SampledTrace out = SampledTrace::zeros(rate, T);
    const std::size_t n_out = out.samples.size();
    for (std::size_t i = 0; i < n_out; ++i) {
        double t = out.time_at(i);
        if (t >= tb) break;  // zero past the support bound
        double acc = 0.0, wsum = 0.0;
        for (int m = 0; m < geometry.count(); ++m) {
            double g = geometry.gamma(m);
            if (t < 2.0 * std::abs(g)) continue;  // element not yet receiving
            double w = apodization.weights[static_cast<std::size_t>(m)];
            if (w == 0.0) continue;
            acc += w * interp(traces[static_cast<std::size_t>(m)], tau(g, t, theta.radians));
            wsum += w;
        }
        if (wsum > 0.0) out.samples[i] = acc / wsum;
    }
    return out;
}

ProjectionErrorCurves projection_error_experiment(const ArrayGeometry& geometry,
                                                  const TwoWayPulse& pulse,
                                                  const std::vector<double>& delays,
                                                  SteeringAngle theta,
                                                  const std::vector<long long>& kappa,
                                                  double rate, double T,
                                                  const std::vector<int>& elements,
                                                  int threads) {
    for (int m : elements)
        if (m < 0 || m >= geometry.count())
            throw std::invalid_argument("projection_error_experiment: element out of range");

    ProjectionErrorCurves curves;
    curves.delays = delays;
    curves.elements = elements;
    curves.snr_db.assign(elements.size(), std::vector<double>(delays.size(), 0.0));

    const double th = theta.radians;

    // the element's beamformed contribution, evaluated analytically through tau
    auto distorted = [&](double gamma, double t_l) {
        SampledTrace tr = SampledTrace::zeros(rate, T);
        double t_lm = tau(gamma, t_l, th);
        for (std::size_t i = 0; i < tr.samples.size(); ++i) {
            double t = tr.time_at(i);
            tr.samples[i] = pulse.eval(tau(gamma, t, th) - t_lm);
        }
        return tr;
    };

    const std::size_t jobs = delays.size();
    parallel_for(jobs, threads, [&](std::size_t d) {
        double t_l = delays[d];
        auto ref = fourier_coeffs(distorted(0.0, t_l), kappa);
        double ref_norm = 0.0;
        for (const auto& v : ref.values) ref_norm += std::norm(v);
        for (std::size_t e = 0; e < elements.size(); ++e) {
            int m = elements[e];
            if (m == geometry.reference_index) {
                curves.snr_db[e][d] = std::numeric_limits<double>::infinity();
                continue;
            }
            auto own = fourier_coeffs(distorted(geometry.gamma(m), t_l), kappa);
            double err = 0.0;
            for (std::size_t j = 0; j < kappa.size(); ++j)
                err += std::norm(own.values[j] - ref.values[j]);
            curves.snr_db[e][d] = err == 0.0
                                      ? std::numeric_limits<double>::infinity()
                                      : 10.0 * std::log10(ref_norm / err);
        }
    });
    return curves;
}

} // namespace cbf
