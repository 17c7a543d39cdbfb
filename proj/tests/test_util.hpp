#pragma once

#include "cbf/beamform.hpp"
#include "cbf/fft.hpp"
#include "cbf/signal.hpp"
#include "cbf/types.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace testutil {

// Per-element traces for echoes defined in beamformed time: element m sees the
// echo at tau(gamma_m, t_l, theta) with the same amplitude.
inline std::vector<cbf::SampledTrace> element_traces(const cbf::ArrayGeometry& geom,
                                                     const cbf::TwoWayPulse& pulse,
                                                     const std::vector<cbf::FriEcho>& echoes,
                                                     double theta, double rate, double T) {
    std::vector<cbf::SampledTrace> out;
    out.reserve(static_cast<std::size_t>(geom.count()));
    for (int m = 0; m < geom.count(); ++m) {
        std::vector<cbf::FriEcho> shifted;
        shifted.reserve(echoes.size());
        for (const auto& e : echoes)
            shifted.emplace_back(cbf::tau(geom.gamma(m), e.delay, theta), e.amplitude);
        out.push_back(cbf::synthesize_fri(pulse, shifted, rate, T));
    }
    return out;
}

// Analytic-signal magnitude; local copy so early suites do not depend on the
// imaging module.
inline std::vector<double> hilbert_env(const std::vector<double>& x) {
    auto spec = cbf::fft_forward_real(x);
    const std::size_t n = spec.size();
    for (std::size_t k = 1; 2 * k < n; ++k) spec[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    auto analytic = cbf::fft_inverse(spec);
    std::vector<double> e(n);
    for (std::size_t i = 0; i < n; ++i) e[i] = std::abs(analytic[i]) / static_cast<double>(n);
    return e;
}

inline std::size_t argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

} // namespace testutil
