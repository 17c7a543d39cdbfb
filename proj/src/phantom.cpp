#include "cbf/phantom.hpp"

#include "cbf/beamform.hpp"
#include "cbf/parallel.hpp"
#include "cbf/recovery.hpp"
#include "cbf/rng.hpp"
#include "cbf/signal.hpp"
#include "cbf/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace cbf {

using cd = std::complex<double>;

namespace {

// beam weights below this are dropped from trace synthesis
const double kBeamCutoff = 1e-9;
const int kTableOversample = 16;
const double kAttenuationReferenceZ = 60e-3;

double trace_energy_sum(const SampledTrace& trace) {
    double e = 0.0;
    for (double s : trace.samples) e += s * s;
    return e;
}

SampledTrace beamform_phantom(const Phantom& phantom, const ArrayGeometry& geometry,
                              const TwoWayPulse& pulse, SteeringAngle theta, double rate,
                              double duration, double beam_width, bool attenuation) {
    auto traces = simulate_traces(phantom, geometry, pulse, theta, rate, duration,
                                  beam_width, attenuation);
    return beamform(traces, geometry, theta, ApodizationWindow::hanning(geometry.count()));
}

// maximum one-to-one matching on the "within tolerance" bipartite graph
int max_matching(const std::vector<std::vector<int>>& adj, int n_right) {
    std::vector<int> owner(static_cast<std::size_t>(n_right), -1);
    int matched = 0;
    std::vector<char> visited;
    std::function<bool(int)> augment = [&](int left) {
        for (int right : adj[static_cast<std::size_t>(left)]) {
            if (visited[static_cast<std::size_t>(right)]) continue;
            visited[static_cast<std::size_t>(right)] = 1;
            int& o = owner[static_cast<std::size_t>(right)];
            if (o < 0 || augment(o)) {
                o = left;
                return true;
            }
        }
        return false;
    };
    for (std::size_t left = 0; left < adj.size(); ++left) {
        visited.assign(static_cast<std::size_t>(n_right), 0);
        if (augment(static_cast<int>(left))) ++matched;
    }
    return matched;
}

std::vector<double> grid_delays(const OmpResult& result, const RecoveryGrid& grid) {
    std::vector<double> delays;
    delays.reserve(result.support.size());
    for (long long q : result.support)
        delays.push_back(static_cast<double>(q) * grid.delta_s);
    return delays;
}

} // namespace

Phantom gen_phantom(const SimConfig& config, uint64_t seed) {
    if (config.signal_count < 0 || config.speckle_count < 0)
        throw std::invalid_argument("gen_phantom: negative scatterer count");
    if (!(config.depth_min > 0.0) || !(config.depth_max > config.depth_min))
        throw std::invalid_argument("gen_phantom: bad signal depth interval");
    Rng rng(seed);
    Phantom phantom;
    phantom.scatterers.reserve(static_cast<std::size_t>(config.signal_count) +
                               static_cast<std::size_t>(config.speckle_count));
    for (int l = 0; l < config.signal_count; ++l) {
        Scatterer s;
        s.z = rng.uniform(config.depth_min, config.depth_max);
        s.amplitude = 1.0;
        s.kind = ScattererKind::kSignal;
        phantom.scatterers.push_back(s);
    }
    for (int i = 0; i < config.speckle_count; ++i) {
        Scatterer s;
        s.x = rng.uniform(-kSpeckleBoxX, kSpeckleBoxX);
        s.y = rng.uniform(-kSpeckleBoxY, kSpeckleBoxY);
        s.z = rng.uniform(kSpeckleBoxCenterZ - kSpeckleBoxZ, kSpeckleBoxCenterZ + kSpeckleBoxZ);
        s.amplitude = rng.normal();
        s.kind = ScattererKind::kSpeckle;
        phantom.scatterers.push_back(s);
    }
    return phantom;
}

std::pair<Phantom, Phantom> split_phantom(const Phantom& phantom) {
    std::pair<Phantom, Phantom> parts;
    for (const auto& s : phantom.scatterers) {
        if (s.kind == ScattererKind::kSignal)
            parts.first.scatterers.push_back(s);
        else
            parts.second.scatterers.push_back(s);
    }
    return parts;
}

double lateral_beam_weight(double x, double y, double z, SteeringAngle theta,
                           double width_6db) {
    if (!(width_6db > 0.0))
        throw std::invalid_argument("lateral_beam_weight: width must be positive");
    double ux = std::sin(theta.radians), uz = std::cos(theta.radians);
    double along = x * ux + z * uz;
    double norm_sq = x * x + y * y + z * z;
    double perp_sq = std::max(0.0, norm_sq - along * along);
    // amplitude hits 10^(-6/20) at half the width
    double half = width_6db / 2.0;
    double sigma_sq = half * half / (2.0 * 0.3 * std::log(10.0));
    return std::exp(-perp_sq / (2.0 * sigma_sq));
}

std::vector<SampledTrace> simulate_traces(const Phantom& phantom,
                                          const ArrayGeometry& geometry,
                                          const TwoWayPulse& pulse, SteeringAngle theta,
                                          double rate, double duration,
                                          double beam_width_6db, bool range_attenuation) {
    if (!(rate > 0.0) || !(duration > 0.0))
        throw std::invalid_argument("simulate_traces: rate and duration must be positive");
    const double c = geometry.speed;
    for (const auto& s : phantom.scatterers) {
        if (!(s.z > 0.0) || s.z > c * duration / 2.0)
            throw std::invalid_argument("simulate_traces: scatterer depth outside the frame");
    }

    const std::size_t n = SampledTrace::sample_count(rate, duration);
    std::vector<SampledTrace> traces;
    traces.reserve(static_cast<std::size_t>(geometry.count()));
    for (int m = 0; m < geometry.count(); ++m)
        traces.push_back(SampledTrace::zeros(rate, duration));

    const long long q = kTableOversample;
    const long long table_n = static_cast<long long>(
        std::ceil(pulse.delta * rate * static_cast<double>(q)));
    std::vector<double> table(static_cast<std::size_t>(table_n));
    for (long long j = 0; j < table_n; ++j)
        table[static_cast<std::size_t>(j)] =
            pulse.eval(static_cast<double>(j) / (static_cast<double>(q) * rate));

    for (const auto& s : phantom.scatterers) {
        double w = lateral_beam_weight(s.x, s.y, s.z, theta, beam_width_6db);
        if (std::abs(s.amplitude) * w < kBeamCutoff) continue;
        double r_tx = std::sqrt(s.x * s.x + s.y * s.y + s.z * s.z);
        for (int m = 0; m < geometry.count(); ++m) {
            double dx = s.x - geometry.offsets[static_cast<std::size_t>(m)];
            double r_rx = std::sqrt(dx * dx + s.y * s.y + s.z * s.z);
            double arrival = (r_tx + r_rx) / c;
            double amp = s.amplitude * w;
            if (range_attenuation)
                amp *= 2.0 * kAttenuationReferenceZ / (r_tx + r_rx);
            long long rbase = std::llround(arrival * rate * static_cast<double>(q));
            long long i = (rbase + q - 1) / q;
            if (i < 0) i = 0;
            long long j = i * q - rbase;
            auto& out = traces[static_cast<std::size_t>(m)].samples;
            for (; j < table_n && i < static_cast<long long>(n); ++i, j += q)
                out[static_cast<std::size_t>(i)] += amp * table[static_cast<std::size_t>(j)];
        }
    }
    return traces;
}

double calibrate_snr(const Phantom& signal, const Phantom& speckle,
                     const ArrayGeometry& geometry, const TwoWayPulse& pulse,
                     SteeringAngle theta, double target_db, double rate,
                     double duration, double beam_width_6db) {
    if (signal.scatterers.empty() || speckle.scatterers.empty())
        throw std::invalid_argument("calibrate_snr: both phantoms must be nonempty");
    auto phi = beamform_phantom(signal, geometry, pulse, theta, rate, duration,
                                beam_width_6db, false);
    auto noise = beamform_phantom(speckle, geometry, pulse, theta, rate, duration,
                                  beam_width_6db, false);
    double e_sig = trace_energy_sum(phi);
    double e_spk = trace_energy_sum(noise);
    if (e_spk == 0.0)
        throw std::invalid_argument("calibrate_snr: speckle energy is zero");
    if (e_sig == 0.0)
        throw std::invalid_argument("calibrate_snr: signal energy is zero");
    return std::pow(10.0, target_db / 20.0) * std::sqrt(e_spk / e_sig);
}

std::vector<cd> estimate_pulse_spectrum(const SampledTrace& calibration,
                                        double reflector_delay,
                                        const std::vector<long long>& kappa) {
    if (!(reflector_delay >= 0.0) || reflector_delay >= calibration.duration)
        throw std::invalid_argument("estimate_pulse_spectrum: delay outside the frame");
    auto subset = spectrum_subset(full_spectrum(calibration), kappa);
    const double t_ratio = reflector_delay / calibration.duration;
    std::vector<cd> h(subset.values.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        double phase = kTwoPi * static_cast<double>(kappa[j]) * t_ratio;
        h[j] = calibration.duration * subset.values[j] * std::polar(1.0, phase);
    }
    return h;
}

int count_delay_matches(const std::vector<double>& recovered,
                        const std::vector<double>& truth, double tolerance) {
    if (!(tolerance > 0.0))
        throw std::invalid_argument("count_delay_matches: tolerance must be positive");
    if (recovered.empty() || truth.empty()) return 0;
    std::vector<std::vector<int>> adj(recovered.size());
    for (std::size_t i = 0; i < recovered.size(); ++i)
        for (std::size_t j = 0; j < truth.size(); ++j)
            if (std::abs(recovered[i] - truth[j]) < tolerance)
                adj[i].push_back(static_cast<int>(j));
    return max_matching(adj, static_cast<int>(truth.size()));
}

const char* method_name(RecoveryMethod method) {
    switch (method) {
        case RecoveryMethod::kCadzowTls: return "cadzow_tls";
        case RecoveryMethod::kMatrixPencil: return "matrix_pencil";
        case RecoveryMethod::kOmpConsecutive: return "omp_consecutive";
        case RecoveryMethod::kOmpRandom: return "omp_random";
    }
    return "unknown";
}

double ProbabilityTable::at(RecoveryMethod method, std::size_t snr_index,
                            std::size_t eta_index) const {
    for (std::size_t m = 0; m < methods.size(); ++m)
        if (methods[m] == method) return p[m][snr_index][eta_index];
    throw std::invalid_argument("ProbabilityTable: method not in table");
}

ProbabilityTable monte_carlo_recovery(const SimConfig& config,
                                      const std::vector<RecoveryMethod>& methods,
                                      const std::vector<double>& snr_grid,
                                      const std::vector<double>& eta_grid) {
    if (config.trials < 1) throw std::invalid_argument("monte_carlo_recovery: trials must be >= 1");
    if (config.signal_count < 1)
        throw std::invalid_argument("monte_carlo_recovery: needs at least one signal reflector");
    if (methods.empty() || snr_grid.empty() || eta_grid.empty())
        throw std::invalid_argument("monte_carlo_recovery: empty sweep axis");
    for (double eta : eta_grid)
        if (!(eta > 1.0)) throw std::invalid_argument("monte_carlo_recovery: eta must exceed 1");

    const double t_frame = config.duration;
    const int l_count = config.signal_count;
    const auto theta = SteeringAngle(0.0);
    const bool wants_random =
        std::find(methods.begin(), methods.end(), RecoveryMethod::kOmpRandom) != methods.end();

    ProbabilityTable table;
    table.snr_db = snr_grid;
    table.eta = eta_grid;
    table.methods = methods;

    // pulse transform estimate from one reflector at the transmit focus
    Phantom focal;
    focal.scatterers.push_back(
        {0.0, 0.0, config.focus_depth, 1.0, ScattererKind::kSignal});
    table.calibration = beamform_phantom(focal, config.geometry, config.pulse, theta,
                                         config.rate, t_frame, config.beam_width_6db,
                                         config.range_attenuation);
    const double t_focal = 2.0 * config.focus_depth / config.geometry.speed;

    const long long k0 =
        static_cast<long long>(std::ceil(config.pulse.f0 * t_frame));
    struct EtaSetup {
        int K = 0;
        std::vector<long long> kappa_consec;
        std::vector<long long> kappa_rand;
        std::vector<cd> h_consec;
        std::vector<cd> h_rand;
    };
    std::vector<EtaSetup> setups(eta_grid.size());
    for (std::size_t e = 0; e < eta_grid.size(); ++e) {
        auto& setup = setups[e];
        setup.K = 2 * static_cast<int>(std::ceil(eta_grid[e] * l_count)) + 1;
        setup.kappa_consec = kappa_consecutive(k0, setup.K);
        setup.h_consec = estimate_pulse_spectrum(table.calibration, t_focal, setup.kappa_consec);
        if (wants_random) {
            // one draw per eta, from a stream separate from the trial streams
            uint64_t draw_seed = Rng::fork(config.seed, 1000000000ull + e).next_u64();
            setup.kappa_rand =
                kappa_random(config.pulse, t_frame, setup.K, 2.0, draw_seed);
            std::sort(setup.kappa_rand.begin(), setup.kappa_rand.end());
            setup.h_rand = estimate_pulse_spectrum(table.calibration, t_focal, setup.kappa_rand);
        }
    }

    const RecoveryGrid grid(config.omp_grid, t_frame);
    const std::size_t cells = methods.size() * snr_grid.size() * eta_grid.size();
    std::vector<std::vector<double>> per_trial(
        static_cast<std::size_t>(config.trials), std::vector<double>(cells, 0.0));

    parallel_for(static_cast<std::size_t>(config.trials), config.threads, [&](std::size_t trial) {
        uint64_t phantom_seed = Rng::fork(config.seed, trial).next_u64();
        auto phantom = gen_phantom(config, phantom_seed);
        auto parts = split_phantom(phantom);

        auto phi_signal = beamform_phantom(parts.first, config.geometry, config.pulse, theta,
                                           config.rate, t_frame, config.beam_width_6db,
                                           config.range_attenuation);
        double e_sig = trace_energy_sum(phi_signal);
        auto spectrum_signal = full_spectrum(phi_signal);

        double e_spk = 0.0;
        std::vector<cd> spectrum_speckle;
        if (!parts.second.scatterers.empty()) {
            auto phi_speckle = beamform_phantom(parts.second, config.geometry, config.pulse,
                                                theta, config.rate, t_frame,
                                                config.beam_width_6db, config.range_attenuation);
            e_spk = trace_energy_sum(phi_speckle);
            spectrum_speckle = full_spectrum(phi_speckle);
        }

        std::vector<double> truth;
        for (const auto& s : parts.first.scatterers)
            truth.push_back(2.0 * s.z / config.geometry.speed);

        auto measurements = [&](const std::vector<long long>& kappa,
                                double alpha) -> MeasurementVector {
            auto sig = spectrum_subset(spectrum_signal, kappa);
            for (auto& v : sig.values) v *= alpha;
            if (!spectrum_speckle.empty()) {
                auto spk = spectrum_subset(spectrum_speckle, kappa);
                for (std::size_t j = 0; j < sig.values.size(); ++j)
                    sig.values[j] += spk.values[j];
            }
            return sig;
        };

        auto score = [&](const std::vector<double>& delays) {
            return static_cast<double>(count_delay_matches(delays, truth, config.pulse.delta));
        };

        std::size_t cell = 0;
        for (std::size_t m = 0; m < methods.size(); ++m)
            for (std::size_t si = 0; si < snr_grid.size(); ++si)
                for (std::size_t e = 0; e < eta_grid.size(); ++e, ++cell) {
                    double alpha = (e_spk > 0.0 && e_sig > 0.0)
                                       ? std::pow(10.0, snr_grid[si] / 20.0) *
                                             std::sqrt(e_spk / e_sig)
                                       : 1.0;
                    const auto& setup = setups[e];
                    double matches = 0.0;
                    try {
                        switch (methods[m]) {
                            case RecoveryMethod::kMatrixPencil: {
                                auto c = measurements(setup.kappa_consec, alpha);
                                auto sys = SpectralSystem::normalize(c, setup.h_consec,
                                                                     t_frame, l_count);
                                matches = score(matrix_pencil(sys, t_frame));
                                break;
                            }
                            case RecoveryMethod::kCadzowTls: {
                                auto c = measurements(setup.kappa_consec, alpha);
                                auto sys = SpectralSystem::normalize(c, setup.h_consec,
                                                                     t_frame, l_count);
                                matches = score(cadzow_tls(sys, t_frame).delays);
                                break;
                            }
                            case RecoveryMethod::kOmpConsecutive: {
                                auto c = measurements(setup.kappa_consec, alpha);
                                auto r = omp_recover(c, setup.h_consec, t_frame, grid,
                                                     l_count, 0.0);
                                matches = score(grid_delays(r, grid));
                                break;
                            }
                            case RecoveryMethod::kOmpRandom: {
                                auto c = measurements(setup.kappa_rand, alpha);
                                auto r = omp_recover(c, setup.h_rand, t_frame, grid,
                                                     l_count, 0.0);
                                matches = score(grid_delays(r, grid));
                                break;
                            }
                        }
                    } catch (const std::exception&) {
                        matches = 0.0;  // failed trial scores zero, sweep continues
                    }
                    per_trial[trial][cell] = matches;
                }
    });

    table.p.assign(methods.size(),
                   std::vector<std::vector<double>>(
                       snr_grid.size(), std::vector<double>(eta_grid.size(), 0.0)));
    const double denom = static_cast<double>(config.trials) * static_cast<double>(l_count);
    std::size_t cell = 0;
    for (std::size_t m = 0; m < methods.size(); ++m)
        for (std::size_t si = 0; si < snr_grid.size(); ++si)
            for (std::size_t e = 0; e < eta_grid.size(); ++e, ++cell) {
                double total = 0.0;
                for (int trial = 0; trial < config.trials; ++trial)
                    total += per_trial[static_cast<std::size_t>(trial)][cell];
                table.p[m][si][e] = total / denom;
            }
    return table;
}

void write_probability_csv(const ProbabilityTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_probability_csv: cannot open " + path);
    out << "snr_db,eta,method,probability\n";
    char line[160];
    for (std::size_t si = 0; si < table.snr_db.size(); ++si)
        for (std::size_t e = 0; e < table.eta.size(); ++e)
            for (std::size_t m = 0; m < table.methods.size(); ++m) {
                std::snprintf(line, sizeof(line), "%.17g,%.17g,%s,%.17g\n",
                              table.snr_db[si], table.eta[e],
                              method_name(table.methods[m]), table.p[m][si][e]);
                out << line;
            }
    if (!out) throw std::runtime_error("write_probability_csv: write failed for " + path);
}

void write_probability_pgm(const ProbabilityTable& table, RecoveryMethod method,
                           const std::string& path) {
    std::size_t m = table.methods.size();
    for (std::size_t i = 0; i < table.methods.size(); ++i)
        if (table.methods[i] == method) m = i;
    if (m == table.methods.size())
        throw std::invalid_argument("write_probability_pgm: method not in table");
    std::vector<std::vector<uint8_t>> rows;
    for (std::size_t si = 0; si < table.snr_db.size(); ++si) {
        std::vector<uint8_t> row;
        for (std::size_t e = 0; e < table.eta.size(); ++e) {
            double v = std::clamp(table.p[m][si][e], 0.0, 1.0);
            row.push_back(static_cast<uint8_t>(std::lround(v * 255.0)));
        }
        rows.push_back(std::move(row));
    }
    write_pgm(rows, path);
}

} // namespace cbf
