#pragma once

#include "cbf/types.hpp"

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace cbf {

enum class ScattererKind { kSignal, kSpeckle };

struct Scatterer {
    double x = 0.0;  // meters, lateral
    double y = 0.0;  // meters, elevation
    double z = 0.0;  // meters, depth
    double amplitude = 0.0;
    ScattererKind kind = ScattererKind::kSpeckle;
};

struct Phantom {
    std::vector<Scatterer> scatterers;
};

// Speckle box half-extents and center depth, meters.
inline constexpr double kSpeckleBoxX = 25e-3;
inline constexpr double kSpeckleBoxY = 5e-3;
inline constexpr double kSpeckleBoxZ = 30e-3;
inline constexpr double kSpeckleBoxCenterZ = 60e-3;

struct SimConfig {
    ArrayGeometry geometry = imaging_probe();
    TwoWayPulse pulse = TwoWayPulse::gaussian(250e-9, 3e6);
    double focus_depth = 70e-3;       // calibration reflector depth
    int speckle_count = 10000;
    int signal_count = 6;
    double depth_min = 35e-3;         // signal reflector interval [min, max)
    double depth_max = 85e-3;
    double target_snr_db = 15.0;
    int trials = 50;
    double eta = 2.0;                 // oversampling, K = 2 ceil(eta L) + 1
    uint64_t seed = 0;

    // simulation resolution and solver sizing, defaults chosen for desk runs
    double rate = 2.5e7;
    double duration = 140e-6;
    double beam_width_6db = 2e-3;     // lateral -6 dB beam width
    bool range_attenuation = false;   // optional 1/r spreading, unit gain at 60 mm
    int omp_grid = 500;               // delay dictionary size n
    int threads = 1;
};

// Signal reflectors on the beam axis with unit amplitude, then speckle
// uniform in the box with standard normal amplitudes, all from one stream.
Phantom gen_phantom(const SimConfig& config, uint64_t seed);

// Partition by scatterer kind, order preserved.
std::pair<Phantom, Phantom> split_phantom(const Phantom& phantom);

// Gaussian lateral weight in the perpendicular offset from the steering axis,
// reaching -6 dB in amplitude at half the given width.
double lateral_beam_weight(double x, double y, double z, SteeringAngle theta,
                           double width_6db);

// One trace per element. A scatterer at p reaches element m at
// (|p| + |p - e_m|) / c and contributes its amplitude times the beam weight
// times the pulse shape, deposited from a subsample-resolution lookup table.
std::vector<SampledTrace> simulate_traces(const Phantom& phantom,
                                          const ArrayGeometry& geometry,
                                          const TwoWayPulse& pulse, SteeringAngle theta,
                                          double rate, double duration,
                                          double beam_width_6db = 2e-3,
                                          bool range_attenuation = false);

// Scale on signal amplitudes so that the beamformed energies satisfy
// 10 log10(||signal||^2 / ||speckle||^2) = target_db. Both phantoms are
// simulated and beamformed along theta with Hanning apodization.
double calibrate_snr(const Phantom& signal, const Phantom& speckle,
                     const ArrayGeometry& geometry, const TwoWayPulse& pulse,
                     SteeringAngle theta, double target_db, double rate,
                     double duration, double beam_width_6db = 2e-3);

// Pulse Fourier coefficients from a beamformed single-reflector trace: the
// known round-trip delay is divided back out of each coefficient.
std::vector<std::complex<double>> estimate_pulse_spectrum(const SampledTrace& calibration,
                                                          double reflector_delay,
                                                          const std::vector<long long>& kappa);

// Matched recovered/true delay pairs with error below tolerance, maximized
// over one-to-one assignments.
int count_delay_matches(const std::vector<double>& recovered,
                        const std::vector<double>& truth, double tolerance);

enum class RecoveryMethod { kCadzowTls, kMatrixPencil, kOmpConsecutive, kOmpRandom };

const char* method_name(RecoveryMethod method);

struct ProbabilityTable {
    std::vector<double> snr_db;
    std::vector<double> eta;
    std::vector<RecoveryMethod> methods;
    // p[method][snr][eta], each the average recovered fraction over trials
    std::vector<std::vector<std::vector<double>>> p;
    // beamformed single-reflector trace used to estimate the pulse transform
    SampledTrace calibration = SampledTrace::zeros(1.0, 1.0);

    double at(RecoveryMethod method, std::size_t snr_index, std::size_t eta_index) const;
};

// Seeded sweep over (snr, eta, method). Every trial draws a fresh phantom
// from a stream forked on the trial index, simulates and beamforms signal
// and speckle separately, and scales the signal spectrum per snr value; a
// recovered delay counts when within one pulse width of a distinct true one.
// Solver failures score zero for that trial, never abort.
ProbabilityTable monte_carlo_recovery(const SimConfig& config,
                                      const std::vector<RecoveryMethod>& methods,
                                      const std::vector<double>& snr_grid,
                                      const std::vector<double>& eta_grid);

// Rows "snr_db,eta,method,probability".
void write_probability_csv(const ProbabilityTable& table, const std::string& path);

// One method's grid as a PGM heatmap, snr rows by eta columns, white = 1.
void write_probability_pgm(const ProbabilityTable& table, RecoveryMethod method,
                           const std::string& path);

} // namespace cbf
