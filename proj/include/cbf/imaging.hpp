#pragma once

#include "cbf/types.hpp"

#include <string>
#include <vector>

namespace cbf {

// How complex recovered amplitudes turn back into a real trace. Phase-aware
// keeps the full complex residue, the other two drop the phase and keep the
// real part or the modulus.
enum class ReconstructionMode { kPhaseAware, kRealPart, kModulus };

enum class Interpolation { kNearest, kBilinear };

struct ScanLine {
    SteeringAngle theta;
    SampledTrace trace;
    std::vector<double> envelope;  // same length, >= |trace| pointwise
};

SampledTrace reconstruct_scanline(const TwoWayPulse& pulse, const std::vector<FriEcho>& echoes,
                                  double rate, double duration, ReconstructionMode mode);

// Magnitude of the analytic signal, sqrt(s^2 + hilbert(s)^2), with the
// original samples as the real part so the result never dips below |s|.
std::vector<double> envelope(const SampledTrace& trace);

ScanLine make_scanline(SteeringAngle theta, SampledTrace trace);

// Cartesian pixel lattice, cell centers, row-major with z as the slow axis.
struct SectorGrid {
    int nx = 0;
    int nz = 0;
    double x_min = 0.0, x_max = 0.0;
    double z_min = 0.0, z_max = 0.0;

    double dx() const { return (x_max - x_min) / nx; }
    double dz() const { return (z_max - z_min) / nz; }
    double x_at(int i) const { return x_min + (i + 0.5) * dx(); }
    double z_at(int j) const { return z_min + (j + 0.5) * dz(); }
};

// Pixel values are absolute envelope dB clamped to [peak_db - dynamic_range,
// peak_db], where peak_db tracks the loudest envelope sample. Anchoring the
// window at the top keeps pixel values linear in the input: scaling every
// envelope by alpha shifts all of them by exactly 20 log10 alpha.
struct SectorImage {
    SectorGrid grid;
    std::vector<double> angles;
    std::vector<double> db;  // grid.nx * grid.nz, row-major in z
    double peak_db = 0.0;
    double dynamic_range_db = 0.0;

    double floor_db() const { return peak_db - dynamic_range_db; }
    double at(int ix, int iz) const {
        return db[static_cast<std::size_t>(iz) * static_cast<std::size_t>(grid.nx) +
                  static_cast<std::size_t>(ix)];
    }
};

// Polar resampling of log-compressed envelopes: pixel -> (r, phi), r -> round
// trip time 2r/c, nearest or bilinear lookup in (time, angle). Pixels outside
// the angular sector or the depth range take the floor value. A single
// scanline covers only pixels within half a pixel pitch of its ray.
SectorImage scan_convert(const std::vector<ScanLine>& lines, const SectorGrid& grid,
                         Interpolation interp, double dynamic_range_db = 60.0,
                         double speed = kSpeedOfSound, int threads = 1);

// 10 log10 of reference envelope energy over envelope-difference energy,
// pooled across scanlines. Identical inputs give +infinity.
double snr_vs_reference(const std::vector<ScanLine>& reconstructed,
                        const std::vector<ScanLine>& reference);

struct MatchResult {
    int hits = 0;
    double hit_rate = 0.0;
    double error_std_mm = 0.0;
};

// Score recovered delays against the L strongest local maxima of the
// reference envelope (strict-neighbor maxima after 0.1 mm boxcar smoothing).
// A delay may claim a maximum within window_mm of its depth; the one-to-one
// assignment maximizes claims, then minimizes total squared error. Positions
// compare through z = c t / 2.
MatchResult maxima_match(const std::vector<double>& recovered_delays,
                         const SampledTrace& reference, int L, double window_mm = 1.2,
                         double speed = kSpeedOfSound);

void write_image_pgm(const SectorImage& image, const std::string& path);
void write_image_csv(const SectorImage& image, const std::string& path);

} // namespace cbf
