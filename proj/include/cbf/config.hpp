#pragma once

#include "cbf/imaging.hpp"
#include "cbf/phantom.hpp"
#include "cbf/types.hpp"

#include <string>
#include <vector>

namespace cbf {

// One validation or syntax problem. line is 1-based; 0 means the error is not
// tied to a single line (missing section, cross-field checks). other_line is
// set for duplicate keys and names the earlier definition.
struct ConfigError {
    std::string path;
    int line = 0;
    int other_line = 0;
    std::string message;
};

std::string format_error(const ConfigError& error);

// Everything the experiment runner needs, with documented defaults. Sections:
// [pulse] sigma, f0, beta
// [geometry] preset (imaging|projection|linear), elements, pitch, speed
// [sim] focus_depth, speckle_count, signal_count, depth_min, depth_max,
//       target_snr_db, trials, eta, seed, rate, duration, beam_width,
//       range_attenuation, grid
// [xample] mode (exact|approx), rho_sq, search_limit,
//          kappa (consecutive|random), count, center, threshold_db
// [recover] method, order, iterations, residual_tol
// [image] scanlines, span_deg, nx, nz, dynamic_range_db,
//         interpolation (nearest|bilinear), mode (phase|real|modulus)
// [sweep] snr, eta, methods (comma lists)
// [fig3] points, elements
// [kernels] elements, indices
struct ExperimentConfig {
    TwoWayPulse pulse = TwoWayPulse::gaussian(250e-9, 3e6);

    std::string geometry_preset = "imaging";
    int geometry_elements = 64;
    double geometry_pitch = 0.49e-3;
    double geometry_speed = kSpeedOfSound;

    SimConfig sim;

    std::string xample_mode = "exact";
    double rho_sq = 0.95;
    int search_limit = 600;
    std::string kappa_policy = "consecutive";
    int kappa_count = 121;
    long long kappa_center = -1;  // negative: use ceil(f0 * duration)
    double band_threshold_db = 2.0;

    RecoveryMethod method = RecoveryMethod::kOmpConsecutive;
    int model_order = -1;  // negative: use sim.signal_count
    int cadzow_iterations = 20;
    double residual_tol = 0.0;

    int scanlines = 11;
    double span_deg = 15.0;
    int nx = 96;
    int nz = 96;
    double dynamic_range_db = 60.0;
    Interpolation interpolation = Interpolation::kBilinear;
    ReconstructionMode recon_mode = ReconstructionMode::kPhaseAware;

    std::vector<double> sweep_snr{5.0, 10.0, 15.0, 20.0, 25.0};
    std::vector<double> sweep_eta{1.5, 2.0, 3.0, 5.0};
    std::vector<RecoveryMethod> sweep_methods{
        RecoveryMethod::kOmpRandom, RecoveryMethod::kOmpConsecutive,
        RecoveryMethod::kMatrixPencil, RecoveryMethod::kCadzowTls};

    int fig3_points = 40;
    std::vector<int> fig3_elements{32, 62};

    std::vector<int> kernel_elements;       // empty: middle and edge elements
    std::vector<long long> kernel_indices;  // empty: use the auto center index

    ArrayGeometry make_geometry() const;
    long long kappa_center_or_default() const;
    int order_or_default() const;
};

struct ParseResult {
    ExperimentConfig config;
    std::vector<ConfigError> errors;

    bool ok() const { return errors.empty(); }
};

// Parses INI-style text ('#' or ';' comments, [section] headers, key = value).
// Collects every problem instead of stopping at the first: unknown sections
// and keys, duplicate keys (both lines named), malformed values, out-of-range
// values, and the required [pulse] section. The returned config is only
// meaningful when ok().
ParseResult parse_config(const std::string& text);

// Parses a RecoveryMethod name as used in CSV output; returns false on
// unknown names.
bool parse_method_name(const std::string& name, RecoveryMethod& method);

} // namespace cbf
