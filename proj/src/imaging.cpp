#include "cbf/imaging.hpp"

#include "cbf/fft.hpp"
#include "cbf/parallel.hpp"
#include "cbf/signal.hpp"
#include "cbf/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace cbf {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double db20(double v) { return v > 0.0 ? 20.0 * std::log10(v) : kNegInf; }

// minimal-cost perfect assignment on a square matrix (Kuhn-Munkres with
// potentials, rows -> columns); returns column of each row
std::vector<int> assign_min_cost(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            int i0 = p[j0], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

std::vector<int> assign_exhaustive(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<int> best = perm;
    double best_total = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost[i][static_cast<std::size_t>(perm[i])];
        if (total < best_total) {
            best_total = total;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

} // namespace

SampledTrace reconstruct_scanline(const TwoWayPulse& pulse, const std::vector<FriEcho>& echoes,
                                  double rate, double duration, ReconstructionMode mode) {
    std::vector<FriEcho> shaped;
    shaped.reserve(echoes.size());
    for (const auto& e : echoes) {
        switch (mode) {
            case ReconstructionMode::kPhaseAware:
                shaped.emplace_back(e.delay, e.amplitude);
                break;
            case ReconstructionMode::kRealPart:
                shaped.emplace_back(e.delay, std::complex<double>(e.amplitude.real(), 0.0));
                break;
            case ReconstructionMode::kModulus:
                shaped.emplace_back(e.delay, std::complex<double>(std::abs(e.amplitude), 0.0));
                break;
        }
    }
    return synthesize_fri(pulse, shaped, rate, duration);
}

std::vector<double> envelope(const SampledTrace& trace) {
    const std::size_t n = trace.samples.size();
    if (n < 2) throw std::invalid_argument("envelope: need at least two samples");
    auto spec = fft_forward_real(trace.samples);
    for (std::size_t k = 1; 2 * k < n; ++k) spec[k] *= 2.0;
    for (std::size_t k = n / 2 + 1; k < n; ++k) spec[k] = {0.0, 0.0};
    auto analytic = fft_inverse(spec);
    std::vector<double> env(n);
    for (std::size_t i = 0; i < n; ++i)
        env[i] = std::hypot(trace.samples[i],
                            analytic[i].imag() / static_cast<double>(n));
    return env;
}

ScanLine make_scanline(SteeringAngle theta, SampledTrace trace) {
    ScanLine line{theta, std::move(trace), {}};
    line.envelope = envelope(line.trace);
    return line;
}

SectorImage scan_convert(const std::vector<ScanLine>& lines, const SectorGrid& grid,
                         Interpolation interp, double dynamic_range_db, double speed,
                         int threads) {
    if (lines.empty()) throw std::invalid_argument("scan_convert: no scanlines");
    if (grid.nx < 1 || grid.nz < 1 || !(grid.x_max > grid.x_min) || !(grid.z_max > grid.z_min))
        throw std::invalid_argument("scan_convert: degenerate grid");
    if (!(dynamic_range_db > 0.0))
        throw std::invalid_argument("scan_convert: dynamic range must be positive");
    for (std::size_t i = 1; i < lines.size(); ++i)
        if (!(lines[i].theta.radians > lines[i - 1].theta.radians))
            throw std::invalid_argument("scan_convert: angles must increase strictly");
    for (const auto& l : lines)
        if (l.envelope.size() != l.trace.samples.size())
            throw std::invalid_argument("scan_convert: envelope length mismatch");

    double peak = 0.0;
    for (const auto& l : lines)
        for (double e : l.envelope) peak = std::max(peak, e);

    SectorImage image;
    image.grid = grid;
    image.dynamic_range_db = dynamic_range_db;
    image.peak_db = peak > 0.0 ? db20(peak) : 0.0;
    const double floor = image.floor_db();
    image.db.assign(static_cast<std::size_t>(grid.nx) * static_cast<std::size_t>(grid.nz),
                    floor);
    image.angles.reserve(lines.size());
    for (const auto& l : lines) image.angles.push_back(l.theta.radians);

    // clamp per sample before interpolation so mixing never touches -inf
    std::vector<std::vector<double>> line_db(lines.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        line_db[i].resize(lines[i].envelope.size());
        for (std::size_t s = 0; s < lines[i].envelope.size(); ++s)
            line_db[i][s] = std::max(db20(lines[i].envelope[s]), floor);
    }

    const auto& angles = image.angles;
    auto sample_line = [&](std::size_t li, double t) -> double {
        const auto& trace = lines[li].trace;
        const auto& vals = line_db[li];
        double u = t * trace.rate;
        if (u < 0.0) return floor;
        if (interp == Interpolation::kNearest) {
            auto idx = static_cast<long long>(std::llround(u));
            if (idx < 0 || idx >= static_cast<long long>(vals.size())) return floor;
            return vals[static_cast<std::size_t>(idx)];
        }
        auto i0 = static_cast<long long>(std::floor(u));
        if (i0 < 0 || i0 + 1 >= static_cast<long long>(vals.size())) return floor;
        double frac = u - static_cast<double>(i0);
        return (1.0 - frac) * vals[static_cast<std::size_t>(i0)] +
               frac * vals[static_cast<std::size_t>(i0) + 1];
    };

    parallel_for(static_cast<std::size_t>(grid.nz), threads, [&](std::size_t jz) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            double x = grid.x_at(ix), z = grid.z_at(static_cast<int>(jz));
            double r = std::hypot(x, z);
            if (r <= 0.0) continue;
            double phi = std::atan2(x, z);
            double t = 2.0 * r / speed;
            double value = floor;
            if (lines.size() == 1) {
                // one ray covers pixels within half a pixel pitch of itself
                double half_angle = std::atan2(0.5 * grid.dx(), r);
                if (std::abs(phi - angles[0]) <= half_angle) value = sample_line(0, t);
            } else if (interp == Interpolation::kNearest) {
                double lo = angles.front() - (angles[1] - angles[0]) / 2.0;
                double hi = angles.back() + (angles[angles.size() - 1] -
                                             angles[angles.size() - 2]) / 2.0;
                if (phi >= lo && phi <= hi) {
                    auto it = std::lower_bound(angles.begin(), angles.end(), phi);
                    std::size_t li = static_cast<std::size_t>(it - angles.begin());
                    if (li == angles.size()) {
                        --li;
                    } else if (li > 0 &&
                               phi - angles[li - 1] < angles[li] - phi) {
                        --li;
                    }
                    value = sample_line(li, t);
                }
            } else {
                if (phi >= angles.front() && phi <= angles.back()) {
                    auto it = std::upper_bound(angles.begin(), angles.end(), phi);
                    std::size_t hi_i = std::min(static_cast<std::size_t>(it - angles.begin()),
                                                angles.size() - 1);
                    std::size_t lo_i = hi_i - (hi_i > 0 ? 1 : 0);
                    double w = angles[hi_i] > angles[lo_i]
                                   ? (phi - angles[lo_i]) / (angles[hi_i] - angles[lo_i])
                                   : 0.0;
                    value = (1.0 - w) * sample_line(lo_i, t) + w * sample_line(hi_i, t);
                }
            }
            image.db[jz * static_cast<std::size_t>(grid.nx) +
                     static_cast<std::size_t>(ix)] = value;
        }
    });
    return image;
}

double snr_vs_reference(const std::vector<ScanLine>& reconstructed,
                        const std::vector<ScanLine>& reference) {
    if (reconstructed.size() != reference.size())
        throw std::invalid_argument("snr_vs_reference: scanline count mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        const auto& rec = reconstructed[i];
        const auto& ref = reference[i];
        if (rec.theta.radians != ref.theta.radians ||
            rec.trace.rate != ref.trace.rate ||
            rec.envelope.size() != ref.envelope.size())
            throw std::invalid_argument("snr_vs_reference: scanline geometry mismatch");
        for (std::size_t s = 0; s < ref.envelope.size(); ++s) {
            num += ref.envelope[s] * ref.envelope[s];
            double d = rec.envelope[s] - ref.envelope[s];
            den += d * d;
        }
    }
    if (den == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(num / den);
}

MatchResult maxima_match(const std::vector<double>& recovered_delays,
                         const SampledTrace& reference, int L, double window_mm,
                         double speed) {
    if (!(window_mm > 0.0)) throw std::invalid_argument("maxima_match: window must be positive");
    if (L < 1) throw std::invalid_argument("maxima_match: L must be positive");

    auto env = envelope(reference);
    const std::size_t n = env.size();
    // 0.1 mm boxcar in depth before peak picking
    auto radius = static_cast<long long>(
        std::llround(0.1e-3 * 2.0 / speed * reference.rate));
    std::vector<double> smooth(n);
    for (std::size_t i = 0; i < n; ++i) {
        long long lo = std::max<long long>(0, static_cast<long long>(i) - radius);
        long long hi = std::min<long long>(static_cast<long long>(n) - 1,
                                           static_cast<long long>(i) + radius);
        double acc = 0.0;
        for (long long s = lo; s <= hi; ++s) acc += env[static_cast<std::size_t>(s)];
        smooth[i] = acc / static_cast<double>(hi - lo + 1);
    }

    std::vector<std::pair<double, std::size_t>> peaks;  // value, index
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (smooth[i] > smooth[i - 1] && smooth[i] > smooth[i + 1])
            peaks.emplace_back(smooth[i], i);
    std::sort(peaks.begin(), peaks.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    if (peaks.size() > static_cast<std::size_t>(L)) peaks.resize(static_cast<std::size_t>(L));

    std::vector<double> max_mm;
    for (const auto& [v, i] : peaks)
        max_mm.push_back(reference.time_at(i) * speed / 2.0 * 1e3);
    std::vector<double> echo_mm;
    for (double t : recovered_delays) echo_mm.push_back(t * speed / 2.0 * 1e3);

    MatchResult result;
    if (max_mm.empty() || echo_mm.empty()) return result;

    const int dim = static_cast<int>(std::max(max_mm.size(), echo_mm.size()));
    const double big = static_cast<double>(dim) * window_mm * window_mm + 1.0;
    std::vector<std::vector<double>> cost(static_cast<std::size_t>(dim),
                                          std::vector<double>(static_cast<std::size_t>(dim), big));
    for (std::size_t e = 0; e < echo_mm.size(); ++e)
        for (std::size_t m = 0; m < max_mm.size(); ++m) {
            double d = std::abs(echo_mm[e] - max_mm[m]);
            if (d <= window_mm) cost[e][m] = d * d;
        }

    auto match = dim <= 8 ? assign_exhaustive(cost) : assign_min_cost(cost);
    std::vector<double> errors;
    for (std::size_t e = 0; e < echo_mm.size(); ++e) {
        int m = match[e];
        if (m < 0 || m >= static_cast<int>(max_mm.size())) continue;
        if (cost[e][static_cast<std::size_t>(m)] >= big) continue;
        errors.push_back(echo_mm[e] - max_mm[static_cast<std::size_t>(m)]);
    }
    result.hits = static_cast<int>(errors.size());
    result.hit_rate = static_cast<double>(result.hits) / static_cast<double>(L);
    if (errors.size() > 1) {
        double mean = std::accumulate(errors.begin(), errors.end(), 0.0) /
                      static_cast<double>(errors.size());
        double var = 0.0;
        for (double e : errors) var += (e - mean) * (e - mean);
        result.error_std_mm = std::sqrt(var / static_cast<double>(errors.size()));
    }
    return result;
}

void write_image_pgm(const SectorImage& image, const std::string& path) {
    std::vector<std::vector<uint8_t>> rows(static_cast<std::size_t>(image.grid.nz));
    const double floor = image.floor_db();
    const double range = image.dynamic_range_db;
    for (int j = 0; j < image.grid.nz; ++j) {
        auto& row = rows[static_cast<std::size_t>(j)];
        row.resize(static_cast<std::size_t>(image.grid.nx));
        for (int i = 0; i < image.grid.nx; ++i) {
            double rel = (image.at(i, j) - floor) / range;
            rel = std::clamp(rel, 0.0, 1.0);
            row[static_cast<std::size_t>(i)] = static_cast<uint8_t>(std::lround(255.0 * rel));
        }
    }
    write_pgm(rows, path);
}

void write_image_csv(const SectorImage& image, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "x_m,z_m,db\n";
    char line[128];
    for (int j = 0; j < image.grid.nz; ++j)
        for (int i = 0; i < image.grid.nx; ++i) {
            std::snprintf(line, sizeof line, "%.9g,%.9g,%.9g\n", image.grid.x_at(i),
                          image.grid.z_at(j), image.at(i, j));
            f << line;
        }
    if (!f) throw std::runtime_error(path + ": write failed");
}

} // namespace cbf
