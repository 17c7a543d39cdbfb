#include "doctest.h"

#include "cbf/imaging.hpp"
#include "cbf/recovery.hpp"
#include "cbf/rng.hpp"
#include "cbf/signal.hpp"
#include "cbf/trace_io.hpp"
#include "cbf/types.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <limits>
#include <vector>

using namespace cbf;
using cd = std::complex<double>;

namespace {

const double kT = 210e-6;
const double kRate = 2e7;

std::vector<ScanLine> single_line(double theta, const SampledTrace& trace) {
    std::vector<ScanLine> lines;
    lines.push_back(make_scanline(SteeringAngle(theta), trace));
    return lines;
}

} // namespace

TEST_CASE("reconstruction modes reshape the amplitudes") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    std::vector<FriEcho> real_pos{{50e-6, cd(1.0, 0.0)}, {90e-6, cd(0.4, 0.0)}};
    auto a = reconstruct_scanline(pulse, real_pos, kRate, kT, ReconstructionMode::kPhaseAware);
    auto b = reconstruct_scanline(pulse, real_pos, kRate, kT, ReconstructionMode::kRealPart);
    auto c = reconstruct_scanline(pulse, real_pos, kRate, kT, ReconstructionMode::kModulus);
    CHECK(a.samples == b.samples);
    CHECK(a.samples == c.samples);

    std::vector<FriEcho> real_neg{{50e-6, cd(-1.0, 0.0)}};
    auto an = reconstruct_scanline(pulse, real_neg, kRate, kT, ReconstructionMode::kPhaseAware);
    auto bn = reconstruct_scanline(pulse, real_neg, kRate, kT, ReconstructionMode::kRealPart);
    auto cn = reconstruct_scanline(pulse, real_neg, kRate, kT, ReconstructionMode::kModulus);
    CHECK(an.samples == bn.samples);
    double flip = 0.0;
    for (std::size_t i = 0; i < an.samples.size(); ++i)
        flip = std::max(flip, std::abs(an.samples[i] + cn.samples[i]));
    CHECK(flip < 1e-12);
}

TEST_CASE("envelope dominates the trace and follows narrow bands") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto trace = synthesize_fri(pulse, {{40e-6, cd(1.0, 0.3)}, {100e-6, cd(-0.6, 0.2)}},
                                kRate, kT);
    auto env = envelope(trace);
    REQUIRE(env.size() == trace.samples.size());
    for (std::size_t i = 0; i < env.size(); ++i)
        CHECK(env[i] >= std::abs(trace.samples[i]));

    SUBCASE("unit tone") {
        double f = 3e6, rate = 1e8, dur = 20e-6;
        auto tone = SampledTrace::zeros(rate, dur);
        for (std::size_t i = 0; i < tone.samples.size(); ++i)
            tone.samples[i] = std::cos(kTwoPi * f * tone.time_at(i));
        auto e = envelope(tone);
        std::size_t guard = static_cast<std::size_t>(5.0 / f * rate);
        for (std::size_t i = guard; i + guard < e.size(); ++i)
            CHECK(e[i] == doctest::Approx(1.0).epsilon(0.01));
    }

    SUBCASE("gaussian burst") {
        double sigma = 700e-9, f0 = 3e6, rate = 1e8, dur = 30e-6, tc = 15e-6;
        auto burst = SampledTrace::zeros(rate, dur);
        std::vector<double> g(burst.samples.size());
        for (std::size_t i = 0; i < burst.samples.size(); ++i) {
            double t = burst.time_at(i) - tc;
            g[i] = std::exp(-t * t / (2.0 * sigma * sigma));
            burst.samples[i] = g[i] * std::cos(kTwoPi * f0 * t);
        }
        auto e = envelope(burst);
        for (std::size_t i = 0; i < e.size(); ++i)
            CHECK(std::abs(e[i] - g[i]) < 0.02);
    }

    CHECK_THROWS_AS(envelope(SampledTrace::zeros(kRate, 0.0)), std::invalid_argument);
}

TEST_CASE("recovery round trip keeps the scanline above 40 dB") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    std::vector<FriEcho> truth{{50e-6, 0.9 * std::polar(1.0, 0.3)},
                               {120e-6, 1.1 * std::polar(1.0, -1.1)}};
    auto reference = synthesize_fri(pulse, truth, kRate, kT);
    auto kappa = kappa_consecutive(630, 100);
    auto c = fourier_coeffs(reference, kappa);

    auto delays = matrix_pencil(SpectralSystem::normalize(c, pulse, kT, 2), kT);
    auto amps = solve_amplitudes(c, pulse, kT, delays);
    std::vector<FriEcho> recovered;
    for (std::size_t l = 0; l < delays.size(); ++l)
        recovered.emplace_back(delays[l], amps[l]);
    auto rec = reconstruct_scanline(pulse, recovered, kRate, kT,
                                    ReconstructionMode::kPhaseAware);

    double snr = snr_vs_reference(single_line(0.0, rec), single_line(0.0, reference));
    CHECK(snr > 40.0);
}

TEST_CASE("scanline comparison follows the pooled envelope formula") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto ref_trace = synthesize_fri(pulse, {{60e-6, cd(1.0, 0.2)}}, kRate, kT);
    auto ref = single_line(0.1, ref_trace);

    CHECK(snr_vs_reference(ref, ref) == std::numeric_limits<double>::infinity());

    auto zero = single_line(0.1, SampledTrace::zeros(kRate, kT));
    CHECK(snr_vs_reference(zero, ref) == 0.0);

    auto rng = Rng(424242);
    auto noisy_trace = ref_trace;
    for (auto& s : noisy_trace.samples) s += 0.01 * rng.normal();
    auto noisy = single_line(0.1, noisy_trace);
    double got = snr_vs_reference(noisy, ref);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref[0].envelope.size(); ++i) {
        num += ref[0].envelope[i] * ref[0].envelope[i];
        double d = noisy[0].envelope[i] - ref[0].envelope[i];
        den += d * d;
    }
    CHECK(got == doctest::Approx(10.0 * std::log10(num / den)).epsilon(1e-12));

    auto wrong_angle = single_line(0.2, ref_trace);
    CHECK_THROWS_AS(snr_vs_reference(wrong_angle, ref), std::invalid_argument);
    std::vector<ScanLine> none;
    CHECK_THROWS_AS(snr_vs_reference(none, ref), std::invalid_argument);
}

TEST_CASE("scan conversion places rays and peaks where geometry says") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);

    SUBCASE("single broadside ray lights one column") {
        auto trace = synthesize_fri(pulse, {{60e-6, cd(1.0, 0.0)}}, kRate, kT);
        SectorGrid grid{21, 60, -10e-3, 10e-3, 1e-3, 160e-3};
        auto image = scan_convert(single_line(0.0, trace), grid,
                                  Interpolation::kNearest);
        bool any_lit = false;
        for (int j = 0; j < grid.nz; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (image.at(i, j) > image.floor_db() + 1e-9) {
                    any_lit = true;
                    CHECK(std::abs(grid.x_at(i)) <= grid.dx());
                }
        CHECK(any_lit);
    }

    SUBCASE("point echo maps to its depth") {
        const double z0 = 60e-3;
        double delay = 2.0 * z0 / kSpeedOfSound - pulse.envelope_center;
        auto hit = synthesize_fri(pulse, {{delay, cd(1.0, 0.0)}}, kRate, kT);
        std::vector<ScanLine> lines;
        lines.push_back(make_scanline(SteeringAngle(-0.1), SampledTrace::zeros(kRate, kT)));
        lines.push_back(make_scanline(SteeringAngle(0.0), hit));
        lines.push_back(make_scanline(SteeringAngle(0.1), SampledTrace::zeros(kRate, kT)));
        SectorGrid grid{41, 81, -20e-3, 20e-3, 40e-3, 80e-3};
        auto image = scan_convert(lines, grid, Interpolation::kNearest);
        int best_i = 0, best_j = 0;
        for (int j = 0; j < grid.nz; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (image.at(i, j) > image.at(best_i, best_j)) {
                    best_i = i;
                    best_j = j;
                }
        CHECK(std::abs(grid.x_at(best_i)) <= grid.dx());
        CHECK(std::abs(grid.z_at(best_j) - z0) <= grid.dz());
    }

    SUBCASE("sector display configuration") {
        const int n_lines = 120;
        const double half_sector = kPi / 6.0;  // 60 degrees total
        std::vector<ScanLine> lines;
        for (int i = 0; i < n_lines; ++i) {
            double th = -half_sector + (half_sector * 2.0) * i / (n_lines - 1);
            auto trace = synthesize_fri(
                pulse, {{(60e-6 + i * 0.5e-6), cd(1.0, 0.0)}}, kRate, kT);
            lines.push_back(make_scanline(SteeringAngle(th), std::move(trace)));
        }
        SectorGrid grid{96, 96, -80e-3, 80e-3, 1e-3, 160e-3};
        auto image = scan_convert(lines, grid, Interpolation::kBilinear, 60.0,
                                  kSpeedOfSound, 1);
        int lit = 0;
        double max_db = -1e300;
        for (int j = 0; j < grid.nz; ++j)
            for (int i = 0; i < grid.nx; ++i) {
                max_db = std::max(max_db, image.at(i, j));
                if (image.at(i, j) > image.floor_db() + 1e-9) {
                    ++lit;
                    double phi = std::atan2(grid.x_at(i), grid.z_at(j));
                    CHECK(std::abs(phi) <= half_sector + 1e-12);
                }
            }
        CHECK(lit > 0);
        CHECK(max_db <= image.peak_db + 1e-12);
    }

    SUBCASE("input guards") {
        SectorGrid grid{8, 8, -10e-3, 10e-3, 1e-3, 100e-3};
        CHECK_THROWS_AS(scan_convert({}, grid, Interpolation::kNearest),
                        std::invalid_argument);
        auto t = SampledTrace::zeros(kRate, kT);
        std::vector<ScanLine> bad;
        bad.push_back(make_scanline(SteeringAngle(0.1), t));
        bad.push_back(make_scanline(SteeringAngle(0.1), t));
        CHECK_THROWS_AS(scan_convert(bad, grid, Interpolation::kNearest),
                        std::invalid_argument);
    }
}

TEST_CASE("scaling every trace shifts all pixels by the same decibels") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    const double alpha = 0.5;
    std::vector<ScanLine> lines, scaled;
    for (int i = 0; i < 3; ++i) {
        double th = -0.1 + 0.1 * i;
        auto trace = synthesize_fri(pulse, {{(50e-6 + 20e-6 * i), cd(1.0, 0.4)}}, kRate, kT);
        auto trace_scaled = trace;
        for (auto& s : trace_scaled.samples) s *= alpha;
        lines.push_back(make_scanline(SteeringAngle(th), std::move(trace)));
        scaled.push_back(make_scanline(SteeringAngle(th), std::move(trace_scaled)));
    }
    SectorGrid grid{40, 50, -30e-3, 30e-3, 1e-3, 160e-3};
    auto a = scan_convert(lines, grid, Interpolation::kBilinear);
    auto b = scan_convert(scaled, grid, Interpolation::kBilinear);
    const double shift = 20.0 * std::log10(alpha);
    CHECK(b.peak_db == doctest::Approx(a.peak_db + shift).epsilon(1e-12));
    for (std::size_t p = 0; p < a.db.size(); ++p)
        CHECK(b.db[p] - a.db[p] == doctest::Approx(shift).epsilon(1e-9));
}

TEST_CASE("phase-aware reconstruction ranks first on noisy scenes") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    std::vector<FriEcho> truth{{50e-6, 1.0 * std::polar(1.0, 0.3)},
                               {90e-6, 0.8 * std::polar(1.0, -1.1)},
                               {130e-6, 0.6 * std::polar(1.0, 2.0)}};
    auto reference = single_line(0.0, synthesize_fri(pulse, truth, kRate, kT));
    auto kappa = kappa_consecutive(610, 41);
    auto clean = fourier_coeffs(reference[0].trace, kappa);
    double c_norm = 0.0;
    for (const auto& v : clean.values) c_norm += std::norm(v);
    const double sigma = 0.1 * std::sqrt(c_norm / static_cast<double>(kappa.size()));

    double snr_sum[3] = {0.0, 0.0, 0.0};
    for (uint64_t seed = 0; seed < 5; ++seed) {
        auto rng = Rng::fork(99, seed);
        auto values = clean.values;
        for (auto& v : values)
            v += sigma / std::sqrt(2.0) * cd(rng.normal(), rng.normal());
        MeasurementVector noisy(kappa, values);
        auto delays = matrix_pencil(SpectralSystem::normalize(noisy, pulse, kT, 3), kT);
        auto amps = solve_amplitudes(noisy, pulse, kT, delays);
        std::vector<FriEcho> recovered;
        for (std::size_t l = 0; l < delays.size(); ++l)
            recovered.emplace_back(delays[l], amps[l]);
        const ReconstructionMode modes[3] = {ReconstructionMode::kPhaseAware,
                                             ReconstructionMode::kModulus,
                                             ReconstructionMode::kRealPart};
        for (int m = 0; m < 3; ++m) {
            auto rec = reconstruct_scanline(pulse, recovered, kRate, kT, modes[m]);
            snr_sum[m] += snr_vs_reference(single_line(0.0, rec), reference);
        }
    }
    CHECK(snr_sum[0] >= snr_sum[1]);
    CHECK(snr_sum[1] >= snr_sum[2]);
}

TEST_CASE("maxima matching scores recovered depths") {
    const double rate = 2e7;
    const double mm = 1e-3;
    auto delay_at_z = [&](double z) { return 2.0 * z / kSpeedOfSound; };

    SUBCASE("exact recovery, isolated pulses") {
        auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
        std::vector<double> onsets{40e-6, 90e-6, 140e-6};
        std::vector<FriEcho> echoes;
        for (double d : onsets) echoes.emplace_back(d, cd(1.0, 0.0));
        auto trace = synthesize_fri(pulse, echoes, rate, kT);
        std::vector<double> centers;
        for (double d : onsets) centers.push_back(d + pulse.envelope_center);
        auto r = maxima_match(centers, trace, 3);
        CHECK(r.hits == 3);
        CHECK(r.hit_rate == doctest::Approx(1.0));
        CHECK(r.error_std_mm < 1e-6);

        auto none = maxima_match({}, trace, 3);
        CHECK(none.hits == 0);
        CHECK(none.hit_rate == 0.0);
    }

    SUBCASE("hit rate grows with the window") {
        auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
        std::vector<double> onsets{40e-6, 90e-6, 140e-6};
        std::vector<FriEcho> echoes;
        double amp = 1.0;
        for (double d : onsets) {
            echoes.emplace_back(d, cd(amp, 0.0));
            amp -= 0.1;
        }
        auto trace = synthesize_fri(pulse, echoes, rate, kT);
        std::vector<double> offsets{0.5 * mm, 1.5 * mm, 3.0 * mm};
        std::vector<double> rec;
        for (std::size_t l = 0; l < onsets.size(); ++l)
            rec.push_back(onsets[l] + pulse.envelope_center +
                          2.0 * offsets[l] / kSpeedOfSound);
        double prev = -1.0;
        for (double w : {0.6, 1.2, 2.0, 3.5}) {
            auto r = maxima_match(rec, trace, 3, w);
            CHECK(r.hit_rate >= prev);
            prev = r.hit_rate;
        }
        CHECK(maxima_match(rec, trace, 3, 0.6).hits == 1);
        CHECK(maxima_match(rec, trace, 3, 2.0).hits == 2);
        CHECK(maxima_match(rec, trace, 3, 3.5).hits == 3);
    }

    // the two-pulse cases below use a short pulse so nearby envelope maxima
    // stay separate, and place envelope centers exactly on grid samples
    SUBCASE("competing claims resolve to the smallest total error") {
        const double fast = 1e8;
        auto pulse = TwoWayPulse::gaussian(200e-9, 8e6);
        auto z_fast = [&](std::size_t i) {
            return static_cast<double>(i) / fast * kSpeedOfSound / 2.0;
        };
        std::size_t i0 = 10000, i1 = 10125;
        auto trace = synthesize_fri(
            pulse,
            {{static_cast<double>(i0) / fast - pulse.envelope_center, cd(1.0, 0.0)},
             {static_cast<double>(i1) / fast - pulse.envelope_center, cd(0.9, 0.0)}},
            fast, kT);
        double z0 = z_fast(i0), z1 = z_fast(i1);
        std::vector<double> rec{delay_at_z(z0 + 0.1 * mm), delay_at_z(z0 - 0.2 * mm)};
        auto r = maxima_match(rec, trace, 2);
        CHECK(r.hits == 2);
        // a nearest-first pairing would bind the first echo to the shallow
        // maximum and leave the second with a much worse partner; the optimal
        // assignment swaps them
        double e0 = (z0 + 0.1 * mm - z1) / mm;
        double e1 = -0.2;
        double mean = (e0 + e1) / 2.0;
        double expect_std = std::sqrt(((e0 - mean) * (e0 - mean) +
                                       (e1 - mean) * (e1 - mean)) / 2.0);
        CHECK(r.error_std_mm == doctest::Approx(expect_std).epsilon(1e-3));
    }

    SUBCASE("large instances route through optimal assignment") {
        const double fast = 1e8;
        auto pulse = TwoWayPulse::gaussian(200e-9, 8e6);
        auto z_fast = [&](std::size_t i) {
            return static_cast<double>(i) / fast * kSpeedOfSound / 2.0;
        };
        std::vector<FriEcho> echoes;
        std::vector<double> rec;
        for (int l = 0; l < 9; ++l) {
            std::size_t idx = 2000 + 2200 * static_cast<std::size_t>(l);
            echoes.emplace_back(static_cast<double>(idx) / fast - pulse.envelope_center,
                                cd(1.0 - 0.05 * l, 0.0));
            rec.push_back(delay_at_z(z_fast(idx) + 0.3 * mm));
        }
        auto trace = synthesize_fri(pulse, echoes, fast, kT);
        auto r = maxima_match(rec, trace, 9);
        CHECK(r.hits == 9);
        CHECK(r.error_std_mm < 1e-9);
    }

    SUBCASE("guards") {
        auto spikes = SampledTrace::zeros(rate, kT);
        spikes.samples[100] = 1.0;
        CHECK_THROWS_AS(maxima_match({}, spikes, 0), std::invalid_argument);
        CHECK_THROWS_AS(maxima_match({}, spikes, 3, 0.0), std::invalid_argument);
    }
}

TEST_CASE("images serialize as PGM and CSV") {
    auto pulse = TwoWayPulse::gaussian(630e-9, 3e6);
    auto trace = synthesize_fri(pulse, {{60e-6, cd(1.0, 0.0)}}, kRate, kT);
    SectorGrid grid{16, 12, -10e-3, 10e-3, 1e-3, 160e-3};
    auto image = scan_convert(single_line(0.0, trace), grid, Interpolation::kNearest);

    const std::string pgm = "image_test.pgm";
    const std::string csv = "image_test.csv";
    write_image_pgm(image, pgm);
    write_image_csv(image, csv);

    std::ifstream f(pgm, std::ios::binary);
    std::string magic, dims;
    std::getline(f, magic);
    std::getline(f, dims);
    CHECK(magic == "P5");
    CHECK(dims.find("16") != std::string::npos);
    CHECK(dims.find("12") != std::string::npos);

    auto text = read_text_file(csv);
    CHECK(text.find("x_m,z_m,db") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') == 16 * 12 + 1);
    std::remove(pgm.c_str());
    std::remove(csv.c_str());
}
