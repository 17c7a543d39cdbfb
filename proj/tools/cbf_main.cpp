#include "CLI11.hpp"
#include "json.hpp"

#include "cbf/approx.hpp"
#include "cbf/beamform.hpp"
#include "cbf/config.hpp"
#include "cbf/imaging.hpp"
#include "cbf/kernels.hpp"
#include "cbf/phantom.hpp"
#include "cbf/recovery.hpp"
#include "cbf/signal.hpp"
#include "cbf/trace_io.hpp"
#include "cbf/types.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace cbf;

namespace {

struct Artifacts {
    fs::path out;
    std::vector<std::string> names;

    fs::path path_for(const std::string& name) {
        fs::path p = out / name;
        fs::create_directories(p.parent_path());
        names.push_back(name);
        return p;
    }
};

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

double l2(const std::vector<std::complex<double>>& v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

std::vector<long long> make_kappa(const ExperimentConfig& c) {
    if (c.kappa_policy == "random") {
        auto kappa = kappa_random(c.pulse, c.sim.duration, c.kappa_count, c.band_threshold_db,
                                  c.sim.seed);
        std::sort(kappa.begin(), kappa.end());
        return kappa;
    }
    return kappa_consecutive(c.kappa_center_or_default(), c.kappa_count);
}

struct EchoSet {
    std::vector<double> delays;
    std::vector<std::complex<double>> amplitudes;
    double residual_rel = 0.0;
};

EchoSet run_recovery(const ExperimentConfig& c, const MeasurementVector& meas) {
    const double T = c.sim.duration;
    const int L = c.order_or_default();
    const double cnorm = l2(meas.values);
    EchoSet echoes;
    if (c.method == RecoveryMethod::kMatrixPencil || c.method == RecoveryMethod::kCadzowTls) {
        auto system = SpectralSystem::normalize(meas, c.pulse, T, L);
        echoes.delays = c.method == RecoveryMethod::kMatrixPencil
                            ? matrix_pencil(system, T)
                            : cadzow_tls(system, T, c.cadzow_iterations).delays;
        echoes.amplitudes = solve_amplitudes(meas, c.pulse, T, echoes.delays);
        auto h = pulse_band(c.pulse, T, meas.kappa);
        double err = 0.0;
        for (std::size_t j = 0; j < meas.kappa.size(); ++j) {
            std::complex<double> model = 0.0;
            for (std::size_t l = 0; l < echoes.delays.size(); ++l)
                model += echoes.amplitudes[l] *
                         std::polar(1.0, -kTwoPi * static_cast<double>(meas.kappa[j]) *
                                             echoes.delays[l] / T);
            model *= h[j] / T;
            err += std::norm(meas.values[j] - model);
        }
        echoes.residual_rel = cnorm > 0.0 ? std::sqrt(err) / cnorm : 0.0;
        return echoes;
    }
    RecoveryGrid grid(c.sim.omp_grid, T);
    auto result = omp_recover(meas, c.pulse, T, grid, L, c.residual_tol);
    for (long long q : result.support)
        echoes.delays.push_back(static_cast<double>(q) * grid.delta_s);
    echoes.amplitudes = result.amplitudes;
    echoes.residual_rel = cnorm > 0.0 ? result.residual_norm / cnorm : 0.0;
    return echoes;
}

void write_coeff_csv(const MeasurementVector& mv, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "k,re,im\n";
    char buf[96];
    for (std::size_t j = 0; j < mv.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g\n",
                      static_cast<long long>(mv.kappa[j]), mv.values[j].real(),
                      mv.values[j].imag());
        out << buf;
    }
}

void cmd_fig3(const ExperimentConfig& c, int threads, Artifacts& artifacts) {
    const double T = 210e-6;
    const double rate = 100e6;
    const TwoWayPulse pulse(200e-9, 3e6, 0.0, 2e-6, 1e-6);
    auto geometry = default_probe();
    auto kappa = kappa_consecutive(630, 121);
    std::vector<double> delays;
    for (int i = 1; i <= c.fig3_points; ++i)
        delays.push_back(T * static_cast<double>(i) / static_cast<double>(c.fig3_points + 1));
    auto curves = projection_error_experiment(geometry, pulse, delays, SteeringAngle(0.0), kappa,
                                              rate, T, c.fig3_elements, threads);
    std::ofstream out(artifacts.path_for("fig3.csv"));
    out << "delay_s";
    for (int e : curves.elements) out << ",snr_el" << e << "_db";
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < curves.delays.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", curves.delays[i]);
        out << buf;
        for (std::size_t e = 0; e < curves.elements.size(); ++e) {
            std::snprintf(buf, sizeof(buf), ",%.17g", curves.snr_db[e][i]);
            out << buf;
        }
        out << "\n";
    }
}

void cmd_sweep(const ExperimentConfig& c, Artifacts& artifacts) {
    auto table = monte_carlo_recovery(c.sim, c.sweep_methods, c.sweep_snr, c.sweep_eta);
    write_probability_csv(table, artifacts.path_for("sweep.csv").string());
    for (RecoveryMethod m : c.sweep_methods)
        write_probability_pgm(table, m,
                              artifacts.path_for(std::string("sweep_") + method_name(m) + ".pgm")
                                  .string());
    write_trace_csv(table.calibration, artifacts.path_for("calibration.csv").string());
}

void cmd_xample(const ExperimentConfig& c, int threads, Artifacts& artifacts) {
    auto phantom = gen_phantom(c.sim, c.sim.seed);
    SteeringAngle theta(0.0);
    auto traces = simulate_traces(phantom, c.sim.geometry, c.pulse, theta, c.sim.rate,
                                  c.sim.duration, c.sim.beam_width_6db, c.sim.range_attenuation);
    auto apod = ApodizationWindow::hanning(c.sim.geometry.count());
    auto kappa = make_kappa(c);
    MeasurementVector mv;
    if (c.xample_mode == "approx") {
        auto bank = build_A_bank(c.sim.geometry, theta, kappa, c.rho_sq, c.search_limit,
                                 c.sim.duration, c.sim.rate, threads);
        auto phi = element_fourier_vectors(traces, bank);
        mv = approx_xample(bank, phi, apod);
        auto report = rate_report(bank);
        std::ofstream out(artifacts.path_for("rate.csv"));
        char buf[64];
        out << "quantity,value\n";
        out << "nyquist_real_samples," << report.nyquist_real_samples << "\n";
        out << "exact_complex_per_element," << report.exact_complex_per_element << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", report.avg_complex_per_element);
        out << "avg_complex_per_element," << buf << "\n";
        out << "max_complex_per_element," << report.max_complex_per_element << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", report.exact_reduction);
        out << "exact_reduction," << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", report.avg_reduction);
        out << "avg_reduction," << buf << "\n";
        std::snprintf(buf, sizeof(buf), "%.17g", report.worst_reduction);
        out << "worst_reduction," << buf << "\n";
        for (const auto& mat : bank) {
            char name[48];
            std::snprintf(name, sizeof(name), "cache/A_%03d.bin", mat.element);
            write_matrix_cache(mat, artifacts.path_for(name).string());
        }
    } else {
        mv = xample_exact(traces, c.sim.geometry, theta, kappa, apod, threads);
    }
    write_coeff_csv(mv, artifacts.path_for("xample.csv"));
}

void cmd_recover(const ExperimentConfig& c, Artifacts& artifacts) {
    auto phantom = gen_phantom(c.sim, c.sim.seed);
    SteeringAngle theta(0.0);
    auto traces = simulate_traces(phantom, c.sim.geometry, c.pulse, theta, c.sim.rate,
                                  c.sim.duration, c.sim.beam_width_6db, c.sim.range_attenuation);
    auto apod = ApodizationWindow::hanning(c.sim.geometry.count());
    auto beamformed = beamform(traces, c.sim.geometry, theta, apod);
    auto meas = fourier_coeffs(beamformed, make_kappa(c));
    auto echoes = run_recovery(c, meas);
    write_recovery_csv(artifacts.path_for("recover.csv").string(), method_name(c.method),
                       echoes.delays, echoes.amplitudes, echoes.residual_rel);

    std::vector<double> depths;
    for (const auto& s : phantom.scatterers)
        if (s.kind == ScattererKind::kSignal) depths.push_back(s.z);
    std::sort(depths.begin(), depths.end());
    std::ofstream out(artifacts.path_for("truth.csv"));
    out << "delay_s,z_m\n";
    char buf[80];
    for (double z : depths) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", 2.0 * z / c.sim.geometry.speed, z);
        out << buf;
    }
}

void cmd_image(const ExperimentConfig& c, int threads, Artifacts& artifacts) {
    auto phantom = gen_phantom(c.sim, c.sim.seed);
    auto apod = ApodizationWindow::hanning(c.sim.geometry.count());
    auto kappa = make_kappa(c);
    const double span = c.span_deg * kPi / 180.0;
    std::vector<ScanLine> lines;
    for (int i = 0; i < c.scanlines; ++i) {
        double angle = c.scanlines == 1
                           ? 0.0
                           : -span + 2.0 * span * static_cast<double>(i) /
                                         static_cast<double>(c.scanlines - 1);
        SteeringAngle theta(angle);
        auto traces = simulate_traces(phantom, c.sim.geometry, c.pulse, theta, c.sim.rate,
                                      c.sim.duration, c.sim.beam_width_6db,
                                      c.sim.range_attenuation);
        auto mv = xample_exact(traces, c.sim.geometry, theta, kappa, apod, threads);
        auto echoes = run_recovery(c, mv);
        std::vector<FriEcho> fri;
        for (std::size_t l = 0; l < echoes.delays.size(); ++l)
            if (echoes.delays[l] < c.sim.duration)
                fri.emplace_back(echoes.delays[l], echoes.amplitudes[l]);
        auto trace = reconstruct_scanline(c.pulse, fri, c.sim.rate, c.sim.duration, c.recon_mode);
        lines.push_back(make_scanline(theta, std::move(trace)));
    }
    SectorGrid grid;
    grid.nx = c.nx;
    grid.nz = c.nz;
    grid.z_min = c.sim.depth_min;
    grid.z_max = c.sim.depth_max;
    grid.x_max = c.sim.depth_max * std::sin(span);
    grid.x_min = -grid.x_max;
    auto image = scan_convert(lines, grid, c.interpolation, c.dynamic_range_db,
                              c.sim.geometry.speed, threads);
    write_image_pgm(image, artifacts.path_for("image.pgm").string());
    write_image_csv(image, artifacts.path_for("image.csv").string());

    std::ofstream out(artifacts.path_for("scene.csv"));
    out << "x_m,z_m,amplitude,kind\n";
    char buf[120];
    for (const auto& s : phantom.scatterers) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%s\n", s.x, s.z, s.amplitude,
                      s.kind == ScattererKind::kSignal ? "signal" : "speckle");
        out << buf;
    }
}

void cmd_kernels(const ExperimentConfig& c, Artifacts& artifacts) {
    const double T = c.sim.duration;
    SteeringAngle theta(0.0);
    const double bound = support_bound(c.sim.geometry, theta, T);
    std::vector<int> elements = c.kernel_elements;
    if (elements.empty())
        elements = {c.sim.geometry.count() / 2, c.sim.geometry.count() - 1};
    std::vector<long long> indices = c.kernel_indices;
    if (indices.empty()) indices = {c.kappa_center_or_default()};
    for (int m : elements)
        for (long long k : indices) {
            DistortedKernelSpec spec(k, c.sim.geometry.gamma(m), 0.0, T, bound);
            char name[64];
            std::snprintf(name, sizeof(name), "kernel_el%d_k%lld.csv", m, k);
            export_kernel_csv(spec, c.sim.rate, artifacts.path_for(name).string());
        }
}

void write_manifest(const std::string& command, const std::string& config_text, uint64_t seed,
                    Artifacts& artifacts) {
    json manifest;
    manifest["command"] = command;
    manifest["config_hash"] = hex64(fnv1a64(config_text));
    manifest["seed"] = seed;
    std::sort(artifacts.names.begin(), artifacts.names.end());
    json list = json::array();
    for (const auto& name : artifacts.names) {
        fs::path p = artifacts.out / name;
        json entry;
        entry["name"] = name;
        entry["bytes"] = static_cast<uint64_t>(fs::file_size(p));
        entry["fnv1a64"] = hex64(fnv1a64_file(p.string()));
        list.push_back(entry);
    }
    manifest["artifacts"] = list;
    write_text_file((artifacts.out / "manifest.json").string(), manifest.dump(2) + "\n");
}

int fail_config(const std::vector<ConfigError>& errors) {
    json out;
    json list = json::array();
    for (const auto& e : errors) {
        json entry;
        entry["path"] = e.path;
        entry["line"] = e.line;
        entry["other_line"] = e.other_line;
        entry["message"] = e.message;
        entry["formatted"] = format_error(e);
        list.push_back(entry);
    }
    out["errors"] = list;
    std::fprintf(stderr, "%s\n", out.dump(2).c_str());
    return 1;
}

int fail_runtime(const std::string& command, const std::string& message) {
    json out;
    out["error"]["command"] = command;
    out["error"]["message"] = message;
    std::fprintf(stderr, "%s\n", out.dump(2).c_str());
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"compressed beamforming experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<uint64_t> seed_override;
    int threads = 1;

    const char* const commands[] = {"fig3", "sweep", "xample", "recover", "image", "kernels"};
    const char* const descriptions[] = {
        "projection-error curves per element",
        "Monte-Carlo recovery probability table",
        "compressed coefficient extraction (exact or approx)",
        "delay and amplitude recovery on one scene",
        "sector image from recovered scanlines",
        "sampling kernel waveform export"};
    for (std::size_t i = 0; i < 6; ++i) {
        auto* sub = app.add_subcommand(commands[i], descriptions[i]);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--seed", seed_override, "override [sim] seed");
        sub->add_option("--out", out_dir, "artifact directory");
        sub->add_option("--threads", threads, "worker thread count")
            ->envname("CBF_THREADS")
            ->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return fail_config({{"cli", 0, 0, e.what()}});
    }

    std::string command = app.get_subcommands().front()->get_name();

    std::string config_text;
    try {
        config_text = read_text_file(config_path);
    } catch (const std::exception& e) {
        std::string message = e.what();
        const std::string prefix = config_path + ": ";
        if (message.rfind(prefix, 0) == 0) message = message.substr(prefix.size());
        return fail_config({{config_path, 0, 0, message}});
    }

    auto parsed = parse_config(config_text);
    if (!parsed.ok()) return fail_config(parsed.errors);
    ExperimentConfig config = parsed.config;
    if (seed_override) config.sim.seed = *seed_override;
    config.sim.threads = threads;

    try {
        Artifacts artifacts;
        artifacts.out = out_dir;
        fs::create_directories(artifacts.out);
        if (command == "fig3")
            cmd_fig3(config, threads, artifacts);
        else if (command == "sweep")
            cmd_sweep(config, artifacts);
        else if (command == "xample")
            cmd_xample(config, threads, artifacts);
        else if (command == "recover")
            cmd_recover(config, artifacts);
        else if (command == "image")
            cmd_image(config, threads, artifacts);
        else
            cmd_kernels(config, artifacts);
        write_manifest(command, config_text, config.sim.seed, artifacts);
    } catch (const std::exception& e) {
        return fail_runtime(command, e.what());
    }
    return 0;
}
