#include "cbf/approx.hpp"

#include "cbf/beamform.hpp"
#include "cbf/fft.hpp"
#include "cbf/parallel.hpp"
#include "cbf/signal.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace cbf {

namespace {

std::vector<std::complex<double>> sample_kernel(const DistortedKernelSpec& spec, double rate) {
    std::size_t n = SampledTrace::sample_count(rate, spec.T);
    std::vector<std::complex<double>> q(n);
    for (std::size_t i = 0; i < n; ++i)
        q[i] = kernel_q(spec, static_cast<double>(i) / rate);
    return q;
}

// signed bin lookup in FFT order
std::complex<double> bin_at(const std::vector<std::complex<double>>& spec, long long n) {
    long long s = static_cast<long long>(spec.size());
    long long k = n % s;
    if (k < 0) k += s;
    return spec[static_cast<std::size_t>(k)];
}

} // namespace

std::vector<std::complex<double>> kernel_spectrum(const DistortedKernelSpec& spec, double rate) {
    auto q = sample_kernel(spec, rate);
    auto bins = fft_forward(q);
    double inv = 1.0 / static_cast<double>(q.size());
    for (auto& b : bins) b *= inv;
    return bins;
}

std::complex<double> q_fourier(const DistortedKernelSpec& spec, long long n, double rate) {
    std::size_t s = SampledTrace::sample_count(rate, spec.T);
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = 0; i < s; ++i) {
        double t = static_cast<double>(i) / rate;
        auto q = kernel_q(spec, t);
        if (q == std::complex<double>(0.0, 0.0)) continue;
        acc += q * std::polar(1.0, -kTwoPi * static_cast<double>(n) *
                                       static_cast<double>(i) / static_cast<double>(s));
    }
    return acc / static_cast<double>(s);
}

TruncationWindow truncation_select(const std::vector<std::complex<double>>& spectrum,
                                   double rho_sq_target, int search_limit) {
    if (!(rho_sq_target > 0.0 && rho_sq_target < 1.0))
        throw std::invalid_argument("truncation_select: rho_sq_target must be in (0,1)");
    if (search_limit < 0)
        throw std::invalid_argument("truncation_select: search_limit must be nonnegative");
    const long long s = static_cast<long long>(spectrum.size());
    const long long half = s / 2;

    double total = 0.0;
    double first_moment = 0.0;
    for (long long n = -half; n < s - half; ++n) {
        double e = std::norm(bin_at(spectrum, n));
        total += e;
        first_moment += static_cast<double>(n) * e;
    }
    if (total <= 0.0) throw TruncationError("truncation_select: empty spectrum", 0.0);

    const long long centroid = std::llround(first_moment / total);
    long long n1 = centroid, n2 = centroid;
    const long long lo_lim = centroid - search_limit;
    const long long hi_lim = centroid + search_limit;
    double inside = std::norm(bin_at(spectrum, centroid));

    while (inside < rho_sq_target * total) {
        bool can_lo = n1 > lo_lim && (n2 - n1 + 1) < s;
        bool can_hi = n2 < hi_lim && (n2 - n1 + 1) < s;
        if (!can_lo && !can_hi)
            throw TruncationError("truncation_select: target unreachable within search_limit",
                                  inside / total);
        double below = can_lo ? std::norm(bin_at(spectrum, n1 - 1)) : -1.0;
        double above = can_hi ? std::norm(bin_at(spectrum, n2 + 1)) : -1.0;
        if (above >= below) {
            inside += above;
            ++n2;
        } else {
            inside += below;
            --n1;
        }
    }
    return TruncationWindow{static_cast<int>(n1), static_cast<int>(n2), inside / total};
}

TruncationWindow truncation_select(const DistortedKernelSpec& spec, double rho_sq_target,
                                   int search_limit, double rate) {
    return truncation_select(kernel_spectrum(spec, rate), rho_sq_target, search_limit);
}

std::vector<std::complex<double>> ApproxMatrix::apply(
    const std::vector<std::complex<double>>& phi) const {
    if (phi.size() != kappa_m.size())
        throw std::invalid_argument("ApproxMatrix::apply: vector length does not match kappa_m");
    std::vector<std::complex<double>> out(kappa.size(), {0.0, 0.0});
    for (std::size_t t = 0; t < val.size(); ++t)
        out[row[t]] += val[t] * phi[col[t]];
    return out;
}

ApproxMatrix build_A(const ArrayGeometry& geometry, int element, SteeringAngle theta,
                     const std::vector<long long>& kappa, double rho_sq_target,
                     int search_limit, double T, double rate) {
    if (element < 0 || element >= geometry.count())
        throw std::invalid_argument("build_A: element out of range");
    const double tb = support_bound(geometry, theta, T);
    const double gamma = geometry.gamma(element);

    ApproxMatrix mat;
    mat.element = element;
    mat.kappa = kappa;
    mat.windows.resize(kappa.size());

    // per-row spectra and windows, then the column union
    std::vector<std::vector<std::complex<double>>> spectra(kappa.size());
    std::vector<long long> cols;
    for (std::size_t j = 0; j < kappa.size(); ++j) {
        DistortedKernelSpec spec(kappa[j], gamma, theta.radians, T, tb);
        spectra[j] = kernel_spectrum(spec, rate);
        if (j == 0)
            for (const auto& b : spectra[j]) mat.kernel_energy += std::norm(b);
        mat.windows[j] = truncation_select(spectra[j], rho_sq_target, search_limit);
        for (int n = mat.windows[j].n1; n <= mat.windows[j].n2; ++n)
            cols.push_back(kappa[j] - n);
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
    mat.kappa_m = std::move(cols);

    std::unordered_map<long long, uint32_t> col_of;
    col_of.reserve(mat.kappa_m.size());
    for (std::size_t l = 0; l < mat.kappa_m.size(); ++l)
        col_of.emplace(mat.kappa_m[l], static_cast<uint32_t>(l));

    for (std::size_t j = 0; j < kappa.size(); ++j) {
        for (int n = mat.windows[j].n1; n <= mat.windows[j].n2; ++n) {
            mat.row.push_back(static_cast<uint32_t>(j));
            mat.col.push_back(col_of.at(kappa[j] - n));
            mat.val.push_back(bin_at(spectra[j], n));
        }
    }
    return mat;
}

std::vector<ApproxMatrix> build_A_bank(const ArrayGeometry& geometry, SteeringAngle theta,
                                       const std::vector<long long>& kappa,
                                       double rho_sq_target, int search_limit, double T,
                                       double rate, int threads) {
    std::vector<ApproxMatrix> bank(static_cast<std::size_t>(geometry.count()));
    parallel_for(bank.size(), threads, [&](std::size_t m) {
        bank[m] = build_A(geometry, static_cast<int>(m), theta, kappa, rho_sq_target,
                          search_limit, T, rate);
    });
    return bank;
}

std::vector<MeasurementVector> element_fourier_vectors(const std::vector<SampledTrace>& traces,
                                                       const std::vector<ApproxMatrix>& bank) {
    if (traces.size() != bank.size())
        throw std::invalid_argument("element_fourier_vectors: trace/bank size mismatch");
    std::vector<MeasurementVector> out;
    out.reserve(traces.size());
    for (std::size_t m = 0; m < traces.size(); ++m) {
        auto spec = full_spectrum(traces[m]);
        out.push_back(spectrum_subset(spec, bank[m].kappa_m));
    }
    return out;
}

MeasurementVector approx_xample(const std::vector<ApproxMatrix>& bank,
                                const std::vector<MeasurementVector>& phi,
                                const ApodizationWindow& apodization) {
    if (bank.empty()) throw std::invalid_argument("approx_xample: empty bank");
    if (phi.size() != bank.size() || apodization.weights.size() != bank.size())
        throw std::invalid_argument("approx_xample: size mismatch");
    const auto& kappa = bank.front().kappa;
    std::vector<std::vector<std::complex<double>>> per_element(bank.size());
    for (std::size_t m = 0; m < bank.size(); ++m) {
        if (bank[m].kappa != kappa)
            throw std::invalid_argument("approx_xample: banks disagree on kappa");
        if (phi[m].kappa != bank[m].kappa_m)
            throw std::invalid_argument("approx_xample: vector indices do not match kappa_m");
        per_element[m] = bank[m].apply(phi[m].values);
    }
    std::vector<std::complex<double>> avg(kappa.size());
    std::vector<std::complex<double>> column(bank.size());
    for (std::size_t j = 0; j < kappa.size(); ++j) {
        for (std::size_t m = 0; m < bank.size(); ++m) column[m] = per_element[m][j];
        avg[j] = xample_average(column, apodization.weights);
    }
    return MeasurementVector(kappa, std::move(avg));
}

RateReport rate_report(const std::vector<ApproxMatrix>& bank, int nyquist_real_samples) {
    if (bank.empty()) throw std::invalid_argument("rate_report: empty bank");
    RateReport r;
    r.nyquist_real_samples = nyquist_real_samples;
    r.exact_complex_per_element = static_cast<int>(bank.front().kappa.size());
    std::size_t sum = 0, worst = 0;
    for (const auto& m : bank) {
        sum += m.kappa_m.size();
        worst = std::max(worst, m.kappa_m.size());
    }
    r.avg_complex_per_element = static_cast<double>(sum) / static_cast<double>(bank.size());
    r.max_complex_per_element = static_cast<int>(worst);
    r.exact_reduction = static_cast<double>(nyquist_real_samples) /
                        (2.0 * r.exact_complex_per_element);
    r.avg_reduction = static_cast<double>(nyquist_real_samples) /
                      (2.0 * r.avg_complex_per_element);
    r.worst_reduction = static_cast<double>(nyquist_real_samples) /
                        (2.0 * static_cast<double>(worst));
    return r;
}

void write_matrix_cache(const ApproxMatrix& mat, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    auto put = [&](const void* p, std::size_t n) {
        f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    uint32_t k = static_cast<uint32_t>(mat.kappa.size());
    uint32_t km = static_cast<uint32_t>(mat.kappa_m.size());
    put(&k, 4);
    put(&km, 4);
    for (long long v : mat.kappa) put(&v, 8);
    for (long long v : mat.kappa_m) put(&v, 8);
    uint64_t nnz = mat.val.size();
    put(&nnz, 8);
    for (std::size_t t = 0; t < nnz; ++t) {
        put(&mat.row[t], 4);
        put(&mat.col[t], 4);
        double re = mat.val[t].real(), im = mat.val[t].imag();
        put(&re, 8);
        put(&im, 8);
    }
    if (!f) throw std::runtime_error(path + ": write failed");
}

ApproxMatrix read_matrix_cache(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path + ": cannot open");
    auto get = [&](void* p, std::size_t n) {
        f.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    };
    uint32_t k = 0, km = 0;
    get(&k, 4);
    get(&km, 4);
    ApproxMatrix mat;
    mat.kappa.resize(k);
    mat.kappa_m.resize(km);
    for (auto& v : mat.kappa) get(&v, 8);
    for (auto& v : mat.kappa_m) get(&v, 8);
    uint64_t nnz = 0;
    get(&nnz, 8);
    mat.row.resize(nnz);
    mat.col.resize(nnz);
    mat.val.resize(nnz);
    for (uint64_t t = 0; t < nnz; ++t) {
        get(&mat.row[t], 4);
        get(&mat.col[t], 4);
        double re = 0.0, im = 0.0;
        get(&re, 8);
        get(&im, 8);
        mat.val[t] = {re, im};
    }
    if (!f) throw std::runtime_error(path + ": truncated cache file");
    return mat;
}

} // namespace cbf
