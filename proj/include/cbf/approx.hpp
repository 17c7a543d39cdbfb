#pragma once

#include "cbf/kernels.hpp"
#include "cbf/types.hpp"

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace cbf {

// Nyquist-rate real sample count of the reference scanner frame; reduction
// factors are quoted against it.
inline constexpr int kScannerNyquistSamples = 1662;

struct TruncationWindow {
    int n1 = 0;  // inclusive Fourier-offset window around the kernel spectrum
    int n2 = 0;
    double achieved_rho_sq = 0.0;

    int width() const { return n2 - n1 + 1; }
};

class TruncationError : public std::runtime_error {
public:
    TruncationError(const std::string& msg, double achieved_rho_sq_)
        : std::runtime_error(msg), achieved_rho_sq(achieved_rho_sq_) {}
    double achieved_rho_sq;
};

// All Fourier-series coefficients of kernel_q on the dense grid (FFT order).
std::vector<std::complex<double>> kernel_spectrum(const DistortedKernelSpec& spec, double rate);

// Single coefficient by direct quadrature; slow cross-check path.
std::complex<double> q_fourier(const DistortedKernelSpec& spec, long long n, double rate);

// Smallest greedily-grown window around the spectrum's energy centroid whose
// energy fraction reaches rho_sq_target. Growth picks the side with the larger
// next coefficient, ties extend n2; each side may move at most search_limit
// bins from the centroid.
TruncationWindow truncation_select(const std::vector<std::complex<double>>& spectrum,
                                   double rho_sq_target, int search_limit);
TruncationWindow truncation_select(const DistortedKernelSpec& spec, double rho_sq_target,
                                   int search_limit, double rate);

// Sparse K x K_m map from one element's Fourier coefficients to its
// contribution to every beamformed coefficient.
struct ApproxMatrix {
    int element = -1;
    std::vector<long long> kappa;    // row indices
    std::vector<long long> kappa_m;  // column indices, ascending
    std::vector<uint32_t> row;       // COO triplets, row-major order
    std::vector<uint32_t> col;
    std::vector<std::complex<double>> val;
    std::vector<TruncationWindow> windows;  // one per row
    double kernel_energy = 0.0;             // total spectrum energy, for error bounds

    std::vector<std::complex<double>> apply(const std::vector<std::complex<double>>& phi) const;
};

ApproxMatrix build_A(const ArrayGeometry& geometry, int element, SteeringAngle theta,
                     const std::vector<long long>& kappa, double rho_sq_target,
                     int search_limit, double T, double rate);

std::vector<ApproxMatrix> build_A_bank(const ArrayGeometry& geometry, SteeringAngle theta,
                                       const std::vector<long long>& kappa,
                                       double rho_sq_target, int search_limit, double T,
                                       double rate, int threads = 1);

// Per-element Fourier vectors at each matrix's kappa_m, from dense traces.
std::vector<MeasurementVector> element_fourier_vectors(const std::vector<SampledTrace>& traces,
                                                       const std::vector<ApproxMatrix>& bank);

// Apply every A_m and average with the beamforming weight convention.
MeasurementVector approx_xample(const std::vector<ApproxMatrix>& bank,
                                const std::vector<MeasurementVector>& phi,
                                const ApodizationWindow& apodization);

struct RateReport {
    int nyquist_real_samples = 0;
    int exact_complex_per_element = 0;
    double avg_complex_per_element = 0.0;
    int max_complex_per_element = 0;
    double exact_reduction = 0.0;
    double avg_reduction = 0.0;
    double worst_reduction = 0.0;
};

RateReport rate_report(const std::vector<ApproxMatrix>& bank,
                       int nyquist_real_samples = kScannerNyquistSamples);

// Binary cache: u32 K, u32 K_m, i64 kappa[K], i64 kappa_m[K_m],
// u64 nnz, then (u32 row, u32 col, f64 re, f64 im) triplets.
void write_matrix_cache(const ApproxMatrix& mat, const std::string& path);
ApproxMatrix read_matrix_cache(const std::string& path);

} // namespace cbf
