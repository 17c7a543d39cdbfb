#pragma once

#include "cbf/types.hpp"

#include <complex>
#include <string>
#include <vector>

namespace cbf {

// Measurements divided by the pulse transform, y = T H^-1 c, so that y is a
// plain sum of complex exponentials in the index. The exponential-fitting
// solvers (pencil, annihilating filter) additionally need kappa consecutive.
struct SpectralSystem {
    std::vector<std::complex<double>> y;
    std::vector<long long> kappa;
    int L = 0;

    static SpectralSystem normalize(const MeasurementVector& c, const TwoWayPulse& pulse,
                                    double T, int L);
    // same, dividing by caller-supplied pulse coefficients aligned with
    // c.kappa (for a pulse transform estimated from data)
    static SpectralSystem normalize(const MeasurementVector& c,
                                    const std::vector<std::complex<double>>& h, double T,
                                    int L);
};

// Uniform delay grid over one frame, step delta_s = T / n.
struct RecoveryGrid {
    int n = 0;
    double delta_s = 0.0;

    RecoveryGrid(int n, double T);
};

// Hankel pencil delay estimation, pencil parameter floor(K/2). Requires
// K >= 2L and consecutive kappa. Delays in [0, T) sorted ascending. Throws
// when fewer than L singular values survive the 1e-8 relative cutoff, the
// message reporting the surviving count.
std::vector<double> matrix_pencil(const SpectralSystem& system, double T);

struct CadzowResult {
    std::vector<double> delays;
    // set when an iteration moved the iterate farther from Hankel structure
    bool distance_increased = false;
};

// Rank-L truncation alternated with anti-diagonal re-averaging for the given
// number of rounds, then total-least-squares annihilating-filter rooting.
CadzowResult cadzow_tls(const SpectralSystem& system, double T, int iterations = 20);

// Least squares fit of c = (1/T) H V b at the given delays. The argument of
// each returned amplitude is the carrier phase offset of that echo. Throws
// when V's condition number exceeds 1e12, naming the closest delay pair.
std::vector<std::complex<double>> solve_amplitudes(const MeasurementVector& c,
                                                   const TwoWayPulse& pulse, double T,
                                                   const std::vector<double>& delays);

struct OmpResult {
    std::vector<long long> support;                // grid indices, ascending
    std::vector<std::complex<double>> amplitudes;  // aligned with support
    double residual_norm = 0.0;
    int iterations = 0;
};

// Orthogonal matching pursuit against the quantized-delay dictionary
// A[j][q] = (1/T) H(2 pi k_j / T) e^{-i 2 pi k_j q / n}. Correlation uses
// column-normalized atoms, ties go to the lower grid index, and amplitudes
// are re-fit on the whole support each round. Stops at sparsity_max atoms or
// when the residual drops below residual_tol * ||c||; residual_tol <= 0
// disables the residual stop.
OmpResult omp_recover(const MeasurementVector& c, const TwoWayPulse& pulse, double T,
                      const RecoveryGrid& grid, int sparsity_max, double residual_tol);

// OMP against caller-supplied pulse coefficients aligned with c.kappa.
OmpResult omp_recover(const MeasurementVector& c, const std::vector<std::complex<double>>& h,
                      double T, const RecoveryGrid& grid, int sparsity_max,
                      double residual_tol);

// Informational sizing ratio K / (L ln(n)^4) for the random-Fourier
// dictionary; small values flag an underdetermined setup. Never enforced.
double omp_measurement_ratio(int K, int L, int n);

// Largest-gap model-order suggestion from the Hankel singular values of y.
// Diagnostic only, never applied implicitly.
int estimate_order(const std::vector<std::complex<double>>& y);

// CSV rows "method,L,delay_s,re_b,im_b,residual", one per echo.
void write_recovery_csv(const std::string& path, const std::string& method,
                        const std::vector<double>& delays,
                        const std::vector<std::complex<double>>& amplitudes,
                        double residual);

} // namespace cbf
