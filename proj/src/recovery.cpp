#include "cbf/recovery.hpp"

#include "cbf/signal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cbf {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using cd = std::complex<double>;

void require_consecutive(const std::vector<long long>& kappa, const char* who) {
    for (std::size_t j = 1; j < kappa.size(); ++j)
        if (kappa[j] != kappa[j - 1] + 1)
            throw std::invalid_argument(std::string(who) + ": kappa must be consecutive");
}

MatrixXcd hankel_of(const std::vector<cd>& y, int rows, int cols) {
    MatrixXcd h(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) h(i, j) = y[static_cast<std::size_t>(i + j)];
    return h;
}

// wrap arg(z) onto the delay circle [0, T)
double delay_from_root(cd z, double T) {
    double t = std::fmod(-T * std::arg(z) / kTwoPi, T);
    if (t < 0.0) t += T;
    if (t >= T * (1.0 - 1e-12)) t = 0.0;
    return t;
}

std::vector<double> sorted_delays_from_roots(const VectorXcd& roots, double T) {
    std::vector<double> delays(static_cast<std::size_t>(roots.size()));
    for (Eigen::Index i = 0; i < roots.size(); ++i)
        delays[static_cast<std::size_t>(i)] = delay_from_root(roots(i), T);
    std::sort(delays.begin(), delays.end());
    return delays;
}

VectorXcd poly_roots(const VectorXcd& coeffs) {
    const Eigen::Index deg = coeffs.size() - 1;
    if (std::abs(coeffs(deg)) < 1e-14 * coeffs.norm())
        throw std::runtime_error("annihilating filter degenerate: leading coefficient vanishes");
    MatrixXcd companion = MatrixXcd::Zero(deg, deg);
    for (Eigen::Index i = 1; i < deg; ++i) companion(i, i - 1) = 1.0;
    for (Eigen::Index i = 0; i < deg; ++i) companion(i, deg - 1) = -coeffs(i) / coeffs(deg);
    Eigen::ComplexEigenSolver<MatrixXcd> es(companion, false);
    return es.eigenvalues();
}

// project onto Hankel matrices by averaging anti-diagonals
MatrixXcd hankel_project(const MatrixXcd& m) {
    const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
    std::vector<cd> sum(static_cast<std::size_t>(rows + cols - 1), cd(0.0, 0.0));
    std::vector<int> cnt(sum.size(), 0);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
            sum[static_cast<std::size_t>(i + j)] += m(i, j);
            ++cnt[static_cast<std::size_t>(i + j)];
        }
    MatrixXcd out(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            out(i, j) = sum[static_cast<std::size_t>(i + j)] /
                        static_cast<double>(cnt[static_cast<std::size_t>(i + j)]);
    return out;
}

MatrixXcd rank_truncate(const MatrixXcd& m, int rank) {
    Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd s = svd.singularValues();
    for (Eigen::Index i = rank; i < s.size(); ++i) s(i) = 0.0;
    return svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint();
}

MatrixXcd vandermonde(const std::vector<long long>& kappa, const std::vector<double>& delays,
                      double T) {
    MatrixXcd v(static_cast<Eigen::Index>(kappa.size()),
                static_cast<Eigen::Index>(delays.size()));
    for (std::size_t j = 0; j < kappa.size(); ++j)
        for (std::size_t l = 0; l < delays.size(); ++l)
            v(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(l)) =
                std::polar(1.0, -kTwoPi * static_cast<double>(kappa[j]) * delays[l] / T);
    return v;
}

} // namespace

SpectralSystem SpectralSystem::normalize(const MeasurementVector& c, const TwoWayPulse& pulse,
                                         double T, int L) {
    return normalize(c, pulse_band(pulse, T, c.kappa), T, L);
}

SpectralSystem SpectralSystem::normalize(const MeasurementVector& c,
                                         const std::vector<std::complex<double>>& h, double T,
                                         int L) {
    if (L < 0) throw std::invalid_argument("SpectralSystem: L must be nonnegative");
    if (h.size() != c.values.size())
        throw std::invalid_argument("SpectralSystem: pulse coefficients misaligned");
    require_consecutive(c.kappa, "SpectralSystem");
    SpectralSystem sys;
    sys.kappa = c.kappa;
    sys.L = L;
    sys.y.resize(c.values.size());
    for (std::size_t j = 0; j < c.values.size(); ++j) {
        if (std::abs(h[j]) == 0.0)
            throw std::invalid_argument("SpectralSystem: pulse transform vanishes at an index");
        sys.y[j] = T * c.values[j] / h[j];
    }
    return sys;
}

RecoveryGrid::RecoveryGrid(int n_, double T) : n(n_) {
    if (n < 1) throw std::invalid_argument("RecoveryGrid: n must be positive");
    if (!(T > 0.0)) throw std::invalid_argument("RecoveryGrid: T must be positive");
    delta_s = T / static_cast<double>(n);
}

std::vector<double> matrix_pencil(const SpectralSystem& system, double T) {
    const int k = static_cast<int>(system.y.size());
    const int l = system.L;
    if (l == 0) return {};
    if (k < 2 * l) throw std::invalid_argument("matrix_pencil: needs K >= 2L");
    require_consecutive(system.kappa, "matrix_pencil");

    const int p = k / 2;
    MatrixXcd y = hankel_of(system.y, k - p, p + 1);
    Eigen::JacobiSVD<MatrixXcd> svd(y, Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    int effective = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) >= 1e-8 * s(0)) ++effective;
    if (effective < l)
        throw std::runtime_error("matrix_pencil: rank collapse, effective order " +
                                 std::to_string(effective) + " below requested " +
                                 std::to_string(l));

    MatrixXcd vl = svd.matrixV().leftCols(l);
    MatrixXcd v1 = vl.topRows(vl.rows() - 1);
    MatrixXcd v2 = vl.bottomRows(vl.rows() - 1);
    MatrixXcd pencil = v1.colPivHouseholderQr().solve(v2);
    Eigen::ComplexEigenSolver<MatrixXcd> es(pencil, false);
    VectorXcd roots = es.eigenvalues().conjugate();
    return sorted_delays_from_roots(roots, T);
}

CadzowResult cadzow_tls(const SpectralSystem& system, double T, int iterations) {
    const int k = static_cast<int>(system.y.size());
    const int l = system.L;
    CadzowResult result;
    if (l == 0) return result;
    if (k < 2 * l) throw std::invalid_argument("cadzow_tls: needs K >= 2L");
    if (iterations < 0) throw std::invalid_argument("cadzow_tls: negative iteration count");
    require_consecutive(system.kappa, "cadzow_tls");

    MatrixXcd h = hankel_of(system.y, k - l, l + 1);
    // increases below the numerical floor are rounding, not divergence
    const double dist_floor = 1e-12 * h.norm();
    double prev_dist = -1.0;
    for (int it = 0; it < iterations; ++it) {
        MatrixXcd low = rank_truncate(h, l);
        MatrixXcd proj = hankel_project(low);
        double dist = (low - proj).norm();
        if (prev_dist >= 0.0 && dist > prev_dist && dist > dist_floor)
            result.distance_increased = true;
        prev_dist = dist;
        h = proj;
    }

    // recover the denoised sequence off the anti-diagonals
    std::vector<cd> denoised(static_cast<std::size_t>(k));
    {
        MatrixXcd avg = hankel_project(h);
        for (int i = 0; i < k; ++i) {
            int row = std::min(i, static_cast<int>(avg.rows()) - 1);
            denoised[static_cast<std::size_t>(i)] = avg(row, i - row);
        }
    }

    MatrixXcd t = hankel_of(denoised, k - l, l + 1);
    Eigen::JacobiSVD<MatrixXcd> svd(t, Eigen::ComputeFullV);
    VectorXcd filter = svd.matrixV().col(svd.matrixV().cols() - 1);
    result.delays = sorted_delays_from_roots(poly_roots(filter), T);
    return result;
}

std::vector<cd> solve_amplitudes(const MeasurementVector& c, const TwoWayPulse& pulse,
                                 double T, const std::vector<double>& delays) {
    if (delays.empty()) return {};
    if (c.values.size() < delays.size())
        throw std::invalid_argument("solve_amplitudes: more delays than measurements");

    MatrixXcd v = vandermonde(c.kappa, delays, T);
    {
        Eigen::JacobiSVD<MatrixXcd> svd(v);
        const auto& s = svd.singularValues();
        double smin = s(s.size() - 1);
        if (smin == 0.0 || s(0) / smin > 1e12) {
            std::ostringstream msg;
            msg << "solve_amplitudes: delay grid ill conditioned";
            if (delays.size() >= 2) {
                double best = std::numeric_limits<double>::infinity();
                std::size_t bi = 0, bj = 1;
                for (std::size_t i = 0; i < delays.size(); ++i)
                    for (std::size_t j = i + 1; j < delays.size(); ++j)
                        if (std::abs(delays[i] - delays[j]) < best) {
                            best = std::abs(delays[i] - delays[j]);
                            bi = i;
                            bj = j;
                        }
                msg << ", closest pair " << delays[bi] << " s and " << delays[bj] << " s";
            }
            throw std::runtime_error(msg.str());
        }
    }

    auto h = pulse_band(pulse, T, c.kappa);
    MatrixXcd m = v;
    for (std::size_t j = 0; j < c.kappa.size(); ++j)
        m.row(static_cast<Eigen::Index>(j)) *= h[j] / T;
    VectorXcd rhs(static_cast<Eigen::Index>(c.values.size()));
    for (std::size_t j = 0; j < c.values.size(); ++j)
        rhs(static_cast<Eigen::Index>(j)) = c.values[j];
    VectorXcd b = m.colPivHouseholderQr().solve(rhs);
    return std::vector<cd>(b.data(), b.data() + b.size());
}

OmpResult omp_recover(const MeasurementVector& c, const TwoWayPulse& pulse, double T,
                      const RecoveryGrid& grid, int sparsity_max, double residual_tol) {
    return omp_recover(c, pulse_band(pulse, T, c.kappa), T, grid, sparsity_max, residual_tol);
}

OmpResult omp_recover(const MeasurementVector& c, const std::vector<std::complex<double>>& h,
                      double T, const RecoveryGrid& grid, int sparsity_max,
                      double residual_tol) {
    const int k = static_cast<int>(c.values.size());
    if (grid.n < k) throw std::invalid_argument("omp_recover: grid smaller than measurement count");
    if (sparsity_max < 0) throw std::invalid_argument("omp_recover: negative sparsity");
    if (h.size() != c.values.size())
        throw std::invalid_argument("omp_recover: pulse coefficients misaligned");
    // A[j][q] = (1/T) h_j e^{-i 2 pi k_j q / n}; every column has the same norm
    double col_norm_sq = 0.0;
    for (const auto& hj : h) col_norm_sq += std::norm(hj / T);
    const double col_norm = std::sqrt(col_norm_sq);
    if (col_norm == 0.0)
        throw std::invalid_argument("omp_recover: pulse transform vanishes on kappa");

    VectorXcd rhs(k);
    for (int j = 0; j < k; ++j) rhs(j) = c.values[static_cast<std::size_t>(j)];
    const double c_norm = rhs.norm();

    OmpResult result;
    VectorXcd residual = rhs;
    std::vector<long long> support;
    VectorXcd amps;
    auto column = [&](long long q) {
        VectorXcd a(k);
        for (int j = 0; j < k; ++j)
            a(j) = h[static_cast<std::size_t>(j)] / T *
                   std::polar(1.0, -kTwoPi * static_cast<double>(c.kappa[static_cast<std::size_t>(j)]) *
                                       static_cast<double>(q) / static_cast<double>(grid.n));
        return a;
    };

    while (static_cast<int>(support.size()) < sparsity_max) {
        if (residual.norm() == 0.0) break;
        if (residual_tol > 0.0 && residual.norm() < residual_tol * c_norm) break;

        long long best_q = -1;
        double best_corr = -1.0;
        for (long long q = 0; q < grid.n; ++q) {
            if (std::find(support.begin(), support.end(), q) != support.end()) continue;
            cd corr(0.0, 0.0);
            for (int j = 0; j < k; ++j)
                corr += std::conj(h[static_cast<std::size_t>(j)] / T) *
                        std::polar(1.0, kTwoPi * static_cast<double>(c.kappa[static_cast<std::size_t>(j)]) *
                                            static_cast<double>(q) / static_cast<double>(grid.n)) *
                        residual(j);
            double mag = std::abs(corr) / col_norm;
            if (mag > best_corr) {
                best_corr = mag;
                best_q = q;
            }
        }
        if (best_q < 0 || best_corr == 0.0) break;
        support.push_back(best_q);

        MatrixXcd a(k, static_cast<Eigen::Index>(support.size()));
        for (std::size_t s = 0; s < support.size(); ++s)
            a.col(static_cast<Eigen::Index>(s)) = column(support[s]);
        amps = a.colPivHouseholderQr().solve(rhs);
        residual = rhs - a * amps;
        ++result.iterations;
    }

    std::vector<std::size_t> order(support.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });
    for (std::size_t i : order) {
        result.support.push_back(support[i]);
        result.amplitudes.push_back(amps(static_cast<Eigen::Index>(i)));
    }
    result.residual_norm = residual.norm();
    return result;
}

double omp_measurement_ratio(int K, int L, int n) {
    if (K < 1 || L < 1 || n < 2)
        throw std::invalid_argument("omp_measurement_ratio: bad arguments");
    double lg = std::log(static_cast<double>(n));
    return static_cast<double>(K) / (static_cast<double>(L) * lg * lg * lg * lg);
}

int estimate_order(const std::vector<cd>& y) {
    const int k = static_cast<int>(y.size());
    if (k < 2) throw std::invalid_argument("estimate_order: needs at least two samples");
    const int p = k / 2;
    MatrixXcd h = hankel_of(y, k - p, p + 1);
    Eigen::JacobiSVD<MatrixXcd> svd(h);
    const auto& s = svd.singularValues();
    if (s(0) == 0.0) return 0;
    int best = 1;
    double best_gap = 0.0;
    for (Eigen::Index i = 0; i + 1 < s.size(); ++i) {
        if (s(i + 1) == 0.0) return static_cast<int>(i) + 1;
        double gap = s(i) / s(i + 1);
        if (gap > best_gap) {
            best_gap = gap;
            best = static_cast<int>(i) + 1;
        }
    }
    return best;
}

void write_recovery_csv(const std::string& path, const std::string& method,
                        const std::vector<double>& delays,
                        const std::vector<cd>& amplitudes, double residual) {
    if (delays.size() != amplitudes.size())
        throw std::invalid_argument("write_recovery_csv: delay/amplitude size mismatch");
    std::ofstream f(path);
    if (!f) throw std::runtime_error(path + ": cannot open for writing");
    f << "method,L,delay_s,re_b,im_b,residual\n";
    char line[256];
    for (std::size_t l = 0; l < delays.size(); ++l) {
        std::snprintf(line, sizeof line, "%s,%zu,%.17g,%.17g,%.17g,%.17g\n", method.c_str(),
                      delays.size(), delays[l], amplitudes[l].real(), amplitudes[l].imag(),
                      residual);
        f << line;
    }
    if (!f) throw std::runtime_error(path + ": write failed");
}

} // namespace cbf
