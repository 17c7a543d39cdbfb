#include "cbf/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace cbf {

namespace {

// FFTW planning is not thread safe; execution on distinct buffers is.
// Plans are created with FFTW_ESTIMATE so planning never touches the
// input buffer and stays deterministic.
std::mutex plan_mutex;
std::map<std::pair<size_t, int>, fftw_plan> plan_cache;

fftw_plan get_plan(size_t n, int sign) {
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(n, sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    std::vector<std::complex<double>> a(n), b(n);
    fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n),
                                   reinterpret_cast<fftw_complex*>(a.data()),
                                   reinterpret_cast<fftw_complex*>(b.data()),
                                   sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plan_cache.emplace(key, p);
    return p;
}

std::vector<std::complex<double>> run(const std::vector<std::complex<double>>& in, int sign) {
    if (in.empty()) throw std::invalid_argument("fft: empty input");
    std::vector<std::complex<double>> out(in.size());
    std::vector<std::complex<double>> tmp(in);
    fftw_plan p = get_plan(in.size(), sign);
    fftw_execute_dft(p,
                     reinterpret_cast<fftw_complex*>(tmp.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    return out;
}

} // namespace

std::vector<std::complex<double>> fft_forward(const std::vector<std::complex<double>>& in) {
    return run(in, FFTW_FORWARD);
}

std::vector<std::complex<double>> fft_inverse(const std::vector<std::complex<double>>& in) {
    return run(in, FFTW_BACKWARD);
}

std::vector<std::complex<double>> fft_forward_real(const std::vector<double>& in) {
    std::vector<std::complex<double>> c(in.size());
    for (size_t i = 0; i < in.size(); ++i) c[i] = in[i];
    return fft_forward(c);
}

} // namespace cbf
