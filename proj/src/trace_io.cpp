#include "cbf/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cbf {

namespace {

[[noreturn]] void io_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

} // namespace

void write_trace_csv(const SampledTrace& trace, const std::string& path) {
    std::ofstream f(path);
    if (!f) io_fail(path, "cannot open for writing");
    f << "time_s,value\n";
    char line[80];
    for (std::size_t i = 0; i < trace.samples.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g\n", trace.time_at(i), trace.samples[i]);
        f << line;
    }
    if (!f) io_fail(path, "write failed");
}

SampledTrace read_trace_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) io_fail(path, "cannot open");
    std::string line;
    if (!std::getline(f, line)) io_fail(path, "empty file");
    std::vector<double> times, vals;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) io_fail(path, "malformed row: " + line);
        times.push_back(std::stod(line.substr(0, comma)));
        vals.push_back(std::stod(line.substr(comma + 1)));
    }
    if (times.size() < 2) io_fail(path, "need at least two samples");
    double rate = static_cast<double>(times.size() - 1) / (times.back() - times.front());
    double duration = static_cast<double>(times.size()) / rate;
    return SampledTrace(std::move(vals), rate, duration);
}

void write_trace_bin(const SampledTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) io_fail(path, "cannot open for writing");
    uint64_t count = trace.samples.size();
    f.write(reinterpret_cast<const char*>(&trace.rate), 8);
    f.write(reinterpret_cast<const char*>(&trace.duration), 8);
    f.write(reinterpret_cast<const char*>(&count), 8);
    f.write(reinterpret_cast<const char*>(trace.samples.data()),
            static_cast<std::streamsize>(count * 8));
    if (!f) io_fail(path, "write failed");
}

SampledTrace read_trace_bin(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) io_fail(path, "cannot open");
    double rate = 0.0, duration = 0.0;
    uint64_t count = 0;
    f.read(reinterpret_cast<char*>(&rate), 8);
    f.read(reinterpret_cast<char*>(&duration), 8);
    f.read(reinterpret_cast<char*>(&count), 8);
    if (!f) io_fail(path, "truncated header");
    std::vector<double> samples(count);
    f.read(reinterpret_cast<char*>(samples.data()), static_cast<std::streamsize>(count * 8));
    if (!f) io_fail(path, "truncated samples");
    return SampledTrace(std::move(samples), rate, duration);
}

void write_pgm(const std::vector<std::vector<uint8_t>>& rows, const std::string& path) {
    if (rows.empty() || rows.front().empty())
        throw std::invalid_argument("write_pgm: empty image");
    std::size_t w = rows.front().size();
    for (const auto& r : rows)
        if (r.size() != w) throw std::invalid_argument("write_pgm: ragged rows");
    std::ofstream f(path, std::ios::binary);
    if (!f) io_fail(path, "cannot open for writing");
    f << "P5\n" << w << " " << rows.size() << "\n255\n";
    for (const auto& r : rows)
        f.write(reinterpret_cast<const char*>(r.data()), static_cast<std::streamsize>(w));
    if (!f) io_fail(path, "write failed");
}

uint64_t fnv1a64(const std::string& bytes) {
    uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

uint64_t fnv1a64_file(const std::string& path) {
    return fnv1a64(read_text_file(path));
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) io_fail(path, "cannot open");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) io_fail(path, "cannot open for writing");
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) io_fail(path, "write failed");
}

} // namespace cbf
