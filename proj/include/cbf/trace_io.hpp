#pragma once

#include "cbf/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cbf {

// Two columns, header "time_s,value".
void write_trace_csv(const SampledTrace& trace, const std::string& path);
SampledTrace read_trace_csv(const std::string& path);

// Little-endian: rate f64, duration f64, count u64, then f64 samples.
void write_trace_bin(const SampledTrace& trace, const std::string& path);
SampledTrace read_trace_bin(const std::string& path);

// 8-bit binary PGM (P5). Values expected in [0, 255].
void write_pgm(const std::vector<std::vector<uint8_t>>& rows, const std::string& path);

// FNV-1a 64 over a byte string / a file's contents.
uint64_t fnv1a64(const std::string& bytes);
uint64_t fnv1a64_file(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace cbf
