#include "cbf/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <string>

namespace cbf {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0;
    std::size_t b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct RawValue {
    std::string text;
    int line = 0;
    bool used = false;
};

struct RawConfig {
    std::map<std::string, std::map<std::string, RawValue>> sections;
    std::vector<ConfigError> errors;
};

const char* const kKnownSections[] = {"pulse",   "geometry", "sim",   "xample",
                                      "recover", "image",    "sweep", "fig3",
                                      "kernels"};

bool known_section(const std::string& name) {
    for (const char* s : kKnownSections)
        if (name == s) return true;
    return false;
}

RawConfig tokenize(const std::string& text) {
    RawConfig raw;
    std::istringstream in(text);
    std::string line;
    std::string section;
    bool section_known = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                raw.errors.push_back({section, lineno, 0, "unterminated section header"});
                continue;
            }
            section = trim(t.substr(1, t.size() - 2));
            section_known = known_section(section);
            if (section_known)
                raw.sections[section];  // a bare header still marks the section present
            else
                raw.errors.push_back({section, lineno, 0, "unknown section"});
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) {
            raw.errors.push_back({section, lineno, 0, "expected key = value"});
            continue;
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            raw.errors.push_back({section, lineno, 0, "empty key"});
            continue;
        }
        if (section.empty()) {
            raw.errors.push_back({key, lineno, 0, "key outside any section"});
            continue;
        }
        if (!section_known) continue;  // one error per unknown section is enough
        auto& slot = raw.sections[section];
        auto it = slot.find(key);
        if (it != slot.end()) {
            raw.errors.push_back({section + "." + key, lineno, it->second.line,
                                  "duplicate key, first defined at line " +
                                      std::to_string(it->second.line)});
            continue;
        }
        slot.emplace(key, RawValue{value, lineno, false});
    }
    return raw;
}

// Field extraction with error accumulation. Every read marks the key used;
// leftovers become unknown-key errors at the end.
class Reader {
public:
    Reader(RawConfig& raw, std::vector<ConfigError>& errors) : raw_(raw), errors_(errors) {}

    bool present(const std::string& sec, const std::string& key) const {
        auto s = raw_.sections.find(sec);
        return s != raw_.sections.end() && s->second.find(key) != s->second.end();
    }

    RawValue* take(const std::string& sec, const std::string& key) {
        auto s = raw_.sections.find(sec);
        if (s == raw_.sections.end()) return nullptr;
        auto k = s->second.find(key);
        if (k == s->second.end()) return nullptr;
        k->second.used = true;
        return &k->second;
    }

    void error(const std::string& path, int line, const std::string& message) {
        errors_.push_back({path, line, 0, message});
    }

    // last line read, so range validators can point at the offending line
    int last_line = 0;

    bool number(const std::string& sec, const std::string& key, double& out) {
        RawValue* v = take(sec, key);
        if (!v) return false;
        last_line = v->line;
        char* end = nullptr;
        double parsed = std::strtod(v->text.c_str(), &end);
        if (v->text.empty() || end != v->text.c_str() + v->text.size()) {
            error(sec + "." + key, v->line, "not a number: '" + v->text + "'");
            return false;
        }
        out = parsed;
        return true;
    }

    bool integer(const std::string& sec, const std::string& key, long long& out) {
        RawValue* v = take(sec, key);
        if (!v) return false;
        last_line = v->line;
        char* end = nullptr;
        long long parsed = std::strtoll(v->text.c_str(), &end, 10);
        if (v->text.empty() || end != v->text.c_str() + v->text.size()) {
            error(sec + "." + key, v->line, "not an integer: '" + v->text + "'");
            return false;
        }
        out = parsed;
        return true;
    }

    bool unsigned64(const std::string& sec, const std::string& key, uint64_t& out) {
        RawValue* v = take(sec, key);
        if (!v) return false;
        last_line = v->line;
        if (!v->text.empty() && v->text[0] == '-') {
            error(sec + "." + key, v->line, "must be a nonnegative integer");
            return false;
        }
        char* end = nullptr;
        uint64_t parsed = std::strtoull(v->text.c_str(), &end, 10);
        if (v->text.empty() || end != v->text.c_str() + v->text.size()) {
            error(sec + "." + key, v->line, "not an integer: '" + v->text + "'");
            return false;
        }
        out = parsed;
        return true;
    }

    bool boolean(const std::string& sec, const std::string& key, bool& out) {
        RawValue* v = take(sec, key);
        if (!v) return false;
        last_line = v->line;
        if (v->text == "true" || v->text == "1") {
            out = true;
        } else if (v->text == "false" || v->text == "0") {
            out = false;
        } else {
            error(sec + "." + key, v->line, "expected true or false: '" + v->text + "'");
            return false;
        }
        return true;
    }

    bool word(const std::string& sec, const std::string& key, std::string& out,
              const std::vector<std::string>& allowed) {
        RawValue* v = take(sec, key);
        if (!v) return false;
        last_line = v->line;
        for (const auto& a : allowed)
            if (v->text == a) {
                out = v->text;
                return true;
            }
        std::string opts;
        for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
        error(sec + "." + key, v->line, "must be one of: " + opts);
        return false;
    }

    bool items(const std::string& sec, const std::string& key, std::vector<std::string>& out) {
        RawValue* v = take(sec, key);
        if (!v) return false;
        last_line = v->line;
        out.clear();
        std::istringstream parts(v->text);
        std::string item;
        while (std::getline(parts, item, ',')) {
            item = trim(item);
            if (item.empty()) {
                error(sec + "." + key, v->line, "empty list entry");
                return false;
            }
            out.push_back(item);
        }
        if (out.empty()) {
            error(sec + "." + key, v->line, "empty list");
            return false;
        }
        return true;
    }

    bool number_list(const std::string& sec, const std::string& key, std::vector<double>& out) {
        std::vector<std::string> words;
        if (!items(sec, key, words)) return false;
        out.clear();
        for (const auto& w : words) {
            char* end = nullptr;
            double parsed = std::strtod(w.c_str(), &end);
            if (end != w.c_str() + w.size()) {
                error(sec + "." + key, last_line, "not a number: '" + w + "'");
                return false;
            }
            out.push_back(parsed);
        }
        return true;
    }

    void flush_unknown() {
        for (auto& [sec, keys] : raw_.sections)
            for (auto& [key, v] : keys)
                if (!v.used) error(sec + "." + key, v.line, "unknown key");
    }

private:
    RawConfig& raw_;
    std::vector<ConfigError>& errors_;
};

} // namespace

std::string format_error(const ConfigError& error) {
    std::string out = error.path;
    if (error.line > 0) out += " (line " + std::to_string(error.line) + ")";
    out += ": " + error.message;
    return out;
}

bool parse_method_name(const std::string& name, RecoveryMethod& method) {
    if (name == "cadzow_tls") {
        method = RecoveryMethod::kCadzowTls;
    } else if (name == "matrix_pencil") {
        method = RecoveryMethod::kMatrixPencil;
    } else if (name == "omp_consecutive") {
        method = RecoveryMethod::kOmpConsecutive;
    } else if (name == "omp_random") {
        method = RecoveryMethod::kOmpRandom;
    } else {
        return false;
    }
    return true;
}

ArrayGeometry ExperimentConfig::make_geometry() const {
    if (geometry_preset == "projection") return default_probe();
    if (geometry_preset == "linear")
        return ArrayGeometry::linear(geometry_elements, geometry_pitch, geometry_elements / 2,
                                     geometry_speed);
    return imaging_probe();
}

long long ExperimentConfig::kappa_center_or_default() const {
    if (kappa_center >= 0) return kappa_center;
    return static_cast<long long>(std::ceil(pulse.f0 * sim.duration));
}

int ExperimentConfig::order_or_default() const {
    return model_order > 0 ? model_order : sim.signal_count;
}

ParseResult parse_config(const std::string& text) {
    ParseResult result;
    RawConfig raw = tokenize(text);
    result.errors = raw.errors;
    Reader r(raw, result.errors);
    ExperimentConfig& c = result.config;

    if (raw.sections.find("pulse") == raw.sections.end())
        result.errors.push_back({"pulse", 0, 0, "missing section: pulse"});

    double sigma = c.pulse.sigma;
    double f0 = c.pulse.f0;
    double beta = c.pulse.beta;
    if (r.number("pulse", "sigma", sigma) && !(sigma > 0.0))
        r.error("pulse.sigma", r.last_line, "must be positive");
    if (r.number("pulse", "f0", f0) && !(f0 > 0.0))
        r.error("pulse.f0", r.last_line, "must be positive");
    r.number("pulse", "beta", beta);

    r.word("geometry", "preset", c.geometry_preset, {"imaging", "projection", "linear"});
    bool custom_geometry = false;
    long long n = 0;
    if (r.present("geometry", "elements")) custom_geometry = true;
    if (r.integer("geometry", "elements", n)) {
        if (n < 2)
            r.error("geometry.elements", r.last_line, "need at least 2 elements");
        else
            c.geometry_elements = static_cast<int>(n);
    }
    if (r.present("geometry", "pitch")) custom_geometry = true;
    if (r.number("geometry", "pitch", c.geometry_pitch) && !(c.geometry_pitch > 0.0))
        r.error("geometry.pitch", r.last_line, "must be positive");
    if (r.present("geometry", "speed")) custom_geometry = true;
    if (r.number("geometry", "speed", c.geometry_speed) && !(c.geometry_speed > 0.0))
        r.error("geometry.speed", r.last_line, "must be positive");
    if (custom_geometry && c.geometry_preset != "linear")
        result.errors.push_back(
            {"geometry", 0, 0, "elements/pitch/speed require preset = linear"});

    SimConfig& sim = c.sim;
    if (r.number("sim", "focus_depth", sim.focus_depth) && !(sim.focus_depth > 0.0))
        r.error("sim.focus_depth", r.last_line, "must be positive");
    if (r.integer("sim", "speckle_count", n)) {
        if (n < 0)
            r.error("sim.speckle_count", r.last_line, "must be nonnegative");
        else
            sim.speckle_count = static_cast<int>(n);
    }
    if (r.integer("sim", "signal_count", n)) {
        if (n < 1)
            r.error("sim.signal_count", r.last_line, "need at least one reflector");
        else
            sim.signal_count = static_cast<int>(n);
    }
    if (r.number("sim", "depth_min", sim.depth_min) && !(sim.depth_min > 0.0))
        r.error("sim.depth_min", r.last_line, "must be positive");
    r.number("sim", "depth_max", sim.depth_max);
    r.number("sim", "target_snr_db", sim.target_snr_db);
    if (r.integer("sim", "trials", n)) {
        if (n < 1)
            r.error("sim.trials", r.last_line, "need at least one trial");
        else
            sim.trials = static_cast<int>(n);
    }
    if (r.number("sim", "eta", sim.eta) && !(sim.eta > 1.0))
        r.error("sim.eta", r.last_line, "oversampling factor must exceed 1");
    r.unsigned64("sim", "seed", sim.seed);
    if (r.number("sim", "rate", sim.rate) && !(sim.rate > 0.0))
        r.error("sim.rate", r.last_line, "must be positive");
    if (r.number("sim", "duration", sim.duration) && !(sim.duration > 0.0))
        r.error("sim.duration", r.last_line, "must be positive");
    if (r.number("sim", "beam_width", sim.beam_width_6db) && !(sim.beam_width_6db > 0.0))
        r.error("sim.beam_width", r.last_line, "must be positive");
    r.boolean("sim", "range_attenuation", sim.range_attenuation);
    if (r.integer("sim", "grid", n)) {
        if (n < 1)
            r.error("sim.grid", r.last_line, "grid size must be positive");
        else
            sim.omp_grid = static_cast<int>(n);
    }

    r.word("xample", "mode", c.xample_mode, {"exact", "approx"});
    if (r.number("xample", "rho_sq", c.rho_sq) && !(c.rho_sq > 0.0 && c.rho_sq < 1.0))
        r.error("xample.rho_sq", r.last_line, "must lie in (0, 1)");
    if (r.integer("xample", "search_limit", n)) {
        if (n < 1)
            r.error("xample.search_limit", r.last_line, "must be positive");
        else
            c.search_limit = static_cast<int>(n);
    }
    r.word("xample", "kappa", c.kappa_policy, {"consecutive", "random"});
    if (r.integer("xample", "count", n)) {
        if (n < 1)
            r.error("xample.count", r.last_line, "need at least one coefficient");
        else
            c.kappa_count = static_cast<int>(n);
    }
    if (r.integer("xample", "center", c.kappa_center) && c.kappa_center < 0)
        r.error("xample.center", r.last_line, "must be nonnegative");
    if (r.number("xample", "threshold_db", c.band_threshold_db) && !(c.band_threshold_db > 0.0))
        r.error("xample.threshold_db", r.last_line, "must be positive");

    std::string method_word;
    if (r.word("recover", "method", method_word,
               {"cadzow_tls", "matrix_pencil", "omp_consecutive", "omp_random"}))
        parse_method_name(method_word, c.method);
    if (r.integer("recover", "order", n)) {
        if (n < 1)
            r.error("recover.order", r.last_line, "model order must be positive");
        else
            c.model_order = static_cast<int>(n);
    }
    if (r.integer("recover", "iterations", n)) {
        if (n < 0)
            r.error("recover.iterations", r.last_line, "must be nonnegative");
        else
            c.cadzow_iterations = static_cast<int>(n);
    }
    r.number("recover", "residual_tol", c.residual_tol);

    if (r.integer("image", "scanlines", n)) {
        if (n < 1)
            r.error("image.scanlines", r.last_line, "need at least one scanline");
        else
            c.scanlines = static_cast<int>(n);
    }
    if (r.number("image", "span_deg", c.span_deg) &&
        !(c.span_deg > 0.0 && c.span_deg < 90.0))
        r.error("image.span_deg", r.last_line, "must lie in (0, 90)");
    if (r.integer("image", "nx", n)) {
        if (n < 1)
            r.error("image.nx", r.last_line, "must be positive");
        else
            c.nx = static_cast<int>(n);
    }
    if (r.integer("image", "nz", n)) {
        if (n < 1)
            r.error("image.nz", r.last_line, "must be positive");
        else
            c.nz = static_cast<int>(n);
    }
    if (r.number("image", "dynamic_range_db", c.dynamic_range_db) && !(c.dynamic_range_db > 0.0))
        r.error("image.dynamic_range_db", r.last_line, "must be positive");
    std::string interp_word;
    if (r.word("image", "interpolation", interp_word, {"nearest", "bilinear"}))
        c.interpolation =
            interp_word == "nearest" ? Interpolation::kNearest : Interpolation::kBilinear;
    std::string mode_word;
    if (r.word("image", "mode", mode_word, {"phase", "real", "modulus"})) {
        if (mode_word == "phase")
            c.recon_mode = ReconstructionMode::kPhaseAware;
        else if (mode_word == "real")
            c.recon_mode = ReconstructionMode::kRealPart;
        else
            c.recon_mode = ReconstructionMode::kModulus;
    }

    r.number_list("sweep", "snr", c.sweep_snr);
    if (r.number_list("sweep", "eta", c.sweep_eta))
        for (double e : c.sweep_eta)
            if (!(e > 1.0)) {
                r.error("sweep.eta", r.last_line, "every factor must exceed 1");
                break;
            }
    std::vector<std::string> method_words;
    if (r.items("sweep", "methods", method_words)) {
        std::vector<RecoveryMethod> methods;
        bool all_ok = true;
        for (const auto& w : method_words) {
            RecoveryMethod m;
            if (!parse_method_name(w, m)) {
                r.error("sweep.methods", r.last_line, "unknown method: '" + w + "'");
                all_ok = false;
                break;
            }
            methods.push_back(m);
        }
        if (all_ok) c.sweep_methods = methods;
    }

    if (r.integer("fig3", "points", n)) {
        if (n < 2)
            r.error("fig3.points", r.last_line, "need at least two delays");
        else
            c.fig3_points = static_cast<int>(n);
    }
    std::vector<double> element_numbers;
    if (r.number_list("fig3", "elements", element_numbers)) {
        std::vector<int> elements;
        bool all_ok = true;
        for (double e : element_numbers) {
            int idx = static_cast<int>(e);
            if (e != idx || idx < 0 || idx >= default_probe().count()) {
                r.error("fig3.elements", r.last_line,
                        "element index outside the projection probe");
                all_ok = false;
                break;
            }
            elements.push_back(idx);
        }
        if (all_ok) c.fig3_elements = elements;
    }

    std::vector<double> kernel_element_numbers;
    if (r.number_list("kernels", "elements", kernel_element_numbers)) {
        std::vector<int> elements;
        bool all_ok = true;
        for (double e : kernel_element_numbers) {
            int idx = static_cast<int>(e);
            if (e != idx || idx < 0) {
                r.error("kernels.elements", r.last_line, "element index must be nonnegative");
                all_ok = false;
                break;
            }
            elements.push_back(idx);
        }
        if (all_ok) c.kernel_elements = elements;
    }
    std::vector<double> kernel_index_numbers;
    if (r.number_list("kernels", "indices", kernel_index_numbers)) {
        std::vector<long long> indices;
        bool all_ok = true;
        for (double e : kernel_index_numbers) {
            long long idx = static_cast<long long>(e);
            if (e != idx || idx < 0) {
                r.error("kernels.indices", r.last_line, "Fourier index must be nonnegative");
                all_ok = false;
                break;
            }
            indices.push_back(idx);
        }
        if (all_ok) c.kernel_indices = indices;
    }

    r.flush_unknown();

    // cross-field checks only make sense on otherwise valid input
    if (result.errors.empty()) {
        c.pulse = TwoWayPulse::gaussian(sigma, f0, beta);
        sim.pulse = c.pulse;
        sim.geometry = c.make_geometry();
        if (!(sim.depth_min < sim.depth_max))
            result.errors.push_back(
                {"sim.depth_max", 0, 0, "depth interval is empty"});
        else if (sim.depth_max > sim.geometry.speed * sim.duration / 2.0)
            result.errors.push_back(
                {"sim.depth_max", 0, 0, "deepest reflector echoes after the frame ends"});
        for (int idx : c.kernel_elements)
            if (idx >= sim.geometry.count()) {
                result.errors.push_back(
                    {"kernels.elements", 0, 0, "element index outside the geometry"});
                break;
            }
    }
    return result;
}

} // namespace cbf
