#include "zbw/config.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "zbw/errors.hpp"
#include "zbw/units.hpp"

namespace zbw::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
    throw config_error("config: key \"" + key + "\" " + what);
}

double get_real(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
}

long get_integer(const json& j, const std::string& key, long fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<long>();
}

std::string get_choice(const json& j, const std::string& key, const std::string& fallback,
                       std::initializer_list<const char*> allowed) {
    std::string s = fallback;
    if (j.contains(key)) {
        const json& v = j.at(key);
        if (!v.is_string()) fail(key, "must be a string");
        s = v.get<std::string>();
    }
    for (const char* a : allowed)
        if (s == a) return s;
    std::string msg = "must be one of {";
    bool first = true;
    for (const char* a : allowed) {
        if (!first) msg += ", ";
        msg += a;
        first = false;
    }
    fail(key, msg + "} (got \"" + s + "\")");
}

void require(bool ok, const std::string& key, const std::string& what, double got) {
    if (ok) return;
    std::ostringstream os;
    os << "out of range: must be " << what << " (got " << got << ")";
    fail(key, os.str());
}

const std::initializer_list<const char*> kKnownKeys = {
    "constants",     "d_angstrom",        "Z",
    "crystal_length_angstrom",            "r0_angstrom",
    "p_mev",         "mode",              "field",
    "uniform_field", "periods",           "steps_per_period",
    "stride",        "tol_invariant",     "p_min_mev",
    "p_max_mev",     "scan_steps",        "scan_order",
    "ejection_threshold",                 "workers",
    "floquet_q",     "floquet_h",         "floquet_omega_min",
    "floquet_omega_max",                  "floquet_points",
    "dirac_samples", "units",             "out_dir"};

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw config_error("config: the document must be a JSON object");

    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : kKnownKeys) known = known || item.key() == k;
        if (!known) fail(item.key(), "is not a recognized configuration key");
    }

    RunConfig cfg;
    cfg.constants = get_choice(j, "constants", cfg.constants, {"paper", "precise"});
    cfg.d_angstrom = get_real(j, "d_angstrom", cfg.d_angstrom);
    cfg.Z = get_real(j, "Z", cfg.Z);
    cfg.crystal_length_angstrom =
        get_real(j, "crystal_length_angstrom", cfg.crystal_length_angstrom);
    cfg.r0_angstrom = get_real(j, "r0_angstrom", cfg.r0_angstrom);
    cfg.p_mev = get_real(j, "p_mev", cfg.p_mev);
    cfg.mode = get_choice(j, "mode", cfg.mode, {"lightlike", "timelike"});
    cfg.field = get_choice(j, "field", cfg.field, {"none", "uniform", "lindhard"});
    if (j.contains("uniform_field")) {
        const json& v = j.at("uniform_field");
        if (!v.is_array() || v.size() != 6)
            fail("uniform_field", "must be an array of 6 numbers [E1,E2,E3,B1,B2,B3]");
        for (int k = 0; k < 6; ++k) {
            if (!v[k].is_number()) fail("uniform_field", "must contain numbers only");
            cfg.uniform_field[k] = v[k].get<double>();
            if (!std::isfinite(cfg.uniform_field[k])) fail("uniform_field", "must be finite");
        }
    }
    cfg.periods = get_real(j, "periods", cfg.periods);
    cfg.steps_per_period = get_integer(j, "steps_per_period", cfg.steps_per_period);
    cfg.stride = get_integer(j, "stride", cfg.stride);
    cfg.tol_invariant = get_real(j, "tol_invariant", cfg.tol_invariant);
    cfg.p_min_mev = get_real(j, "p_min_mev", cfg.p_min_mev);
    cfg.p_max_mev = get_real(j, "p_max_mev", cfg.p_max_mev);
    cfg.scan_steps = get_integer(j, "scan_steps", cfg.scan_steps);
    cfg.scan_order = get_integer(j, "scan_order", cfg.scan_order);
    cfg.ejection_threshold = get_real(j, "ejection_threshold", cfg.ejection_threshold);
    cfg.workers = get_integer(j, "workers", cfg.workers);
    cfg.floquet_q = get_real(j, "floquet_q", cfg.floquet_q);
    cfg.floquet_h = get_real(j, "floquet_h", cfg.floquet_h);
    cfg.floquet_omega_min = get_real(j, "floquet_omega_min", cfg.floquet_omega_min);
    cfg.floquet_omega_max = get_real(j, "floquet_omega_max", cfg.floquet_omega_max);
    cfg.floquet_points = get_integer(j, "floquet_points", cfg.floquet_points);
    cfg.dirac_samples = get_integer(j, "dirac_samples", cfg.dirac_samples);
    cfg.units = get_choice(j, "units", cfg.units, {"natural", "lab"});
    if (j.contains("out_dir")) {
        const json& v = j.at("out_dir");
        if (!v.is_string()) fail("out_dir", "must be a string");
        cfg.out_dir = v.get<std::string>();
        if (cfg.out_dir.empty()) fail("out_dir", "must not be empty");
    }

    require(cfg.d_angstrom > 0.0, "d_angstrom", "> 0", cfg.d_angstrom);
    require(cfg.Z > 0.0, "Z", "> 0", cfg.Z);
    require(cfg.crystal_length_angstrom > 0.0, "crystal_length_angstrom", "> 0",
            cfg.crystal_length_angstrom);
    require(cfg.r0_angstrom > 0.0, "r0_angstrom", "> 0", cfg.r0_angstrom);
    require(cfg.p_mev >= 0.0, "p_mev", ">= 0 (0 selects the clock resonance)", cfg.p_mev);
    require(cfg.periods > 0.0, "periods", "> 0", cfg.periods);
    require(cfg.steps_per_period >= 8, "steps_per_period", ">= 8",
            static_cast<double>(cfg.steps_per_period));
    require(cfg.stride >= 1, "stride", ">= 1", static_cast<double>(cfg.stride));
    require(cfg.tol_invariant > 0.0, "tol_invariant", "> 0", cfg.tol_invariant);
    require(cfg.p_min_mev > 0.0, "p_min_mev", "> 0", cfg.p_min_mev);
    require(cfg.p_max_mev > cfg.p_min_mev, "p_max_mev", "> p_min_mev", cfg.p_max_mev);
    require(cfg.scan_steps >= 2, "scan_steps", ">= 2", static_cast<double>(cfg.scan_steps));
    require(cfg.scan_order == 1 || cfg.scan_order == 2, "scan_order", "1 or 2",
            static_cast<double>(cfg.scan_order));
    require(cfg.ejection_threshold > 1.0, "ejection_threshold", "> 1", cfg.ejection_threshold);
    require(cfg.workers >= 1, "workers", ">= 1", static_cast<double>(cfg.workers));
    require(cfg.floquet_q > 0.0, "floquet_q", "> 0", cfg.floquet_q);
    require(cfg.floquet_h >= 0.0, "floquet_h", ">= 0", cfg.floquet_h);
    require(cfg.floquet_omega_min > 0.0, "floquet_omega_min", "> 0", cfg.floquet_omega_min);
    require(cfg.floquet_omega_max == 0.0 || cfg.floquet_omega_max > cfg.floquet_omega_min,
            "floquet_omega_max", "0 (single point) or > floquet_omega_min",
            cfg.floquet_omega_max);
    require(cfg.floquet_points >= 1, "floquet_points", ">= 1",
            static_cast<double>(cfg.floquet_points));
    require(cfg.floquet_omega_max == 0.0 || cfg.floquet_points >= 2, "floquet_points",
            ">= 2 when floquet_omega_max sets a range",
            static_cast<double>(cfg.floquet_points));
    require(cfg.dirac_samples >= 1, "dirac_samples", ">= 1",
            static_cast<double>(cfg.dirac_samples));

    // cross-check the constant set is actually constructible
    (void)constants_by_name(cfg.constants);
    return cfg;
}

std::string serialize_config(const RunConfig& cfg) {
    json j;
    j["constants"] = cfg.constants;
    j["d_angstrom"] = cfg.d_angstrom;
    j["Z"] = cfg.Z;
    j["crystal_length_angstrom"] = cfg.crystal_length_angstrom;
    j["r0_angstrom"] = cfg.r0_angstrom;
    j["p_mev"] = cfg.p_mev;
    j["mode"] = cfg.mode;
    j["field"] = cfg.field;
    j["uniform_field"] = cfg.uniform_field;
    j["periods"] = cfg.periods;
    j["steps_per_period"] = cfg.steps_per_period;
    j["stride"] = cfg.stride;
    j["tol_invariant"] = cfg.tol_invariant;
    j["p_min_mev"] = cfg.p_min_mev;
    j["p_max_mev"] = cfg.p_max_mev;
    j["scan_steps"] = cfg.scan_steps;
    j["scan_order"] = cfg.scan_order;
    j["ejection_threshold"] = cfg.ejection_threshold;
    j["workers"] = cfg.workers;
    j["floquet_q"] = cfg.floquet_q;
    j["floquet_h"] = cfg.floquet_h;
    j["floquet_omega_min"] = cfg.floquet_omega_min;
    j["floquet_omega_max"] = cfg.floquet_omega_max;
    j["floquet_points"] = cfg.floquet_points;
    j["dirac_samples"] = cfg.dirac_samples;
    j["units"] = cfg.units;
    j["out_dir"] = cfg.out_dir;
    return j.dump(2) + "\n";
}

std::uint64_t config_hash(const RunConfig& cfg) {
    // The hash labels the run content. Where the files land and how many
    // workers computed the rows do not change a single output byte (scan
    // results are gathered in input order), so both are pinned to their
    // defaults before hashing.
    RunConfig content = cfg;
    content.out_dir = RunConfig{}.out_dir;
    content.workers = RunConfig{}.workers;
    const std::string canon = serialize_config(content);
    std::uint64_t h = 14695981039346656037ull;
    for (const unsigned char ch : canon) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash_hex(const RunConfig& cfg) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = config_hash(cfg);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

}  // namespace zbw::io
