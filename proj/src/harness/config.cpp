#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "latfkg/convergence.hpp"
#include "latfkg/frac_laplacian.hpp"
#include "latfkg/harness.hpp"

#ifndef LATFKG_VERSION
#define LATFKG_VERSION "0.0.0"
#endif

namespace latfkg::harness {

namespace {

std::string summarize(const std::vector<FieldError>& errors) {
  std::ostringstream out;
  out << "invalid config:";
  for (const auto& e : errors) out << "\n  " << (e.path.empty() ? "<root>" : e.path) << ": " << e.message;
  return out.str();
}

std::string child(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

std::string element(const std::string& prefix, std::size_t i) {
  return prefix + "[" + std::to_string(i) + "]";
}

class Checker {
 public:
  void add(const std::string& path, const std::string& message) {
    errors_.push_back({path, message});
  }
  const std::vector<FieldError>& errors() const { return errors_; }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    add(path, "must be an object");
    return false;
  }

  void only(const json& obj, const std::string& prefix, const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) add(child(prefix, key), "unknown key");
    }
  }

  std::optional<double> number(const json& obj, const std::string& prefix, const std::string& key,
                               std::optional<double> fallback = std::nullopt) {
    const std::string path = child(prefix, key);
    if (!obj.contains(key)) {
      if (!fallback) add(path, "is required");
      return fallback;
    }
    return number_value(obj.at(key), path);
  }

  std::optional<double> number_value(const json& v, const std::string& path) {
    if (!v.is_number()) {
      add(path, "must be a number");
      return std::nullopt;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
      add(path, "must be finite");
      return std::nullopt;
    }
    return x;
  }

  std::optional<long long> integer(const json& obj, const std::string& prefix,
                                   const std::string& key,
                                   std::optional<long long> fallback = std::nullopt) {
    const std::string path = child(prefix, key);
    if (!obj.contains(key)) {
      if (!fallback) add(path, "is required");
      return fallback;
    }
    return integer_value(obj.at(key), path);
  }

  std::optional<long long> integer_value(const json& v, const std::string& path) {
    if (v.is_number_integer()) return v.get<long long>();
    if (v.is_number_float()) {
      const double x = v.get<double>();
      if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9.0e15) {
        return static_cast<long long>(x);
      }
    }
    add(path, "must be an integer");
    return std::nullopt;
  }

  std::optional<std::string> string(const json& obj, const std::string& prefix,
                                    const std::string& key,
                                    std::optional<std::string> fallback = std::nullopt) {
    const std::string path = child(prefix, key);
    if (!obj.contains(key)) {
      if (!fallback) add(path, "is required");
      return fallback;
    }
    if (!obj.at(key).is_string()) {
      add(path, "must be a string");
      return std::nullopt;
    }
    return obj.at(key).get<std::string>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& prefix, const std::string& key,
                              bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean()) {
      add(child(prefix, key), "must be true or false");
      return std::nullopt;
    }
    return obj.at(key).get<bool>();
  }

  // Real vector of length `dim`, zeros when absent.
  std::optional<std::vector<double>> vector(const json& obj, const std::string& prefix,
                                            const std::string& key, std::optional<int> dim) {
    const std::string path = child(prefix, key);
    if (!obj.contains(key)) {
      if (!dim) return std::nullopt;
      return std::vector<double>(*dim, 0.0);
    }
    const json& v = obj.at(key);
    if (!v.is_array()) {
      add(path, "must be an array of numbers");
      return std::nullopt;
    }
    if (dim && static_cast<int>(v.size()) != *dim) {
      add(path, "must have " + std::to_string(*dim) + " entries");
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto x = number_value(v[i], element(path, i));
      ok = ok && x.has_value();
      out.push_back(x.value_or(0.0));
    }
    if (!ok) return std::nullopt;
    return out;
  }

 private:
  std::vector<FieldError> errors_;
};

bool is_plain_filename(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  return name.find('/') == std::string::npos && name.find('\\') == std::string::npos;
}

void common(Checker& c, const json& in, json& out) {
  if (in.contains("seed") && in.at("seed").is_number_unsigned()) {
    out["seed"] = in.at("seed").get<std::uint64_t>();
  } else if (auto seed = c.integer(in, "", "seed", 0)) {
    if (*seed < 0) {
      c.add("seed", "must be a nonnegative integer");
    } else {
      out["seed"] = static_cast<std::uint64_t>(*seed);
    }
  }
  if (auto v = c.string(in, "", "version", tool_version())) out["version"] = *v;
}

void output_name(Checker& c, const json& in, json& out, const std::string& fallback) {
  if (auto name = c.string(in, "", "out", fallback)) {
    if (!is_plain_filename(*name)) {
      c.add("out", "must be a file name inside the output directory");
    } else {
      out["out"] = *name;
    }
  }
}

std::optional<double> alpha_field(Checker& c, const json& in, json& out,
                                  const std::string& key = "alpha") {
  auto a = c.number(in, "", key);
  if (!a) return std::nullopt;
  if (!(*a > 0.0 && *a <= 1.0)) {
    c.add(key, "must satisfy 0 < alpha <= 1");
    return std::nullopt;
  }
  out[key] = *a;
  return a;
}

std::optional<int> dim_field(Checker& c, const json& in, json& out, const std::string& key,
                             std::optional<long long> fallback = std::nullopt) {
  auto d = c.integer(in, "", key, fallback);
  if (!d) return std::nullopt;
  if (*d < 1 || *d > 3) {
    c.add(key, "must be 1, 2 or 3");
    return std::nullopt;
  }
  out[key] = *d;
  return static_cast<int>(*d);
}

struct LatticeFields {
  std::optional<int> n;
  std::optional<int> points;
  std::optional<double> hbar;
};

LatticeFields lattice_fields(Checker& c, const json& in, json& out) {
  LatticeFields f;
  f.n = dim_field(c, in, out, "n");
  if (auto points = c.integer(in, "", "N")) {
    if (*points < 2 || *points % 2 != 0) {
      c.add("N", "must be an even integer >= 2 (sites run over -N/2..N/2-1 and the dual grid must reach the Nyquist frequency)");
    } else if (*points > (1 << 22)) {
      c.add("N", "is too large");
    } else {
      f.points = static_cast<int>(*points);
      out["N"] = *points;
    }
  }
  if (f.n && f.points && std::pow(static_cast<double>(*f.points), *f.n) > 1.0e8) {
    c.add("N", "N^n exceeds 1e8 sites");
    f.points.reset();
  }
  if (auto h = c.number(in, "", "hbar")) {
    if (!(*h > 0.0)) {
      c.add("hbar", "must be positive");
    } else {
      f.hbar = h;
      out["hbar"] = *h;
    }
  }
  return f;
}

json mass_field(Checker& c, const json& in, const std::string& path, bool allow_file) {
  if (!c.object(in, path)) return nullptr;
  const std::set<std::string> kinds = allow_file ? std::set<std::string>{"const", "file", "bump"}
                                                 : std::set<std::string>{"const", "bump"};
  c.only(in, path, kinds);
  int present = 0;
  for (const auto& k : kinds) present += in.contains(k) ? 1 : 0;
  if (present != 1) {
    c.add(path, allow_file ? "must have exactly one of const, file, bump"
                           : "must have exactly one of const, bump");
    return nullptr;
  }
  json out = json::object();
  if (in.contains("const")) {
    auto m = c.number(in, path, "const");
    if (m && *m < 0.0) c.add(child(path, "const"), "mass must be nonnegative");
    if (m && *m >= 0.0) out["const"] = *m;
  } else if (in.contains("file")) {
    if (auto f = c.string(in, path, "file")) out["file"] = *f;
  } else {
    const std::string bp = child(path, "bump");
    const json& b = in.at("bump");
    if (!c.object(b, bp)) return nullptr;
    c.only(b, bp, {"base", "amplitude", "width"});
    json bo = json::object();
    auto base = c.number(b, bp, "base", 1.0);
    auto amp = c.number(b, bp, "amplitude", 1.0);
    auto width = c.number(b, bp, "width", 1.0);
    if (base && *base < 0.0) c.add(child(bp, "base"), "must be nonnegative");
    if (amp && *amp < 0.0) c.add(child(bp, "amplitude"), "must be nonnegative");
    if (width && !(*width > 0.0)) c.add(child(bp, "width"), "must be positive");
    if (base) bo["base"] = *base;
    if (amp) bo["amplitude"] = *amp;
    if (width) bo["width"] = *width;
    out["bump"] = bo;
  }
  return out;
}

json field_source(Checker& c, const json& in, const std::string& path, const LatticeFields& lat) {
  if (!c.object(in, path)) return nullptr;
  json out = json::object();
  if (in.contains("file") == in.contains("builtin")) {
    c.add(path, "must have exactly one of file, builtin");
    return nullptr;
  }
  if (in.contains("file")) {
    c.only(in, path, {"file"});
    if (auto f = c.string(in, path, "file")) out["file"] = *f;
    return out;
  }
  auto kind = c.string(in, path, "builtin");
  if (!kind) return nullptr;
  out["builtin"] = *kind;
  const std::optional<int> dim = lat.n;
  if (*kind == "zero") {
    c.only(in, path, {"builtin"});
  } else if (*kind == "gaussian") {
    c.only(in, path, {"builtin", "center", "width", "amplitude", "wavenumber"});
    auto center = c.vector(in, path, "center", dim);
    auto wave = c.vector(in, path, "wavenumber", dim);
    auto width = c.number(in, path, "width", 1.0);
    auto amp = c.number(in, path, "amplitude", 1.0);
    if (width && !(*width > 0.0)) c.add(child(path, "width"), "must be positive");
    if (center) out["center"] = *center;
    if (wave) out["wavenumber"] = *wave;
    if (width) out["width"] = *width;
    if (amp) out["amplitude"] = *amp;
  } else if (*kind == "planewave") {
    c.only(in, path, {"builtin", "m", "amplitude"});
    const std::string mp = child(path, "m");
    if (!in.contains("m")) {
      c.add(mp, "is required");
    } else if (!in.at("m").is_array() || (dim && static_cast<int>(in.at("m").size()) != *dim)) {
      c.add(mp, dim ? "must be an array of " + std::to_string(*dim) + " integers"
                    : "must be an array of integers");
    } else {
      std::vector<long long> m;
      bool ok = true;
      for (std::size_t i = 0; i < in.at("m").size(); ++i) {
        auto v = c.integer_value(in.at("m")[i], element(mp, i));
        if (!v) {
          ok = false;
          continue;
        }
        if (lat.points && (*v < -*lat.points / 2 || *v >= *lat.points / 2)) {
          c.add(element(mp, i), "must lie in [-N/2, N/2)");
          ok = false;
        }
        m.push_back(*v);
      }
      if (ok) out["m"] = m;
    }
    if (auto amp = c.number(in, path, "amplitude", 1.0)) out["amplitude"] = *amp;
  } else if (*kind == "random") {
    c.only(in, path, {"builtin", "amplitude"});
    if (auto amp = c.number(in, path, "amplitude", 1.0)) out["amplitude"] = *amp;
  } else {
    c.add(child(path, "builtin"), "must be one of gaussian, planewave, random, zero");
  }
  return out;
}

json validate_coeffs(Checker& c, const json& in) {
  json out = json::object();
  c.only(in, "", {"alpha", "dim", "radius", "quad_points", "out", "seed", "version"});
  alpha_field(c, in, out);
  auto dim = dim_field(c, in, out, "dim");
  auto radius = c.integer(in, "", "radius");
  if (radius && *radius < 0) c.add("radius", "must be nonnegative");
  if (radius && *radius >= 0) out["radius"] = *radius;
  std::optional<long long> fallback;
  if (dim) fallback = default_quad_points(*dim);
  // without a valid dim there is no default to report as missing
  std::optional<long long> qp;
  if (dim || in.contains("quad_points")) qp = c.integer(in, "", "quad_points", fallback);
  if (qp) {
    const bool pow2 = *qp >= 64 && *qp <= (1 << 20) && (*qp & (*qp - 1)) == 0;
    if (!pow2) {
      c.add("quad_points", "must be a power of two between 64 and 2^20");
    } else if (radius && *radius > *qp / 8) {
      c.add("radius", "must not exceed quad_points / 8");
    } else if (dim && std::pow(static_cast<double>(*qp), *dim) > 1.0e8) {
      c.add("quad_points", "quad_points^dim exceeds 1e8 nodes");
    } else {
      out["quad_points"] = *qp;
    }
  }
  output_name(c, in, out, "coeffs.csv");
  return out;
}

json validate_solve(Checker& c, const json& in) {
  json out = json::object();
  c.only(in, "", {"n", "N", "hbar", "alpha", "T", "dt", "record_every", "mass", "forcing", "u0",
                  "u1", "seed", "version"});
  const auto lat = lattice_fields(c, in, out);
  alpha_field(c, in, out);
  auto t = c.number(in, "", "T");
  if (t && !(*t > 0.0)) c.add("T", "must be positive");
  if (t && *t > 0.0) {
    out["T"] = *t;
    auto dt = c.number(in, "", "dt", *t / 1024.0);
    if (dt && !(*dt > 0.0)) {
      c.add("dt", "must be positive");
    } else if (dt) {
      const double steps = *t / *dt;
      if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps) || steps > 1e8) {
        c.add("dt", "must divide T into an integer number of steps");
      } else {
        out["dt"] = *dt;
      }
    }
  }
  if (auto every = c.integer(in, "", "record_every", 16)) {
    if (*every < 1) {
      c.add("record_every", "must be >= 1");
    } else {
      out["record_every"] = *every;
    }
  }
  if (!in.contains("mass")) {
    c.add("mass", "is required");
  } else {
    out["mass"] = mass_field(c, in.at("mass"), "mass", true);
  }
  if (!in.contains("forcing") || in.at("forcing") == "zero") {
    out["forcing"] = "zero";
  } else if (in.at("forcing").is_object()) {
    const json& f = in.at("forcing");
    c.only(f, "forcing", {"file"});
    if (auto file = c.string(f, "forcing", "file")) out["forcing"] = json{{"file", *file}};
  } else {
    c.add("forcing", "must be \"zero\" or {\"file\": path}");
  }
  for (const char* key : {"u0", "u1"}) {
    if (!in.contains(key)) {
      c.add(key, "is required");
    } else {
      out[key] = field_source(c, in.at(key), key, lat);
    }
  }
  common(c, in, out);
  return out;
}

json validate_symbol_gap(Checker& c, const json& in) {
  json out = json::object();
  c.only(in, "", {"alpha", "hbar", "n", "N", "out", "seed", "version"});
  lattice_fields(c, in, out);
  alpha_field(c, in, out);
  output_name(c, in, out, "symbol_gap.csv");
  return out;
}

json validate_energy(Checker& c, const json& in) {
  json out = json::object();
  c.only(in, "", {"n", "N", "hbar", "alpha", "mass", "u", "du", "out", "seed", "version"});
  const auto lat = lattice_fields(c, in, out);
  alpha_field(c, in, out);
  if (!in.contains("mass")) {
    out["mass"] = json{{"const", 0.0}};
  } else {
    out["mass"] = mass_field(c, in.at("mass"), "mass", true);
  }
  if (!in.contains("u")) {
    c.add("u", "is required");
  } else {
    out["u"] = field_source(c, in.at("u"), "u", lat);
  }
  out["du"] = in.contains("du") ? field_source(c, in.at("du"), "du", lat)
                                : json{{"builtin", "zero"}};
  output_name(c, in, out, "energy.csv");
  return out;
}

json profile(Checker& c, const json& in, const std::string& path, std::optional<int> dim) {
  if (!c.object(in, path)) return nullptr;
  json out = json::object();
  auto kind = c.string(in, path, "kind", "gaussian");
  if (!kind) return nullptr;
  out["kind"] = *kind;
  if (*kind == "zero") {
    c.only(in, path, {"kind"});
    return out;
  }
  if (*kind != "gaussian" && *kind != "constant") {
    c.add(child(path, "kind"), "must be one of gaussian, constant, zero");
    return nullptr;
  }
  auto cutoff = c.number(in, path, "cutoff");
  if (cutoff && !(*cutoff > 0.0)) c.add(child(path, "cutoff"), "must be positive");
  if (cutoff && *cutoff > 0.0) out["cutoff"] = *cutoff;
  if (auto points = c.integer(in, path, "points", 256)) {
    if (*points < 8 || *points % 2 != 0 || *points > 8192) {
      c.add(child(path, "points"), "must be an even integer in [8, 8192]");
    } else {
      out["points"] = *points;
    }
  }
  if (*kind == "constant") {
    c.only(in, path, {"kind", "cutoff", "points", "value"});
    if (auto v = c.number(in, path, "value", 1.0)) out["value"] = *v;
    return out;
  }
  c.only(in, path,
         {"kind", "cutoff", "points", "width", "carrier", "symmetric", "amplitude", "taper_fraction"});
  auto width = c.number(in, path, "width", 0.08);
  if (width && !(*width > 0.0)) c.add(child(path, "width"), "must be positive");
  if (width && *width > 0.0) out["width"] = *width;
  if (auto carrier = c.vector(in, path, "carrier", dim)) out["carrier"] = *carrier;
  if (auto sym = c.boolean(in, path, "symmetric", true)) out["symmetric"] = *sym;
  if (auto amp = c.number(in, path, "amplitude", 1.0)) out["amplitude"] = *amp;
  if (auto taper = c.number(in, path, "taper_fraction", 0.1)) {
    if (!(*taper > 0.0 && *taper < 0.5)) {
      c.add(child(path, "taper_fraction"), "must lie in (0, 0.5)");
    } else {
      out["taper_fraction"] = *taper;
    }
  }
  return out;
}

json validate_converge(Checker& c, const json& in) {
  json out = json::object();
  c.only(in, "", {"alpha", "dim", "mass", "T", "hbar_list", "box_length", "time_steps",
                  "reference_refinements", "u0", "u1", "out", "seed", "version"});
  alpha_field(c, in, out);
  auto dim = dim_field(c, in, out, "dim", 1);
  out["mass"] = in.contains("mass") ? mass_field(c, in.at("mass"), "mass", false)
                                    : json{{"const", 1.0}};
  if (auto t = c.number(in, "", "T", 1.0)) {
    if (!(*t > 0.0)) {
      c.add("T", "must be positive");
    } else {
      out["T"] = *t;
    }
  }
  if (auto steps = c.integer(in, "", "time_steps", 1024)) {
    if (*steps < 1 || *steps > 1000000) {
      c.add("time_steps", "must lie in [1, 1e6]");
    } else {
      out["time_steps"] = *steps;
    }
  }
  if (auto refs = c.integer(in, "", "reference_refinements", 2)) {
    if (*refs < 0 || *refs > 4) {
      c.add("reference_refinements", "must lie in [0, 4]");
    } else {
      out["reference_refinements"] = *refs;
    }
  }
  std::optional<double> box = c.number(in, "", "box_length");
  if (box && !(*box > 0.0)) {
    c.add("box_length", "must be positive");
    box.reset();
  }
  if (box) out["box_length"] = *box;

  std::vector<double> hbars;
  bool hbars_ok = false;
  if (!in.contains("hbar_list")) {
    c.add("hbar_list", "is required");
  } else if (!in.at("hbar_list").is_array() || in.at("hbar_list").empty()) {
    c.add("hbar_list", "must be a nonempty array of numbers");
  } else {
    hbars_ok = true;
    const json& list = in.at("hbar_list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      auto h = c.number_value(list[i], element("hbar_list", i));
      if (!h || !(*h > 0.0)) {
        if (h) c.add(element("hbar_list", i), "must be positive");
        hbars_ok = false;
        continue;
      }
      if (!hbars.empty() && !(*h < hbars.back())) {
        c.add(element("hbar_list", i), "hbar_list must be strictly decreasing");
        hbars_ok = false;
      }
      hbars.push_back(*h);
    }
    if (hbars_ok) out["hbar_list"] = hbars;
  }

  if (!in.contains("u0")) {
    c.add("u0", "is required");
  } else {
    out["u0"] = profile(c, in.at("u0"), "u0", dim);
  }
  out["u1"] = in.contains("u1") ? profile(c, in.at("u1"), "u1", dim) : json{{"kind", "zero"}};

  const json& u0 = out["u0"];
  const json& u1 = out["u1"];
  if (u0.is_object() && u0.value("kind", "") == "zero") {
    c.add("u0.kind", "u0 must carry a grid; use a constant profile with value 0 for zero data");
  }
  if (u0.is_object() && u1.is_object() && u1.value("kind", "") != "zero" &&
      u0.contains("cutoff") && u1.contains("cutoff") &&
      (u0["cutoff"] != u1["cutoff"] || u0.value("points", 0) != u1.value("points", 0))) {
    c.add("u1", "must use the same cutoff and points as u0");
  }
  if (hbars_ok && box) {
    for (std::size_t i = 0; i < hbars.size(); ++i) {
      try {
        points_for(*box, hbars[i]);
      } catch (const std::invalid_argument&) {
        c.add(element("hbar_list", i), "box_length / hbar must be an even integer");
      }
      if (u0.is_object() && u0.contains("cutoff") &&
          u0["cutoff"].get<double>() > 0.5 / hbars[i] * (1.0 + 1e-12)) {
        c.add(element("hbar_list", i),
              "violates Nyquist: need hbar <= 1 / (2 cutoff) = " +
                  format_double(0.5 / u0["cutoff"].get<double>()));
      }
    }
    const bool variable = out["mass"].is_object() && out["mass"].contains("bump");
    if (variable) {
      for (std::size_t i = 1; i < hbars.size(); ++i) {
        if (std::abs(hbars[i - 1] / hbars[i] - 2.0) > 1e-9) {
          c.add(element("hbar_list", i), "variable mass needs a dyadic hbar_list (ratio 2)");
        }
      }
      if (out.contains("reference_refinements")) {
        const double finest =
            hbars.back() / std::pow(2.0, out["reference_refinements"].get<int>());
        try {
          points_for(*box, finest);
        } catch (const std::invalid_argument&) {
          c.add("reference_refinements", "reference lattice needs box_length / hbar even");
        }
      }
    }
  }
  output_name(c, in, out, "converge.csv");
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<FieldError> errors)
    : std::runtime_error(summarize(errors)), errors_(std::move(errors)) {}

std::string tool_version() { return LATFKG_VERSION; }

std::optional<Subcommand> parse_subcommand(const std::string& name) {
  if (name == "coeffs") return Subcommand::coeffs;
  if (name == "solve") return Subcommand::solve;
  if (name == "symbol-gap") return Subcommand::symbol_gap;
  if (name == "converge") return Subcommand::converge;
  if (name == "energy") return Subcommand::energy;
  return std::nullopt;
}

std::string subcommand_name(Subcommand cmd) {
  switch (cmd) {
    case Subcommand::coeffs: return "coeffs";
    case Subcommand::solve: return "solve";
    case Subcommand::symbol_gap: return "symbol-gap";
    case Subcommand::converge: return "converge";
    case Subcommand::energy: return "energy";
  }
  return "?";
}

json validate(Subcommand cmd, const json& config) {
  Checker c;
  if (!config.is_object()) {
    c.add("", "config must be a JSON object");
    throw ConfigError(c.errors());
  }
  json out;
  switch (cmd) {
    case Subcommand::coeffs: out = validate_coeffs(c, config); break;
    case Subcommand::solve: out = validate_solve(c, config); break;
    case Subcommand::symbol_gap: out = validate_symbol_gap(c, config); break;
    case Subcommand::converge: out = validate_converge(c, config); break;
    case Subcommand::energy: out = validate_energy(c, config); break;
  }
  if (cmd != Subcommand::solve) common(c, config, out);
  if (!c.errors().empty()) throw ConfigError(c.errors());
  return out;
}

}  // namespace latfkg::harness
