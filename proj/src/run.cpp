#include "lightcone/run.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>
#include <thread>

#include "lightcone/errors.hpp"

namespace lightcone {
namespace {

namespace fs = std::filesystem;

std::string lowercase(const std::string& s) {
  std::string u;
  u.reserve(s.size());
  for (char c : s)
    u.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return u;
}

// Convention: backticks around a key mean the message already names its key;
// apply_key uses that to avoid double-prefixing when it rethrows.
[[noreturn]] void bad_key(const std::string& key, const std::string& detail) {
  throw invalid_input_error("config key `" + key + "`: " + detail);
}

// Strict scalar parses: the whole token must be consumed.
double to_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (s.empty() || pos != s.size())
    throw invalid_input_error("expected a number, got \"" + s + "\"");
  return v;
}

long long to_ll(const std::string& s) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = std::string::npos;
  }
  if (s.empty() || pos != s.size())
    throw invalid_input_error("expected an integer, got \"" + s + "\"");
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_ll(s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
    throw invalid_input_error("integer out of range: " + s);
  return static_cast<int>(v);
}

// Keeps empty fields so "1,2," is rejected downstream instead of ignored.
std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

Metric parse_metric(const std::string& s) {
  const std::string u = lowercase(s);
  if (u == "euclidean") return Metric::euclidean;
  if (u == "graph") return Metric::graph;
  throw invalid_input_error("unknown metric '" + s + "'");
}

std::string metric_name(Metric m) {
  return m == Metric::euclidean ? "euclidean" : "graph";
}

CouplingPart parse_part(const std::string& s) {
  const std::string u = lowercase(s);
  if (u == "full") return CouplingPart::full;
  if (u == "short_range") return CouplingPart::short_range;
  if (u == "long_range") return CouplingPart::long_range;
  throw invalid_input_error("unknown coupling part '" + s + "'");
}

std::string part_name(CouplingPart p) {
  switch (p) {
    case CouplingPart::full: return "full";
    case CouplingPart::short_range: return "short_range";
    case CouplingPart::long_range: return "long_range";
  }
  throw invalid_input_error("part_name: bad enum value");
}

std::string pauli_name(PauliKind k) {
  switch (k) {
    case PauliKind::X: return "X";
    case PauliKind::Y: return "Y";
    case PauliKind::Z: return "Z";
  }
  throw invalid_input_error("pauli_name: bad enum value");
}

std::string interaction_name(Interaction i) {
  switch (i) {
    case Interaction::XX: return "XX";
    case Interaction::ZZ: return "ZZ";
    case Interaction::XY: return "XY";
  }
  throw invalid_input_error("interaction_name: bad enum value");
}

std::string cutoff_mode_name(CutoffMode m) {
  return m == CutoffMode::scaling ? "scaling" : "numeric";
}

std::string method_name(EvolveMethod m) {
  return m == EvolveMethod::dense_expm ? "dense_expm" : "krylov";
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += format_double(v[i]);
  }
  return out;
}

// Canonical form of a grid key: the grid string as typed when there is one,
// otherwise the values spelled back out (configs built in code, not parsed).
std::string grid_field(const std::string& spec, const std::vector<double>& v) {
  return spec.empty() ? join_doubles(v) : spec;
}

std::string int_field(const std::string& spec, const std::vector<int>& v) {
  if (!spec.empty()) return spec;
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(v[i]);
  }
  return out;
}

struct LatticeRequest {
  bool infinite = false;
  std::vector<int> extents;
};

LatticeRequest parse_lattice_request(const std::string& spec) {
  LatticeRequest req;
  if (spec == "infinite") {
    req.infinite = true;
    return req;
  }
  if (spec.rfind("chain:", 0) == 0) {
    req.extents = {to_int(spec.substr(6))};
    return req;
  }
  if (spec.rfind("grid:", 0) == 0) {
    for (const std::string& f : split(spec.substr(5), 'x'))
      req.extents.push_back(to_int(f));
    if (req.extents.empty() || req.extents.size() > 3)
      throw invalid_input_error("grid lattices have 1 to 3 extents, got \"" +
                                spec + "\"");
    return req;
  }
  throw invalid_input_error(
      "lattice must be chain:N, grid:AxB[xC], or infinite, got \"" + spec +
      "\"");
}

LatticeRequest lattice_request_for(const RunConfig& c) {
  try {
    return parse_lattice_request(c.lattice);
  } catch (const std::exception& e) {
    bad_key("lattice", e.what());
  }
}

}  // namespace

Command parse_command(const std::string& s) {
  const std::string u = lowercase(s);
  if (u == "simulate") return Command::simulate;
  if (u == "bound") return Command::bound;
  if (u == "front") return Command::front;
  if (u == "verify") return Command::verify;
  if (u == "sweep") return Command::sweep;
  throw invalid_input_error("unknown command '" + s + "'");
}

std::string command_name(Command c) {
  switch (c) {
    case Command::simulate: return "simulate";
    case Command::bound: return "bound";
    case Command::front: return "front";
    case Command::verify: return "verify";
    case Command::sweep: return "sweep";
  }
  throw invalid_input_error("command_name: bad enum value");
}

std::vector<double> parse_grid(const std::string& spec) {
  if (spec.empty()) throw invalid_input_error("empty grid spec");
  constexpr double kMaxPoints = 1e7;
  const auto fields = split(spec, ':');
  if (fields[0] == "lin") {
    if (fields.size() != 4)
      throw invalid_input_error("lin grid wants lin:start:stop:step, got \"" +
                                spec + "\"");
    const double start = to_double(fields[1]);
    const double stop = to_double(fields[2]);
    const double step = to_double(fields[3]);
    if (!(step > 0) || !(stop >= start))
      throw invalid_input_error(
          "lin grid wants step > 0 and stop >= start, got \"" + spec + "\"");
    const double span = (stop - start) / step;
    if (!(span < kMaxPoints))
      throw invalid_input_error("grid too large: \"" + spec + "\"");
    const std::size_t n = static_cast<std::size_t>(std::floor(span + 1e-9));
    std::vector<double> out(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
      out[k] = start + static_cast<double>(k) * step;
    // land exactly on stop when the step divides the span
    if (std::abs(out.back() - stop) <= 1e-9 * std::max(1.0, std::abs(stop)))
      out.back() = stop;
    return out;
  }
  if (fields[0] == "log") {
    if (fields.size() != 4)
      throw invalid_input_error("log grid wants log:lo:hi:count, got \"" +
                                spec + "\"");
    const double lo = to_double(fields[1]);
    const double hi = to_double(fields[2]);
    const long long count = to_ll(fields[3]);
    if (!(lo > 0) || !(hi > lo))
      throw invalid_input_error("log grid wants 0 < lo < hi, got \"" + spec +
                                "\"");
    if (count < 2 || static_cast<double>(count) > kMaxPoints)
      throw invalid_input_error("log grid wants 2 <= count <= 1e7, got \"" +
                                spec + "\"");
    std::vector<double> out(static_cast<std::size_t>(count));
    const double lr = std::log(hi / lo);
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = lo * std::exp(lr * static_cast<double>(k) /
                             static_cast<double>(count - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
  }
  std::vector<double> out;
  for (const std::string& f : split(spec, ',')) out.push_back(to_double(f));
  return out;
}

std::vector<int> parse_int_list(const std::string& spec) {
  if (spec.empty()) throw invalid_input_error("empty integer list");
  constexpr std::size_t kMaxPoints = 1000000;
  std::vector<int> out;
  for (const std::string& f : split(spec, ',')) {
    // a dash past position 0 is a range separator; position 0 is a sign
    const std::size_t dash = f.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(to_int(f));
      continue;
    }
    const int lo = to_int(f.substr(0, dash));
    const int hi = to_int(f.substr(dash + 1));
    if (hi < lo)
      throw invalid_input_error("descending range \"" + f + "\"");
    if (out.size() + static_cast<std::size_t>(hi - lo) + 1 > kMaxPoints)
      throw invalid_input_error("integer list too large");
    for (int x = lo; x <= hi; ++x) out.push_back(x);
  }
  return out;
}

namespace {

void apply_key(RunConfig& c, const std::string& key, const std::string& raw) {
  try {
    if (key == "lattice") c.lattice = raw;
    else if (key == "metric") c.metric = parse_metric(raw);
    else if (key == "alpha") c.alpha = to_double(raw);
    else if (key == "j0") c.j0 = to_double(raw);
    else if (key == "chi") c.chi = to_double(raw);
    else if (key == "interaction") c.interaction = parse_interaction(raw);
    else if (key == "coupling_part") c.part = parse_part(raw);
    else if (key == "a_kind") c.a_kind = parse_pauli_kind(raw);
    else if (key == "b_kind") c.b_kind = parse_pauli_kind(raw);
    else if (key == "source") c.source = to_int(raw);
    else if (key == "probes") { c.probes = parse_int_list(raw); c.probes_spec = raw; }
    else if (key == "times") { c.times = parse_grid(raw); c.times_spec = raw; }
    else if (key == "rs") { c.rs = parse_grid(raw); c.rs_spec = raw; }
    else if (key == "variant") c.variant = parse_bound_variant(raw);
    else if (key == "cutoff_mode") c.mode = parse_cutoff_mode(raw);
    else if (key == "g") c.g = to_double(raw);
    else if (key == "epsilon") c.epsilon = to_double(raw);
    else if (key == "fit_rmin") c.fit_rmin = to_double(raw);
    else if (key == "fit_rmax") c.fit_rmax = to_double(raw);
    else if (key == "betas") { c.betas = parse_grid(raw); c.betas_spec = raw; }
    else if (key == "radius") c.radius = to_double(raw);
    else if (key == "ql_sites") c.ql_sites = to_int(raw);
    else if (key == "ql_times") { c.ql_times = parse_grid(raw); c.ql_times_spec = raw; }
    else if (key == "method") c.method = parse_evolve_method(raw);
    else if (key == "outdir") c.outdir = raw;
    else if (key == "workers") c.workers = to_int(raw);
    else if (key == "seed") c.seed = to_ll(raw);
    else if (key == "sweep_key") c.sweep_key = raw;
    else if (key == "sweep_values") { c.sweep_values = parse_grid(raw); c.sweep_values_spec = raw; }
    else if (key == "sweep_command") c.sweep_command = raw;
    else throw invalid_input_error("unknown config key `" + key + "`");
  } catch (const invalid_input_error& e) {
    const std::string what = e.what();
    if (what.find('`') != std::string::npos) throw;
    bad_key(key, what);
  }
}

void check_grid_values(const std::string& key, const std::vector<double>& v,
                       double lo, bool open) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) bad_key(key, "values must be finite");
    if (open ? !(v[i] > lo) : !(v[i] >= lo))
      bad_key(key, "values must be " + std::string(open ? "> " : ">= ") +
                       format_double(lo));
    if (i > 0 && !(v[i] > v[i - 1]))
      bad_key(key, "values must be strictly ascending");
  }
}

RunConfig sweep_child(const RunConfig& parent, double value) {
  RunConfig kid = parent;
  try {
    kid.command = parse_command(parent.sweep_command);
  } catch (const std::exception& e) {
    bad_key("sweep_command", e.what());
  }
  kid.sweep_key.clear();
  kid.sweep_values.clear();
  kid.sweep_values_spec.clear();
  kid.sweep_command.clear();
  kid.workers = 1;  // parallelism lives in the parent's pool
  const std::string& key = parent.sweep_key;
  if (key == "alpha") kid.alpha = value;
  else if (key == "j0") kid.j0 = value;
  else if (key == "chi") kid.chi = value;
  else if (key == "g") kid.g = value;
  else if (key == "epsilon") kid.epsilon = value;
  else if (key == "radius") kid.radius = value;
  else if (key == "fit_rmin") kid.fit_rmin = value;
  else if (key == "fit_rmax") kid.fit_rmax = value;
  else bad_key("sweep_key", "`" + key + "` is not a sweepable scalar");
  return kid;
}

void validate_config(const RunConfig& c) {
  if (!(c.j0 > 0) || !std::isfinite(c.j0)) bad_key("j0", "must be > 0");
  if (!(c.chi >= 1) || !std::isfinite(c.chi)) bad_key("chi", "must be >= 1");
  if (!(c.epsilon > 0) || !(c.epsilon < 2))
    bad_key("epsilon", "must lie in (0, 2)");
  if (c.g < 0 || !std::isfinite(c.g))
    bad_key("g", "must be >= 0 (0 fits the reference geometry)");
  if (!(c.radius > 0) || !std::isfinite(c.radius))
    bad_key("radius", "must be > 0");
  if (c.fit_rmin < 0) bad_key("fit_rmin", "must be >= 0");
  if (c.fit_rmax < 0) bad_key("fit_rmax", "must be >= 0");
  if (c.fit_rmin > 0 && c.fit_rmax > 0 && !(c.fit_rmin < c.fit_rmax))
    bad_key("fit_rmax", "conflicts with fit_rmin: empty window");
  if (c.ql_sites < 2 || c.ql_sites > 14)
    bad_key("ql_sites", "must lie in [2, 14]");
  if (c.workers < 0) bad_key("workers", "must be >= 0 (0 picks core count)");
  if (c.source < 0) bad_key("source", "must be >= 0");
  if (c.outdir.empty()) bad_key("outdir", "must not be empty");

  if (c.command == Command::sweep) {
    if (c.sweep_key.empty()) bad_key("sweep_key", "missing required key");
    if (c.sweep_values.empty())
      bad_key("sweep_values", "missing required key (empty grid)");
    if (c.sweep_command.empty())
      bad_key("sweep_command", "missing required key");
    Command child = Command::sweep;
    try {
      child = parse_command(c.sweep_command);
    } catch (const std::exception& e) {
      bad_key("sweep_command", e.what());
    }
    if (child == Command::sweep) bad_key("sweep_command", "sweeps do not nest");
    const std::set<double> distinct(c.sweep_values.begin(),
                                    c.sweep_values.end());
    if (distinct.size() != c.sweep_values.size())
      bad_key("sweep_values", "duplicate grid points");
    // fail the whole sweep before any point runs, not at grid point k
    for (double value : c.sweep_values) {
      try {
        validate_config(sweep_child(c, value));
      } catch (const std::exception& e) {
        bad_key("sweep_values",
                "grid point " + format_double(value) + ": " + e.what());
      }
    }
    return;
  }

  if (c.lattice.empty()) bad_key("lattice", "missing required key");
  if (c.alpha == 0) bad_key("alpha", "missing required key");
  if (!(c.alpha > 0) || !std::isfinite(c.alpha)) bad_key("alpha", "must be > 0");

  const LatticeRequest lat = lattice_request_for(c);
  if (lat.infinite) {
    if (c.command != Command::bound && c.command != Command::front)
      bad_key("lattice", "\"infinite\" only makes sense for bound and front");
    if (!(c.alpha > 1)) bad_key("alpha", "the infinite chain needs alpha > 1");
  } else {
    long long n = 1;
    for (int e : lat.extents) {
      if (e < 2) bad_key("lattice", "extents must be >= 2");
      n *= e;
    }
    if (n > kMaxMatrixSites)
      bad_key("lattice", "at most " + std::to_string(kMaxMatrixSites) +
                             " sites");
    if (c.command == Command::simulate) {
      if (n > 14)
        bad_key("lattice", "dense 2^n matrices cap simulate at 14 sites");
      if (c.source >= n) bad_key("source", "outside the lattice");
      for (int p : c.probes)
        if (p < 0 || p >= n) bad_key("probes", "site outside the lattice");
    }
  }

  if (c.command != Command::verify) {
    if (c.times.empty()) bad_key("times", "missing required key");
    check_grid_values("times", c.times, 0.0, false);
  }
  if (c.command == Command::bound || c.command == Command::front) {
    if (c.rs.empty()) bad_key("rs", "missing required key");
    check_grid_values("rs", c.rs, 0.0, true);
    if (c.variant == BoundVariant::hastings_koma && c.rs.front() < 1)
      bad_key("rs", "hastings_koma needs r >= 1");
  }
  if (c.command == Command::front && !c.betas.empty()) {
    check_grid_values("betas", c.betas, 0.0, true);
    if (c.variant != BoundVariant::paper_optimized)
      bad_key("betas", "ray probes ride the optimized bound only");
    if (!(c.times.front() > 0))
      bad_key("betas", "conflicts with times: rays need t > 0");
  }
  if (c.command == Command::verify) {
    const std::vector<double> ql =
        c.ql_times.empty() ? parse_grid(c.ql_times_spec) : c.ql_times;
    if (ql.empty()) bad_key("ql_times", "missing required key");
    check_grid_values("ql_times", ql, 0.0, false);
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_profile_csv(const fs::path& path, const CommutatorProfile& p) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "j,r,t,value\n");
  for (Eigen::Index i = 0; i < p.values.rows(); ++i)
    for (Eigen::Index k = 0; k < p.values.cols(); ++k)
      std::fprintf(f, "%d,%.17g,%.17g,%.17g\n",
                   p.probe_sites[static_cast<std::size_t>(i)],
                   p.probe_distances[static_cast<std::size_t>(i)],
                   p.times[static_cast<std::size_t>(k)], p.values(i, k));
  std::fclose(f);
}

void write_bound_csv(const fs::path& path, const BoundCurve& curve) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("cannot write " + path.string());
  std::fprintf(f, "j,r,t,value\n");
  for (Eigen::Index i = 0; i < curve.values.rows(); ++i)
    for (Eigen::Index k = 0; k < curve.values.cols(); ++k)
      std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", static_cast<int>(i),
                   curve.rs[static_cast<std::size_t>(i)],
                   curve.ts[static_cast<std::size_t>(k)], curve.values(i, k));
  std::fclose(f);
}

int run_simulate(const RunConfig& c, int workers, const fs::path& dir,
                 nlohmann::json& summary, std::vector<std::string>& files) {
  const LatticeRequest req = lattice_request_for(c);
  const LatticeSpec lat = build_lattice(req.extents, c.metric);
  const CouplingSplit split = coupling_split(lat, c.alpha, c.j0, c.chi);
  const SpinModel model = build_model(split, c.part, c.interaction);
  std::vector<int> probes = c.probes;
  if (probes.empty())
    for (int j = 0; j < lat.n_sites(); ++j)
      if (j != c.source) probes.push_back(j);
  const CommutatorProfile profile = commutator_profile(
      model, c.a_kind, c.source, c.b_kind, probes, c.times, c.method, workers);
  write_profile_csv(dir / "profile.csv", profile);
  files.push_back("profile.csv");

  const double max_value =
      profile.values.size() > 0 ? profile.values.maxCoeff() : 0.0;
  const bool ceiling_ok = max_value <= 2.0 + 1e-9;
  bool zero_time_ok = true;
  if (!profile.times.empty() && profile.times.front() == 0.0)
    for (std::size_t p = 0; p < probes.size(); ++p)
      if (probes[p] != c.source &&
          !(profile.values(static_cast<Eigen::Index>(p), 0) < 1e-12))
        zero_time_ok = false;
  summary["n_sites"] = lat.n_sites();
  summary["max_value"] = max_value;
  summary["ceiling_ok"] = ceiling_ok;
  summary["zero_time_ok"] = zero_time_ok;
  nlohmann::json front = nlohmann::json::array();
  for (const FrontPoint& p : extract_front(profile, c.epsilon))
    front.push_back({{"r", p.r}, {"t", p.t}});
  summary["front"] = front;  // exact-dynamics arrivals, reported not fitted
  return ceiling_ok && zero_time_ok ? 0 : 1;
}

std::shared_ptr<const CouplingLaw> coupling_law_for(const RunConfig& c) {
  const LatticeRequest req = lattice_request_for(c);
  if (req.infinite) return std::make_shared<InfiniteChainLaw>(c.alpha, c.j0);
  return std::make_shared<LatticeCouplingLaw>(
      build_lattice(req.extents, c.metric), c.alpha, c.j0);
}

int run_bound_like(const RunConfig& c, int workers, const fs::path& dir,
                   nlohmann::json& summary, std::vector<std::string>& files) {
  const auto law = coupling_law_for(c);
  const double g = c.g > 0 ? c.g : reference_g(c.alpha, law->dimension(), c.j0);
  const BoundModel model(law, g);
  BoundGridRequest req;
  req.variant = c.variant;
  req.rs = c.rs;
  req.ts = c.times;
  req.chi = c.chi;
  req.mode = c.mode;
  req.workers = workers;
  const BoundCurve curve = evaluate_bound_curve(model, req);
  write_bound_csv(dir / "profile.csv", curve);
  files.push_back("profile.csv");
  summary["variant"] = bound_variant_name(curve.variant);
  summary["g"] = g;
  summary["max_value"] = curve.values.maxCoeff();
  summary["in_regime_r_fraction"] = curve.in_regime_r.cast<double>().mean();
  summary["in_regime_vt_fraction"] = curve.in_regime_vt.cast<double>().mean();
  if (c.command == Command::bound) return 0;

  const auto points = extract_front(curve, c.epsilon);
  const double rmin = c.fit_rmin > 0 ? c.fit_rmin : c.rs.front();
  const double rmax = c.fit_rmax > 0 ? c.fit_rmax : c.rs.back();
  FrontFit fit = fit_exponent(points, rmin, rmax, c.epsilon);
  for (double beta : c.betas)
    fit.probes.push_back(beta_probe(
        [&model, &c](double r, double t) {
          return model.optimize_cutoff(r, t, c.mode).log_raw_value;
        },
        beta, c.times));

  nlohmann::json payload;
  payload["epsilon"] = fit.epsilon;
  payload["zeta_hat"] = fit.zeta_hat;
  payload["zeta_stderr"] = fit.zeta_stderr;
  payload["sane"] = fit.sane;
  payload["r_min"] = fit.r_min;
  payload["r_max"] = fit.r_max;
  nlohmann::json pts = nlohmann::json::array();
  for (const FrontPoint& p : fit.points)
    pts.push_back({{"r", p.r}, {"t", p.t}});
  payload["points"] = pts;
  nlohmann::json probes = nlohmann::json::array();
  for (const BetaProbeResult& pr : fit.probes)
    probes.push_back({{"beta", pr.beta},
                      {"decreasing", pr.decreasing},
                      {"ts", pr.ts},
                      {"log_values", pr.log_values}});
  payload["probes"] = probes;
  write_json(dir / "payload.json", payload);
  files.push_back("payload.json");
  summary["zeta_hat"] = fit.zeta_hat;
  summary["zeta_stderr"] = fit.zeta_stderr;
  summary["sane"] = fit.sane;
  summary["n_points"] = fit.points.size();
  return 0;
}

int run_verify(const RunConfig& c, const fs::path& dir,
               nlohmann::json& summary, std::vector<std::string>& files) {
  const LatticeRequest req = lattice_request_for(c);
  const LatticeSpec lat = build_lattice(req.extents, c.metric);
  const LatticeCouplingLaw law(lat, c.alpha, c.j0);
  const CouplingSplit split = coupling_split(lat, c.alpha, c.j0, c.chi);

  const Kernel f = build_kernel(lat, KernelKind::F, c.radius, c.chi, c.alpha);
  const ReproducibilityReport rep =
      verify_reproducibility(f, c.radius, lat.dimension);
  const double g = c.g > 0 ? c.g : rep.fitted_g;
  // R = chi v t pins the time implied by the requested kernel radius
  const double v = make_bound_params(law, c.chi, 1.0, g).v;
  const BoundParams params =
      make_bound_params(law, c.chi, c.radius / (c.chi * v), g);

  nlohmann::json payload;
  payload["reproducibility"] = {{"fitted_g", rep.fitted_g},
                                {"z1", rep.z1},
                                {"z2", rep.z2},
                                {"z3", rep.z3}};
  payload["params"] = {{"v", params.v},
                       {"R", params.R},
                       {"t", params.t},
                       {"kappa", params.kappa},
                       {"lambda_sr", params.lambda_sr},
                       {"lambda_chi", params.lambda_chi},
                       {"vartheta", params.vartheta},
                       {"v_chi", params.v_chi},
                       {"g", g}};

  bool all_pass = true;
  const Kernel k = build_kernel(lat, KernelKind::K, c.radius, c.chi, c.alpha);
  const Kernel jlr = jlr_matrix_with_diagonal(split, params.kappa);
  double max_ratio = 0;
  try {
    const ConvolutionReport conv = verify_convolution(k, jlr, f, params);
    max_ratio = conv.max_ratio;
    payload["convolution"] = {{"max_ratio", conv.max_ratio},
                              {"trivial_max_ratio", conv.trivial_max_ratio},
                              {"algebraic_max_ratio", conv.algebraic_max_ratio},
                              {"fitted_b", conv.fitted_b},
                              {"algebraic_asserted", conv.algebraic_asserted},
                              {"degenerate", conv.degenerate},
                              {"pass", true}};
  } catch (const numerical_failure_error& e) {
    payload["convolution"] = {{"pass", false}, {"error", e.what()}};
    all_pass = false;
  }

  // exponential quasi-locality on the matching nearest-neighbor chain
  const std::vector<double> ql_ts =
      c.ql_times.empty() ? parse_grid(c.ql_times_spec) : c.ql_times;
  const LatticeSpec ql_lat = build_lattice({c.ql_sites}, Metric::euclidean);
  const CouplingSplit ql_split = coupling_split(ql_lat, c.alpha, c.j0, 1.0);
  const SpinModel ql_model =
      build_model(ql_split, CouplingPart::short_range, c.interaction);
  const DenseOperator h_sr = assemble_matrix(ql_model);
  const int center = c.ql_sites / 2;
  const DenseOperator a = site_operator(ql_lat, center, c.a_kind);
  const double v_ql = 4 * std::exp(1.0) * ql_split.lambda_sr;
  const HeisenbergPropagator prop(h_sr, c.method);
  nlohmann::json ql_entries = nlohmann::json::array();
  bool ql_pass = true;
  for (double t : ql_ts) {
    const auto qd = quasilocal_decompose(ql_lat, prop, a, center, t, 1.0, v_ql,
                                         c.ql_sites);
    for (std::size_t l = 0; l < qd.distance_norms.size(); ++l) {
      const double limit = 2 * std::exp(-static_cast<double>(l));
      const bool ok = qd.distance_norms[l] <= limit + 1e-12;
      ql_pass = ql_pass && ok;
      ql_entries.push_back({{"t", t},
                            {"l", l},
                            {"distance_norm", qd.distance_norms[l]},
                            {"limit", limit},
                            {"pass", ok}});
    }
  }
  all_pass = all_pass && ql_pass;
  payload["quasilocality"] = {
      {"v", v_ql}, {"entries", ql_entries}, {"pass", ql_pass}};

  write_json(dir / "payload.json", payload);
  files.push_back("payload.json");
  summary["fitted_g"] = rep.fitted_g;
  summary["max_ratio"] = max_ratio;
  summary["convolution_pass"] = payload["convolution"]["pass"];
  summary["quasilocality_pass"] = ql_pass;
  summary["pass"] = all_pass;
  return all_pass ? 0 : 1;
}

// Valid cached record: 0 recorded success, 1 recorded failure, -1 recompute.
int cached_exit_code(const fs::path& dir, const std::string& hash) {
  std::ifstream in(dir / "record.json");
  if (!in) return -1;
  nlohmann::json rec;
  try {
    rec = nlohmann::json::parse(in);
  } catch (const std::exception&) {
    return -1;
  }
  if (!rec.is_object() || !rec.contains("config") || !rec.contains("hash") ||
      !rec.contains("files") || !rec["files"].is_array())
    return -1;
  if (rec["hash"] != hash) return -1;
  try {
    if (config_hash(rec["config"]) != hash) return -1;
  } catch (const std::exception&) {
    return -1;
  }
  for (const auto& f : rec["files"])
    if (!f.is_string() || !fs::exists(dir / f.get<std::string>())) return -1;
  return rec.value("exit_code", 0) == 0 ? 0 : 1;
}

RunResult run_sweep(const RunConfig& c, int workers) {
  std::vector<RunConfig> kids;
  kids.reserve(c.sweep_values.size());
  for (double value : c.sweep_values) kids.push_back(sweep_child(c, value));

  struct Entry {
    std::string status, error, hash;
  };
  const std::size_t n = kids.size();
  std::vector<Entry> entries(n);
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < n; ++i) {
    entries[i].hash = config_hash(canonical_json(kids[i]));
    const int cached =
        cached_exit_code(fs::path(c.outdir) / entries[i].hash, entries[i].hash);
    if (cached == 0) {
      entries[i].status = "cached";
    } else if (cached == 1) {
      entries[i].status = "failed";
      entries[i].error = "recorded failure";
    } else {
      todo.push_back(i);
    }
  }

  std::atomic<std::size_t> next{0};
  const auto drain = [&] {
    for (;;) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= todo.size()) return;
      const std::size_t i = todo[slot];
      try {
        const RunResult r = run_config(kids[i]);
        entries[i].status = r.exit_code == 0 ? "computed" : "failed";
        if (r.exit_code != 0)
          entries[i].error =
              "assertion failed, see " + entries[i].hash + "/record.json";
      } catch (const std::exception& e) {
        entries[i].status = "failed";
        entries[i].error = e.what();
      }
    }
  };
  const int pool = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(workers), todo.size()));
  if (pool > 1) {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int w = 0; w < pool; ++w) threads.emplace_back(drain);
    for (auto& th : threads) th.join();
  } else {
    drain();
  }

  const nlohmann::json canonical = canonical_json(c);
  nlohmann::json index;
  index["command"] = "sweep";
  index["config"] = canonical;
  index["hash"] = config_hash(canonical);
  index["version"] = kArtifactVersion;
  index["sweep_key"] = c.sweep_key;
  index["sweep_command"] = c.sweep_command;
  nlohmann::json jentries = nlohmann::json::array();
  int exit_code = 0;
  for (std::size_t i = 0; i < n; ++i) {
    nlohmann::json e = {{"value", c.sweep_values[i]},
                        {"hash", entries[i].hash},
                        {"dir", entries[i].hash},
                        {"status", entries[i].status}};
    if (!entries[i].error.empty()) e["error"] = entries[i].error;
    if (entries[i].status == "failed") exit_code = 1;
    jentries.push_back(e);
  }
  index["entries"] = jentries;
  fs::create_directories(c.outdir);
  write_json(fs::path(c.outdir) / "index.json", index);
  return {exit_code, "", index};
}

}  // namespace

RunConfig parse_config(const std::string& command,
                       const std::string& config_path,
                       const std::map<std::string, std::string>& flags) {
  RunConfig c;
  try {
    c.command = parse_command(command);
  } catch (const std::exception& e) {
    bad_key("command", e.what());
  }
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in)
      throw invalid_input_error("config file not readable: " + config_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw invalid_input_error("config file " + config_path + ": " +
                                e.what());
    }
    if (!j.is_object())
      throw invalid_input_error("config file " + config_path +
                                ": top level must be an object");
    for (const auto& item : j.items()) {
      const std::string& key = item.key();
      const nlohmann::json& val = item.value();
      std::string raw;
      if (val.is_string()) raw = val.get<std::string>();
      else if (val.is_number() || val.is_boolean()) raw = val.dump();
      else bad_key(key, "expected a string or number");
      if (key == "command") {
        // the positional command wins only by agreement, never silently
        Command file_cmd = Command::simulate;
        try {
          file_cmd = parse_command(raw);
        } catch (const std::exception& e) {
          bad_key(key, e.what());
        }
        if (file_cmd != c.command)
          bad_key("command", "file says " + raw + ", command line says " +
                                 command_name(c.command));
        continue;
      }
      apply_key(c, key, raw);
    }
  }
  // precedence: flag > LIGHTCONE_WORKERS > file > default
  if (const char* env = std::getenv("LIGHTCONE_WORKERS"))
    apply_key(c, "workers", env);
  for (const auto& [key, raw] : flags) {
    if (key == "command")
      bad_key("command", "pass the command as the first positional argument");
    apply_key(c, key, raw);
  }
  if (c.ql_times.empty()) c.ql_times = parse_grid(c.ql_times_spec);
  validate_config(c);
  return c;
}

nlohmann::json canonical_json(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = command_name(c.command);
  j["lattice"] = c.lattice;
  j["metric"] = metric_name(c.metric);
  j["alpha"] = c.alpha;
  j["j0"] = c.j0;
  j["chi"] = c.chi;
  j["interaction"] = interaction_name(c.interaction);
  j["coupling_part"] = part_name(c.part);
  j["a_kind"] = pauli_name(c.a_kind);
  j["b_kind"] = pauli_name(c.b_kind);
  j["source"] = c.source;
  j["probes"] = int_field(c.probes_spec, c.probes);
  j["times"] = grid_field(c.times_spec, c.times);
  j["rs"] = grid_field(c.rs_spec, c.rs);
  j["variant"] = bound_variant_name(c.variant);
  j["cutoff_mode"] = cutoff_mode_name(c.mode);
  j["g"] = c.g;
  j["epsilon"] = c.epsilon;
  j["fit_rmin"] = c.fit_rmin;
  j["fit_rmax"] = c.fit_rmax;
  j["betas"] = grid_field(c.betas_spec, c.betas);
  j["radius"] = c.radius;
  j["ql_sites"] = c.ql_sites;
  j["ql_times"] = grid_field(c.ql_times_spec, c.ql_times);
  j["method"] = method_name(c.method);
  j["outdir"] = c.outdir;
  j["workers"] = c.workers;
  j["seed"] = c.seed;
  j["sweep_key"] = c.sweep_key;
  j["sweep_values"] = grid_field(c.sweep_values_spec, c.sweep_values);
  j["sweep_command"] = c.sweep_command;
  return j;
}

std::string config_hash(const nlohmann::json& canonical) {
  nlohmann::json pruned = canonical;
  pruned.erase("workers");  // execution-only keys: same science, same hash
  pruned.erase("outdir");
  const std::string dump = pruned.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : dump) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

RunResult run_config(const RunConfig& config) {
  validate_config(config);
  int workers = config.workers;
  if (workers == 0)
    workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (config.command == Command::sweep) return run_sweep(config, workers);

  const auto t0 = std::chrono::steady_clock::now();
  const nlohmann::json canonical = canonical_json(config);
  const std::string hash = config_hash(canonical);
  const fs::path dir = fs::path(config.outdir) / hash;
  fs::create_directories(dir);

  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> files;
  int exit_code = 0;
  switch (config.command) {
    case Command::simulate:
      exit_code = run_simulate(config, workers, dir, summary, files);
      break;
    case Command::bound:
    case Command::front:
      exit_code = run_bound_like(config, workers, dir, summary, files);
      break;
    case Command::verify:
      exit_code = run_verify(config, dir, summary, files);
      break;
    case Command::sweep:
      break;  // handled above
  }

  nlohmann::json record;
  record["command"] = command_name(config.command);
  record["config"] = canonical;
  record["hash"] = hash;
  record["version"] = kArtifactVersion;
  record["exit_code"] = exit_code;
  record["files"] = files;
  record["summary"] = summary;
  record["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  // written last: a readable record certifies the files listed in it
  write_json(dir / "record.json", record);
  return {exit_code, dir.string(), record};
}

}  // namespace lightcone
