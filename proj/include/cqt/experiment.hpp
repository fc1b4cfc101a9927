#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cqt/channels.hpp"
#include "cqt/error.hpp"
#include "cqt/nonlocality.hpp"
#include "cqt/teleport.hpp"

namespace cqt {

enum class ChannelSelection { total, qubit, both };

inline ChannelSelection parse_channel_selection(std::string_view name) {
  if (name == "both") return ChannelSelection::both;
  return parse_channel(name) == Channel::total ? ChannelSelection::total : ChannelSelection::qubit;
}

inline std::string to_string(ChannelSelection c) {
  switch (c) {
    case ChannelSelection::total:
      return "total";
    case ChannelSelection::qubit:
      return "qubit";
    case ChannelSelection::both:
      return "both";
  }
  return "both";
}

struct SweepConfig {
  ChannelSelection channel = ChannelSelection::both;
  double p_min = 0.0;
  double p_max = 1.0;
  double p_step = 0.02;
  double sdp_tol = 1e-7;
  int optimizer_restarts = 20;
  std::uint64_t seed = 42;
  std::string output_path = "sweep.csv";
  bool plot_data = false;
  unsigned jobs = 1;

  void validate() const {
    if (!(p_min >= 0.0 && p_min <= p_max && p_max <= 1.0)) throw Error("need 0 <= p-min <= p-max <= 1");
    if (!(p_step > 0.0)) throw Error("p-step must be positive");
    if (!(sdp_tol > 0.0)) throw Error("sdp-tol must be positive");
    if (optimizer_restarts < 1) throw Error("restarts must be at least 1");
    if (jobs < 1) throw Error("jobs must be at least 1");
  }

  std::vector<Channel> channels() const {
    switch (channel) {
      case ChannelSelection::total:
        return {Channel::total};
      case ChannelSelection::qubit:
        return {Channel::qubit};
      case ChannelSelection::both:
        break;
    }
    return {Channel::total, Channel::qubit};
  }

  /// p_min, p_min + step, ... up to p_max (inclusive within a 1e-9 slack).
  std::vector<double> grid() const {
    std::vector<double> ps;
    for (std::size_t i = 0;; ++i) {
      const double p = p_min + static_cast<double>(i) * p_step;
      if (p > p_max + 1e-9) break;
      ps.push_back(std::min(p, p_max));
    }
    return ps;
  }
};

/// Reads flat key=value lines; '#' starts a comment. Keys are the long sweep flag
/// names without the leading dashes (p-min, sdp-tol, out, ...).
inline std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key=value");
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error("config line " + std::to_string(lineno) + ": empty key");
    std::replace(key.begin(), key.end(), '_', '-');
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw Error("config: " + key + " expects a number, got '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw Error("config: " + key + " expects an integer, got '" + v + "'");
  return x;
}

}  // namespace detail

/// Overwrites the fields named in `values`; unknown keys are rejected.
inline void apply_config(const std::map<std::string, std::string>& values, SweepConfig& cfg) {
  for (const auto& [key, v] : values) {
    if (key == "channel") {
      cfg.channel = parse_channel_selection(v);
    } else if (key == "p-min") {
      cfg.p_min = detail::parse_real(key, v);
    } else if (key == "p-max") {
      cfg.p_max = detail::parse_real(key, v);
    } else if (key == "p-step") {
      cfg.p_step = detail::parse_real(key, v);
    } else if (key == "sdp-tol") {
      cfg.sdp_tol = detail::parse_real(key, v);
    } else if (key == "restarts") {
      cfg.optimizer_restarts = static_cast<int>(detail::parse_integer(key, v));
    } else if (key == "seed") {
      const auto s = detail::parse_integer(key, v);
      if (s < 0) throw Error("config: seed must be non-negative");
      cfg.seed = static_cast<std::uint64_t>(s);
    } else if (key == "out") {
      cfg.output_path = v;
    } else if (key == "plot-data") {
      if (v != "true" && v != "false" && v != "1" && v != "0")
        throw Error("config: plot-data expects true or false");
      cfg.plot_data = v == "true" || v == "1";
    } else if (key == "jobs") {
      const auto j = detail::parse_integer(key, v);
      if (j < 1) throw Error("config: jobs must be at least 1");
      cfg.jobs = static_cast<unsigned>(j);
    } else {
      throw Error("config: unknown key '" + key + "'");
    }
  }
}

struct SweepRow {
  Channel channel = Channel::total;
  double p = 0.0;
  double s_closed_form = 0.0;
  double s_optimized = 0.0;
  double f_c_ne = 0.0;
  double f_nc_e = 0.0;
  double ecp = 0.0;
  double sdp_gap = 0.0;
};

struct SweepFailure {
  Channel channel = Channel::total;
  double p = 0.0;
  std::string message;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<SweepFailure> failures;
};

/// splitmix64 finaliser; mixes the base seed with the grid coordinates.
inline std::uint64_t point_seed(std::uint64_t seed, Channel c, std::size_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (2 * index + (c == Channel::total ? 1 : 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline SweepRow evaluate_point(Channel c, double p, const SweepConfig& cfg, std::uint64_t seed) {
  SweepRow row;
  row.channel = c;
  row.p = p;
  row.s_closed_form = closed_form_max_s(c, p);
  const auto rep = ecp_report(c, p, {cfg.sdp_tol, 5000});
  if (!(rep.sdp_gap <= cfg.sdp_tol)) throw NumericalError("duality gap above tolerance");
  row.f_c_ne = rep.f_c_ne;
  row.f_nc_e = rep.f_nc_e;
  row.ecp = rep.ecp;
  row.sdp_gap = rep.sdp_gap;
  const auto resource = depolarize(c, make_ghz(), p);
  row.s_optimized = std::abs(optimize_settings(resource, Objective::svetlichny, cfg.optimizer_restarts, seed).value);
  return row;
}

/// Grid points run on up to cfg.jobs threads; each point has its own seed, so the
/// output does not depend on scheduling.
inline SweepResult run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  struct Task {
    Channel channel;
    double p;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  const auto ps = cfg.grid();
  for (auto c : cfg.channels())
    for (std::size_t i = 0; i < ps.size(); ++i) tasks.push_back({c, ps[i], point_seed(cfg.seed, c, i)});

  std::vector<std::optional<SweepRow>> rows(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        rows[i] = evaluate_point(tasks[i].channel, tasks[i].p, cfg, tasks[i].seed);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::min<std::size_t>(cfg.jobs, std::max<std::size_t>(tasks.size(), 1));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }

  SweepResult out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (rows[i])
      out.rows.push_back(*rows[i]);
    else
      out.failures.push_back({tasks[i].channel, tasks[i].p, errors[i]});
  }
  auto key = [](const auto& r) { return std::pair{r.channel == Channel::total ? 0 : 1, r.p}; };
  std::sort(out.rows.begin(), out.rows.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  std::sort(out.failures.begin(), out.failures.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
  return out;
}

inline constexpr const char* kCsvHeader = "channel,p,s_closed_form,s_optimized,f_c_ne,f_nc_e,ecp,sdp_gap";

inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string format_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += to_string(r.channel);
    for (double v : {r.p, r.s_closed_form, r.s_optimized, r.f_c_ne, r.f_nc_e, r.ecp, r.sdp_gap})
      out += "," + format_real(v);
    out += "\n";
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << text;
  f.flush();
  if (!f) throw Error("failed writing " + path);
}

inline void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  if (rows.empty()) throw Error("emit_csv: no rows");
  write_text(path, format_csv(rows));
}

/// "<stem>_<channel>.dat" next to the CSV.
inline std::string plot_data_path(const std::string& csv_path, Channel c) {
  std::filesystem::path p(csv_path);
  auto name = p.stem().string() + "_" + to_string(c) + ".dat";
  return (p.parent_path() / name).string();
}

/// Two whitespace-separated columns "s ecp" per channel present in rows.
inline std::vector<std::string> emit_plot_data(const std::vector<SweepRow>& rows, const std::string& csv_path) {
  std::vector<std::string> written;
  for (auto c : {Channel::total, Channel::qubit}) {
    std::string text = "# s ecp\n";
    bool any = false;
    for (const auto& r : rows) {
      if (r.channel != c) continue;
      text += format_real(r.s_closed_form) + " " + format_real(r.ecp) + "\n";
      any = true;
    }
    if (!any) continue;
    const auto path = plot_data_path(csv_path, c);
    write_text(path, text);
    written.push_back(path);
  }
  return written;
}

struct BoundsReport {
  double broadcast_svetlichny = 0.0;
  double broadcast_mermin = 0.0;
  double local_svetlichny = 0.0;
  double local_mermin = 0.0;
  OptimizeResult ghz_svetlichny;
  OptimizeResult ghz_mermin;
};

inline BoundsReport demo_bounds(int restarts = 20, std::uint64_t seed = 42) {
  BoundsReport r;
  r.broadcast_svetlichny = classical_broadcast_bound(Objective::svetlichny);
  r.broadcast_mermin = classical_broadcast_bound(Objective::mermin);
  r.local_svetlichny = classical_local_bound(Objective::svetlichny);
  r.local_mermin = classical_local_bound(Objective::mermin);
  const auto ghz = DensityMatrix::from_pure(make_ghz());
  r.ghz_svetlichny = optimize_settings(ghz, Objective::svetlichny, restarts, seed);
  r.ghz_mermin = optimize_settings(ghz, Objective::mermin, restarts, seed);
  return r;
}

inline std::string describe(const BlochVector& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%+.6f, %+.6f, %+.6f)", v.x(), v.y(), v.z());
  return buf;
}

inline std::string describe(const SettingsTriple& s) {
  std::string out;
  out += "  alice inputs  a0 " + describe(s.alice_inputs[0]) + "  a1 " + describe(s.alice_inputs[1]) + "\n";
  out += "  bob dirs      b0 " + describe(s.bob_dirs[0]) + "  b1 " + describe(s.bob_dirs[1]) + "\n";
  out += "  charlie dirs  c0 " + describe(s.charlie_dirs[0]) + "  c1 " + describe(s.charlie_dirs[1]) + "\n";
  const auto& f = s.alice_frame;
  char buf[160];
  std::snprintf(buf, sizeof buf, "  alice frame   [[%+.6f%+.6fi, %+.6f%+.6fi], [%+.6f%+.6fi, %+.6f%+.6fi]]\n",
                f(0, 0).real(), f(0, 0).imag(), f(0, 1).real(), f(0, 1).imag(), f(1, 0).real(), f(1, 0).imag(),
                f(1, 1).real(), f(1, 1).imag());
  out += buf;
  return out;
}

}  // namespace cqt
