// rshe: batch runner for the rearranged stochastic heat equation experiments.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "json.hpp"
#include "rshe/ito.hpp"
#include "rshe/meanfield.hpp"
#include "rshe/report.hpp"
#include "rshe/scheme.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace rshe::cli {
namespace {

constexpr int kExitInvalid = 2;
constexpr int kExitNumeric = 3;

void error_record(const ordered_json& j) { std::cerr << j.dump() << std::endl; }

ordered_json meta_json(const Meta& meta) {
  ordered_json m = ordered_json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  return m;
}

std::string format_of(const Config& cfg, bool allow_bin = false) {
  const auto& f = cfg.str("format");
  if (f == "json" || f == "csv" || (allow_bin && f == "bin")) return f;
  throw ConfigError("format", allow_bin ? "expected json, csv or bin" : "expected json or csv");
}

fs::path output_path(const Config& cfg, const std::string& command, const std::string& ext) {
  fs::path p = cfg.str("output");
  if (p.empty()) {
    const char* dir = std::getenv("RSHE_OUTPUT_DIR");
    p = fs::path(dir && *dir ? dir : ".") / (command + "." + ext);
  }
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

fs::path sibling(const fs::path& p, const std::string& suffix) {
  return p.parent_path() / (p.stem().string() + suffix + p.extension().string());
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  out << text;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const Config& cfg) {
  const auto study = [&] {
    // Only the scheme fields matter here; path count and threads are ignored.
    StudyConfig s;
    s.M = cfg.count("M");
    s.N = cfg.count("N");
    s.noise = cfg.noise();
    s.T = cfg.num("T");
    if (!(s.T >= 0.0)) throw ConfigError("T", "must be >= 0");
    s.x0 = cfg.x0();
    return s;
  }();
  const double h = cfg.num("h");
  if (!(h > 0.0)) throw ConfigError("h", "must be > 0");
  const auto scheme = study.scheme_for(h);
  const auto format = format_of(cfg, true);
  const auto meta = cfg.meta("simulate");
  const auto traj = run(scheme, cfg.u64("stream"));
  const auto path = output_path(cfg, "simulate", format);

  if (format == "csv") {
    std::ostringstream os;
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
    write_trajectory_csv(os, traj);
    write_file(path, os.str());
  } else if (format == "bin") {
    std::ostringstream os(std::ios::binary);
    write_trajectory_binary(os, traj);
    write_file(path, os.str());
  } else {
    ordered_json j;
    j["meta"] = meta_json(meta);
    ordered_json times = ordered_json::array();
    ordered_json states = ordered_json::array();
    for (std::size_t n = 0; n < traj.states.size(); ++n) {
      times.push_back(static_cast<double>(n) * h);
      states.push_back(std::vector<double>(traj.states[n].values().begin(), traj.states[n].values().end()));
    }
    j["time"] = std::move(times);
    j["states"] = std::move(states);
    write_file(path, j.dump(2) + "\n");
  }
  const auto& last = traj.states.back().grid();
  double mean = 0.0;
  for (double v : last.values()) mean += v;
  mean /= static_cast<double>(last.size());
  std::cout << "simulate: " << traj.n_steps() << " steps of h=" << h << ", M=" << scheme.M
            << ", final mean " << sci(mean) << ", final L2 " << sci(last.l2_norm()) << " -> " << path.string()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------- studies

void write_reports(const Config& cfg, const std::string& command, const std::vector<StudyReport>& reports,
                   bool rows) {
  const auto format = format_of(cfg);
  const auto meta = cfg.meta(command);
  const auto path = output_path(cfg, command, format);
  if (format == "json") {
    write_file(path, reports_to_json(reports, meta));
    return;
  }
  std::ostringstream summary;
  write_summary_csv(summary, reports, meta);
  if (rows) {
    std::ostringstream os;
    write_rows_csv(os, reports, meta);
    write_file(path, os.str());
    write_file(sibling(path, "_summary"), summary.str());
  } else {
    write_file(path, summary.str());
  }
}

int cmd_ito_verify(const Config& cfg) {
  const auto study = cfg.study();
  const auto phis = cfg.phis();
  const auto h_list = cfg.nums("h_list");
  format_of(cfg);
  const auto reports = mc_residual_study(study, phis, h_list);
  write_reports(cfg, "ito-verify", reports, true);
  for (const auto& r : reports) {
    std::cout << "ito-verify " << r.phi << ": mean |residual|";
    for (const auto& s : r.residuals) std::cout << ' ' << sci(s.abs_residual.mean);
    const auto& last = r.residuals.back();
    std::cout << "; mean residual at h=" << last.h << ": " << sci(last.residual.mean) << " +- "
              << sci(last.residual.se) << '\n';
  }
  return 0;
}

int cmd_moments(const Config& cfg) {
  const auto study = cfg.study();
  const auto h_list = cfg.nums("h_list");
  const auto p_list = cfg.nums("p_list");
  format_of(cfg);
  const auto r = moment_study(study, h_list, p_list);
  write_reports(cfg, "moments", {r}, false);
  for (double p : p_list) {
    double lo = INFINITY, hi = 0.0, lo2 = INFINITY, hi2 = 0.0;
    for (const auto& m : r.moments) {
      if (m.p != p) continue;
      lo = std::min(lo, m.max_mean_grad);
      hi = std::max(hi, m.max_mean_grad);
      lo2 = std::min(lo2, m.mean_max_l2);
      hi2 = std::max(hi2, m.mean_max_l2);
    }
    std::cout << "moments p=" << p << ": max_n E|DX|^2p in [" << sci(lo) << ", " << sci(hi)
              << "], E max_n |X|^2p in [" << sci(lo2) << ", " << sci(hi2) << "]\n";
  }
  return 0;
}

int cmd_eta_check(const Config& cfg) {
  const auto study = cfg.study();
  const auto h_list = cfg.nums("h_list");
  const auto eps = cfg.nums("eps_list");
  format_of(cfg);
  const auto r = eta_study(study, h_list, eps);
  write_reports(cfg, "eta-check", {r}, false);
  std::cout << "eta-check: violation <eta, e_1>";
  for (const auto& e : r.eta) std::cout << ' ' << sci(e.violation_e1.mean);
  std::cout << "; orthogonality at h=" << r.eta.back().h << ":";
  for (const auto& o : r.eta.back().orthogonality) std::cout << ' ' << sci(o.mean);
  std::cout << '\n';
  return 0;
}

// ---------------------------------------------------------------- inequalities

struct CheckTally {
  std::string name;
  std::size_t trials = 0;
  std::size_t violations = 0;
  double max_excess = 0.0;

  void record(double excess) {
    ++trials;
    if (excess > 0.0) ++violations;
    max_excess = std::max(max_excess, excess);
  }
};

std::vector<double> gaussian(PathRng& rng, std::size_t M) {
  std::vector<double> v(M);
  for (auto& x : v) x = rng.normal();
  return v;
}

GridField smooth_symmetric(PathRng& rng, std::size_t M) {
  std::vector<double> c(M / 2 + 1);
  for (std::size_t m = 0; m < c.size(); ++m) c[m] = rng.normal() / (1.0 + static_cast<double>(m));
  return to_grid(SpectralField(std::move(c)), M);
}

double multiset_power(std::span<const double> v, double p) {
  return law_mean(v, [p](double x) { return std::pow(std::abs(x), p); });
}

int cmd_inequalities(const Config& cfg) {
  const std::size_t M = cfg.count("M");
  if (M < 4 || M % 2 != 0) throw ConfigError("M", "must be even and >= 4");
  const std::size_t count = cfg.count("count");
  if (count < 1) throw ConfigError("count", "must be >= 1");
  const auto seed = cfg.u64("seed");
  const auto format = format_of(cfg);

  CheckTally exact{"rearrangement_exactness"}, contraction{"l2_contraction"}, ps{"polya_szego"},
      key01{"key_inequality_h0.01"}, key1{"key_inequality_h0.1"}, riesz{"riesz"}, heat{"heat_preserves_canonical"};
  for (std::size_t i = 0; i < count; ++i) {
    PathRng rng(seed, i);
    const GridField f(gaussian(rng, M));
    const auto r = rearrange(f);
    auto a = std::vector<double>(f.values().begin(), f.values().end());
    auto b = std::vector<double>(r.values().begin(), r.values().end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    bool ok = a == b && rearrange(r.grid()) == r;
    for (double p : {1.0, 2.0, 4.0}) ok = ok && multiset_power(f.values(), p) == multiset_power(r.values(), p);
    exact.record(ok ? 0.0 : 1.0);

    const GridField g(gaussian(rng, M));
    const auto gs = rearrange(g);
    double d_raw = 0.0, d_star = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      d_raw += (f[j] - g[j]) * (f[j] - g[j]);
      d_star += (r[j] - gs[j]) * (r[j] - gs[j]);
    }
    contraction.record(std::sqrt(d_star / M) - std::sqrt(d_raw / M) - 1e-12);

    const auto u = smooth_symmetric(rng, M);
    for (auto [h, tally] : {std::pair{0.0, &ps}, std::pair{0.01, &key01}, std::pair{0.1, &key1}}) {
      const auto s = key_inequality_gap(u, h);
      tally->record(s.lhs - s.rhs - 1e-10 * (1.0 + std::abs(s.rhs)));
    }

    const auto sides = riesz_gap(f, g, GridField(gaussian(rng, M)));
    riesz.record(sides.lhs - sides.rhs - 1e-10 * (1.0 + std::abs(sides.rhs)));

    const auto cs = to_spectral(r.grid());
    bool canon = true;
    for (double t : {1e-3, 1e-2, 1e-1}) canon = canon && is_canonical(to_grid(heat_evolve(cs, t), M), 1e-10);
    heat.record(canon ? 0.0 : 1.0);
  }

  const std::vector<CheckTally> checks{exact, contraction, ps, key01, key1, riesz, heat};
  const auto meta = cfg.meta("inequalities");
  const auto path = output_path(cfg, "inequalities", format);
  if (format == "json") {
    ordered_json j;
    j["meta"] = meta_json(meta);
    auto& arr = j["checks"] = ordered_json::array();
    for (const auto& c : checks) {
      arr.push_back(ordered_json{
          {"check", c.name}, {"trials", c.trials}, {"violations", c.violations}, {"max_excess", c.max_excess}});
    }
    write_file(path, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
    os << "check,trials,violations,max_excess\n";
    for (const auto& c : checks) {
      os << c.name << ',' << c.trials << ',' << c.violations << ',' << format_double(c.max_excess) << '\n';
    }
    write_file(path, os.str());
  }
  std::size_t total = 0;
  for (const auto& c : checks) total += c.violations;
  std::cout << "inequalities: " << count << " trials per check at M=" << M << ", " << total
            << " violations -> " << path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------- generator-check

std::vector<double> perturbed(const GridField& X, std::size_t k, double e1, std::size_t j, double e2) {
  const std::size_t M = X.size();
  std::vector<double> v(M);
  for (std::size_t i = 0; i < M; ++i) v[i] = X[i] + e1 * basis_value(k, i, M) + e2 * basis_value(j, i, M);
  return v;
}

struct GeneratorRow {
  std::string phi;
  GeneratorTerms terms;
  MeanSe raw;
  MeanSe corrected;
  double fd_first = 0.0;
  double fd_second = 0.0;
};

int cmd_generator_check(const Config& cfg) {
  auto study = cfg.study();
  const auto phis = cfg.phis();
  const double h = cfg.num("h");
  const double delta = cfg.num("delta");
  if (!(h > 0.0)) throw ConfigError("h", "must be > 0");
  if (!(delta > 0.0)) throw ConfigError("delta", "must be > 0");
  study.T = delta;
  const auto scheme = study.scheme_for(h);
  const auto format = format_of(cfg);
  const auto lambda = spectrum(study.noise);

  std::vector<std::vector<ItoLedger>> ledgers(study.n_paths);
  parallel_for(study.n_paths, study.threads, [&](std::size_t p) {
    ledgers[p] = accumulate_many(run(scheme, path_stream(0, p)), phis, study.accumulate);
  });

  const auto& X = study.x0;
  const double eps = 1e-4;
  std::vector<GeneratorRow> rows;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const auto& phi = phis[i];
    GeneratorRow row;
    row.phi = phi.name();
    row.terms = generator_terms(phi, X, lambda);
    std::vector<double> raw, corrected;
    for (const auto& l : ledgers) {
      raw.push_back((l[i].phi_end - l[i].phi_start) / delta);
      corrected.push_back((l[i].phi_end - l[i].phi_start - l[i].t_stoch) / delta);
    }
    row.raw = mean_se(raw);
    row.corrected = mean_se(corrected);
    const std::size_t K = std::min<std::size_t>(8, study.M / 2);
    for (std::size_t k = 0; k <= K; ++k) {
      const double exact = directional_derivative(phi, X.grid(), k);
      const double fd =
          (phi.phi(perturbed(X.grid(), k, eps, 0, 0.0)) - phi.phi(perturbed(X.grid(), k, -eps, 0, 0.0))) / (2 * eps);
      row.fd_first = std::max(row.fd_first, std::abs(exact - fd) / std::max(std::abs(exact), 1.0));
      for (std::size_t j = 0; j <= K; j += 2) {
        const double ex2 = second_directional_derivative(phi, X.grid(), k, j);
        const double fd2 = (phi.phi(perturbed(X.grid(), k, eps, j, eps)) - phi.phi(perturbed(X.grid(), k, eps, j, -eps)) -
                            phi.phi(perturbed(X.grid(), k, -eps, j, eps)) + phi.phi(perturbed(X.grid(), k, -eps, j, -eps))) /
                           (4 * eps * eps);
        row.fd_second = std::max(row.fd_second, std::abs(ex2 - fd2) / std::max(std::abs(ex2), 1.0));
      }
    }
    rows.push_back(row);
  }

  const auto meta = cfg.meta("generator-check");
  const auto path = output_path(cfg, "generator-check", format);
  if (format == "json") {
    ordered_json j;
    j["meta"] = meta_json(meta);
    auto& arr = j["rows"] = ordered_json::array();
    for (const auto& r : rows) {
      arr.push_back(ordered_json{{"phi", r.phi},
                                 {"generator", r.terms.total()},
                                 {"gradient", r.terms.gradient},
                                 {"f1", r.terms.f1},
                                 {"f2", r.terms.f2},
                                 {"mc_mean", r.raw.mean},
                                 {"mc_se", r.raw.se},
                                 {"cv_mean", r.corrected.mean},
                                 {"cv_se", r.corrected.se},
                                 {"fd_first_max_rel", r.fd_first},
                                 {"fd_second_max_rel", r.fd_second}});
    }
    write_file(path, j.dump(2) + "\n");
  } else {
    std::ostringstream os;
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
    os << "phi,generator,gradient,f1,f2,mc_mean,mc_se,cv_mean,cv_se,fd_first_max_rel,fd_second_max_rel\n";
    for (const auto& r : rows) {
      os << r.phi << ',' << format_double(r.terms.total()) << ',' << format_double(r.terms.gradient) << ','
         << format_double(r.terms.f1) << ',' << format_double(r.terms.f2) << ',' << format_double(r.raw.mean) << ','
         << format_double(r.raw.se) << ',' << format_double(r.corrected.mean) << ','
         << format_double(r.corrected.se) << ',' << format_double(r.fd_first) << ',' << format_double(r.fd_second)
         << '\n';
    }
    write_file(path, os.str());
  }
  for (const auto& r : rows) {
    std::cout << "generator-check " << r.phi << ": L phi = " << sci(r.terms.total()) << ", semigroup estimate "
              << sci(r.corrected.mean) << " +- " << sci(r.corrected.se) << ", fd rel err " << sci(r.fd_first)
              << " / " << sci(r.fd_second) << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------- dispatch

std::string field_of(const std::string& message) {
  const auto colon = message.find(':');
  if (colon == std::string::npos || colon > 32 || message.find(' ') < colon) return "";
  return message.substr(0, colon);
}

int run_main(int argc, char** argv) {
  CLI::App app{"Rearranged stochastic heat equation: simulation, Ito-formula checks and diagnostics"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "Run one trajectory of the scheme and export its states"},
      {"ito-verify", "Monte Carlo Ito-formula residual study over h_list"},
      {"inequalities", "Fuzz the rearrangement identities and inequalities"},
      {"generator-check", "Compare the generator with a short-time semigroup estimate"},
      {"eta-check", "Reflection term monotonicity and orthogonality diagnostics"},
      {"moments", "Moment bounds of the scheme across h_list"},
  };
  std::string config_path;
  std::map<std::string, std::string> overrides;
  std::map<std::string, std::map<std::string, CLI::Option*>> options;
  for (const auto& [name, desc] : commands) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", config_path, "Flat key = value configuration file");
    for (const auto& [key, def] : Config::defaults()) {
      std::string names = "--" + key;
      if (key.find('_') != std::string::npos) {
        std::string dashed = key;
        std::replace(dashed.begin(), dashed.end(), '_', '-');
        names += ",--" + dashed;
      }
      options[name][key] = sub->add_option(names, overrides[key], "default: " + (def.empty() ? "<auto>" : def));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record(ordered_json{{"status", "error"}, {"kind", "invalid_arguments"}, {"field", ""}, {"message", e.what()}});
    return kExitInvalid;
  }

  std::string command;
  for (const auto& [name, desc] : commands) {
    if (app.got_subcommand(name)) command = name;
  }

  Config cfg;
  std::uint64_t seed = 0;
  try {
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [key, opt] : options[command]) {
      if (opt->count() > 0) cfg.set(key, overrides[key]);
    }
    seed = cfg.u64("seed");
    if (command == "simulate") return cmd_simulate(cfg);
    if (command == "ito-verify") return cmd_ito_verify(cfg);
    if (command == "inequalities") return cmd_inequalities(cfg);
    if (command == "generator-check") return cmd_generator_check(cfg);
    if (command == "eta-check") return cmd_eta_check(cfg);
    return cmd_moments(cfg);
  } catch (const ConfigError& e) {
    error_record(ordered_json{{"status", "error"}, {"kind", "invalid_config"}, {"field", e.field()}, {"message", e.what()}});
    return kExitInvalid;
  } catch (const NumericAbort& e) {
    error_record(ordered_json{{"status", "error"},
                              {"kind", "numeric_abort"},
                              {"path", e.stream() & 0xffffffffULL},
                              {"h_index", e.stream() >> 32},
                              {"step", e.step()},
                              {"seed", seed},
                              {"message", e.what()}});
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    error_record(ordered_json{{"status", "error"}, {"kind", "invalid_config"}, {"field", field_of(e.what())}, {"message", e.what()}});
    return kExitInvalid;
  } catch (const std::exception& e) {
    error_record(ordered_json{{"status", "error"}, {"kind", "runtime"}, {"message", e.what()}});
    return 1;
  }
}

}  // namespace
}  // namespace rshe::cli

int main(int argc, char** argv) { return rshe::cli::run_main(argc, argv); }
