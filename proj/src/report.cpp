#include "rshe/report.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"

namespace rshe {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

using nlohmann::ordered_json;

ordered_json mean_se_json(const MeanSe& m) { return ordered_json{{"mean", m.mean}, {"se", m.se}}; }

ordered_json ledger_json(const ItoLedger& l) {
  return ordered_json{{"t_grad", l.t_grad},       {"t_stoch", l.t_stoch}, {"t_f1", l.t_f1},
                      {"t_f2", l.t_f2},           {"phi_start", l.phi_start}, {"phi_end", l.phi_end},
                      {"residual", l.residual},   {"normalized_residual", l.normalized_residual()}};
}

ordered_json report_json(const StudyReport& r) {
  ordered_json j;
  j["kind"] = r.kind;
  j["phi"] = r.phi;
  j["seed"] = r.seed;
  j["n_paths"] = r.n_paths;
  j["h_list"] = r.h_list;
  if (!r.residuals.empty()) {
    auto& arr = j["residuals"] = ordered_json::array();
    for (const auto& s : r.residuals) {
      arr.push_back(ordered_json{{"h", s.h},
                                 {"n_paths", s.n_paths},
                                 {"residual", mean_se_json(s.residual)},
                                 {"abs_residual", mean_se_json(s.abs_residual)},
                                 {"normalized_residual", mean_se_json(s.normalized_residual)},
                                 {"mean_t_grad", s.mean_t_grad},
                                 {"mean_t_stoch", s.mean_t_stoch},
                                 {"mean_t_f1", s.mean_t_f1},
                                 {"mean_t_f2", s.mean_t_f2}});
    }
  }
  if (!r.rows.empty()) {
    auto& arr = j["paths"] = ordered_json::array();
    for (const auto& row : r.rows) {
      ordered_json e{{"h", row.h}, {"path", row.path}, {"stream", row.stream}};
      const auto terms = ledger_json(row.ledger);
      for (const auto& [k, v] : terms.items()) e[k] = v;
      arr.push_back(std::move(e));
    }
  }
  if (!r.moments.empty()) {
    auto& arr = j["moments"] = ordered_json::array();
    for (const auto& m : r.moments) {
      arr.push_back(ordered_json{
          {"h", m.h}, {"p", m.p}, {"max_mean_grad", m.max_mean_grad}, {"mean_max_l2", m.mean_max_l2}});
    }
  }
  if (!r.eta.empty()) {
    auto& arr = j["eta"] = ordered_json::array();
    for (const auto& e : r.eta) {
      ordered_json orth = ordered_json::array();
      for (std::size_t i = 0; i < e.eps.size(); ++i) {
        orth.push_back(ordered_json{{"eps", e.eps[i]}, {"mean", e.orthogonality[i].mean}, {"se", e.orthogonality[i].se}});
      }
      arr.push_back(ordered_json{{"h", e.h},
                                 {"violation_e1", mean_se_json(e.violation_e1)},
                                 {"violation_mixed", mean_se_json(e.violation_mixed)},
                                 {"orthogonality", orth}});
    }
  }
  return j;
}

void write_meta(std::ostream& os, const Meta& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace

std::string reports_to_json(const std::vector<StudyReport>& reports, const Meta& meta) {
  ordered_json root;
  auto& m = root["meta"] = ordered_json::object();
  for (const auto& [k, v] : meta) m[k] = v;
  auto& arr = root["reports"] = ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return root.dump(2) + "\n";
}

void write_rows_csv(std::ostream& os, const std::vector<StudyReport>& reports, const Meta& meta) {
  write_meta(os, meta);
  os << "h,path,stream,phi,t_grad,t_stoch,t_f1,t_f2,phi_start,phi_end,residual,normalized_residual\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      const auto& l = row.ledger;
      os << format_double(row.h) << ',' << row.path << ',' << row.stream << ',' << r.phi << ','
         << format_double(l.t_grad) << ',' << format_double(l.t_stoch) << ',' << format_double(l.t_f1) << ','
         << format_double(l.t_f2) << ',' << format_double(l.phi_start) << ',' << format_double(l.phi_end) << ','
         << format_double(l.residual) << ',' << format_double(l.normalized_residual()) << '\n';
    }
  }
}

void write_summary_csv(std::ostream& os, const std::vector<StudyReport>& reports, const Meta& meta) {
  write_meta(os, meta);
  os << "kind,phi,h,statistic,value\n";
  for (const auto& r : reports) {
    auto line = [&](double h, const std::string& stat, double v) {
      os << r.kind << ',' << r.phi << ',' << format_double(h) << ',' << stat << ',' << format_double(v) << '\n';
    };
    for (const auto& s : r.residuals) {
      line(s.h, "mean_residual", s.residual.mean);
      line(s.h, "se_residual", s.residual.se);
      line(s.h, "mean_abs_residual", s.abs_residual.mean);
      line(s.h, "se_abs_residual", s.abs_residual.se);
      line(s.h, "mean_normalized_residual", s.normalized_residual.mean);
      line(s.h, "se_normalized_residual", s.normalized_residual.se);
      line(s.h, "mean_t_grad", s.mean_t_grad);
      line(s.h, "mean_t_stoch", s.mean_t_stoch);
      line(s.h, "mean_t_f1", s.mean_t_f1);
      line(s.h, "mean_t_f2", s.mean_t_f2);
    }
    for (const auto& m : r.moments) {
      line(m.h, "max_mean_grad_p" + short_num(m.p), m.max_mean_grad);
      line(m.h, "mean_max_l2_p" + short_num(m.p), m.mean_max_l2);
    }
    for (const auto& e : r.eta) {
      line(e.h, "mean_violation_e1", e.violation_e1.mean);
      line(e.h, "se_violation_e1", e.violation_e1.se);
      line(e.h, "mean_violation_mixed", e.violation_mixed.mean);
      line(e.h, "se_violation_mixed", e.violation_mixed.se);
      for (std::size_t i = 0; i < e.eps.size(); ++i) {
        line(e.h, "mean_orthogonality_eps" + short_num(e.eps[i]), e.orthogonality[i].mean);
        line(e.h, "se_orthogonality_eps" + short_num(e.eps[i]), e.orthogonality[i].se);
      }
    }
  }
}

}  // namespace rshe
