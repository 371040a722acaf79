#include "sloclab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace sloclab {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "PASS";
    case Verdict::Fail: return "FAIL";
    case Verdict::Info: return "INFO";
  }
  return "?";
}

EntryComparison compare_entries(const Matrix& gap, const Matrix& stderr, double sigmas) {
  EntryComparison c;
  double worst_z = -1.0;
  for (Eigen::Index j = 0; j < gap.cols(); ++j) {
    for (Eigen::Index i = 0; i < gap.rows(); ++i) {
      const double g = std::abs(gap(i, j));
      const double s = stderr(i, j);
      const double z = g / (s + kRoundoff / sigmas);
      c.max_gap = std::max(c.max_gap, g);
      if (z > worst_z) {
        worst_z = z;
        c.worst_gap = g;
        c.worst_stderr = s;
      }
      if (!(g <= sigmas * s + kRoundoff)) c.pass = false;
    }
  }
  return c;
}

LemmaReport make_report(std::string id, const EntryComparison& c, double sigmas,
                        std::string notes) {
  LemmaReport r;
  r.check_id = std::move(id);
  r.statistic = c.worst_gap;
  r.stderr = c.worst_stderr;
  r.tolerance = sigmas * c.worst_stderr + kRoundoff;
  r.verdict = c.pass ? Verdict::Pass : Verdict::Fail;
  r.notes = std::move(notes);
  return r;
}

LemmaReport bound_report(std::string id, double value, double stderr, double limit,
                         double sigmas, bool upper, std::string notes) {
  LemmaReport r;
  r.check_id = std::move(id);
  r.statistic = upper ? value - limit : limit - value;
  r.stderr = stderr;
  r.tolerance = sigmas * stderr + kRoundoff;
  r.verdict = r.statistic <= r.tolerance ? Verdict::Pass : Verdict::Fail;
  r.notes = std::move(notes);
  return r;
}

LemmaReport equality_report(std::string id, double value, double target, double stderr,
                            double sigmas, double extra, std::string notes) {
  LemmaReport r;
  r.check_id = std::move(id);
  r.statistic = std::abs(value - target);
  r.stderr = stderr;
  r.tolerance = sigmas * stderr + extra + kRoundoff;
  r.verdict = r.statistic <= r.tolerance ? Verdict::Pass : Verdict::Fail;
  r.notes = std::move(notes);
  return r;
}

LemmaReport info_report(std::string id, double value, double stderr, std::string notes) {
  LemmaReport r;
  r.check_id = std::move(id);
  r.statistic = value;
  r.stderr = stderr;
  r.verdict = Verdict::Info;
  r.notes = std::move(notes);
  return r;
}

LemmaReport combine(std::string id, std::vector<LemmaReport> details, std::string notes) {
  LemmaReport r;
  r.check_id = std::move(id);
  r.verdict = Verdict::Pass;
  bool any_graded = false;
  double worst = -1.0;
  for (const auto& d : details) {
    if (d.verdict == Verdict::Info) continue;
    any_graded = true;
    if (d.verdict == Verdict::Fail) r.verdict = Verdict::Fail;
    const double margin = d.statistic / (d.tolerance > 0 ? d.tolerance : 1.0);
    if (margin > worst) {
      worst = margin;
      r.statistic = d.statistic;
      r.stderr = d.stderr;
      r.tolerance = d.tolerance;
    }
  }
  if (!any_graded) r.verdict = Verdict::Info;
  r.details = std::move(details);
  r.notes = std::move(notes);
  return r;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace sloclab
