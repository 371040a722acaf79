#pragma once

#include "sloclab/linalg.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sloclab {

enum class Verdict { Pass, Fail, Info };

std::string_view to_string(Verdict v);

// Outcome of one named check.  `statistic` is the quantity compared against
// `tolerance` (usually a worst-case gap); INFO reports carry a measured value
// with no threshold.
struct LemmaReport {
  std::string check_id;
  double statistic = 0.0;
  double stderr = 0.0;
  double tolerance = 0.0;
  Verdict verdict = Verdict::Info;
  std::string notes;
  std::vector<LemmaReport> details;

  bool passed() const { return verdict != Verdict::Fail; }
};

// Round-off allowance added to every statistical threshold, so that
// identities which hold exactly (zero stderr) are not failed by the last bit.
inline constexpr double kRoundoff = 1e-12;

struct EntryComparison {
  double worst_gap = 0.0;     // |gap| at the entry with the largest z-score
  double worst_stderr = 0.0;  // stderr at that entry
  double max_gap = 0.0;       // largest |gap| over all entries
  bool pass = true;
};

// Entrywise |gap_ij| <= sigmas * stderr_ij + kRoundoff.
EntryComparison compare_entries(const Matrix& gap, const Matrix& stderr, double sigmas);

LemmaReport make_report(std::string id, const EntryComparison& c, double sigmas,
                        std::string notes = {});

// One-sided check value <= limit (or >= limit when `upper` is false) with
// slack sigmas * stderr.  statistic is the signed excess over the limit.
LemmaReport bound_report(std::string id, double value, double stderr, double limit,
                         double sigmas, bool upper = true, std::string notes = {});

// Two-sided |value - target| <= sigmas * stderr + extra.
LemmaReport equality_report(std::string id, double value, double target, double stderr,
                            double sigmas, double extra = 0.0, std::string notes = {});

LemmaReport info_report(std::string id, double value, double stderr, std::string notes = {});

// Aggregate: PASS iff no detail FAILs (INFO details are ignored).
LemmaReport combine(std::string id, std::vector<LemmaReport> details, std::string notes = {});

std::string format_double(double x);

}  // namespace sloclab
