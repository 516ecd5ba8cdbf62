#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace stflow {

// Outcome of one named inequality check. margin is the signed slack in the
// inequality's own units (>= 0 comfortable, < 0 violated); the check passes
// exactly when margin >= -tolerance. NotApplicable marks hypothesis failure,
// which is distinct from a violated conclusion.
struct VerificationReport {
  enum class Verdict { Pass, Fail, NotApplicable };

  std::string check;
  std::string inputs_digest;
  Verdict verdict = Verdict::Pass;
  double margin = 0.0;
  double tolerance = 0.0;
  struct Witness {
    int i = -1;
    int j = -1;
    double t = 0.0;
  };
  std::optional<Witness> witness;  // present whenever verdict == Fail
  std::vector<std::pair<std::string, double>> extra;  // named scalar diagnostics

  bool passed() const { return verdict == Verdict::Pass; }
  void add(const std::string& key, double value) { extra.push_back({key, value}); }
  double get(const std::string& key, double fallback = 0.0) const;

  static VerificationReport make(const std::string& check, double margin,
                                 double tolerance, const std::string& digest = "");
  void set_witness(int i, int j, double t);
};

// One line per report: space-separated key=value tokens, values with 17
// significant digits. Used for the persisted report files.
std::string to_record(const VerificationReport& r);
VerificationReport from_record(const std::string& line);

void write_reports(std::ostream& os, const std::vector<VerificationReport>& rs);
std::vector<VerificationReport> read_reports(std::istream& is);
void save_reports(const std::string& path, const std::vector<VerificationReport>& rs);
std::vector<VerificationReport> load_reports(const std::string& path);

// CSV exports for plotting: one file per series kind, one-line header.
// margin-vs-h uses reports carrying extra keys "h"; margin-vs-lambda uses
// "lambda" (plus "volume" when present); C0-vs-t uses "t" and "C0".
void export_plot_csv(const std::vector<VerificationReport>& rs,
                     const std::string& out_dir);

std::string digest_of(const std::vector<double>& values);

}  // namespace stflow
