#include "stflow/report.hpp"

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "stflow/grid.hpp"
#include "stflow/io.hpp"

namespace stflow {

double VerificationReport::get(const std::string& key, double fallback) const {
  for (const auto& [k, v] : extra)
    if (k == key) return v;
  return fallback;
}

VerificationReport VerificationReport::make(const std::string& check, double margin,
                                            double tolerance,
                                            const std::string& digest) {
  VerificationReport r;
  r.check = check;
  r.margin = margin;
  r.tolerance = tolerance;
  r.inputs_digest = digest;
  r.verdict = margin >= -tolerance ? Verdict::Pass : Verdict::Fail;
  return r;
}

void VerificationReport::set_witness(int i, int j, double t) {
  witness = Witness{i, j, t};
}

namespace {

const char* verdict_name(VerificationReport::Verdict v) {
  switch (v) {
    case VerificationReport::Verdict::Pass: return "pass";
    case VerificationReport::Verdict::Fail: return "fail";
    default: return "not-applicable";
  }
}

VerificationReport::Verdict verdict_from(const std::string& s) {
  if (s == "pass") return VerificationReport::Verdict::Pass;
  if (s == "fail") return VerificationReport::Verdict::Fail;
  if (s == "not-applicable") return VerificationReport::Verdict::NotApplicable;
  throw GridError("report: unknown verdict '" + s + "'");
}

}  // namespace

std::string to_record(const VerificationReport& r) {
  std::ostringstream os;
  os << "check=" << r.check << " verdict=" << verdict_name(r.verdict)
     << " margin=" << format_g17(r.margin)
     << " tolerance=" << format_g17(r.tolerance);
  if (!r.inputs_digest.empty()) os << " digest=" << r.inputs_digest;
  if (r.witness)
    os << " witness_i=" << r.witness->i << " witness_j=" << r.witness->j
       << " witness_t=" << format_g17(r.witness->t);
  for (const auto& [k, v] : r.extra) os << " extra." << k << '=' << format_g17(v);
  return os.str();
}

VerificationReport from_record(const std::string& line) {
  VerificationReport r;
  std::istringstream is(line);
  std::string tok;
  bool have_wi = false, have_wj = false, have_wt = false;
  VerificationReport::Witness w;
  while (is >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos)
      throw GridError("report: malformed token '" + tok + "'");
    std::string key = tok.substr(0, eq);
    std::string val = tok.substr(eq + 1);
    if (key == "check") {
      r.check = val;
    } else if (key == "verdict") {
      r.verdict = verdict_from(val);
    } else if (key == "margin") {
      r.margin = std::stod(val);
    } else if (key == "tolerance") {
      r.tolerance = std::stod(val);
    } else if (key == "digest") {
      r.inputs_digest = val;
    } else if (key == "witness_i") {
      w.i = std::stoi(val);
      have_wi = true;
    } else if (key == "witness_j") {
      w.j = std::stoi(val);
      have_wj = true;
    } else if (key == "witness_t") {
      w.t = std::stod(val);
      have_wt = true;
    } else if (key.rfind("extra.", 0) == 0) {
      r.extra.push_back({key.substr(6), std::stod(val)});
    } else {
      throw GridError("report: unknown key '" + key + "'");
    }
  }
  if (r.check.empty()) throw GridError("report: record lacks a check name");
  if (have_wi && have_wj && have_wt) r.witness = w;
  return r;
}

void write_reports(std::ostream& os, const std::vector<VerificationReport>& rs) {
  for (const auto& r : rs) os << to_record(r) << '\n';
}

std::vector<VerificationReport> read_reports(std::istream& is) {
  std::vector<VerificationReport> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(from_record(line));
  }
  return out;
}

void save_reports(const std::string& path, const std::vector<VerificationReport>& rs) {
  std::ofstream os(path);
  if (!os) throw GridError("report: cannot open " + path + " for writing");
  write_reports(os, rs);
}

std::vector<VerificationReport> load_reports(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw GridError("report: cannot open " + path + " for reading");
  return read_reports(is);
}

void export_plot_csv(const std::vector<VerificationReport>& rs,
                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream mh(fs::path(out_dir) / "margin_vs_h.csv");
  mh << "check,h,margin,tolerance\n";
  for (const auto& r : rs) {
    double h = r.get("h", -1.0);
    if (h <= 0.0) continue;
    mh << r.check << ',' << format_g17(h) << ',' << format_g17(r.margin) << ','
       << format_g17(r.tolerance) << '\n';
  }

  std::ofstream ml(fs::path(out_dir) / "margin_vs_lambda.csv");
  ml << "check,lambda,margin,volume\n";
  for (const auto& r : rs) {
    double lam = r.get("lambda", -1.0);
    if (lam <= 0.0) continue;
    ml << r.check << ',' << format_g17(lam) << ',' << format_g17(r.margin) << ','
       << format_g17(r.get("volume", 0.0)) << '\n';
  }

  std::ofstream ct(fs::path(out_dir) / "c0_vs_t.csv");
  ct << "check,t,C0\n";
  for (const auto& r : rs) {
    for (int idx = 0;; ++idx) {
      double t = r.get("t" + std::to_string(idx), -1.0);
      double c0 = r.get("C0_" + std::to_string(idx), -1.0);
      if (t < 0.0 || c0 < 0.0) break;
      ct << r.check << ',' << format_g17(t) << ',' << format_g17(c0) << '\n';
    }
  }
}

std::string digest_of(const std::vector<double>& values) {
  // FNV-1a over the raw bytes, rendered as 16 hex digits
  std::uint64_t hash = 1469598103934665603ull;
  for (double v : values) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof(double));
    for (unsigned char b : bytes) {
      hash ^= b;
      hash *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace stflow
