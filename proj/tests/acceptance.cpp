// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--expect-fail 1,8]
//
// Exit status is 0 when every criterion passes except those listed with
// --expect-fail, which must fail. An expected failure that passes is an error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "calkin/verify.hpp"

namespace {

using namespace calkin;
using namespace calkin::verify;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string note;
};

std::string summary(const Check& c) {
  std::ostringstream ss;
  ss << c.cases - c.failed << "/" << c.cases;
  if (c.skipped) ss << " (" << c.skipped << " skipped)";
  return ss.str();
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_failures;
  for (int i = 1; i < argc; ++i)
    if (std::string(argv[i]) == "--expect-fail" && i + 1 < argc) expected_failures = parse_list(argv[++i]);

  Options o;
  o.seed = 0;

  std::map<int, Outcome> results;

  {
    const auto t0 = Clock::now();
    Check c = check_order_equality(o, 1000);
    const double dt = seconds_since(t0);
    std::ostringstream note;
    note << summary(c) << " sequences, " << dt << " s";
    results[1] = {c.pass() && dt < 5.0, note.str()};
  }

  // Criteria 2 to 11 read their checks from one full run; the second run is
  // only compared byte for byte.
  const auto t0 = Clock::now();
  const std::vector<SuiteReport> first = run_suites(suite_names(), o);
  const double full_seconds = seconds_since(t0);
  const std::vector<SuiteReport> second = run_suites(suite_names(), o);

  std::map<std::string, const Check*> by_name;
  for (const auto& r : first)
    for (const auto& c : r.checks) by_name[c.name] = &c;
  auto all_of = [&](std::initializer_list<const char*> names) {
    Outcome out{true, ""};
    for (const char* n : names) {
      const Check& c = *by_name.at(n);
      out.pass = out.pass && c.pass();
      out.note += (out.note.empty() ? "" : "; ") + std::string(n) + " " + summary(c);
    }
    return out;
  };

  results[2] = all_of({"(Dx)* <= D o(x) <= sigma_2 (Dx)*", "f <= D Phi f <= sigma_2 f"});
  results[3] = all_of({"mu(2t, X+Y) <= mu(t, X) + mu(t, Y), numeric pairs",
                       "mu(2t, X+Y) <= mu(t, X) + mu(t, Y), exact diagonal pairs"});
  results[4] = all_of({"diag(8,4,2,1) decomposition", "dyadic decomposition bounds on random diagonals"});
  results[5] = all_of({"coefficient difference is a coboundary"});
  results[6] = all_of({"summation trace equals tau", "trace linearity", "sum of representations"});
  results[7] = all_of({"singular traces on reference elements"});
  {
    Outcome c = all_of({"trace-derived functional breaks invariance"});
    const CounterexampleFacts f = counterexample_facts(20);
    const double err = std::abs(1.0 - f.partial_sum);
    char buf[96];
    std::snprintf(buf, sizeof buf, "; |1 - partial sum| at N = 20 is %.3g (bound 1e-6)", err);
    c.note += buf;
    c.pass = c.pass && err < 1e-6;
    results[8] = c;
  }
  results[9] = all_of({"round trip through the diagonal embedding"});
  results[10] = all_of({"exact majorization agrees with the 1/64 grid", "finite series majorization"});
  results[11] = all_of({"norm transfer", "stable norm sandwich", "quasi-triangle, shift and dilation constants"});
  {
    bool same = first.size() == second.size();
    for (std::size_t i = 0; same && i < first.size(); ++i)
      same = first[i].to_json().dump() == second[i].to_json().dump();
    std::ostringstream note;
    note << (same ? "identical reports" : "reports differ") << ", full run " << full_seconds << " s";
    results[12] = {same && full_seconds < 60.0, note.str()};
  }

  int status = 0;
  for (const auto& [k, r] : results) {
    const bool expected = expected_failures.count(k) > 0;
    std::printf("criterion %2d: %s  %s%s\n", k, r.pass ? "PASS" : "FAIL", r.note.c_str(),
                expected ? (r.pass ? "  [expected to fail, but passed]" : "  [known failure]") : "");
    if (r.pass == expected) status = 1;
  }
  return status;
}
