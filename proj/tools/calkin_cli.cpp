#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "calkin/deltanorm.hpp"
#include "calkin/dyadic.hpp"
#include "calkin/functionals.hpp"
#include "calkin/json_io.hpp"
#include "calkin/majorization.hpp"
#include "calkin/transfer.hpp"
#include "calkin/verify.hpp"

namespace {

using namespace calkin;
using json::Json;

enum class Exit { Ok = 0, Domain = 1, Verification = 2 };

struct Settings {
  std::uint64_t seed = 0;
  long trials = -1;
  double tolerance = 1e-9;
  long depth = 8;
  std::string format = "json";
};

/// Thrown for malformed input files; carries the byte offset of the problem.
struct InputError {
  std::string file;
  std::string message;
  std::size_t byte = 0;
};

Json read_input(const std::string& path) {
  std::string text;
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    text = ss.str();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    text = ss.str();
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError{path, e.what(), e.byte};
  }
}

bool looks_like_sequence(const Json& j) { return j.is_object() && j.contains("values") && j.contains("lo"); }
bool looks_like_function(const Json& j) { return j.is_object() && j.contains("breakpoints"); }
bool looks_like_rep(const Json& j) { return j.is_object() && j.contains("subject"); }

Operator as_operator(const Json& j) {
  if (looks_like_function(j)) return Operator::commutative(json::step_from(j));
  return json::operator_from(j);
}

StepFunction as_mu(const Json& j) {
  if (looks_like_function(j)) return decreasing_rearrangement(json::step_from(j));
  return singular_value_function(json::operator_from(j));
}

std::string scalar_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

void emit(const Json& j, const Settings& s) {
  if (s.format == "text" && j.is_object()) {
    for (const auto& [k, v] : j.items())
      std::cout << k << ": " << (v.is_structured() ? v.dump() : scalar_text(v)) << "\n";
    return;
  }
  std::cout << j.dump(2) << "\n";
}

Json run_verify(const std::string& target, const Settings& s, bool& pass) {
  verify::Options o;
  o.trials = s.trials;
  o.seed = s.seed;
  o.tolerance = s.tolerance;
  o.depth = s.depth;
  const std::vector<std::string> names = target == "all" ? verify::suite_names() : std::vector<std::string>{target};
  Json suites = Json::array();
  pass = true;
  for (const auto& r : verify::run_suites(names, o)) {
    pass = pass && r.pass();
    suites.push_back(r.to_json());
  }
  return {{"seed", s.seed}, {"suites", suites}, {"pass", pass}};
}

void emit_verify(const Json& report, const Settings& s) {
  if (s.format != "text") {
    std::cout << report.dump(2) << "\n";
    return;
  }
  for (const auto& suite : report["suites"]) {
    std::cout << (suite["pass"].get<bool>() ? "PASS " : "FAIL ") << suite["suite"].get<std::string>() << "\n";
    for (const auto& c : suite["checks"])
      std::cout << "  " << (c["pass"].get<bool>() ? "ok   " : "FAIL ") << c["check"].get<std::string>() << " ("
                << c["cases"].get<long>() - c["failed"].get<long>() << "/" << c["cases"].get<long>() << ")\n";
  }
  std::cout << (report["pass"].get<bool>() ? "PASS" : "FAIL") << "\n";
}

Json trace_json(const TraceValue& t) {
  Json j{{"value", t.re.str()}, {"exact", t.exact}};
  if (t.im != 0) j["imag"] = json::rational(t.im);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact tools for singular value functions, dyadic decompositions and singular traces"};
  app.require_subcommand(1);
  Settings s;
  app.add_option("--seed", s.seed, "Seed for random trials")->default_val(0);
  app.add_option("--trials", s.trials, "Trials per randomized check (default: per suite)");
  app.add_option("--tolerance", s.tolerance, "Tolerance for numeric comparisons")->default_val(1e-9);
  app.add_option("--depth", s.depth, "Tail depth explored by oracles")->default_val(8);
  app.add_option("--format", s.format, "Output format")->check(CLI::IsMember({"json", "text"}))->default_val("json");
  app.fallthrough();

  std::string in1, in2, theta = "summation", norm = "l1", level = "fn", suite;
  long lambda = 1, k = 1;
  bool stable = false;

  auto one_input = [&](CLI::App* c) { c->add_option("input", in1, "JSON file, or - for stdin")->required(); };

  auto* rearrange = app.add_subcommand("rearrange", "Decreasing rearrangement of a step function");
  one_input(rearrange);
  auto* dmap = app.add_subcommand("dmap", "Step function sum_n x_n chi_[2^n, 2^(n+1))");
  one_input(dmap);
  auto* phi = app.add_subcommand("phi", "Sample f* at the powers of two");
  one_input(phi);
  auto* phiav = app.add_subcommand("phiav", "Cell averages of f* over dyadic intervals");
  one_input(phiav);
  auto* omap = app.add_subcommand("omap", "Ordering numbers of a sequence");
  one_input(omap);
  auto* shiftc = app.add_subcommand("shift", "Shift a sequence by k places");
  shiftc->add_option("-k,--by", k, "Shift amount")->default_val(1);
  one_input(shiftc);
  auto* mu = app.add_subcommand("mu", "Singular value function of an operator or step function");
  one_input(mu);
  auto* tracec = app.add_subcommand("trace", "Standard trace of an operator");
  one_input(tracec);
  auto* majorize = app.add_subcommand("majorize", "Decide uniform majorization of Y by X");
  majorize->add_option("--lambda", lambda, "Dilation parameter")->default_val(1);
  majorize->add_option("Y", in1, "Majorized operator or function")->required();
  majorize->add_option("X", in2, "Majorizing operator or function")->required();
  auto* decompose_c = app.add_subcommand("dyadic-decompose", "Canonical dyadic representation of an operator");
  one_input(decompose_c);
  auto* validate_c = app.add_subcommand("dyadic-validate", "Check a dyadic representation");
  one_input(validate_c);
  auto* trace_eval_c = app.add_subcommand("trace-eval", "Evaluate a trace built from a shift-invariant functional");
  trace_eval_c->add_option("--theta", theta, "summation|limplus|limminus|cesaro+|cesaro-|counterexample")
      ->default_val("summation");
  one_input(trace_eval_c);
  auto* classify_c = app.add_subcommand("classify", "Support and positivity of a functional");
  classify_c->add_option("--theta", theta, "Functional name")->default_val("summation");
  auto* norm_c = app.add_subcommand("norm", "Evaluate a Delta-norm");
  norm_c->add_option("--N", norm, "l1|linf|lp:p|sum:A,B")->default_val("l1");
  norm_c->add_option("--level", level, "fn|seq|op")->check(CLI::IsMember({"fn", "seq", "op"}))->default_val("fn");
  norm_c->add_flag("--stable", stable, "Use the stabilized operator norm");
  one_input(norm_c);
  auto* audit = app.add_subcommand("norm-audit", "Empirical quasi-triangle, shift and dilation constants");
  audit->add_option("--N", norm, "l1|linf|lp:p|sum:A,B")->default_val("l1");
  auto* verify_c = app.add_subcommand("verify", "Run a property suite, or all of them");
  verify_c->add_option("suite", suite, "Suite name or 'all'")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << Json{{"error", "UsageError"}, {"message", e.what()}}.dump(2) << "\n";
    return static_cast<int>(Exit::Domain);
  }

  try {
    if (*verify_c) {
      bool pass = false;
      Json report = run_verify(suite, s, pass);
      emit_verify(report, s);
      return static_cast<int>(pass ? Exit::Ok : Exit::Verification);
    }
    if (*classify_c) {
      emit(json::to_json(classify(theta_by_name(theta))), s);
      return 0;
    }
    if (*audit) {
      const long trials = s.trials < 0 ? 200 : s.trials;
      ConstantsReport r = constants_report(parse_norm(norm), trials, s.seed);
      Json j{{"norm", parse_norm(norm).name()}};
      j.update(json::to_json(r));
      emit(j, s);
      return static_cast<int>(r.ok(s.tolerance) ? Exit::Ok : Exit::Verification);
    }

    const Json a = read_input(in1);
    Json out;
    if (*rearrange) {
      out = json::to_json(decreasing_rearrangement(json::step_from(a)));
    } else if (*dmap) {
      out = json::to_json(pietsch_D(json::sequence_from(a)));
    } else if (*phi) {
      out = json::to_json(phi_sample(json::step_from(a)));
    } else if (*phiav) {
      out = json::to_json(phi_av(json::step_from(a)));
    } else if (*omap) {
      out = json::to_json(ordering_numbers(json::sequence_from(a)));
    } else if (*shiftc) {
      out = json::to_json(shift(json::sequence_from(a), k));
    } else if (*mu) {
      out = json::to_json(as_mu(a));
    } else if (*tracec) {
      out = trace_json(trace(as_operator(a)));
    } else if (*majorize) {
      const Json b = read_input(in2);
      out = json::to_json(uniformly_majorized_mu(as_mu(a), as_mu(b), lambda));
    } else if (*decompose_c) {
      out = json::to_json(decompose(json::operator_from(a)));
    } else if (*validate_c) {
      ValidationReport r = validate(json::rep_from(a));
      emit(json::to_json(r), s);
      return static_cast<int>(r.ok() ? Exit::Ok : Exit::Verification);
    } else if (*trace_eval_c) {
      const Theta th = theta_by_name(theta);
      if (looks_like_sequence(a))
        out = json::to_json(theta_eval(th, json::sequence_from(a)));
      else if (looks_like_rep(a))
        out = json::to_json(trace_eval(th, json::rep_from(a)));
      else
        out = json::to_json(trace_eval(th, as_operator(a)));
    } else if (*norm_c) {
      const DeltaNorm N = parse_norm(norm);
      NormValue v;
      if (stable)
        v = stable_norm(N, as_operator(a));
      else if (level == "seq")
        v = norm_eval(N, json::sequence_from(a));
      else if (level == "fn")
        v = norm_eval(N, json::step_from(a));
      else
        v = norm_eval(N, as_operator(a));
      out = Json{{"norm", N.name()}};
      out.update(json::to_json(v));
    }
    emit(out, s);
    return 0;
  } catch (const InputError& e) {
    std::cout << Json{{"error", "ParseError"}, {"message", e.message}, {"file", e.file}, {"byte", e.byte}}.dump(2)
              << "\n";
  } catch (const Error& e) {
    std::cout << json::error_json(e).dump(2) << "\n";
  } catch (const nlohmann::json::exception& e) {
    std::cout << Json{{"error", "ParseError"}, {"message", e.what()}}.dump(2) << "\n";
  }
  return static_cast<int>(Exit::Domain);
}
