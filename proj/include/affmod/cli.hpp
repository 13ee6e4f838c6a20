#ifndef AFFMOD_CLI_HPP
#define AFFMOD_CLI_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "affmod/classify.hpp"
#include "affmod/factor.hpp"

namespace affmod {

/// One module declaration from a session file, still symbolic: construction
/// happens inside run_tasks so a bad module fails its tasks, not the run.
struct ModuleSpec {
  std::string name;
  std::string kind;  // evaluation | induced | tensor | opaque | conjugate
  std::string base;  // evaluation base: "natural" | "trivial" | "custom"
  std::vector<SpMat> base_actions;       // base == "custom"
  Cyclo point, root;                     // evaluation
  Cyclo level;                           // induced
  std::string top;                       // induced top: "trivial" | "custom"
  int top_dim = 0;                       // top == "custom"
  std::map<int, SpMat> top_actions;      // top == "custom", grade-0 indices
  long depth_num = 0;                    // induced, numerator units
  std::vector<std::string> factors;      // tensor
  std::string of;                        // opaque | conjugate source
  long window_lo = 0, window_hi = 0;     // opaque | conjugate
  std::optional<SpMat> change;           // conjugate; absent = seeded random
};

struct TaskSpec {
  std::string kind;  // verify-bracket | category | annihilator | factorize |
                     // classify | isomorphic | nilpotency
  std::string module;
  std::string other;  // isomorphic only
  std::optional<std::pair<long, long>> window;
  long degree_bound = 0;
  bool expect_isomorphic = true;
  std::string element_name;  // nilpotency: basis name, or
  std::vector<Cyclo> element_coeffs;  // explicit coefficient vector
};

struct Session {
  int modulus = 0;
  std::string algebra_name;
  std::string automorphism;
  const CycloField* field = nullptr;
  AlgebraPtr alg;
  unsigned long seed = 0;
  int max_dim = 4096;
  std::vector<ModuleSpec> modules;
  std::vector<TaskSpec> tasks;
};

struct TaskResult {
  std::string kind;
  std::string module;
  std::string status;  // "pass" | "fail" | "inconclusive"
  std::string detail;
  /// Ordered key/value payload; every fail carries its counterexample here
  /// and every inconclusive carries the limiting window or bound.
  std::vector<std::pair<std::string, std::string>> evidence;
};

struct Report {
  int modulus = 0;
  std::string algebra_name;
  std::string automorphism;
  unsigned long seed = 0;
  std::vector<TaskResult> tasks;
  std::vector<double> timings_ms;  // parallel to tasks; human report only
  int passed = 0, failed = 0, inconclusive = 0;
};

/// Parses and validates a JSON session. Syntax errors carry the parser's
/// line/column; semantic errors carry the offending field path.
Session parse_session(const std::string& text);

/// Executes the tasks in declaration order, capturing per-task errors as
/// failed results. Identical sessions produce identical reports; the
/// parallel flag runs tasks concurrently but assembles results in order.
Report run_tasks(const Session& s, bool parallel = false);

/// Canonical machine-readable JSON; byte-identical across runs (timing and
/// anything else nondeterministic is excluded).
std::string machine_report(const Report& r);

/// Human-readable text with per-task timing.
std::string human_report(const Report& r);

/// 0 all pass, 1 any fail, 2 inconclusive without failures.
int report_exit_code(const Report& r);

/// Full command-line entry point (subcommands run, verify-bracket, category,
/// annihilator, factorize, classify, isomorphic, nilpotency). Returns the
/// process exit code; 3 on usage or parse errors.
int run_cli(int argc, const char* const* argv);

}  // namespace affmod

#endif
