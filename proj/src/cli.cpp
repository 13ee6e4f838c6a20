#include "affmod/cli.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace affmod {
namespace {

using json = nlohmann::ordered_json;

const std::set<std::string> kModuleKinds = {"evaluation", "induced", "tensor",
                                            "opaque", "conjugate"};
const std::set<std::string> kTaskKinds = {
    "verify-bracket", "category",   "annihilator", "factorize",
    "classify",       "isomorphic", "nilpotency"};

Rational rational_from_json(const json& j, const std::string& path) {
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    try {
      Rational r(s);
      if (r.get_den() == 0)
        throw Error(path + ": zero denominator in '" + s + "'");
      r.canonicalize();
      return r;
    } catch (const std::invalid_argument&) {
      throw Error(path + ": bad rational literal '" + s + "'");
    }
  }
  throw Error(path + ": expected an integer or a rational string");
}

Cyclo cyclo_from_json(const CycloField* F, const json& j,
                      const std::string& path) {
  if (j.is_number_integer() || j.is_string())
    return Cyclo(F, rational_from_json(j, path));
  if (j.is_array()) {
    std::vector<Rational> coeffs;
    for (size_t k = 0; k < j.size(); ++k)
      coeffs.push_back(
          rational_from_json(j[k], path + "[" + std::to_string(k) + "]"));
    return Cyclo::from_coeffs(F, std::move(coeffs));
  }
  throw Error(path +
              ": expected an integer, a rational string, or a zeta-power "
              "coefficient array");
}

SpMat matrix_from_json(const CycloField* F, const json& j,
                       const std::string& path) {
  if (!j.is_array() || j.empty())
    throw Error(path + ": expected a nonempty array of rows");
  const size_t rows = j.size();
  size_t cols = 0;
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array())
      throw Error(path + "[" + std::to_string(r) + "]: expected a row array");
    if (r == 0)
      cols = j[r].size();
    else if (j[r].size() != cols)
      throw Error(path + ": ragged rows");
  }
  if (cols == 0) throw Error(path + ": rows must be nonempty");
  SpMat m(F, static_cast<int>(rows), static_cast<int>(cols));
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) {
      const Cyclo v = cyclo_from_json(
          F, j[r][c],
          path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
      if (!v.is_zero())
        m.set(static_cast<int>(r), static_cast<int>(c), v);
    }
  return m;
}

long long_field(const json& j, const std::string& key, const std::string& path,
                bool required, long fallback = 0) {
  if (!j.contains(key)) {
    if (required) throw Error(path + "." + key + ": required");
    return fallback;
  }
  if (!j[key].is_number_integer())
    throw Error(path + "." + key + ": expected an integer");
  return j[key].get<long>();
}

std::string string_field(const json& j, const std::string& key,
                         const std::string& path, bool required,
                         const std::string& fallback = "") {
  if (!j.contains(key)) {
    if (required) throw Error(path + "." + key + ": required");
    return fallback;
  }
  if (!j[key].is_string())
    throw Error(path + "." + key + ": expected a string");
  return j[key].get<std::string>();
}

std::pair<long, long> window_field(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw Error(path + ": expected [lo, hi] exponent numerators");
  const long lo = j[0].get<long>(), hi = j[1].get<long>();
  if (lo > hi) throw Error(path + ": lo exceeds hi");
  return {lo, hi};
}

AlgebraPtr algebra_from_json(const CycloField* F, const json& spec) {
  if (!spec.is_object()) throw Error("algebra: expected an object");
  if (spec.contains("custom")) {
    const json& c = spec["custom"];
    const std::string path = "algebra.custom";
    GradedLieAlgebra g;
    g.field = F;
    g.order = static_cast<int>(long_field(c, "order", path, true));
    if (!c.contains("basis") || !c["basis"].is_array())
      throw Error(path + ".basis: expected an array of names");
    for (const auto& b : c["basis"]) g.basis_names.push_back(b.get<std::string>());
    g.dim = static_cast<int>(g.basis_names.size());
    g.name = "custom";
    g.twist = "custom";
    if (!c.contains("grades") || !c["grades"].is_array() ||
        c["grades"].size() != static_cast<size_t>(g.dim))
      throw Error(path + ".grades: expected one grade per basis element");
    for (const auto& gr : c["grades"]) g.grades.push_back(gr.get<int>());
    if (!c.contains("bracket") || !c["bracket"].is_array() ||
        c["bracket"].size() != static_cast<size_t>(g.dim))
      throw Error(path + ".bracket: expected a dim x dim table of vectors");
    for (int a = 0; a < g.dim; ++a) {
      const json& row = c["bracket"][a];
      if (!row.is_array() || row.size() != static_cast<size_t>(g.dim))
        throw Error(path + ".bracket[" + std::to_string(a) + "]: bad row");
      std::vector<Vec> out_row;
      for (int b = 0; b < g.dim; ++b) {
        const json& cell = row[b];
        const std::string cpath = path + ".bracket[" + std::to_string(a) +
                                  "][" + std::to_string(b) + "]";
        if (!cell.is_array() || cell.size() != static_cast<size_t>(g.dim))
          throw Error(cpath + ": expected a coefficient vector");
        Vec v = vec_zero(F, g.dim);
        for (int k = 0; k < g.dim; ++k)
          v[k] = cyclo_from_json(F, cell[k],
                                 cpath + "[" + std::to_string(k) + "]");
        out_row.push_back(std::move(v));
      }
      g.bracket.push_back(std::move(out_row));
    }
    if (!c.contains("gram"))
      throw Error(path + ".gram: the invariant form is required");
    const SpMat gram = matrix_from_json(F, c["gram"], path + ".gram");
    if (gram.rows() != g.dim || gram.cols() != g.dim)
      throw Error(path + ".gram: expected a dim x dim matrix");
    for (int r = 0; r < g.dim; ++r) {
      Vec row = vec_zero(F, g.dim);
      for (int cidx = 0; cidx < g.dim; ++cidx) row[cidx] = gram.get(r, cidx);
      g.gram.push_back(std::move(row));
    }
    if (c.contains("natural")) {
      const json& nat = c["natural"];
      if (!nat.is_array() || nat.size() != static_cast<size_t>(g.dim))
        throw Error(path + ".natural: expected one matrix per basis element");
      for (int b = 0; b < g.dim; ++b)
        g.natural_rep.push_back(matrix_from_json(
            F, nat[b], path + ".natural[" + std::to_string(b) + "]"));
      g.natural_dim = g.natural_rep.front().rows();
      for (const auto& m : g.natural_rep)
        if (m.rows() != g.natural_dim || m.cols() != g.natural_dim)
          throw Error(path + ".natural: matrices must share one square size");
    }
    return make_graded_algebra(std::move(g));
  }
  const std::string name = string_field(spec, "name", "algebra", true);
  const std::string twist =
      string_field(spec, "automorphism", "algebra", false, "identity");
  return builtin_graded_algebra(F, name, twist);
}

ModuleSpec module_from_json(const Session& s, const json& j, size_t idx,
                            const std::set<std::string>& known) {
  const std::string path = "modules[" + std::to_string(idx) + "]";
  if (!j.is_object()) throw Error(path + ": expected an object");
  ModuleSpec m;
  m.name = string_field(j, "name", path, true);
  if (m.name.empty()) throw Error(path + ".name: must be nonempty");
  if (known.count(m.name))
    throw Error(path + ".name: duplicate module name '" + m.name + "'");
  m.kind = string_field(j, "kind", path, true);
  if (!kModuleKinds.count(m.kind))
    throw Error(path + ".kind: unknown kind '" + m.kind + "'");
  const CycloField* F = s.field;
  const long N = s.alg->order;
  if (m.kind == "evaluation") {
    m.base = string_field(j, "base", path, false, "natural");
    if (m.base == "custom") {
      if (!j.contains("matrices") || !j["matrices"].is_array() ||
          j["matrices"].size() != static_cast<size_t>(s.alg->dim))
        throw Error(path +
                    ".matrices: expected one action matrix per algebra basis "
                    "element");
      for (size_t b = 0; b < j["matrices"].size(); ++b)
        m.base_actions.push_back(matrix_from_json(
            F, j["matrices"][b],
            path + ".matrices[" + std::to_string(b) + "]"));
    } else if (m.base != "natural" && m.base != "trivial") {
      throw Error(path + ".base: expected natural, trivial, or custom");
    }
    if (!j.contains("point")) throw Error(path + ".point: required");
    m.point = cyclo_from_json(F, j["point"], path + ".point");
    if (m.point.is_zero())
      throw Error(path + ".point: the evaluation point of module '" + m.name +
                  "' must be nonzero");
    if (!j.contains("root")) throw Error(path + ".root: required");
    m.root = cyclo_from_json(F, j["root"], path + ".root");
    if (m.root.pow(N) != m.point)
      throw Error(path + ".root: root^" + std::to_string(N) +
                  " does not equal the point of module '" + m.name + "'");
  } else if (m.kind == "induced") {
    if (!j.contains("level")) throw Error(path + ".level: required");
    m.level = cyclo_from_json(F, j["level"], path + ".level");
    m.depth_num = long_field(j, "depth", path, true);
    if (m.depth_num < 0) throw Error(path + ".depth: must be nonnegative");
    m.top = string_field(j, "top", path, false, "trivial");
    if (m.top == "custom") {
      if (!j.contains("top_actions") || !j["top_actions"].is_object())
        throw Error(path +
                    ".top_actions: expected an object keyed by grade-0 basis "
                    "names");
      m.top_dim = static_cast<int>(long_field(j, "top_dim", path, true));
      if (m.top_dim < 1) throw Error(path + ".top_dim: must be positive");
      for (const auto& [key, val] : j["top_actions"].items()) {
        int b;
        try {
          b = s.alg->basis_index(key);
        } catch (const Error&) {
          throw Error(path + ".top_actions." + key + ": unknown basis element");
        }
        if (s.alg->grades[b] != 0)
          throw Error(path + ".top_actions." + key +
                      ": only grade-0 basis elements act on a top module");
        m.top_actions[b] =
            matrix_from_json(F, val, path + ".top_actions." + key);
      }
    } else if (m.top != "trivial") {
      throw Error(path + ".top: expected trivial or custom");
    }
  } else if (m.kind == "tensor") {
    if (!j.contains("factors") || !j["factors"].is_array() ||
        j["factors"].empty())
      throw Error(path + ".factors: expected a nonempty array of module names");
    for (const auto& f : j["factors"]) {
      const std::string fname = f.get<std::string>();
      if (!known.count(fname))
        throw Error(path + ".factors: unknown module '" + fname +
                    "' (factors must be declared earlier)");
      m.factors.push_back(fname);
    }
  } else {  // opaque | conjugate
    m.of = string_field(j, "of", path, true);
    if (!known.count(m.of))
      throw Error(path + ".of: unknown module '" + m.of + "'");
    if (!j.contains("window")) throw Error(path + ".window: required");
    const auto [lo, hi] = window_field(j["window"], path + ".window");
    m.window_lo = lo;
    m.window_hi = hi;
    if (m.kind == "conjugate" && j.contains("matrix"))
      m.change = matrix_from_json(F, j["matrix"], path + ".matrix");
  }
  return m;
}

TaskSpec task_from_json(const Session& s, const json& j, size_t idx,
                        const std::set<std::string>& known) {
  const std::string path = "tasks[" + std::to_string(idx) + "]";
  if (!j.is_object()) throw Error(path + ": expected an object");
  TaskSpec t;
  t.kind = string_field(j, "kind", path, true);
  if (!kTaskKinds.count(t.kind))
    throw Error(path + ".kind: unknown kind '" + t.kind + "'");
  if (t.kind != "nilpotency") {
    t.module = string_field(j, "module", path, true);
    if (!known.count(t.module))
      throw Error(path + ".module: unknown module '" + t.module + "'");
  }
  if (t.kind == "isomorphic") {
    t.other = string_field(j, "other", path, true);
    if (!known.count(t.other))
      throw Error(path + ".other: unknown module '" + t.other + "'");
    if (j.contains("expect")) {
      if (!j["expect"].is_boolean())
        throw Error(path + ".expect: expected a boolean");
      t.expect_isomorphic = j["expect"].get<bool>();
    }
  }
  if (j.contains("window")) t.window = window_field(j["window"], path + ".window");
  t.degree_bound = long_field(j, "degree_bound", path, false);
  if (t.degree_bound < 0)
    throw Error(path + ".degree_bound: must be nonnegative");
  if (t.kind == "nilpotency") {
    if (!j.contains("element")) throw Error(path + ".element: required");
    const json& el = j["element"];
    if (el.is_string()) {
      t.element_name = el.get<std::string>();
      try {
        s.alg->basis_index(t.element_name);
      } catch (const Error&) {
        throw Error(path + ".element: unknown basis element '" +
                    t.element_name + "'");
      }
    } else if (el.is_array()) {
      if (el.size() != static_cast<size_t>(s.alg->dim))
        throw Error(path + ".element: expected " +
                    std::to_string(s.alg->dim) + " coefficients");
      for (size_t k = 0; k < el.size(); ++k)
        t.element_coeffs.push_back(cyclo_from_json(
            s.field, el[k], path + ".element[" + std::to_string(k) + "]"));
    } else {
      throw Error(path +
                  ".element: expected a basis name or a coefficient array");
    }
  }
  return t;
}

SpMat invert_matrix(const SpMat& p) {
  const CycloField* F = p.field();
  const int n = p.rows();
  SpMat out(F, n, n);
  for (int j = 0; j < n; ++j) {
    auto col = solve_linear(p, vec_unit(F, n, j));
    if (!col) throw Error("the basis change matrix is singular");
    for (int i = 0; i < n; ++i)
      if (!(*col)[i].is_zero()) out.set(i, j, (*col)[i]);
  }
  return out;
}

SpMat seeded_invertible(std::mt19937_64& rng, const CycloField* F, int n) {
  for (int tries = 0; tries < 64; ++tries) {
    SpMat p(F, n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const long v = static_cast<long>(rng() % 7) - 3;
        if (v != 0) p.set(i, j, Cyclo(F, v));
      }
    if (rank_of(p) == n) return p;
  }
  return SpMat::identity(F, n);
}

struct BuiltModules {
  std::map<std::string, FamilyPtr> fams;
  std::map<std::string, std::string> errors;
};

BuiltModules build_modules(const Session& s) {
  BuiltModules out;
  std::mt19937_64 rng(s.seed);
  for (const auto& spec : s.modules) {
    try {
      if (spec.kind == "evaluation") {
        FiniteModule base =
            spec.base == "natural"  ? natural_module(s.alg)
            : spec.base == "trivial" ? trivial_module(s.alg, false)
                                     : make_finite_module(s.alg, spec.base_actions);
        out.fams[spec.name] = evaluation_family(
            make_evaluation_module(std::move(base), spec.point, spec.root));
      } else if (spec.kind == "induced") {
        FiniteModule top =
            spec.top == "trivial"
                ? trivial_module(s.alg, true)
                : make_top_module(s.alg, spec.top_dim, spec.top_actions);
        out.fams[spec.name] =
            build_induced(s.alg, spec.level, std::move(top), spec.depth_num);
      } else if (spec.kind == "tensor") {
        std::vector<FamilyPtr> factors;
        for (const auto& f : spec.factors) {
          auto it = out.fams.find(f);
          if (it == out.fams.end())
            throw Error("factor '" + f + "' failed to build");
          factors.push_back(it->second);
        }
        out.fams[spec.name] = tensor_module(std::move(factors), s.max_dim);
      } else {
        auto it = out.fams.find(spec.of);
        if (it == out.fams.end())
          throw Error("source '" + spec.of + "' failed to build");
        FamilyPtr src = it->second;
        if (spec.kind == "opaque") {
          out.fams[spec.name] = opaque_family(
              s.alg, src->dim, src->central,
              [src](int b, long n) { return src->mode(b, n); }, spec.window_lo,
              spec.window_hi);
        } else {
          SpMat p = spec.change ? *spec.change
                                : seeded_invertible(rng, s.field, src->dim);
          if (p.rows() != src->dim || p.cols() != src->dim)
            throw Error("the basis change matrix has the wrong size");
          SpMat pi = invert_matrix(p);
          out.fams[spec.name] = opaque_family(
              s.alg, src->dim, src->central,
              [src, p, pi](int b, long n) { return p * src->mode(b, n) * pi; },
              spec.window_lo, spec.window_hi);
        }
      }
    } catch (const Error& e) {
      out.errors[spec.name] = e.what();
    }
  }
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

long resolved_window_num(const TaskSpec& t) {
  if (!t.window) return 0;
  return std::max(t.window->second, -t.window->first);
}

std::pair<long, long> window_or_default(const TaskSpec& t, long N) {
  if (t.window) return *t.window;
  return {-2 * N, 2 * N};
}

FamilyPtr need_module(const BuiltModules& built, const std::string& name) {
  auto err = built.errors.find(name);
  if (err != built.errors.end())
    throw Error("module '" + name + "': " + err->second);
  auto it = built.fams.find(name);
  if (it == built.fams.end()) throw Error("module '" + name + "' not built");
  return it->second;
}

void run_one_task(const Session& s, const BuiltModules& built,
                  const TaskSpec& t, TaskResult& res) {
  const long N = s.alg->order;
  if (t.kind == "verify-bracket") {
    FamilyPtr m = need_module(built, t.module);
    const auto [lo, hi] = window_or_default(t, N);
    res.evidence.emplace_back("window", "[" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "]");
    const BracketCheck bc = commutator_series_check(m, lo, hi);
    res.evidence.emplace_back("pairs_checked", std::to_string(bc.pairs_checked));
    if (bc.ok) {
      res.status = "pass";
      res.detail = "all bracket relations hold on the window";
    } else {
      res.status = "fail";
      res.detail = bc.detail;
    }
  } else if (t.kind == "category") {
    FamilyPtr m = need_module(built, t.module);
    const long wnum = resolved_window_num(t);
    const ClassReport cr = category_of(m, wnum, t.degree_bound);
    res.evidence.emplace_back("status", cr.status);
    res.evidence.emplace_back("restricted", bool_str(cr.restricted));
    res.evidence.emplace_back("evaluation_like", bool_str(cr.evaluation_like));
    res.evidence.emplace_back("c_member", bool_str(cr.c_member));
    if (cr.e_poly)
      res.evidence.emplace_back("e_polynomial", cr.e_poly->str());
    if (cr.c_poly)
      res.evidence.emplace_back("c_polynomial", cr.c_poly->str());
    res.evidence.emplace_back("window_num", std::to_string(wnum));
    if (cr.status == "ok") {
      res.status = "pass";
      res.detail = cr.evidence;
    } else {
      res.status = "inconclusive";
      res.detail = cr.status;
    }
  } else if (t.kind == "annihilator") {
    FamilyPtr m = need_module(built, t.module);
    const AnnihilatorResult ar =
        minimal_annihilator(m, resolved_window_num(t), t.degree_bound);
    res.status = "pass";
    res.detail = ar.evidence;
    res.evidence.emplace_back("polynomial", ar.p.str());
    res.evidence.emplace_back("witnesses", std::to_string(ar.witnesses.size()));
    std::string pts;
    for (const auto& w : ar.witnesses) {
      if (!pts.empty()) pts += "; ";
      pts += w.point.str();
    }
    if (!pts.empty()) res.evidence.emplace_back("witness_points", pts);
  } else if (t.kind == "factorize") {
    FamilyPtr m = need_module(built, t.module);
    const FactorizedRep fr = factorize_rep(m, resolved_window_num(t),
                                           t.degree_bound);
    const auto [lo, hi] = window_or_default(t, N);
    const FactorReport rep = verify_factorization(fr, lo, hi);
    res.evidence.emplace_back("window", "[" + std::to_string(lo) + ", " +
                                            std::to_string(hi) + "]");
    res.evidence.emplace_back("certificate", fr.certificate.str());
    res.evidence.emplace_back("restricted_bound_num",
                              std::to_string(fr.restricted_bound_num));
    const std::pair<const char*, const FactorCheck*> checks[] = {
        {"brackets", &rep.brackets},
        {"cross", &rep.cross},
        {"additivity", &rep.additivity},
        {"restriction", &rep.restriction},
        {"nilpotency", &rep.nilpotency}};
    for (const auto& [name, c] : checks) {
      res.evidence.emplace_back(
          name, (c->ok ? "pass (" : "fail (") + std::to_string(c->count) + ")");
      if (!c->ok && !c->detail.empty())
        res.evidence.emplace_back(std::string(name) + "_detail", c->detail);
    }
    if (rep.all_ok() && !rep.inconclusive) {
      res.status = "pass";
      res.detail = "all five factorization checks hold on the window";
    } else if (rep.all_ok()) {
      res.status = "inconclusive";
      res.detail = rep.nilpotency.detail.empty()
                       ? "some nilpotency probes escaped the window"
                       : rep.nilpotency.detail;
    } else {
      res.status = "fail";
      res.detail = "a factorization check failed; see the evidence payload";
    }
  } else if (t.kind == "classify") {
    FamilyPtr m = need_module(built, t.module);
    const ClassificationResult cr = classify_in_C(m, resolved_window_num(t));
    res.status = "pass";
    res.detail = cr.evidence;
    res.evidence.emplace_back("level", cr.restricted.level.str());
    res.evidence.emplace_back("trivial_restricted",
                              bool_str(cr.restricted.trivial));
    if (!cr.restricted.trivial) {
      res.evidence.emplace_back("depth_num",
                                std::to_string(cr.restricted.depth_num));
      res.evidence.emplace_back("top_dim",
                                std::to_string(cr.restricted.top.dim));
      res.evidence.emplace_back("top_trivial",
                                bool_str(!is_nontrivial(cr.restricted.top)));
    }
    std::string slots;
    for (const auto& sl : cr.evaluation) {
      if (!slots.empty()) slots += "; ";
      slots += "(point " + sl.point.str() + ", root " + sl.root.str() +
               ", dim " + std::to_string(sl.factor.dim) + ")";
    }
    res.evidence.emplace_back("slots", slots.empty() ? "none" : slots);
    std::string perm;
    for (int p : cr.permutation) {
      if (!perm.empty()) perm += ", ";
      perm += std::to_string(p);
    }
    res.evidence.emplace_back("permutation", "[" + perm + "]");
    res.evidence.emplace_back("intertwiner_rank",
                              std::to_string(rank_of(cr.intertwiner)));
  } else if (t.kind == "isomorphic") {
    FamilyPtr a = need_module(built, t.module);
    FamilyPtr b = need_module(built, t.other);
    const bool iso = modules_isomorphic_E(a, b, resolved_window_num(t));
    res.evidence.emplace_back("isomorphic", bool_str(iso));
    res.evidence.emplace_back("expected", bool_str(t.expect_isomorphic));
    if (iso != t.expect_isomorphic) {
      res.status = "fail";
      res.detail = iso ? "the modules are isomorphic but were expected not to be"
                       : "the modules are not isomorphic";
      res.evidence.emplace_back("left_dim", std::to_string(a->dim));
      res.evidence.emplace_back("right_dim", std::to_string(b->dim));
      try {
        res.evidence.emplace_back("left_annihilator",
                                  minimal_annihilator(a).p.str());
        res.evidence.emplace_back("right_annihilator",
                                  minimal_annihilator(b).p.str());
      } catch (const Error&) {
      }
    } else {
      res.status = "pass";
      res.detail = iso ? "isomorphic as expected" : "not isomorphic, as expected";
    }
  } else {  // nilpotency
    Vec v = t.element_coeffs.empty()
                ? s.alg->basis_vec(s.alg->basis_index(t.element_name))
                : t.element_coeffs;
    std::string shown = t.element_name.empty() ? vec_str(v) : t.element_name;
    res.evidence.emplace_back("element", shown);
    const auto idx = ad_nilpotency_index(*s.alg, v);
    if (idx) {
      res.status = "pass";
      res.detail = "ad(v) is nilpotent";
      res.evidence.emplace_back("ad_index", std::to_string(*idx));
    } else {
      res.status = "fail";
      res.detail = "ad(v)^p is nonzero for every p up to the algebra dimension";
      res.evidence.emplace_back("ad_index", "none up to dim " +
                                                std::to_string(s.alg->dim));
    }
  }
}

TaskResult execute_task(const Session& s, const BuiltModules& built,
                        const TaskSpec& t) {
  TaskResult res;
  res.kind = t.kind;
  res.module = t.kind == "isomorphic" ? t.module + ", " + t.other : t.module;
  try {
    run_one_task(s, built, t, res);
  } catch (const Error& e) {
    res.status = "fail";
    res.detail = e.what();
  } catch (const std::exception& e) {
    res.status = "fail";
    res.detail = std::string("internal error: ") + e.what();
  }
  return res;
}

}  // namespace

Session parse_session(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("syntax error: ") + e.what());
  }
  if (!doc.is_object())
    throw Error("session: the top level must be a JSON object");
  Session s;
  if (!doc.contains("field") || !doc["field"].is_number_integer())
    throw Error("field: an integer modulus is required");
  s.modulus = doc["field"].get<int>();
  if (s.modulus < 1) throw Error("field: the modulus must be at least 1");
  s.field = CycloField::get(s.modulus);
  if (!doc.contains("algebra")) throw Error("algebra: required");
  try {
    s.alg = algebra_from_json(s.field, doc["algebra"]);
  } catch (const Error& e) {
    const std::string msg = e.what();
    throw Error(msg.rfind("algebra", 0) == 0 ? msg : "algebra: " + msg);
  }
  s.algebra_name = s.alg->name;
  s.automorphism = s.alg->twist;
  if (s.modulus % s.alg->order != 0)
    throw Error("algebra: the twist order " + std::to_string(s.alg->order) +
                " does not divide the field modulus " +
                std::to_string(s.modulus));
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
      throw Error("seed: expected a nonnegative integer");
    const long long sd = doc["seed"].get<long long>();
    if (sd < 0) throw Error("seed: expected a nonnegative integer");
    s.seed = static_cast<unsigned long>(sd);
  }
  if (doc.contains("max_dim")) {
    s.max_dim = static_cast<int>(long_field(doc, "max_dim", "session", false));
    if (s.max_dim < 1) throw Error("max_dim: must be positive");
  }
  std::set<std::string> known;
  if (doc.contains("modules")) {
    if (!doc["modules"].is_array())
      throw Error("modules: expected an array");
    for (size_t i = 0; i < doc["modules"].size(); ++i) {
      ModuleSpec m = module_from_json(s, doc["modules"][i], i, known);
      known.insert(m.name);
      s.modules.push_back(std::move(m));
    }
  }
  if (doc.contains("tasks")) {
    if (!doc["tasks"].is_array()) throw Error("tasks: expected an array");
    for (size_t i = 0; i < doc["tasks"].size(); ++i)
      s.tasks.push_back(task_from_json(s, doc["tasks"][i], i, known));
  }
  return s;
}

Report run_tasks(const Session& s, bool parallel) {
  Report r;
  r.modulus = s.modulus;
  r.algebra_name = s.algebra_name;
  r.automorphism = s.automorphism;
  r.seed = s.seed;
  const BuiltModules built = build_modules(s);
  using clock = std::chrono::steady_clock;
  if (parallel) {
    std::vector<std::future<std::pair<TaskResult, double>>> futs;
    for (const auto& t : s.tasks)
      futs.push_back(std::async(std::launch::async, [&s, &built, &t] {
        const auto start = clock::now();
        TaskResult res = execute_task(s, built, t);
        const double ms =
            std::chrono::duration<double, std::milli>(clock::now() - start)
                .count();
        return std::make_pair(std::move(res), ms);
      }));
    for (auto& f : futs) {
      auto [res, ms] = f.get();
      r.tasks.push_back(std::move(res));
      r.timings_ms.push_back(ms);
    }
  } else {
    for (const auto& t : s.tasks) {
      const auto start = clock::now();
      r.tasks.push_back(execute_task(s, built, t));
      r.timings_ms.push_back(
          std::chrono::duration<double, std::milli>(clock::now() - start)
              .count());
    }
  }
  for (const auto& res : r.tasks) {
    if (res.status == "pass")
      ++r.passed;
    else if (res.status == "fail")
      ++r.failed;
    else
      ++r.inconclusive;
  }
  return r;
}

std::string machine_report(const Report& r) {
  json doc;
  doc["format"] = "affmod-report/1";
  doc["field"] = r.modulus;
  doc["algebra"] = r.algebra_name;
  doc["automorphism"] = r.automorphism;
  doc["seed"] = r.seed;
  doc["tasks"] = json::array();
  for (size_t i = 0; i < r.tasks.size(); ++i) {
    const TaskResult& t = r.tasks[i];
    json jt;
    jt["index"] = i;
    jt["kind"] = t.kind;
    jt["module"] = t.module;
    jt["status"] = t.status;
    jt["detail"] = t.detail;
    json ev = json::object();
    for (const auto& [k, v] : t.evidence) ev[k] = v;
    jt["evidence"] = std::move(ev);
    doc["tasks"].push_back(std::move(jt));
  }
  doc["summary"] = {{"pass", r.passed},
                    {"fail", r.failed},
                    {"inconclusive", r.inconclusive}};
  return doc.dump(2) + "\n";
}

std::string human_report(const Report& r) {
  std::ostringstream out;
  out << "session: " << r.algebra_name << " / " << r.automorphism
      << " over Q(zeta_" << r.modulus << "), seed " << r.seed << "\n";
  for (size_t i = 0; i < r.tasks.size(); ++i) {
    const TaskResult& t = r.tasks[i];
    out << "  " << (i + 1) << ". " << t.kind;
    if (!t.module.empty()) out << " [" << t.module << "]";
    out << ": " << t.status;
    if (i < r.timings_ms.size()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.1f", r.timings_ms[i]);
      out << " (" << buf << " ms)";
    }
    out << "\n";
    if (!t.detail.empty()) out << "     " << t.detail << "\n";
    for (const auto& [k, v] : t.evidence)
      out << "     " << k << ": " << v << "\n";
  }
  out << "summary: " << r.passed << " pass, " << r.failed << " fail, "
      << r.inconclusive << " inconclusive\n";
  return out.str();
}

int report_exit_code(const Report& r) {
  if (r.failed > 0) return 1;
  if (r.inconclusive > 0) return 2;
  return 0;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open session file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int finish_run(const Session& session, bool parallel,
               const std::string& report_path) {
  const Report rep = run_tasks(session, parallel);
  std::cout << human_report(rep);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write report file '" << report_path << "'\n";
      return 3;
    }
    out << machine_report(rep);
  }
  return report_exit_code(rep);
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"exact twisted affine module verification"};
  app.require_subcommand(1);

  struct SubState {
    CLI::App* cmd = nullptr;
    std::string session_path, report_path, module, other, element;
    std::vector<long> window;
    long degree_bound = 0;
    bool expect = true;
    long long seed = -1;
    int max_dim = 0;
    bool parallel = false;
  };
  std::vector<std::pair<std::string, SubState>> subs;
  const std::pair<const char*, const char*> defs[] = {
      {"run", "run every task in a session file"},
      {"verify-bracket", "check the defining bracket relations on a module"},
      {"category", "decide category membership of a module"},
      {"annihilator", "compute the minimal annihilator with witnesses"},
      {"factorize", "split a module and verify the factorization"},
      {"classify", "recover the restricted and evaluation data of a module"},
      {"isomorphic", "test two evaluation-category modules for isomorphism"},
      {"nilpotency", "compute the ad-nilpotency index of an algebra element"}};
  subs.reserve(std::size(defs));
  for (const auto& [name, help] : defs) {
    subs.emplace_back(name, SubState{});
    SubState& st = subs.back().second;
    st.cmd = app.add_subcommand(name, help);
    st.cmd->add_option("session", st.session_path, "session JSON file")
        ->required();
    st.cmd->add_option("--report", st.report_path,
                       "write the machine-readable JSON report here");
    st.cmd->add_option("--seed", st.seed, "override the session seed");
    st.cmd->add_option("--max-dim", st.max_dim,
                       "override the carrier dimension cap");
    const std::string n = name;
    if (n == "run") {
      st.cmd->add_flag("--parallel", st.parallel,
                       "run independent tasks concurrently");
      continue;
    }
    if (n != "nilpotency")
      st.cmd->add_option("--module", st.module, "module name")->required();
    if (n == "isomorphic")
      st.cmd->add_option("--other", st.other, "second module name")->required();
    if (n == "nilpotency")
      st.cmd
          ->add_option("--element", st.element,
                       "basis name or comma-separated coefficients")
          ->required();
    st.cmd->add_option("--window", st.window,
                       "exponent numerator window LO HI")
        ->expected(2);
    st.cmd->add_option("--degree-bound", st.degree_bound,
                       "annihilator degree cap");
    if (n == "isomorphic")
      st.cmd->add_option("--expect", st.expect,
                         "expected verdict (default true)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  for (auto& [name, st] : subs) {
    if (!st.cmd->parsed()) continue;
    try {
      Session session = parse_session(read_file(st.session_path));
      if (st.seed >= 0) session.seed = static_cast<unsigned long>(st.seed);
      if (st.max_dim > 0) session.max_dim = st.max_dim;
      if (name != "run") {
        TaskSpec t;
        t.kind = name;
        t.module = st.module;
        t.other = st.other;
        t.expect_isomorphic = st.expect;
        t.degree_bound = st.degree_bound;
        if (!st.window.empty()) {
          if (st.window[0] > st.window[1])
            throw Error("--window: lo exceeds hi");
          t.window = {st.window[0], st.window[1]};
        }
        if (name == "isomorphic" && st.module == st.other)
          throw Error("--other: names the same module as --module");
        if (!st.module.empty()) {
          bool found = false;
          for (const auto& m : session.modules) found |= m.name == st.module;
          if (!found) throw Error("--module: unknown module '" + st.module + "'");
        }
        if (!st.other.empty()) {
          bool found = false;
          for (const auto& m : session.modules) found |= m.name == st.other;
          if (!found) throw Error("--other: unknown module '" + st.other + "'");
        }
        if (name == "nilpotency") {
          bool is_name = false;
          try {
            session.alg->basis_index(st.element);
            is_name = true;
          } catch (const Error&) {
          }
          if (is_name) {
            t.element_name = st.element;
          } else {
            std::stringstream ss(st.element);
            std::string part;
            while (std::getline(ss, part, ','))
              t.element_coeffs.push_back(
                  Cyclo(session.field,
                        rational_from_json(json(part), "--element")));
            if (t.element_coeffs.size() !=
                static_cast<size_t>(session.alg->dim))
              throw Error("--element: expected a basis name or " +
                          std::to_string(session.alg->dim) + " coefficients");
          }
        }
        session.tasks = {std::move(t)};
      }
      return finish_run(session, st.parallel, st.report_path);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
  }
  return 3;
}

}  // namespace affmod
