#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "ncdiff/calculus_file.hpp"
#include "ncdiff/verify.hpp"

using namespace ncdiff;

namespace {

enum Exit { ok = 0, usage = 1, invalid_spec = 2, missing = 3, failed = 4 };

struct Source {
  std::string builtin;
  std::string file;
  std::string params;
  bool json = false;
};

std::map<std::string, std::string> split_params(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw SpecError("--params entry '" + item + "' is not k=v");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

CalculusSpec load(const Source& src) {
  if (src.builtin.empty() == src.file.empty()) throw std::invalid_argument("give exactly one of --builtin or --file");
  CalculusSpec s = src.builtin.empty() ? load_calculus(src.file) : builtin(src.builtin);
  if (!src.params.empty()) s = specialize(s, parse_bindings(split_params(src.params), s.params));
  return s;
}

std::string index_json(const Idx& I) {
  Json j = I;
  return j.dump();
}

std::string render_op(const CalculusSpec& s, const Tensor& t, const std::vector<std::vector<std::string>>& names) {
  if (t.is_zero()) return "0";
  std::string out;
  for (auto& [I, c] : t.terms()) {
    std::string coef = render_aelem(c, s);
    std::string word;
    for (std::size_t k = 0; k < I.size(); ++k) word += (k ? " (x) " : "") + names[k][I[k]];
    if (!out.empty()) out += " + ";
    out += "(" + coef + ")" + (word.empty() ? "" : " " + word);
  }
  return out;
}

std::vector<std::vector<std::string>> repeat(const std::vector<std::string>& n, std::size_t k) {
  return std::vector<std::vector<std::string>>(k, n);
}

Json terms_json(const CalculusSpec& s, const Tensor& t) {
  Json arr = Json::array();
  for (auto& [I, c] : t.terms()) arr.push_back({{"grade", I.size()}, {"index", I}, {"coefficient", render_aelem(c, s)}});
  return arr;
}

int cmd_relations(const Source& src) {
  CalculusSpec s = load(src);
  need_gamma(s);
  auto rel = da_relations(s);
  auto words = relation_words(s);
  auto split = wedge_splitting(s);
  BulletEngine eng(s);
  bool words_ok = true, phi_ok = true;
  for (int k = 0; k < s.n2; ++k) {
    words_ok = words_ok && expand_words(s, words[k]) == rel[k];
    Tensor x;
    DiffOp bul;
    for (int i = 0; i < s.n1; ++i)
      for (int j = 0; j < s.n1; ++j)
        if (!s.W[i][j][k].is_zero()) {
          x.add({j, i}, aconst(s.W[i][j][k]));
          bul += eng.basis_times({j}, Tensor::basis({i})).scaled(aconst(s.W[i][j][k]));
        }
    phi_ok = phi_ok && rel[k] == phi(s, left_pairs(x), split) - bul;
  }
  if (src.json) {
    Json j;
    j["calculus"] = s.name;
    j["relations"] = Json::array();
    for (int k = 0; k < s.n2; ++k) {
      Json w = Json::array();
      for (auto& t : words[k]) w.push_back({{"word", t.word}, {"coefficient", render_scalar(t.coeff, s)}});
      j["relations"].push_back({{"omega", s.omega2[k]}, {"words", w}, {"terms", terms_json(s, rel[k])}});
    }
    j["checks"] = {{"words_expand", words_ok}, {"phi_form", phi_ok}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "relations of " << s.name << " (one per Omega^2 basis element)\n";
    for (int k = 0; k < s.n2; ++k) {
      std::string w;
      for (auto& t : words[k]) {
        std::string word;
        for (std::size_t m = 0; m < t.word.size(); ++m) word += (m ? "." : "") + s.vec[t.word[m]];
        w += (w.empty() ? "" : " + ") + ("(" + render_scalar(t.coeff, s) + ") " + word);
      }
      std::cout << "[" << s.omega2[k] << "] " << w << "\n";
      std::cout << "    = " << render_op(s, rel[k], repeat(s.vec, 2)) << "\n";
    }
    std::cout << "# terms: omega grade index coefficient\n";
    for (int k = 0; k < s.n2; ++k)
      for (auto& [I, c] : rel[k].terms())
        std::cout << k << " " << I.size() << " " << index_json(I) << " " << render_aelem(c, s) << "\n";
    std::cout << "check words expand to curvature relations: " << (words_ok ? "ok" : "FAIL") << "\n";
    std::cout << "check phi form: " << (phi_ok ? "ok" : "FAIL") << "\n";
  }
  return words_ok && phi_ok ? ok : failed;
}

void print_curvature(const CalculusSpec& s, const ModuleConnection& E, const std::vector<std::string>& ebasis,
                     Json* out) {
  for (int a = 0; a < E.rank; ++a) {
    Tensor R = module_curvature(s, E, Tensor::basis({a}));
    if (out) {
      (*out)["curvature"].push_back({{"basis", ebasis[a]}, {"terms", terms_json(s, R)}});
    } else {
      std::cout << "R(" << ebasis[a] << ") = " << render_op(s, R, {s.omega2, ebasis}) << "\n";
    }
  }
}

int cmd_curvature(const Source& src, const std::string& module, bool check_flat) {
  CalculusSpec s = load(src);
  ModuleConnection E;
  std::vector<std::string> ebasis;
  if (module == "omega1") {
    E = omega1_module(s);
    ebasis = s.omega1;
  } else if (module == "basis" || module == "trivial") {
    E = trivial_module();
    ebasis = {"1"};
  } else {
    throw std::invalid_argument("unknown module '" + module + "'");
  }
  Json j;
  Json* jp = src.json ? &j : nullptr;
  if (jp) {
    j["calculus"] = s.name;
    j["module"] = E.name;
    j["curvature"] = Json::array();
  }
  print_curvature(s, E, ebasis, jp);
  int code = ok;
  if (check_flat) {
    std::vector<std::pair<std::string, FlatVerdict>> verdicts;
    std::vector<FlatCase> shown;
    bool required = true;
    if (s.name == "su2q" && src.file.empty()) {
      for (auto& c : su2q_flat_cases()) shown.push_back(c);
      for (auto& c : search_corrected_case_d()) shown.push_back(c.solved);
      for (auto& c : shown) {
        auto v = check_flat_case(c);
        if (c.label != "d" && !v.flat) required = false;
        verdicts.emplace_back(render_bindings(c.bindings), v);
      }
      if (shown.size() != 5) required = false;
    } else {
      auto coeffs = curvature_coefficients(s);
      verdicts.emplace_back("as given", FlatVerdict{s.name, coeffs.empty(), coeffs});
    }
    if (jp) j["flat_cases"] = Json::array();
    for (std::size_t k = 0; k < verdicts.size(); ++k) {
      auto& [bind, v] = verdicts[k];
      Json surv = Json::array();
      for (auto& c : v.surviving)
        surv.push_back({{"basis", c.basis}, {"index", c.key}, {"coefficient", render_aelem(c.value, s)}});
      std::string note = k < shown.size() && !shown[k].unmet.empty() ? "unsatisfiable: " + shown[k].unmet[0] : "";
      if (jp) {
        j["flat_cases"].push_back({{"case", v.label}, {"bindings", bind}, {"flat", v.flat}, {"surviving", surv},
                                   {"note", note}});
      } else {
        std::cout << "case (" << v.label << ") " << (v.flat ? "PASS flat" : "FAIL not flat") << ": " << bind << "\n";
        if (!note.empty()) std::cout << "    " << note << "\n";
        for (auto& c : v.surviving)
          std::cout << "    R(" << s.omega1[c.basis] << ") " << s.omega2[c.key[0]] << " (x) " << s.omega1[c.key[1]]
                    << ": " << render_aelem(c.value, s) << "\n";
      }
    }
    if (!required) code = failed;
  }
  if (jp) std::cout << j.dump(2) << "\n";
  return code;
}

int cmd_verify(const Source& src, const std::string& suite) {
  CalculusSpec s = load(src);
  std::vector<std::string> names = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  Json j = Json::array();
  bool all_ok = true;
  for (auto& n : names) {
    SuiteReport rep = run_suite(n, s);
    all_ok = all_ok && rep.ok();
    if (src.json) {
      Json checks = Json::array();
      for (auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"informational", c.informational}});
      j.push_back({{"suite", rep.suite}, {"calculus", rep.calculus}, {"passed", rep.ok()}, {"checks", checks}});
    } else {
      std::cout << "suite " << rep.suite << " on " << rep.calculus << ": " << (rep.ok() ? "PASS" : "FAIL") << "\n";
      for (auto& c : rep.checks)
        std::cout << "  " << (c.informational ? "INFO" : c.passed ? "PASS" : "FAIL") << " " << c.name
                  << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
    }
  }
  if (src.json) std::cout << (names.size() == 1 ? j[0] : j).dump(2) << "\n";
  return all_ok ? ok : failed;
}

int cmd_export(const Source& src) {
  std::cout << serialize_calculus(load(src));
  return ok;
}

template <class F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const MissingCapability& e) {
    std::cerr << "missing capability: " << e.what() << "\n";
    return missing;
  } catch (const PreconditionFailed& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return failed;
  } catch (const SpecError& e) {
    std::cerr << "invalid calculus: " << e.what() << "\n";
    return invalid_spec;
  } catch (const ParseError& e) {
    std::cerr << "invalid calculus: " << e.what() << "\n";
    return invalid_spec;
  } catch (const UnknownIdentifier& e) {
    std::cerr << "invalid calculus: " << e.what() << "\n";
    return invalid_spec;
  } catch (const ZeroDenominator& e) {
    std::cerr << "invalid calculus: " << e.what() << "\n";
    return invalid_spec;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return usage;
  }
}

void add_source(CLI::App* cmd, Source& src) {
  cmd->add_option("--builtin", src.builtin, "built-in calculus")
      ->check(CLI::IsMember(builtin_names()));
  cmd->add_option("--file", src.file, "calculus file (JSON)");
  cmd->add_option("--params", src.params, "parameter bindings k=v,...");
  cmd->add_flag("--json", src.json, "machine-readable output");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncdiff: exact computations with noncommutative differential operators"};
  app.require_subcommand(1);
  Source src;
  std::string module = "omega1", suite;
  bool check_flat = false;

  auto* rel = app.add_subcommand("relations", "relations of the differential operator algebra");
  add_source(rel, src);
  auto* cur = app.add_subcommand("curvature", "curvature of a module connection");
  add_source(cur, src);
  cur->add_option("--module", module, "omega1 or basis")->check(CLI::IsMember({"omega1", "basis", "trivial"}));
  cur->add_flag("--check-flat", check_flat, "verdicts for the zero curvature cases");
  auto* ver = app.add_subcommand("verify", "run a verification suite");
  add_source(ver, src);
  std::vector<std::string> suites = suite_names();
  suites.push_back("all");
  ver->add_option("--suite", suite, "suite name")->required()->check(CLI::IsMember(suites));
  auto* exp = app.add_subcommand("export", "print a calculus as a calculus file");
  add_source(exp, src);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? ok : usage;
  }
  if (rel->parsed()) return guarded([&] { return cmd_relations(src); });
  if (cur->parsed()) return guarded([&] { return cmd_curvature(src, module, check_flat); });
  if (ver->parsed()) return guarded([&] { return cmd_verify(src, suite); });
  return guarded([&] { return cmd_export(src); });
}
