#pragma once

// Error measures over ranked classification results: TOP-n and MER, where MER
// also accepts any symbol equivalent to one of the three best hypotheses.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "symrec/diagnostics.hpp"
#include "symrec/error.hpp"
#include "symrec/recording.hpp"
#include "symrec/result.hpp"

namespace symrec {

struct EvalCase {
  ClassificationResult result;
  SymbolId reference = 0;
};

/// Partition of symbol ids; ids never mentioned form singleton classes.
class EquivalenceClasses {
 public:
  void unite(SymbolId a, SymbolId b) {
    const SymbolId ra = find(a), rb = find(b);
    if (ra == rb) return;
    // Smaller id becomes the representative, which keeps the structure canonical.
    if (ra < rb)
      parent_[rb] = ra;
    else
      parent_[ra] = rb;
  }

  SymbolId representative(SymbolId a) const { return find(a); }
  bool equivalent(SymbolId a, SymbolId b) const { return find(a) == find(b); }

  /// All ids known to share a class with `a`, including `a`.
  std::set<SymbolId> members(SymbolId a) const {
    std::set<SymbolId> out{a};
    const SymbolId r = find(a);
    for (const auto& [id, _] : parent_)
      if (find(id) == r) out.insert(id);
    return out;
  }

  /// Classes with more than one member.
  std::vector<std::set<SymbolId>> nontrivial_classes() const {
    std::map<SymbolId, std::set<SymbolId>> by_root;
    for (const auto& [id, _] : parent_) by_root[find(id)].insert(id);
    std::vector<std::set<SymbolId>> out;
    for (auto& [_, s] : by_root)
      if (s.size() > 1) out.push_back(std::move(s));
    return out;
  }

 private:
  SymbolId find(SymbolId a) const {
    auto it = parent_.find(a);
    while (it != parent_.end() && it->second != a) {
      a = it->second;
      it = parent_.find(a);
    }
    return a;
  }

  SymbolId find(SymbolId a) {
    const SymbolId r = static_cast<const EquivalenceClasses&>(*this).find(a);
    parent_.try_emplace(a, a);
    parent_.try_emplace(r, r);
    // Path compression.
    while (parent_[a] != r) {
      const SymbolId next = parent_[a];
      parent_[a] = r;
      a = next;
    }
    return r;
  }

  std::map<SymbolId, SymbolId> parent_;
};

/// Fraction of cases whose reference is not among the first n hypotheses.
inline double topn_error(const std::vector<EvalCase>& cases, std::size_t n) {
  if (cases.empty()) return 0.0;
  std::size_t wrong = 0;
  for (const auto& c : cases) {
    const std::size_t limit = std::min(n, c.result.size());
    bool hit = false;
    for (std::size_t i = 0; i < limit && !hit; ++i) hit = c.result[i].symbol == c.reference;
    if (!hit) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(cases.size());
}

/// Like TOP-3, but a case is correct when the reference is equivalent to one of the three best hypotheses.
inline double mer_error(const std::vector<EvalCase>& cases, const EquivalenceClasses& classes) {
  if (cases.empty()) return 0.0;
  std::size_t wrong = 0;
  for (const auto& c : cases) {
    const std::size_t limit = std::min<std::size_t>(3, c.result.size());
    bool hit = false;
    for (std::size_t i = 0; i < limit && !hit; ++i) hit = classes.equivalent(c.result[i].symbol, c.reference);
    if (!hit) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(cases.size());
}

/// Pairs of commands that are written identically by hand.
inline const char* bundled_equivalences_csv() {
  return R"(\sum,\Sigma
\prod,\Pi
\coprod,\sqcap
\coprod,\amalg
\perp,\sqcup
\perp,\bot
\models,\vDash
|,\mid
\Delta,\triangle
\Delta,\vartriangle
\|,\parallel
\ohm,\Omega
\setminus,\backslash
\checked,\checkmark
\&,\with
\#,\sharp
\S,\mathsection
\nabla,\triangledown
\lhd,\triangleleft
\lhd,\vartriangleleft
\oiint,\varoiint
\mathbb{R},\mathds{R}
\mathbb{Q},\mathds{Q}
\mathbb{Z},\mathds{Z}
\mathcal{A},\mathscr{A}
\mathcal{D},\mathscr{D}
\mathcal{N},\mathscr{N}
\mathcal{R},\mathscr{R}
\propto,\varpropto
)";
}

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Reads `base_command, equivalent_command` lines; classes are the transitive
/// closure of all pairs. Pairs naming unknown commands are skipped with a warning.
/// Blank lines and lines starting with '#' are ignored.
inline EquivalenceClasses load_equivalences(std::istream& in, const SymbolTable& symbols, Diagnostics* diag = nullptr) {
  EquivalenceClasses classes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    // The first comma after position 0 separates the commands, so "\," style commands still parse.
    const auto comma = t.find(',', 1);
    if (comma == std::string::npos) {
      warn(diag, "equivalences line " + std::to_string(line_no) + ": expected two commands");
      continue;
    }
    const std::string a = detail::trim(t.substr(0, comma));
    const std::string b = detail::trim(t.substr(comma + 1));
    const auto ia = symbols.find(a);
    const auto ib = symbols.find(b);
    if (!ia || !ib) {
      warn(diag, "equivalences line " + std::to_string(line_no) + ": unknown symbol " + (!ia ? a : b));
      continue;
    }
    classes.unite(*ia, *ib);
  }
  return classes;
}

inline EquivalenceClasses load_equivalences(const std::string& text, const SymbolTable& symbols,
                                            Diagnostics* diag = nullptr) {
  std::istringstream in(text);
  return load_equivalences(in, symbols, diag);
}

struct ErrorReport {
  double top1 = 0.0;  // fractions in [0, 1]
  double top3 = 0.0;
  double mer = 0.0;
  std::size_t cases = 0;
};

inline ErrorReport evaluate_cases(const std::vector<EvalCase>& cases, const EquivalenceClasses& classes) {
  return {topn_error(cases, 1), topn_error(cases, 3), mer_error(cases, classes), cases.size()};
}

/// `measure,value` CSV with percentages rounded to two decimals.
inline std::string report_csv(const ErrorReport& r) {
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return std::string(buf);
  };
  return "measure,value\nTOP1," + pct(r.top1) + "\nTOP3," + pct(r.top3) + "\nMER," + pct(r.mer) + "\ncases," +
         std::to_string(r.cases) + "\n";
}

}  // namespace symrec
