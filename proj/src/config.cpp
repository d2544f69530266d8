#include "coneflow/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace coneflow {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, int line) {
  s = trim(s);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError("expected a number, got '" + std::string(s) + "'", line, 1);
  }
  return v;
}

Vec parse_numbers(std::string_view s, int line) {
  std::vector<double> vals;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = s.find(',', start);
    vals.push_back(parse_number(s.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                 : comma - start),
                                line));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return Eigen::Map<Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

struct Entry {
  std::string value;
  int line;
};

struct Section {
  int header_line = 0;
  int body_first_line = 0;
  std::string body;  // raw text, used for [system]
  std::map<std::string, Entry> entries;
};

}  // namespace

ModelConfig from_builtin(const std::string& name) {
  BuiltinSystem b = get_builtin(name);
  ModelConfig cfg;
  cfg.source = "builtin:" + name;
  cfg.sys = std::move(b.sys);
  cfg.params = std::move(b.default_params);
  cfg.cone = std::move(b.cone);
  cfg.v_plus = std::move(b.v_plus);
  cfg.box = std::move(b.box);
  return cfg;
}

ModelConfig parse_config(std::string_view text, const std::string& source) {
  std::map<std::string, Section> sections;
  Section* cur = nullptr;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    const std::string_view raw = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    std::string_view content = raw;
    if (const auto hash = content.find('#'); hash != std::string_view::npos) {
      content = content.substr(0, hash);
    }
    const auto t = trim(content);
    if (!t.empty() && t.front() == '[') {
      if (t.back() != ']') throw ParseError("malformed section header", line_no, 1);
      const std::string name(trim(t.substr(1, t.size() - 2)));
      static const char* known[] = {"system", "params", "cone", "domain", "solver", "sweep", "slowfast"};
      bool ok = false;
      for (const char* k : known) ok = ok || name == k;
      if (!ok) throw ParseError("unknown section [" + name + "]", line_no, 1);
      if (sections.count(name)) throw ParseError("duplicate section [" + name + "]", line_no, 1);
      cur = &sections[name];
      cur->header_line = line_no;
      cur->body_first_line = line_no + 1;
    } else if (!t.empty()) {
      if (!cur) throw ParseError("content before the first section header", line_no, 1);
      const auto eq = t.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, 1);
      const std::string key(trim(t.substr(0, eq)));
      cur->entries[key] = Entry{std::string(trim(t.substr(eq + 1))), line_no};
    }
    if (cur && !(t.size() && t.front() == '[')) {
      cur->body.append(raw);
      cur->body.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
  }

  auto sys_it = sections.find("system");
  if (sys_it == sections.end()) throw ParseError("missing [system] section", 0, 0);

  ModelConfig cfg;
  const Section& ss = sys_it->second;
  if (auto b = ss.entries.find("builtin"); b != ss.entries.end()) {
    if (ss.entries.size() != 1) {
      throw ParseError("[system] with 'builtin' must not declare anything else", b->second.line, 1);
    }
    try {
      cfg = from_builtin(b->second.value);
    } catch (const PreconditionError& e) {
      throw ParseError(e.what(), b->second.line, 1);
    }
  } else {
    cfg.sys = parse_system(ss.body, ss.body_first_line);
  }
  cfg.source = source;

  if (auto it = sections.find("params"); it != sections.end()) {
    for (const auto& [k, e] : it->second.entries) {
      if (cfg.sys.param_index(k) < 0) throw ParseError("unknown parameter '" + k + "'", e.line, 1);
      cfg.params[k] = parse_number(e.value, e.line);
    }
  }

  const auto n = static_cast<Eigen::Index>(cfg.sys.dim());
  if (auto it = sections.find("cone"); it != sections.end()) {
    const auto& en = it->second.entries;
    auto p = en.find("P");
    if (p == en.end()) throw ParseError("[cone] requires P", it->second.header_line, 1);
    const Vec flat = parse_numbers(p->second.value, p->second.line);
    const auto k = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
    if (k * k != flat.size()) {
      throw ParseError("P must list n*n numbers", p->second.line, 1);
    }
    Mat P(k, k);
    for (Eigen::Index r = 0; r < k; ++r) {
      for (Eigen::Index c = 0; c < k; ++c) P(r, c) = flat[r * k + c];
    }
    try {
      cfg.cone.emplace(P);
    } catch (const Error& e) {
      throw ParseError(e.what(), p->second.line, 1);
    }
    cfg.v_plus.reset();
    if (auto v = en.find("v_plus"); v != en.end()) {
      Vec vp = parse_numbers(v->second.value, v->second.line);
      try {
        cfg.cone->validate_positive_eigenvector(vp);
      } catch (const Error& e) {
        throw ParseError(e.what(), v->second.line, 1);
      }
      cfg.v_plus = vp;
    }
  }

  if (auto it = sections.find("domain"); it != sections.end()) {
    const auto& en = it->second.entries;
    if (auto hw = en.find("half_widths"); hw != en.end()) {
      Vec h = parse_numbers(hw->second.value, hw->second.line);
      if (h.size() != n) throw ParseError("half_widths must have one entry per state", hw->second.line, 1);
      cfg.box = Box::symmetric(h);
    } else {
      auto lo = en.find("lo");
      auto hi = en.find("hi");
      if (lo == en.end() || hi == en.end()) {
        throw ParseError("[domain] requires half_widths or lo and hi", it->second.header_line, 1);
      }
      Box b{parse_numbers(lo->second.value, lo->second.line), parse_numbers(hi->second.value, hi->second.line)};
      if (b.lo.size() != n || b.hi.size() != n) {
        throw ParseError("domain bounds must have one entry per state", lo->second.line, 1);
      }
      if ((b.hi.array() < b.lo.array()).any()) {
        throw ParseError("domain has hi < lo", lo->second.line, 1);
      }
      cfg.box = b;
    }
  }

  if (auto it = sections.find("solver"); it != sections.end()) {
    for (const auto& [k, e] : it->second.entries) {
      const double v = parse_number(e.value, e.line);
      if (!(v > 0.0)) throw ParseError(k + " must be positive", e.line, 1);
      if (k == "rel_tol") cfg.solver.rel_tol = v;
      else if (k == "abs_tol") cfg.solver.abs_tol = v;
      else throw ParseError("unknown solver key '" + k + "'", e.line, 1);
    }
  }

  if (auto it = sections.find("sweep"); it != sections.end()) {
    for (const auto& [k, e] : it->second.entries) {
      const double v = parse_number(e.value, e.line);
      if (v < 0 || std::floor(v) != v) throw ParseError(k + " must be a nonnegative integer", e.line, 1);
      if (k == "n") cfg.sweep.n = static_cast<std::size_t>(v);
      else if (k == "seed") cfg.sweep.seed = static_cast<std::uint64_t>(v);
      else throw ParseError("unknown sweep key '" + k + "'", e.line, 1);
    }
  }

  if (auto it = sections.find("slowfast"); it != sections.end()) {
    for (const auto& [k, e] : it->second.entries) {
      if (k == "eps0") cfg.eps0 = parse_number(e.value, e.line);
      else if (k == "delta0") cfg.delta0 = parse_number(e.value, e.line);
      else throw ParseError("unknown slowfast key '" + k + "'", e.line, 1);
    }
  }
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace coneflow
