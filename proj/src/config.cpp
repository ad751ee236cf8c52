#include "config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace cfpgd::app {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string strip_comment(const std::string& line) {
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_quotes = !in_quotes;
    if (line[i] == '#' && !in_quotes) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& value) {
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
    return value.substr(1, value.size() - 2);
  }
  return value;
}

[[noreturn]] void fail(const std::string& field, const RawConfig::Entry& entry,
                       const std::string& reason) {
  std::ostringstream message;
  message << "config field '" << field << "'";
  if (entry.line > 0) message << " (line " << entry.line << ")";
  message << ": " << reason;
  throw ConfigError(message.str());
}

class TypedReader {
 public:
  explicit TypedReader(const RawConfig& raw) : raw_(raw) {}

  bool has(const std::string& key) { return raw_.entries.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const auto it = raw_.entries.find(key);
    if (it == raw_.entries.end()) return fallback;
    consumed_.insert(key);
    return unquote(it->second.value);
  }

  double get_real(const std::string& key, double fallback) {
    const auto it = raw_.entries.find(key);
    if (it == raw_.entries.end()) return fallback;
    consumed_.insert(key);
    const std::string text = unquote(it->second.value);
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0') fail(key, it->second, "expected a number");
    return value;
  }

  long long get_integer(const std::string& key, long long fallback) {
    const auto it = raw_.entries.find(key);
    if (it == raw_.entries.end()) return fallback;
    consumed_.insert(key);
    const std::string text = unquote(it->second.value);
    char* end = nullptr;
    const long long value = std::strtoll(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0') fail(key, it->second, "expected an integer");
    return value;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const auto it = raw_.entries.find(key);
    if (it == raw_.entries.end()) return fallback;
    consumed_.insert(key);
    const std::string text = unquote(it->second.value);
    if (text == "true") return true;
    if (text == "false") return false;
    fail(key, it->second, "expected true or false");
  }

  void reject_unconsumed() const {
    for (const auto& [key, entry] : raw_.entries) {
      if (!consumed_.count(key)) fail(key, entry, "unknown key");
    }
  }

  const RawConfig::Entry& entry(const std::string& key) const {
    return raw_.entries.at(key);
  }

 private:
  const RawConfig& raw_;
  std::set<std::string> consumed_;
};

}  // namespace

RawConfig parse_config_text(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::string content = trim(strip_comment(line));
    if (content.empty()) continue;
    if (content.front() == '[') {
      if (content.back() != ']') {
        throw ConfigError("config line " + std::to_string(line_number) +
                          ": unterminated section header");
      }
      section = trim(content.substr(1, content.size() - 2));
      if (section.empty()) {
        throw ConfigError("config line " + std::to_string(line_number) + ": empty section name");
      }
      continue;
    }
    const std::size_t eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected 'key = value'");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_number) + ": empty key");
    }
    if (section.empty()) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": key outside of any [section]");
    }
    raw.entries[section + "." + key] = {value, line_number};
  }
  return raw;
}

RawConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

void apply_override(RawConfig& raw, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "': expected section.key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  if (key.find('.') == std::string::npos) {
    throw ConfigError("override '" + assignment + "': key must be section.key");
  }
  raw.entries[key] = {trim(assignment.substr(eq + 1)), 0};
}

RunConfig make_run_config(const RawConfig& raw) {
  TypedReader reader(raw);
  RunConfig config;

  const std::string kind = reader.get_string("problem.kind", "poisson2d");
  if (kind == "poisson2d") {
    config.problem.kind = ProblemKind::Poisson2D;
  } else if (kind == "spacetime") {
    config.problem.kind = ProblemKind::SpaceTime;
  } else {
    fail("problem.kind", reader.entry("problem.kind"),
         "expected poisson2d or spacetime, got '" + kind + "'");
  }
  const bool spacetime = config.problem.kind == ProblemKind::SpaceTime;

  const std::string disc = reader.get_string("problem.discretization", "fem");
  if (disc == "fem") {
    config.problem.discretization = Discretization::Fem;
  } else if (disc == "grunwald") {
    config.problem.discretization = Discretization::Grunwald;
  } else {
    fail("problem.discretization", reader.entry("problem.discretization"),
         "expected fem or grunwald, got '" + disc + "'");
  }

  config.problem.alpha_x = reader.get_real("problem.alpha_x", 0.5);
  config.problem.n_x = static_cast<Index>(reader.get_integer("problem.nx", 32));
  config.problem.grading_x = reader.get_real("problem.grading_x", 0.0);
  if (spacetime) {
    config.problem.alpha_y_or_t = 1.0;
    config.problem.n_y = static_cast<Index>(reader.get_integer("problem.nt", 32));
    config.problem.time_horizon = reader.get_real("problem.T", 1.0);
    config.problem.grading_y = reader.get_real("problem.grading_t", 0.0);
  } else {
    config.problem.alpha_y_or_t = reader.get_real("problem.alpha_y", 0.5);
    config.problem.n_y = static_cast<Index>(reader.get_integer("problem.ny", 32));
    config.problem.grading_y = reader.get_real("problem.grading_y", 0.0);
  }

  const std::string load = reader.get_string("problem.load", "constant");
  if (load == "constant") {
    config.problem.load = LoadKind::Constant;
  } else if (load == "separable-poly") {
    config.problem.load = LoadKind::SeparablePolynomial;
  } else if (load == "manufactured") {
    config.problem.load = LoadKind::ManufacturedRankOne;
  } else {
    fail("problem.load", reader.entry("problem.load"),
         "expected constant, separable-poly or manufactured, got '" + load + "'");
  }
  config.problem.load_value = reader.get_real("problem.load_value", 1.0);
  config.problem.load_exponent_x = reader.get_real("problem.load_exponent_x", 1.0);
  config.problem.load_exponent_y = reader.get_real("problem.load_exponent_y", 1.0);

  const std::string stencil = reader.get_string("problem.stencil", "backward-difference");
  if (stencil == "backward-difference") {
    config.problem.stencil = StencilChoice::backward_difference();
  } else if (stencil == "grunwald-letnikov") {
    config.problem.stencil = StencilChoice::grunwald_letnikov(
        static_cast<Index>(reader.get_integer("problem.stencil_length", 4)));
  } else {
    fail("problem.stencil", reader.entry("problem.stencil"),
         "expected backward-difference or grunwald-letnikov, got '" + stencil + "'");
  }
  if (stencil == "backward-difference" && reader.has("problem.stencil_length")) {
    reader.get_integer("problem.stencil_length", 2);  // accepted but unused
  }

  config.greedy.eps = reader.get_real("greedy.eps", 1e-4);
  config.greedy.max_modes = static_cast<int>(reader.get_integer("greedy.max_modes", 100));
  config.greedy.absolute_floor = reader.get_real("greedy.absolute_floor", 1e-28);
  config.greedy.orthogonalize = reader.get_bool("greedy.orthogonalize", false);

  config.als.max_sweeps = static_cast<int>(reader.get_integer("als.max_sweeps", 20));
  config.als.rq_rel_improvement_tol = reader.get_real("als.rq_tol", 1e-6);
  config.als.renormalize_factors = reader.get_bool("als.renormalize", true);
  const std::string init = reader.get_string("als.init", "load-factor");
  if (init == "load-factor") {
    config.als.init = AlsInit::LoadFactor;
  } else if (init == "random-seeded") {
    config.als.init = AlsInit::RandomSeeded;
  } else if (init == "ones") {
    config.als.init = AlsInit::Ones;
  } else {
    fail("als.init", reader.entry("als.init"),
         "expected load-factor, random-seeded or ones, got '" + init + "'");
  }

  config.diagnostics.theta = reader.get_bool("diagnostics.theta", false);
  config.diagnostics.dual_norm = reader.get_bool("diagnostics.dual_norm", false);

  config.report_path = reader.get_string("output.report", "report.csv");
  config.summary_path = reader.get_string("output.summary", "summary.json");
  config.modes_path = reader.get_string("output.modes", "modes.json");

  config.als.seed = static_cast<std::uint64_t>(reader.get_integer("run.seed", 0x5EED));

  reader.reject_unconsumed();

  try {
    config.greedy.validate();
    config.als.validate();
  } catch (const DomainError& err) {
    throw ConfigError(std::string("config validation: ") + err.what());
  }
  return config;
}

}  // namespace cfpgd::app
