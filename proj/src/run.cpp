#include "run.hpp"

#include "cfpgd/matrix_market.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cfpgd::app {

namespace {

void ensure_parent_directory(const std::string& path) {
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::ofstream open_output(const std::string& path) {
  ensure_parent_directory(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

std::string json_quote(const std::string& text) {
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

const char* bool_text(bool value) { return value ? "true" : "false"; }

const char* kind_text(ProblemKind kind) {
  return kind == ProblemKind::Poisson2D ? "poisson2d" : "spacetime";
}

const char* discretization_text(Discretization disc) {
  return disc == Discretization::Fem ? "fem" : "grunwald";
}

const char* load_text(LoadKind load) {
  switch (load) {
    case LoadKind::Constant: return "constant";
    case LoadKind::SeparablePolynomial: return "separable-poly";
    case LoadKind::ManufacturedRankOne: return "manufactured";
  }
  return "unknown";
}

const char* init_text(AlsInit init) {
  switch (init) {
    case AlsInit::LoadFactor: return "load-factor";
    case AlsInit::RandomSeeded: return "random-seeded";
    case AlsInit::Ones: return "ones";
  }
  return "unknown";
}

const char* stencil_text(const StencilChoice& choice) {
  return choice.kind == StencilChoice::Kind::BackwardDifference ? "backward-difference"
                                                                : "grunwald-letnikov";
}

void write_csv(const std::string& path, const std::vector<IterationRecord<double>>& records) {
  std::ofstream out = open_output(path);
  out << "N,delta_E,rq,tau,sweeps,theta_hat,energy_error_sq\n";
  for (const auto& rec : records) {
    out << rec.mode_index << ',' << format_real(rec.delta_energy) << ','
        << format_real(rec.rayleigh_quotient) << ',' << format_real(rec.tau) << ','
        << rec.sweeps << ',';
    if (rec.theta_hat) out << format_real(*rec.theta_hat);
    out << ',';
    if (rec.energy_error_sq) out << format_real(*rec.energy_error_sq);
    out << '\n';
  }
}

void write_config_echo(std::ostream& out, const RunConfig& config, const std::string& indent) {
  const auto& p = config.problem;
  const bool spacetime = p.kind == ProblemKind::SpaceTime;
  out << indent << "\"problem\": {\n";
  out << indent << "  \"kind\": " << json_quote(kind_text(p.kind)) << ",\n";
  out << indent << "  \"discretization\": " << json_quote(discretization_text(p.discretization))
      << ",\n";
  out << indent << "  \"alpha_x\": " << format_real(p.alpha_x) << ",\n";
  if (spacetime) {
    out << indent << "  \"nt\": " << p.n_y << ",\n";
    out << indent << "  \"T\": " << format_real(p.time_horizon) << ",\n";
    out << indent << "  \"grading_t\": " << format_real(p.grading_y) << ",\n";
  } else {
    out << indent << "  \"alpha_y\": " << format_real(p.alpha_y_or_t) << ",\n";
    out << indent << "  \"ny\": " << p.n_y << ",\n";
    out << indent << "  \"grading_y\": " << format_real(p.grading_y) << ",\n";
  }
  out << indent << "  \"nx\": " << p.n_x << ",\n";
  out << indent << "  \"grading_x\": " << format_real(p.grading_x) << ",\n";
  out << indent << "  \"load\": " << json_quote(load_text(p.load)) << ",\n";
  out << indent << "  \"load_value\": " << format_real(p.load_value) << ",\n";
  out << indent << "  \"load_exponent_x\": " << format_real(p.load_exponent_x) << ",\n";
  out << indent << "  \"load_exponent_y\": " << format_real(p.load_exponent_y) << ",\n";
  out << indent << "  \"stencil\": " << json_quote(stencil_text(p.stencil)) << ",\n";
  out << indent << "  \"stencil_length\": " << p.stencil.length << "\n";
  out << indent << "},\n";
  out << indent << "\"greedy\": {\n";
  out << indent << "  \"eps\": " << format_real(config.greedy.eps) << ",\n";
  out << indent << "  \"max_modes\": " << config.greedy.max_modes << ",\n";
  out << indent << "  \"absolute_floor\": " << format_real(config.greedy.absolute_floor) << ",\n";
  out << indent << "  \"orthogonalize\": " << bool_text(config.greedy.orthogonalize) << "\n";
  out << indent << "},\n";
  out << indent << "\"als\": {\n";
  out << indent << "  \"max_sweeps\": " << config.als.max_sweeps << ",\n";
  out << indent << "  \"rq_tol\": " << format_real(config.als.rq_rel_improvement_tol) << ",\n";
  out << indent << "  \"init\": " << json_quote(init_text(config.als.init)) << ",\n";
  out << indent << "  \"renormalize\": " << bool_text(config.als.renormalize_factors) << "\n";
  out << indent << "},\n";
  out << indent << "\"diagnostics\": {\n";
  out << indent << "  \"theta\": " << bool_text(config.diagnostics.theta) << ",\n";
  out << indent << "  \"dual_norm\": " << bool_text(config.diagnostics.dual_norm) << "\n";
  out << indent << "},\n";
  out << indent << "\"output\": {\n";
  out << indent << "  \"report\": " << json_quote(config.report_path) << ",\n";
  out << indent << "  \"summary\": " << json_quote(config.summary_path) << ",\n";
  out << indent << "  \"modes\": " << json_quote(config.modes_path) << "\n";
  out << indent << "},\n";
  out << indent << "\"seed\": " << config.als.seed << "\n";
}

void write_summary(const std::string& path, const RunConfig& config,
                   const GreedyResult<double>& result, double wall_time_ms) {
  std::ofstream out = open_output(path);
  out << "{\n";
  out << "  \"status\": " << json_quote(to_string(result.status)) << ",\n";
  out << "  \"modes\": " << result.records.size() << ",\n";
  const double final_delta =
      result.records.empty() ? 0.0 : result.records.back().delta_energy;
  out << "  \"final_delta_E\": " << format_real(final_delta) << ",\n";
  out << "  \"config\": {\n";
  write_config_echo(out, config, "    ");
  out << "  },\n";
  out << "  \"wall_time_ms\": " << format_real(wall_time_ms) << "\n";
  out << "}\n";
}

void write_vector(std::ostream& out, const VectorX<double>& v) {
  out << '[';
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out << ", ";
    out << format_real(v[i]);
  }
  out << ']';
}

void write_modes(const std::string& path, const BuiltProblem<double>& built,
                 const SeparableFunction<double>& u) {
  std::ofstream out = open_output(path);
  out << "{\n";
  out << "  \"alpha_x\": " << format_real(built.x.interval.order().alpha()) << ",\n";
  out << "  \"alpha_y\": " << format_real(built.y.interval.order().alpha()) << ",\n";
  out << "  \"meshes\": {\n";
  out << "    \"" << built.x.interval.label() << "\": ";
  write_vector(out, built.x.interval.mesh().nodes());
  out << ",\n";
  out << "    \"" << built.y.interval.label() << "\": ";
  write_vector(out, built.y.interval.mesh().nodes());
  out << "\n  },\n";
  out << "  \"modes\": [";
  bool first = true;
  for (const auto& mode : u.modes()) {
    if (!first) out << ',';
    first = false;
    out << "\n    {\"scale\": " << format_real(mode.scale) << ", \"p\": ";
    write_vector(out, mode.p);
    out << ", \"q\": ";
    write_vector(out, mode.q);
    out << '}';
  }
  if (!first) out << "\n  ";
  out << "]\n";
  out << "}\n";
}

}  // namespace

std::string format_real(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

int run_solve(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const BuiltProblem<double> built = build_problem(config.problem);
  const GreedyResult<double> result = greedy_solve(built.x, built.y, built.load, config.greedy,
                                                   config.als, config.diagnostics);
  const double wall_time_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  write_csv(config.report_path, result.records);
  write_summary(config.summary_path, config, result, wall_time_ms);
  write_modes(config.modes_path, built, result.u);

  std::cout << "status=" << to_string(result.status) << " modes=" << result.records.size()
            << " wall_time_ms=" << format_real(wall_time_ms) << "\n";

  switch (result.status) {
    case GreedyStatus::Converged: return 0;
    case GreedyStatus::Stagnated: return 2;
    case GreedyStatus::MaxModes: return 3;
  }
  return 1;
}

void export_matrices(const RunConfig& config, const std::string& out_dir) {
  const BuiltProblem<double> built = build_problem(config.problem);
  std::filesystem::create_directories(out_dir);
  const auto dump = [&](const std::string& name, const SparseMatrixX<double>& matrix) {
    std::ofstream out(std::filesystem::path(out_dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file: " + name);
    write_matrix_market(out, matrix);
  };
  dump(std::string("A_") + built.x.interval.label() + ".mtx", built.x.A);
  dump(std::string("M_") + built.x.interval.label() + ".mtx", built.x.M);
  dump(std::string("A_") + built.y.interval.label() + ".mtx", built.y.A);
  dump(std::string("M_") + built.y.interval.label() + ".mtx", built.y.M);
}

}  // namespace cfpgd::app
