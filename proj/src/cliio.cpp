#include "gmsfem/cliio.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gmsfem {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad_key(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config key '" + key + "': " + why);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) bad_key(key, "expected a number, got '" + v + "'");
    return d;
  } catch (const std::invalid_argument&) {
    bad_key(key, "expected a number, got '" + v + "'");
  } catch (const std::out_of_range&) {
    bad_key(key, "number out of range: '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) bad_key(key, "expected an integer, got '" + v + "'");
    return i;
  } catch (const std::invalid_argument&) {
    bad_key(key, "expected an integer, got '" + v + "'");
  } catch (const std::out_of_range&) {
    bad_key(key, "integer out of range: '" + v + "'");
  }
}

std::pair<int, int> parse_pair(const std::string& key, const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) bad_key(key, "expected NxM, got '" + v + "'");
  return {parse_int(key, v.substr(0, x)), parse_int(key, v.substr(x + 1))};
}

void apply_key(RunConfig& c, const std::string& key, const std::string& value) {
  if (key == "coarse") {
    std::tie(c.nx_coarse, c.ny_coarse) = parse_pair(key, value);
  } else if (key == "sub") {
    std::tie(c.nx_sub, c.ny_sub) = parse_pair(key, value);
  } else if (key == "field") {
    if (value == "uniform") c.field.kind = FieldKind::uniform;
    else if (value == "channels") c.field.kind = FieldKind::channels;
    else {
      c.field.kind = FieldKind::file;
      c.field.path = value;
    }
  } else if (key == "contrast") {
    c.field.contrast = parse_double(key, value);
    if (c.field.contrast < 1.0) bad_key(key, "must be >= 1");
  } else if (key == "seed") {
    const int s = parse_int(key, value);
    if (s < 0) bad_key(key, "must be >= 0");
    c.field.seed = static_cast<std::uint64_t>(s);
  } else if (key == "theta") {
    c.adapt.theta = parse_double(key, value);
    if (!(c.adapt.theta > 0.0 && c.adapt.theta < 1.0))
      bad_key(key, "must lie strictly between 0 and 1");
  } else if (key == "indicator") {
    if (value == "l2") c.adapt.indicator = IndicatorKind::l2;
    else if (value == "h1w") c.adapt.indicator = IndicatorKind::h1w;
    else if (value == "h1w-snap") c.adapt.indicator = IndicatorKind::h1w_snap;
    else if (value == "exact") c.adapt.indicator = IndicatorKind::exact;
    else bad_key(key, "expected l2|h1w|h1w-snap|exact, got '" + value + "'");
  } else if (key == "snapshots") {
    if (value == "harmonic") c.adapt.snapshots = SnapshotFamily::harmonic;
    else if (value == "nodal") c.adapt.snapshots = SnapshotFamily::nodal;
    else bad_key(key, "expected harmonic|nodal, got '" + value + "'");
  } else if (key == "init_basis") {
    c.adapt.initial_basis = parse_int(key, value);
    if (c.adapt.initial_basis < 0) bad_key(key, "must be >= 0");
  } else if (key == "add_per_mark") {
    c.adapt.add_per_mark = parse_int(key, value);
    if (c.adapt.add_per_mark < 1) bad_key(key, "must be >= 1");
  } else if (key == "gap_ratio") {
    c.adapt.gap_ratio = parse_double(key, value);
    if (c.adapt.gap_ratio <= 0.0) bad_key(key, "must be > 0");
  } else if (key == "terminate") {
    const auto colon = value.find(':');
    const std::string rule = value.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : value.substr(colon + 1);
    if (rule == "exact" || rule == "exact-literal") {
      c.adapt.terminate = TerminationRule::exact_fraction;
      c.adapt.literal_fraction = rule == "exact-literal";
      if (!arg.empty()) c.adapt.exact_fraction_p = parse_double(key, arg);
      if (!(c.adapt.exact_fraction_p > 0.0 && c.adapt.exact_fraction_p < 1.0))
        bad_key(key, "fraction must lie strictly between 0 and 1");
    } else if (rule == "err") {
      c.adapt.terminate = TerminationRule::error_target;
      if (!arg.empty()) c.adapt.error_target = parse_double(key, arg);
      if (!(c.adapt.error_target > 0.0 && c.adapt.error_target < 1.0))
        bad_key(key, "error target must lie strictly between 0 and 1");
    } else if (rule == "tol") {
      c.adapt.terminate = TerminationRule::indicator_tol;
      if (!arg.empty()) c.adapt.indicator_tol = parse_double(key, arg);
      if (c.adapt.indicator_tol <= 0.0) bad_key(key, "tolerance must be > 0");
    } else if (rule == "max-dim") {
      c.adapt.terminate = TerminationRule::max_dim;
      if (arg.empty()) bad_key(key, "max-dim needs a dimension, e.g. max-dim:2000");
      c.adapt.max_dim = parse_int(key, arg);
      if (c.adapt.max_dim < 1) bad_key(key, "dimension must be >= 1");
    } else if (rule == "max-iter") {
      c.adapt.terminate = TerminationRule::max_iter;
    } else {
      bad_key(key,
              "expected exact:P|exact-literal:P|err:Q|tol:EPS|max-dim:N|max-iter, got '" +
                  value + "'");
    }
  } else if (key == "max_iter") {
    c.adapt.max_iter = parse_int(key, value);
    if (c.adapt.max_iter < 1) bad_key(key, "must be >= 1");
  } else if (key == "f") {
    c.adapt.f_const = parse_double(key, value);
  } else if (key == "q_formula") {
    if (value == "consistent") c.adapt.q_formula = QFormula::consistent;
    else if (value == "paper") c.adapt.q_formula = QFormula::paper;
    else bad_key(key, "expected consistent|paper, got '" + value + "'");
  } else if (key == "lift") {
    std::istringstream ls(value);
    std::string part;
    std::array<double, 3> abc{0, 0, 0};
    for (int k = 0; k < 3; ++k) {
      if (!std::getline(ls, part, ',')) bad_key(key, "expected a,b,c");
      abc[k] = parse_double(key, trim(part));
    }
    c.adapt.lift = abc;
  } else if (key == "out") {
    c.out_dir = value;
  } else {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

}  // namespace

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                  ": expected 'key = value'");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

RunConfig parse_config(const KeyValues& kv) {
  RunConfig c;
  for (const auto& [key, value] : kv) apply_key(c, key, value);
  if (c.nx_coarse < 1 || c.ny_coarse < 1) bad_key("coarse", "counts must be >= 1");
  if (c.nx_sub < 1 || c.ny_sub < 1) bad_key("sub", "counts must be >= 1");
  c.adapt.validate();
  return c;
}

RunConfig parse_config(const std::string& file_path, const KeyValues& overrides) {
  KeyValues kv = read_config_file(file_path);
  for (const auto& [k, v] : overrides) kv[k] = v;
  return parse_config(kv);
}

std::string emit_config(const RunConfig& c) {
  std::ostringstream out;
  out << "coarse = " << c.nx_coarse << "x" << c.ny_coarse << "\n";
  out << "sub = " << c.nx_sub << "x" << c.ny_sub << "\n";
  switch (c.field.kind) {
    case FieldKind::uniform: out << "field = uniform\n"; break;
    case FieldKind::channels: out << "field = channels\n"; break;
    case FieldKind::file: out << "field = " << c.field.path << "\n"; break;
  }
  out << "contrast = " << format_number(c.field.contrast) << "\n";
  out << "seed = " << c.field.seed << "\n";
  out << "theta = " << format_number(c.adapt.theta) << "\n";
  switch (c.adapt.indicator) {
    case IndicatorKind::l2: out << "indicator = l2\n"; break;
    case IndicatorKind::h1w: out << "indicator = h1w\n"; break;
    case IndicatorKind::h1w_snap: out << "indicator = h1w-snap\n"; break;
    case IndicatorKind::exact: out << "indicator = exact\n"; break;
  }
  out << "snapshots = "
      << (c.adapt.snapshots == SnapshotFamily::harmonic ? "harmonic" : "nodal") << "\n";
  out << "init_basis = " << c.adapt.initial_basis << "\n";
  out << "add_per_mark = " << c.adapt.add_per_mark << "\n";
  out << "gap_ratio = " << format_number(c.adapt.gap_ratio) << "\n";
  switch (c.adapt.terminate) {
    case TerminationRule::exact_fraction:
      out << "terminate = " << (c.adapt.literal_fraction ? "exact-literal:" : "exact:")
          << format_number(c.adapt.exact_fraction_p) << "\n";
      break;
    case TerminationRule::error_target:
      out << "terminate = err:" << format_number(c.adapt.error_target) << "\n";
      break;
    case TerminationRule::indicator_tol:
      out << "terminate = tol:" << format_number(c.adapt.indicator_tol) << "\n";
      break;
    case TerminationRule::max_dim:
      out << "terminate = max-dim:" << c.adapt.max_dim << "\n";
      break;
    case TerminationRule::max_iter:
      out << "terminate = max-iter\n";
      break;
  }
  out << "max_iter = " << c.adapt.max_iter << "\n";
  out << "f = " << format_number(c.adapt.f_const) << "\n";
  out << "q_formula = "
      << (c.adapt.q_formula == QFormula::consistent ? "consistent" : "paper") << "\n";
  out << "lift = " << format_number(c.adapt.lift[0]) << "," << format_number(c.adapt.lift[1])
      << "," << format_number(c.adapt.lift[2]) << "\n";
  out << "out = " << c.out_dir << "\n";
  return out.str();
}

namespace {

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

}  // namespace

void emit_outputs(const ConvergenceHistory& history, const StructuredGrids& grids,
                  const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "'");

  {
    auto out = open_output(dir / "history.csv");
    out << "dim,L2_vs_u,H1_vs_u,L2_vs_usnap,H1_vs_usnap,sum_eta2,marked,seconds\n";
    for (const auto& r : history.iterations) {
      out << r.dim << "," << format_number(r.errors.l2_vs_u) << ","
          << format_number(r.errors.h1_vs_u) << "," << format_number(r.errors.l2_vs_usnap)
          << "," << format_number(r.errors.h1_vs_usnap) << "," << format_number(r.sum_eta2)
          << "," << r.marked << "," << format_number(r.seconds) << "\n";
    }
  }

  {
    auto out = open_output(dir / "basis_counts.csv");
    const auto& counts = history.last().basis_counts;
    for (int cy = grids.ny_coarse; cy >= 0; --cy) {  // top row first
      for (int cx = 0; cx <= grids.nx_coarse; ++cx) {
        if (cx) out << ",";
        out << counts[grids.coarse_node(cx, cy)];
      }
      out << "\n";
    }
  }

  {
    auto out = open_output(dir / "energy_error_grid.csv");
    out << "stage";
    for (int cx = 0; cx <= grids.nx_coarse; ++cx) out << ",c" << cx;
    out << "\n";
    for (const char* stage : {"first", "last"}) {
      const auto& grid = std::string(stage) == "first" ? history.iterations.front().exact_eta2
                                                       : history.last().exact_eta2;
      for (int cy = grids.ny_coarse; cy >= 0; --cy) {
        out << stage;
        for (int cx = 0; cx <= grids.nx_coarse; ++cx)
          out << "," << format_number(grid[grids.coarse_node(cx, cy)]);
        out << "\n";
      }
    }
  }

  {
    auto out = open_output(dir / "run_summary.txt");
    out << emit_config(config);
    out << "# result iterations = " << history.iterations.size() << "\n";
    out << "# result converged = " << (history.converged ? 1 : 0) << "\n";
    out << "# result termination = " << history.termination << "\n";
    out << "# result final_dim = " << history.final_dim() << "\n";
    const auto& last = history.last();
    out << "# result L2_vs_u = " << format_number(last.errors.l2_vs_u) << "\n";
    out << "# result H1_vs_u = " << format_number(last.errors.h1_vs_u) << "\n";
    out << "# result L2_vs_usnap = " << format_number(last.errors.l2_vs_usnap) << "\n";
    out << "# result H1_vs_usnap = " << format_number(last.errors.h1_vs_usnap) << "\n";
    out << "# result sum_eta2 = " << format_number(last.sum_eta2) << "\n";
  }
}

}  // namespace gmsfem
