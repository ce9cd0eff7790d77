#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "circdyn/bunch.hpp"
#include "circdyn/construct.hpp"
#include "circdyn/invariant.hpp"
#include "circdyn/periodic.hpp"
#include "json.hpp"
#include "plot.hpp"

namespace circdyn::cli {

namespace {

using nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

nlohmann::json parse_json(const std::string& text, const std::string& where) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("malformed JSON in " + where + ": " + e.what());
  }
}

ParamMap read_params(const nlohmann::json& j) {
  ParamMap p;
  if (!j.contains("params")) return p;
  if (!j["params"].is_object()) throw UsageError("\"params\" must be an object");
  for (const auto& [k, v] : j["params"].items()) {
    if (!v.is_number()) throw UsageError("parameter " + k + " must be a number");
    p[k] = v.get<double>();
  }
  return p;
}

std::string read_rhs(const nlohmann::json& j, const char* key = "rhs") {
  if (!j.contains(key) || !j[key].is_string())
    throw UsageError(std::string("spec needs a string \"") + key + "\"");
  return j[key].get<std::string>();
}

// Wraps expression errors in the spec as usage errors.
template <class F>
auto spec_guard(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw UsageError(where + ": " + e.what());
  } catch (const EvalError& e) {
    throw UsageError(where + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(where + ": " + e.what());
  }
}

BunchParams bunch_params(const nlohmann::json& flags) {
  BunchParams b;
  b.grid_size = flags["grid"];
  b.horizon = flags["horizon"];
  b.cluster_tol = flags["cluster_tol"];
  b.dichotomy.window = flags["window"];
  b.dichotomy.lambda_min = flags["lambda_min"];
  if (flags.contains("seed")) {
    std::mt19937_64 rng(flags["seed"].get<unsigned long>());
    b.phase = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
  }
  return b;
}

const char* letter(Label l) { return l == Label::kU ? "U" : "S"; }

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-")
    out << text << (text.empty() || text.back() == '\n' ? "" : "\n");
  else
    write_file(path, text);
}

}  // namespace

OdeSystem load_spec(const std::string& arg) {
  if (!std::filesystem::exists(arg)) {
    for (const auto& name : library_names())
      if (name == arg) return library(arg);
    throw UsageError("no spec file or library model named " + arg);
  }
  const std::string text = read_file(arg);
  auto j = parse_json(text, arg);
  if (!j.is_object()) throw UsageError(arg + ": spec must be a JSON object");
  return spec_guard(arg, [&]() -> OdeSystem {
    const std::string form = j.value("form", std::string("expression"));
    if (form == "sampled") return import_sampled(text);
    if (form != "expression") throw UsageError(arg + ": unknown form " + form);
    ParamMap params = read_params(j);
    if (j.contains("model")) {
      std::string name = j["model"].get<std::string>();
      OdeSystem s = library(name, params);
      return s;
    }
    OdeSystem s = OdeSystem::from_expression(read_rhs(j), params);
    if (j.contains("period") && !j["period"].is_null()) {
      double T = j["period"].get<double>();
      if (!(T > 0.0)) throw UsageError(arg + ": period must be positive");
      s.time_structure = PeriodicTime{T};
    }
    if (j.contains("limits") && !j["limits"].is_null()) {
      const auto& l = j["limits"];
      AsymptoticallyAutonomous aa;
      aa.f_minus = OdeSystem::from_expression(read_rhs(l, "minus"), params).field;
      aa.f_plus = OdeSystem::from_expression(read_rhs(l, "plus"), params).field;
      aa.half_width = l.value("half_width", 1.0);
      s.time_structure = aa;
    }
    return s;
  });
}

SemiStrip load_linear_spec(const std::string& path) {
  auto j = parse_json(read_file(path), path);
  if (!j.is_object()) throw UsageError(path + ": spec must be a JSON object");
  return spec_guard(path, [&] {
    LinearOptions o;
    if (j.contains("M")) o.M = j["M"].get<double>();
    if (j.contains("lambda")) o.lambda = j["lambda"].get<double>();
    SemiStrip s;
    s.system = std::make_shared<LinearSystem>(
        LinearSystem::from_expression(read_rhs(j), read_params(j), o));
    s.C_star = j.value("C_star", 1.0);
    if (!(s.C_star > 0.0)) throw UsageError(path + ": C_star must be positive");
    return s;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Classification and construction tools for scalar ODEs on the circle"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // classify
  std::string spec_a, spec_b, json_out, csv_out, svg_out;
  int grid = 720;
  double horizon = 50.0, cluster_tol = 1e-3, window = 5.0, lambda_min = 0.05;
  unsigned long seed = 0;
  auto add_bunch_flags = [&](CLI::App* c) {
    c->add_option("--grid", grid, "grid size on the section t = 0")->capture_default_str();
    c->add_option("--horizon", horizon, "integration horizon")->capture_default_str();
    c->add_option("--cluster-tol", cluster_tol, "endpoint clustering tolerance")
        ->capture_default_str();
    c->add_option("--window", window, "dichotomy fit window")->capture_default_str();
    c->add_option("--lambda-min", lambda_min, "smallest accepted rate")->capture_default_str();
    c->add_option("--seed", seed, "fixes the grid phase");
  };
  auto* classify = app.add_subcommand("classify", "gradient-like check and equipped set");
  classify->add_option("spec", spec_a, "spec file or model name")->required();
  add_bunch_flags(classify);
  classify->add_option("--json", json_out, "report path (default stdout)");
  classify->add_option("--csv", csv_out, "equipped-set CSV path");
  classify->add_option("--svg", svg_out, "foliation plot path");

  bool allow_reflection = false;
  auto* equiv = app.add_subcommand("equiv", "compare u-invariants of two systems");
  equiv->add_option("spec_a", spec_a)->required();
  equiv->add_option("spec_b", spec_b)->required();
  equiv->add_flag("--allow-reflection", allow_reflection, "also accept the reversed word");
  add_bunch_flags(equiv);

  std::string word;
  double rate = 3.14159265358979323846;
  auto* autonomize_cmd = app.add_subcommand("autonomize", "standard model for a word");
  autonomize_cmd->add_option("word", word, "word over {U,S}")->required();
  autonomize_cmd->add_option("--rate", rate, "|f'| at the zeros")->capture_default_str();
  autonomize_cmd->add_option("--out", json_out, "sampled spec path (default stdout)");
  autonomize_cmd->add_option("--svg", svg_out, "annulus diagram path");

  int pgrid = 256, q_max = 64;
  long iterations = 100000;
  double tol = 1e-10, period = 0.0;
  auto* poincare = app.add_subcommand("poincare", "Poincare map, rotation number, orbits");
  poincare->add_option("spec", spec_a)->required();
  poincare->add_option("--grid", pgrid)->capture_default_str();
  poincare->add_option("--tol", tol, "integration tolerance")->capture_default_str();
  poincare->add_option("--q-max", q_max)->capture_default_str();
  poincare->add_option("--iterations", iterations)->capture_default_str();
  poincare->add_option("--period", period, "override the period");
  poincare->add_option("--csv", csv_out, "orbit table path");

  int samples = 100;
  double d = 0.1, tau_max = 20.0;
  auto* equimorph = app.add_subcommand("equimorph", "conjugating map of two linear systems");
  equimorph->add_option("spec_a", spec_a, "linear spec {\"rhs\": a(t)}")->required();
  equimorph->add_option("spec_b", spec_b)->required();
  equimorph->add_option("--samples", samples)->capture_default_str();
  equimorph->add_option("--d", d, "inner cutoff")->capture_default_str();
  equimorph->add_option("--tau-max", tau_max)->capture_default_str();
  equimorph->add_option("--seed", seed);
  equimorph->add_option("--csv", csv_out, "Phi graph C,tau,C1");

  double t0 = 0.0, x0 = 0.0, t1 = 10.0, rtol = 1e-9;
  auto* simulate = app.add_subcommand("simulate", "one integral curve as CSV");
  simulate->add_option("spec", spec_a)->required();
  simulate->add_option("--t0", t0)->capture_default_str();
  simulate->add_option("--x0", x0)->capture_default_str();
  simulate->add_option("--t1", t1)->capture_default_str();
  simulate->add_option("--rtol", rtol)->capture_default_str();
  simulate->add_option("--csv", csv_out, "trajectory path (default stdout)");

  double epsilon = 0.1, l_max = 200.0, l_step = 0.05, burn_in = 30.0;
  auto* almost = app.add_subcommand("almost-periods", "epsilon-almost periods of a solution");
  almost->add_option("spec", spec_a)->required();
  almost->add_option("--x0", x0)->capture_default_str();
  almost->add_option("--epsilon", epsilon)->capture_default_str();
  almost->add_option("--l-max", l_max)->capture_default_str();
  almost->add_option("--l-step", l_step)->capture_default_str();
  almost->add_option("--burn-in", burn_in, "start at t = -burn_in")->capture_default_str();

  auto* list = app.add_subcommand("list-models", "library models and default parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  auto flags = [&](CLI::App* c) {
    nlohmann::json f = {{"grid", grid},     {"horizon", horizon},      {"cluster_tol", cluster_tol},
                        {"window", window}, {"lambda_min", lambda_min}};
    if (c->count("--seed")) f["seed"] = seed;
    return f;
  };

  try {
    if (*classify) {
      OdeSystem s = load_spec(spec_a);
      if (grid < 8 || !(horizon > 0.0)) throw UsageError("need grid >= 8 and horizon > 0");
      auto report = check_assumptions(s, bunch_params(flags(classify)));
      emit(out, json_out, report.to_json());
      if (report.gradient_like() && !csv_out.empty())
        write_file(csv_out, equipped_csv(*report.equipped));
      if (!svg_out.empty()) {
        std::vector<MarkedCurve> curves;
        for (int i = 0; i < 24; ++i) curves.push_back({(i + 0.5) / 24.0, "fan"});
        for (const auto& b : report.u_points) curves.push_back({b.point.value, "U"});
        for (const auto& b : report.s_points) curves.push_back({b.point.value, "S"});
        write_file(svg_out, foliation_svg(s, curves, std::min(horizon, 6.0), s.label));
      }
      if (!report.gradient_like()) {
        for (int k = 0; k < 4; ++k)
          if (report.assumption[k].verdict != Verdict::kHolds)
            err << "A" << k + 1 << " " << to_string(report.assumption[k].verdict) << ": "
                << report.assumption[k].diagnostics << "\n";
        return kNegative;
      }
      return kOk;
    }
    if (*equiv) {
      OdeSystem a = load_spec(spec_a), b = load_spec(spec_b);
      auto params = bunch_params(flags(equiv));
      auto wa = word_of(equipped_set(a, params));
      auto wb = word_of(equipped_set(b, params));
      bool same = equivalent(wa, wb, allow_reflection);
      ordered_json j;
      j["a"] = {{"word", wa.word}, {"canonical", wa.canonical}};
      j["b"] = {{"word", wb.word}, {"canonical", wb.canonical}};
      j["allow_reflection"] = allow_reflection;
      j["equivalent"] = same;
      out << j.dump(2) << "\n";
      return same ? kOk : kNegative;
    }
    if (*autonomize_cmd) {
      UInvariant inv;
      try {
        inv = invariant_from_token(word);
      } catch (const std::invalid_argument& e) {
        throw UsageError(std::string("word ") + word + ": " + e.what());
      }
      if (!(rate > 0.0)) throw UsageError("rate must be positive");
      auto a = autonomize(inv, rate);
      auto* g = dynamic_cast<const GluedField*>(a.system.field.get());
      emit(out, json_out, export_sampled(*g, "autonomize:" + inv.canonical));
      if (!svg_out.empty()) write_file(svg_out, annulus_svg(a, inv.canonical));
      return kOk;
    }
    if (*poincare) {
      OdeSystem s = load_spec(spec_a);
      if (pgrid < 4 || q_max < 1 || iterations < 1) throw UsageError("bad poincare flags");
      auto P = poincare_map(s, pgrid, tol,
                            poincare->count("--period") ? std::optional<double>(period)
                                                        : std::nullopt);
      auto r = rotation_number(P, iterations, q_max);
      ordered_json j;
      j["period"] = P.period();
      j["degree"] = P.degree();
      j["interpolation_error"] = P.interpolation_error();
      j["rotation"] = ordered_json::parse(to_json(r));
      std::vector<PeriodicOrbit> orbits;
      if (r.rational) {
        orbits = periodic_points(P, r.rational->second, r.rational->first);
        j["orbits"] = ordered_json::parse(to_json(orbits));
        try {
          auto e = equipped_set_from_periodic(orbits);
          ordered_json pts = ordered_json::array();
          for (const auto& p : e.points) pts.push_back({{"position", p.position},
                                                        {"label", letter(p.label)}});
          j["equipped_set"] = pts;
          j["word"] = word_of(e).canonical;
        } catch (const std::exception& e) {
          j["equipped_set"] = nullptr;
          j["equipped_note"] = e.what();
        }
      } else {
        j["orbits"] = ordered_json::array();
        j["note"] = "rotation number irrational at working precision";
      }
      out << j.dump(2) << "\n";
      if (!csv_out.empty()) {
        std::ostringstream c;
        write_orbits_csv(orbits, c);
        write_file(csv_out, c.str());
      }
      return kOk;
    }
    if (*equimorph) {
      SemiStrip a = load_linear_spec(spec_a), b = load_linear_spec(spec_b);
      VerifyOptions o;
      o.d = d;
      o.tau_max = tau_max;
      if (equimorph->count("--seed")) o.seed = seed;
      auto r = verify_equimorphism(a, b, samples, {1e-3, 1e-2, 1e-1}, o);
      out << r.to_json() << "\n";
      if (!csv_out.empty()) {
        std::ofstream c(csv_out);
        if (!c) throw UsageError("cannot write " + csv_out);
        write_phi_csv(a, b, 50, 41, tau_max, c);
      }
      return r.passed() ? kOk : kNegative;
    }
    if (*simulate) {
      OdeSystem s = load_spec(spec_a);
      IntegrateOptions o;
      o.rtol = rtol;
      auto c = integrate_lifted(s, t0, x0, t1, o);
      std::ostringstream csv;
      write_csv(c, csv);
      emit(out, csv_out, csv.str());
      return kOk;
    }
    if (*almost) {
      OdeSystem s = load_spec(spec_a);
      if (!(burn_in >= 0.0)) throw UsageError("burn-in must be non-negative");
      auto c = integrate_lifted(s, -burn_in, x0, 2.0 * l_max);
      auto r = almost_periods([&](double t) { return c.lifted(t); }, 0.0, 2.0 * l_max, epsilon,
                              l_max, l_step);
      out << to_json(r) << "\n";
      return r.relatively_dense ? kOk : kNegative;
    }
    if (*list) {
      ordered_json j = ordered_json::array();
      for (const auto& name : library_names()) {
        ordered_json m;
        m["name"] = name;
        m["params"] = ordered_json::object();
        for (const auto& [k, v] : library_defaults(name)) m["params"][k] = v;
        OdeSystem s = library(name);
        if (auto T = s.period()) m["period"] = *T;
        j.push_back(m);
      }
      out << j.dump(2) << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}

}  // namespace circdyn::cli
