#include <putput/circuit_io.hpp>
#include <putput/parallel.hpp>
#include <putput/putput.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace putput;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;

// Failure of a command, reported as one `error: <stage>: <reason>` line.
struct CommandError {
  std::string stage;
  std::string reason;
  int code = kInternal;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// Runs `fn` and converts library exceptions into a CommandError for `stage`.
template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const CommandError&) {
    throw;
  } catch (const StageError& e) {
    // what() is "<stage>: <reason>".
    throw CommandError{e.stage(), std::string(e.what()).substr(e.stage().size() + 2),
                       e.input_fault() ? kUsage : kInternal};
  } catch (const ParseError& e) {
    throw CommandError{name, e.what(), kUsage};
  } catch (const InputError& e) {
    throw CommandError{name, e.what(), kUsage};
  } catch (const ScopeError& e) {
    throw CommandError{name, e.what(), kUsage};
  } catch (const ValidationError& e) {
    throw CommandError{name, e.what(), kUsage};
  } catch (const BudgetError& e) {
    throw CommandError{name, e.what(), kUsage};
  } catch (const ElbowError& e) {
    throw CommandError{name, e.what(), kUsage};
  } catch (const std::exception& e) {
    throw CommandError{name, e.what(), kInternal};
  }
}

std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  return os;
}

// Loads the CSV, with an explicit schema when one is given.
Database load_data(const std::string& csv, const std::string& schema_path) {
  return stage("load", [&] {
    std::optional<Schema> schema;
    if (!schema_path.empty()) schema = read_schema_file(schema_path);
    return load_csv(csv, schema);
  });
}

std::string first_line(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  std::string line;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') return line;
  throw ParseError("empty file " + path.string());
}

// The schema a theory file points at, resolved next to the file.
fs::path cnf_schema_path(const fs::path& cnf) {
  std::ifstream is(cnf, std::ios::binary);
  if (!is) throw InputError("cannot open " + cnf.string());
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("schema ", 0) == 0) {
      const fs::path ref = line.substr(7);
      return ref.is_absolute() ? ref : cnf.parent_path() / ref;
    }
  throw ParseError("theory file has no schema line");
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << one_line(w) << '\n';
}

// ---------------------------------------------------------------------------

struct Common {
  std::string data;
  std::string schema;
  std::string out;
};

void cmd_binarize(const Common& c) {
  const Database db = load_data(c.data, c.schema);
  stage("write", [&] {
    make_dir(c.out);
    const Schema& schema = db.schema();
    write_schema_file(fs::path(c.out) / "schema.txt", schema);
    auto os = open_out(fs::path(c.out) / "binarized.csv");
    for (VarId b = 0; b < schema.num_bool(); ++b)
      os << (b ? "," : "") << csv_cell(schema.bool_name(b));
    os << '\n';
    for (std::size_t r = 0; r < db.size(); ++r) {
      const auto bits = db.bits(r);
      for (std::size_t b = 0; b < bits.size(); ++b) os << (b ? "," : "") << int(bits[b]);
      os << '\n';
    }
  });
  print_warnings(db.warnings());
  std::cout << "rows: " << db.size() << "\nbooleans: " << db.schema().num_bool() << '\n';
}

void cmd_learn(const Common& c, const std::string& positives_path, const MixtureConfig& mc) {
  const Database db = load_data(c.data, c.schema);
  const ExampleSet positives =
      stage("load", [&] { return read_example_set_file(positives_path, db); });
  std::vector<std::string> warnings;
  const ProbCircuit pc =
      stage("learn", [&] { return learn_mixture(db, positives, mc, &warnings); });
  stage("write", [&] {
    make_dir(c.out);
    write_pc_file(fs::path(c.out) / "learned.pc", pc);
    write_schema_file(fs::path(c.out) / "schema.txt", db.schema());
  });
  print_warnings(warnings);
  std::cout << "nodes: " << pc.size() << '\n';
}

void cmd_elbow(const Common& c, const std::string& circuit, double epsilon, bool log_space) {
  const Database db = load_data(c.data, c.schema);
  const ProbCircuit pc =
      stage("load", [&] { return import_circuit(circuit, Smoothness::Optional); });
  stage("write", [&] { make_dir(c.out); });
  const ElbowScale scale = log_space ? ElbowScale::Log : ElbowScale::Linear;
  // The profile is written even when no elbow exists, so a threshold can be
  // picked by hand and passed to `putput --threshold`.
  const Elbow e = stage("elbow", [&] {
    try {
      return find_elbow(pc, db, epsilon, scale);
    } catch (const ElbowError& err) {
      auto os = open_out(fs::path(c.out) / "profile.txt");
      write_profile(os, err.profile());
      throw;
    }
  });
  stage("write", [&] {
    auto values = log_likelihoods(pc, db);
    if (scale == ElbowScale::Linear)
      for (double& v : values) v = std::exp(v);
    auto profile = open_out(fs::path(c.out) / "profile.txt");
    write_profile(profile, elbow_profile(values));
    auto os = open_out(fs::path(c.out) / "threshold.txt");
    os << "threshold: " << exact(e.threshold) << "\nscale: " << to_string(scale)
       << "\ntarget_size: " << e.target.size() << '\n';
    write_example_set_file(fs::path(c.out) / "target.txt", e.target);
  });
  std::cout << "threshold: " << exact(e.threshold) << "\ntarget_size: " << e.target.size()
            << '\n';
}

struct PruneArgs {
  std::string circuit;
  std::string method = "flows";
  double alpha = 0.0;
  double fraction = 0.0;
  std::string flow_set;
  std::string target;
};

PruneMethod method_of(const std::string& name) {
  const auto m = parse_prune_method(name);
  if (!m) throw CommandError{"usage", "unknown method '" + name + "'", kUsage};
  return *m;
}

void cmd_prune(const Common& c, const PruneArgs& a) {
  PruneParams params;
  params.method = method_of(a.method);
  params.alpha = a.alpha;
  params.fraction = a.fraction;
  const ProbCircuit pc =
      stage("load", [&] { return import_circuit(a.circuit, Smoothness::Optional); });

  std::optional<Database> db;
  if (!c.data.empty()) db = load_data(c.data, c.schema);
  const std::string flow_path = a.flow_set.empty() ? a.target : a.flow_set;
  if (params.method == PruneMethod::Flows && (!db || flow_path.empty()))
    throw CommandError{"usage", "flows pruning needs --data and --flow-set (or --target)",
                       kUsage};
  std::optional<ExampleSet> flow_set;
  std::optional<ExampleSet> target;
  if (db) {
    if (!flow_path.empty())
      flow_set = stage("load", [&] { return read_example_set_file(flow_path, *db); });
    if (!a.target.empty())
      target = stage("load", [&] { return read_example_set_file(a.target, *db); });
  }

  const ProbCircuit pruned = stage("prune", [&] {
    check(params);
    return prune(pc, params, db ? &*db : nullptr, flow_set ? &*flow_set : nullptr);
  });
  stage("write", [&] {
    make_dir(c.out);
    write_pc_file(fs::path(c.out) / "pruned.pc", pruned);
  });
  std::cout << "nodes: " << pc.size() << " -> " << pruned.size() << '\n';
  if (db && target) {
    const EvalReport r = score(covered_rows(pruned, db->columns()), db->to_rows(*target));
    stage("write", [&] {
      auto os = open_out(fs::path(c.out) / "report.txt");
      write_report(os, r);
    });
    write_report(std::cout, r);
  }
}

void cmd_putput(const Common& c, const std::string& positives_path, const std::string& circuit,
                const PipelineConfig& cfg) {
  const Database db = load_data(c.data, c.schema);
  PutputResult r;
  if (!circuit.empty()) {
    const ProbCircuit pc =
        stage("load", [&] { return import_circuit(circuit, Smoothness::Optional); });
    r = stage("pipeline", [&] { return run_pipeline(pc, db, cfg); });
  } else {
    if (positives_path.empty())
      throw CommandError{"usage", "--positives is required unless --circuit is given", kUsage};
    const ExampleSet positives =
        stage("load", [&] { return read_example_set_file(positives_path, db); });
    r = stage("pipeline", [&] { return run_pipeline(db, positives, cfg); });
  }
  stage("write", [&] { write_result(c.out, r, db.schema()); });
  print_warnings(r.warnings);
  std::cout << "target_size: " << r.target.size() << "\nsize: " << r.learned.size() << " -> "
            << r.step1.size() << " -> " << r.final_circuit.size()
            << "\nf1: " << exact(r.final_report.f1) << "\nquery: "
            << emit_query(r.cnf, db.schema(), QueryDialect::Human) << '\n';
}

void cmd_score(const Common& c, const std::string& model, const std::string& target_path) {
  const std::string header = stage("load", [&] { return first_line(model); });
  std::string schema_path = c.schema;
  const bool is_cnf = header.rfind("putput-cnf", 0) == 0;
  if (is_cnf && schema_path.empty())
    schema_path = stage("load", [&] { return cnf_schema_path(model).string(); });
  const Database db = load_data(c.data, schema_path);
  const ExampleSet target =
      stage("load", [&] { return read_example_set_file(target_path, db); });

  const RowSet covered = stage("score", [&] {
    if (is_cnf) {
      const Cnf cnf = read_cnf_file(model, db.schema()).cnf;
      RowSet rows(db.size());
      for (std::size_t r = 0; r < db.size(); ++r)
        if (cnf.satisfied_by(db.row(r))) rows.set(r);
      return rows;
    }
    if (header.rfind("putput-lc", 0) == 0) {
      const LogicCircuit lc = read_lc_file(model);
      if (lc.num_vars() > db.schema().num_bool())
        throw ScopeError("circuit references boolean variables beyond the schema");
      return covered_rows(lc, db.columns());
    }
    const ProbCircuit pc = import_circuit(model, Smoothness::Optional);
    if (pc.num_vars() > db.schema().num_bool())
      throw ScopeError("circuit references boolean variables beyond the schema");
    return covered_rows(pc, db.columns());
  });
  const EvalReport r = score(covered, db.to_rows(target));
  write_report(std::cout, r);
  if (!c.out.empty())
    stage("write", [&] {
      make_dir(c.out);
      auto os = open_out(fs::path(c.out) / "report.txt");
      write_report(os, r);
    });
}

std::pair<Cnf, Schema> load_cnf(const std::string& path, const std::string& schema_override) {
  return stage("load", [&] {
    const fs::path schema_path =
        schema_override.empty() ? cnf_schema_path(path) : fs::path(schema_override);
    Schema schema = read_schema_file(schema_path);
    Cnf cnf = read_cnf_file(path, schema).cnf;
    return std::pair{std::move(cnf), std::move(schema)};
  });
}

void cmd_incomp(const std::string& cnf_path, const std::string& schema) {
  const auto [cnf, s] = load_cnf(cnf_path, schema);
  std::cout << exact(incomprehensibility(cnf, s)) << '\n';
}

void cmd_emit(const std::string& cnf_path, const std::string& schema,
              const std::string& dialect) {
  QueryDialect d;
  if (dialect == "human")
    d = QueryDialect::Human;
  else if (dialect == "sql")
    d = QueryDialect::SqlWhere;
  else
    throw CommandError{"usage", "unknown dialect '" + dialect + "'", kUsage};
  const auto [cnf, s] = load_cnf(cnf_path, schema);
  std::cout << emit_query(cnf, s, d) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"putput: comprehensible theories from pruned probabilistic circuits"};
  app.require_subcommand(1);
  // Lets the global --threads follow the subcommand name.
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker thread bound (0 = all cores)");

  Common common;
  const auto add_data = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("--data", common.data, "Database CSV");
    if (required) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--schema", common.schema, "Schema sidecar (default: from the CSV)");
  };
  const auto add_out = [&](CLI::App* sub, bool required) {
    auto* opt = sub->add_option("-o,--out", common.out, "Output directory");
    if (required) opt->required();
  };

  MixtureConfig mc;
  const auto add_mixture = [&](CLI::App* sub) {
    sub->add_option("--k", mc.k, "Mixture components")->capture_default_str();
    sub->add_option("--em-iters", mc.em_iters, "EM iterations")->capture_default_str();
    sub->add_option("--smooth", mc.smoothing, "Dirichlet pseudo-count")->capture_default_str();
    sub->add_option("--seed", mc.seed, "Random seed")->capture_default_str();
  };

  auto* binarize = app.add_subcommand("binarize", "One-hot encode a CSV");
  add_data(binarize, true);
  add_out(binarize, true);

  std::string positives;
  auto* learn = app.add_subcommand("learn", "Learn a mixture circuit from positive rows");
  add_data(learn, true);
  learn->add_option("--positives", positives, "Positive example set")->required();
  add_mixture(learn);
  add_out(learn, true);

  std::string circuit;
  double epsilon = 1e-5;
  bool log_space = false;
  auto* elbow = app.add_subcommand("elbow", "Find the likelihood elbow threshold");
  elbow->add_option("--circuit", circuit, "Circuit file")->required();
  add_data(elbow, true);
  elbow->add_option("--epsilon", epsilon, "Window width")->capture_default_str();
  elbow->add_flag("--log-space", log_space, "Scan log-likelihoods; epsilon in nats");
  add_out(elbow, true);

  PruneArgs prune_args;
  auto* prune = app.add_subcommand("prune", "Prune a circuit with one parameter value");
  prune->add_option("--circuit", prune_args.circuit, "Circuit file")->required();
  prune->add_option("--method", prune_args.method, "threshold | top-down | flows")
      ->capture_default_str();
  prune->add_option("--alpha", prune_args.alpha, "Weight threshold");
  prune->add_option("--fraction", prune_args.fraction, "Fraction of edges to remove");
  add_data(prune, false);
  prune->add_option("--flow-set", prune_args.flow_set, "Examples the flows are computed on");
  prune->add_option("--target", prune_args.target, "Target set to score against");
  add_out(prune, true);

  PipelineConfig cfg;
  std::string method = "flows";
  std::optional<double> threshold;
  auto* run = app.add_subcommand("putput", "Learn, find the target and prune to a theory");
  add_data(run, true);
  run->add_option("--positives", positives, "Positive example set");
  run->add_option("--circuit", circuit, "Start from this circuit instead of learning");
  add_mixture(run);
  run->add_option("--method", method, "threshold | top-down | flows")->capture_default_str();
  run->add_option("--epsilon", cfg.epsilon, "Elbow window width")->capture_default_str();
  run->add_flag("--log-space", log_space, "Elbow on log-likelihoods; epsilon in nats");
  run->add_option("--threshold", threshold, "Skip the elbow and use this threshold");
  run->add_flag("--strict", cfg.strict, "Keep input-node removals only when f1 improves");
  run->add_option("--clause-budget", cfg.clause_budget, "Clause limit for CNF extraction")
      ->capture_default_str();
  add_out(run, true);

  std::string model;
  std::string target;
  auto* score = app.add_subcommand("score", "Score a circuit or theory against a target");
  score->add_option("--model", model, "Circuit (.pc/.lc) or theory (.cnf) file")->required();
  add_data(score, true);
  score->add_option("--target", target, "Target example set")->required();
  add_out(score, false);

  std::string cnf;
  auto* incomp = app.add_subcommand("incomp", "Incomprehensibility of a theory");
  incomp->add_option("--cnf", cnf, "Theory file")->required();
  incomp->add_option("--schema", common.schema, "Schema (default: the theory's reference)");

  std::string dialect = "human";
  auto* emit = app.add_subcommand("emit", "Render a theory as a query");
  emit->add_option("--cnf", cnf, "Theory file")->required();
  emit->add_option("--schema", common.schema, "Schema (default: the theory's reference)");
  emit->add_option("--dialect", dialect, "human | sql")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return kUsage;
  }

  set_max_threads(threads);
  try {
    if (*binarize) cmd_binarize(common);
    if (*learn) cmd_learn(common, positives, mc);
    if (*elbow) cmd_elbow(common, circuit, epsilon, log_space);
    if (*prune) cmd_prune(common, prune_args);
    if (*run) {
      cfg.mixture = mc;
      cfg.method = method_of(method);
      cfg.scale = log_space ? ElbowScale::Log : ElbowScale::Linear;
      cfg.threshold = threshold;
      cmd_putput(common, positives, circuit, cfg);
    }
    if (*score) cmd_score(common, model, target);
    if (*incomp) cmd_incomp(cnf, common.schema);
    if (*emit) cmd_emit(cnf, common.schema, dialect);
  } catch (const CommandError& e) {
    std::cerr << "error: " << e.stage << ": " << one_line(e.reason) << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return kInternal;
  }
  return kOk;
}
