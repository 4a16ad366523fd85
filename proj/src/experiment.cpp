#include "msb/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <sstream>
#include <thread>

#include "msb/community.hpp"
#include "msb/rng.hpp"

namespace msb {

namespace {

constexpr const char* kMethodIds[] = {"supervised",      "l2rw",   "l2rw_micro", "l2rw_meso",
                                      "constant_weight", "pl_all", "pl_random",  "pl_uncertainty"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw ConfigError(key + ": expected a number, got '" + v + "'");
  return x;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError(key + ": expected a nonnegative integer, got '" + v + "'");
  }
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": integer out of range");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split_list(v)) out.push_back(to_double(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + fmt(xs[i]);
  return s;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

bool needs_partition(Method m) {
  return m == Method::L2rw || m == Method::L2rwMicro || m == Method::L2rwMeso || m == Method::ConstantWeight;
}

struct Unit {
  double noise;
  double fraction;
  std::size_t seed;
};

std::vector<RunRow> run_unit(const ExperimentConfig& config, const SignedDigraph& graph, const Unit& unit) {
  const std::uint64_t s = unit.seed;
  SplitDataset split = split_dataset(graph, derive_seed(config.base_seed, s));
  split = inject_noise(std::move(split), {unit.noise, derive_seed(config.base_seed, 1000 + s)});
  if (unit.fraction < 1.0) split = subsample_unlabeled(std::move(split), unit.fraction, derive_seed(config.base_seed, 2000 + s));

  Partition partition;
  if (std::any_of(config.methods.begin(), config.methods.end(), needs_partition)) {
    partition = louvain(unsigned_projection(training_graph(split)), derive_seed(config.base_seed, 3000 + s),
                        config.resolution);
  }
  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.base_seed, 4000 + s);

  std::vector<RunRow> rows;
  for (Method m : config.methods) {
    TrainReport report;
    TrainConfig mc = tc;
    switch (m) {
      case Method::Supervised:
        report = train_supervised(split, mc);
        break;
      case Method::L2rw:
      case Method::L2rwMicro:
      case Method::L2rwMeso:
      case Method::ConstantWeight:
        mc.sb_mode = m == Method::L2rwMicro ? SbMode::MicroOnly : m == Method::L2rwMeso ? SbMode::MesoOnly : SbMode::Both;
        mc.weighting = m == Method::ConstantWeight ? Weighting::ConstantOne : Weighting::Learned;
        report = train_l2rw(split, partition, mc);
        break;
      case Method::PlAll:
      case Method::PlRandom:
      case Method::PlUncertainty: {
        const PseudoLabelStrategy strategy = m == Method::PlAll      ? PseudoLabelStrategy::All
                                             : m == Method::PlRandom ? PseudoLabelStrategy::Random
                                                                     : PseudoLabelStrategy::Uncertainty;
        report = train_pseudo_label(split, mc, strategy, config.pl_k, config.pl_rounds).best;
        break;
      }
    }
    const EvalMetrics test = evaluate(report.best_params, split.test);
    RunRow row;
    row.method = m;
    row.noise = unit.noise;
    row.unlabeled_fraction = unit.fraction;
    row.seed = unit.seed;
    row.accuracy = test.accuracy;
    row.macro_f1 = test.macro_f1;
    row.single_class = test.single_class;
    row.best_epoch = report.best_epoch;
    row.stop_epoch = report.stop_epoch;
    row.sb_size = report.sb_set_size;
    row.history = history_json(report);
    if (config.save_checkpoints) row.checkpoint = std::move(report.best_params);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t method_rank(const std::vector<Method>& methods, Method m) {
  return static_cast<std::size_t>(std::find(methods.begin(), methods.end(), m) - methods.begin());
}

}  // namespace

const char* to_string(Method m) { return kMethodIds[static_cast<int>(m)]; }

Method method_from_string(const std::string& id) {
  for (int i = 0; i < 8; ++i) {
    if (id == kMethodIds[i]) return static_cast<Method>(i);
  }
  throw ConfigError("unknown method '" + id + "'");
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream o;
  std::string ms;
  for (std::size_t i = 0; i < methods.size(); ++i) ms += (i ? "," : "") + std::string(to_string(methods[i]));
  o << "base_seed = " << base_seed << '\n'
    << "clean_fraction = " << fmt(train.clean_batch_fraction) << '\n'
    << "compare = " << compare << '\n'
    << "dataset = " << dataset << '\n'
    << "dim = " << train.dim << '\n'
    << "epochs = " << train.max_epochs << '\n'
    << "epsilon_init = " << (train.epsilon_init == EpsilonInit::Uniform ? "uniform" : "zero") << '\n'
    << "eval_interval = " << train.eval_interval << '\n'
    << "format = " << (format == ValueKind::Rating ? "rating" : "sign") << '\n'
    << "init_scale = " << fmt(train.init_scale) << '\n'
    << "lr = " << fmt(train.learning_rate) << '\n'
    << "meta_alpha = " << fmt(train.meta_alpha) << '\n'
    << "meta_eta = " << fmt(train.meta_eta) << '\n'
    << "methods = " << ms << '\n'
    << "noise = " << fmt_list(noise) << '\n'
    << "patience = " << train.patience << '\n'
    << "pl_k = " << pl_k << '\n'
    << "pl_rounds = " << pl_rounds << '\n';
  if (dataset == "planted") {
    o << "planted.blocks = " << planted.num_blocks << '\n'
      << "planted.nodes = " << planted.num_nodes << '\n'
      << "planted.p_inter = " << fmt(planted.p_inter) << '\n'
      << "planted.p_intra = " << fmt(planted.p_intra) << '\n'
      << "planted.seed = " << planted.seed << '\n'
      << "planted.violations = " << fmt(planted.violation_fraction) << '\n';
  }
  o << "resolution = " << fmt(resolution) << '\n'
    << "sb_ratio = " << fmt(train.sb_ratio) << '\n'
    << "scorer = " << to_string(train.scorer) << '\n'
    << "seeds = " << seeds << '\n'
    << "spectral_init = " << (train.spectral_init ? "true" : "false") << '\n'
    << "unlabeled_fractions = " << fmt_list(unlabeled_fractions) << '\n'
    << "weight_decay = " << fmt(train.weight_decay) << '\n';
  return o.str();
}

std::string ExperimentConfig::digest() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical())));
  return buf;
}

ExperimentConfig parse_experiment_config(std::istream& in) {
  ExperimentConfig c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    TrainConfig& t = c.train;

    if (key == "dataset") {
      c.dataset = v;
    } else if (key == "format") {
      if (v == "rating") c.format = ValueKind::Rating;
      else if (v == "sign") c.format = ValueKind::Sign;
      else throw ConfigError("format: expected rating or sign");
    } else if (key == "methods") {
      c.methods.clear();
      for (const std::string& id : split_list(v)) c.methods.push_back(method_from_string(id));
      if (c.methods.empty()) throw ConfigError("methods: empty list");
    } else if (key == "noise") {
      c.noise = to_doubles(key, v);
    } else if (key == "seeds") {
      c.seeds = to_uint(key, v);
    } else if (key == "base_seed") {
      c.base_seed = to_uint(key, v);
    } else if (key == "unlabeled_fractions") {
      c.unlabeled_fractions = to_doubles(key, v);
    } else if (key == "compare") {
      c.compare = v;
    } else if (key == "epochs") {
      t.max_epochs = to_uint(key, v);
    } else if (key == "eval_interval") {
      t.eval_interval = to_uint(key, v);
    } else if (key == "patience") {
      t.patience = to_uint(key, v);
    } else if (key == "lr") {
      t.learning_rate = to_double(key, v);
    } else if (key == "weight_decay") {
      t.weight_decay = to_double(key, v);
    } else if (key == "dim") {
      t.dim = to_uint(key, v);
    } else if (key == "clean_fraction") {
      t.clean_batch_fraction = to_double(key, v);
    } else if (key == "sb_ratio") {
      t.sb_ratio = to_double(key, v);
    } else if (key == "meta_alpha") {
      t.meta_alpha = to_double(key, v);
    } else if (key == "meta_eta") {
      t.meta_eta = to_double(key, v);
    } else if (key == "epsilon_init") {
      if (v == "uniform") t.epsilon_init = EpsilonInit::Uniform;
      else if (v == "zero") t.epsilon_init = EpsilonInit::Zero;
      else throw ConfigError("epsilon_init: expected uniform or zero");
    } else if (key == "scorer") {
      try {
        t.scorer = scorer_from_string(v);
      } catch (const std::exception& e) {
        throw ConfigError(std::string("scorer: ") + e.what());
      }
    } else if (key == "spectral_init") {
      t.spectral_init = to_bool(key, v);
    } else if (key == "init_scale") {
      t.init_scale = to_double(key, v);
    } else if (key == "planted.nodes") {
      c.planted.num_nodes = to_uint(key, v);
    } else if (key == "planted.blocks") {
      c.planted.num_blocks = to_uint(key, v);
    } else if (key == "planted.p_intra") {
      c.planted.p_intra = to_double(key, v);
    } else if (key == "planted.p_inter") {
      c.planted.p_inter = to_double(key, v);
    } else if (key == "planted.violations") {
      c.planted.violation_fraction = to_double(key, v);
    } else if (key == "planted.seed") {
      c.planted.seed = to_uint(key, v);
    } else if (key == "pl_k") {
      c.pl_k = to_uint(key, v);
    } else if (key == "pl_rounds") {
      c.pl_rounds = to_uint(key, v);
    } else if (key == "resolution") {
      c.resolution = to_double(key, v);
    } else if (key == "threads") {
      c.threads = to_uint(key, v);
    } else if (key == "save_checkpoints") {
      c.save_checkpoints = to_bool(key, v);
    } else {
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  if (c.seeds == 0) throw ConfigError("seeds must be positive");
  for (double p : c.noise) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise levels must lie in [0, 1]");
  }
  for (double f : c.unlabeled_fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw ConfigError("unlabeled fractions must lie in (0, 1]");
  }
  if (c.compare != "best_competitor") {
    const Method base = method_from_string(c.compare);
    if (std::find(c.methods.begin(), c.methods.end(), base) == c.methods.end()) {
      throw ConfigError("compare baseline '" + c.compare + "' is not among the methods");
    }
  }
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  return parse_experiment_config(in);
}

ExperimentResult run_experiment(const ExperimentConfig& config, const SignedDigraph& graph) {
  std::vector<Unit> units;
  for (double p : config.noise) {
    for (double f : config.unlabeled_fractions) {
      for (std::size_t s = 0; s < config.seeds; ++s) units.push_back({p, f, s});
    }
  }
  std::vector<std::vector<RunRow>> results(units.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      try {
        results[i] = run_unit(config, graph, units[i]);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = units.size();
      }
    }
  };
  std::size_t n_threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, units.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult out;
  out.dataset = config.dataset;
  for (auto& r : results) {
    for (RunRow& row : r) out.rows.push_back(std::move(row));
  }
  out.cells = summarize(out.rows, config.methods, config.compare);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  if (config.dataset == "planted") return run_experiment(config, planted_signed_graph(config.planted).graph);
  ParsedGraph parsed = read_edge_list(config.dataset, config.format);
  return run_experiment(config, parsed.graph);
}

std::vector<CellSummary> summarize(const std::vector<RunRow>& rows, const std::vector<Method>& methods,
                                   const std::string& compare) {
  std::vector<std::pair<double, double>> keys;
  for (const RunRow& r : rows) {
    const std::pair<double, double> k{r.noise, r.unlabeled_fraction};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  std::vector<CellSummary> cells;
  for (const auto& [noise, fraction] : keys) {
    CellSummary cell;
    cell.noise = noise;
    cell.unlabeled_fraction = fraction;
    std::vector<std::vector<double>> f1(methods.size()), acc(methods.size());
    std::vector<std::vector<std::size_t>> seed_of(methods.size());
    for (const RunRow& r : rows) {
      if (r.noise != noise || r.unlabeled_fraction != fraction) continue;
      const std::size_t m = method_rank(methods, r.method);
      if (m == methods.size()) continue;
      f1[m].push_back(r.macro_f1);
      acc[m].push_back(r.accuracy);
      seed_of[m].push_back(r.seed);
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      MethodSummary s;
      s.method = methods[m];
      s.macro_f1 = mean_std(f1[m]);
      s.accuracy = mean_std(acc[m]);
      cell.methods.push_back(s);
    }
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::optional<std::size_t> other;
      if (compare == "best_competitor") {
        for (std::size_t o = 0; o < methods.size(); ++o) {
          if (o == m) continue;
          if (!other || cell.methods[o].macro_f1.mean > cell.methods[*other].macro_f1.mean) other = o;
        }
      } else {
        const std::size_t base = method_rank(methods, method_from_string(compare));
        if (base != m && base < methods.size()) other = base;
      }
      if (!other || seed_of[m] != seed_of[*other] || f1[m].size() < 2) continue;
      MethodSummary& s = cell.methods[m];
      s.compared_with = methods[*other];
      s.test = paired_t_test(f1[m], f1[*other]);
      s.stars = significance_stars(s.test->p);
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

void write_rows_csv(std::ostream& out, const std::vector<RunRow>& rows) {
  out << "method,noise,unlabeled_fraction,seed,accuracy,macro_f1,single_class,best_epoch,stop_epoch,sb_size\n";
  for (const RunRow& r : rows) {
    out << to_string(r.method) << ',' << fmt(r.noise) << ',' << fmt(r.unlabeled_fraction) << ',' << r.seed << ','
        << fmt(r.accuracy) << ',' << fmt(r.macro_f1) << ',' << (r.single_class ? 1 : 0) << ',' << r.best_epoch << ','
        << r.stop_epoch << ',' << r.sb_size << '\n';
  }
}

nlohmann::json aggregate_json(const ExperimentResult& result) {
  nlohmann::json cells = nlohmann::json::array();
  for (const CellSummary& c : result.cells) {
    nlohmann::json ms = nlohmann::json::array();
    for (const MethodSummary& s : c.methods) {
      nlohmann::json j{{"method", to_string(s.method)},
                       {"macro_f1_mean", s.macro_f1.mean},
                       {"macro_f1_std", s.macro_f1.std},
                       {"accuracy_mean", s.accuracy.mean},
                       {"accuracy_std", s.accuracy.std},
                       {"stars", s.stars}};
      if (s.test) {
        j["compared_with"] = to_string(*s.compared_with);
        j["t"] = std::isfinite(s.test->t) ? nlohmann::json(s.test->t) : nlohmann::json(s.test->t > 0 ? "inf" : "-inf");
        j["p"] = s.test->p;
        j["df"] = s.test->df;
      }
      ms.push_back(std::move(j));
    }
    cells.push_back({{"noise", c.noise}, {"unlabeled_fraction", c.unlabeled_fraction}, {"methods", ms}});
  }
  std::size_t single = 0;
  for (const RunRow& r : result.rows) single += r.single_class ? 1 : 0;
  return {{"dataset", result.dataset}, {"runs", result.rows.size()}, {"single_class_runs", single}, {"cells", cells}};
}

std::filesystem::path run_directory(const ExperimentConfig& config) {
  const char* root = std::getenv("MSB_RUN_ROOT");
  return std::filesystem::path(root && *root ? root : "runs") / config.digest();
}

std::filesystem::path persist_experiment(const ExperimentConfig& config, const ExperimentResult& result,
                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(dir / "config.txt");
    f << config.canonical();
  }
  {
    auto f = open(dir / "results.csv");
    write_rows_csv(f, result.rows);
  }
  {
    auto f = open(dir / "aggregate.json");
    f << aggregate_json(result).dump(2) << '\n';
  }
  for (const RunRow& r : result.rows) {
    const std::filesystem::path seed_dir = dir / ("seed_" + std::to_string(r.seed));
    std::filesystem::create_directories(seed_dir);
    const std::string stem =
        std::string(to_string(r.method)) + "_noise" + fmt(r.noise) + "_u" + fmt(r.unlabeled_fraction);
    {
      auto f = open(seed_dir / (stem + ".history.json"));
      f << r.history.dump(2) << '\n';
    }
    if (r.checkpoint) save_checkpoint(seed_dir / (stem + ".checkpoint.json"), *r.checkpoint, {{"method", to_string(r.method)}});
  }
  return dir;
}

}  // namespace msb
