#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "msb/balance.hpp"
#include "msb/community.hpp"
#include "msb/experiment.hpp"
#include "msb/graph.hpp"
#include "msb/model.hpp"
#include "msb/train.hpp"

using namespace msb;
using nlohmann::json;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ValueKind parse_kind(const std::string& s) {
  if (s == "rating") return ValueKind::Rating;
  if (s == "sign") return ValueKind::Sign;
  throw CLI::ValidationError("--format", "expected rating or sign");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path);
  f.precision(17);
  return f;
}

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw DataError("cannot write " + out);
  f << j.dump(2) << '\n';
}

json partition_json(const Partition& p, double q) {
  return {{"num_communities", p.num_communities}, {"modularity", q}, {"assignment", p.assignment}};
}

Partition partition_from_json(const json& j, std::size_t n) {
  try {
    auto labels = j.at("assignment").get<std::vector<std::uint32_t>>();
    if (labels.size() != n) throw DataError("partition covers " + std::to_string(labels.size()) + " nodes, graph has " + std::to_string(n));
    return Partition::from_labels(labels);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed partition: ") + e.what());
  }
}

SbMode parse_mode(const std::string& s) {
  if (s == "both") return SbMode::Both;
  if (s == "micro_only") return SbMode::MicroOnly;
  if (s == "meso_only") return SbMode::MesoOnly;
  throw CLI::ValidationError("--mode", "expected both, micro_only or meso_only");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Signed link polarity prediction with multiscale social balance"};
  app.require_subcommand(1);

  std::string input, format = "sign", out, partition_path, mode = "both", config_path, checkpoint, split_path;
  std::uint64_t seed = 0, noise_seed = 0;
  double noise = 0.0, resolution = 1.0, unlabeled_fraction = 1.0;
  std::size_t samples = 50, threads = 0;
  std::optional<std::uint64_t> swaps;
  bool reuse_partition = false;

  auto add_graph = [&](CLI::App* c) {
    c->add_option("graph", input, "Edge list (src dst value)")->required();
    c->add_option("--format", format, "rating | sign")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "Parse an edge list and write the canonical form");
  add_graph(ingest);
  ingest->add_option("-o,--out", out, "Canonical edge list output");
  std::string sidecar;
  ingest->add_option("--sidecar", sidecar, "JSON sidecar with node names and counts");

  auto* split = app.add_subcommand("split", "Seeded val/test/unlabeled split with optional label noise");
  add_graph(split);
  split->add_option("--seed", seed)->capture_default_str();
  split->add_option("--noise", noise, "Fraction of training labels to flip")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  split->add_option("--noise-seed", noise_seed)->capture_default_str();
  split->add_option("--unlabeled-fraction", unlabeled_fraction, "Keep this share of the unlabeled edges")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  split->add_option("-o,--out", out, "Manifest JSON");

  std::string csv_out;
  auto* community = app.add_subcommand("community", "Louvain communities of the unsigned projection");
  add_graph(community);
  community->add_option("--seed", seed)->capture_default_str();
  community->add_option("--resolution", resolution)->capture_default_str();
  community->add_option("-o,--out", out, "Partition JSON");
  community->add_option("--csv", csv_out, "node,community table");

  auto* census = app.add_subcommand("census", "Transitive-triad sign census");
  add_graph(census);
  census->add_option("--partition", partition_path, "Partition JSON for the mesoscale count");
  census->add_option("--csv", csv_out, "Per-pattern CSV table");

  auto* nullmodel = app.add_subcommand("nullmodel", "Z-scores against degree-preserving randomizations");
  add_graph(nullmodel);
  nullmodel->add_option("--partition", partition_path, "Partition JSON (default: Louvain with --seed)");
  nullmodel->add_option("--samples", samples)->capture_default_str();
  nullmodel->add_option("--swaps", swaps, "Swap proposals per sample (default |E| ln |E|)");
  nullmodel->add_option("--seed", seed)->capture_default_str();
  nullmodel->add_option("--threads", threads)->capture_default_str();
  nullmodel->add_flag("--reuse-partition", reuse_partition, "Do not re-detect communities on null samples");
  nullmodel->add_option("-o,--out", out);
  nullmodel->add_option("--csv", csv_out, "Per-pattern CSV table");

  auto* label = app.add_subcommand("label", "Balance-derived labels for the unlabeled edges");
  add_graph(label);
  label->add_option("--partition", partition_path, "Partition JSON")->required();
  label->add_option("--mode", mode, "both | micro_only | meso_only")->capture_default_str();
  label->add_option("-o,--out", out);

  auto* train = app.add_subcommand("train", "Train one method on a split manifest");
  std::string method = "l2rw";
  TrainConfig tc;
  std::string scorer = "concat";
  train->add_option("split", split_path, "Split manifest JSON")->required();
  train->add_option("--method", method, "supervised | l2rw | l2rw_micro | l2rw_meso | constant_weight | pl_all | "
                                        "pl_random | pl_uncertainty")
      ->capture_default_str();
  train->add_option("--seed", tc.seed)->capture_default_str();
  train->add_option("--epochs", tc.max_epochs)->capture_default_str();
  train->add_option("--eval-interval", tc.eval_interval)->capture_default_str();
  train->add_option("--patience", tc.patience)->capture_default_str();
  train->add_option("--lr", tc.learning_rate)->capture_default_str();
  train->add_option("--weight-decay", tc.weight_decay)->capture_default_str();
  train->add_option("--dim", tc.dim)->capture_default_str();
  train->add_option("--meta-alpha", tc.meta_alpha)->capture_default_str();
  train->add_option("--meta-eta", tc.meta_eta)->capture_default_str();
  train->add_option("--scorer", scorer, "concat | concat_hadamard")->capture_default_str();
  train->add_flag("--spectral-init", tc.spectral_init);
  train->add_option("--resolution", resolution)->capture_default_str();
  train->add_option("-o,--out", out, "Checkpoint JSON")->required();
  std::string history_out, trace_out;
  train->add_option("--history", history_out, "History JSON");
  train->add_option("--weight-trace", trace_out, "Per-step CSV of learned SB weights");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Test-set accuracy and Macro-F1 of a checkpoint");
  evaluate_cmd->add_option("checkpoint", checkpoint)->required();
  evaluate_cmd->add_option("split", split_path, "Split manifest JSON")->required();
  std::string on = "test";
  evaluate_cmd->add_option("--on", on, "test | val")->capture_default_str();

  auto* score = app.add_subcommand("score", "Probability that u -> v is positive");
  std::optional<NodeId> su, sv;
  std::string edges_path;
  score->add_option("checkpoint", checkpoint)->required();
  auto* u_opt = score->add_option("u", su);
  score->add_option("v", sv)->needs(u_opt);
  score->add_option("--edges", edges_path, "File of `u v` pairs; prints `u v score` per line")->excludes(u_opt);

  auto* experiment = app.add_subcommand("experiment", "Run an experiment config and persist the results");
  experiment->add_option("config", config_path)->required();
  experiment->add_option("-o,--out", out, "Run directory (default $MSB_RUN_ROOT/<digest>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    auto load = [&] { return read_edge_list(input, parse_kind(format)); };

    if (*ingest) {
      const ParsedGraph pg = load();
      if (!out.empty()) {
        std::ofstream f(out);
        if (!f) throw DataError("cannot write " + out);
        write_canonical(f, pg.graph);
      } else {
        write_canonical(std::cout, pg.graph);
      }
      if (!sidecar.empty()) emit(graph_sidecar(pg), sidecar);
      const auto& g = pg.graph;
      std::cerr << "nodes=" << g.num_nodes() << " positive=" << g.positive_edges().size()
                << " negative=" << g.negative_edges().size() << " unlabeled=" << g.unlabeled_edges().size() << '\n';
    } else if (*split) {
      const ParsedGraph pg = load();
      SplitDataset s = split_dataset(pg.graph, seed);
      s = inject_noise(std::move(s), {noise, noise_seed});
      if (unlabeled_fraction < 1.0) s = subsample_unlabeled(std::move(s), unlabeled_fraction, seed);
      emit(split_manifest(s), out);
    } else if (*community) {
      const ParsedGraph pg = load();
      const UndirectedGraph ug = unsigned_projection(pg.graph);
      const Partition p = louvain(ug, seed, resolution);
      if (!csv_out.empty()) {
        std::ofstream f = open_out(csv_out);
        f << "node,community\n";
        for (NodeId u = 0; u < p.assignment.size(); ++u) f << u << ',' << p[u] << '\n';
      }
      emit(partition_json(p, modularity(ug, p, resolution)), out);
    } else if (*census) {
      const ParsedGraph pg = load();
      std::optional<Partition> p;
      if (!partition_path.empty()) p = partition_from_json(read_json(partition_path), pg.graph.num_nodes());
      const CensusReport r = triad_census(pg.graph, p ? &*p : nullptr);
      if (!csv_out.empty()) {
        std::ofstream f = open_out(csv_out);
        f << "pattern,balanced,count\n";
        for (int i = 0; i < 8; ++i) {
          f << pattern_name(i) << ',' << (pattern_balanced(i) ? 1 : 0) << ',' << r.counts[i] << '\n';
        }
      }
      emit(to_json(r), "");
    } else if (*nullmodel) {
      const ParsedGraph pg = load();
      const Partition p = partition_path.empty()
                              ? louvain(unsigned_projection(pg.graph), seed, resolution)
                              : partition_from_json(read_json(partition_path), pg.graph.num_nodes());
      ZScoreOptions opt;
      opt.samples = samples;
      opt.swaps_per_sample = swaps;
      opt.threads = threads;
      opt.redetect_communities = !reuse_partition;
      const ZScoreReport r = zscore_report(pg.graph, p, seed, opt);
      if (!csv_out.empty()) {
        std::ofstream f = open_out(csv_out);
        f << "pattern,balanced,empirical,null_mean,null_std,z\n";
        auto row = [&](const ZScoreEntry& e) {
          f << e.name << ',' << (e.balanced ? 1 : 0) << ',' << e.empirical << ',' << e.null_mean << ','
            << e.null_std << ',';
          if (e.z) f << *e.z;
          f << '\n';
        };
        for (const ZScoreEntry& e : r.patterns) row(e);
        row(r.meso);
      }
      emit(to_json(r), out);
    } else if (*label) {
      const ParsedGraph pg = load();
      const Partition p = partition_from_json(read_json(partition_path), pg.graph.num_nodes());
      const SbMode m = parse_mode(mode);
      std::vector<EdgeSample> micro, meso;
      if (m != SbMode::MesoOnly) micro = micro_sb_label(pg.graph);
      if (m != SbMode::MicroOnly) meso = meso_sb_label(pg.graph.unlabeled_edges(), p);
      json rows = json::array();
      for (const EdgeSample& s : build_sb_set(micro, meso, m)) {
        rows.push_back({{"src", s.edge.src}, {"dst", s.edge.dst}, {"sign", s.sign}, {"source", to_string(s.provenance)}});
      }
      emit({{"count", rows.size()}, {"labels", rows}}, out);
    } else if (*train) {
      const Method m = method_from_string(method);
      tc.scorer = scorer_from_string(scorer);
      const SplitDataset s = split_from_manifest(read_json(split_path));
      std::ofstream trace;
      if (!trace_out.empty()) {
        trace.open(trace_out);
        if (!trace) throw DataError("cannot write " + trace_out);
        trace << "epoch,src,dst,provenance,sign,epsilon,epsilon_gradient,weight\n";
        trace.precision(17);
        tc.weight_trace = &trace;
      }
      TrainReport report;
      if (m == Method::Supervised) {
        report = train_supervised(s, tc);
      } else if (m == Method::PlAll || m == Method::PlRandom || m == Method::PlUncertainty) {
        const auto strategy = m == Method::PlAll      ? PseudoLabelStrategy::All
                              : m == Method::PlRandom ? PseudoLabelStrategy::Random
                                                      : PseudoLabelStrategy::Uncertainty;
        report = train_pseudo_label(s, tc, strategy).best;
      } else {
        tc.sb_mode = m == Method::L2rwMicro ? SbMode::MicroOnly : m == Method::L2rwMeso ? SbMode::MesoOnly : SbMode::Both;
        tc.weighting = m == Method::ConstantWeight ? Weighting::ConstantOne : Weighting::Learned;
        const Partition p = louvain(unsigned_projection(training_graph(s)), tc.seed, resolution);
        report = train_l2rw(s, p, tc);
      }
      for (const std::string& w : report.warnings) std::cerr << "warning: " << w << '\n';
      save_checkpoint(out, report.best_params, {{"method", method}, {"config", to_json(tc)}});
      if (!history_out.empty()) emit(history_json(report), history_out);
      std::cerr << "best epoch " << report.best_epoch << ", val Macro-F1 " << report.best_val_macro_f1 << '\n';
    } else if (*evaluate_cmd) {
      const ModelParams params = load_checkpoint(checkpoint);
      const SplitDataset s = split_from_manifest(read_json(split_path));
      if (params.num_nodes() != s.num_nodes) throw DataError("checkpoint and split disagree on the node count");
      if (on != "test" && on != "val") throw CLI::ValidationError("--on", "expected test or val");
      const EvalMetrics r = evaluate(params, on == "test" ? s.test : s.val);
      emit({{"set", on}, {"accuracy", r.accuracy}, {"macro_f1", r.macro_f1}, {"single_class", r.single_class}}, "");
    } else if (*score) {
      const ModelParams params = load_checkpoint(checkpoint);
      auto score_one = [&](NodeId u, NodeId v) {
        if (u >= params.num_nodes() || v >= params.num_nodes()) throw DataError("node id out of range");
        return score_edge(params, u, v);
      };
      if (!edges_path.empty()) {
        std::ifstream in(edges_path);
        if (!in) throw DataError("cannot open " + edges_path);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
          ++lineno;
          if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
          std::istringstream fields(line);
          NodeId u = 0, v = 0;
          if (!(fields >> u)) continue;
          if (!(fields >> v)) throw DataError(edges_path + ":" + std::to_string(lineno) + ": expected `u v`");
          std::cout << u << ' ' << v << ' ' << score_one(u, v) << '\n';
        }
      } else {
        if (!su || !sv) throw CLI::ValidationError("score", "give u and v, or --edges");
        std::cout << score_one(*su, *sv) << '\n';
      }
    } else if (*experiment) {
      const ExperimentConfig c = read_experiment_config(config_path);
      const ExperimentResult r = run_experiment(c);
      const auto dir = persist_experiment(c, r, out.empty() ? run_directory(c) : std::filesystem::path(out));
      std::cout << dir.string() << '\n';
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
