/*
 * Copyright (c) 2026, The corrfilt Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "corrfilt/corrfilt.hpp"

namespace fs = std::filesystem;
using namespace corrfilt;

namespace {

struct Options {
  std::string input;
  bool correlation_input = false;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  std::string method = "alca";
  std::string kind = "mst";
  std::size_t replicas = 0;
  double threshold = 0.70;
  std::optional<double> mu;
  std::string model;
  std::size_t t_len = 0;
  bool student = false;
  std::string filters = "slca,alca,rmt";
  std::string alphas;
  std::string kl_mode = "auto";
  std::optional<double> student_mu;
  std::optional<double> student_mu_sd;
  std::size_t student_sims = 100;
  std::size_t student_replicas = 100;
};

/// Collects artifacts and writes them plus the manifest into the output
/// directory. Only the manifest carries a timestamp.
class Artifacts {
 public:
  Artifacts(fs::path dir, std::string command, std::uint64_t seed, std::string config)
      : dir_(std::move(dir)), command_(std::move(command)), seed_(seed), config_(std::move(config)) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& kind, const std::string& bytes) {
    const fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + p.string());
    out << bytes;
    entries_.push_back({{"path", name}, {"kind", kind}, {"bytes", bytes.size()}, {"fnv1a", hex64(fnv1a(bytes))}});
  }

  void finish() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    Json manifest = {{"tool", "corrfilt"}, {"command", command_},  {"seed", seed_},
                     {"config", config_},  {"config_hash", hex64(fnv1a(config_))}, {"timestamp", stamp},
                     {"artifacts", entries_}};
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::string command_;
  std::uint64_t seed_;
  std::string config_;
  std::vector<Json> entries_;
};

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Linkage parse_linkage(const std::string& s) {
  const std::string m = lower(s);
  if (m == "alca" || m == "average") return Linkage::Average;
  if (m == "slca" || m == "single") return Linkage::Single;
  throw Error(ErrorKind::ConfigError, "unknown clustering method '" + s + "' (alca, slca)");
}

GraphKind parse_kind(const std::string& s) {
  const std::string k = lower(s);
  if (k == "mst") return GraphKind::MST;
  if (k == "almst") return GraphKind::ALMST;
  if (k == "pmfg") return GraphKind::PMFG;
  throw Error(ErrorKind::ConfigError, "unknown graph kind '" + s + "' (mst, almst, pmfg)");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double parse_number(const std::string& s, const std::string& what) {
  const auto v = detail::parse_double(s);
  if (!v) throw Error(ErrorKind::ConfigError, what + ": '" + s + "' is not a number");
  return *v;
}

/// "a:b:step" or a comma list.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<double> grid;
  if (spec.empty()) return grid;
  const auto parts = split(spec, ':');
  if (spec.find(':') != std::string::npos) {
    if (parts.size() != 3) throw Error(ErrorKind::ConfigError, "alpha range must be start:stop:step");
    const double a = parse_number(parts[0], "alpha start");
    const double b = parse_number(parts[1], "alpha stop");
    const double step = parse_number(parts[2], "alpha step");
    if (!(step > 0.0) || b < a) throw Error(ErrorKind::ConfigError, "alpha range needs start <= stop and step > 0");
    const auto count = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) grid.push_back(std::min(a + static_cast<double>(k) * step, b));
  } else {
    for (const auto& p : split(spec, ',')) grid.push_back(parse_number(p, "alpha"));
  }
  for (double a : grid) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error(ErrorKind::ConfigError, "alpha " + std::to_string(a) + " outside [0, 1]");
  }
  return grid;
}

std::string canonical_config(const std::string& command, const CLI::App& app) {
  std::map<std::string, std::string> items;
  const std::vector<const CLI::App*> scopes{&app, app.get_subcommand(command)};
  for (const CLI::App* a : scopes) {
    for (const CLI::Option* opt : a->get_options()) {
      if (opt->get_name() == "--help" || opt->get_name() == "--out" || opt->count() == 0) continue;
      std::string v;
      for (const auto& r : opt->results()) v += r + ";";
      items[opt->get_name()] = v;
    }
  }
  std::string out = command;
  for (const auto& [k, v] : items) out += " " + k + "=" + v;
  return out;
}

CorrelationMatrix load_correlation(const Options& o, std::optional<DataMatrix>& data) {
  if (o.input.empty()) throw Error(ErrorKind::ConfigError, "--input is required");
  if (o.correlation_input) return read_correlation_csv(o.input);
  data = read_data_csv(o.input);
  data->validate();
  return pearson_correlation(*data);
}

DataMatrix load_data(const Options& o, const std::string& command) {
  if (o.correlation_input) throw Error(ErrorKind::ConfigError, command + " needs a data panel, not a correlation matrix");
  if (o.input.empty()) throw Error(ErrorKind::ConfigError, "--input is required");
  DataMatrix d = read_data_csv(o.input);
  d.validate();
  return d;
}

std::string lowercase_name(Linkage m) { return lower(std::string(to_string(m))); }

void run_correlate(const Options& o, Artifacts& out) {
  std::optional<DataMatrix> data;
  out.write("correlation.csv", "correlation_csv", correlation_csv(load_correlation(o, data)));
}

void run_cluster(const Options& o, Artifacts& out) {
  std::optional<DataMatrix> data;
  const CorrelationMatrix c = load_correlation(o, data);
  const Linkage m = parse_linkage(o.method);
  ClusteringResult r = cluster(c, m);
  const std::string tag = lowercase_name(m);
  out.write("filtered_" + tag + ".csv", "filtered_csv", correlation_csv(r.filtered.values));
  Dendrogram tree = r.tree;
  if (o.replicas > 0) {
    if (!data) throw Error(ErrorKind::ConfigError, "bootstrap values need a data panel input");
    const NodeSupport s = node_bootstrap_values(*data, m, {o.replicas, o.seed, o.threshold});
    tree = tree.with_support(s.values);
  }
  out.write("tree_" + tag + ".nwk", "newick", to_newick(tree) + "\n");
  out.write("tree_" + tag + ".json", "dendrogram_json", dendrogram_json(tree).dump(2) + "\n");
}

void run_network(const Options& o, Artifacts& out) {
  std::optional<DataMatrix> data;
  const CorrelationMatrix c = load_correlation(o, data);
  const GraphKind kind = parse_kind(o.kind);
  const std::string tag = lower(std::string(to_string(kind)));
  CorrelationGraph g = build_graph(c, kind);
  if (o.replicas > 0) {
    if (!data) throw Error(ErrorKind::ConfigError, "bootstrap values need a data panel input");
    g = graph_with_support(*data, kind, {o.replicas, o.seed, o.threshold});
  }
  if (kind == GraphKind::MST) out.write("filtered_mst.csv", "filtered_csv", correlation_csv(mst(c).filtered.values));
  if (kind == GraphKind::ALMST) out.write("filtered_almst.csv", "filtered_csv", correlation_csv(almst(c).filtered.values));
  out.write("graph_" + tag + ".json", "graph_json", graph_json(g).dump(2) + "\n");
  out.write("graph_" + tag + ".dot", "graph_dot", graph_dot(g));
}

void run_bootstrap(const Options& o, Artifacts& out) {
  const DataMatrix data = load_data(o, "bootstrap");
  const Linkage m = parse_linkage(o.method);
  const BootstrapConfig cfg{o.replicas == 0 ? 1000 : o.replicas, o.seed, o.threshold};
  const ClusteringResult r = cluster(pearson_correlation(data), m);
  const NodeSupport s = node_bootstrap_values(data, m, cfg);
  const std::string tag = lowercase_name(m);
  const Dendrogram full = r.tree.with_support(s.values);
  const Dendrogram reduced = reduce_dendrogram(r.tree, s, cfg.threshold);
  out.write("tree_" + tag + "_bootstrap.nwk", "newick", to_newick(full) + "\n");
  out.write("tree_" + tag + "_reduced.nwk", "newick", to_newick(reduced) + "\n");
  out.write("tree_" + tag + "_reduced.json", "dendrogram_json", dendrogram_json(reduced).dump(2) + "\n");
  out.write("filtered_" + tag + "_reduced.csv", "filtered_csv", correlation_csv(filtered_from_dendrogram(reduced).values));
}

void run_hnfm(const Options& o, Artifacts& out) {
  std::optional<DataMatrix> data;
  const CorrelationMatrix c = load_correlation(o, data);
  const Linkage m = parse_linkage(o.method);
  Dendrogram tree = cluster(c, m).tree;
  if (o.replicas > 0) {
    if (!data) throw Error(ErrorKind::ConfigError, "bootstrap reduction needs a data panel input");
    const NodeSupport s = node_bootstrap_values(*data, m, {o.replicas, o.seed, o.threshold});
    tree = reduce_dendrogram(tree, s, o.threshold);
  }
  HnfmSpec spec = hnfm_from_dendrogram(tree);
  if (o.mu) spec.mu = *o.mu;
  spec.validate();
  out.write("hnfm.json", "hnfm_json", hnfm_json(spec).dump(2) + "\n");
  out.write("model_correlation.csv", "correlation_csv", correlation_csv(model_correlation(spec)));
}

void run_simulate(const Options& o, Artifacts& out) {
  if (o.model.empty()) throw Error(ErrorKind::ConfigError, "--model is required");
  if (o.t_len < 2) throw Error(ErrorKind::ConfigError, "--records must be at least 2");
  std::ifstream in = open_input(o.model);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, o.model + ": " + e.what());
  }
  HnfmSpec spec = hnfm_from_json(j);
  if (o.mu) spec.mu = *o.mu;
  const DataMatrix d = o.student ? simulate_student(spec, o.t_len, o.seed) : simulate_gaussian(spec, o.t_len, o.seed);
  out.write("simulated.csv", "data_csv", data_csv(d));
}

void run_evaluate(const Options& o, Artifacts& out) {
  const DataMatrix data = load_data(o, "evaluate");
  std::vector<Filter> filters;
  std::vector<double> grid = parse_grid(o.alphas);
  bool shrink_requested = false;
  for (const auto& name : split(lower(o.filters), ',')) {
    if (name == "slca") filters.push_back(hierarchical_filter(Linkage::Single));
    else if (name == "alca") filters.push_back(hierarchical_filter(Linkage::Average));
    else if (name == "rmt") filters.push_back(rmt_filter());
    else if (name == "identity") filters.push_back(identity_filter());
    else if (name == "shrink") shrink_requested = true;
    else throw Error(ErrorKind::ConfigError, "unknown filter '" + name + "' (slca, alca, rmt, shrink, identity)");
  }
  if (shrink_requested && grid.empty()) grid = parse_grid("0:1:0.05");
  if (!shrink_requested) grid.clear();

  KlMode mode = KlMode::Gaussian;
  const std::string km = lower(o.kl_mode);
  if (km == "auto") mode = choose_kl_mode(data);
  else if (km == "gaussian") mode = KlMode::Gaussian;
  else if (km == "student" || km == "student_small_mu") mode = KlMode::StudentSmallMu;
  else throw Error(ErrorKind::ConfigError, "unknown KL mode '" + o.kl_mode + "' (auto, gaussian, student)");

  EvaluationOptions opt;
  opt.student_mu = o.student_mu;
  opt.student = {o.student_sims, o.student_replicas, o.seed, o.student_mu_sd};
  const BootstrapConfig cfg{o.replicas == 0 ? 100 : o.replicas, o.seed, o.threshold};
  const EvaluationReport report = evaluate_with_sweep(data, filters, grid, cfg, mode, opt);
  out.write("report.json", "report_json", report_json(report).dump(2) + "\n");
  out.write("report.csv", "report_csv", report_csv(report));
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Input: return 2;
    case ErrorCategory::Numeric: return 3;
    case ErrorCategory::Config: return 4;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical filtering of correlation matrices"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-i,--input", o.input, "data CSV (header of labels, one record per row)");
  app.add_flag("--correlation", o.correlation_input, "input is a correlation matrix CSV");
  app.add_option("-o,--out", o.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "master random seed")->capture_default_str();

  auto* correlate = app.add_subcommand("correlate", "Pearson correlation matrix");
  auto* clus = app.add_subcommand("cluster", "hierarchical clustering and filtered matrix");
  clus->add_option("-m,--method", o.method, "alca or slca")->capture_default_str();
  clus->add_option("-r,--replicas", o.replicas, "bootstrap replicas for node values (0: none)");
  auto* net = app.add_subcommand("network", "MST, ALMST or PMFG");
  net->add_option("-k,--kind", o.kind, "mst, almst or pmfg")->capture_default_str();
  net->add_option("-r,--replicas", o.replicas, "bootstrap replicas for link values (0: none)");
  auto* boot = app.add_subcommand("bootstrap", "node bootstrap values and reduced tree");
  boot->add_option("-m,--method", o.method, "alca or slca")->capture_default_str();
  boot->add_option("-r,--replicas", o.replicas, "bootstrap replicas (default 1000)");
  boot->add_option("-b,--threshold", o.threshold, "reduction threshold")->capture_default_str();
  auto* hn = app.add_subcommand("hnfm", "nested factor model of a tree");
  hn->add_option("-m,--method", o.method, "alca or slca")->capture_default_str();
  hn->add_option("-r,--replicas", o.replicas, "reduce the tree with this many bootstrap replicas first");
  hn->add_option("-b,--threshold", o.threshold, "reduction threshold")->capture_default_str();
  hn->add_option("--mu", o.mu, "Student degrees of freedom stored with the model");
  auto* sim = app.add_subcommand("simulate", "simulate records from a factor model JSON");
  sim->add_option("--model", o.model, "factor model JSON written by hnfm")->required();
  sim->add_option("-t,--records", o.t_len, "number of records")->required();
  sim->add_flag("--student", o.student, "Student-t rows (needs mu)");
  sim->add_option("--mu", o.mu, "degrees of freedom (overrides the model)");
  auto* ev = app.add_subcommand("evaluate", "stability-information plane");
  ev->add_option("-f,--filters", o.filters, "comma list of slca, alca, rmt, shrink, identity")->capture_default_str();
  ev->add_option("-a,--alphas", o.alphas, "shrinkage grid, start:stop:step or comma list (default 0:1:0.05)");
  ev->add_option("-r,--replicas", o.replicas, "bootstrap replicas (default 100)");
  ev->add_option("--kl-mode", o.kl_mode, "auto, gaussian or student")->capture_default_str();
  ev->add_option("--student-mu", o.student_mu, "reference point from the Student simulation protocol at this mu");
  ev->add_option("--student-mu-sd", o.student_mu_sd, "error bar from reruns at mu -/+ this value");
  ev->add_option("--student-simulations", o.student_sims, "simulated panels")->capture_default_str();
  ev->add_option("--student-replicas", o.student_replicas, "replicas per simulated panel")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 4;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    Artifacts out(o.out_dir, command, o.seed, canonical_config(command, app));
    if (sub == correlate) run_correlate(o, out);
    else if (sub == clus) run_cluster(o, out);
    else if (sub == net) run_network(o, out);
    else if (sub == boot) run_bootstrap(o, out);
    else if (sub == hn) run_hnfm(o, out);
    else if (sub == sim) run_simulate(o, out);
    else run_evaluate(o, out);
    out.finish();
  } catch (const Error& e) {
    std::cerr << "corrfilt " << command << ": " << e.what() << '\n';
    return exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "corrfilt " << command << ": " << e.what() << '\n';
    return 4;
  }
  return 0;
}
