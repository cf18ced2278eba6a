#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nsrl/config.hpp"
#include "nsrl/detectors.hpp"
#include "nsrl/error.hpp"
#include "nsrl/report.hpp"

namespace fs = std::filesystem;
using namespace nsrl;

namespace {

constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

fs::path default_out_dir() {
  const char* env = std::getenv("NSRL_OUT_DIR");
  return env && *env ? fs::path(env) : fs::path("results");
}

fs::path preset_dir() {
  const char* env = std::getenv("NSRL_CONFIG_DIR");
  return env && *env ? fs::path(env) : fs::path(NSRL_DEFAULT_CONFIG_DIR);
}

void write_file(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << body;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

MetricsReport run_and_write(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const MetricsReport report = run_experiment(cfg, cfg.seed);
  fs::create_directories(out_dir);
  write_file(out_dir / (cfg.name + ".csv"), report_csv(report));
  write_file(out_dir / (cfg.name + ".json"), report_json(report));
  return report;
}

/// Rectangular numeric CSV; an optional non-numeric header line is skipped.
Eigen::MatrixXd read_numeric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read data file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " columns");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ConfigError(path.string() + ": no data rows");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  }
  return m;
}

/// Raw rows are mapped to the open simplex by a per-column min-max shift
/// before the Dirichlet detector sees them.
Eigen::MatrixXd to_compositions(const Eigen::MatrixXd& data) {
  Eigen::MatrixXd out(data.rows(), data.cols() + 1);
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double lo = data.col(j).minCoeff();
    const double hi = data.col(j).maxCoeff();
    const double span = hi > lo ? hi - lo : 1.0;
    out.col(j) = ((data.col(j).array() - lo) / span + 0.5).matrix();
  }
  out.col(data.cols()).setConstant(0.5);
  for (Eigen::Index i = 0; i < out.rows(); ++i) out.row(i) /= out.row(i).sum();
  return out;
}

TableLayout layout_of(int id) {
  switch (id) {
    case 1:
      return TableLayout::detection_delay;
    case 2:
    case 3:
      return TableLayout::precision_recall;
    case 4:
      return TableLayout::reward;
    case 5:
      return TableLayout::regret;
    default:
      return TableLayout::cost;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Changepoint-aware reinforcement learning experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment config and write CSV + JSON reports");
  std::string config_path;
  std::string run_out;
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", run_out, "Output directory (default: $NSRL_OUT_DIR or ./results)");

  auto* detect = app.add_subcommand("detect", "Detect changepoints in a numeric CSV");
  std::string data_path;
  std::string method = "odcp";
  int permutations = 199;
  double alpha = 0.05;
  int window = 1;
  std::uint64_t seed = 1;
  detect->add_option("data", data_path, "CSV with one observation per row")->required();
  detect->add_option("--method", method, "odcp or ecp");
  detect->add_option("--permutations", permutations, "Permutations per significance test");
  detect->add_option("--alpha", alpha, "Significance level");
  detect->add_option("--window", window, "Rows averaged into one sample (non-overlapping)");
  detect->add_option("--seed", seed, "Permutation seed");

  auto* tables = app.add_subcommand("tables", "Reproduce a preset results table");
  int table_id = 0;
  std::optional<std::uint64_t> table_seed;
  std::optional<int> table_runs;
  std::string table_out;
  tables->add_option("id", table_id, "Table id (1-7)")->required();
  tables->add_option("--seed", table_seed, "Master seed");
  tables->add_option("--runs", table_runs, "Monte Carlo runs");
  tables->add_option("--out", table_out, "Output directory (default: $NSRL_OUT_DIR or ./results)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kConfigFailure;
  }

  try {
    if (*run) {
      const ExperimentConfig cfg = load_experiment_config(config_path);
      const fs::path out = run_out.empty() ? default_out_dir() : fs::path(run_out);
      const MetricsReport report = run_and_write(cfg, out);
      std::cout << "wrote " << (out / (cfg.name + ".csv")).string() << " and "
                << (out / (cfg.name + ".json")).string() << "\n";
    } else if (*detect) {
      const DetectorMethod m = parse_detector_method(method);
      DetectorConfig cfg;
      cfg.n_permutations = permutations;
      cfg.significance = alpha;
      cfg.scale_permutations = false;
      cfg.validate();
      if (window < 1) throw ConfigError("--window must be >= 1");
      const Eigen::MatrixXd raw = read_numeric_csv(data_path);
      const Eigen::Index n = raw.rows() / window;
      if (n < 2 * cfg.min_segment) throw ConfigError("too few rows for the requested window");
      Eigen::MatrixXd samples(n, raw.cols());
      for (Eigen::Index i = 0; i < n; ++i) samples.row(i) = raw.middleRows(i * window, window).colwise().mean();
      Rng rng(seed);
      const DetectionReport report =
          m == DetectorMethod::odcp ? odcp_multiple(to_compositions(samples), cfg, rng) : ecp_detect(samples, cfg, rng);
      for (const auto& d : report.details) std::cout << d.location * window << " " << d.p_value << "\n";
    } else if (*tables) {
      if (table_id < 1 || table_id > 7) throw ConfigError("unknown table id " + std::to_string(table_id));
      ExperimentConfig cfg = load_experiment_config(preset_dir() / ("table" + std::to_string(table_id) + ".json"));
      if (table_seed) cfg.seed = *table_seed;
      if (table_runs) cfg.runs = *table_runs;
      cfg.validate();
      const fs::path out = table_out.empty() ? default_out_dir() : fs::path(table_out);
      const MetricsReport report = run_and_write(cfg, out);
      const std::string text = format_table(report, layout_of(table_id));
      write_file(out / (cfg.name + ".txt"), text);
      std::cout << text;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
  return 0;
}
