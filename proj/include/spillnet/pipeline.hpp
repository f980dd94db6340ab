// End-to-end orchestration: config loading/validation and the staged pipeline
// from a price panel to the full report bundle.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spillnet/bekk.hpp"

namespace spillnet::pipe {

struct FitConfig {
  int restarts = 5;
  int max_iter = 600;
  double grad_tol = 1e-5;
  int min_obs = 200;
  std::string test_style = "wald";  // or "lr"
};

struct PipelineConfig {
  std::string prices_path, grouping_path, periods_path;
  std::string price_format = "long";  // or "wide"
  std::string out_dir = ".";
  int max_gap_minutes = 5;
  double significance = 0.10;
  double betweenness_alpha = 0.5;
  double kshell_alpha = 1.0;
  double kshell_beta = 1.0;
  int emd_bins = 20;
  bool emd_signed = false;
  double major_path_quantile = 0.20;
  double dot_edge_quantile = 0.05;
  std::string group_tree = "arborescence";  // or "undirected_mst"
  int workers = 1;
  std::uint64_t seed = 20200103;
  FitConfig fit;
};

// Reads the config JSON; unknown keys are rejected.  Absent keys keep their
// defaults; input paths are resolved relative to the config file's directory.
PipelineConfig load_config(const std::string& path);

// Range checks; throws ConfigError before any work is done.
void validate_config(const PipelineConfig& cfg);

bekk::FitOptions fit_options(const PipelineConfig& cfg);

// Pipeline stages, cumulative: each runs everything before it.  `report`
// additionally emits the network DOT files.
enum class Stage { stats, fit, network, analyze, emd, paths, report };

Stage parse_stage(const std::string& name);

struct ReportBundle {
  std::vector<std::string> files;  // names relative to out_dir, emission order
};

// Runs the pipeline up to `upto` and writes the artifacts plus a manifest
// with per-file SHA-256 hashes.  On error, files already written by this
// invocation are removed.  The EMD table needs at least two periods: with
// fewer it is an error when `upto` is Stage::emd and skipped otherwise.
ReportBundle run_pipeline(const PipelineConfig& cfg, Stage upto = Stage::report);

}  // namespace spillnet::pipe
