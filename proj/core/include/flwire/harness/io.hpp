#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "flwire/harness/experiment.hpp"

namespace flwire::harness {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Column layouts. Changing any of these is a format break.
inline constexpr std::string_view kRunsHeader =
    "algorithm,seed,round,loss,bound,allocation_digest";
inline constexpr std::string_view kAllocationsHeader =
    "algorithm,seed,user,selected,rb,power_w,per,delay_s,energy_j,sample_count";
inline constexpr std::string_view kSummaryHeader =
    "algorithm,seed,degenerate,rb_count,learning_rate,initial_loss,final_loss,"
    "objective,solver_iterations";
inline constexpr std::string_view kBoundHeader = "algorithm,seed,round,bound,empirical_gap";
inline constexpr std::string_view kBoundSummaryHeader =
    "algorithm,seed,runs,lipschitz_L,strong_convexity_mu,zeta1,zeta2,samples_used,A,"
    "asymptotic_gap,converges,zeta2_threshold,optimal_loss";
inline constexpr std::string_view kSweepHeader =
    "axis,value,algorithm,runs,mean_final_loss,sd_final_loss,mean_iterations,sd_iterations";

// Shortest decimal text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text);

// FNV-1a 64 over the record's allocation rows, as 16 hex digits.
std::string allocation_digest(const RunRecord& record);

struct ExportOptions {
  std::string config_json;     // echoed into the manifest when non-empty
  bool include_timing = false; // wall-clock breaks byte-identical reruns
};

// Writes runs.csv, allocations.csv, summary.csv, manifest.json and, when
// any record carries a bound study, bound.csv and bound_summary.csv.
// Returns the files written. Throws IoError with the failing path.
std::vector<std::filesystem::path> export_records(std::span<const RunRecord> records,
                                                  const std::filesystem::path& dir,
                                                  const ExportOptions& options = {});

std::vector<RunRecord> import_records(const std::filesystem::path& dir);

std::filesystem::path export_sweep(std::span<const SweepRow> rows,
                                   const std::filesystem::path& dir);

}  // namespace flwire::harness
