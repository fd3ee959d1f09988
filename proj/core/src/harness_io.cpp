#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "flwire/harness/io.hpp"
#include "flwire/version.hpp"

namespace flwire::harness {
namespace {

namespace fs = std::filesystem;
using Key = std::pair<std::string, std::uint64_t>;

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError(path.string() + ": write failed");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

// Data rows of a CSV file after checking its header.
std::vector<std::vector<std::string_view>> read_rows(const fs::path& path,
                                                     const std::string& text,
                                                     std::string_view header) {
  std::vector<std::vector<std::string_view>> rows;
  std::string_view rest(text);
  bool first = true;
  const std::size_t columns = split(header).size();
  std::size_t line_no = 0;
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (first) {
      if (line != header) throw IoError(path.string() + ": unexpected header");
      first = false;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != columns) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(columns) + " columns");
    }
    rows.push_back(std::move(cells));
  }
  if (first) throw IoError(path.string() + ": empty file");
  return rows;
}

template <typename Int>
Int parse_int(std::string_view s, const fs::path& path) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw IoError(path.string() + ": bad integer '" + std::string(s) + "'");
  }
  return v;
}

double parse_number(std::string_view s, const fs::path& path) {
  try {
    return parse_double(s);
  } catch (const std::invalid_argument&) {
    throw IoError(path.string() + ": bad number '" + std::string(s) + "'");
  }
}

Algorithm parse_algo(std::string_view s, const fs::path& path) {
  const auto a = parse_algorithm(s);
  if (!a) throw IoError(path.string() + ": unknown algorithm '" + std::string(s) + "'");
  return *a;
}

std::string allocation_rows(const RunRecord& r) {
  std::string out;
  const auto& d = r.decision;
  const std::string prefix = std::string(to_string(r.algorithm)) + "," + std::to_string(r.seed) + ",";
  for (std::size_t i = 0; i < d.user_count(); ++i) {
    out += prefix;
    out += std::to_string(i) + "," + (d.selected(i) ? "1" : "0") + "," + std::to_string(d.rb[i]) +
           "," + format_double(d.power_w[i]) + "," + format_double(d.per[i]) + "," +
           format_double(d.delay_s[i]) + "," + format_double(d.energy_j[i]) + "," +
           std::to_string(d.sample_counts[i]) + "\n";
  }
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) throw std::logic_error("format_double: buffer too small");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::string allocation_digest(const RunRecord& record) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : allocation_rows(record)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return hex64(h);
}

std::vector<fs::path> export_records(std::span<const RunRecord> records, const fs::path& dir,
                                     const ExportOptions& options) {
  if (records.empty()) throw IoError(dir.string() + ": no records to export");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create directory (" + ec.message() + ")");

  std::string runs(kRunsHeader);
  std::string allocations(kAllocationsHeader);
  std::string summary(kSummaryHeader);
  std::string bound(kBoundHeader);
  std::string bound_summary(kBoundSummaryHeader);
  runs += '\n';
  allocations += '\n';
  summary += '\n';
  bound += '\n';
  bound_summary += '\n';
  bool any_bound = false;

  for (const auto& r : records) {
    const std::string algo(to_string(r.algorithm));
    const std::string key = algo + "," + std::to_string(r.seed) + ",";
    const std::string digest = allocation_digest(r);
    for (std::size_t t = 0; t < r.losses.size(); ++t) {
      runs += key + std::to_string(t + 1) + "," + format_double(r.losses[t]) + ",";
      if (r.bound && t + 1 < r.bound->bound.size()) runs += format_double(r.bound->bound[t + 1]);
      runs += "," + digest + "\n";
    }
    allocations += allocation_rows(r);
    summary += key + (r.degenerate ? "1" : "0") + "," + std::to_string(r.decision.rb_count) +
               "," + format_double(r.learning_rate) + "," + format_double(r.initial_loss) + "," +
               format_double(r.final_loss()) + "," + format_double(r.decision.objective) + "," +
               std::to_string(r.decision.solver_iterations) + "\n";
    if (r.bound) {
      any_bound = true;
      const BoundSummary& b = *r.bound;
      for (std::size_t t = 0; t < b.bound.size(); ++t) {
        bound += key + std::to_string(t) + "," + format_double(b.bound[t]) + "," +
                 format_double(b.empirical_gap[t]) + "\n";
      }
      bound_summary += key + std::to_string(b.runs) + "," +
                       format_double(b.curvature.lipschitz_L) + "," +
                       format_double(b.curvature.strong_convexity_mu) + "," +
                       format_double(b.fit.zeta1) + "," + format_double(b.fit.zeta2) + "," +
                       std::to_string(b.fit.samples_used) + "," + format_double(b.A) + "," +
                       format_double(b.asymptotic.value) + "," +
                       (b.asymptotic.converges ? "1" : "0") + "," +
                       format_double(b.zeta2_threshold) + "," + format_double(b.optimal_loss) +
                       "\n";
    }
  }

  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& text) {
    write_file(dir / name, text);
    written.push_back(dir / name);
  };
  emit("runs.csv", runs);
  emit("allocations.csv", allocations);
  emit("summary.csv", summary);
  if (any_bound) {
    emit("bound.csv", bound);
    emit("bound_summary.csv", bound_summary);
  }

  nlohmann::ordered_json manifest;
  manifest["tool"] = "flwire";
  manifest["version"] = std::string(kVersion);
  manifest["record_count"] = records.size();
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& p : written) files.push_back(p.filename().string());
  manifest["files"] = files;
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& r : records) {
    nlohmann::ordered_json e;
    e["algorithm"] = std::string(to_string(r.algorithm));
    e["seed"] = r.seed;
    e["rounds"] = r.losses.size();
    e["degenerate"] = r.degenerate;
    e["allocation_digest"] = allocation_digest(r);
    if (options.include_timing) e["wall_clock_s"] = r.wall_clock_s;
    index.push_back(e);
  }
  manifest["records"] = index;
  if (!options.config_json.empty()) {
    manifest["config"] = nlohmann::ordered_json::parse(options.config_json);
  }
  emit("manifest.json", manifest.dump(2) + "\n");
  return written;
}

std::vector<RunRecord> import_records(const fs::path& dir) {
  std::vector<RunRecord> records;
  std::map<Key, std::size_t> index;

  const fs::path summary_path = dir / "summary.csv";
  const std::string summary_text = read_file(summary_path);
  for (const auto& c : read_rows(summary_path, summary_text, kSummaryHeader)) {
    RunRecord r;
    r.algorithm = parse_algo(c[0], summary_path);
    r.seed = parse_int<std::uint64_t>(c[1], summary_path);
    r.degenerate = c[2] == "1";
    r.decision.rb_count = parse_int<int>(c[3], summary_path);
    r.learning_rate = parse_number(c[4], summary_path);
    r.initial_loss = parse_number(c[5], summary_path);
    r.decision.objective = parse_number(c[7], summary_path);
    r.decision.solver_iterations = parse_int<std::uint64_t>(c[8], summary_path);
    const Key key{std::string(c[0]), r.seed};
    if (!index.emplace(key, records.size()).second) {
      throw IoError(summary_path.string() + ": duplicate record " + key.first + "/" +
                    std::to_string(key.second));
    }
    records.push_back(std::move(r));
  }

  auto lookup = [&](std::string_view algo, std::string_view seed, const fs::path& p) -> RunRecord& {
    const Key key{std::string(algo), parse_int<std::uint64_t>(seed, p)};
    auto it = index.find(key);
    if (it == index.end()) {
      throw IoError(p.string() + ": record " + key.first + "/" + std::to_string(key.second) +
                    " missing from summary.csv");
    }
    return records[it->second];
  };

  const fs::path alloc_path = dir / "allocations.csv";
  const std::string alloc_text = read_file(alloc_path);
  for (const auto& c : read_rows(alloc_path, alloc_text, kAllocationsHeader)) {
    RunRecord& r = lookup(c[0], c[1], alloc_path);
    auto& d = r.decision;
    if (parse_int<std::size_t>(c[2], alloc_path) != d.rb.size()) {
      throw IoError(alloc_path.string() + ": users out of order");
    }
    d.rb.push_back(parse_int<int>(c[4], alloc_path));
    if (parse_int<int>(c[3], alloc_path) != (d.rb.back() >= 0 ? 1 : 0)) {
      throw IoError(alloc_path.string() + ": selected flag disagrees with rb for " + std::string(c[0]) + "/" +
                    std::string(c[1]) + " user " + std::string(c[2]));
    }
    d.power_w.push_back(parse_number(c[5], alloc_path));
    d.per.push_back(parse_number(c[6], alloc_path));
    d.delay_s.push_back(parse_number(c[7], alloc_path));
    d.energy_j.push_back(parse_number(c[8], alloc_path));
    d.sample_counts.push_back(parse_int<int>(c[9], alloc_path));
  }

  const fs::path runs_path = dir / "runs.csv";
  const std::string runs_text = read_file(runs_path);
  for (const auto& c : read_rows(runs_path, runs_text, kRunsHeader)) {
    RunRecord& r = lookup(c[0], c[1], runs_path);
    if (parse_int<std::size_t>(c[2], runs_path) != r.losses.size() + 1) {
      throw IoError(runs_path.string() + ": rounds out of order");
    }
    r.losses.push_back(parse_number(c[3], runs_path));
    if (c[5] != allocation_digest(r)) {
      throw IoError(runs_path.string() + ": allocation digest mismatch for " +
                    std::string(c[0]) + "/" + std::string(c[1]));
    }
  }

  const fs::path bsum_path = dir / "bound_summary.csv";
  if (fs::exists(bsum_path)) {
    const std::string text = read_file(bsum_path);
    for (const auto& c : read_rows(bsum_path, text, kBoundSummaryHeader)) {
      RunRecord& r = lookup(c[0], c[1], bsum_path);
      BoundSummary b;
      b.runs = parse_int<int>(c[2], bsum_path);
      b.curvature.lipschitz_L = parse_number(c[3], bsum_path);
      b.curvature.strong_convexity_mu = parse_number(c[4], bsum_path);
      b.fit.zeta1 = parse_number(c[5], bsum_path);
      b.fit.zeta2 = parse_number(c[6], bsum_path);
      b.fit.samples_used = parse_int<std::size_t>(c[7], bsum_path);
      b.A = parse_number(c[8], bsum_path);
      b.asymptotic.value = parse_number(c[9], bsum_path);
      b.asymptotic.converges = c[10] == "1";
      b.zeta2_threshold = parse_number(c[11], bsum_path);
      b.optimal_loss = parse_number(c[12], bsum_path);
      r.bound = std::move(b);
    }
    const fs::path bound_path = dir / "bound.csv";
    const std::string btext = read_file(bound_path);
    for (const auto& c : read_rows(bound_path, btext, kBoundHeader)) {
      RunRecord& r = lookup(c[0], c[1], bound_path);
      if (!r.bound) throw IoError(bound_path.string() + ": bound rows without a summary");
      r.bound->bound.push_back(parse_number(c[3], bound_path));
      r.bound->empirical_gap.push_back(parse_number(c[4], bound_path));
    }
  }
  return records;
}

fs::path export_sweep(std::span<const SweepRow> rows, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create directory (" + ec.message() + ")");
  std::string text(kSweepHeader);
  text += '\n';
  for (const auto& r : rows) {
    text += std::string(to_string(r.axis)) + "," + std::to_string(r.value) + "," +
            std::string(to_string(r.algorithm)) + "," + std::to_string(r.runs) + "," +
            format_double(r.mean_final_loss) + "," + format_double(r.sd_final_loss) + "," +
            format_double(r.mean_iterations) + "," + format_double(r.sd_iterations) + "\n";
  }
  const fs::path path = dir / "sweep.csv";
  write_file(path, text);
  return path;
}

}  // namespace flwire::harness
