#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "flwire/harness/config.hpp"

namespace flwire::harness {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

// Reads keys out of one JSON object and remembers which were consumed so
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  const json* find(const std::string& k) {
    auto it = j_.find(k);
    if (it == j_.end()) return nullptr;
    seen_.insert(k);
    return &*it;
  }

  void number(const std::string& k, double& out) {
    if (const json* v = find(k)) out = as_number(*v, key(k));
  }

  void integer(const std::string& k, int& out) {
    if (const json* v = find(k)) out = as_int(*v, key(k));
  }

  void boolean(const std::string& k, bool& out) {
    if (const json* v = find(k)) {
      if (!v->is_boolean()) fail(key(k), "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& k, std::string& out) {
    if (const json* v = find(k)) {
      if (!v->is_string()) fail(key(k), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& k, std::vector<double>& out) {
    if (const json* v = find(k)) {
      if (!v->is_array()) fail(key(k), "expected an array of numbers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_number(e, key(k)));
    }
  }

  void integers(const std::string& k, std::vector<int>& out) {
    if (const json* v = find(k)) {
      if (!v->is_array()) fail(key(k), "expected an array of integers");
      out.clear();
      for (const auto& e : *v) out.push_back(as_int(e, key(k)));
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) fail(key(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& k) {
    if (!v.is_number()) fail(k, "expected a number");
    return v.get<double>();
  }

  static int as_int(const json& v, const std::string& k) {
    if (v.is_number_integer()) {
      const auto x = v.get<std::int64_t>();
      if (x >= std::numeric_limits<int>::min() && x <= std::numeric_limits<int>::max()) {
        return static_cast<int>(x);
      }
      if (v.is_number_unsigned() || x > 0) fail(k, "integer out of range");
    }
    fail(k, "expected an integer");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string_view method_name(phy::FadingExpectation::Method m) {
  switch (m) {
    case phy::FadingExpectation::Method::quadrature: return "quadrature";
    case phy::FadingExpectation::Method::monte_carlo: return "monte_carlo";
    case phy::FadingExpectation::Method::point_mass: return "point_mass";
  }
  return "quadrature";
}

void read_network(const json& j, ExperimentConfig& c) {
  Section s(j, "network");
  auto& n = c.network;
  s.integer("rb_count", n.rb_count);
  s.number("rb_bandwidth_hz", n.rb_bandwidth_hz);
  s.number("downlink_bandwidth_hz", n.downlink_bandwidth_hz);
  const json* dbm = s.find("noise_density_dbm_per_hz");
  const json* watts = s.find("noise_density_w_per_hz");
  if (dbm && watts) {
    fail(s.key("noise_density_w_per_hz"),
         "conflicts with noise_density_dbm_per_hz; give only one");
  }
  if (dbm) {
    n.noise_density_w_per_hz =
        phy::dbm_per_hz_to_watts(Section::as_number(*dbm, s.key("noise_density_dbm_per_hz")));
  }
  if (watts) n.noise_density_w_per_hz = Section::as_number(*watts, s.key("noise_density_w_per_hz"));
  s.number("bs_power_w", n.bs_power_w);
  s.number("max_user_power_w", n.max_user_power_w);
  s.number("waterfall_threshold", n.waterfall_threshold);
  s.numbers("uplink_interference_w", n.uplink_interference_w);
  std::vector<double> range = {c.interference_range_w[0], c.interference_range_w[1]};
  s.numbers("uplink_interference_range_w", range);
  if (range.size() != 2) fail(s.key("uplink_interference_range_w"), "expected [low, high]");
  c.interference_range_w = {range[0], range[1]};
  s.number("downlink_interference_w", n.downlink_interference_w);
  s.number("delay_budget_s", n.delay_budget_s);
  s.number("energy_budget_j", n.energy_budget_j);
  s.number("pathloss_exponent", n.pathloss_exponent);
  s.finish();
}

void read_users(const json& j, UserSpec& u) {
  Section s(j, "users");
  s.integer("count", u.count);
  s.number("radius_m", u.radius_m);
  s.integers("sample_counts", u.sample_counts);
  s.numbers("distances_m", u.distances_m);
  s.number("fading_scale", u.fading_scale);
  s.number("cpu_cycles_per_bit", u.cpu_cycles_per_bit);
  s.number("cpu_freq_hz", u.cpu_freq_hz);
  s.number("energy_coeff", u.energy_coeff);
  s.number("payload_bits", u.payload_bits);
  s.finish();
}

void read_training(const json& j, TrainingSpec& t) {
  Section s(j, "training");
  if (const json* lr = s.find("learning_rate")) {
    if (lr->is_string()) {
      if (lr->get<std::string>() != "one_over_L") {
        fail(s.key("learning_rate"), "expected \"one_over_L\" or a positive number");
      }
      t.fixed_learning_rate.reset();
    } else {
      t.fixed_learning_rate = Section::as_number(*lr, s.key("learning_rate"));
    }
  }
  s.integer("rounds", t.rounds);
  s.numbers("initial_model", t.initial_model);
  s.finish();
}

void read_fading(const json& j, phy::FadingExpectation& f) {
  Section s(j, "fading");
  std::string method(method_name(f.method));
  s.string("method", method);
  if (method == "quadrature") {
    f.method = phy::FadingExpectation::Method::quadrature;
  } else if (method == "monte_carlo") {
    f.method = phy::FadingExpectation::Method::monte_carlo;
  } else if (method == "point_mass") {
    f.method = phy::FadingExpectation::Method::point_mass;
  } else {
    fail(s.key("method"), "expected quadrature, monte_carlo or point_mass");
  }
  s.integer("nodes", f.node_or_sample_count);
  if (const json* seed = s.find("seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0)) {
      fail(s.key("seed"), "expected a non-negative integer");
    }
    f.seed = seed->get<std::uint64_t>();
  }
  s.finish();
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::proposed: return "proposed";
    case Algorithm::baseline_a: return "baseline_a";
    case Algorithm::baseline_b: return "baseline_b";
    case Algorithm::baseline_c: return "baseline_c";
  }
  return "proposed";
}

std::optional<Algorithm> parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.network = phy::default_network(12);
  c.network.uplink_interference_w.clear();
  return c;
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig c = default_config();
  bool blank = true;
  for (char ch : text) {
    if (!std::isspace(static_cast<unsigned char>(ch))) {
      blank = false;
      break;
    }
  }
  if (blank) return c;

  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("<root>: not valid JSON (") + e.what() + ")");
  }
  Section s(root, "");
  if (const json* v = s.find("network")) read_network(*v, c);
  if (const json* v = s.find("users")) read_users(*v, c.users);
  if (const json* v = s.find("task")) {
    Section t(*v, "task");
    t.number("slope", c.task.slope);
    t.number("intercept", c.task.intercept);
    t.number("noise", c.task.noise);
    t.finish();
  }
  if (const json* v = s.find("training")) read_training(*v, c.training);
  if (const json* v = s.find("algorithms")) {
    if (!v->is_array()) fail("algorithms", "expected an array of names");
    c.algorithms.clear();
    for (const auto& e : *v) {
      const auto a = e.is_string() ? parse_algorithm(e.get<std::string>()) : std::nullopt;
      if (!a) fail("algorithms", "expected proposed, baseline_a, baseline_b or baseline_c");
      c.algorithms.push_back(*a);
    }
  }
  if (const json* v = s.find("seeds")) {
    if (!v->is_array()) fail("seeds", "expected an array of non-negative integers");
    c.seeds.clear();
    for (const auto& e : *v) {
      if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<std::int64_t>() >= 0)) {
        fail("seeds", "expected an array of non-negative integers");
      }
      c.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  if (const json* v = s.find("fading")) read_fading(*v, c.fading);
  if (const json* v = s.find("bound")) {
    Section b(*v, "bound");
    b.boolean("enabled", c.bound.enabled);
    b.integer("runs", c.bound.runs);
    b.finish();
  }
  if (const json* v = s.find("output")) {
    Section o(*v, "output");
    o.string("dir", c.output_dir);
    o.finish();
  }
  s.integer("threads", c.threads);
  s.finish();

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  const auto& n = c.network;
  root["network"] = {
      {"rb_count", n.rb_count},
      {"rb_bandwidth_hz", n.rb_bandwidth_hz},
      {"downlink_bandwidth_hz", n.downlink_bandwidth_hz},
      {"noise_density_w_per_hz", n.noise_density_w_per_hz},
      {"bs_power_w", n.bs_power_w},
      {"max_user_power_w", n.max_user_power_w},
      {"waterfall_threshold", n.waterfall_threshold},
      {"uplink_interference_range_w", c.interference_range_w},
      {"downlink_interference_w", n.downlink_interference_w},
      {"delay_budget_s", n.delay_budget_s},
      {"energy_budget_j", n.energy_budget_j},
      {"pathloss_exponent", n.pathloss_exponent},
  };
  if (!n.uplink_interference_w.empty()) {
    root["network"]["uplink_interference_w"] = n.uplink_interference_w;
  }
  const auto& u = c.users;
  root["users"] = {
      {"count", u.count},
      {"radius_m", u.radius_m},
      {"sample_counts", u.sample_counts},
      {"fading_scale", u.fading_scale},
      {"cpu_cycles_per_bit", u.cpu_cycles_per_bit},
      {"cpu_freq_hz", u.cpu_freq_hz},
      {"energy_coeff", u.energy_coeff},
      {"payload_bits", u.payload_bits},
  };
  if (!u.distances_m.empty()) root["users"]["distances_m"] = u.distances_m;
  root["task"] = {{"slope", c.task.slope}, {"intercept", c.task.intercept}, {"noise", c.task.noise}};
  json lr = c.training.fixed_learning_rate ? json(*c.training.fixed_learning_rate) : json("one_over_L");
  root["training"] = {{"learning_rate", lr}, {"rounds", c.training.rounds}};
  if (!c.training.initial_model.empty()) root["training"]["initial_model"] = c.training.initial_model;
  json algos = json::array();
  for (Algorithm a : c.algorithms) algos.push_back(std::string(to_string(a)));
  root["algorithms"] = algos;
  root["seeds"] = c.seeds;
  root["fading"] = {{"method", std::string(method_name(c.fading.method))},
                    {"nodes", c.fading.node_or_sample_count},
                    {"seed", c.fading.seed}};
  root["bound"] = {{"enabled", c.bound.enabled}, {"runs", c.bound.runs}};
  root["output"] = {{"dir", c.output_dir}};
  root["threads"] = c.threads;
  return root.dump(2) + "\n";
}

phy::NetworkParams resolved_network(const ExperimentConfig& c) {
  phy::NetworkParams n = c.network;
  if (!n.uplink_interference_w.empty()) return n;
  const auto [lo, hi] = c.interference_range_w;
  const int r = n.rb_count;
  n.uplink_interference_w.resize(static_cast<std::size_t>(std::max(r, 0)));
  for (int k = 0; k < r; ++k) {
    const double frac = r > 1 ? static_cast<double>(k) / (r - 1) : 0.0;
    n.uplink_interference_w[static_cast<std::size_t>(k)] =
        lo == hi ? lo : lo * std::pow(hi / lo, frac);
  }
  return n;
}

void validate(const ExperimentConfig& c) {
  const auto [lo, hi] = c.interference_range_w;
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo >= 0.0 && hi >= lo) ||
      (lo == 0.0 && hi > 0.0)) {
    fail("network.uplink_interference_range_w", "must satisfy 0 < low <= high, or low == high == 0");
  }
  if (!c.network.uplink_interference_w.empty() &&
      c.network.uplink_interference_w.size() != static_cast<std::size_t>(c.network.rb_count)) {
    fail("network.uplink_interference_w", "must have one entry per RB (rb_count)");
  }
  try {
    phy::validate(resolved_network(c));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("network.") + e.what());
  }

  const auto& u = c.users;
  if (u.count < 1) fail("users.count", "must be >= 1");
  if (!(std::isfinite(u.radius_m) && u.radius_m > 0.0)) fail("users.radius_m", "must be > 0");
  if (u.sample_counts.empty()) fail("users.sample_counts", "must not be empty");
  for (int k : u.sample_counts) {
    if (k < 1) fail("users.sample_counts", "entries must be >= 1");
  }
  if (!u.distances_m.empty()) {
    if (u.distances_m.size() != static_cast<std::size_t>(u.count)) {
      fail("users.distances_m", "must have one entry per user (users.count)");
    }
    for (double d : u.distances_m) {
      if (!(std::isfinite(d) && d > 0.0)) fail("users.distances_m", "entries must be > 0");
    }
  }
  phy::UserProfile probe;
  probe.fading_scale = u.fading_scale;
  probe.cpu_cycles_per_bit = u.cpu_cycles_per_bit;
  probe.cpu_freq_hz = u.cpu_freq_hz;
  probe.energy_coeff = u.energy_coeff;
  probe.payload_bits = u.payload_bits;
  try {
    phy::validate(probe);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("users.") + e.what());
  }

  if (!std::isfinite(c.task.slope)) fail("task.slope", "must be finite");
  if (!std::isfinite(c.task.intercept)) fail("task.intercept", "must be finite");
  if (!(std::isfinite(c.task.noise) && c.task.noise >= 0.0)) fail("task.noise", "must be >= 0");

  if (c.training.fixed_learning_rate &&
      !(std::isfinite(*c.training.fixed_learning_rate) && *c.training.fixed_learning_rate > 0.0)) {
    fail("training.learning_rate", "must be \"one_over_L\" or a positive number");
  }
  if (c.training.rounds < 1) fail("training.rounds", "must be >= 1");
  if (!c.training.initial_model.empty()) {
    if (c.training.initial_model.size() != 2) {
      fail("training.initial_model", "must have 2 entries (slope, intercept)");
    }
    for (double x : c.training.initial_model) {
      if (!std::isfinite(x)) fail("training.initial_model", "entries must be finite");
    }
  }
  if (c.algorithms.empty()) fail("algorithms", "must list at least one algorithm");
  if (c.seeds.empty()) fail("seeds", "must list at least one seed");
  for (std::size_t i = 0; i < c.seeds.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (c.seeds[i] == c.seeds[j]) fail("seeds", "entries must be unique");
    }
  }
  for (std::size_t i = 0; i < c.algorithms.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (c.algorithms[i] == c.algorithms[j]) fail("algorithms", "entries must be unique");
    }
  }
  try {
    phy::validate(c.fading);
  } catch (const std::invalid_argument&) {
    throw ConfigError("fading.nodes: must be >= 16");
  }
  if (c.bound.runs < 1) fail("bound.runs", "must be >= 1");
  if (c.output_dir.empty()) fail("output.dir", "must not be empty");
  if (c.threads < 1) fail("threads", "must be >= 1");
}

}  // namespace flwire::harness
