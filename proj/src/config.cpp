#include "ipp/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ipp {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("bad number '" + std::string(v) + "'");
  return out;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("bad boolean '" + std::string(v) + "'");
}

std::vector<std::string_view> split(std::string_view v, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = v.find(sep, start);
    out.push_back(trim(v.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<int> parse_int_list(std::string_view v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;
  for (auto item : split(v, ',')) out.push_back(parse_number<int>(item));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename Int>
std::string fmt_int(Int v) {
  return std::to_string(v);
}

std::string fmt(bool v) { return v ? "true" : "false"; }

std::string fmt_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

struct Field {
  std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define IPP_DOUBLE(key, member)                                                                    \
  {key, {[](RunConfig& c, std::string_view v, const auto&) { c.member = parse_number<double>(v); }, \
         [](const RunConfig& c) { return fmt(c.member); }}}
#define IPP_INT(key, member)                                                                    \
  {key, {[](RunConfig& c, std::string_view v, const auto&) { c.member = parse_number<int>(v); }, \
         [](const RunConfig& c) { return fmt_int(c.member); }}}
#define IPP_BOOL(key, member)                                                          \
  {key, {[](RunConfig& c, std::string_view v, const auto&) { c.member = parse_bool(v); }, \
         [](const RunConfig& c) { return fmt(c.member); }}}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"map",
       {[](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
          std::filesystem::path p{std::string(v)};
          c.map_path = p.is_absolute() || base.empty() ? p : base / p;
        },
        [](const RunConfig& c) { return c.map_path.string(); }}},
      IPP_DOUBLE("lengthscale", env.kernel.lengthscale),
      IPP_DOUBLE("jitter", env.kernel.jitter),
      IPP_DOUBLE("tau", env.kernel.tau),
      IPP_DOUBLE("d_meas", env.d_meas),
      IPP_INT("step_budget", env.step_budget),
      IPP_DOUBLE("info_threshold", env.info_threshold),
      IPP_DOUBLE("redundancy_penalty", env.redundancy_penalty),
      IPP_DOUBLE("collision_penalty", env.collision_penalty),
      IPP_BOOL("dynamic", env.dynamic),
      IPP_DOUBLE("v_max_mps", env.v_max_mps),
      IPP_DOUBLE("seconds_per_step", env.seconds_per_step),
      IPP_INT("n_peaks", env.shekel.n_peaks),
      IPP_DOUBLE("sharpness_min", env.shekel.sharpness_min),
      IPP_DOUBLE("sharpness_max", env.shekel.sharpness_max),
      {"fixed_start",
       {[](RunConfig& c, std::string_view v, const auto&) {
          if (trim(v).empty()) {
            c.env.fixed_start.reset();
            return;
          }
          const auto parts = split(v, ',');
          if (parts.size() != 2) throw std::invalid_argument("fixed_start expects 'x,y'");
          c.env.fixed_start = Position{parse_number<double>(parts[0]), parse_number<double>(parts[1])};
        },
        [](const RunConfig& c) {
          return c.env.fixed_start ? fmt(c.env.fixed_start->x) + "," + fmt(c.env.fixed_start->y) : std::string{};
        }}},
      IPP_DOUBLE("gamma", agent.gamma),
      IPP_DOUBLE("learning_rate", agent.learning_rate),
      IPP_DOUBLE("learning_rate_end", agent.learning_rate_end),
      IPP_INT("batch_size", agent.batch_size),
      IPP_DOUBLE("target_rate", agent.target_rate),
      {"exploration",
       {[](RunConfig& c, std::string_view v, const auto&) {
          if (v == "noisy") {
            c.agent.exploration = Exploration::Noisy;
          } else if (v == "epsilon") {
            c.agent.exploration = Exploration::EpsilonGreedy;
          } else {
            throw std::invalid_argument("exploration must be 'noisy' or 'epsilon'");
          }
        },
        [](const RunConfig& c) { return std::string(exploration_name(c.agent.exploration)); }}},
      IPP_DOUBLE("epsilon_start", agent.epsilon_start),
      IPP_DOUBLE("epsilon_end", agent.epsilon_end),
      IPP_INT("epsilon_decay_episodes", agent.epsilon_decay_episodes),
      IPP_BOOL("censoring", agent.censoring),
      IPP_INT("episodes", agent.episodes),
      {"buffer_capacity",
       {[](RunConfig& c, std::string_view v, const auto&) { c.agent.buffer_capacity = parse_number<std::size_t>(v); },
        [](const RunConfig& c) { return fmt_int(c.agent.buffer_capacity); }}},
      IPP_DOUBLE("per_alpha", agent.per_alpha),
      IPP_DOUBLE("per_beta_start", agent.per_beta_start),
      IPP_DOUBLE("per_beta_end", agent.per_beta_end),
      IPP_INT("warmup", agent.warmup),
      IPP_INT("checkpoint_every", agent.checkpoint_every),
      {"conv_filters",
       {[](RunConfig& c, std::string_view v, const auto&) { c.agent.network.conv_filters = parse_int_list(v); },
        [](const RunConfig& c) { return fmt_list(c.agent.network.conv_filters); }}},
      IPP_BOOL("pool", agent.network.pool),
      {"fc_widths",
       {[](RunConfig& c, std::string_view v, const auto&) { c.agent.network.fc_widths = parse_int_list(v); },
        [](const RunConfig& c) { return fmt_list(c.agent.network.fc_widths); }}},
      IPP_INT("value_hidden", agent.network.value_hidden),
      IPP_INT("advantage_hidden", agent.network.advantage_hidden),
      IPP_BOOL("noisy", agent.network.noisy),
      IPP_DOUBLE("noise_init", agent.network.noise_init),
      {"policies",
       {[](RunConfig& c, std::string_view v, const auto&) {
          c.policies.clear();
          for (auto p : split(v, ',')) {
            if (p.empty()) throw std::invalid_argument("empty policy name");
            c.policies.emplace_back(p);
          }
        },
        [](const RunConfig& c) {
          std::string s;
          for (std::size_t i = 0; i < c.policies.size(); ++i) s += (i ? "," : "") + c.policies[i];
          return s;
        }}},
      {"checkpoint",
       {[](RunConfig& c, std::string_view v, const std::filesystem::path& base) {
          std::filesystem::path p{std::string(v)};
          c.checkpoint = p.empty() || p.is_absolute() || base.empty() ? p : base / p;
        },
        [](const RunConfig& c) { return c.checkpoint.string(); }}},
      IPP_INT("eval_episodes", eval_episodes),
      IPP_INT("gp_horizon", gp_horizon),
      IPP_INT("threads", threads),
      {"seed",
       {[](RunConfig& c, std::string_view v, const auto&) { c.seed = parse_number<std::uint64_t>(v); },
        [](const RunConfig& c) { return fmt_int(c.seed); }}},
  };
  return table;
}

#undef IPP_DOUBLE
#undef IPP_INT
#undef IPP_BOOL

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::map<std::string, const Field*, std::less<>> lookup;
  for (const auto& [k, f] : fields()) lookup.emplace(k, &f);

  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw std::invalid_argument(where + "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = lookup.find(key);
    if (it == lookup.end()) throw std::invalid_argument(where + "unknown key '" + std::string(key) + "'");
    if (!seen.emplace(key).second) throw std::invalid_argument(where + "duplicate key '" + std::string(key) + "'");
    try {
      it->second->set(cfg, value, base_dir);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + std::string(key) + ": " + e.what());
    }
  }

  if (cfg.map_path.empty()) throw std::invalid_argument("config: 'map' is required");
  cfg.env.map = std::make_shared<const NavMap>(load_map(cfg.map_path));
  cfg.env.seed = cfg.seed;
  cfg.env.validate();
  cfg.agent.network.height = cfg.env.map->height();
  cfg.agent.network.width = cfg.env.map->width();
  cfg.agent.validate();
  cfg.agent.network.validate();
  if (cfg.eval_episodes < 1) throw std::invalid_argument("config: eval_episodes must be >= 1");
  if (cfg.gp_horizon < 1) throw std::invalid_argument("config: gp_horizon must be >= 1");
  if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [k, f] : fields()) {
    const auto v = f.get(config);
    if (v.empty()) continue;
    out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace ipp
