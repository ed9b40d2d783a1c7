#include "astgan/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace astgan {

namespace fs = std::filesystem;

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Mle: return "mle";
    case Regime::Gan: return "gan";
    case Regime::GanPretrain: return "gan_pretrain";
  }
  return "?";
}

std::optional<Regime> parse_regime(std::string_view s) {
  if (s == "mle") return Regime::Mle;
  if (s == "gan") return Regime::Gan;
  if (s == "gan_pretrain") return Regime::GanPretrain;
  return std::nullopt;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError(std::string(key), "expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

std::size_t parse_size(std::string_view key, std::string_view v) {
  return static_cast<std::size_t>(parse_u64(key, v));
}

double parse_real(std::string_view key, std::string_view v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(std::string(key), "expected true or false, got '" + std::string(v) + "'");
}

fs::path parse_path(std::string_view v, const fs::path& base) {
  fs::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string format_opt(const std::optional<bool>& b) {
  if (!b) return "auto";
  return *b ? "true" : "false";
}

}  // namespace

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k{
      "grammar",        "train",          "dev",                "regime",
      "seed",           "embed_size",     "hidden_size",        "dis_embed_size",
      "dis_hidden_size", "dis_encoder",   "max_input_len",      "min_freq",
      "batch_size",     "lr",             "dis_lr",             "mle_epochs",
      "dis_pretrain_steps", "adv_epochs", "g_steps",            "d_steps",
      "pretrain_generator", "pretrain_discriminator", "dis_fakes", "baseline_decay",
      "collapse_reward", "collapse_epochs", "beam_width",       "max_steps"};
  return k;
}

void Config::set(std::string_view key, std::string_view value, const fs::path& base_dir) {
  const std::string k(key);
  const std::string_view v = trim(value);
  if (v.empty()) throw ConfigError(k, "empty value");
  if (k == "grammar") grammar = parse_path(v, base_dir);
  else if (k == "train") train = parse_path(v, base_dir);
  else if (k == "dev") dev = parse_path(v, base_dir);
  else if (k == "regime") {
    auto r = parse_regime(v);
    if (!r) throw ConfigError(k, "expected mle, gan or gan_pretrain, got '" + std::string(v) + "'");
    regime = *r;
  } else if (k == "seed") seed = parse_u64(k, v);
  else if (k == "embed_size") embed_size = parse_size(k, v);
  else if (k == "hidden_size") hidden_size = parse_size(k, v);
  else if (k == "dis_embed_size") dis_embed_size = parse_size(k, v);
  else if (k == "dis_hidden_size") dis_hidden_size = parse_size(k, v);
  else if (k == "dis_encoder") {
    if (v == "tree") dis_flat_encoder = false;
    else if (v == "flat") dis_flat_encoder = true;
    else throw ConfigError(k, "expected tree or flat, got '" + std::string(v) + "'");
  } else if (k == "max_input_len") max_input_len = parse_size(k, v);
  else if (k == "min_freq") min_freq = parse_size(k, v);
  else if (k == "batch_size") batch_size = parse_size(k, v);
  else if (k == "lr") lr = parse_real(k, v);
  else if (k == "dis_lr") dis_lr = parse_real(k, v);
  else if (k == "mle_epochs") mle_epochs = parse_size(k, v);
  else if (k == "dis_pretrain_steps") dis_pretrain_steps = parse_size(k, v);
  else if (k == "adv_epochs") adv_epochs = parse_size(k, v);
  else if (k == "g_steps") g_steps = parse_size(k, v);
  else if (k == "d_steps") d_steps = parse_size(k, v);
  else if (k == "pretrain_generator") pretrain_generator = v == "auto" ? std::nullopt : std::optional(parse_bool(k, v));
  else if (k == "pretrain_discriminator") {
    pretrain_discriminator = v == "auto" ? std::nullopt : std::optional(parse_bool(k, v));
  } else if (k == "dis_fakes") {
    if (v == "mixed") dis_fakes = FakeSource::Mixed;
    else if (v == "random") dis_fakes = FakeSource::Random;
    else throw ConfigError(k, "expected mixed or random, got '" + std::string(v) + "'");
  } else if (k == "baseline_decay") baseline_decay = parse_real(k, v);
  else if (k == "collapse_reward") collapse_reward = parse_real(k, v);
  else if (k == "collapse_epochs") collapse_epochs = parse_size(k, v);
  else if (k == "beam_width") beam_width = parse_size(k, v);
  else if (k == "max_steps") max_steps = parse_size(k, v);
  else throw ConfigError(k, "unknown key");
}

Config Config::parse(std::string_view text, const fs::path& base_dir) {
  Config c;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    c.set(trim(line.substr(0, eq)), line.substr(eq + 1), base_dir);
  }
  return c;
}

Config Config::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), fs::absolute(path).parent_path());
}

void Config::validate() const {
  auto positive = [](const char* name, std::size_t v) {
    if (v == 0) throw ConfigError(name, "must be positive");
  };
  positive("embed_size", embed_size);
  positive("hidden_size", hidden_size);
  positive("dis_embed_size", dis_embed_size);
  positive("dis_hidden_size", dis_hidden_size);
  positive("max_input_len", max_input_len);
  positive("min_freq", min_freq);
  positive("batch_size", batch_size);
  positive("g_steps", g_steps);
  positive("d_steps", d_steps);
  positive("collapse_epochs", collapse_epochs);
  positive("beam_width", beam_width);
  positive("max_steps", max_steps);
  if (!(lr > 0)) throw ConfigError("lr", "must be positive");
  if (!(dis_lr > 0)) throw ConfigError("dis_lr", "must be positive");
  if (!(baseline_decay > 0 && baseline_decay < 1)) throw ConfigError("baseline_decay", "must lie in (0, 1)");
  if (!(collapse_reward > 0 && collapse_reward < 1)) throw ConfigError("collapse_reward", "must lie in (0, 1)");
  if (grammar.empty()) throw ConfigError("grammar", "missing");
  if (train.empty()) throw ConfigError("train", "missing");
  if (dev.empty()) throw ConfigError("dev", "missing");
}

bool Config::generator_pretraining() const {
  if (regime == Regime::Mle) return true;
  return pretrain_generator.value_or(regime == Regime::GanPretrain);
}

bool Config::discriminator_pretraining() const {
  if (regime == Regime::Mle) return false;
  return pretrain_discriminator.value_or(regime == Regime::GanPretrain);
}

std::string Config::echo() const {
  std::ostringstream os;
  os << "grammar = " << grammar.string() << '\n'
     << "train = " << train.string() << '\n'
     << "dev = " << dev.string() << '\n'
     << "regime = " << to_string(regime) << '\n'
     << "seed = " << seed << '\n'
     << "embed_size = " << embed_size << '\n'
     << "hidden_size = " << hidden_size << '\n'
     << "dis_embed_size = " << dis_embed_size << '\n'
     << "dis_hidden_size = " << dis_hidden_size << '\n'
     << "dis_encoder = " << (dis_flat_encoder ? "flat" : "tree") << '\n'
     << "max_input_len = " << max_input_len << '\n'
     << "min_freq = " << min_freq << '\n'
     << "batch_size = " << batch_size << '\n'
     << "lr = " << format_real(lr) << '\n'
     << "dis_lr = " << format_real(dis_lr) << '\n'
     << "mle_epochs = " << mle_epochs << '\n'
     << "dis_pretrain_steps = " << dis_pretrain_steps << '\n'
     << "adv_epochs = " << adv_epochs << '\n'
     << "g_steps = " << g_steps << '\n'
     << "d_steps = " << d_steps << '\n'
     << "pretrain_generator = " << format_opt(pretrain_generator) << '\n'
     << "pretrain_discriminator = " << format_opt(pretrain_discriminator) << '\n'
     << "dis_fakes = " << (dis_fakes == FakeSource::Mixed ? "mixed" : "random") << '\n'
     << "baseline_decay = " << format_real(baseline_decay) << '\n'
     << "collapse_reward = " << format_real(collapse_reward) << '\n'
     << "collapse_epochs = " << collapse_epochs << '\n'
     << "beam_width = " << beam_width << '\n'
     << "max_steps = " << max_steps << '\n';
  return os.str();
}

}  // namespace astgan
