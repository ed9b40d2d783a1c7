#pragma once

// Flat `key = value` configuration. `#` starts a comment. Relative paths are
// resolved against the directory of the file they were read from.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace astgan {

enum class Regime { Mle, Gan, GanPretrain };

std::string_view to_string(Regime r);
std::optional<Regime> parse_regime(std::string_view s);

enum class FakeSource { Mixed, Random };

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& why)
      : std::runtime_error(field.empty() ? why : "config field '" + field + "': " + why), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct Config {
  std::filesystem::path grammar;
  std::filesystem::path train;
  std::filesystem::path dev;

  Regime regime = Regime::GanPretrain;
  std::uint64_t seed = 1;

  std::size_t embed_size = 64;
  std::size_t hidden_size = 128;
  std::size_t dis_embed_size = 64;
  std::size_t dis_hidden_size = 64;
  bool dis_flat_encoder = false;
  std::size_t max_input_len = 40;
  std::size_t min_freq = 2;

  std::size_t batch_size = 16;
  double lr = 1e-3;
  double dis_lr = 1e-3;
  std::size_t mle_epochs = 30;
  std::size_t dis_pretrain_steps = 500;
  std::size_t adv_epochs = 10;
  std::size_t g_steps = 1;
  std::size_t d_steps = 1;
  // Unset: follow the regime (both on for gan_pretrain, both off for gan).
  std::optional<bool> pretrain_generator;
  std::optional<bool> pretrain_discriminator;
  FakeSource dis_fakes = FakeSource::Mixed;
  double baseline_decay = 0.95;
  double collapse_reward = 0.01;
  std::size_t collapse_epochs = 3;

  std::size_t beam_width = 5;
  std::size_t max_steps = 200;

  static Config parse(std::string_view text, const std::filesystem::path& base_dir = {});
  static Config load(const std::filesystem::path& path);

  // Applies one `key=value` override; paths resolve against base_dir.
  void set(std::string_view key, std::string_view value, const std::filesystem::path& base_dir = {});
  void validate() const;

  bool generator_pretraining() const;
  bool discriminator_pretraining() const;

  // Every key in a fixed order; parse(echo()) reproduces this config.
  std::string echo() const;

  static const std::vector<std::string>& keys();
};

}  // namespace astgan
