#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "nslab/ns_solver.hpp"

namespace nslab {

inline constexpr const char* kVersion = "0.1.0";

// Config parse / validation / IO failure; maps to exit status 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration ('#' comments, optional quotes). Lookups
// raise ConfigError with the offending key and source line.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin = "<string>");

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& def) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double def) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int def) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const;
  bool get_bool(const std::string& key, bool def) const;

  void set(const std::string& key, const std::string& value);

  // FNV-1a hash of the raw config bytes, as fixed-width hex.
  std::string content_hash() const;
  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  std::string origin_;
  std::uint64_t hash_ = 0;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
};

// History container format: one JSON header line (grid size, nu, time
// span, snapshot times, endianness, format version) followed by raw
// little-endian doubles per snapshot, u then v, row-major (y outer).
void write_history(const VelocityHistory& h, const std::string& path);
VelocityHistory read_history(const std::string& path);

// Subcommand drivers; return the process exit status (0 pass, 1 verdict
// fail). Config/IO problems raise ConfigError.
int cmd_solve(const Config& cfg, const std::string& out_dir);
int cmd_kelvin(const Config& cfg, const std::string& out_dir);
int cmd_action(const Config& cfg, const std::string& out_dir);
int cmd_weber(const Config& cfg, const std::string& out_dir);
int cmd_reverse_kelvin(const Config& cfg, const std::string& out_dir);

// Full argv entry point (subcommand dispatch, --config/--out/--seed).
int run_cli(int argc, const char* const* argv);

}  // namespace nslab
