#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fidroute {

class CostModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct FidelityLevel {
  std::string id;
  double avg_size_kb = 0.0;
  /// Access-tier base cost b_tier(f).
  double tier_base_cost = 0.0;
};

/// r(f) = size(f) / size(full).
double size_ratio(const FidelityLevel& level, const FidelityLevel& full);

/// Ordered fidelity levels (cheapest first, last = full-resolution reference)
/// with normalized acquisition costs. Construction validates the profile and
/// rejects any whose normalized costs are not strictly increasing.
class CostProfile {
 public:
  static constexpr double kNormalizationTarget = 120.0;

  CostProfile(std::vector<FidelityLevel> levels, double w_bw);

  const std::vector<FidelityLevel>& levels() const { return levels_; }
  std::size_t size() const { return levels_.size(); }
  double w_bw() const { return w_bw_; }
  const FidelityLevel& full() const { return levels_.back(); }
  const std::vector<std::string>& ids() const { return ids_; }
  /// Normalized costs c(f), aligned with levels().
  const std::vector<double>& costs() const { return costs_; }

  std::size_t index_of(std::string_view id) const;
  double cost_of(std::string_view id) const { return costs_[index_of(id)]; }

 private:
  std::vector<FidelityLevel> levels_;
  double w_bw_ = 0.0;
  std::vector<std::string> ids_;
  std::vector<double> costs_;
};

/// Unnormalized tier-aware cost b_tier(f) + w_bw * r(f). Throws on a level
/// that is not part of the profile.
double raw_cost(const FidelityLevel& level, const CostProfile& profile);

/// c(f) = 120 * raw(f) / raw(full), keyed by level id.
std::map<std::string, double> normalized_costs(const CostProfile& profile);

/// "edge-cloud", "agentic-memory" or "cps-iot".
CostProfile builtin_profile(std::string_view name);
std::vector<std::string> builtin_profile_names();

CostProfile parse_profile(std::string_view json_text);
CostProfile load_profile(const std::filesystem::path& path);
/// A built-in name, or else a path to a profile JSON file.
CostProfile resolve_profile(const std::string& name_or_path);

}  // namespace fidroute
