#include "fidroute/cost_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>
#include <json.hpp>

namespace fidroute {

double size_ratio(const FidelityLevel& level, const FidelityLevel& full) {
  if (!(level.avg_size_kb > 0.0) || !(full.avg_size_kb > 0.0))
    throw CostModelError(fmt::format("sizes must be positive ('{}': {} KB, '{}': {} KB)", level.id,
                                     level.avg_size_kb, full.id, full.avg_size_kb));
  return level.avg_size_kb / full.avg_size_kb;
}

namespace {

double tier_cost(const FidelityLevel& level, const FidelityLevel& full, double w_bw) {
  return level.tier_base_cost + w_bw * size_ratio(level, full);
}

}  // namespace

CostProfile::CostProfile(std::vector<FidelityLevel> levels, double w_bw)
    : levels_(std::move(levels)), w_bw_(w_bw) {
  if (levels_.empty()) throw CostModelError("a cost profile needs at least one level");
  if (!(w_bw_ >= 0.0)) throw CostModelError(fmt::format("w_bw must be >= 0, got {}", w_bw_));
  std::set<std::string> seen;
  for (const auto& l : levels_) {
    if (l.id.empty()) throw CostModelError("fidelity level with empty id");
    if (!seen.insert(l.id).second) throw CostModelError(fmt::format("duplicate level '{}'", l.id));
    if (!(l.avg_size_kb > 0.0))
      throw CostModelError(fmt::format("level '{}': size must be positive", l.id));
    if (!(l.tier_base_cost >= 0.0))
      throw CostModelError(fmt::format("level '{}': tier base cost must be >= 0", l.id));
    ids_.push_back(l.id);
  }

  const double full_raw = tier_cost(full(), full(), w_bw_);
  if (!(full_raw > 0.0))
    throw CostModelError("the full-resolution level must have a positive raw cost");
  for (std::size_t i = 0; i + 1 < levels_.size(); ++i)
    costs_.push_back(kNormalizationTarget * tier_cost(levels_[i], full(), w_bw_) / full_raw);
  costs_.push_back(kNormalizationTarget);

  for (std::size_t i = 1; i < costs_.size(); ++i)
    if (!(costs_[i] > costs_[i - 1]))
      throw CostModelError(fmt::format(
          "normalized costs must strictly increase: '{}' costs {:.4f} but '{}' costs {:.4f}",
          ids_[i - 1], costs_[i - 1], ids_[i], costs_[i]));
}

std::size_t CostProfile::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (ids_[i] == id) return i;
  throw CostModelError(fmt::format("unknown fidelity level '{}'", id));
}

double raw_cost(const FidelityLevel& level, const CostProfile& profile) {
  const auto& known = profile.levels()[profile.index_of(level.id)];
  return tier_cost(known, profile.full(), profile.w_bw());
}

std::map<std::string, double> normalized_costs(const CostProfile& profile) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < profile.size(); ++i) out.emplace(profile.ids()[i], profile.costs()[i]);
  return out;
}

namespace {

// Average sizes measured for the edge-cloud deployment; the other profiles
// reuse them and differ only in tier costs and bandwidth weight.
constexpr double kSizesKb[] = {0.05, 1.0, 12.0, 45.0, 650.0};
constexpr const char* kLevelIds[] = {"caption", "resize_32", "jpeg_q1", "jpeg_q10", "full"};

CostProfile make_profile(const double (&tiers)[4], double w_bw) {
  std::vector<FidelityLevel> levels;
  for (std::size_t i = 0; i < 5; ++i)
    levels.push_back({kLevelIds[i], kSizesKb[i], i < 4 ? tiers[i] : 1.0});
  return CostProfile(std::move(levels), w_bw);
}

}  // namespace

CostProfile builtin_profile(std::string_view name) {
  if (name == "edge-cloud") return make_profile({0.08, 0.16, 0.40, 0.56}, 0.06);
  if (name == "agentic-memory") return make_profile({0.06, 0.12, 0.36, 0.52}, 0.06);
  if (name == "cps-iot") return make_profile({0.04, 0.10, 0.30, 0.46}, 0.12);
  throw CostModelError(fmt::format("unknown built-in profile '{}'", name));
}

std::vector<std::string> builtin_profile_names() {
  return {"edge-cloud", "agentic-memory", "cps-iot"};
}

CostProfile parse_profile(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw CostModelError(fmt::format("malformed profile JSON: {}", e.what()));
  }
  try {
    std::vector<FidelityLevel> levels;
    for (const auto& l : j.at("levels"))
      levels.push_back({l.at("id").get<std::string>(), l.at("size_kb").get<double>(),
                        l.at("tier_base").get<double>()});
    return CostProfile(std::move(levels), j.at("w_bw").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw CostModelError(fmt::format("invalid profile: {}", e.what()));
  }
}

CostProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CostModelError(fmt::format("cannot open profile '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_profile(ss.str());
}

CostProfile resolve_profile(const std::string& name_or_path) {
  for (const auto& n : builtin_profile_names())
    if (n == name_or_path) return builtin_profile(n);
  return load_profile(name_or_path);
}

}  // namespace fidroute
