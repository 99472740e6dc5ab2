#pragma once

#include <filesystem>
#include <string>

#include "casebase/glm.hpp"

namespace casebase {

inline constexpr const char* kModelFormat = "casebase-model";
inline constexpr int kModelVersion = 1;

/// Self-describing JSON document; doubles are printed in shortest
/// round-trip form so a save/load cycle is bit-exact.
std::string serialize_model(const HazardModel& model);
HazardModel deserialize_model(const std::string& text);

void save_model(const HazardModel& model, const std::filesystem::path& path);
HazardModel load_model(const std::filesystem::path& path);

}  // namespace casebase
