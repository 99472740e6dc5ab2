#pragma once

#include <filesystem>

#include "casebase/dataset.hpp"
#include "casebase/sampling.hpp"
#include "casebase/table.hpp"

namespace casebase {

SurvivalDataset load_dataset(const std::filesystem::path& path, const ColumnSchema& schema);
SurvivalDataset parse_dataset(const RawTable& raw, const ColumnSchema& schema);
Table dataset_table(const SurvivalDataset& data);
void save_dataset(const SurvivalDataset& data, const std::filesystem::path& path, char delimiter = ',');

/// Column names that identify a person-moment table on disk.
inline constexpr const char* kMomentColumns[] = {"subject_id", "moment_time", "event_indicator", "offset"};

bool is_moment_table(const RawTable& raw);
bool is_moment_table(const std::filesystem::path& path, char delimiter = ',');

Table moments_table(const PersonMomentTable& table);
/// Writes the table and its "<path>.meta.json" sidecar.
void save_moments(const PersonMomentTable& table, const std::filesystem::path& path, char delimiter = ',');
PersonMomentTable load_moments(const std::filesystem::path& path, char delimiter = ',');

std::filesystem::path meta_sidecar(const std::filesystem::path& path);

}  // namespace casebase
