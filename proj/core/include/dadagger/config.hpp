#pragma once

#include <filesystem>

#include <nlohmann/json_fwd.hpp>

#include "dadagger/engine.hpp"

namespace dadagger {

/// Reads a RunConfig from JSON. `variant` and `env_kind` are required; every
/// other field falls back to `defaults` (or to default_config(env_kind) when
/// no defaults are given). Unknown keys are rejected. Errors are ConfigError
/// and name the field.
RunConfig run_config_from_json(const nlohmann::json& j,
                               const RunConfig* defaults = nullptr);
nlohmann::json run_config_to_json(const RunConfig& cfg);

/// Parses the file and sets base_dir to its directory.
RunConfig load_run_config(const std::filesystem::path& path,
                          const RunConfig* defaults = nullptr);

nlohmann::json train_config_to_json(const TrainConfig& t);

nlohmann::json run_report_to_json(const RunReport& r);
RunReport run_report_from_json(const nlohmann::json& j);

/// Reads a whole file as JSON, mapping syntax errors to ConfigError.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace dadagger
