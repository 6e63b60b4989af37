#pragma once

#include <string>

#include "mbjm/csv.hpp"
#include "mbjm/engine.hpp"
#include "mbjm/evaluate.hpp"
#include "mbjm/simulate.hpp"

namespace mbjm {

std::string model_to_json(const FittedMbjm& model);
FittedMbjm model_from_json(const std::string& text);

std::string bootstrap_to_json(const BootstrapResult& result);
BootstrapResult bootstrap_from_json(const std::string& text);

// Run configuration file: column map plus ModelConfig fields.
struct RunConfig {
    CsvSchema schema;
    ModelConfig model;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);

SimScenario scenario_from_json(const std::string& text);
std::string scenario_to_json(const SimScenario& sc);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace mbjm
