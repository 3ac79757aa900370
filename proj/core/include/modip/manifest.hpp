#pragma once

#include "reconstructor.hpp"

#include <nlohmann/json.hpp>

namespace modip {

using Json = nlohmann::json;

Json to_json(GridSpec const &g);
GridSpec grid_from_json(Json const &j);

Json to_json(ReconConfig const &cfg);
// Inverse of to_json(ReconConfig); unknown keys are rejected.
ReconConfig recon_config_from_json(Json const &j);

struct RunEnvironment
{
  std::string command;
  int threads = 1;
  Json inputs = Json::object();  // file paths consumed
  Json outputs = Json::object(); // file paths produced
};

// Everything needed to re-create a reconstruction: configuration, conventions, PRNG, precision,
// grid (raw and normalized B0) and software version.
Json run_manifest(ReconConfig const &cfg, GridSpec const &grid, RunEnvironment const &env);

// Common header for the other commands.
Json base_manifest(std::string const &command, int threads);

void write_json(std::string const &path, Json const &j);
Json read_json(std::string const &path);

} // namespace modip
