#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "symlab/ea_discovery.hpp"
#include "symlab/group_rep.hpp"
#include "symlab/teacher_student.hpp"
#include "symlab/training.hpp"

namespace symlab {

using Json = nlohmann::json;

/// Reads a JSON or TOML (by .toml extension) config file into JSON.
/// IoError if unreadable, ConfigError if it does not parse.
Json load_config_file(const std::string& path);

/// Applies "a.b.c=value"; value is parsed as JSON when possible, otherwise
/// taken as a string. Intermediate objects are created as needed.
void apply_override(Json& root, const std::string& assignment);

/// Group selection: a named built-in or a representation file.
struct GroupSpec {
  std::string name = "C2-swap";
  int n = 0;
  std::string file;
};

/// Settings of a single `run`.
struct RunSpec {
  InitMode init_mode = InitMode::kWIGaussian;
  double sigma_pi = 4.0;
};

// Section readers. Missing keys keep their defaults; unknown keys and type
// mismatches raise ConfigError naming the offending key.
UnitSpec unit_from_json(const Json& j);
GroupSpec group_from_json(const Json& j);
TrainConfig train_from_json(const Json& j, TrainConfig defaults = {});
TeacherSpec teacher_from_json(const Json& j);
ExperimentGrid grid_from_json(const Json& j);
HeuristicConfig heuristic_from_json(const Json& j);
RunSpec run_from_json(const Json& j);

Json to_json(const UnitSpec& u);
Json to_json(const GroupSpec& g);
Json to_json(const TrainConfig& c);
Json to_json(const TeacherSpec& t);
Json to_json(const ExperimentGrid& g);
Json to_json(const HeuristicConfig& h);
Json to_json(const RunSpec& r);

Json to_json(const GroupRepresentation& rep);
GroupRepresentation rep_from_json(const Json& j);

/// Bundle for the unit. A bare representation file ({order, dim, matrices,
/// cayley}) is taken as the action on Z, with trivial actions on X and Y; a
/// file with "rho", "rho_hat" (and "eta" for affine-layer units) is lifted
/// through the unit's action.
ActionBundle build_bundle(const GroupSpec& group, const UnitSpec& unit);

}  // namespace symlab
