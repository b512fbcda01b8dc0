// JSON (de)serialization for instances and fixture descriptors.  Doubles go
// through the library's shortest-round-trip encoder, so serialize/parse is
// bit-exact.

#pragma once

#include <json.hpp>
#include <string>

#include "mvmc/fixtures.hpp"
#include "mvmc/mrp.hpp"

namespace mvmc {

using json = nlohmann::json;

json depth_to_json(Depth t);
Depth depth_from_json(const json& j);
json norm_index_to_json(double q);         // inf -> "inf"
double norm_index_from_json(const json& j);

json instance_to_json(const MrpInstance& inst);
MrpInstance instance_from_json(const json& j);

json descriptor_to_json(const HardInstanceDescriptor& desc);
HardInstanceDescriptor descriptor_from_json(const json& j);

}  // namespace mvmc
