#pragma once

#include <string>

#include "engage/model.hpp"

namespace engage {

// Text checkpoint: a version line, the model configuration as one structured
// line, then every parameter tensor with a shape header and shortest
// round-trip decimal values. save -> load is bit-exact.
void save_checkpoint(ModelParameters& params, const std::string& path);
ModelParameters load_checkpoint(const std::string& path);

}  // namespace engage
