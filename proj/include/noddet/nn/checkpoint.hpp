#pragma once

#include <string>

#include "noddet/nn/params.hpp"

#include "json.hpp"

namespace noddet::nn {

// Single-file checkpoint: magic line, JSON manifest (caller metadata plus the
// parameter directory: name, kind, shape, adam moments flag), then raw
// little-endian float64 payload in directory order.
//
// save_checkpoint stores value (+ adam_m/adam_v when with_optimizer_state).
// load_checkpoint restores into an already-constructed store; every entry must
// match by name and shape, otherwise VersionError.
void save_checkpoint(const std::string& path, const ParamStore& store,
                     const nlohmann::json& manifest, bool with_optimizer_state);

nlohmann::json load_checkpoint(const std::string& path, ParamStore& store);

// Reads only the manifest (for config compatibility checks and inspection).
nlohmann::json read_checkpoint_manifest(const std::string& path);

}  // namespace noddet::nn
