#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "ars/net.hpp"

// JSON checkpoints: {schema_version, kind, layer_dims, parameters (flat,
// row-major), bounds, seed}.
namespace ars::net {

inline constexpr int kCheckpointSchemaVersion = 1;

nlohmann::json to_json(const Mlp& net, std::uint64_t seed);
Mlp mlp_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const NoiseGenNet& gen, std::uint64_t seed);
NoiseGenNet noisegen_from_json(const nlohmann::json& doc);

void save_mlp(const std::string& path, const Mlp& net, std::uint64_t seed);
Mlp load_mlp(const std::string& path);
void save_noisegen(const std::string& path, const NoiseGenNet& gen, std::uint64_t seed);
NoiseGenNet load_noisegen(const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace ars::net
