#include "ars/checkpoint.hpp"

#include <fstream>

namespace ars::net {
namespace {

using nlohmann::json;

json layer_json(const DenseLayer& layer) {
  return json{{"in", layer.in}, {"out", layer.out}, {"weight", layer.weight}, {"bias", layer.bias}};
}

DenseLayer layer_from_json(const json& j) {
  DenseLayer layer{j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(),
                   j.at("weight").get<std::vector<double>>(), j.at("bias").get<std::vector<double>>()};
  if (layer.weight.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
    throw Error(ErrorCode::ParseError, "checkpoint layer has inconsistent shape");
  }
  return layer;
}

void check_header(const json& doc, const char* kind) {
  if (!doc.contains("schema_version") || doc.at("schema_version").get<int>() != kCheckpointSchemaVersion) {
    throw Error(ErrorCode::ParseError, "unsupported or missing checkpoint schema_version");
  }
  if (doc.value("kind", std::string{}) != kind) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint is not of kind '") + kind + "'");
  }
}

Mlp mlp_from_layers(std::vector<std::size_t> dims, bool activate_last, const json& layers) {
  Mlp net(std::move(dims), activate_last);
  if (layers.size() != net.layers().size()) throw Error(ErrorCode::ParseError, "checkpoint layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    DenseLayer layer = layer_from_json(layers[l]);
    if (layer.in != net.layers()[l].in || layer.out != net.layers()[l].out) {
      throw Error(ErrorCode::ParseError, "checkpoint layer shape does not match layer_dims");
    }
    net.layers()[l] = std::move(layer);
  }
  return net;
}

json mlp_body(const Mlp& net) {
  json layers = json::array();
  for (const auto& layer : net.layers()) layers.push_back(layer_json(layer));
  return layers;
}

}  // namespace

nlohmann::json to_json(const Mlp& net, std::uint64_t seed) {
  return json{{"schema_version", kCheckpointSchemaVersion},
              {"kind", "mlp"},
              {"layer_dims", net.layer_dims()},
              {"activate_last", net.activate_last()},
              {"parameters", mlp_body(net)},
              {"seed", seed}};
}

Mlp mlp_from_json(const nlohmann::json& doc) {
  try {
    check_header(doc, "mlp");
    return mlp_from_layers(doc.at("layer_dims").get<std::vector<std::size_t>>(), doc.value("activate_last", false),
                           doc.at("parameters"));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

nlohmann::json to_json(const NoiseGenNet& gen, std::uint64_t seed) {
  return json{{"schema_version", kCheckpointSchemaVersion},
              {"kind", "noisegen"},
              {"layer_dims", gen.trunk().layer_dims()},
              {"bounds", {{"mean_bound", gen.mean_bound()}, {"scale_lo", gen.scale_lo()}, {"scale_hi", gen.scale_hi()}}},
              {"parameters",
               {{"trunk", mlp_body(gen.trunk())},
                {"mean_head", layer_json(gen.mean_head())},
                {"scale_head", layer_json(gen.scale_head())}}},
              {"seed", seed}};
}

NoiseGenNet noisegen_from_json(const nlohmann::json& doc) {
  try {
    check_header(doc, "noisegen");
    const auto& bounds = doc.at("bounds");
    const auto& params = doc.at("parameters");
    Mlp trunk = mlp_from_layers(doc.at("layer_dims").get<std::vector<std::size_t>>(), true, params.at("trunk"));
    return NoiseGenNet(std::move(trunk), layer_from_json(params.at("mean_head")),
                       layer_from_json(params.at("scale_head")), bounds.at("mean_bound").get<double>(),
                       bounds.at("scale_lo").get<double>(), bounds.at("scale_hi").get<double>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

void save_mlp(const std::string& path, const Mlp& net, std::uint64_t seed) { write_json_file(path, to_json(net, seed)); }
Mlp load_mlp(const std::string& path) { return mlp_from_json(read_json_file(path)); }
void save_noisegen(const std::string& path, const NoiseGenNet& gen, std::uint64_t seed) {
  write_json_file(path, to_json(gen, seed));
}
NoiseGenNet load_noisegen(const std::string& path) { return noisegen_from_json(read_json_file(path)); }

}  // namespace ars::net
