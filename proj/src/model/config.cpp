#include <json.hpp>

#include "tsam/model/config.hpp"

namespace tsam {

std::string to_json(const ModelConfig& cfg) {
  nlohmann::ordered_json j;
  j["n"] = cfg.n;
  j["f_in"] = cfg.f_in;
  j["f_struct"] = cfg.f_struct;
  j["h_rnn"] = cfg.h_rnn;
  j["f_attn"] = cfg.f_attn;
  j["k_node"] = cfg.k_node;
  j["k_time"] = cfg.k_time;
  j["h_dec"] = cfg.h_dec;
  j["window"] = cfg.window;
  auto kinds = nlohmann::json::array();
  for (auto k : cfg.transforms) kinds.push_back(to_string(k));
  j["transforms"] = kinds;
  j["lr"] = cfg.lr;
  j["l2"] = cfg.l2;
  j["penalty_beta"] = cfg.penalty_beta;
  j["output_bias"] = cfg.output_bias;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    ModelConfig cfg;
    cfg.n = j.at("n").get<int>();
    cfg.f_in = j.at("f_in").get<int>();
    cfg.f_struct = j.at("f_struct").get<int>();
    cfg.h_rnn = j.at("h_rnn").get<int>();
    cfg.f_attn = j.at("f_attn").get<int>();
    cfg.k_node = j.at("k_node").get<int>();
    cfg.k_time = j.at("k_time").get<int>();
    cfg.h_dec = j.at("h_dec").get<int>();
    cfg.window = j.at("window").get<int>();
    cfg.transforms.clear();
    for (const auto& k : j.at("transforms")) cfg.transforms.push_back(parse_transform_kind(k.get<std::string>()));
    cfg.lr = j.at("lr").get<double>();
    cfg.l2 = j.at("l2").get<double>();
    cfg.penalty_beta = j.at("penalty_beta").get<double>();
    cfg.output_bias = j.value("output_bias", cfg.output_bias);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("malformed model config: ") + e.what());
  }
}

}  // namespace tsam
