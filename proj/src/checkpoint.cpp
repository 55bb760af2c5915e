#include "engage/checkpoint.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "engage/errors.hpp"
#include "engage/text.hpp"

namespace engage {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr const char* kMagic = "engage-checkpoint 1";

ordered_json config_to_json(const ModelConfig& c) {
  return {{"feature_dims", c.feature_dims},
          {"hidden_dim", c.hidden_dim},
          {"n_classes", c.n_classes},
          {"n_students", c.n_students},
          {"max_students", c.max_students},
          {"hyper_layers", c.hyper_layers},
          {"graph_layers", c.graph_layers},
          {"attention_enabled", c.attention_enabled},
          {"attention_per_layer", c.attention_per_layer},
          {"ablation", ablation_name(c.ablation)}};
}

ModelConfig config_from_json(const ordered_json& j) {
  ModelConfig c;
  try {
    c.feature_dims = j.at("feature_dims").get<std::array<int, kNumFeatureTypes>>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.n_classes = j.at("n_classes").get<int>();
    c.n_students = j.at("n_students").get<int>();
    c.max_students = j.at("max_students").get<int>();
    c.hyper_layers = j.at("hyper_layers").get<int>();
    c.graph_layers = j.at("graph_layers").get<int>();
    c.attention_enabled = j.at("attention_enabled").get<bool>();
    c.attention_per_layer = j.at("attention_per_layer").get<bool>();
    c.ablation = parse_ablation(j.at("ablation").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint: bad config record: ") + e.what());
  }
  return c;
}

}  // namespace

void save_checkpoint(ModelParameters& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("checkpoint: cannot open '" + path + "' for writing");
  out << kMagic << "\n";
  out << "config " << config_to_json(params.config).dump() << "\n";
  for (const TensorRef& ref : tensor_refs(params)) {
    const Matrix& m = *ref.tensor;
    out << "tensor " << ref.name << " " << m.rows << " " << m.cols << "\n";
    for (int r = 0; r < m.rows; ++r) {
      for (int c = 0; c < m.cols; ++c) {
        if (c > 0) out << " ";
        out << format_double(m.at(r, c));
      }
      out << "\n";
    }
  }
  if (!out) throw ValidationError("checkpoint: write to '" + path + "' failed");
}

ModelParameters load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("checkpoint: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw ValidationError("checkpoint: '" + path + "' missing header line");
  if (!std::getline(in, line) || line.rfind("config ", 0) != 0)
    throw ValidationError("checkpoint: missing config record");
  ordered_json config_json;
  try {
    config_json = ordered_json::parse(line.substr(7));
  } catch (const std::exception& e) {
    throw ValidationError(std::string("checkpoint: config parse error: ") + e.what());
  }
  ModelConfig config = config_from_json(config_json);
  ModelParameters params = ModelParameters::init(config, 0);

  for (const TensorRef& ref : tensor_refs(params)) {
    if (!std::getline(in, line))
      throw ValidationError("checkpoint: truncated before tensor '" + ref.name + "'");
    std::istringstream header(line);
    std::string tag, name;
    int rows = -1, cols = -1;
    header >> tag >> name >> rows >> cols;
    if (tag != "tensor" || name != ref.name)
      throw ValidationError("checkpoint: expected tensor '" + ref.name + "', found '" + line +
                            "'");
    if (rows != ref.tensor->rows || cols != ref.tensor->cols)
      throw ValidationError("checkpoint: tensor '" + ref.name + "' has shape " +
                            std::to_string(rows) + "x" + std::to_string(cols) +
                            ", model expects " + ref.tensor->shape_str());
    for (int r = 0; r < rows; ++r) {
      if (!std::getline(in, line))
        throw ValidationError("checkpoint: truncated inside tensor '" + ref.name + "'");
      std::istringstream row(line);
      std::string token;
      for (int c = 0; c < cols; ++c) {
        if (!(row >> token))
          throw ValidationError("checkpoint: tensor '" + ref.name + "' row " +
                                std::to_string(r) + " has fewer than " + std::to_string(cols) +
                                " values");
        double v = 0.0;
        if (!parse_double(token, v))
          throw ValidationError("checkpoint: tensor '" + ref.name + "' has non-numeric value '" +
                                token + "'");
        ref.tensor->at(r, c) = v;
      }
      if (row >> token)
        throw ValidationError("checkpoint: tensor '" + ref.name + "' row " + std::to_string(r) +
                              " has more than " + std::to_string(cols) + " values");
    }
  }
  if (std::getline(in, line) && !line.empty())
    throw ValidationError("checkpoint: unexpected trailing content '" + line + "'");
  return params;
}

}  // namespace engage
