#include "aptraj/ssgp_io.hpp"

#include <fstream>
#include <stdexcept>

namespace aptraj {

using nlohmann::json;

json matrix_to_json(const MatrixXd& m) {
  json data = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

MatrixXd matrix_from_json(const json& j) {
  const Index rows = j.at("rows").get<Index>();
  const Index cols = j.at("cols").get<Index>();
  const json& data = j.at("data");
  if (static_cast<Index>(data.size()) != rows * cols)
    throw std::runtime_error("matrix_from_json: data length does not match shape");
  MatrixXd m(rows, cols);
  Index k = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  return m;
}

json vector_to_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

VectorXd vector_from_json(const json& j) {
  VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

json model_to_json(const SSGPModel& model) {
  json outputs = json::array();
  for (const OutputModel& out : model.outputs) {
    outputs.push_back(json{
        {"seed", out.map.seed},
        {"r", out.map.r},
        {"sigma_f", out.hyper.sigma_f},
        {"sigma_n", out.hyper.sigma_n},
        {"lengthscales", vector_to_json(out.hyper.lengthscales)},
        {"epsilon", matrix_to_json(out.map.epsilon)},
        {"chol_a", matrix_to_json(out.chol_a)},
        {"b", vector_to_json(out.b)},
        {"w", vector_to_json(out.w)},
        {"target_mean", out.target_mean},
        {"target_scale", out.target_scale},
    });
  }
  return json{{"format", "aptraj-ssgp"},
              {"version", 1},
              {"input_dim", model.input_dim},
              {"num_offline", model.num_offline},
              {"outputs", std::move(outputs)}};
}

SSGPModel model_from_json(const json& doc) {
  if (doc.value("format", std::string{}) != "aptraj-ssgp")
    throw std::runtime_error("model_from_json: not an aptraj-ssgp document");
  SSGPModel model;
  model.input_dim = doc.at("input_dim").get<Index>();
  model.num_offline = doc.at("num_offline").get<double>();
  for (const json& j : doc.at("outputs")) {
    OutputModel out;
    out.hyper.sigma_f = j.at("sigma_f").get<double>();
    out.hyper.sigma_n = j.at("sigma_n").get<double>();
    out.hyper.lengthscales = vector_from_json(j.at("lengthscales"));
    out.hyper.validate();
    out.map.seed = j.at("seed").get<std::uint64_t>();
    out.map.r = j.at("r").get<Index>();
    out.map.epsilon = matrix_from_json(j.at("epsilon"));
    out.map.lengthscales = out.hyper.lengthscales;
    out.chol_a = matrix_from_json(j.at("chol_a"));
    out.b = vector_from_json(j.at("b"));
    out.w = vector_from_json(j.at("w"));
    out.target_mean = j.at("target_mean").get<double>();
    out.target_scale = j.at("target_scale").get<double>();
    const Index nf = 2 * out.map.r;
    if (out.map.epsilon.rows() != out.map.r || out.map.epsilon.cols() != model.input_dim ||
        out.chol_a.rows() != nf || out.chol_a.cols() != nf || out.b.size() != nf || out.w.size() != nf)
      throw std::runtime_error("model_from_json: inconsistent output block shapes");
    model.outputs.push_back(std::move(out));
  }
  return model;
}

void save_model(const SSGPModel& model, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_model: cannot open " + path.string());
  os << model_to_json(model).dump(1) << '\n';
}

SSGPModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_model: cannot open " + path.string());
  return model_from_json(json::parse(is));
}

}  // namespace aptraj
