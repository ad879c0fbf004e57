#include "idon/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "idon/errors.hpp"

namespace idon::ckpt {

using nlohmann::json;

namespace {

json mlp_to_json(const nets::MlpParams& m) {
  json layers = json::array();
  for (const auto& l : m.layers) {
    json w = json::array();
    for (int i = 0; i < l.w.rows; ++i)
      w.push_back(std::vector<double>(l.w.row(i), l.w.row(i) + l.w.cols));
    layers.push_back({{"w", std::move(w)}, {"b", l.b}});
  }
  return layers;
}

nets::MlpParams mlp_from_json(const json& layers) {
  nets::MlpParams m;
  for (const json& lj : layers) {
    nets::MlpLayer l;
    const json& w = lj.at("w");
    const int rows = static_cast<int>(w.size());
    const int cols = rows > 0 ? static_cast<int>(w[0].size()) : 0;
    l.w = Mat(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) l.w(i, j) = w[i][j].get<double>();
    l.b = lj.at("b").get<Vec>();
    m.layers.push_back(std::move(l));
  }
  return m;
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  json j;
  j["format"] = "idon-checkpoint";
  j["version"] = 1;
  j["problem"] = c.problem;
  j["spec"] = {{"dim", c.spec.dim},
               {"coord_dim", c.spec.coord_dim},
               {"branch_blocks", c.spec.branch_blocks},
               {"subnet_layers", c.spec.subnet_layers},
               {"trunk_layers", c.spec.trunk_layers},
               {"trunk_width", c.spec.trunk_width}};
  j["seed"] = c.seed;
  j["iteration"] = c.iteration;
  j["lr_scale"] = c.lr_scale;
  j["eps_lsq"] = c.eps_lsq;
  j["detach_trunk"] = c.detach_trunk;
  j["log_scale_bound"] = c.log_scale_bound;
  j["trunk"] = mlp_to_json(c.params.trunk);
  json blocks = json::array();
  for (const auto& b : c.params.branch.blocks)
    blocks.push_back({{"k", mlp_to_json(b.k_net)}, {"r", mlp_to_json(b.r_net)}});
  j["branch"] = std::move(blocks);
  if (!c.adam_m.empty()) {
    j["adam_m"] = c.adam_m;
    j["adam_v"] = c.adam_v;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path);
  out << j.dump(1);
  out << "\n";
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint " + path + ": " + e.what());
  }
  if (j.value("format", "") != "idon-checkpoint")
    throw IoError("not an idon checkpoint: " + path);
  Checkpoint c;
  c.problem = j.at("problem").get<std::string>();
  const json& s = j.at("spec");
  c.spec.dim = s.at("dim").get<int>();
  c.spec.coord_dim = s.at("coord_dim").get<int>();
  c.spec.branch_blocks = s.at("branch_blocks").get<int>();
  c.spec.subnet_layers = s.at("subnet_layers").get<int>();
  c.spec.trunk_layers = s.at("trunk_layers").get<int>();
  c.spec.trunk_width = s.at("trunk_width").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.iteration = j.at("iteration").get<int>();
  c.lr_scale = j.at("lr_scale").get<double>();
  c.eps_lsq = j.at("eps_lsq").get<double>();
  c.detach_trunk = j.at("detach_trunk").get<bool>();
  c.log_scale_bound = j.value("log_scale_bound", nets::kLogScaleBound);
  c.params.trunk = mlp_from_json(j.at("trunk"));
  for (const json& bj : j.at("branch")) {
    nets::CouplingBlockParams b;
    b.k_net = mlp_from_json(bj.at("k"));
    b.r_net = mlp_from_json(bj.at("r"));
    c.params.branch.blocks.push_back(std::move(b));
  }
  if (j.contains("adam_m")) {
    c.adam_m = j.at("adam_m").get<Vec>();
    c.adam_v = j.at("adam_v").get<Vec>();
  }
  return c;
}

}  // namespace idon::ckpt
