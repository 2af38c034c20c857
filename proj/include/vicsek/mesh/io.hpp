#pragma once

#include <iomanip>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <string>

#include "vicsek/mesh/mesh.hpp"

namespace vicsek {

inline void write_csv(std::ostream& os, const MeshFunction& u) {
  os << "node,value\n" << std::setprecision(17);
  for (Eigen::Index i = 0; i < u.values.size(); ++i) os << i << ',' << u.values[i] << '\n';
}

inline MeshFunction read_csv(std::istream& is, std::shared_ptr<const Mesh> mesh) {
  std::string line;
  std::getline(is, line);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh->num_nodes());
  std::vector<bool> seen(mesh->num_nodes(), false);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto comma = line.find(',');
    int i = std::stoi(line.substr(0, comma));
    if (i < 0 || i >= mesh->num_nodes()) throw ContractError("csv node id out of range");
    v[i] = std::stod(line.substr(comma + 1));
    seen[i] = true;
  }
  for (bool b : seen)
    if (!b) throw ContractError("csv is missing nodes");
  return {std::move(mesh), std::move(v)};
}

inline nlohmann::json to_json(const MeshFunction& u) {
  return {{"cables_per_level", u.mesh->system().num_cables()},
          {"segments_per_cable", u.mesh->per_cable()},
          {"nodes", u.mesh->num_nodes()},
          {"values", std::vector<double>(u.values.data(), u.values.data() + u.values.size())}};
}

/// One "row col value" line per stored entry.
inline void write_triplets(std::ostream& os, const Eigen::SparseMatrix<double>& K) {
  os << std::setprecision(17);
  for (int k = 0; k < K.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(K, k); it; ++it)
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace vicsek
