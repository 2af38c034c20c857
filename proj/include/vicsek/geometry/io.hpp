#pragma once

#include <json.hpp>

#include "vicsek/geometry/subset.hpp"

namespace vicsek {

inline nlohmann::json to_json(const CableSystem& X) {
  nlohmann::json j;
  j["dimension"] = X.dimension();
  j["level"] = X.level();
  j["vertices"] = X.vertices();
  auto& cables = j["cables"] = nlohmann::json::array();
  for (const auto& c : X.cables()) cables.push_back({c.a, c.b});
  return j;
}

inline CableSystem cable_system_from_json(const nlohmann::json& j) {
  auto X = build_vicsek(j.at("dimension").get<int>(), j.at("level").get<int>());
  const auto& verts = j.at("vertices");
  const auto& cables = j.at("cables");
  if (verts.size() != static_cast<std::size_t>(X.num_vertices()) ||
      cables.size() != static_cast<std::size_t>(X.num_cables()))
    throw ContractError("serialized cable system has the wrong size");
  for (std::size_t v = 0; v < verts.size(); ++v)
    if (verts[v].get<LatticePoint>() != X.vertex(static_cast<int>(v)))
      throw ContractError("serialized vertex does not match the construction");
  for (std::size_t c = 0; c < cables.size(); ++c)
    if (cables[c][0].get<int>() != X.cable(static_cast<int>(c)).a ||
        cables[c][1].get<int>() != X.cable(static_cast<int>(c)).b)
      throw ContractError("serialized cable does not match the construction");
  return X;
}

inline nlohmann::json to_json(const Subset& S) {
  auto segs = nlohmann::json::array();
  for (const auto& g : S.segments()) segs.push_back({g.cable, g.lo, g.hi});
  return {{"segments", segs}};
}

inline Subset subset_from_json(const nlohmann::json& j) {
  std::vector<Segment> segs;
  for (const auto& s : j.at("segments"))
    segs.push_back({s[0].get<int>(), s[1].get<double>(), s[2].get<double>()});
  return Subset::from_segments(std::move(segs));
}

}  // namespace vicsek
