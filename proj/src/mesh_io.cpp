#include "steklov/mesh.hpp"

namespace steklov {

using nlohmann::json;

json mesh_to_json(const Mesh& mesh) {
  json j;
  j["domain"] = mesh.domain.name();
  j["level"] = mesh.level;
  json verts = json::array();
  for (const auto& p : mesh.vertices) verts.push_back({p.x, p.y});
  j["vertices"] = std::move(verts);
  j["elements"] = mesh.elements;
  j["boundary_edges"] = mesh.boundary_edges;
  json top = json::array();
  json bottom = json::array();
  for (std::size_t v = 0; v < mesh.slit_tags.size(); ++v) {
    if (mesh.slit_tags[v] == SlitTag::Top) top.push_back(v);
    if (mesh.slit_tags[v] == SlitTag::Bottom) bottom.push_back(v);
  }
  j["slit_tags"] = {{"top", std::move(top)}, {"bottom", std::move(bottom)}};
  return j;
}

Mesh mesh_from_json(const json& j) {
  try {
    Mesh mesh;
    mesh.domain = DomainSpec::parse(j.at("domain").get<std::string>());
    mesh.level = j.value("level", 0);
    for (const auto& p : j.at("vertices")) mesh.vertices.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    mesh.elements = j.at("elements").get<std::vector<std::array<int, 3>>>();
    mesh.boundary_edges = j.at("boundary_edges").get<std::vector<std::array<int, 2>>>();

    const int nv = static_cast<int>(mesh.vertices.size());
    auto check = [&](int v) {
      if (v < 0 || v >= nv) throw ParameterError("mesh JSON references vertex " + std::to_string(v));
    };
    for (const auto& e : mesh.elements)
      for (int v : e) check(v);

    mesh.boundary_flags.assign(nv, false);
    for (const auto& be : mesh.boundary_edges) {
      check(be[0]);
      check(be[1]);
      mesh.boundary_flags[be[0]] = mesh.boundary_flags[be[1]] = true;
    }
    mesh.slit_tags.assign(nv, SlitTag::None);
    if (j.contains("slit_tags")) {
      const auto& tags = j.at("slit_tags");
      for (int v : tags.value("top", std::vector<int>{})) {
        check(v);
        mesh.slit_tags[v] = SlitTag::Top;
      }
      for (int v : tags.value("bottom", std::vector<int>{})) {
        check(v);
        mesh.slit_tags[v] = SlitTag::Bottom;
      }
    }
    return mesh;
  } catch (const json::exception& e) {
    throw ParameterError(std::string("malformed mesh JSON: ") + e.what());
  }
}

}  // namespace steklov
