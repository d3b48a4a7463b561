#include "psyrig/persona.hpp"

#include "psyrig/error.hpp"

namespace psyrig {

std::string Persona::gender_tag() const {
  if (title == "Ms." || title == "Mrs." || title == "Miss" || title == "Ms") return "female";
  if (title == "Mr." || title == "Mr") return "male";
  return "unspecified";
}

std::string Persona::render() const { return title + " " + surname; }

std::vector<Persona> expand_personas(const PersonaSpec& spec) {
  if (const auto* list = std::get_if<std::vector<Persona>>(&spec.source)) return *list;

  const auto& gen = std::get<GeneratedPersonas>(spec.source);
  if (gen.titles.empty()) throw ConfigError("personas.titles", "no titles given");
  if (gen.groups.empty()) throw ConfigError("personas.groups", "no name groups given");
  std::vector<Persona> out;
  for (std::size_t g = 0; g < gen.groups.size(); ++g) {
    const auto& group = gen.groups[g];
    if (group.names.empty()) {
      throw ConfigError("personas.groups[" + std::to_string(g) + "].names",
                        "empty name list");
    }
    for (const auto& surname : group.names) {
      for (const auto& title : gen.titles) out.push_back({title, surname, group.name});
    }
  }
  return out;
}

}  // namespace psyrig
