#pragma once

#include <string>
#include <variant>
#include <vector>

namespace psyrig {

struct Persona {
  std::string title;
  std::string surname;
  std::string group;

  // "female" for Ms./Mrs./Miss, "male" for Mr., "unspecified" otherwise.
  std::string gender_tag() const;
  // "title surname" with a single space.
  std::string render() const;

  bool operator==(const Persona&) const = default;
  auto operator<=>(const Persona&) const = default;
};

struct NameGroup {
  std::string name;
  std::vector<std::string> names;

  bool operator==(const NameGroup&) const = default;
};

// Titles crossed with grouped surname lists.
struct GeneratedPersonas {
  std::vector<std::string> titles;
  std::vector<NameGroup> groups;

  bool operator==(const GeneratedPersonas&) const = default;
};

struct PersonaSpec {
  std::variant<std::vector<Persona>, GeneratedPersonas> source;

  bool operator==(const PersonaSpec&) const = default;
};

// Explicit lists are returned as given. Generated specs yield every
// (title, surname) pair: groups in declared order, names in list order,
// titles innermost. Throws ConfigError on empty titles or name lists.
std::vector<Persona> expand_personas(const PersonaSpec& spec);

}  // namespace psyrig
