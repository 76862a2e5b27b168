#pragma once

#include <optional>

#include "json.hpp"  // vendored nlohmann/json

#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/enum_names.hpp"
#include "deskcloud/core/id.hpp"

namespace deskcloud {

using Json = nlohmann::json;

inline void to_json(Json& j, const Id& id) { j = id.value; }
inline void from_json(const Json& j, Id& id) { id.value = j.get<std::string>(); }

template <NamedEnum E>
void to_json(Json& j, E e) {
  j = std::string(enum_name(e));
}
template <NamedEnum E>
void from_json(const Json& j, E& e) {
  e = parse_enum<E>(j.get<std::string>());
}

// Reads an optional member; absent and null both mean "not set".
template <class T>
std::optional<T> opt_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<T>();
}

template <class T>
T field_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace deskcloud

namespace nlohmann {

template <class T>
struct adl_serializer<std::optional<T>> {
  static void to_json(json& j, const std::optional<T>& v) {
    if (v)
      j = *v;
    else
      j = nullptr;
  }
  static void from_json(const json& j, std::optional<T>& v) {
    if (j.is_null())
      v.reset();
    else
      v = j.get<T>();
  }
};

template <>
struct adl_serializer<deskcloud::SimTime> {
  static void to_json(json& j, deskcloud::SimTime t) { j = deskcloud::to_ms(t); }
  static void from_json(const json& j, deskcloud::SimTime& t) {
    t = deskcloud::sim_time_ms(j.get<std::int64_t>());
  }
};

template <>
struct adl_serializer<deskcloud::Duration> {
  static void to_json(json& j, deskcloud::Duration d) { j = d.count(); }
  static void from_json(const json& j, deskcloud::Duration& d) {
    d = deskcloud::Duration{j.get<std::int64_t>()};
  }
};

}  // namespace nlohmann
