#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>

#include "deskcloud/core/error.hpp"

namespace deskcloud {

// Specialize with `static constexpr std::array<std::pair<E, std::string_view>, N> names`.
template <class E>
struct EnumNames;

template <class E>
concept NamedEnum = requires { EnumNames<E>::names; };

template <NamedEnum E>
constexpr std::string_view enum_name(E e) {
  for (const auto& [value, name] : EnumNames<E>::names)
    if (value == e) return name;
  return "?";
}

template <NamedEnum E>
E parse_enum(std::string_view text) {
  for (const auto& [value, name] : EnumNames<E>::names)
    if (name == text) return value;
  raise(ErrorCode::MalformedCommand, "unknown value '" + std::string(text) + "'");
}

}  // namespace deskcloud
