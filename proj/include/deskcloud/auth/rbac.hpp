#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "deskcloud/core/clock.hpp"
#include "deskcloud/core/id.hpp"
#include "deskcloud/core/json_support.hpp"

namespace deskcloud {

enum class Role { admin, user };
enum class Surface { framework, image, storage, network_remote };
enum class Action { view, modify };
enum class Decision { allow, deny };

template <>
struct EnumNames<Role> {
  static constexpr std::array<std::pair<Role, std::string_view>, 2> names{{{Role::admin, "admin"}, {Role::user, "user"}}};
};
template <>
struct EnumNames<Surface> {
  static constexpr std::array<std::pair<Surface, std::string_view>, 4> names{{
      {Surface::framework, "framework"},
      {Surface::image, "image"},
      {Surface::storage, "storage"},
      {Surface::network_remote, "network_remote"},
  }};
};
template <>
struct EnumNames<Action> {
  static constexpr std::array<std::pair<Action, std::string_view>, 2> names{{{Action::view, "view"}, {Action::modify, "modify"}}};
};
template <>
struct EnumNames<Decision> {
  static constexpr std::array<std::pair<Decision, std::string_view>, 2> names{{{Decision::allow, "allow"}, {Decision::deny, "deny"}}};
};

inline constexpr std::array<Surface, 4> kAllSurfaces{Surface::framework, Surface::image, Surface::storage,
                                                     Surface::network_remote};

struct User {
  Id id;
  std::string username;
  Role role = Role::user;
  std::set<Id> project_ids;
  std::string salt;
  std::string credential_hash;
};

struct Project {
  Id id;
  std::string name;
};

struct AuthToken {
  std::string token;
  Id user_id;
  std::set<Surface> surfaces;
  SimTime issued_at{};
  SimTime expires_at{};
};

// Who a resource belongs to. A resource without a creator (farms, pools) is
// never "own" for a user.
struct ResourceOwner {
  std::optional<Id> project_id;
  std::optional<Id> creator;
};

std::string credential_digest(const std::string& salt, const std::string& credential);

// Pure decision over a token and the user it names.
Decision check_access(const AuthToken& token, const User& user, SimTime now, Surface surface, Action action,
                      const ResourceOwner& owner);

class AuthRegistry {
 public:
  const User& add_user(Id id, const std::string& username, Role role, const std::string& credential,
                       std::set<Id> projects, std::string salt);
  // Stores a user whose credential digest was computed elsewhere.
  const User& add_user_record(User user);
  const Project& add_project(Id id, const std::string& name);
  void add_membership(const Id& user_id, const Id& project_id);

  // Throws UnknownUser or BadCredential; on success the token is registered.
  const AuthToken& authenticate(const std::string& username, const std::string& credential,
                                const std::set<Surface>& surfaces, SimTime now, Duration ttl, std::string token_value);
  // Registers a token without checking the credential (journal replay).
  const AuthToken& issue(const std::string& username, const std::set<Surface>& surfaces, SimTime now, Duration ttl,
                         std::string token_value);

  // Throws Unauthorized for unknown or expired tokens.
  const AuthToken& resolve(const std::string& token_value, SimTime now) const;
  const AuthToken* find_token(const std::string& token_value) const;
  void purge_expired(SimTime now);

  const User& user(const Id& id) const;
  const User* find_user(const std::string& username) const;
  const Project& project(const Id& id) const;
  const std::map<Id, User>& users() const { return users_; }
  const std::map<Id, Project>& projects() const { return projects_; }
  const std::map<std::string, AuthToken>& tokens() const { return tokens_; }

 private:
  std::map<Id, User> users_;
  std::map<Id, Project> projects_;
  std::map<std::string, AuthToken> tokens_;

  friend void to_json(Json& j, const AuthRegistry& r);
  friend void from_json(const Json& j, AuthRegistry& r);
};

void to_json(Json& j, const User& u);
void from_json(const Json& j, User& u);
void to_json(Json& j, const AuthToken& t);
void from_json(const Json& j, AuthToken& t);
void to_json(Json& j, const Project& p);
void from_json(const Json& j, Project& p);
// Public view of a user without credential material.
Json public_view(const User& u);

}  // namespace deskcloud
