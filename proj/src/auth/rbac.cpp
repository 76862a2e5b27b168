#include "deskcloud/auth/rbac.hpp"

#include "deskcloud/core/error.hpp"
#include "deskcloud/core/hash.hpp"

namespace deskcloud {

std::string credential_digest(const std::string& salt, const std::string& credential) {
  return sha256_hex(salt + ":" + credential);
}

Decision check_access(const AuthToken& token, const User& user, SimTime now, Surface surface, Action action,
                      const ResourceOwner& owner) {
  if (token.user_id != user.id) return Decision::deny;
  if (now >= token.expires_at) return Decision::deny;
  if (!token.surfaces.contains(surface)) return Decision::deny;
  if (user.role == Role::admin) return Decision::allow;
  if (action == Action::view) return Decision::allow;
  const bool own_project = owner.project_id && user.project_ids.contains(*owner.project_id);
  const bool own_resource = owner.creator && *owner.creator == user.id;
  return own_project && own_resource ? Decision::allow : Decision::deny;
}

const User& AuthRegistry::add_user(Id id, const std::string& username, Role role, const std::string& credential,
                                   std::set<Id> projects, std::string salt) {
  User u{id, username, role, std::move(projects), salt, credential_digest(salt, credential)};
  return add_user_record(std::move(u));
}

const User& AuthRegistry::add_user_record(User user) {
  if (user.username.empty()) raise(ErrorCode::InvalidArgument, "username must not be empty");
  if (find_user(user.username)) raise(ErrorCode::DuplicateName, "username taken: " + user.username);
  for (const auto& p : user.project_ids)
    if (!projects_.contains(p)) raise(ErrorCode::NotFound, "unknown project: " + p.value);
  if (users_.contains(user.id)) raise(ErrorCode::Conflict, "user id exists: " + user.id.value);
  Id id = user.id;
  return users_.emplace(std::move(id), std::move(user)).first->second;
}

const Project& AuthRegistry::add_project(Id id, const std::string& name) {
  if (name.empty()) raise(ErrorCode::InvalidArgument, "project name must not be empty");
  for (const auto& [_, p] : projects_)
    if (p.name == name) raise(ErrorCode::DuplicateName, "project name taken: " + name);
  return projects_.emplace(id, Project{id, name}).first->second;
}

void AuthRegistry::add_membership(const Id& user_id, const Id& project_id) {
  auto it = users_.find(user_id);
  if (it == users_.end()) raise(ErrorCode::UnknownUser, "unknown user: " + user_id.value);
  if (!projects_.contains(project_id)) raise(ErrorCode::NotFound, "unknown project: " + project_id.value);
  it->second.project_ids.insert(project_id);
}

const User* AuthRegistry::find_user(const std::string& username) const {
  for (const auto& [_, u] : users_)
    if (u.username == username) return &u;
  return nullptr;
}

const User& AuthRegistry::user(const Id& id) const {
  auto it = users_.find(id);
  if (it == users_.end()) raise(ErrorCode::UnknownUser, "unknown user: " + id.value);
  return it->second;
}

const Project& AuthRegistry::project(const Id& id) const {
  auto it = projects_.find(id);
  if (it == projects_.end()) raise(ErrorCode::NotFound, "unknown project: " + id.value);
  return it->second;
}

const AuthToken& AuthRegistry::issue(const std::string& username, const std::set<Surface>& surfaces, SimTime now,
                                     Duration ttl, std::string token_value) {
  const User* u = find_user(username);
  if (!u) raise(ErrorCode::UnknownUser, "unknown user: " + username);
  if (surfaces.empty()) raise(ErrorCode::InvalidArgument, "at least one surface must be requested");
  if (ttl <= Duration::zero()) raise(ErrorCode::InvalidArgument, "token ttl must be positive");
  AuthToken t{token_value, u->id, surfaces, now, now + ttl};
  auto [it, inserted] = tokens_.insert_or_assign(std::move(token_value), std::move(t));
  (void)inserted;
  return it->second;
}

const AuthToken& AuthRegistry::authenticate(const std::string& username, const std::string& credential,
                                            const std::set<Surface>& surfaces, SimTime now, Duration ttl,
                                            std::string token_value) {
  const User* u = find_user(username);
  if (!u) raise(ErrorCode::UnknownUser, "unknown user: " + username);
  if (credential_digest(u->salt, credential) != u->credential_hash)
    raise(ErrorCode::BadCredential, "credential rejected for " + username);
  return issue(username, surfaces, now, ttl, std::move(token_value));
}

const AuthToken* AuthRegistry::find_token(const std::string& token_value) const {
  auto it = tokens_.find(token_value);
  return it == tokens_.end() ? nullptr : &it->second;
}

const AuthToken& AuthRegistry::resolve(const std::string& token_value, SimTime now) const {
  const AuthToken* t = find_token(token_value);
  if (!t) raise(ErrorCode::Unauthorized, "unknown token");
  if (now >= t->expires_at) raise(ErrorCode::Unauthorized, "token expired");
  return *t;
}

void AuthRegistry::purge_expired(SimTime now) {
  std::erase_if(tokens_, [&](const auto& kv) { return now >= kv.second.expires_at; });
}

void to_json(Json& j, const User& u) {
  j = Json{{"id", u.id},     {"username", u.username}, {"role", u.role}, {"project_ids", u.project_ids},
           {"salt", u.salt}, {"credential_hash", u.credential_hash}};
}

void from_json(const Json& j, User& u) {
  j.at("id").get_to(u.id);
  j.at("username").get_to(u.username);
  j.at("role").get_to(u.role);
  j.at("project_ids").get_to(u.project_ids);
  j.at("salt").get_to(u.salt);
  j.at("credential_hash").get_to(u.credential_hash);
}

Json public_view(const User& u) {
  return Json{{"id", u.id}, {"username", u.username}, {"role", u.role}, {"project_ids", u.project_ids}};
}

void to_json(Json& j, const AuthToken& t) {
  j = Json{{"token", t.token}, {"user_id", t.user_id}, {"surfaces", t.surfaces}, {"issued_at", t.issued_at}, {"expires_at", t.expires_at}};
}

void from_json(const Json& j, AuthToken& t) {
  j.at("token").get_to(t.token);
  j.at("user_id").get_to(t.user_id);
  j.at("surfaces").get_to(t.surfaces);
  j.at("issued_at").get_to(t.issued_at);
  j.at("expires_at").get_to(t.expires_at);
}

void to_json(Json& j, const Project& p) { j = Json{{"id", p.id}, {"name", p.name}}; }

void from_json(const Json& j, Project& p) {
  j.at("id").get_to(p.id);
  j.at("name").get_to(p.name);
}

void to_json(Json& j, const AuthRegistry& r) {
  Json users = Json::array(), projects = Json::array(), tokens = Json::array();
  for (const auto& [_, u] : r.users_) users.push_back(u);
  for (const auto& [_, p] : r.projects_) projects.push_back(p);
  for (const auto& [_, t] : r.tokens_) tokens.push_back(t);
  j = Json{{"users", users}, {"projects", projects}, {"tokens", tokens}};
}

void from_json(const Json& j, AuthRegistry& r) {
  r = AuthRegistry{};
  for (const auto& u : j.at("users")) {
    auto user = u.get<User>();
    r.users_.emplace(user.id, std::move(user));
  }
  for (const auto& p : j.at("projects")) {
    auto proj = p.get<Project>();
    r.projects_.emplace(proj.id, std::move(proj));
  }
  for (const auto& t : j.at("tokens")) {
    auto tok = t.get<AuthToken>();
    r.tokens_.emplace(tok.token, std::move(tok));
  }
}

}  // namespace deskcloud
