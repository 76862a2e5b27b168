#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deskcloud/core/id.hpp"
#include "deskcloud/core/types.hpp"

namespace deskcloud {

enum class TemplateOrigin { preconfigured, user_built };

template <>
struct EnumNames<TemplateOrigin> {
  static constexpr std::array<std::pair<TemplateOrigin, std::string_view>, 2> names{{
      {TemplateOrigin::preconfigured, "preconfigured"}, {TemplateOrigin::user_built, "user_built"}}};
};

struct Template {
  Id id;
  std::string name;
  Id owner_user_id;
  // Project scope for user-built templates; preconfigured ones are global.
  std::optional<Id> project_id;
  TemplateOrigin origin = TemplateOrigin::preconfigured;
  std::string os_label;
  std::vector<std::string> software_stack;
  ResourceSpec default_spec;
  WorkloadClass default_workload_class = WorkloadClass::development;
  bool published = false;
};

// Partial spec applied at instantiation. Values may only lower the
// template defaults.
struct SpecOverride {
  std::optional<int> vcpu;
  std::optional<std::int64_t> memory_gib;
  std::optional<std::int64_t> disk_gib;
  std::optional<int> network_count;
};

ResourceSpec merge(const ResourceSpec& defaults, const SpecOverride& overrides);

class TemplateStore {
 public:
  // Stores a template whose id is already assigned. DuplicateName when the
  // name is taken within the same project scope.
  void add(Template t);

  const Template& get(const Id& id) const;
  bool contains(const Id& id) const { return templates_.contains(id); }
  const std::map<Id, Template>& all() const { return templates_; }

  void update_spec(const Id& id, const ResourceSpec& spec);
  void set_published(const Id& id, bool published);

  // Builds `count` Requested instances. Instances copy the merged spec, so
  // later template edits never reach them.
  std::vector<Instance> instantiate(const Id& template_id, int count, const Id& farm_id,
                                    const SpecOverride& overrides, const Id& creator, IdGenerator& ids,
                                    SimTime now) const;

  friend void to_json(Json& j, const TemplateStore& s);
  friend void from_json(const Json& j, TemplateStore& s);

 private:
  std::map<Id, Template> templates_;
};

void to_json(Json& j, const Template& t);
void from_json(const Json& j, Template& t);
void to_json(Json& j, const SpecOverride& o);
void from_json(const Json& j, SpecOverride& o);

}  // namespace deskcloud
