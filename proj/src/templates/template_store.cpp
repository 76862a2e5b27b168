#include "deskcloud/templates/template_store.hpp"

namespace deskcloud {

namespace {

template <class T>
T lowered(T base, const std::optional<T>& value, const char* what) {
  if (!value) return base;
  if (*value > base)
    raise(ErrorCode::InvalidArgument, std::string("override may not raise ") + what + " above the template default");
  if (*value < 1) raise(ErrorCode::InvalidArgument, std::string("override ") + what + " must be >= 1");
  return *value;
}

}  // namespace

ResourceSpec merge(const ResourceSpec& defaults, const SpecOverride& o) {
  ResourceSpec s;
  s.vcpu = lowered(defaults.vcpu, o.vcpu, "vcpu");
  s.memory_gib = lowered(defaults.memory_gib, o.memory_gib, "memory_gib");
  s.disk_gib = lowered(defaults.disk_gib, o.disk_gib, "disk_gib");
  s.network_count = lowered(defaults.network_count, o.network_count, "network_count");
  return s;
}

void TemplateStore::add(Template t) {
  if (t.name.empty()) raise(ErrorCode::InvalidArgument, "template name must not be empty");
  validate(t.default_spec);
  if (t.origin == TemplateOrigin::preconfigured && t.software_stack.empty())
    raise(ErrorCode::InvalidArgument, "preconfigured templates need a software stack");
  for (const auto& [_, existing] : templates_)
    if (existing.name == t.name && existing.project_id == t.project_id)
      raise(ErrorCode::DuplicateName, "template name already used in this scope: " + t.name);
  templates_.emplace(t.id, std::move(t));
}

const Template& TemplateStore::get(const Id& id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) raise(ErrorCode::UnknownTemplate, "unknown template: " + id.value);
  return it->second;
}

void TemplateStore::update_spec(const Id& id, const ResourceSpec& spec) {
  validate(spec);
  get(id);
  templates_.at(id).default_spec = spec;
}

void TemplateStore::set_published(const Id& id, bool published) {
  get(id);
  templates_.at(id).published = published;
}

std::vector<Instance> TemplateStore::instantiate(const Id& template_id, int count, const Id& farm_id,
                                                 const SpecOverride& overrides, const Id& creator,
                                                 IdGenerator& ids, SimTime now) const {
  const Template& t = get(template_id);
  if (count < 0) raise(ErrorCode::InvalidArgument, "count must be >= 0");
  const ResourceSpec spec = merge(t.default_spec, overrides);
  std::vector<Instance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Instance inst;
    inst.id = ids.next(now);
    inst.template_id = template_id;
    inst.farm_id = farm_id;
    inst.spec = spec;
    inst.state = LifecycleState::Requested;
    inst.workload_class = t.default_workload_class;
    inst.created_at = now;
    inst.created_by = creator;
    out.push_back(std::move(inst));
  }
  return out;
}

void to_json(Json& j, const Template& t) {
  j = Json{{"id", t.id},
           {"name", t.name},
           {"owner_user_id", t.owner_user_id},
           {"project_id", t.project_id},
           {"origin", t.origin},
           {"os_label", t.os_label},
           {"software_stack", t.software_stack},
           {"default_spec", t.default_spec},
           {"default_workload_class", t.default_workload_class},
           {"published", t.published}};
}

void from_json(const Json& j, Template& t) {
  j.at("id").get_to(t.id);
  j.at("name").get_to(t.name);
  j.at("owner_user_id").get_to(t.owner_user_id);
  j.at("project_id").get_to(t.project_id);
  j.at("origin").get_to(t.origin);
  j.at("os_label").get_to(t.os_label);
  j.at("software_stack").get_to(t.software_stack);
  j.at("default_spec").get_to(t.default_spec);
  j.at("default_workload_class").get_to(t.default_workload_class);
  j.at("published").get_to(t.published);
}

void to_json(Json& j, const SpecOverride& o) {
  j = Json{{"vcpu", o.vcpu}, {"memory_gib", o.memory_gib}, {"disk_gib", o.disk_gib}, {"network_count", o.network_count}};
}

void from_json(const Json& j, SpecOverride& o) {
  o.vcpu = opt_field<int>(j, "vcpu");
  o.memory_gib = opt_field<std::int64_t>(j, "memory_gib");
  o.disk_gib = opt_field<std::int64_t>(j, "disk_gib");
  o.network_count = opt_field<int>(j, "network_count");
}

void to_json(Json& j, const TemplateStore& s) {
  j = Json::array();
  for (const auto& [_, t] : s.templates_) j.push_back(t);
}

void from_json(const Json& j, TemplateStore& s) {
  s.templates_.clear();
  for (const auto& t : j) {
    auto tpl = t.get<Template>();
    s.templates_.emplace(tpl.id, std::move(tpl));
  }
}

}  // namespace deskcloud
