#include "core/service.hpp"

#include <charconv>

#include <httplib.h>

#include "core/error.hpp"

namespace lakeorg {

using json = nlohmann::json;

NavViews::NavViews(std::shared_ptr<const DataLake> lake, std::vector<Organization> orgs,
                   std::optional<double> effectiveness)
    : lake_(std::move(lake)), effectiveness_(effectiveness) {
  if (orgs.empty()) fail(ErrorCode::invalid_argument, "no organization to serve");
  for (auto& org : orgs) {
    if (auto report = validate(org); !report.empty()) {
      fail(ErrorCode::validation, "cannot serve invalid organization: " + report.front());
    }
    Dim d{std::move(org), {}, {}};
    d.labels = labels(d.org, *lake_);
    d.levels = levels(d.org);
    dims_.push_back(std::move(d));
  }
}

json NavViews::summary(std::size_t dim) const {
  const Dim& d = dims_.at(dim);
  std::size_t leaves = 0;
  for (StateId id : d.org.ids()) leaves += d.org.state(id).kind == StateKind::leaf;
  json j = {{"root", d.org.root()},
            {"dimension", dim},
            {"dimensions", dims_.size()},
            {"gamma", d.org.gamma()},
            {"n_states", d.org.size()},
            {"n_leaves", leaves},
            {"n_tags", d.org.tags().size()},
            {"n_tables", lake_->tables().size()},
            {"n_attributes", lake_->attributes().size()}};
  j["effectiveness"] = effectiveness_ ? json(*effectiveness_) : json(nullptr);
  return j;
}

std::optional<json> NavViews::node(std::size_t dim, StateId id) const {
  if (dim >= dims_.size()) return std::nullopt;
  const Dim& d = dims_[dim];
  if (!d.org.exists(id)) return std::nullopt;
  const State& s = d.org.state(id);
  json children = json::array();
  for (StateId c : display_children(d.org, id)) {
    const State& cs = d.org.state(c);
    children.push_back({{"id", c},
                        {"label", d.labels[c]},
                        {"kind", kind_name(cs.kind)},
                        {"n_attributes", cs.attributes.size()}});
  }
  std::vector<std::string> tags;
  for (TagId t : s.tags) tags.push_back(lake_->tag_name(t));
  json j = {{"id", id},
            {"label", d.labels[id]},
            {"kind", kind_name(s.kind)},
            {"level", d.levels[id]},
            {"dimension", dim},
            {"parents", s.parents},
            {"children", std::move(children)},
            {"tags", tags},
            {"n_attributes", s.attributes.size()}};
  if (s.kind == StateKind::leaf) {
    const auto& attr = lake_->attribute(s.attributes.front());
    const auto& table = lake_->table(attr.table);
    j["attribute"] = {{"id", attr.id}, {"name", attr.name}};
    j["table"] = {{"id", table.id}, {"name", table.name}};
  }
  return j;
}

std::optional<json> NavViews::table(const std::string& id) const {
  auto t = lake_->find_table(id);
  if (!t) return std::nullopt;
  const auto& table = lake_->table(*t);
  std::vector<std::string> tags;
  for (TagId tag : table.tags) tags.push_back(lake_->tag_name(tag));
  json attrs = json::array();
  for (AttrIndex a : table.attributes) {
    attrs.push_back({{"id", lake_->attribute(a).id}, {"name", lake_->attribute(a).name}});
  }
  return json{{"id", table.id}, {"name", table.name}, {"tags", tags}, {"attributes", std::move(attrs)}};
}

std::optional<json> NavViews::attribute(const std::string& id) const {
  auto a = lake_->find_attribute(id);
  if (!a) return std::nullopt;
  const auto& attr = lake_->attribute(*a);
  const auto& table = lake_->table(attr.table);
  std::vector<std::string> tags;
  for (TagId tag : attr.tags) tags.push_back(lake_->tag_name(tag));
  const auto n = std::min(kSampleValues, attr.values.size());
  std::vector<std::string> sample(attr.values.begin(), attr.values.begin() + static_cast<std::ptrdiff_t>(n));
  return json{{"id", attr.id},
              {"name", attr.name},
              {"table", {{"id", table.id}, {"name", table.name}}},
              {"tags", tags},
              {"n_values", attr.values.size()},
              {"sample_values", sample}};
}

// --- HTTP --------------------------------------------------------------------------

namespace {

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_content(body.dump(), "application/json");
}

void not_found(httplib::Response& res, const std::string& what) {
  send(res, 404, json{{"error", what + " not found"}});
}

std::optional<std::size_t> parse_index(const std::string& text) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<std::size_t> dim_param(const httplib::Request& req) {
  if (!req.has_param("dim")) return 0;
  return parse_index(req.get_param_value("dim"));
}

}  // namespace

NavService::NavService(std::shared_ptr<const NavViews> views, std::optional<std::filesystem::path> static_dir)
    : views_(std::move(views)), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  // The default options add SO_REUSEPORT, which lets a second server share a
  // busy port silently.
  srv.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  auto views_ptr = views_;
  srv.Get("/api/org/summary", [views_ptr](const httplib::Request& req, httplib::Response& res) {
    auto dim = dim_param(req);
    if (!dim || *dim >= views_ptr->dimensions()) return not_found(res, "dimension");
    send(res, 200, views_ptr->summary(*dim));
  });
  srv.Get(R"(/api/node/([^/]+))", [views_ptr](const httplib::Request& req, httplib::Response& res) {
    auto dim = dim_param(req);
    auto id = parse_index(req.matches[1]);
    std::optional<json> view;
    if (dim && id && *id < kNoState) view = views_ptr->node(*dim, static_cast<StateId>(*id));
    if (!view) return not_found(res, "node " + std::string(req.matches[1]));
    send(res, 200, *view);
  });
  srv.Get(R"(/api/table/([^/]+))", [views_ptr](const httplib::Request& req, httplib::Response& res) {
    auto view = views_ptr->table(req.matches[1]);
    if (!view) return not_found(res, "table " + std::string(req.matches[1]));
    send(res, 200, *view);
  });
  srv.Get(R"(/api/attribute/([^/]+))", [views_ptr](const httplib::Request& req, httplib::Response& res) {
    auto view = views_ptr->attribute(req.matches[1]);
    if (!view) return not_found(res, "attribute " + std::string(req.matches[1]));
    send(res, 200, *view);
  });
  srv.Get(R"(/api/.*)", [](const httplib::Request& req, httplib::Response& res) {
    not_found(res, "endpoint " + req.path);
  });
  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      fail(ErrorCode::io, "static directory " + static_dir->string() + " not found");
    }
  }
}

NavService::~NavService() { stop(); }

int NavService::start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
  } else {
    port_ = server_->bind_to_port(host, port) ? port : -1;
  }
  if (port_ <= 0) fail(ErrorCode::io, "cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void NavService::wait() {
  if (thread_.joinable()) thread_.join();
}

void NavService::stop() {
  if (server_) server_->stop();
  wait();
}

}  // namespace lakeorg
