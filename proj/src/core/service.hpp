#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core/lake.hpp"
#include "core/organization.hpp"

namespace httplib {
class Server;
}

namespace lakeorg {

/// Read-only JSON views over loaded organizations, independent of HTTP so
/// they can be tested directly. Each method returns nullopt for unknown ids.
class NavViews {
 public:
  NavViews(std::shared_ptr<const DataLake> lake, std::vector<Organization> orgs,
           std::optional<double> effectiveness = std::nullopt);

  std::size_t dimensions() const { return dims_.size(); }
  nlohmann::json summary(std::size_t dim) const;
  std::optional<nlohmann::json> node(std::size_t dim, StateId id) const;
  std::optional<nlohmann::json> table(const std::string& id) const;
  std::optional<nlohmann::json> attribute(const std::string& id) const;

  static constexpr std::size_t kSampleValues = 20;

 private:
  struct Dim {
    Organization org;
    std::vector<std::string> labels;
    std::vector<int> levels;
  };
  std::shared_ptr<const DataLake> lake_;
  std::vector<Dim> dims_;
  std::optional<double> effectiveness_;
};

/// HTTP front end: /api/org/summary, /api/node/{id}, /api/table/{id},
/// /api/attribute/{id}, optional static files at /. Node and summary accept
/// ?dim=N to pick a dimension.
class NavService {
 public:
  NavService(std::shared_ptr<const NavViews> views, std::optional<std::filesystem::path> static_dir);
  ~NavService();
  NavService(const NavService&) = delete;
  NavService& operator=(const NavService&) = delete;

  /// Binds and starts serving on a background thread; port 0 picks a free
  /// port. Throws io when the port cannot be bound.
  int start(const std::string& host, int port);
  void wait();
  void stop();
  int port() const { return port_; }

 private:
  std::shared_ptr<const NavViews> views_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace lakeorg
