#pragma once

#include "maptrix/maptrix_assembler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

namespace httplib {
class Server;
}

namespace maptrix {

struct ServiceConfig {
  LayoutConfig layout;
  Projection projection;
  StyleSpec style;
  /// Cached layouts kept per session.
  std::size_t cache_size = 16;
  /// Sessions are written here on shutdown and read back on start.
  std::optional<std::filesystem::path> snapshot_dir;
  /// Static assets (the browser explorer) served under "/".
  std::optional<std::filesystem::path> static_dir;
};

/// Sessions, selections and cached layouts behind the REST interface. The
/// handlers are plain methods so tests can drive them without sockets.
class FlowService {
 public:
  struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
  };

  explicit FlowService(ServiceConfig config = {});
  ~FlowService();
  FlowService(const FlowService&) = delete;
  FlowService& operator=(const FlowService&) = delete;

  /// POST /datasets. `destination_boundaries` switches to two-country mode.
  Response create_session(const std::string& flows_csv, const std::string& boundaries,
                          const std::optional<std::string>& destination_boundaries = std::nullopt);
  /// GET /sessions/{id}/layout
  Response get_layout(const std::string& session_id);
  /// PUT /sessions/{id}/selection with a JSON delta.
  Response put_selection(const std::string& session_id, const std::string& body);
  /// GET /sessions/{id}/svg
  Response get_svg(const std::string& session_id);
  Response health() const;

  /// Registers every route (and the static mount) on `server`.
  void install(httplib::Server& server);

  /// Writes every session to the snapshot directory, if configured.
  void snapshot() const;
  std::size_t session_count() const;

 private:
  struct Session;
  struct CachedLayout;

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<const CachedLayout> layout_for(Session& session, const SelectionState& selection);
  Response layout_response(const Session& session, const CachedLayout& cached, bool relayout) const;
  std::string open_session(std::shared_ptr<Session> session);
  void restore();

  ServiceConfig config_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace maptrix
