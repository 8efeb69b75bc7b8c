#include "maptrix/flow_service.hpp"

#include "maptrix/errors.hpp"
#include "maptrix/layout_json.hpp"
#include "maptrix/svg_renderer.hpp"

#include <httplib.h>

#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>

namespace maptrix {

using nlohmann::json;

struct FlowService::CachedLayout {
  MapTrixLayout layout;
  json body;
  std::string hash;
};

struct FlowService::Session {
  std::string id;
  std::string flows_csv;
  std::string boundaries;
  std::optional<std::string> destination_boundaries;
  LayoutMode mode = LayoutMode::same_country;
  std::shared_ptr<const FlowDataset> dataset;
  std::shared_ptr<GeometryCache> geometry = std::make_shared<GeometryCache>();

  std::mutex mutex;  // serialises everything below
  SelectionState selection;
  std::map<std::string, std::shared_ptr<const CachedLayout>> layouts;
  std::deque<std::string> recent;
};

namespace {

FlowService::Response json_response(int status, const json& body) {
  return {status, "application/json", body.dump()};
}

FlowService::Response error_response(const Error& e) {
  json body{{"error", e.name()}, {"message", e.what()}};
  if (const auto* ingest = dynamic_cast<const IngestError*>(&e)) body["unmatched"] = ingest->unmatched_ids();
  if (const auto* steep = dynamic_cast<const SteepLeaderError*>(&e)) body["min_k"] = steep->min_k();
  return json_response(400, body);
}

FlowService::Response not_found(const std::string& id) {
  return json_response(404, {{"error", "NotFound"}, {"message", "unknown session '" + id + "'"}});
}

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

/// Range and groups decide the layout; highlights never do.
std::string layout_key(const SelectionState& s) {
  json range = nullptr;
  if (s.range) range = json::array({(*s.range)[0], (*s.range)[1]});
  return json{{"range", range}, {"groups", groups_to_json(s.groups)}}.dump();
}

void check_highlights(const FlowDataset& data, const std::vector<Highlight>& highlights) {
  for (const auto& h : highlights) {
    if (h.kind != Highlight::Kind::destination && !data.origin_index(h.origin_id)) {
      throw ValidationError("highlight names unknown origin '" + h.origin_id + "'");
    }
    if (h.kind != Highlight::Kind::origin && !data.destination_index(h.destination_id)) {
      throw ValidationError("highlight names unknown destination '" + h.destination_id + "'");
    }
  }
}

}  // namespace

FlowService::FlowService(ServiceConfig config) : config_(std::move(config)) {
  validate(config_.layout);
  if (config_.cache_size == 0) config_.cache_size = 1;
  restore();
}

FlowService::~FlowService() = default;

std::shared_ptr<FlowService::Session> FlowService::find(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

std::size_t FlowService::session_count() const {
  std::shared_lock lock(sessions_mutex_);
  return sessions_.size();
}

std::shared_ptr<const FlowService::CachedLayout> FlowService::layout_for(Session& session,
                                                                         const SelectionState& selection) {
  const std::string key = layout_key(selection);
  if (auto it = session.layouts.find(key); it != session.layouts.end()) return it->second;

  const std::string base_key = layout_key(SelectionState{});
  auto cached = std::make_shared<CachedLayout>();
  if (key == base_key) {
    cached->layout = session.mode == LayoutMode::same_country
                         ? layout(session.dataset, config_.layout, session.geometry)
                         : layout_two_country(session.dataset, config_.layout, session.geometry);
  } else {
    cached->layout = relayout(layout_for(session, SelectionState{})->layout, selection);
  }
  cached->body = layout_to_json(cached->layout);
  cached->hash = hash_hex(layout_hash(cached->body));

  session.layouts.emplace(key, cached);
  session.recent.push_back(key);
  // The unfiltered layout stays; it is the base for every relayout.
  while (session.recent.size() > config_.cache_size) {
    auto victim = std::find_if(session.recent.begin(), session.recent.end(),
                               [&](const std::string& k) { return k != base_key; });
    if (victim == session.recent.end()) break;
    session.layouts.erase(*victim);
    session.recent.erase(victim);
  }
  return cached;
}

FlowService::Response FlowService::layout_response(const Session& session, const CachedLayout& cached,
                                                   bool relayout) const {
  return json_response(200, {{"session", session.id},
                             {"version", session.selection.version},
                             {"relayout", relayout},
                             {"layout_hash", cached.hash},
                             {"selection", selection_to_json(session.selection)},
                             {"layout", cached.body}});
}

std::string FlowService::open_session(std::shared_ptr<Session> session) {
  std::istringstream flows(session->flows_csv);
  std::istringstream bounds(session->boundaries);
  if (session->destination_boundaries) {
    std::istringstream dest(*session->destination_boundaries);
    session->dataset = std::make_shared<const FlowDataset>(load_two_country(flows, bounds, dest, config_.projection));
    session->mode = LayoutMode::two_country;
  } else {
    session->dataset = std::make_shared<const FlowDataset>(load_dataset(flows, bounds, config_.projection));
    session->mode = LayoutMode::same_country;
  }
  {
    std::lock_guard lock(session->mutex);
    layout_for(*session, SelectionState{});
    if (session->selection.range || !session->selection.groups.empty()) layout_for(*session, session->selection);
  }
  std::unique_lock lock(sessions_mutex_);
  if (session->id.empty()) session->id = new_session_id();
  sessions_[session->id] = session;
  return session->id;
}

FlowService::Response FlowService::create_session(const std::string& flows_csv, const std::string& boundaries,
                                                  const std::optional<std::string>& destination_boundaries) {
  auto session = std::make_shared<Session>();
  session->flows_csv = flows_csv;
  session->boundaries = boundaries;
  session->destination_boundaries = destination_boundaries;
  try {
    const std::string id = open_session(session);
    return json_response(201, {{"session", id}, {"version", 0}, {"mode", to_string(session->mode)}});
  } catch (const Error& e) {
    return error_response(e);
  }
}

FlowService::Response FlowService::get_layout(const std::string& session_id) {
  auto session = find(session_id);
  if (!session) return not_found(session_id);
  std::lock_guard lock(session->mutex);
  try {
    return layout_response(*session, *layout_for(*session, session->selection), false);
  } catch (const Error& e) {
    return error_response(e);
  }
}

FlowService::Response FlowService::put_selection(const std::string& session_id, const std::string& body) {
  auto session = find(session_id);
  if (!session) return not_found(session_id);
  const json delta = json::parse(body, nullptr, false);
  if (delta.is_discarded() || !delta.is_object()) {
    return error_response(ValidationError("selection body must be a JSON object"));
  }
  std::lock_guard lock(session->mutex);
  const auto current = session->selection.version;
  if (delta.contains("base_version")) {
    const auto& base = delta.at("base_version");
    if (!base.is_number_unsigned() && !base.is_number_integer()) {
      return error_response(ValidationError("base_version must be an integer"));
    }
    if (base.get<std::int64_t>() != static_cast<std::int64_t>(current)) {
      return json_response(409, {{"error", "VersionConflict"},
                                 {"message", "selection changed since base_version"},
                                 {"current_version", current}});
    }
  }
  try {
    SelectionState next = session->selection;
    if (delta.contains("range")) {
      const auto& r = delta.at("range");
      if (r.is_null()) {
        next.range.reset();
      } else if (r.is_array() && r.size() == 2 && r[0].is_number() && r[1].is_number()) {
        const double lo = r[0].get<double>();
        const double hi = r[1].get<double>();
        if (!(lo >= 0.0)) throw RangeError("range lower bound must be >= 0");
        if (lo > hi) throw RangeError("range lower bound exceeds upper bound");
        next.range = std::array<double, 2>{lo, hi};
      } else {
        throw ValidationError("range must be null or [lo, hi]");
      }
    }
    if (delta.contains("groups")) next.groups = groups_from_json(delta.at("groups"));
    if (delta.contains("highlights")) next.highlights = highlights_from_json(delta.at("highlights"));

    const bool relayout = layout_key(next) != layout_key(session->selection);
    auto cached = layout_for(*session, next);
    check_highlights(*cached->layout.dataset, next.highlights);
    next.version = current + 1;
    session->selection = std::move(next);
    return layout_response(*session, *cached, relayout);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return error_response(ValidationError(std::string("bad selection: ") + e.what()));
  }
}

FlowService::Response FlowService::get_svg(const std::string& session_id) {
  auto session = find(session_id);
  if (!session) return not_found(session_id);
  std::lock_guard lock(session->mutex);
  try {
    auto cached = layout_for(*session, session->selection);
    return {200, "image/svg+xml", render(cached->layout, config_.style, &session->selection)};
  } catch (const Error& e) {
    return error_response(e);
  }
}

FlowService::Response FlowService::health() const {
  return json_response(200, {{"status", "ok"}, {"sessions", session_count()}});
}

void FlowService::install(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type.c_str());
  };
  server.Post("/datasets", [this, reply](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("flows") || !req.has_file("boundaries")) {
      reply(res, error_response(ValidationError("expected multipart fields 'flows' and 'boundaries'")));
      return;
    }
    std::optional<std::string> dest;
    if (req.has_file("dest_boundaries")) dest = req.get_file_value("dest_boundaries").content;
    reply(res, create_session(req.get_file_value("flows").content, req.get_file_value("boundaries").content, dest));
  });
  server.Get(R"(/sessions/([^/]+)/layout)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_layout(req.matches[1]));
  });
  server.Put(R"(/sessions/([^/]+)/selection)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, put_selection(req.matches[1], req.body));
  });
  server.Get(R"(/sessions/([^/]+)/svg)", [this, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_svg(req.matches[1]));
  });
  server.Get("/healthz", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  if (config_.static_dir) server.set_mount_point("/", config_.static_dir->string());
}

void FlowService::snapshot() const {
  if (!config_.snapshot_dir) return;
  std::filesystem::create_directories(*config_.snapshot_dir);
  std::shared_lock lock(sessions_mutex_);
  for (const auto& [id, session] : sessions_) {
    std::lock_guard session_lock(session->mutex);
    json j{{"id", id},
           {"flows_csv", session->flows_csv},
           {"boundaries", session->boundaries},
           {"destination_boundaries", session->destination_boundaries ? json(*session->destination_boundaries) : json()},
           {"selection", selection_to_json(session->selection)}};
    std::ofstream out(*config_.snapshot_dir / (id + ".json"));
    out << j.dump();
  }
}

void FlowService::restore() {
  if (!config_.snapshot_dir || !std::filesystem::is_directory(*config_.snapshot_dir)) return;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*config_.snapshot_dir)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    try {
      std::ifstream in(path);
      const json j = json::parse(in);
      auto session = std::make_shared<Session>();
      session->id = j.at("id").get<std::string>();
      session->flows_csv = j.at("flows_csv").get<std::string>();
      session->boundaries = j.at("boundaries").get<std::string>();
      if (!j.at("destination_boundaries").is_null()) {
        session->destination_boundaries = j.at("destination_boundaries").get<std::string>();
      }
      const auto& sel = j.at("selection");
      if (!sel.at("range").is_null()) {
        session->selection.range = std::array<double, 2>{sel.at("range")[0].get<double>(), sel.at("range")[1].get<double>()};
      }
      session->selection.groups = groups_from_json(sel.at("groups"));
      session->selection.highlights = highlights_from_json(sel.at("highlights"));
      session->selection.version = sel.at("version").get<std::uint64_t>();
      open_session(session);
    } catch (const std::exception& e) {
      std::cerr << "skipping snapshot " << path << ": " << e.what() << '\n';
    }
  }
}

}  // namespace maptrix
