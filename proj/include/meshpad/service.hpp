#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "meshpad/base64.hpp"
#include "meshpad/codec.hpp"
#include "meshpad/counting_model.hpp"
#include "meshpad/deletion.hpp"
#include "meshpad/editgen.hpp"
#include "meshpad/obj_io.hpp"
#include "meshpad/sketch.hpp"
#include "meshpad/token_io.hpp"

namespace meshpad::service {

/// Error carrying the HTTP status it maps to.
class ServiceError : public Error {
 public:
  ServiceError(int status, const std::string& message) : Error(message), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

inline constexpr int kBadRequest = 400;
inline constexpr int kNotFound = 404;
inline constexpr int kConflict = 409;
inline constexpr int kUnprocessable = 422;

enum class EditKind { Add, Delete };

inline const char* edit_kind_name(EditKind k) { return k == EditKind::Add ? "add" : "delete"; }

inline EditKind parse_edit_kind(const std::string& s) {
  if (s == "add") return EditKind::Add;
  if (s == "delete") return EditKind::Delete;
  throw ServiceError(kBadRequest, "kind must be \"add\" or \"delete\"");
}

struct EditRequest {
  EditKind kind = EditKind::Add;
  SketchImage sketch;
};

/// Pre-edit state plus a note of the edit that replaced it.
struct Snapshot {
  QuantizedMesh mesh;
  CameraPose camera;
  SketchImage sketch;
  std::string kind;
  std::string backend;
  bool truncated = false;

  friend bool operator==(const Snapshot&, const Snapshot&) = default;
};

struct SessionState {
  std::string id;
  QuantizedMesh mesh;
  CameraPose camera;
  SketchImage sketch;
  std::vector<Snapshot> history;  // oldest first

  friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct AdditionResult {
  QuantizedMesh added;
  DecodeTrace trace;
};

/// Produces the triangles an addition sketch asks for, given the current mesh.
class AdditionBackend {
 public:
  virtual ~AdditionBackend() = default;
  virtual std::string name() const = 0;
  virtual AdditionResult generate(const QuantizedMesh& kept, const SketchImage& sketch, const DecodeConfig& cfg) const = 0;
};

namespace detail {

inline AdditionResult run_decode(const SequenceModel& model, const Speculator* speculator, const QuantizedMesh& kept,
                                 const SketchImage& sketch, DecodeConfig cfg) {
  if (cfg.speculate && speculator == nullptr) cfg.speculate = false;
  const TokenSequence prompt = addition_prompt(kept);
  Condition condition;
  condition.sketch = &sketch;
  AdditionResult r;
  r.trace = generate_addition(model, speculator, prompt, condition, cfg);
  if (!fragment_aligned(r.trace.tokens)) throw ServiceError(kUnprocessable, "generated fragment is not vertex aligned");
  r.added = decode_continuation(prompt.tokens, r.trace.tokens, kept.bins());
  return r;
}

}  // namespace detail

/// Replays a fixed target: whatever the fixture holds beyond the current mesh
/// is generated through the oracle model.
class OracleBackend : public AdditionBackend {
 public:
  explicit OracleBackend(QuantizedMesh fixture) : fixture_(std::move(fixture)) {}

  std::string name() const override { return "oracle"; }

  AdditionResult generate(const QuantizedMesh& kept, const SketchImage& sketch, const DecodeConfig& cfg) const override {
    if (kept.bins() != fixture_.bins()) throw ServiceError(kUnprocessable, "fixture and session disagree on bins");
    const auto pair = oracle_model(addition_target(kept, difference(fixture_, kept)));
    return detail::run_decode(*pair.model, pair.speculator.get(), kept, sketch, cfg);
  }

 private:
  QuantizedMesh fixture_;
};

class CountingBackend : public AdditionBackend {
 public:
  CountingBackend(std::shared_ptr<const CountingModel> model, std::shared_ptr<const CountingSpeculator> speculator)
      : model_(std::move(model)), speculator_(std::move(speculator)) {}

  std::string name() const override { return "counting"; }

  AdditionResult generate(const QuantizedMesh& kept, const SketchImage& sketch, const DecodeConfig& cfg) const override {
    if (kept.bins() != model_->bins()) throw ServiceError(kUnprocessable, "model and session disagree on bins");
    return detail::run_decode(*model_, speculator_.get(), kept, sketch, cfg);
  }

 private:
  std::shared_ptr<const CountingModel> model_;
  std::shared_ptr<const CountingSpeculator> speculator_;
};

struct ServiceConfig {
  std::filesystem::path data_dir;  // empty: in-memory only
  std::size_t history_limit = 32;
  int bins = kDefaultBins;
  DecodeConfig decode{};
  GeometricDeletionParams deletion{std::nullopt, 4, false};  // through-deletion by default
  std::shared_ptr<const AdditionBackend> backend;
};

struct EditOutcome {
  SessionState state;
  bool truncated = false;
  std::size_t faces_added = 0;
  std::size_t faces_removed = 0;
};

/// Sessions keyed by id. Mutations of one session are serialized; readers see
/// only committed states. With a data directory every commit is written to
/// disk first, so a failed write leaves the session untouched.
class SessionStore {
 public:
  explicit SessionStore(ServiceConfig cfg) : cfg_(std::move(cfg)), id_rng_(std::random_device{}()) {
    if (!cfg_.data_dir.empty()) load_all();
  }

  const ServiceConfig& config() const { return cfg_; }

  /// `obj_text` empty: start from an empty mesh. With `normalize` off the OBJ
  /// coordinates are taken as already in the unit cube.
  SessionState create(const std::optional<std::string>& obj_text, const std::optional<CameraPose>& camera,
                      bool normalize = true) {
    SessionState s;
    s.mesh = QuantizedMesh(cfg_.bins);
    s.camera = camera.value_or(CameraPose{});
    if (obj_text) {
      RealMesh real;
      try {
        real = parse_obj(*obj_text);
      } catch (const ParseError& e) {
        throw ServiceError(kBadRequest, std::string("malformed OBJ: ") + e.what());
      }
      if (!real.empty()) s.mesh = quantize(normalize ? normalize_to_unit_cube(real) : real, cfg_.bins);
    }
    s.sketch = fresh_sketch(s.mesh, s.camera);
    auto session = std::make_shared<Session>();
    {
      std::unique_lock lock(map_mutex_);
      do s.id = new_id();
      while (sessions_.contains(s.id));
      session->state = s;
      persist(s);
      sessions_[s.id] = session;
    }
    return s;
  }

  SessionState get(const std::string& id) const {
    auto session = find(id);
    std::shared_lock lock(session->state_mutex);
    return session->state;
  }

  std::vector<std::string> ids() const {
    std::shared_lock lock(map_mutex_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
  }

  EditOutcome submit_edit(const std::string& id, const EditRequest& request) {
    auto session = find(id);
    std::lock_guard writer(session->write_mutex);
    const SessionState current = snapshot_of(*session);
    validate_request(current, request);

    EditOutcome out;
    SessionState next = current;
    std::string backend = "geometric";
    if (request.kind == EditKind::Add) {
      if (!cfg_.backend) throw ServiceError(kUnprocessable, "no addition backend configured");
      backend = cfg_.backend->name();
      const AdditionResult r = cfg_.backend->generate(current.mesh, request.sketch, cfg_.decode);
      next.mesh = merge(current.mesh, r.added);
      out.truncated = r.trace.truncated;
      out.faces_added = next.mesh.size() - current.mesh.size();
    } else {
      const auto labels =
          geometric_labels_from_strokes(current.mesh, request.sketch.edit(), current.camera, cfg_.deletion);
      const PruneResult pruned = apply_deletion(current.mesh, labels);
      next.mesh = pruned.kept;
      out.faces_removed = pruned.removed.size();
    }
    next.sketch = fresh_sketch(next.mesh, next.camera);
    push_history(next, Snapshot{current.mesh, current.camera, current.sketch, edit_kind_name(request.kind), backend,
                                out.truncated});
    commit(*session, next);
    out.state = std::move(next);
    return out;
  }

  SessionState undo(const std::string& id) {
    auto session = find(id);
    std::lock_guard writer(session->write_mutex);
    SessionState next = snapshot_of(*session);
    if (next.history.empty()) throw ServiceError(kConflict, "nothing to undo");
    Snapshot top = std::move(next.history.back());
    next.history.pop_back();
    next.mesh = std::move(top.mesh);
    next.sketch = top.camera == next.camera ? std::move(top.sketch) : fresh_sketch(next.mesh, next.camera);
    commit(*session, next);
    return next;
  }

  /// Moves the session camera and regenerates the sketch. Not an edit: the
  /// history is left as is.
  SessionState set_camera(const std::string& id, const CameraPose& camera) {
    auto session = find(id);
    std::lock_guard writer(session->write_mutex);
    SessionState next = snapshot_of(*session);
    next.camera = camera;
    next.sketch = fresh_sketch(next.mesh, next.camera);
    commit(*session, next);
    return next;
  }

  static SketchImage fresh_sketch(const QuantizedMesh& mesh, const CameraPose& camera) {
    return synth_sketch(mesh, QuantizedMesh(mesh.bins()), camera);
  }

 private:
  struct Session {
    std::mutex write_mutex;
    mutable std::shared_mutex state_mutex;
    SessionState state;
  };

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(map_mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(kNotFound, "unknown session " + id);
    return it->second;
  }

  static SessionState snapshot_of(const Session& s) {
    std::shared_lock lock(s.state_mutex);
    return s.state;
  }

  void validate_request(const SessionState& current, const EditRequest& request) const {
    const auto& sk = request.sketch;
    if (sk.width() != current.sketch.width() || sk.height() != current.sketch.height())
      throw ServiceError(kUnprocessable, "sketch size does not match the session camera");
    const Bitmap edit = sk.edit();
    if (count(edit) == 0) throw ServiceError(kUnprocessable, "sketch has no edit strokes");
    const Bitmap strokes = current.sketch.strokes();
    std::size_t inside = 0;
    for (std::size_t i = 0; i < edit.size(); ++i) inside += edit.data()[i] && strokes.data()[i];
    if (request.kind == EditKind::Delete && inside != count(edit))
      throw ServiceError(kUnprocessable, "erased strokes must lie on existing strokes");
    if (request.kind == EditKind::Add && inside != 0)
      throw ServiceError(kUnprocessable, "added strokes must not overlap existing strokes");
  }

  void push_history(SessionState& s, Snapshot snap) const {
    s.history.push_back(std::move(snap));
    while (s.history.size() > cfg_.history_limit) s.history.erase(s.history.begin());
  }

  void commit(Session& session, const SessionState& next) {
    persist(next);
    std::unique_lock lock(session.state_mutex);
    session.state = next;
  }

  std::string new_id() {
    std::uniform_int_distribution<std::uint64_t> d;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d(id_rng_)));
    return buf;
  }

  static void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      out.flush();
      if (!out) throw ServiceError(500, "cannot write " + tmp);
    }
    std::filesystem::rename(tmp, path);
  }

  static std::string mesh_field(const QuantizedMesh& m) { return base64_encode(encode_tokens(tokenize(m))); }

  static QuantizedMesh mesh_from_field(const std::string& s) { return detokenize(decode_tokens(base64_decode(s))); }

  /// state.json is written last and is the commit point; mesh.obj and
  /// sketch.png are derived exports.
  void persist(const SessionState& s) const {
    if (cfg_.data_dir.empty()) return;
    const auto dir = cfg_.data_dir / s.id;
    std::filesystem::create_directories(dir);
    nlohmann::json history = nlohmann::json::array();
    for (const auto& h : s.history)
      history.push_back({{"mesh", mesh_field(h.mesh)},
                         {"camera", camera_to_json(h.camera)},
                         {"kind", h.kind},
                         {"backend", h.backend},
                         {"truncated", h.truncated}});
    const nlohmann::json state = {{"version", 1},
                                  {"id", s.id},
                                  {"bins", s.mesh.bins()},
                                  {"camera", camera_to_json(s.camera)},
                                  {"mesh", mesh_field(s.mesh)},
                                  {"history", history}};
    write_atomic(dir / "mesh.obj", to_obj_string(dequantize(s.mesh)));
    const auto png = encode_sketch_png(s.sketch);
    write_atomic(dir / "sketch.png", std::string(png.begin(), png.end()));
    write_atomic(dir / "state.json", state.dump());
  }

  void load_all() {
    std::filesystem::create_directories(cfg_.data_dir);
    for (const auto& entry : std::filesystem::directory_iterator(cfg_.data_dir)) {
      const auto file = entry.path() / "state.json";
      if (!entry.is_directory() || !std::filesystem::exists(file)) continue;
      std::ifstream in(file);
      const auto j = nlohmann::json::parse(in);
      auto session = std::make_shared<Session>();
      SessionState& s = session->state;
      s.id = j.at("id").get<std::string>();
      s.camera = camera_from_json(j.at("camera"));
      s.mesh = mesh_from_field(j.at("mesh").get<std::string>());
      s.sketch = fresh_sketch(s.mesh, s.camera);
      for (const auto& h : j.at("history")) {
        Snapshot snap;
        snap.mesh = mesh_from_field(h.at("mesh").get<std::string>());
        snap.camera = camera_from_json(h.at("camera"));
        snap.sketch = fresh_sketch(snap.mesh, snap.camera);
        snap.kind = h.at("kind").get<std::string>();
        snap.backend = h.at("backend").get<std::string>();
        snap.truncated = h.at("truncated").get<bool>();
        s.history.push_back(std::move(snap));
      }
      sessions_[s.id] = session;
    }
  }

  ServiceConfig cfg_;
  mutable std::shared_mutex map_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 id_rng_;
};

inline nlohmann::json session_summary(const SessionState& s) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& h : s.history)
    history.push_back({{"kind", h.kind}, {"backend", h.backend}, {"truncated", h.truncated}});
  return {{"id", s.id},
          {"bins", s.mesh.bins()},
          {"faces", s.mesh.size()},
          {"camera", camera_to_json(s.camera)},
          {"history_depth", s.history.size()},
          {"history", history}};
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline nlohmann::json parse_body(const httplib::Request& req, bool allow_empty) {
  if (req.body.empty()) {
    if (allow_empty) return nlohmann::json::object();
    throw ServiceError(kBadRequest, "request body is empty");
  }
  try {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw ServiceError(kBadRequest, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(kBadRequest, std::string("invalid JSON: ") + e.what());
  }
}

inline CameraPose parse_camera(const nlohmann::json& j) {
  try {
    return camera_from_json(j);
  } catch (const std::exception& e) {
    throw ServiceError(kBadRequest, std::string("invalid camera: ") + e.what());
  }
}

inline SketchImage parse_sketch(const nlohmann::json& j) {
  if (!j.contains("sketch") || !j["sketch"].is_string()) throw ServiceError(kBadRequest, "sketch (base64 PNG) required");
  try {
    return decode_sketch_png(base64_decode(j["sketch"].get<std::string>()));
  } catch (const Error& e) {
    throw ServiceError(kBadRequest, std::string("invalid sketch: ") + e.what());
  }
}

/// Maps library errors onto status codes around a handler body.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const ServiceError& e) {
    send_json(res, e.status(), {{"error", e.what()}});
  } catch (const nlohmann::json::exception& e) {
    send_json(res, kBadRequest, {{"error", e.what()}});
  } catch (const Error& e) {
    send_json(res, kUnprocessable, {{"error", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", e.what()}});
  }
}

}  // namespace detail

/// Routes:
///   POST /sessions                 {obj?: base64, camera?, normalize?}
///   GET  /sessions/{id}
///   POST /sessions/{id}/edits      {kind: add|delete, sketch: base64 PNG}
///   POST /sessions/{id}/undo
///   POST /sessions/{id}/camera     {camera}
///   GET  /sessions/{id}/mesh.obj
///   GET  /sessions/{id}/sketch.png
inline void install_routes(httplib::Server& server, SessionStore& store) {
  using httplib::Request;
  using httplib::Response;

  server.Post("/sessions", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto body = detail::parse_body(req, true);
      std::optional<std::string> obj;
      if (body.contains("obj") && !body["obj"].is_null()) {
        try {
          const auto bytes = base64_decode(body["obj"].get<std::string>());
          obj = std::string(bytes.begin(), bytes.end());
        } catch (const Error& e) {
          throw ServiceError(kBadRequest, std::string("obj: ") + e.what());
        }
      }
      std::optional<CameraPose> camera;
      if (body.contains("camera")) camera = detail::parse_camera(body["camera"]);
      const auto s = store.create(obj, camera, body.value("normalize", true));
      auto out = session_summary(s);
      out["sketch"] = base64_encode(encode_sketch_png(s.sketch));
      detail::send_json(res, 201, out);
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+))", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, session_summary(store.get(req.matches[1]))); });
  });

  server.Post(R"(/sessions/([0-9a-f]+)/edits)", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto body = detail::parse_body(req, false);
      if (!body.contains("kind") || !body["kind"].is_string()) throw ServiceError(kBadRequest, "kind required");
      EditRequest edit{parse_edit_kind(body["kind"].get<std::string>()), detail::parse_sketch(body)};
      const auto outcome = store.submit_edit(req.matches[1], edit);
      auto out = session_summary(outcome.state);
      out["faces_added"] = outcome.faces_added;
      out["faces_removed"] = outcome.faces_removed;
      if (outcome.truncated) out["warning"] = "generation truncated at max_tokens";
      detail::send_json(res, 200, out);
    });
  });

  server.Post(R"(/sessions/([0-9a-f]+)/undo)", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, 200, session_summary(store.undo(req.matches[1]))); });
  });

  server.Post(R"(/sessions/([0-9a-f]+)/camera)", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto body = detail::parse_body(req, false);
      if (!body.contains("camera")) throw ServiceError(kBadRequest, "camera required");
      detail::send_json(res, 200, session_summary(store.set_camera(req.matches[1], detail::parse_camera(body["camera"]))));
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+)/mesh\.obj)", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      res.set_content(to_obj_string(dequantize(store.get(req.matches[1]).mesh)), "text/plain");
    });
  });

  server.Get(R"(/sessions/([0-9a-f]+)/sketch\.png)", [&store](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const auto png = encode_sketch_png(store.get(req.matches[1]).sketch);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });
  });
}

}  // namespace meshpad::service
