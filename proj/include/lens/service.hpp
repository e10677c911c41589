#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "lens/evaluation.hpp"
#include "lens/prompting.hpp"
#include "lens/vision.hpp"

namespace httplib {
class Server;
}

namespace lens {

struct SessionState {
  std::string session_id;
  ImageRef image;
  VisualDescription description;
  std::vector<std::pair<std::string, std::string>> dialogue;
  std::chrono::steady_clock::time_point last_used;
};

struct ServiceOptions {
  double session_ttl_seconds = 1800.0;
  TaskKind task = TaskKind::Vqa;
  GenerationParams llm_params;
  std::uint64_t seed = 0;
  // held-out examples for few-shot asks; shots > 0 is rejected without it
  const DatasetManifest* support = nullptr;
  std::size_t max_shots = 8;
};

// Describe/ask/health handlers plus the session cache. Handlers return a
// status code and JSON body so they can be exercised without a socket.
class LensService {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  struct Response {
    int status = 200;
    nlohmann::json body;
  };

  LensService(Backends backends, const TagVocabulary* tags, const AttributeVocabulary* attributes,
              ModuleConfig modules, ServiceOptions options = {}, Clock clock = {});
  ~LensService();

  // POST /v1/describe body: {image_base64, image_id?, ocr_text?}
  Response describe_json(const nlohmann::json& body);
  Response describe_image(ImageRef image, const std::optional<std::string>& ocr_text);
  // POST /v1/ask body: {session_id, question, shots?, trace?, answer_space?}
  Response ask(const nlohmann::json& body);
  // GET /v1/health
  Response health() const;

  void mount(httplib::Server& server);

  std::size_t description_computations() const;
  std::size_t session_count() const;
  // Drops sessions idle longer than the TTL; returns how many were removed.
  std::size_t purge_expired();

 private:
  std::shared_ptr<SessionState> find_session(const std::string& id);
  Shot support_shot(std::size_t index, const TaskSpec& task);
  std::string new_session_id();

  Backends backends_;
  ModuleConfig modules_;
  ServiceOptions options_;
  Clock clock_;
  std::unique_ptr<Describer> describer_;
  bool serialize_backends_;
  mutable std::mutex backend_mutex_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionState>> sessions_;
  std::size_t computations_ = 0;
  std::uint64_t id_counter_ = 0;
  std::uint64_t id_salt_;

  std::mutex support_mutex_;
  std::map<std::size_t, Shot> support_cache_;
};

// Server with the /v1 routes mounted; the caller runs listen() and stop().
std::unique_ptr<httplib::Server> make_server(LensService& service);

}  // namespace lens
