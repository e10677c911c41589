#include "lens/service.hpp"

#include <random>

#include "httplib.h"

#include "lens/error.hpp"
#include "lens/http_backends.hpp"
#include "lens/reasoning.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendUnavailable:
    case ErrorCode::ScoringUnsupported:
    case ErrorCode::SamplingUnsupported:
      return 503;
    case ErrorCode::InvalidArgument:
    case ErrorCode::ImageDecodeError:
    case ErrorCode::EmptyDescription:
    case ErrorCode::ContextLengthExceeded:
    case ErrorCode::ParseError:
    case ErrorCode::ShotMissingAnswer:
      return 400;
    default:
      return 500;
  }
}

LensService::Response error_response(int status, const std::string& message) {
  return {status, json{{"error", message}}};
}

LensService::Response error_response(const Error& e) {
  return {status_for(e.code()), json{{"error", e.what()}, {"code", to_string(e.code())}}};
}

}  // namespace

LensService::LensService(Backends backends, const TagVocabulary* tags, const AttributeVocabulary* attributes,
                         ModuleConfig modules, ServiceOptions options, Clock clock)
    : backends_(backends), modules_(std::move(modules)), options_(std::move(options)), clock_(std::move(clock)) {
  require(backends_.llm != nullptr, ErrorCode::BackendUnavailable, "service needs an LLM backend");
  require(options_.session_ttl_seconds > 0.0, ErrorCode::ConfigError, "session TTL must be positive");
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
  describer_ = std::make_unique<Describer>(VisionDeps{backends_.encoder, backends_.captioner, tags, attributes}, modules_);
  serialize_backends_ = !((!backends_.encoder || backends_.encoder->thread_safe()) &&
                          (!backends_.captioner || backends_.captioner->thread_safe()) &&
                          backends_.llm->thread_safe());
  id_salt_ = std::random_device{}();
  id_salt_ = (id_salt_ << 32) ^ std::random_device{}();
}

LensService::~LensService() = default;

std::string LensService::new_session_id() {
  // caller holds sessions_mutex_
  return "s-" + text::hex64(text::fnv1a(std::to_string(++id_counter_), id_salt_));
}

std::size_t LensService::description_computations() const {
  std::lock_guard lock(sessions_mutex_);
  return computations_;
}

std::size_t LensService::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

std::size_t LensService::purge_expired() {
  const auto now = clock_();
  const auto ttl = std::chrono::duration<double>(options_.session_ttl_seconds);
  std::lock_guard lock(sessions_mutex_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->last_used > ttl) {
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::shared_ptr<SessionState> LensService::find_session(const std::string& id) {
  const auto now = clock_();
  const auto ttl = std::chrono::duration<double>(options_.session_ttl_seconds);
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  if (now - it->second->last_used > ttl) {
    sessions_.erase(it);
    return nullptr;
  }
  it->second->last_used = now;
  return it->second;
}

LensService::Response LensService::describe_image(ImageRef image, const std::optional<std::string>& ocr_text) {
  try {
    require(image.has_payload() || !image.id.empty(), ErrorCode::InvalidArgument, "no image supplied");
    VisualDescription desc;
    {
      std::unique_lock lock(backend_mutex_, std::defer_lock);
      if (serialize_backends_) lock.lock();
      desc = describer_->describe(image, ocr_text);
    }
    auto session = std::make_shared<SessionState>();
    session->image = std::move(image);
    session->description = desc;
    session->last_used = clock_();
    std::string id;
    {
      std::lock_guard lock(sessions_mutex_);
      ++computations_;
      id = new_session_id();
      session->session_id = id;
      sessions_[id] = session;
    }
    return {200, json{{"session_id", id}, {"image_id", session->image.id}, {"description", to_json(desc)}}};
  } catch (const Error& e) {
    return error_response(e);
  }
}

LensService::Response LensService::describe_json(const json& body) {
  if (!body.is_object() || !body.contains("image_base64") || !body["image_base64"].is_string()) {
    return error_response(400, "body needs an image_base64 string");
  }
  try {
    auto image = ImageRef::from_bytes(http::base64_decode(body["image_base64"].get<std::string>()));
    require(!image.bytes.empty(), ErrorCode::ImageDecodeError, "image payload is empty");
    if (body.contains("image_id")) {
      require(body["image_id"].is_string(), ErrorCode::InvalidArgument, "image_id must be a string");
      image.id = body["image_id"].get<std::string>();
    }
    std::optional<std::string> ocr;
    if (body.contains("ocr_text")) {
      require(body["ocr_text"].is_string(), ErrorCode::InvalidArgument, "ocr_text must be a string");
      ocr = body["ocr_text"].get<std::string>();
    }
    return describe_image(std::move(image), ocr);
  } catch (const Error& e) {
    return error_response(e);
  }
}

Shot LensService::support_shot(std::size_t index, const TaskSpec& task) {
  std::lock_guard lock(support_mutex_);
  if (auto it = support_cache_.find(index); it != support_cache_.end()) return it->second;
  const auto& ex = options_.support->examples[index];
  const auto answer = !ex.label.empty() ? ex.label : (ex.answers.empty() ? std::string() : ex.answers.front());
  require(!answer.empty(), ErrorCode::ShotMissingAnswer, "support example " + ex.id + " has no answer");
  VisualDescription desc;
  {
    std::unique_lock block(backend_mutex_, std::defer_lock);
    if (serialize_backends_) block.lock();
    desc = describer_->describe(ex.image, ex.ocr_text);
  }
  Shot shot{std::move(desc), task.question(ex.question.empty() ? ex.label : ex.question), answer};
  support_cache_.emplace(index, shot);
  return shot;
}

LensService::Response LensService::ask(const json& body) {
  if (!body.is_object()) return error_response(400, "body must be a JSON object");
  if (!body.contains("session_id") || !body["session_id"].is_string()) {
    return error_response(400, "session_id is required");
  }
  if (!body.contains("question") || !body["question"].is_string() ||
      text::trim(body["question"].get<std::string>()).empty()) {
    return error_response(400, "question must be a non-empty string");
  }
  std::size_t shots = 0;
  if (body.contains("shots")) {
    if (!body["shots"].is_number_integer() || body["shots"].get<long long>() < 0) {
      return error_response(400, "shots must be a non-negative integer");
    }
    shots = body["shots"].get<std::size_t>();
    if (shots > 0 && !options_.support) return error_response(400, "service has no support set for shots");
    if (shots > options_.max_shots) return error_response(400, "too many shots");
  }
  const bool trace = body.value("trace", false);
  std::optional<std::vector<std::string>> answer_space;
  if (body.contains("answer_space")) {
    if (!body["answer_space"].is_array() || body["answer_space"].empty()) {
      return error_response(400, "answer_space must be a non-empty array");
    }
    try {
      answer_space = body["answer_space"].get<std::vector<std::string>>();
    } catch (const json::exception&) {
      return error_response(400, "answer_space must hold strings");
    }
  }

  const auto session_id = body["session_id"].get<std::string>();
  auto session = find_session(session_id);
  if (!session) return error_response(404, "unknown or expired session: " + session_id);

  const auto question_text = body["question"].get<std::string>();
  try {
    const TaskSpec task{options_.task, "{question}", answer_space};
    const auto question = task.question(question_text);

    std::vector<Shot> shot_list;
    std::vector<std::string> shot_ids;
    if (shots > 0) {
      std::vector<std::string> labels;
      for (const auto& ex : options_.support->examples) {
        labels.push_back(!ex.label.empty() ? ex.label : (ex.answers.empty() ? "" : ex.answers.front()));
      }
      const auto seed = text::fnv1a(session->image.id + "\n" + question, options_.seed);
      for (auto idx : sample_shot_indices(labels, shots, seed)) {
        shot_list.push_back(support_shot(idx, task));
        shot_ids.push_back(options_.support->examples[idx].id);
      }
    }

    LLMBackend& llm = *backends_.llm;
    const TokenCounter counter = [&llm](std::string_view s) { return llm.count_tokens(s); };
    BudgetReport budget;
    const auto bundle =
        fit_to_budget(session->description, task, question, shot_list, counter, llm.context_window(), &budget);

    Answer answer;
    {
      std::unique_lock lock(backend_mutex_, std::defer_lock);
      if (serialize_backends_) lock.lock();
      answer = task.close_ended() ? answer_close(llm, bundle, *task.answer_space, options_.llm_params)
                                  : answer_open(llm, bundle, options_.llm_params);
    }
    {
      std::lock_guard lock(sessions_mutex_);
      session->dialogue.emplace_back(question_text, answer.text);
    }

    json out = {{"session_id", session_id}, {"answer", answer.text}};
    if (trace) {
      out["prompt"] = bundle.rendered;
      json t = {{"prompt_hash", text::hex64(text::fnv1a(bundle.rendered))},
                {"llm", llm.identity()},
                {"mode", to_string(llm.mode())},
                {"tokens", budget.tokens},
                {"captions_dropped", budget.captions_dropped},
                {"attributes_dropped", budget.attributes_dropped},
                {"shots", shot_ids},
                {"generation_failed", answer.generation_failed},
                {"used_fallback", answer.used_fallback}};
      if (answer.candidate_scores) {
        json scores = json::array();
        for (const auto& [c, s] : *answer.candidate_scores) scores.push_back({{"candidate", c}, {"score", s}});
        t["candidate_scores"] = scores;
      }
      out["trace"] = t;
    }
    return {200, out};
  } catch (const Error& e) {
    return error_response(e);
  }
}

LensService::Response LensService::health() const {
  json backends = json::object();
  if (backends_.encoder) backends["encoder"] = backends_.encoder->identity();
  if (backends_.captioner) backends["captioner"] = backends_.captioner->identity();
  backends["llm"] = backends_.llm->identity();
  json modules = json::array();
  for (auto m : modules_.enabled) modules.push_back(to_string(m));
  return {200, json{{"status", "ok"},
                    {"backends", backends},
                    {"llm_mode", to_string(backends_.llm->mode())},
                    {"modules", modules},
                    {"sessions", session_count()}}};
}

void LensService::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const Response& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Get("/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Post("/v1/describe", [this, reply](const httplib::Request& req, httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) return reply(res, error_response(400, "multipart body needs an image field"));
      const auto file = req.get_file_value("image");
      if (file.content.empty()) return reply(res, error_response(400, "uploaded image is empty"));
      auto image = ImageRef::from_bytes(file.content);
      if (req.has_file("image_id")) {
        image.id = req.get_file_value("image_id").content;
      } else if (!file.filename.empty()) {
        image.id = file.filename;
      }
      std::optional<std::string> ocr;
      if (req.has_file("ocr_text")) ocr = req.get_file_value("ocr_text").content;
      return reply(res, describe_image(std::move(image), ocr));
    }
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply(res, error_response(400, "malformed JSON"));
    reply(res, describe_json(body));
  });
  server.Post("/v1/ask", [this, reply](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) return reply(res, error_response(400, "malformed JSON"));
    reply(res, ask(body));
  });
}

std::unique_ptr<httplib::Server> make_server(LensService& service) {
  auto server = std::make_unique<httplib::Server>();
  service.mount(*server);
  return server;
}

}  // namespace lens
