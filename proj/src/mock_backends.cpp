#include "lens/mock_backends.hpp"

#include <algorithm>
#include <cctype>
#include <random>
#include <unordered_set>

#include "lens/error.hpp"
#include "lens/text.hpp"

namespace lens::mock {

namespace {

std::string strip_word(std::string_view w) {
  std::size_t b = 0;
  std::size_t e = w.size();
  auto punct = [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x80 && !std::isalnum(u);
  };
  while (b < e && punct(w[b])) ++b;
  while (e > b && punct(w[e - 1])) --e;
  return text::to_lower_ascii(w.substr(b, e - b));
}

const std::unordered_set<std::string>& stopwords() {
  static const std::unordered_set<std::string> words = {
      "a",  "an",  "the", "of",   "in",    "on",      "at",    "with",  "and",   "or",   "is",
      "are", "this", "that", "to", "it",   "its",     "for",   "by",    "image", "photo", "picture",
      "written", "there", "some", "from", "as", "be", "which", "while", "his",  "her",  "their"};
  return words;
}

std::string_view query_block(std::string_view prompt) {
  const auto sep = prompt.rfind("\n\n");
  return sep == std::string_view::npos ? prompt : prompt.substr(sep + 2);
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

}  // namespace

std::vector<std::string> query_description_words(std::string_view prompt) {
  std::vector<std::string> words;
  auto add = [&](std::string_view content) {
    for (const auto& raw : text::split_whitespace(content)) {
      auto w = strip_word(raw);
      if (!w.empty()) words.push_back(std::move(w));
    }
  };
  bool in_captions = false;
  for (const auto& line : text::split_lines(query_block(prompt))) {
    std::string_view l = line;
    if (starts_with(l, "Question:") || starts_with(l, "Short Answer:")) break;
    if (starts_with(l, "Tags:")) {
      in_captions = false;
      add(l.substr(5));
    } else if (starts_with(l, "Attributes:")) {
      in_captions = false;
      add(l.substr(11));
    } else if (starts_with(l, "Captions:")) {
      in_captions = true;
      add(l.substr(9));
    } else if (starts_with(l, "OCR:")) {
      in_captions = false;
      const auto open = l.find('"');
      const auto close = l.rfind('"');
      if (open != std::string_view::npos && close > open) add(l.substr(open + 1, close - open - 1));
    } else if (in_captions) {
      add(l);
    }
  }
  return words;
}

MockRule parse_mock_rule(const std::string& name) {
  if (name == "echo") return MockRule::Echo;
  if (name == "majority-token") return MockRule::MajorityToken;
  if (name == "keyword") return MockRule::Keyword;
  if (name == "first-tag") return MockRule::FirstTag;
  throw Error(ErrorCode::ConfigError, "unknown mock LLM rule: " + name);
}

// ---------------------------------------------------------------------------
// MockEncoder

MockEncoder::MockEncoder(std::size_t dimension, std::string identity)
    : dimension_(dimension), identity_(std::move(identity)) {
  require(dimension_ >= 1, ErrorCode::InvalidArgument, "mock encoder dimension must be positive");
}

std::vector<double> MockEncoder::hashed(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(dimension_);
  for (auto& x : v) x = dist(rng);
  return v;
}

void MockEncoder::set_text_vector(const std::string& text, std::vector<double> values) {
  require(values.size() == dimension_, ErrorCode::InvalidArgument, "text vector has wrong dimension");
  texts_[text] = std::move(values);
}

void MockEncoder::set_image_vector(const std::string& image_id, std::vector<double> values) {
  require(values.size() == dimension_, ErrorCode::InvalidArgument, "image vector has wrong dimension");
  images_[image_id] = std::move(values);
}

std::vector<double> MockEncoder::text_vector(const std::string& text) const {
  if (auto it = texts_.find(text); it != texts_.end()) return it->second;
  return hashed(text::fnv1a(text));
}

void MockEncoder::plant_image(const std::string& image_id, const std::string& text, double noise) {
  auto base = Embedding(text_vector(text)).normalized();
  std::vector<double> v(base.values().begin(), base.values().end());
  if (noise != 0.0) {
    auto jitter = Embedding(hashed(text::fnv1a(image_id, 0x9e3779b97f4a7c15ULL))).normalized();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += noise * jitter[i];
  }
  images_[image_id] = std::move(v);
}

std::vector<double> MockEncoder::raw_embed_image(const ImageRef& image) {
  ++image_calls_;
  if (auto it = images_.find(image.id); it != images_.end()) return it->second;
  if (image.has_payload()) return hashed(text::fnv1a(image.load_payload()));
  return hashed(text::fnv1a("image:" + image.id));
}

std::vector<std::vector<double>> MockEncoder::raw_embed_texts(std::span<const std::string> texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(text_vector(t));
  return out;
}

// ---------------------------------------------------------------------------
// MockCaptioner

MockCaptioner::MockCaptioner(bool supports_sampling, std::string identity)
    : supports_sampling_(supports_sampling), identity_(std::move(identity)) {}

void MockCaptioner::set_pool(const std::string& image_id, std::vector<std::string> captions) {
  require(!captions.empty(), ErrorCode::InvalidArgument, "caption pool must be non-empty");
  pools_[image_id] = std::move(captions);
}

void MockCaptioner::set_raw_output(const std::string& image_id, std::vector<std::string> captions) {
  raw_[image_id] = std::move(captions);
}

std::vector<std::string> MockCaptioner::default_pool(const std::string& image_id) const {
  static const char* subjects[] = {"a dog", "a cat", "a person", "a car", "a bird", "a tree", "a table", "a bicycle"};
  static const char* places[] = {"on the grass", "in a room", "on a street", "near a window", "in a field",
                                 "on a beach"};
  std::mt19937_64 rng(text::fnv1a("captions:" + image_id));
  std::vector<std::string> pool;
  for (int i = 0; i < 12; ++i) {
    pool.push_back(std::string(subjects[rng() % std::size(subjects)]) + " " + places[rng() % std::size(places)]);
  }
  return pool;
}

std::vector<std::string> MockCaptioner::raw_generate(const ImageRef& image, const GenerationParams& params) {
  ++calls_;
  if (auto it = raw_.find(image.id); it != raw_.end()) return it->second;
  auto it = pools_.find(image.id);
  const auto pool = it != pools_.end() ? it->second : default_pool(image.id);
  const auto n = static_cast<std::size_t>(params.num_captions);
  if (!params.is_sampling()) {
    return {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(std::min(n, pool.size()))};
  }
  std::mt19937_64 rng(params.seed.value_or(0) ^ text::fnv1a(image.id));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pool[pick(rng)]);
  return out;
}

// ---------------------------------------------------------------------------
// MockLLM

MockLLM::MockLLM(MockLLMOptions options) : options_(std::move(options)) {}

MockLLM::MockLLM(MockLLMOptions options, GenerateFn generate)
    : options_(std::move(options)), generate_(std::move(generate)) {}

std::string MockLLM::raw_generate(std::string_view prompt, const GenerationParams& params) {
  ++generate_calls_;
  if (generate_) return generate_(prompt, params);

  switch (options_.rule) {
    case MockRule::Echo: {
      const auto pos = prompt.rfind(options_.echo_marker);
      if (pos == std::string_view::npos) return "";
      return std::string(prompt.substr(pos + options_.echo_marker.size()));
    }
    case MockRule::FirstTag: {
      for (const auto& line : text::split_lines(query_block(prompt))) {
        if (!starts_with(line, "Tags:")) continue;
        auto entries = line.substr(5);
        return text::trim(entries.substr(0, entries.find(',')));
      }
      return options_.fallback_answer;
    }
    case MockRule::Keyword: {
      const auto words = query_description_words(prompt);
      for (std::size_t i = 0; i < words.size(); ++i) {
        for (const auto& entry : options_.answer_vocabulary) {
          const auto parts = text::split_whitespace(text::canonicalize(entry));
          if (parts.empty() || i + parts.size() > words.size()) continue;
          if (std::equal(parts.begin(), parts.end(), words.begin() + static_cast<std::ptrdiff_t>(i))) return entry;
        }
      }
      return options_.fallback_answer;
    }
    case MockRule::MajorityToken: {
      const auto words = query_description_words(prompt);
      std::vector<std::pair<std::string, int>> counts;
      for (const auto& w : words) {
        if (stopwords().count(w)) continue;
        auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == w; });
        if (it == counts.end()) {
          counts.emplace_back(w, 1);
        } else {
          ++it->second;
        }
      }
      if (counts.empty()) return options_.fallback_answer;
      // max_element keeps the first maximum, i.e. the earliest word on ties
      return std::max_element(counts.begin(), counts.end(),
                              [](const auto& a, const auto& b) { return a.second < b.second; })
          ->first;
    }
  }
  return options_.fallback_answer;
}

double MockLLM::token_logprob(std::string_view prompt, std::string_view token) const {
  const auto key = strip_word(token);
  if (auto it = options_.token_logprobs.find(key); it != options_.token_logprobs.end()) return it->second;
  if (options_.grounded) {
    const auto words = query_description_words(prompt);
    if (std::find(words.begin(), words.end(), key) != words.end()) return options_.grounded_logprob;
  }
  return options_.default_logprob;
}

double MockLLM::raw_score(std::string_view prompt, std::string_view continuation) {
  ++score_calls_;
  double total = 0.0;
  for (const auto& tok : text::split_whitespace(continuation)) total += token_logprob(prompt, tok);
  return total;
}

// ---------------------------------------------------------------------------
// Fixtures

std::unique_ptr<MockEncoder> encoder_from_fixtures(const nlohmann::json& fixtures, const std::string& identity) {
  const auto cfg = fixtures.value("encoder", nlohmann::json::object());
  auto enc = std::make_unique<MockEncoder>(cfg.value("dimension", std::size_t{32}), identity);
  const auto texts_section = cfg.value("texts", nlohmann::json::object());
  for (const auto& [text, vec] : texts_section.items()) {
    enc->set_text_vector(text, vec.get<std::vector<double>>());
  }
  const auto vectors_section = cfg.value("vectors", nlohmann::json::object());
  for (const auto& [id, vec] : vectors_section.items()) {
    enc->set_image_vector(id, vec.get<std::vector<double>>());
  }
  const double noise = cfg.value("noise", 0.0);
  const auto images_section = cfg.value("images", nlohmann::json::object());
  for (const auto& [id, text] : images_section.items()) {
    enc->plant_image(id, text.get<std::string>(), noise);
  }
  return enc;
}

std::unique_ptr<MockCaptioner> captioner_from_fixtures(const nlohmann::json& fixtures, const std::string& identity) {
  const auto cfg = fixtures.value("captioner", nlohmann::json::object());
  auto cap = std::make_unique<MockCaptioner>(cfg.value("supports_sampling", true), identity);
  const auto pools_section = cfg.value("pools", nlohmann::json::object());
  for (const auto& [id, pool] : pools_section.items()) {
    cap->set_pool(id, pool.get<std::vector<std::string>>());
  }
  const auto raw_section = cfg.value("raw", nlohmann::json::object());
  for (const auto& [id, raw] : raw_section.items()) {
    cap->set_raw_output(id, raw.get<std::vector<std::string>>());
  }
  return cap;
}

std::unique_ptr<MockLLM> llm_from_fixtures(const nlohmann::json& fixtures, const std::string& identity) {
  const auto cfg = fixtures.value("llm", nlohmann::json::object());
  MockLLMOptions o;
  o.identity = identity;
  const auto mode = cfg.value("mode", std::string("local-scored"));
  if (mode == "local-scored") {
    o.mode = LLMMode::LocalScored;
  } else if (mode == "remote-generate-only") {
    o.mode = LLMMode::RemoteGenerateOnly;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown mock LLM mode: " + mode);
  }
  o.context_window = cfg.value("context_window", o.context_window);
  o.rule = parse_mock_rule(cfg.value("rule", std::string("majority-token")));
  o.echo_marker = cfg.value("echo_marker", o.echo_marker);
  o.answer_vocabulary = cfg.value("answer_vocabulary", o.answer_vocabulary);
  o.fallback_answer = cfg.value("fallback_answer", o.fallback_answer);
  o.token_logprobs = cfg.value("token_logprobs", o.token_logprobs);
  o.default_logprob = cfg.value("default_logprob", o.default_logprob);
  o.grounded = cfg.value("grounded", o.grounded);
  o.grounded_logprob = cfg.value("grounded_logprob", o.grounded_logprob);
  return std::make_unique<MockLLM>(std::move(o));
}

}  // namespace lens::mock
