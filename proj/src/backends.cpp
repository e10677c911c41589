#include "lens/backends.hpp"

#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_set>

#include "lens/error.hpp"
#include "lens/text.hpp"

namespace lens {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ImageDecodeError: return "ImageDecodeError";
    case ErrorCode::SamplingUnsupported: return "SamplingUnsupported";
    case ErrorCode::ScoringUnsupported: return "ScoringUnsupported";
    case ErrorCode::ContextLengthExceeded: return "ContextLengthExceeded";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyScope: return "EmptyScope";
    case ErrorCode::EmptyDescription: return "EmptyDescription";
    case ErrorCode::ShotMissingAnswer: return "ShotMissingAnswer";
    case ErrorCode::EmptyRecordSet: return "EmptyRecordSet";
    case ErrorCode::SingleClassSet: return "SingleClassSet";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DataLeak: return "DataLeak";
  }
  return "Unknown";
}

std::string_view to_string(LLMMode mode) {
  return mode == LLMMode::LocalScored ? "local-scored" : "remote-generate-only";
}

// ---------------------------------------------------------------------------
// ImageRef

std::string ImageRef::load_payload() const {
  if (!bytes.empty()) return bytes;
  if (uri.empty()) throw Error(ErrorCode::ImageDecodeError, "image '" + id + "' has no payload");
  std::ifstream in(uri, std::ios::binary);
  if (!in) throw Error(ErrorCode::ImageDecodeError, "cannot read image file: " + uri);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.empty()) throw Error(ErrorCode::ImageDecodeError, "empty image file: " + uri);
  return data;
}

ImageRef ImageRef::from_file(const std::string& path) {
  ImageRef ref;
  ref.uri = path;
  auto slash = path.find_last_of('/');
  ref.id = slash == std::string::npos ? path : path.substr(slash + 1);
  return ref;
}

ImageRef ImageRef::from_bytes(std::string bytes) {
  ImageRef ref;
  ref.id = "img-" + text::hex64(text::fnv1a(bytes));
  ref.bytes = std::move(bytes);
  return ref;
}

// ---------------------------------------------------------------------------
// Embedding

Embedding::Embedding(std::vector<double> values) : values_(std::move(values)) {
  require(!values_.empty(), ErrorCode::InvalidArgument, "embedding must have dimension >= 1");
  for (double v : values_) {
    require(std::isfinite(v), ErrorCode::InvalidArgument, "embedding contains a non-finite value");
  }
}

double Embedding::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

Embedding Embedding::normalized() const {
  const double n = norm();
  require(n > 0.0, ErrorCode::InvalidArgument, "cannot normalize a zero vector");
  std::vector<double> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) out[i] = values_[i] / n;
  return Embedding(std::move(out));
}

double Embedding::dot(const Embedding& other) const {
  require(other.dimension() == dimension(), ErrorCode::InvalidArgument, "dimension mismatch in dot product");
  double sum = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) sum += values_[i] * other.values_[i];
  return sum;
}

// ---------------------------------------------------------------------------
// GenerationParams

void GenerationParams::validate() const {
  require(num_captions >= 1 && num_captions <= kMaxCaptions, ErrorCode::InvalidArgument,
          "num_captions must be in [1, 50], got " + std::to_string(num_captions));
  require(max_new_tokens >= 1, ErrorCode::InvalidArgument, "max_new_tokens must be positive");
  require(num_beams >= 1, ErrorCode::InvalidArgument, "num_beams must be positive");
  require(std::isfinite(length_penalty), ErrorCode::InvalidArgument, "length_penalty must be finite");
  if (top_k) {
    require(*top_k >= 1, ErrorCode::InvalidArgument, "top_k must be positive");
    require(num_beams == 1, ErrorCode::InvalidArgument,
            "beam search and top-k sampling are mutually exclusive (set num_beams = 1 when sampling)");
  } else {
    require(num_captions <= num_beams, ErrorCode::InvalidArgument,
            "beam search returns at most num_beams sequences");
  }
}

GenerationParams GenerationParams::beam_search(int num_captions) {
  GenerationParams p;
  p.num_captions = num_captions;
  if (num_captions > p.num_beams) p.num_beams = num_captions;
  return p;
}

GenerationParams GenerationParams::top_k_sampling(int num_captions, int top_k,
                                                  std::optional<std::uint64_t> seed) {
  GenerationParams p;
  p.num_beams = 1;
  p.top_k = top_k;
  p.num_captions = num_captions;
  p.seed = seed;
  return p;
}

// ---------------------------------------------------------------------------
// EncoderBackend

Embedding EncoderBackend::finish(std::vector<double> raw) const {
  if (raw.size() != dimension()) {
    throw Error(ErrorCode::BackendUnavailable, identity() + " returned dimension " + std::to_string(raw.size()) +
                                                   ", declared " + std::to_string(dimension()));
  }
  return Embedding(std::move(raw)).normalized();
}

Embedding EncoderBackend::embed_image(const ImageRef& image) {
  return finish(raw_embed_image(image));
}

std::vector<Embedding> EncoderBackend::embed_texts(std::span<const std::string> texts) {
  require(!texts.empty(), ErrorCode::InvalidArgument, "embed_texts needs at least one text");
  for (const auto& t : texts) {
    require(!text::trim(t).empty(), ErrorCode::InvalidArgument, "cannot embed a blank text");
  }
  auto raw = raw_embed_texts(texts);
  if (raw.size() != texts.size()) {
    throw Error(ErrorCode::BackendUnavailable, identity() + " returned " + std::to_string(raw.size()) +
                                                   " embeddings for " + std::to_string(texts.size()) + " texts");
  }
  std::vector<Embedding> out;
  out.reserve(raw.size());
  for (auto& r : raw) out.push_back(finish(std::move(r)));
  return out;
}

Embedding EncoderBackend::embed_text(const std::string& text) {
  return std::move(embed_texts(std::span<const std::string>(&text, 1)).front());
}

// ---------------------------------------------------------------------------
// CaptionBackend

std::vector<std::string> CaptionBackend::generate(const ImageRef& image, const GenerationParams& params) {
  params.validate();
  if (params.is_sampling() && !supports_sampling()) {
    throw Error(ErrorCode::SamplingUnsupported, identity() + " does not support top-k sampling");
  }
  auto raw = raw_generate(image, params);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (auto& caption : raw) {
    if (text::trim(caption).empty()) continue;
    if (!seen.insert(caption).second) continue;
    out.push_back(std::move(caption));
    if (out.size() == static_cast<std::size_t>(params.num_captions)) break;
  }
  if (out.empty()) throw Error(ErrorCode::BackendUnavailable, identity() + " produced no captions for " + image.id);
  return out;
}

// ---------------------------------------------------------------------------
// LLMBackend

std::size_t LLMBackend::count_tokens(std::string_view text) const {
  return text::split_whitespace(text).size();
}

void LLMBackend::check_window(std::size_t tokens) const {
  if (tokens > context_window()) {
    throw Error(ErrorCode::ContextLengthExceeded, "prompt has " + std::to_string(tokens) +
                                                      " tokens, window is " + std::to_string(context_window()));
  }
}

std::string LLMBackend::generate(std::string_view prompt, const GenerationParams& params) {
  require(!prompt.empty(), ErrorCode::InvalidArgument, "prompt must be non-empty");
  params.validate();
  check_window(count_tokens(prompt));
  return text::trim(raw_generate(prompt, params));
}

double LLMBackend::score(std::string_view prompt, std::string_view continuation) {
  if (mode() != LLMMode::LocalScored) {
    throw Error(ErrorCode::ScoringUnsupported, identity() + " is generate-only");
  }
  require(!text::trim(continuation).empty(), ErrorCode::InvalidArgument, "continuation must be non-empty");
  check_window(count_tokens(prompt) + count_tokens(continuation));
  const double ll = raw_score(prompt, continuation);
  if (!std::isfinite(ll)) throw Error(ErrorCode::BackendUnavailable, identity() + " returned a non-finite score");
  return ll;
}

double LLMBackend::raw_score(std::string_view, std::string_view) {
  throw Error(ErrorCode::ScoringUnsupported, identity() + " does not implement scoring");
}

}  // namespace lens
