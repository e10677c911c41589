#include "lens/vision.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "lens/error.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Serialization

namespace {

json scored_list(const std::vector<Scored>& items) {
  json arr = json::array();
  for (const auto& s : items) arr.push_back({{"text", s.text}, {"score", s.score}});
  return arr;
}

std::vector<Scored> scored_from(const json& arr) {
  std::vector<Scored> out;
  for (const auto& e : arr) out.push_back({e.at("text").get<std::string>(), e.at("score").get<double>()});
  return out;
}

}  // namespace

json to_json(const VisualDescription& desc) {
  json j = json::object();
  if (desc.tags) j["tags"] = scored_list(*desc.tags);
  if (desc.attributes) j["attributes"] = scored_list(*desc.attributes);
  if (desc.captions) j["captions"] = *desc.captions;
  if (desc.ocr_text) j["ocr_text"] = *desc.ocr_text;
  return j;
}

VisualDescription description_from_json(const json& j) {
  try {
    VisualDescription d;
    if (j.contains("tags")) d.tags = scored_from(j["tags"]);
    if (j.contains("attributes")) d.attributes = scored_from(j["attributes"]);
    if (j.contains("captions")) d.captions = j["captions"].get<std::vector<std::string>>();
    if (j.contains("ocr_text")) d.ocr_text = j["ocr_text"].get<std::string>();
    return d;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed description: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// ModuleConfig

std::string_view to_string(VisionModule m) {
  switch (m) {
    case VisionModule::Tags: return "tags";
    case VisionModule::Attributes: return "attributes";
    case VisionModule::Captions: return "captions";
    case VisionModule::Ocr: return "ocr";
  }
  return "?";
}

VisionModule parse_vision_module(std::string_view name) {
  const auto n = text::canonicalize(name);
  if (n == "tags") return VisionModule::Tags;
  if (n == "attributes") return VisionModule::Attributes;
  if (n == "captions") return VisionModule::Captions;
  if (n == "ocr") return VisionModule::Ocr;
  throw Error(ErrorCode::ConfigError, "unknown vision module: " + std::string(name));
}

std::set<VisionModule> parse_module_list(std::string_view list) {
  std::set<VisionModule> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    const auto item = text::trim(list.substr(start, comma - start));
    if (!item.empty()) out.insert(parse_vision_module(item));
    start = comma + 1;
  }
  return out;
}

void ModuleConfig::validate() const {
  require(!enabled.empty(), ErrorCode::ConfigError, "at least one vision module must be enabled");
  require(top_k_tags >= 1, ErrorCode::ConfigError, "top_k_tags must be >= 1");
  require(top_k_attributes >= 1, ErrorCode::ConfigError, "top_k_attributes must be >= 1");
  require(num_captions >= 1 && num_captions <= kMaxCaptions, ErrorCode::ConfigError,
          "num_captions must be in [1, 50]");
  require(tag_prompt.find("{classname}") != std::string::npos, ErrorCode::ConfigError,
          "tag prompt must contain {classname}");
  if (has(VisionModule::Captions)) caption_params().validate();
}

GenerationParams ModuleConfig::caption_params() const {
  GenerationParams p;
  p.num_captions = num_captions;
  p.seed = seed;
  if (caption_top_k) {
    p.num_beams = 1;
    p.top_k = caption_top_k;
  } else {
    p.num_beams = caption_beams;
  }
  return p;
}

std::string ModuleConfig::fingerprint() const {
  std::string s = "modules=";
  for (auto m : enabled) s += std::string(to_string(m)) + "+";
  s += ";k_tags=" + std::to_string(top_k_tags) + ";k_attrs=" + std::to_string(top_k_attributes) +
       ";captions=" + std::to_string(num_captions) +
       ";scope=" + (attribute_scope == AttributeScope::TopTaggedClass ? "top-tag" : "all") +
       ";beams=" + std::to_string(caption_beams) +
       ";top_k=" + (caption_top_k ? std::to_string(*caption_top_k) : "none") + ";seed=" + std::to_string(seed) +
       ";tag_prompt=" + tag_prompt + ";attr_prompt=" + attribute_prompt;
  return s;
}

ModuleConfig ModuleConfig::recognition() {
  ModuleConfig c;
  c.enabled = {VisionModule::Tags, VisionModule::Attributes};
  c.attribute_scope = AttributeScope::TopTaggedClass;
  return c;
}

ModuleConfig ModuleConfig::vqa() {
  ModuleConfig c;
  c.enabled = {VisionModule::Captions};
  c.num_captions = kMaxCaptions;
  c.caption_top_k = 50;
  return c;
}

ModuleConfig ModuleConfig::memes() {
  ModuleConfig c;
  c.enabled = {VisionModule::Tags, VisionModule::Attributes, VisionModule::Captions, VisionModule::Ocr};
  c.attribute_scope = AttributeScope::AllClasses;
  c.num_captions = 1;
  c.caption_beams = 5;
  return c;
}

ModuleConfig ModuleConfig::sentiment() { return memes(); }

// ---------------------------------------------------------------------------
// Ranking

std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  idx.resize(k);
  return idx;
}

LabelIndex::LabelIndex(std::vector<std::string> labels, std::vector<std::string> prompts, EncoderBackend& encoder)
    : labels_(std::move(labels)) {
  require(labels_.size() == prompts.size(), ErrorCode::InvalidArgument, "one prompt per label required");
  if (!prompts.empty()) embeddings_ = encoder.embed_texts(prompts);
}

std::vector<double> LabelIndex::similarities(const Embedding& image) const {
  std::vector<double> s(embeddings_.size());
  for (std::size_t i = 0; i < embeddings_.size(); ++i) s[i] = image.dot(embeddings_[i]);
  return s;
}

LabelIndex build_tag_index(const TagVocabulary& vocab, EncoderBackend& encoder, const std::string& prompt_template) {
  std::vector<std::string> prompts;
  prompts.reserve(vocab.tags.size());
  for (const auto& t : vocab.tags) {
    auto p = prompt_template;
    text::replace_all(p, "{classname}", t);
    prompts.push_back(std::move(p));
  }
  return LabelIndex(vocab.tags, std::move(prompts), encoder);
}

std::vector<Scored> rank_tags(const Embedding& image, const LabelIndex& index, int k) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  require(index.size() > 0, ErrorCode::InvalidArgument, "tag vocabulary is empty");
  const auto scores = index.similarities(image);
  std::vector<Scored> out;
  for (auto i : top_k_indices(scores, static_cast<std::size_t>(k))) out.push_back({index.labels()[i], scores[i]});
  return out;
}

std::vector<Scored> tag_image(const ImageRef& image, const TagVocabulary& vocab, EncoderBackend& encoder, int k) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  require(!vocab.tags.empty(), ErrorCode::InvalidArgument, "tag vocabulary is empty");
  const auto index = build_tag_index(vocab, encoder);
  return rank_tags(encoder.embed_image(image), index, k);
}

std::string descriptor_clause(const std::string& descriptor) {
  const auto words = text::split_whitespace(text::to_lower_ascii(descriptor));
  const std::string first = words.empty() ? "" : words.front();
  static const std::unordered_set<std::string> verbs = {"has",   "have", "is",    "are",      "was",
                                                        "often", "may",  "can",   "typically", "usually",
                                                        "with",  "made", "which"};
  if (first == "a" || first == "an" || first == "the" || first == "used") return "which is " + descriptor;
  if (first == "which") return descriptor;
  if (verbs.count(first)) return "which " + descriptor;
  return "which has " + descriptor;
}

std::string attribute_prompt_text(const std::string& prompt_template, const std::string& class_name,
                                  const std::string& descriptor) {
  auto p = prompt_template;
  text::replace_all(p, "{classname}", class_name);
  text::replace_all(p, "{descriptor_clause}", descriptor_clause(descriptor));
  text::replace_all(p, "{descriptor}", descriptor);
  return p;
}

namespace {

// Ranks (class, descriptor) candidates and keeps the k best distinct
// descriptor strings.
std::vector<Scored> best_descriptors(const std::vector<double>& scores, const std::vector<std::string>& descriptors,
                                     std::size_t k) {
  std::vector<Scored> out;
  std::unordered_set<std::string> seen;
  for (auto i : top_k_indices(scores, scores.size())) {
    if (!seen.insert(descriptors[i]).second) continue;
    out.push_back({descriptors[i], scores[i]});
    if (out.size() == k) break;
  }
  return out;
}

}  // namespace

std::vector<Scored> attribute_image(const ImageRef& image, const AttributeVocabulary& attrs, EncoderBackend& encoder,
                                    int k, const std::vector<std::string>& scope_classes,
                                    const std::string& prompt_template) {
  require(k >= 1, ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<const AttributeEntry*> scope;
  if (scope_classes.empty()) {
    for (const auto& e : attrs.entries) scope.push_back(&e);
  } else {
    for (const auto& c : scope_classes) {
      const auto* e = attrs.find(c);
      if (!e) throw Error(ErrorCode::EmptyScope, "class '" + c + "' has no attribute entry");
      scope.push_back(e);
    }
  }
  std::vector<std::string> descriptors;
  std::vector<std::string> prompts;
  for (const auto* e : scope) {
    for (const auto& d : e->descriptors) {
      descriptors.push_back(d);
      prompts.push_back(attribute_prompt_text(prompt_template, e->class_name, d));
    }
  }
  if (descriptors.empty()) throw Error(ErrorCode::EmptyScope, "no descriptors in attribute scope");
  LabelIndex index(descriptors, prompts, encoder);
  return best_descriptors(index.similarities(encoder.embed_image(image)), descriptors, static_cast<std::size_t>(k));
}

std::vector<std::string> caption_image(const ImageRef& image, CaptionBackend& captioner,
                                       const GenerationParams& params) {
  // the backend boundary already removes blanks and duplicates in order
  return captioner.generate(image, params);
}

VisualDescription attach_ocr(VisualDescription desc, std::string_view text) {
  desc.ocr_text = text::trim(text);
  return desc;
}

// ---------------------------------------------------------------------------
// Describer

Describer::Describer(VisionDeps deps, ModuleConfig config) : deps_(deps), config_(std::move(config)) {
  config_.validate();
  const bool need_tags = config_.has(VisionModule::Tags) ||
                         (config_.has(VisionModule::Attributes) &&
                          config_.attribute_scope == AttributeScope::TopTaggedClass && deps_.tags);
  if (config_.has(VisionModule::Tags) || config_.has(VisionModule::Attributes)) {
    if (!deps_.encoder) throw Error(ErrorCode::BackendUnavailable, "tags/attributes modules need an encoder");
  }
  if (config_.has(VisionModule::Tags) && (!deps_.tags || deps_.tags->tags.empty())) {
    throw Error(ErrorCode::ConfigError, "tags module needs a non-empty tag vocabulary");
  }
  if (config_.has(VisionModule::Attributes) && !deps_.attributes) {
    throw Error(ErrorCode::ConfigError, "attributes module needs an attribute vocabulary");
  }
  if (config_.has(VisionModule::Captions) && !deps_.captioner) {
    throw Error(ErrorCode::BackendUnavailable, "captions module needs a captioner");
  }
  if (need_tags) tag_index_ = build_tag_index(*deps_.tags, *deps_.encoder, config_.tag_prompt);
  if (config_.has(VisionModule::Attributes)) {
    std::vector<std::string> prompts;
    for (std::size_t c = 0; c < deps_.attributes->entries.size(); ++c) {
      const auto& e = deps_.attributes->entries[c];
      for (const auto& d : e.descriptors) {
        attribute_class_.push_back(c);
        attribute_descriptor_.push_back(d);
        prompts.push_back(attribute_prompt_text(config_.attribute_prompt, e.class_name, d));
      }
    }
    if (attribute_descriptor_.empty()) throw Error(ErrorCode::EmptyScope, "attribute vocabulary has no descriptors");
    attribute_index_ = LabelIndex(attribute_descriptor_, std::move(prompts), *deps_.encoder);
  }
}

std::vector<Scored> Describer::rank_attributes(const Embedding& image, const std::vector<Scored>& tags) const {
  auto scores = attribute_index_.similarities(image);
  if (config_.attribute_scope == AttributeScope::TopTaggedClass && !tags.empty()) {
    const auto* entry = deps_.attributes->find(tags.front().text);
    if (entry && !entry->descriptors.empty()) {
      const auto cls = static_cast<std::size_t>(entry - deps_.attributes->entries.data());
      std::vector<double> scoped;
      std::vector<std::string> descs;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (attribute_class_[i] != cls) continue;
        scoped.push_back(scores[i]);
        descs.push_back(attribute_descriptor_[i]);
      }
      return best_descriptors(scoped, descs, static_cast<std::size_t>(config_.top_k_attributes));
    }
    // top tag has no descriptors: fall back to the full pool
  }
  return best_descriptors(scores, attribute_descriptor_, static_cast<std::size_t>(config_.top_k_attributes));
}

VisualDescription Describer::describe(const ImageRef& image, const std::optional<std::string>& ocr_text) const {
  VisualDescription desc;
  std::optional<Embedding> image_embedding;
  if (config_.has(VisionModule::Tags) || config_.has(VisionModule::Attributes)) {
    image_embedding = deps_.encoder->embed_image(image);
  }
  std::vector<Scored> ranked_tags;
  if (tag_index_.size() > 0) {
    const int k = config_.has(VisionModule::Tags) ? config_.top_k_tags : 1;
    ranked_tags = rank_tags(*image_embedding, tag_index_, k);
  }
  if (config_.has(VisionModule::Tags)) desc.tags = ranked_tags;
  if (config_.has(VisionModule::Attributes)) desc.attributes = rank_attributes(*image_embedding, ranked_tags);
  if (config_.has(VisionModule::Captions)) {
    desc.captions = caption_image(image, *deps_.captioner, config_.caption_params());
  }
  if (config_.has(VisionModule::Ocr) && ocr_text) desc = attach_ocr(std::move(desc), *ocr_text);
  return desc;
}

std::vector<std::string> Describer::backend_identities() const {
  std::vector<std::string> ids;
  if (deps_.encoder && (config_.has(VisionModule::Tags) || config_.has(VisionModule::Attributes))) {
    ids.push_back("encoder:" + deps_.encoder->identity());
  }
  if (deps_.captioner && config_.has(VisionModule::Captions)) ids.push_back("captioner:" + deps_.captioner->identity());
  return ids;
}

VisualDescription describe(const ImageRef& image, const ModuleConfig& config, const VisionDeps& deps,
                           const std::optional<std::string>& ocr_text) {
  return Describer(deps, config).describe(image, ocr_text);
}

// ---------------------------------------------------------------------------
// Descriptions file

json to_json(const DescriptionRecord& rec) {
  json j = {{"image_id", rec.image_id}, {"config_hash", rec.config_hash}, {"backends", rec.backends}};
  if (rec.description) {
    const auto d = to_json(*rec.description);
    for (const auto& [key, value] : d.items()) j[key] = value;
  }
  if (!rec.error.empty()) j["error"] = rec.error;
  return j;
}

DescriptionRecord description_record_from_json(const json& j) {
  DescriptionRecord rec;
  try {
    rec.image_id = j.at("image_id").get<std::string>();
    rec.config_hash = j.value("config_hash", "");
    rec.backends = j.value("backends", std::vector<std::string>{});
    rec.error = j.value("error", "");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed description record: ") + e.what());
  }
  if (rec.error.empty()) rec.description = description_from_json(j);
  return rec;
}

void save_descriptions(const std::vector<DescriptionRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

std::vector<DescriptionRecord> load_descriptions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::vector<DescriptionRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::ParseError, path + ": malformed JSON line");
    out.push_back(description_record_from_json(j));
  }
  return out;
}

}  // namespace lens
