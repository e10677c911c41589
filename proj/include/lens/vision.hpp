#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "lens/backends.hpp"
#include "lens/vocabulary.hpp"

namespace lens {

inline constexpr const char* kTagPrompt = "A photo of {classname}";
// {descriptor_clause} expands to "which is/has ..." depending on the descriptor.
inline constexpr const char* kAttributePrompt = "{classname}, {descriptor_clause}";

struct Scored {
  std::string text;
  double score = 0.0;

  bool operator==(const Scored&) const = default;
};

// The textual bundle extracted from one image. Absent optionals mean the
// corresponding module was not enabled.
struct VisualDescription {
  std::optional<std::vector<Scored>> tags;
  std::optional<std::vector<Scored>> attributes;
  std::optional<std::vector<std::string>> captions;
  std::optional<std::string> ocr_text;

  bool empty() const { return !tags && !attributes && !captions && !ocr_text; }
  bool operator==(const VisualDescription&) const = default;
};

nlohmann::json to_json(const VisualDescription& desc);
VisualDescription description_from_json(const nlohmann::json& j);

enum class VisionModule { Tags, Attributes, Captions, Ocr };

std::string_view to_string(VisionModule m);
VisionModule parse_vision_module(std::string_view name);
// Comma-separated list, e.g. "tags,attributes".
std::set<VisionModule> parse_module_list(std::string_view list);

enum class AttributeScope { TopTaggedClass, AllClasses };

struct ModuleConfig {
  int top_k_tags = 5;
  int top_k_attributes = 5;
  int num_captions = 1;
  std::set<VisionModule> enabled;
  AttributeScope attribute_scope = AttributeScope::TopTaggedClass;
  // Captioning strategy: beam search of width `caption_beams`, or top-k
  // token sampling when `caption_top_k` is set.
  int caption_beams = 5;
  std::optional<int> caption_top_k;
  std::uint64_t seed = 0;
  std::string tag_prompt = kTagPrompt;
  std::string attribute_prompt = kAttributePrompt;

  bool has(VisionModule m) const { return enabled.count(m) > 0; }
  void validate() const;
  GenerationParams caption_params() const;
  std::string fingerprint() const;

  // Per-task module selections.
  static ModuleConfig recognition();
  static ModuleConfig vqa();
  static ModuleConfig memes();
  static ModuleConfig sentiment();

  bool operator==(const ModuleConfig&) const = default;
};

// Indices of the k largest scores, best first; equal scores keep index order.
std::vector<std::size_t> top_k_indices(std::span<const double> scores, std::size_t k);

// Precomputed unit text embeddings for a fixed list of labels.
class LabelIndex {
 public:
  LabelIndex() = default;
  LabelIndex(std::vector<std::string> labels, std::vector<std::string> prompts, EncoderBackend& encoder);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<Embedding>& embeddings() const { return embeddings_; }

  std::vector<double> similarities(const Embedding& image) const;

 private:
  std::vector<std::string> labels_;
  std::vector<Embedding> embeddings_;
};

LabelIndex build_tag_index(const TagVocabulary& vocab, EncoderBackend& encoder,
                           const std::string& prompt_template = kTagPrompt);

// "which is ...", "which has ..." clause for a descriptor phrase.
std::string descriptor_clause(const std::string& descriptor);
std::string attribute_prompt_text(const std::string& prompt_template, const std::string& class_name,
                                  const std::string& descriptor);

std::vector<Scored> tag_image(const ImageRef& image, const TagVocabulary& vocab, EncoderBackend& encoder, int k);
std::vector<Scored> rank_tags(const Embedding& image, const LabelIndex& index, int k);

// Scope: empty list means all classes.
std::vector<Scored> attribute_image(const ImageRef& image, const AttributeVocabulary& attrs, EncoderBackend& encoder,
                                    int k, const std::vector<std::string>& scope_classes = {},
                                    const std::string& prompt_template = kAttributePrompt);

std::vector<std::string> caption_image(const ImageRef& image, CaptionBackend& captioner,
                                       const GenerationParams& params);

VisualDescription attach_ocr(VisualDescription desc, std::string_view text);

struct VisionDeps {
  EncoderBackend* encoder = nullptr;
  CaptionBackend* captioner = nullptr;
  const TagVocabulary* tags = nullptr;
  const AttributeVocabulary* attributes = nullptr;
};

// Holds the text-side embeddings for one (config, vocabularies, encoder)
// combination so images can be described without re-embedding the vocabulary.
class Describer {
 public:
  Describer(VisionDeps deps, ModuleConfig config);

  const ModuleConfig& config() const { return config_; }
  VisualDescription describe(const ImageRef& image, const std::optional<std::string>& ocr_text = {}) const;
  // identities of the backends the enabled modules use
  std::vector<std::string> backend_identities() const;

 private:
  std::vector<Scored> rank_attributes(const Embedding& image, const std::vector<Scored>& tags) const;

  VisionDeps deps_;
  ModuleConfig config_;
  LabelIndex tag_index_;
  // one entry per (class, descriptor) pair, attribute-vocabulary order
  LabelIndex attribute_index_;
  std::vector<std::size_t> attribute_class_;
  std::vector<std::string> attribute_descriptor_;
};

VisualDescription describe(const ImageRef& image, const ModuleConfig& config, const VisionDeps& deps,
                           const std::optional<std::string>& ocr_text = {});

// One line of a descriptions file.
struct DescriptionRecord {
  std::string image_id;
  std::optional<VisualDescription> description;
  std::string error;  // set when the image failed
  std::string config_hash;
  std::vector<std::string> backends;
};

nlohmann::json to_json(const DescriptionRecord& rec);
DescriptionRecord description_record_from_json(const nlohmann::json& j);
void save_descriptions(const std::vector<DescriptionRecord>& records, const std::string& path);
std::vector<DescriptionRecord> load_descriptions(const std::string& path);

}  // namespace lens
