#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lens/backends.hpp"

namespace lens {

inline constexpr const char* kVocabularySchemaVersion = "1";
inline constexpr const char* kDefaultAttributeTemplate =
    "What are useful visual features for distinguishing a {classname} in a photo?";

// Canonicalized, deduplicated union of class names. Order is first
// occurrence across the sources in the order they were given.
struct TagVocabulary {
  std::vector<std::string> tags;
  std::vector<std::string> sources;
  std::string version = kVocabularySchemaVersion;

  bool contains(const std::string& tag) const;
  bool operator==(const TagVocabulary&) const = default;
};

struct AttributeEntry {
  std::string class_name;
  std::vector<std::string> descriptors;

  bool operator==(const AttributeEntry&) const = default;
};

struct AttributeVocabulary {
  std::vector<AttributeEntry> entries;  // tag-vocabulary order
  std::string generator_identity;

  const AttributeEntry* find(const std::string& class_name) const;
  bool operator==(const AttributeVocabulary&) const = default;
};

struct AttributeFailure {
  std::string class_name;
  std::string reason;
};

struct AttributeGeneration {
  AttributeVocabulary vocabulary;
  std::vector<AttributeFailure> failures;  // classes that ended with an empty list
};

TagVocabulary build_tag_vocabulary(const std::vector<std::pair<std::string, std::vector<std::string>>>& class_lists);

// Splits raw LLM output into descriptors: one per line, list bullets and
// numbering removed, blanks dropped, duplicates removed.
std::vector<std::string> parse_descriptor_list(std::string_view raw);

// Queries the LLM once per class with `prompt_template` ({classname}
// substituted). Per-class backend errors are recorded, not thrown.
AttributeGeneration generate_attributes(const TagVocabulary& vocab, LLMBackend& llm,
                                        const std::string& prompt_template = kDefaultAttributeTemplate,
                                        const GenerationParams& params = {});

// Line-delimited JSON: a header record then one record per tag / class.
void save_vocabulary(const TagVocabulary& vocab, const std::string& path);
void save_vocabulary(const AttributeVocabulary& vocab, const std::string& path);
TagVocabulary load_tag_vocabulary(const std::string& path);
// When `tags` is given, every class key must belong to it.
AttributeVocabulary load_attribute_vocabulary(const std::string& path, const TagVocabulary* tags = nullptr);

// Reads a sources manifest for `lens vocab build`: JSON lines of
// {"source": id, "classes": [..]} or {"source": id, "file": path} where the
// file lists one class per line.
std::vector<std::pair<std::string, std::vector<std::string>>> load_source_manifest(const std::string& path);

}  // namespace lens
