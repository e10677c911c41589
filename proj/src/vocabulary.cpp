#include "lens/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "json.hpp"
#include "lens/error.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;

bool TagVocabulary::contains(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

const AttributeEntry* AttributeVocabulary::find(const std::string& class_name) const {
  auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.class_name == class_name; });
  return it == entries.end() ? nullptr : &*it;
}

TagVocabulary build_tag_vocabulary(const std::vector<std::pair<std::string, std::vector<std::string>>>& class_lists) {
  require(!class_lists.empty(), ErrorCode::EmptySource, "at least one tag source is required");
  TagVocabulary vocab;
  std::unordered_set<std::string> seen;
  for (const auto& [source, classes] : class_lists) {
    require(!classes.empty(), ErrorCode::EmptySource, "tag source '" + source + "' has no classes");
    vocab.sources.push_back(source);
    for (const auto& cls : classes) {
      auto tag = text::canonicalize(cls);
      if (tag.empty()) continue;
      if (seen.insert(tag).second) vocab.tags.push_back(std::move(tag));
    }
  }
  require(!vocab.tags.empty(), ErrorCode::EmptySource, "sources contain only blank class names");
  return vocab;
}

std::vector<std::string> parse_descriptor_list(std::string_view raw) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& line : text::split_lines(raw)) {
    std::string s = text::trim(line);
    // bullets: "-", "*", "•" and "1." / "1)" numbering
    if (s.rfind("\xE2\x80\xA2", 0) == 0) {
      s.erase(0, 3);
    } else if (!s.empty() && (s[0] == '-' || s[0] == '*')) {
      s.erase(0, 1);
    } else {
      std::size_t digits = 0;
      while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
      if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) s.erase(0, digits + 1);
    }
    s = text::trim(s);
    if (s.empty()) continue;
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

AttributeGeneration generate_attributes(const TagVocabulary& vocab, LLMBackend& llm, const std::string& prompt_template,
                                        const GenerationParams& params) {
  require(prompt_template.find("{classname}") != std::string::npos, ErrorCode::InvalidArgument,
          "attribute prompt template must contain {classname}");
  AttributeGeneration result;
  result.vocabulary.generator_identity = llm.identity();
  std::size_t unavailable = 0;
  for (const auto& cls : vocab.tags) {
    std::string prompt = prompt_template;
    text::replace_all(prompt, "{classname}", cls);
    AttributeEntry entry{cls, {}};
    try {
      entry.descriptors = parse_descriptor_list(llm.generate(prompt, params));
      if (entry.descriptors.empty()) result.failures.push_back({cls, "no descriptors in LLM output"});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::BackendUnavailable) ++unavailable;
      result.failures.push_back({cls, e.what()});
    }
    result.vocabulary.entries.push_back(std::move(entry));
  }
  if (!vocab.tags.empty() && unavailable == vocab.tags.size()) {
    throw Error(ErrorCode::BackendUnavailable, llm.identity() + " failed for every class");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

void write_lines(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  for (const auto& r : records) out << r.dump() << '\n';
  if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

std::vector<json> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::vector<json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::ParseError, path + ":" + std::to_string(lineno) + ": not a JSON object");
    }
    records.push_back(std::move(j));
  }
  if (records.empty()) throw Error(ErrorCode::ParseError, path + ": missing header record");
  return records;
}

void check_header(const json& header, const std::string& kind, const std::string& path) {
  if (header.value("kind", "") != kind) {
    throw Error(ErrorCode::ParseError, path + ": expected kind '" + kind + "'");
  }
  const auto version = header.contains("version") && header["version"].is_string()
                           ? header["version"].get<std::string>()
                           : std::string("<missing>");
  if (version != kVocabularySchemaVersion) {
    throw Error(ErrorCode::SchemaVersionMismatch, path + ": unsupported version " + version);
  }
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::ParseError, path + ": record missing or malformed field '" + key + "'");
  }
}

}  // namespace

void save_vocabulary(const TagVocabulary& vocab, const std::string& path) {
  std::vector<json> records;
  records.push_back({{"kind", "tags"}, {"version", vocab.version}, {"sources", vocab.sources}});
  for (const auto& t : vocab.tags) records.push_back({{"tag", t}});
  write_lines(path, records);
}

void save_vocabulary(const AttributeVocabulary& vocab, const std::string& path) {
  std::vector<json> records;
  records.push_back(
      {{"kind", "attributes"}, {"version", kVocabularySchemaVersion}, {"generator_identity", vocab.generator_identity}});
  for (const auto& e : vocab.entries) records.push_back({{"class", e.class_name}, {"descriptors", e.descriptors}});
  write_lines(path, records);
}

TagVocabulary load_tag_vocabulary(const std::string& path) {
  const auto records = read_lines(path);
  check_header(records[0], "tags", path);
  TagVocabulary vocab;
  vocab.sources = records[0].value("sources", std::vector<std::string>{});
  std::unordered_set<std::string> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    auto tag = get_field<std::string>(records[i], "tag", path);
    if (tag.empty() || tag != text::canonicalize(tag) || !seen.insert(tag).second) {
      throw Error(ErrorCode::ParseError, path + ": tag '" + tag + "' is blank, non-canonical or duplicated");
    }
    vocab.tags.push_back(std::move(tag));
  }
  return vocab;
}

AttributeVocabulary load_attribute_vocabulary(const std::string& path, const TagVocabulary* tags) {
  const auto records = read_lines(path);
  check_header(records[0], "attributes", path);
  AttributeVocabulary vocab;
  vocab.generator_identity = records[0].value("generator_identity", "");
  for (std::size_t i = 1; i < records.size(); ++i) {
    AttributeEntry e{get_field<std::string>(records[i], "class", path),
                     get_field<std::vector<std::string>>(records[i], "descriptors", path)};
    if (tags && !tags->contains(e.class_name)) {
      throw Error(ErrorCode::ParseError, path + ": class '" + e.class_name + "' is not in the tag vocabulary");
    }
    if (vocab.find(e.class_name)) throw Error(ErrorCode::ParseError, path + ": duplicate class " + e.class_name);
    vocab.entries.push_back(std::move(e));
  }
  return vocab;
}

std::vector<std::pair<std::string, std::vector<std::string>>> load_source_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  std::vector<std::pair<std::string, std::vector<std::string>>> sources;
  std::string line;
  const auto dir = path.find('/') == std::string::npos ? std::string() : path.substr(0, path.find_last_of('/') + 1);
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ParseError, path + ": malformed source record");
    auto source = get_field<std::string>(j, "source", path);
    std::vector<std::string> classes;
    if (j.contains("classes")) {
      classes = get_field<std::vector<std::string>>(j, "classes", path);
    } else {
      auto file = get_field<std::string>(j, "file", path);
      if (!file.empty() && file[0] != '/') file = dir + file;
      std::ifstream list(file);
      if (!list) throw Error(ErrorCode::IoError, "cannot read class list " + file);
      std::string cls;
      while (std::getline(list, cls)) {
        if (!text::trim(cls).empty()) classes.push_back(cls);
      }
    }
    sources.emplace_back(std::move(source), std::move(classes));
  }
  return sources;
}

}  // namespace lens
