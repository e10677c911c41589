#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lens/vision.hpp"

namespace lens {

enum class TaskKind { Recognition, Vqa, Memes, Sentiment };

std::string_view to_string(TaskKind kind);
TaskKind parse_task_kind(std::string_view name);

struct TaskSpec {
  TaskKind kind = TaskKind::Vqa;
  // "{question}" is replaced by the per-example question.
  std::string question_template = "{question}";
  // Set for close-ended tasks.
  std::optional<std::vector<std::string>> answer_space;

  bool close_ended() const { return answer_space.has_value(); }
  std::string question(std::string_view example_question = {}) const;
  void validate() const;

  static TaskSpec recognition(std::vector<std::string> classes);
  static TaskSpec vqa();
  static TaskSpec memes();
  static TaskSpec sentiment();
};

struct Shot {
  VisualDescription description;
  std::string question;
  std::string answer;
};

struct PromptBundle {
  std::string rendered;
  // query block sections in render order, e.g. ("Tags", "dog, pet")
  std::vector<std::pair<std::string, std::string>> parts;
  std::vector<Shot> shots;
};

// One block: description sections, then "Question: ..." and
// "Short Answer:" (followed by " answer" for solved shots).
std::string render_block(const VisualDescription& desc, std::string_view question,
                         std::optional<std::string_view> answer = std::nullopt);

PromptBundle render_prompt(const VisualDescription& desc, const TaskSpec& task, std::string_view question = {});

// Solved shot blocks first, separated by blank lines, then the query block.
PromptBundle render_few_shot(const VisualDescription& query_desc, const TaskSpec& task, std::string_view question,
                             const std::vector<Shot>& shots);

using TokenCounter = std::function<std::size_t(std::string_view)>;

std::size_t estimate_budget(const PromptBundle& bundle, const TokenCounter& count_tokens);

struct BudgetReport {
  std::size_t captions_dropped = 0;
  std::size_t attributes_dropped = 0;
  std::size_t tokens = 0;
  bool fits = true;
};

// Renders, then drops trailing captions and after them trailing attributes
// until the prompt fits `window`. Tags, OCR, shots and the question are never
// touched; `fits` is false if the prompt is still too long.
PromptBundle fit_to_budget(const VisualDescription& query_desc, const TaskSpec& task, std::string_view question,
                           const std::vector<Shot>& shots, const TokenCounter& count_tokens, std::size_t window,
                           BudgetReport* report = nullptr);

// Few-shot support sampling: `n` distinct indices into `labels`. When there
// are at least `n` distinct labels each shot comes from a different class;
// otherwise indices are drawn uniformly without replacement.
std::vector<std::size_t> sample_shot_indices(std::span<const std::string> labels, std::size_t n, std::uint64_t seed);

}  // namespace lens
