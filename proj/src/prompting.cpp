#include "lens/prompting.hpp"

#include <algorithm>
#include <random>

#include "lens/error.hpp"
#include "lens/text.hpp"

namespace lens {

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Recognition: return "recognition";
    case TaskKind::Vqa: return "vqa";
    case TaskKind::Memes: return "memes";
    case TaskKind::Sentiment: return "sentiment";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view name) {
  const auto n = text::canonicalize(name);
  if (n == "recognition") return TaskKind::Recognition;
  if (n == "vqa") return TaskKind::Vqa;
  if (n == "memes") return TaskKind::Memes;
  if (n == "sentiment") return TaskKind::Sentiment;
  throw Error(ErrorCode::ConfigError, "unknown task kind: " + std::string(name));
}

std::string TaskSpec::question(std::string_view example_question) const {
  std::string q = question_template;
  if (q.find("{question}") != std::string::npos) {
    require(!text::trim(example_question).empty(), ErrorCode::InvalidArgument,
            "task needs a per-example question");
    text::replace_all(q, "{question}", text::trim(example_question));
  }
  return q;
}

void TaskSpec::validate() const {
  require(!text::trim(question_template).empty(), ErrorCode::ConfigError, "question template is blank");
  if (answer_space) {
    require(!answer_space->empty(), ErrorCode::ConfigError, "close-ended task needs a non-empty answer space");
  }
}

TaskSpec TaskSpec::recognition(std::vector<std::string> classes) {
  return {TaskKind::Recognition, "What is the main object in the image?", std::move(classes)};
}

TaskSpec TaskSpec::vqa() { return {TaskKind::Vqa, "{question}", std::nullopt}; }

TaskSpec TaskSpec::memes() {
  return {TaskKind::Memes, "Is the image hateful or not hateful?",
          std::vector<std::string>{"hateful", "not hateful"}};
}

TaskSpec TaskSpec::sentiment() {
  return {TaskKind::Sentiment, "Is the sentiment of the text in the image positive or negative?", std::nullopt};
}

namespace {

std::vector<std::pair<std::string, std::string>> sections(const VisualDescription& desc) {
  std::vector<std::pair<std::string, std::string>> out;
  auto texts = [](const std::vector<Scored>& items) {
    std::vector<std::string> t;
    for (const auto& s : items) t.push_back(s.text);
    return text::join(t, ", ");
  };
  if (desc.tags) out.emplace_back("Tags", texts(*desc.tags));
  if (desc.attributes) out.emplace_back("Attributes", texts(*desc.attributes));
  if (desc.captions) out.emplace_back("Captions", text::join(*desc.captions, "\n"));
  if (desc.ocr_text) out.emplace_back("OCR", "this is an image with written \"" + *desc.ocr_text + "\" on it");
  return out;
}

}  // namespace

std::string render_block(const VisualDescription& desc, std::string_view question,
                         std::optional<std::string_view> answer) {
  std::string out;
  for (const auto& [name, body] : sections(desc)) {
    out += name + ":";
    if (name == "Captions") {
      if (!body.empty()) out += "\n" + body;
    } else if (!body.empty()) {
      out += " " + body;
    }
    out += "\n";
  }
  out += "Question: ";
  out += question;
  out += "\nShort Answer:";
  if (answer) {
    out += " ";
    out += *answer;
  }
  return out;
}

PromptBundle render_prompt(const VisualDescription& desc, const TaskSpec& task, std::string_view question) {
  return render_few_shot(desc, task, question, {});
}

PromptBundle render_few_shot(const VisualDescription& query_desc, const TaskSpec& task, std::string_view question,
                             const std::vector<Shot>& shots) {
  require(!query_desc.empty(), ErrorCode::EmptyDescription, "description has no populated fields");
  PromptBundle bundle;
  for (const auto& shot : shots) {
    require(!text::trim(shot.answer).empty(), ErrorCode::ShotMissingAnswer, "few-shot example has no answer");
    require(!shot.description.empty(), ErrorCode::EmptyDescription, "few-shot example has an empty description");
    bundle.rendered += render_block(shot.description, task.question(shot.question), text::trim(shot.answer));
    bundle.rendered += "\n\n";
  }
  const auto q = task.question(question);
  bundle.rendered += render_block(query_desc, q);
  bundle.parts = sections(query_desc);
  bundle.parts.emplace_back("Question", q);
  bundle.parts.emplace_back("Short Answer", "");
  bundle.shots = shots;
  return bundle;
}

std::size_t estimate_budget(const PromptBundle& bundle, const TokenCounter& count_tokens) {
  return count_tokens(bundle.rendered);
}

PromptBundle fit_to_budget(const VisualDescription& query_desc, const TaskSpec& task, std::string_view question,
                           const std::vector<Shot>& shots, const TokenCounter& count_tokens, std::size_t window,
                           BudgetReport* report) {
  VisualDescription desc = query_desc;
  BudgetReport r;
  auto bundle = render_few_shot(desc, task, question, shots);
  r.tokens = estimate_budget(bundle, count_tokens);
  while (r.tokens > window) {
    if (desc.captions && !desc.captions->empty()) {
      desc.captions->pop_back();
      ++r.captions_dropped;
    } else if (desc.attributes && !desc.attributes->empty()) {
      desc.attributes->pop_back();
      ++r.attributes_dropped;
    } else {
      break;
    }
    bundle = render_few_shot(desc, task, question, shots);
    r.tokens = estimate_budget(bundle, count_tokens);
  }
  r.fits = r.tokens <= window;
  if (report) *report = r;
  return bundle;
}

std::vector<std::size_t> sample_shot_indices(std::span<const std::string> labels, std::size_t n, std::uint64_t seed) {
  require(n <= labels.size(), ErrorCode::InvalidArgument,
          "support set has " + std::to_string(labels.size()) + " examples, " + std::to_string(n) + " shots requested");
  std::mt19937_64 rng(seed);
  std::vector<std::string> classes;
  for (const auto& l : labels) {
    if (!l.empty() && std::find(classes.begin(), classes.end(), l) == classes.end()) classes.push_back(l);
  }
  std::vector<std::size_t> picked;
  if (n > 0 && classes.size() >= n) {
    std::shuffle(classes.begin(), classes.end(), rng);
    for (std::size_t c = 0; c < n; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == classes[c]) members.push_back(i);
      }
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      picked.push_back(members[pick(rng)]);
    }
    return picked;
  }
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(n);
  return all;
}

}  // namespace lens
