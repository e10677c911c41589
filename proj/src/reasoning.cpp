#include "lens/reasoning.hpp"

#include <cmath>

#include "lens/error.hpp"
#include "lens/normalize.hpp"
#include "lens/text.hpp"

namespace lens {

Answer answer_open(LLMBackend& llm, const PromptBundle& bundle, const GenerationParams& params) {
  Answer a;
  a.text = llm.generate(bundle.rendered, params);
  a.generation_failed = a.text.empty();
  return a;
}

double candidate_score(LLMBackend& llm, const std::string& rendered_prompt, const std::string& candidate) {
  const auto tokens = llm.count_tokens(candidate);
  require(tokens > 0, ErrorCode::InvalidArgument, "candidate '" + candidate + "' has no tokens");
  return llm.score(rendered_prompt + " ", candidate) / static_cast<double>(tokens);
}

double binary_probability(double positive_score, double negative_score) {
  const double d = negative_score - positive_score;
  if (d >= 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

std::size_t nearest_candidate(std::string_view generated, std::span<const std::string> candidates) {
  require(!candidates.empty(), ErrorCode::InvalidArgument, "candidate list is empty");
  const auto target = normalize_answer(generated);
  std::optional<std::size_t> exact;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (normalize_answer(candidates[i]) != target) continue;
    if (!exact || candidates[i] < candidates[*exact]) exact = i;
  }
  if (exact) return *exact;
  std::size_t best = 0;
  std::size_t best_dist = text::edit_distance(target, normalize_answer(candidates[0]));
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto d = text::edit_distance(target, normalize_answer(candidates[i]));
    if (d < best_dist || (d == best_dist && candidates[i] < candidates[best])) {
      best = i;
      best_dist = d;
    }
  }
  return best;
}

Answer answer_close(LLMBackend& llm, const PromptBundle& bundle, const std::vector<std::string>& answer_space,
                    const GenerationParams& params) {
  require(!answer_space.empty(), ErrorCode::InvalidArgument, "answer space is empty");
  Answer a;
  if (answer_space.size() == 1) {
    a.text = answer_space.front();
    return a;
  }
  if (llm.mode() != LLMMode::LocalScored) {
    const auto generated = llm.generate(bundle.rendered, params);
    a.text = answer_space[nearest_candidate(generated, answer_space)];
    a.used_fallback = true;
    a.generation_failed = generated.empty();
    return a;
  }
  std::vector<std::pair<std::string, double>> scores;
  scores.reserve(answer_space.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < answer_space.size(); ++i) {
    scores.emplace_back(answer_space[i], candidate_score(llm, bundle.rendered, answer_space[i]));
    if (i == 0) continue;
    const double s = scores[i].second;
    const double b = scores[best].second;
    if (s > b || (s == b && answer_space[i] < answer_space[best])) best = i;
  }
  a.text = answer_space[best];
  a.candidate_scores = std::move(scores);
  return a;
}

Answer score_binary(LLMBackend& llm, const PromptBundle& bundle, const std::string& positive,
                    const std::string& negative) {
  if (llm.mode() != LLMMode::LocalScored) {
    throw Error(ErrorCode::ScoringUnsupported, "binary scoring needs a local-scored LLM, got " + llm.identity());
  }
  const double sp = candidate_score(llm, bundle.rendered, positive);
  const double sn = candidate_score(llm, bundle.rendered, negative);
  Answer a;
  a.positive_score = binary_probability(sp, sn);
  a.text = *a.positive_score >= 0.5 ? positive : negative;
  a.candidate_scores = std::vector<std::pair<std::string, double>>{{positive, sp}, {negative, sn}};
  return a;
}

}  // namespace lens
