#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lens/backends.hpp"
#include "lens/prompting.hpp"

namespace lens {

struct Answer {
  std::string text;
  // (candidate, length-normalized log-likelihood), answer-space order
  std::optional<std::vector<std::pair<std::string, double>>> candidate_scores;
  // P(positive) for binary-scored tasks
  std::optional<double> positive_score;
  // the LLM produced only whitespace; text is the "" sentinel
  bool generation_failed = false;
  // close-ended answer obtained by generate-then-match
  bool used_fallback = false;
};

Answer answer_open(LLMBackend& llm, const PromptBundle& bundle, const GenerationParams& params = {});

// Scores every candidate as the continuation after "Short Answer: " and
// returns the argmax (ties: lexicographically smallest). Generate-only
// backends fall back to generating an answer and mapping it to the closest
// candidate.
Answer answer_close(LLMBackend& llm, const PromptBundle& bundle, const std::vector<std::string>& answer_space,
                    const GenerationParams& params = {});

// Two-way softmax over the length-normalized scores of `positive` and
// `negative`. Requires a scoring backend.
Answer score_binary(LLMBackend& llm, const PromptBundle& bundle, const std::string& positive,
                    const std::string& negative);

// Log-likelihood of `candidate` after the prompt, divided by its token count.
double candidate_score(LLMBackend& llm, const std::string& rendered_prompt, const std::string& candidate);

// exp(pos) / (exp(pos) + exp(neg)), computed without overflow.
double binary_probability(double positive_score, double negative_score);

// Index of the candidate whose normalized form equals the normalized
// generation; otherwise the smallest edit distance (ties: lexicographically
// smallest candidate).
std::size_t nearest_candidate(std::string_view generated, std::span<const std::string> candidates);

}  // namespace lens
