#include "lens/normalize.hpp"

#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "lens/text.hpp"

namespace lens {

namespace {

constexpr std::array<char, 21> kPunct = {';', '/', '[', ']', '"', '{', '}', '(', ')', '=', '+',
                                         '\\', '_', '-', '>', '<', '@', '`', ',', '?', '!'};

bool has_digit_comma_digit(const std::string& s) {
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == ',' && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      return true;
    }
  }
  return false;
}

std::string strip_punctuation(std::string s) {
  const bool comma_strip = has_digit_comma_digit(s);
  for (char p : kPunct) {
    const std::string spaced_after{p, ' '};
    const std::string spaced_before{' ', p};
    const bool drop = comma_strip || s.find(spaced_after) != std::string::npos ||
                      s.find(spaced_before) != std::string::npos;
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
      if (c != p) {
        out.push_back(c);
      } else if (!drop) {
        out.push_back(' ');
      }
    }
    s = std::move(out);
  }
  // periods survive only when a digit follows ("3.5")
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '.' && !(i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1])))) continue;
    out.push_back(s[i]);
  }
  return out;
}

const std::unordered_map<std::string, std::string>& number_words() {
  static const std::unordered_map<std::string, std::string> m = {
      {"none", "0"}, {"zero", "0"}, {"one", "1"}, {"two", "2"},   {"three", "3"}, {"four", "4"},
      {"five", "5"}, {"six", "6"},  {"seven", "7"}, {"eight", "8"}, {"nine", "9"},  {"ten", "10"}};
  return m;
}

const std::unordered_map<std::string, std::string>& contractions() {
  static const std::unordered_map<std::string, std::string> m = {
      {"aint", "ain't"},     {"arent", "aren't"},   {"cant", "can't"},       {"couldnt", "couldn't"},
      {"didnt", "didn't"},   {"doesnt", "doesn't"}, {"dont", "don't"},       {"hadnt", "hadn't"},
      {"hasnt", "hasn't"},   {"havent", "haven't"}, {"hes", "he's"},         {"im", "i'm"},
      {"isnt", "isn't"},     {"itll", "it'll"},     {"ive", "i've"},         {"shouldnt", "shouldn't"},
      {"thats", "that's"},   {"theres", "there's"}, {"theyre", "they're"},   {"wasnt", "wasn't"},
      {"werent", "weren't"}, {"whats", "what's"},   {"wont", "won't"},       {"wouldnt", "wouldn't"},
      {"youre", "you're"},   {"youve", "you've"}};
  return m;
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  std::string s = text::to_lower_ascii(answer);
  for (char& c : s) {
    if (c == '\n' || c == '\t' || c == '\r') c = ' ';
  }
  s = strip_punctuation(text::trim(s));
  static const std::unordered_set<std::string> articles = {"a", "an", "the"};
  std::vector<std::string> words;
  for (auto& w : text::split_whitespace(s)) {
    if (auto it = number_words().find(w); it != number_words().end()) w = it->second;
    if (articles.count(w)) continue;
    if (auto it = contractions().find(w); it != contractions().end()) w = it->second;
    words.push_back(std::move(w));
  }
  return text::join(words, " ");
}

}  // namespace lens
