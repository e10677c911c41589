#include "doctest.h"

#include <random>
#include <set>

#include "lens/error.hpp"
#include "lens/prompting.hpp"
#include "lens/text.hpp"
#include "test_util.hpp"

using namespace lens;

namespace {

std::string golden(const std::string& name) { return testutil::read_file(std::string(LENS_TEST_DATA) + "/golden/" + name); }

std::vector<Scored> scored(std::initializer_list<const char*> items) {
  std::vector<Scored> out;
  double s = 1.0;
  for (const auto* i : items) out.push_back({i, s -= 0.1});
  return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

VisualDescription vqa_desc() {
  VisualDescription d;
  d.captions = std::vector<std::string>{"a man riding a bicycle down a city street", "a cyclist wearing a blue helmet"};
  return d;
}

}  // namespace

TEST_CASE("documented two-section example") {
  VisualDescription d;
  d.tags = scored({"dog", "pet"});
  d.attributes = scored({"has a tail"});
  const TaskSpec task{TaskKind::Vqa, "{question}", std::nullopt};
  CHECK(render_prompt(d, task, "What is in the image?").rendered ==
        "Tags: dog, pet\nAttributes: has a tail\nQuestion: What is in the image?\nShort Answer:");
}

TEST_CASE("golden prompts for the four task kinds") {
  SUBCASE("recognition") {
    VisualDescription d;
    d.tags = scored({"golden retriever", "dog", "labrador retriever"});
    d.attributes = scored({"long golden fur", "floppy ears"});
    const auto task = TaskSpec::recognition({"golden retriever", "dog", "labrador retriever"});
    CHECK(render_prompt(d, task).rendered == golden("recognition.txt"));
  }
  SUBCASE("vqa") {
    CHECK(render_prompt(vqa_desc(), TaskSpec::vqa(), "What color is the helmet?").rendered == golden("vqa.txt"));
  }
  SUBCASE("memes") {
    VisualDescription d;
    d.tags = scored({"cat", "sofa"});
    d.attributes = scored({"fluffy fur", "pointed ears"});
    d.captions = std::vector<std::string>{"a cat sitting on a sofa"};
    d.ocr_text = "when monday hits";
    const auto p = render_prompt(d, TaskSpec::memes()).rendered;
    CHECK(p == golden("memes.txt"));
    CHECK(p.find("OCR: this is an image with written \"") != std::string::npos);
  }
  SUBCASE("sentiment") {
    VisualDescription d;
    d.tags = scored({"poster"});
    d.attributes = scored({"printed letters"});
    d.captions = std::vector<std::string>{"a white poster with black text"};
    d.ocr_text = "a gorgeous and deeply moving film";
    CHECK(render_prompt(d, TaskSpec::sentiment()).rendered == golden("sentiment.txt"));
  }
}

TEST_CASE("one-shot golden prompt") {
  VisualDescription shot_desc;
  shot_desc.captions = std::vector<std::string>{"a dog catching a frisbee in a park"};
  const std::vector<Shot> shots = {{shot_desc, "What is the dog catching?", "frisbee"}};
  const auto p = render_few_shot(vqa_desc(), TaskSpec::vqa(), "What color is the helmet?", shots);
  CHECK(p.rendered == golden("vqa_1shot.txt"));
  CHECK(count(p.rendered, "Short Answer:") == 2);
  CHECK(p.rendered.find("Short Answer: frisbee") < p.rendered.rfind("Short Answer:"));
}

TEST_CASE("zero shots equals render_prompt") {
  CHECK(render_few_shot(vqa_desc(), TaskSpec::vqa(), "q?", {}).rendered ==
        render_prompt(vqa_desc(), TaskSpec::vqa(), "q?").rendered);
}

TEST_CASE("n shots give n+1 question headers and a trailing open slot") {
  const auto task = TaskSpec::recognition({"a", "b", "c"});
  for (std::size_t n : {0u, 1u, 3u, 5u}) {
    std::vector<Shot> shots;
    for (std::size_t i = 0; i < n; ++i) {
      VisualDescription d;
      d.tags = scored({"t"});
      shots.push_back({d, "", "a"});
    }
    VisualDescription q;
    q.tags = scored({"x"});
    const auto p = render_few_shot(q, task, "", shots);
    CHECK(count(p.rendered, "Question:") == n + 1);
    CHECK(count(p.rendered, "Tags:") == n + 1);
    CHECK(p.rendered.size() >= 13);
    CHECK(p.rendered.substr(p.rendered.size() - 13) == "Short Answer:");
  }
}

TEST_CASE("section order is fixed and absent sections are omitted") {
  VisualDescription d;
  d.ocr_text = "o";
  d.captions = std::vector<std::string>{"c"};
  const auto p = render_prompt(d, TaskSpec::vqa(), "q").rendered;
  CHECK(p.find("Tags:") == std::string::npos);
  CHECK(p.find("Attributes:") == std::string::npos);
  CHECK(p.find("Captions:") < p.find("OCR:"));
  const auto parts = render_prompt(d, TaskSpec::vqa(), "q").parts;
  REQUIRE(parts.size() == 4);
  CHECK(parts[0].first == "Captions");
  CHECK(parts[1].first == "OCR");
  CHECK(parts[2] == std::pair<std::string, std::string>{"Question", "q"});
  CHECK(parts[3].first == "Short Answer");
}

TEST_CASE("empty OCR renders empty quotes") {
  VisualDescription d;
  d.ocr_text = "";
  CHECK(render_prompt(d, TaskSpec::memes()).rendered.find("OCR: this is an image with written \"\" on it") !=
        std::string::npos);
}

TEST_CASE("rendering errors") {
  try {
    render_prompt(VisualDescription{}, TaskSpec::vqa(), "q");
    FAIL("expected EmptyDescription");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDescription);
  }
  try {
    render_few_shot(vqa_desc(), TaskSpec::vqa(), "q", {{vqa_desc(), "q", "  "}});
    FAIL("expected ShotMissingAnswer");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShotMissingAnswer);
  }
  CHECK_THROWS_AS(render_prompt(vqa_desc(), TaskSpec::vqa(), "   "), Error);
}

TEST_CASE("rendering is injective on random content") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> len(1, 6);
  std::uniform_int_distribution<int> ch('a', 'z');
  auto word = [&] {
    std::string w;
    for (int i = len(rng); i > 0; --i) w.push_back(static_cast<char>(ch(rng)));
    return w;
  };
  std::set<std::string> seen;
  std::set<std::string> inputs;
  for (int i = 0; i < 300; ++i) {
    VisualDescription d;
    d.tags = std::vector<Scored>{{word(), 0.5}, {word(), 0.4}};
    d.captions = std::vector<std::string>{word() + " " + word()};
    const auto q = word();
    const std::string key = d.tags->at(0).text + "|" + d.tags->at(1).text + "|" + d.captions->at(0) + "|" + q;
    if (!inputs.insert(key).second) continue;
    CHECK(seen.insert(render_prompt(d, TaskSpec::vqa(), q).rendered).second);
  }
}

TEST_CASE("budget fitting drops trailing captions, then attributes") {
  VisualDescription d;
  d.tags = scored({"dog"});
  d.attributes = scored({"four legs", "a tail"});
  std::vector<std::string> caps;
  for (int i = 0; i < 50; ++i) caps.push_back("caption number " + std::to_string(i) + " about a dog on grass");
  d.captions = caps;
  const TokenCounter counter = [](std::string_view s) { return text::split_whitespace(s).size(); };

  BudgetReport r;
  const auto p = fit_to_budget(d, TaskSpec::vqa(), "what is it?", {}, counter, 100, &r);
  CHECK(r.fits);
  CHECK(counter(p.rendered) <= 100);
  CHECK(r.tokens == counter(p.rendered));
  CHECK(r.captions_dropped > 0);
  CHECK(r.attributes_dropped == 0);
  // survivors are a prefix of the original list
  CHECK(p.rendered.find("caption number 0 ") != std::string::npos);
  CHECK(p.rendered.find("caption number 49 ") == std::string::npos);
  CHECK(p.rendered.find("Question: what is it?") != std::string::npos);

  BudgetReport tight;
  const auto t = fit_to_budget(d, TaskSpec::vqa(), "what is it?", {}, counter, 12, &tight);
  CHECK(tight.captions_dropped == 50);
  CHECK(tight.attributes_dropped >= 1);
  CHECK(t.rendered.find("Tags: dog") != std::string::npos);
  CHECK(t.rendered.find("Question:") != std::string::npos);

  BudgetReport hopeless;
  fit_to_budget(d, TaskSpec::vqa(), "what is it?", {}, counter, 2, &hopeless);
  CHECK_FALSE(hopeless.fits);
}

TEST_CASE("minimal prompt budget counts question and answer slot only") {
  VisualDescription d;
  d.captions = std::vector<std::string>{};
  const TokenCounter counter = [](std::string_view s) { return text::split_whitespace(s).size(); };
  const auto p = render_prompt(d, TaskSpec::vqa(), "why");
  // "Captions:" "Question:" "why" "Short" "Answer:"
  CHECK(estimate_budget(p, counter) == 5);
}

TEST_CASE("shot sampler") {
  const std::vector<std::string> labels = {"a", "a", "b", "b", "c", "c", "d"};
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto idx = sample_shot_indices(labels, 3, seed);
    REQUIRE(idx.size() == 3);
    std::set<std::string> classes;
    std::set<std::size_t> uniq(idx.begin(), idx.end());
    for (auto i : idx) classes.insert(labels[i]);
    CHECK(classes.size() == 3);
    CHECK(uniq.size() == 3);
    CHECK(idx == sample_shot_indices(labels, 3, seed));
  }
  const std::vector<std::string> few = {"a", "a", "a", "b"};
  const auto idx = sample_shot_indices(few, 3, 1);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 3);
  CHECK(sample_shot_indices(few, 0, 1).empty());
  CHECK_THROWS_AS(sample_shot_indices(few, 5, 1), Error);
}

TEST_CASE("task specs") {
  CHECK(TaskSpec::memes().question() == "Is the image hateful or not hateful?");
  CHECK(TaskSpec::memes().close_ended());
  CHECK_FALSE(TaskSpec::vqa().close_ended());
  CHECK(TaskSpec::vqa().question(" How many? ") == "How many?");
  CHECK_THROWS_AS(TaskSpec::vqa().question(""), Error);
  TaskSpec bad{TaskKind::Recognition, "x", std::vector<std::string>{}};
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_task_kind("memes") == TaskKind::Memes);
  CHECK_THROWS_AS(parse_task_kind("poetry"), Error);
}
