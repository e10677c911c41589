#include "lens/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "httplib.h"

#include "lens/config.hpp"
#include "lens/evaluation.hpp"
#include "lens/reasoning.hpp"
#include "lens/service.hpp"
#include "lens/text.hpp"

namespace lens {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ImageDecodeError:
      return kExitImage;
    case ErrorCode::BackendUnavailable:
    case ErrorCode::SamplingUnsupported:
    case ErrorCode::ScoringUnsupported:
    case ErrorCode::ContextLengthExceeded:
      return kExitBackend;
    default:
      return kExitConfig;
  }
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::string backend_encoder;
  std::string backend_captioner;
  std::string backend_llm;
  std::optional<std::uint64_t> seed;
  std::string modules;
  std::string task;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON config file");
  cmd->add_option("--backend-encoder", o.backend_encoder, "encoder override, key=value[,key=value]");
  cmd->add_option("--backend-captioner", o.backend_captioner, "captioner override, key=value[,key=value]");
  cmd->add_option("--backend-llm", o.backend_llm, "LLM override, key=value[,key=value]");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--modules", o.modules, "enabled vision modules, e.g. tags,attributes");
}

// Without --config every role is a fixture-less mock.
AppConfig resolve_config(const CommonOptions& o) {
  AppConfig cfg;
  if (!o.config_path.empty()) {
    cfg = load_config(o.config_path);
  } else {
    cfg.backends = {{"encoder", {{"kind", "mock"}}}, {"captioner", {{"kind", "mock"}}}, {"llm", {{"kind", "mock"}}}};
  }
  if (!o.task.empty()) set_task(cfg, parse_task_kind(o.task));
  if (!o.backend_encoder.empty()) apply_backend_override(cfg, "encoder", o.backend_encoder);
  if (!o.backend_captioner.empty()) apply_backend_override(cfg, "captioner", o.backend_captioner);
  if (!o.backend_llm.empty()) apply_backend_override(cfg, "llm", o.backend_llm);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.modules.seed = *o.seed;
  }
  if (!o.modules.empty()) {
    try {
      cfg.modules.enabled = parse_module_list(o.modules);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    cfg.modules_explicit = true;
  }
  return cfg;
}

ImageRef checked_image(const std::string& path) {
  auto image = ImageRef::from_file(path);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::ImageDecodeError, "cannot read image file: " + path);
  image.load_payload();
  return image;
}

void write_text(const std::string& path, const std::string& content) {
  if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path);
  f << content;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto t = text::trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

int cmd_describe(const CommonOptions& co, const std::string& image_path, const std::string& ocr,
                 const std::string& out_path, std::ostream& out) {
  auto cfg = resolve_config(co);
  const auto image = checked_image(image_path);
  auto backends = make_backends(cfg);
  auto vocab = load_vocabularies(cfg);
  Describer describer(VisionDeps{backends.encoder.get(), backends.captioner.get(), vocab.tags_ptr(),
                                 vocab.attributes_ptr()},
                      cfg.modules);
  std::optional<std::string> ocr_text;
  if (!ocr.empty()) ocr_text = ocr;
  DescriptionRecord rec;
  rec.image_id = image.id;
  rec.description = describer.describe(image, ocr_text);
  rec.config_hash = text::hex64(text::fnv1a(cfg.modules.fingerprint()));
  rec.backends = describer.backend_identities();
  if (out_path.empty()) {
    out << to_json(rec).dump(2) << "\n";
  } else {
    save_descriptions({rec}, out_path);
  }
  return kExitOk;
}

struct AskOptions {
  std::string image;
  std::string question;
  std::string ocr;
  std::size_t shots = 0;
  std::string support;
  std::string trace;
  std::string answer_space;
};

int cmd_ask(const CommonOptions& co, const AskOptions& ao, std::ostream& out) {
  if (ao.shots > 0 && ao.support.empty()) throw UsageError("--shots needs --support <manifest>");
  auto cfg = resolve_config(co);
  const auto image = checked_image(ao.image);
  auto backends = make_backends(cfg);
  if (!backends.llm) throw Error(ErrorCode::BackendUnavailable, "no LLM backend configured");
  auto vocab = load_vocabularies(cfg);
  Describer describer(VisionDeps{backends.encoder.get(), backends.captioner.get(), vocab.tags_ptr(),
                                 vocab.attributes_ptr()},
                      cfg.modules);

  TaskSpec task{cfg.task, cfg.question_template.value_or("{question}"), std::nullopt};
  if (!ao.answer_space.empty()) task.answer_space = split_csv(ao.answer_space);
  task.validate();

  std::optional<std::string> ocr_text;
  if (!ao.ocr.empty()) ocr_text = ao.ocr;
  const auto desc = describer.describe(image, ocr_text);
  const auto question = task.question(ao.question);

  std::vector<Shot> shots;
  std::vector<std::string> shot_ids;
  if (ao.shots > 0) {
    const auto support = load_manifest(ao.support);
    for (const auto& ex : support.examples) {
      if (ex.image.id == image.id) {
        throw Error(ErrorCode::DataLeak, "query image " + image.id + " appears in the support set");
      }
    }
    std::vector<std::string> labels;
    for (const auto& ex : support.examples) {
      labels.push_back(!ex.label.empty() ? ex.label : (ex.answers.empty() ? "" : ex.answers.front()));
    }
    const auto seed = text::fnv1a(image.id + "\n" + question, cfg.seed);
    for (auto idx : sample_shot_indices(labels, ao.shots, seed)) {
      const auto& ex = support.examples[idx];
      const auto sq = ex.question.empty() && task.question_template.find("{question}") != std::string::npos
                          ? question
                          : task.question(ex.question);
      shots.push_back({describer.describe(ex.image, ex.ocr_text), sq, labels[idx]});
      shot_ids.push_back(ex.id);
    }
  }

  LLMBackend& llm = *backends.llm;
  const TokenCounter counter = [&llm](std::string_view s) { return llm.count_tokens(s); };
  BudgetReport budget;
  const auto bundle = fit_to_budget(desc, task, question, shots, counter, llm.context_window(), &budget);
  const auto answer = task.close_ended() ? answer_close(llm, bundle, *task.answer_space, cfg.llm_params)
                                         : answer_open(llm, bundle, cfg.llm_params);
  out << answer.text << "\n";
  if (!ao.trace.empty()) {
    json t = {{"image_id", image.id},
              {"question", question},
              {"answer", answer.text},
              {"prompt", bundle.rendered},
              {"prompt_hash", text::hex64(text::fnv1a(bundle.rendered))},
              {"description", to_json(desc)},
              {"shots", shot_ids},
              {"tokens", budget.tokens},
              {"captions_dropped", budget.captions_dropped},
              {"attributes_dropped", budget.attributes_dropped},
              {"llm", llm.identity()},
              {"generation_failed", answer.generation_failed},
              {"used_fallback", answer.used_fallback}};
    if (answer.candidate_scores) {
      json scores = json::array();
      for (const auto& [c, s] : *answer.candidate_scores) scores.push_back({{"candidate", c}, {"score", s}});
      t["candidate_scores"] = scores;
    }
    write_text(ao.trace, t.dump(2) + "\n");
  }
  return kExitOk;
}

struct BenchOptions {
  std::string manifest;
  std::string support;
  std::size_t shots = 0;
  std::string ablate;
  std::string caption_sweep;
  std::string out_dir;
};

std::vector<std::pair<std::string, ModuleConfig>> load_grid(const std::string& path, const ModuleConfig& base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot read ablation grid " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  if (!j.is_array() || j.empty()) throw Error(ErrorCode::ConfigError, "ablation grid must be a non-empty array");
  std::vector<std::pair<std::string, ModuleConfig>> grid;
  for (const auto& row : j) {
    if (!row.is_object() || !row.contains("name") || !row.contains("modules")) {
      throw Error(ErrorCode::ConfigError, "grid rows need name and modules");
    }
    grid.emplace_back(row["name"].get<std::string>(), module_config_from_json(row["modules"], base));
  }
  return grid;
}

int report_failures(const BenchmarkResult& r, double max_rate, std::ostream& out, std::ostream& err,
                    const std::string& label) {
  const auto& m = r.metric;
  out << label << to_string(m.metric) << " = " << m.value * 100.0 << " (n=" << m.n << ", failures=" << m.failures
      << ")\n";
  if (r.secondary) {
    out << label << "plain accuracy = " << r.secondary->value * 100.0 << "\n";
  }
  const double rate = static_cast<double>(m.failures) / static_cast<double>(m.n);
  if (rate > max_rate) {
    std::map<std::string, std::size_t> reasons;
    for (const auto& rec : r.records) {
      if (rec.failed) ++reasons[rec.error];
    }
    err << "failure rate " << rate << " exceeds " << max_rate << "\n";
    for (const auto& [why, n] : reasons) err << "  " << n << "x " << why << "\n";
    return kExitFailureRate;
  }
  return kExitOk;
}

int cmd_benchmark(const CommonOptions& co, const BenchOptions& bo, std::ostream& out, std::ostream& err) {
  if (bo.shots > 0 && bo.support.empty()) throw UsageError("--shots needs --support <manifest>");
  if (!bo.ablate.empty() && !bo.caption_sweep.empty()) throw UsageError("--ablate and --caption-sweep are exclusive");
  auto cfg = resolve_config(co);
  const auto manifest = load_manifest(bo.manifest);
  set_task(cfg, manifest.task);
  std::optional<DatasetManifest> support;
  if (!bo.support.empty()) support = load_manifest(bo.support);
  auto backends = make_backends(cfg);
  auto vocab = load_vocabularies(cfg);
  const auto pcfg = pipeline_config(cfg);
  BenchmarkOptions opts;
  opts.shots = bo.shots;
  opts.support = support ? &*support : nullptr;
  const auto out_dir = bo.out_dir.empty() ? "runs/" + text::canonicalize(manifest.name) : bo.out_dir;

  if (!bo.ablate.empty()) {
    const auto grid = load_grid(bo.ablate, cfg.modules);
    const auto rows =
        run_ablation(manifest, backends.view(), vocab.tags_ptr(), vocab.attributes_ptr(), pcfg, grid, opts);
    write_ablation_directory(out_dir, rows, manifest);
    int code = kExitOk;
    for (const auto& row : rows) {
      code = std::max(code, report_failures(row.result, cfg.max_failure_rate, out, err, row.name + ": "));
    }
    out << "wrote " << out_dir << "\n";
    return code;
  }
  if (!bo.caption_sweep.empty()) {
    if (bo.shots > 0) throw UsageError("--caption-sweep runs zero-shot");
    std::vector<std::size_t> counts;
    try {
      for (const auto& c : split_csv(bo.caption_sweep)) counts.push_back(std::stoul(c));
    } catch (const std::exception&) {
      throw UsageError("--caption-sweep takes comma-separated counts");
    }
    const auto sweep = run_caption_sweep(manifest, backends.view(), pcfg, counts);
    std::vector<AblationRow> rows;
    for (const auto& s : sweep) {
      rows.push_back({"captions=" + std::to_string(s.num_captions), pcfg.modules, s.result});
    }
    write_ablation_directory(out_dir, rows, manifest);
    int code = kExitOk;
    for (const auto& row : rows) {
      code = std::max(code, report_failures(row.result, cfg.max_failure_rate, out, err, row.name + ": "));
    }
    out << "wrote " << out_dir << "\n";
    return code;
  }
  const auto result =
      run_benchmark(manifest, backends.view(), vocab.tags_ptr(), vocab.attributes_ptr(), pcfg, opts);
  write_run_directory(out_dir, result, manifest);
  const int code = report_failures(result, cfg.max_failure_rate, out, err, "");
  out << "wrote " << out_dir << "\n";
  return code;
}

int cmd_vocab_build(const std::string& sources, const std::string& out_path, std::ostream& out) {
  const auto vocab = build_tag_vocabulary(load_source_manifest(sources));
  save_vocabulary(vocab, out_path);
  out << vocab.tags.size() << " tags from " << vocab.sources.size() << " sources -> " << out_path << "\n";
  return kExitOk;
}

int cmd_vocab_attributes(const CommonOptions& co, const std::string& tags_path, const std::string& llm_spec,
                         const std::string& tmpl, const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto cfg = resolve_config(co);
  if (!llm_spec.empty()) apply_backend_override(cfg, "llm", llm_spec);
  if (!cfg.backends.contains("llm")) throw Error(ErrorCode::BackendUnavailable, "no LLM backend configured");
  auto llm = make_llm(cfg.backends["llm"], cfg.base_dir);
  const auto tags = load_tag_vocabulary(tags_path);
  GenerationParams params = cfg.llm_params;
  params.max_new_tokens = std::max(params.max_new_tokens, 128);
  const auto gen = generate_attributes(tags, *llm, tmpl.empty() ? kDefaultAttributeTemplate : tmpl, params);
  save_vocabulary(gen.vocabulary, out_path);
  for (const auto& f : gen.failures) err << "no descriptors for " << f.class_name << ": " << f.reason << "\n";
  out << gen.vocabulary.entries.size() << " classes, " << gen.failures.size() << " failed -> " << out_path << "\n";
  return kExitOk;
}

int cmd_serve(const CommonOptions& co, const std::string& host, int port, const std::string& support_path,
              std::ostream& out) {
  auto cfg = resolve_config(co);
  auto backends = make_backends(cfg);
  auto vocab = load_vocabularies(cfg);
  std::optional<DatasetManifest> support;
  const auto sp = !support_path.empty() ? std::optional<std::string>(support_path) : cfg.support_path;
  if (sp) support = load_manifest(*sp);
  ServiceOptions so;
  so.session_ttl_seconds = cfg.session_ttl_seconds;
  so.task = cfg.task;
  so.llm_params = cfg.llm_params;
  so.seed = cfg.seed;
  so.support = support ? &*support : nullptr;
  LensService service(backends.view(), vocab.tags_ptr(), vocab.attributes_ptr(), cfg.modules, so);
  auto server = make_server(service);
  out << "listening on " << host << ":" << port << std::endl;
  if (!server->listen(host, port)) throw Error(ErrorCode::BackendUnavailable, "cannot bind " + host + ":" + std::to_string(port));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Describe images with vision modules and answer questions with a frozen language model", "lens"};
  app.require_subcommand(1);
  CommonOptions co;

  auto* describe = app.add_subcommand("describe", "textual description of one image");
  add_common(describe, co);
  std::string image;
  std::string ocr;
  std::string out_path;
  describe->add_option("image", image, "image file")->required();
  describe->add_option("--ocr", ocr, "OCR text to attach");
  describe->add_option("--out", out_path, "write a descriptions file instead of stdout");

  auto* ask = app.add_subcommand("ask", "answer a question about one image");
  add_common(ask, co);
  AskOptions ao;
  ask->add_option("image", ao.image, "image file")->required();
  ask->add_option("question", ao.question, "question text")->required();
  ask->add_option("--ocr", ao.ocr, "OCR text to attach");
  ask->add_option("--shots", ao.shots, "number of solved support examples in the prompt");
  ask->add_option("--support", ao.support, "support manifest the shots come from");
  ask->add_option("--trace", ao.trace, "write prompt and reasoning trace (JSON) to this file");
  ask->add_option("--answer-space", ao.answer_space, "comma-separated candidates for close-ended answering");
  ask->add_option("--task", co.task, "task kind: recognition, vqa, memes, sentiment");

  auto* bench = app.add_subcommand("benchmark", "evaluate a dataset manifest");
  add_common(bench, co);
  BenchOptions bo;
  bench->add_option("manifest", bo.manifest, "dataset manifest")->required();
  bench->add_option("--support", bo.support, "support manifest for few-shot runs");
  bench->add_option("--shots", bo.shots, "shots per prompt");
  bench->add_option("--ablate", bo.ablate, "JSON grid of module configs");
  bench->add_option("--caption-sweep", bo.caption_sweep, "caption counts, e.g. 1,5,20,50");
  bench->add_option("--out", bo.out_dir, "run directory");

  auto* vocab = app.add_subcommand("vocab", "build vocabularies");
  vocab->require_subcommand(1);
  auto* vbuild = vocab->add_subcommand("build", "merge class lists into a tag vocabulary");
  std::string sources;
  std::string vocab_out;
  vbuild->add_option("--sources", sources, "sources manifest")->required();
  vbuild->add_option("--out", vocab_out, "output file")->required();
  auto* vattr = vocab->add_subcommand("attributes", "generate per-class descriptors with an LLM");
  add_common(vattr, co);
  std::string tags_path;
  std::string llm_spec;
  std::string tmpl;
  std::string attr_out;
  vattr->add_option("--tags", tags_path, "tag vocabulary file")->required();
  vattr->add_option("--llm", llm_spec, "LLM backend, key=value[,key=value]");
  vattr->add_option("--template", tmpl, "query template with {classname}");
  vattr->add_option("--out", attr_out, "output file")->required();

  auto* serve = app.add_subcommand("serve", "HTTP API for the demo client");
  add_common(serve, co);
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_support;
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port");
  serve->add_option("--support", serve_support, "support manifest for few-shot asks");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*describe) return cmd_describe(co, image, ocr, out_path, out);
    if (*ask) return cmd_ask(co, ao, out);
    if (*bench) return cmd_benchmark(co, bo, out, err);
    if (*vbuild) return cmd_vocab_build(sources, vocab_out, out);
    if (*vattr) return cmd_vocab_attributes(co, tags_path, llm_spec, tmpl, attr_out, out, err);
    if (*serve) return cmd_serve(co, host, port, serve_support, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitUsage;
}

}  // namespace lens
