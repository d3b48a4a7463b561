#include "psyrig/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "json_reader.hpp"
#include "text_util.hpp"

namespace psyrig {

using detail::as_array;
using detail::as_string;
using detail::index_path;
using detail::json;
using detail::ObjectReader;
using detail::ordered_json;

std::string RunTask::key() const {
  return fmt::format("{}|{}|{}|{}|{}|{}", model_id, persona.render(), persona.group,
                     question_id, seed, repetition_index);
}

std::int64_t effective_seed(const RunTask& task, RepetitionMode mode) {
  if (mode == RepetitionMode::kDeriveSeed) return task.seed + task.repetition_index;
  return task.seed;
}

std::string_view to_string(ModelKind k) {
  return k == ModelKind::kRemoteChat ? "remote-chat" : "mock";
}

std::string_view to_string(RepetitionMode m) {
  return m == RepetitionMode::kResample ? "resample" : "derive-seed";
}

namespace {

std::string read_file(const std::filesystem::path& path, const std::string& config_path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(config_path, "cannot read file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_text(std::string_view text, const std::string& path) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("malformed JSON: ") + e.what());
  }
}

// ---- questionnaire -------------------------------------------------------

AnswerOption parse_option(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"label", "text", "numeric_value"});
  AnswerOption o;
  o.label = r.string("label");
  o.text = r.opt_string("text").value_or("");
  if (auto v = r.opt_integer("numeric_value")) {
    o.numeric_value = static_cast<int>(*v);
  } else {
    o.numeric_value = detail::parse_int(o.label);
  }
  return o;
}

std::vector<AnswerOption> parse_options(const json& j, const std::string& path) {
  std::vector<AnswerOption> out;
  const auto& arr = as_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(parse_option(arr[i], index_path(path, i)));
  return out;
}

ScaleDefinition parse_scale(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"name", "items", "aggregation", "score_range"});
  ScaleDefinition s;
  s.name = r.string("name");
  if (auto agg = r.opt_string("aggregation")) {
    if (*agg == "mean") {
      s.aggregation = Aggregation::kMean;
    } else if (*agg == "sum") {
      s.aggregation = Aggregation::kSum;
    } else {
      throw ConfigError(r.child("aggregation"), "expected \"mean\" or \"sum\"");
    }
  }
  const auto& range = as_array(r.required("score_range"), r.child("score_range"));
  if (range.size() != 2) throw ConfigError(r.child("score_range"), "expected [min, max]");
  s.score_range.min_value = static_cast<int>(detail::as_integer(range[0], index_path(r.child("score_range"), 0)));
  s.score_range.max_value = static_cast<int>(detail::as_integer(range[1], index_path(r.child("score_range"), 1)));
  const std::string items_path = r.child("items");
  const auto& items = as_array(r.required("items"), items_path);
  for (std::size_t i = 0; i < items.size(); ++i) {
    ObjectReader ir(items[i], index_path(items_path, i));
    ir.reject_unknown({"question", "reverse"});
    s.items.push_back({ir.string("question"), ir.opt_bool("reverse").value_or(false)});
  }
  return s;
}

Questionnaire parse_questionnaire_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"id", "instruction", "notes", "questions", "global_options", "scales"});
  Questionnaire q;
  q.id = r.string("id");
  q.instruction = r.string("instruction");
  q.notes = r.opt_string("notes").value_or("");
  const std::string qpath = r.child("questions");
  const auto& questions = as_array(r.required("questions"), qpath);
  for (std::size_t i = 0; i < questions.size(); ++i) {
    ObjectReader qr(questions[i], index_path(qpath, i));
    qr.reject_unknown({"id", "text", "options"});
    QuestionItem item;
    item.id = qr.string("id");
    item.text = qr.string("text");
    if (const json* opts = qr.optional("options")) item.options = parse_options(*opts, qr.child("options"));
    q.questions.push_back(std::move(item));
  }
  if (const json* g = r.optional("global_options")) q.global_options = parse_options(*g, r.child("global_options"));
  if (const json* scales = r.optional("scales")) {
    const std::string spath = r.child("scales");
    const auto& arr = as_array(*scales, spath);
    for (std::size_t i = 0; i < arr.size(); ++i) q.scales.push_back(parse_scale(arr[i], index_path(spath, i)));
  }
  return q;
}

ordered_json option_json(const AnswerOption& o) {
  ordered_json j;
  j["label"] = o.label;
  j["text"] = o.text;
  if (o.numeric_value) j["numeric_value"] = *o.numeric_value;
  return j;
}

ordered_json options_json(const std::vector<AnswerOption>& options) {
  ordered_json arr = ordered_json::array();
  for (const auto& o : options) arr.push_back(option_json(o));
  return arr;
}

ordered_json questionnaire_json(const Questionnaire& q) {
  ordered_json j;
  j["id"] = q.id;
  j["instruction"] = q.instruction;
  if (!q.notes.empty()) j["notes"] = q.notes;
  if (q.global_options) j["global_options"] = options_json(*q.global_options);
  ordered_json questions = ordered_json::array();
  for (const auto& item : q.questions) {
    ordered_json qj;
    qj["id"] = item.id;
    qj["text"] = item.text;
    if (item.options) qj["options"] = options_json(*item.options);
    questions.push_back(std::move(qj));
  }
  j["questions"] = std::move(questions);
  ordered_json scales = ordered_json::array();
  for (const auto& s : q.scales) {
    ordered_json sj;
    sj["name"] = s.name;
    sj["aggregation"] = to_string(s.aggregation);
    sj["score_range"] = {s.score_range.min_value, s.score_range.max_value};
    ordered_json items = ordered_json::array();
    for (const auto& it : s.items) {
      ordered_json ij;
      ij["question"] = it.question_id;
      ij["reverse"] = it.reverse;
      items.push_back(std::move(ij));
    }
    sj["items"] = std::move(items);
    scales.push_back(std::move(sj));
  }
  j["scales"] = std::move(scales);
  return j;
}

// ---- personas ------------------------------------------------------------

std::vector<std::string> parse_string_list(const json& j, const std::string& path) {
  std::vector<std::string> out;
  const auto& arr = as_array(j, path);
  for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_string(arr[i], index_path(path, i)));
  return out;
}

PersonaSpec parse_persona_spec_json(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"list", "titles", "groups"});
  PersonaSpec spec;
  if (const json* list = r.optional("list")) {
    if (r.has("titles") || r.has("groups")) {
      throw ConfigError(path, "use either \"list\" or \"titles\"/\"groups\", not both");
    }
    std::vector<Persona> personas;
    const std::string lpath = r.child("list");
    const auto& arr = as_array(*list, lpath);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ObjectReader pr(arr[i], index_path(lpath, i));
      pr.reject_unknown({"title", "surname", "group"});
      personas.push_back({pr.string("title"), pr.string("surname"), pr.opt_string("group").value_or("")});
    }
    spec.source = std::move(personas);
    return spec;
  }
  GeneratedPersonas gen;
  gen.titles = parse_string_list(r.required("titles"), r.child("titles"));
  const std::string gpath = r.child("groups");
  const auto& groups = as_array(r.required("groups"), gpath);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ObjectReader gr(groups[i], index_path(gpath, i));
    gr.reject_unknown({"name", "names"});
    gen.groups.push_back({gr.string("name"), parse_string_list(gr.required("names"), gr.child("names"))});
  }
  spec.source = std::move(gen);
  return spec;
}

ordered_json persona_spec_json(const PersonaSpec& spec) {
  ordered_json j;
  if (const auto* list = std::get_if<std::vector<Persona>>(&spec.source)) {
    ordered_json arr = ordered_json::array();
    for (const auto& p : *list) {
      ordered_json pj;
      pj["title"] = p.title;
      pj["surname"] = p.surname;
      pj["group"] = p.group;
      arr.push_back(std::move(pj));
    }
    j["list"] = std::move(arr);
    return j;
  }
  const auto& gen = std::get<GeneratedPersonas>(spec.source);
  j["titles"] = gen.titles;
  ordered_json groups = ordered_json::array();
  for (const auto& g : gen.groups) {
    ordered_json gj;
    gj["name"] = g.name;
    gj["names"] = g.names;
    groups.push_back(std::move(gj));
  }
  j["groups"] = std::move(groups);
  return j;
}

// ---- models --------------------------------------------------------------

GenerationParams parse_params(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"max_new_tokens", "temperature", "top_k", "top_p"});
  GenerationParams p;
  if (auto v = r.opt_integer("max_new_tokens")) p.max_new_tokens = static_cast<int>(*v);
  if (auto v = r.opt_number("temperature")) p.temperature = *v;
  if (auto v = r.opt_integer("top_k")) p.top_k = static_cast<int>(*v);
  if (auto v = r.opt_number("top_p")) p.top_p = *v;
  return p;
}

RetryPolicy parse_retry(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"max_retries", "initial_backoff_ms", "multiplier", "max_backoff_ms"});
  RetryPolicy p;
  if (auto v = r.opt_integer("max_retries")) p.max_retries = static_cast<int>(*v);
  if (auto v = r.opt_integer("initial_backoff_ms")) p.initial_backoff_ms = static_cast<int>(*v);
  if (auto v = r.opt_number("multiplier")) p.multiplier = *v;
  if (auto v = r.opt_integer("max_backoff_ms")) p.max_backoff_ms = static_cast<int>(*v);
  return p;
}

MockScript parse_mock(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"rules", "default"});
  MockScript m;
  m.default_response = r.string("default");
  if (const json* rules = r.optional("rules")) {
    const std::string rpath = r.child("rules");
    const auto& arr = as_array(*rules, rpath);
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ObjectReader rr(arr[i], index_path(rpath, i));
      rr.reject_unknown({"question_id", "prompt_contains", "response", "error"});
      MockRule rule;
      rule.question_id = rr.opt_string("question_id");
      rule.prompt_contains = rr.opt_string("prompt_contains");
      rule.response = rr.opt_string("response").value_or("");
      rule.error = rr.opt_string("error");
      m.rules.push_back(std::move(rule));
    }
  }
  return m;
}

ModelSpec parse_model(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"id", "kind", "endpoint", "model_name", "params", "auth_env", "forward_params",
                    "retry", "timeout_ms", "max_requests_per_second", "mock"});
  ModelSpec m;
  m.id = r.string("id");
  const std::string kind = r.string("kind");
  if (kind == "remote-chat") {
    m.kind = ModelKind::kRemoteChat;
  } else if (kind == "mock") {
    m.kind = ModelKind::kMock;
  } else {
    throw ConfigError(r.child("kind"), "expected \"remote-chat\" or \"mock\"");
  }
  m.endpoint = r.opt_string("endpoint").value_or("");
  m.model_name = r.opt_string("model_name").value_or("");
  if (const json* p = r.optional("params")) m.params = parse_params(*p, r.child("params"));
  m.auth_env = r.opt_string("auth_env").value_or("");
  if (const json* fw = r.optional("forward_params")) {
    m.forward_seed = false;
    m.forward_top_k = false;
    const std::string fpath = r.child("forward_params");
    const auto names = parse_string_list(*fw, fpath);
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == "seed") {
        m.forward_seed = true;
      } else if (names[i] == "top_k") {
        m.forward_top_k = true;
      } else {
        throw ConfigError(index_path(fpath, i), "expected \"seed\" or \"top_k\"");
      }
    }
  }
  if (const json* rp = r.optional("retry")) m.retry = parse_retry(*rp, r.child("retry"));
  if (auto v = r.opt_integer("timeout_ms")) m.timeout_ms = static_cast<int>(*v);
  if (auto v = r.opt_number("max_requests_per_second")) m.max_requests_per_second = *v;
  if (const json* mk = r.optional("mock")) m.mock = parse_mock(*mk, r.child("mock"));
  return m;
}

ordered_json model_json(const ModelSpec& m) {
  ordered_json j;
  j["id"] = m.id;
  j["kind"] = to_string(m.kind);
  if (!m.endpoint.empty()) j["endpoint"] = m.endpoint;
  if (!m.model_name.empty()) j["model_name"] = m.model_name;
  ordered_json p;
  p["max_new_tokens"] = m.params.max_new_tokens;
  p["temperature"] = m.params.temperature;
  p["top_k"] = m.params.top_k;
  p["top_p"] = m.params.top_p;
  j["params"] = std::move(p);
  if (!m.auth_env.empty()) j["auth_env"] = m.auth_env;
  ordered_json fw = ordered_json::array();
  if (m.forward_seed) fw.push_back("seed");
  if (m.forward_top_k) fw.push_back("top_k");
  j["forward_params"] = std::move(fw);
  ordered_json r;
  r["max_retries"] = m.retry.max_retries;
  r["initial_backoff_ms"] = m.retry.initial_backoff_ms;
  r["multiplier"] = m.retry.multiplier;
  r["max_backoff_ms"] = m.retry.max_backoff_ms;
  j["retry"] = std::move(r);
  j["timeout_ms"] = m.timeout_ms;
  j["max_requests_per_second"] = m.max_requests_per_second;
  if (m.mock) {
    ordered_json mk;
    ordered_json rules = ordered_json::array();
    for (const auto& rule : m.mock->rules) {
      ordered_json rj;
      if (rule.question_id) rj["question_id"] = *rule.question_id;
      if (rule.prompt_contains) rj["prompt_contains"] = *rule.prompt_contains;
      rj["response"] = rule.response;
      if (rule.error) rj["error"] = *rule.error;
      rules.push_back(std::move(rj));
    }
    mk["rules"] = std::move(rules);
    mk["default"] = m.mock->default_response;
    j["mock"] = std::move(mk);
  }
  return j;
}

// ---- prompt / judge / stats ---------------------------------------------

PromptSettings parse_prompt(const json& j, const std::string& path,
                            const std::filesystem::path& base) {
  ObjectReader r(j, path);
  r.reject_unknown({"variant", "option_style", "system_template", "user_template",
                    "system_template_file", "user_template_file"});
  PromptSettings s;
  if (auto v = r.opt_string("variant")) {
    auto parsed = parse_prompt_variant(*v);
    if (!parsed) throw ConfigError(r.child("variant"), "expected \"natural\", \"friendly\" or \"json\"");
    s.variant = *parsed;
  }
  if (auto v = r.opt_string("option_style")) {
    auto parsed = parse_option_style(*v);
    if (!parsed) throw ConfigError(r.child("option_style"), "expected \"inline-comma\" or \"itemized-lines\"");
    s.option_style = *parsed;
  }
  s.system_template = r.opt_string("system_template");
  s.user_template = r.opt_string("user_template");
  if (auto f = r.opt_string("system_template_file")) {
    if (s.system_template) throw ConfigError(r.child("system_template_file"), "conflicts with system_template");
    read_file(base / *f, r.child("system_template_file"));
    s.system_template = load_template_file((base / *f).string());
  }
  if (auto f = r.opt_string("user_template_file")) {
    if (s.user_template) throw ConfigError(r.child("user_template_file"), "conflicts with user_template");
    read_file(base / *f, r.child("user_template_file"));
    s.user_template = load_template_file((base / *f).string());
  }
  return s;
}

JudgeConfig parse_judge(const json& j, const std::string& path, const std::filesystem::path& base) {
  ObjectReader r(j, path);
  r.reject_unknown({"entropy_threshold", "entropy_base", "probability_provider", "refusal_phrases",
                    "refusal_phrases_file"});
  JudgeConfig c;
  if (auto v = r.opt_number("entropy_threshold")) c.entropy_threshold = *v;
  if (auto v = r.opt_string("entropy_base")) {
    if (*v == "nats") {
      c.entropy_base = EntropyBase::kNats;
    } else if (*v == "bits") {
      c.entropy_base = EntropyBase::kBits;
    } else {
      throw ConfigError(r.child("entropy_base"), "expected \"nats\" or \"bits\"");
    }
  }
  if (const json* pp = r.optional("probability_provider")) {
    ObjectReader pr(*pp, r.child("probability_provider"));
    pr.reject_unknown({"endpoint", "auth_env", "timeout_ms"});
    ProviderEndpoint e;
    e.endpoint = pr.string("endpoint");
    e.auth_env = pr.opt_string("auth_env").value_or("");
    if (auto t = pr.opt_integer("timeout_ms")) e.timeout_ms = static_cast<int>(*t);
    c.probability_provider = std::move(e);
  }
  if (const json* rp = r.optional("refusal_phrases")) {
    c.refusal_phrases = parse_string_list(*rp, r.child("refusal_phrases"));
  }
  if (auto f = r.opt_string("refusal_phrases_file")) {
    if (!c.refusal_phrases.empty()) throw ConfigError(r.child("refusal_phrases_file"), "conflicts with refusal_phrases");
    read_file(base / *f, r.child("refusal_phrases_file"));
    c.refusal_phrases = load_refusal_phrases((base / *f).string());
  }
  return c;
}

StatConfig parse_stats(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  r.reject_unknown({"bootstrap_iterations", "confidence_level", "rng_seed"});
  StatConfig s;
  if (auto v = r.opt_integer("bootstrap_iterations")) s.bootstrap_iterations = static_cast<int>(*v);
  if (auto v = r.opt_number("confidence_level")) s.confidence_level = *v;
  if (auto v = r.opt_integer("rng_seed")) s.rng_seed = static_cast<std::uint64_t>(*v);
  return s;
}

// A string value names a JSON file relative to the config directory.
json resolve_include(const json& j, const std::string& path, const std::filesystem::path& base) {
  if (!j.is_string()) return j;
  const auto file = base / j.get<std::string>();
  return parse_json_text(read_file(file, path), path);
}

ExperimentConfig parse_config_json(const json& j, const ParseOptions& options) {
  ObjectReader r(j, "");
  r.reject_unknown({"name", "seeds", "repetitions", "repetition_mode", "models", "prompt", "personas",
                    "questionnaire", "judge", "stats"});
  ExperimentConfig cfg;
  cfg.name = r.string("name");
  const auto& seeds = as_array(r.required("seeds"), "seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) cfg.seeds.push_back(detail::as_integer(seeds[i], index_path("seeds", i)));
  if (auto v = r.opt_integer("repetitions")) cfg.repetitions = static_cast<int>(*v);
  if (auto v = r.opt_string("repetition_mode")) {
    if (*v == "resample") {
      cfg.repetition_mode = RepetitionMode::kResample;
    } else if (*v == "derive-seed") {
      cfg.repetition_mode = RepetitionMode::kDeriveSeed;
    } else {
      throw ConfigError("repetition_mode", "expected \"resample\" or \"derive-seed\"");
    }
  }
  const auto& models = as_array(r.required("models"), "models");
  for (std::size_t i = 0; i < models.size(); ++i) cfg.models.push_back(parse_model(models[i], index_path("models", i)));
  if (const json* p = r.optional("prompt")) cfg.prompt = parse_prompt(*p, "prompt", options.base_dir);
  cfg.personas = parse_persona_spec_json(resolve_include(r.required("personas"), "personas", options.base_dir), "personas");
  cfg.questionnaire = parse_questionnaire_json(
      resolve_include(r.required("questionnaire"), "questionnaire", options.base_dir), "questionnaire");
  if (const json* jd = r.optional("judge")) cfg.judge = parse_judge(*jd, "judge", options.base_dir);
  if (const json* st = r.optional("stats")) cfg.stats = parse_stats(*st, "stats");
  return cfg;
}

// ---- validation ----------------------------------------------------------

std::vector<std::string_view> template_placeholders(std::string_view tmpl) {
  std::vector<std::string_view> names;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '{') continue;
    std::size_t j = i + 1;
    if (j >= tmpl.size() || !(std::isalpha(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) continue;
    while (j < tmpl.size() && (detail::is_ascii_alnum(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) ++j;
    if (j < tmpl.size() && tmpl[j] == '}') names.push_back(tmpl.substr(i + 1, j - i - 1));
  }
  return names;
}

void validate_options(std::span<const AnswerOption> options, const std::string& path,
                      std::vector<Violation>& out) {
  std::set<std::string> labels;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].label.empty()) out.push_back({index_path(path, i), "option label is empty"});
    if (!labels.insert(options[i].label).second) {
      out.push_back({index_path(path, i), "duplicate option label '" + options[i].label + "'"});
    }
  }
}

void validate_questionnaire(const Questionnaire& q, const std::string& path, std::vector<Violation>& out) {
  const std::string qpath = detail::join_path(path, "questions");
  if (q.id.empty()) out.push_back({detail::join_path(path, "id"), "questionnaire id is empty"});
  if (q.questions.empty()) out.push_back({qpath, "questionnaire has no questions"});
  if (q.global_options) validate_options(*q.global_options, detail::join_path(path, "global_options"), out);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < q.questions.size(); ++i) {
    const auto& item = q.questions[i];
    const std::string ipath = index_path(qpath, i);
    if (item.id.empty()) out.push_back({ipath + ".id", "question id is empty"});
    if (!ids.insert(item.id).second) out.push_back({ipath + ".id", "duplicate question id '" + item.id + "'"});
    if (item.text.empty()) out.push_back({ipath + ".text", "question text is empty"});
    if (q.effective_options(item).empty()) {
      out.push_back({ipath + ".options", "question '" + item.id + "' has no answer options"});
    }
    if (item.options) validate_options(*item.options, ipath + ".options", out);
  }
  const std::string spath = detail::join_path(path, "scales");
  std::set<std::string> scale_names;
  for (std::size_t s = 0; s < q.scales.size(); ++s) {
    const auto& scale = q.scales[s];
    const std::string sp = index_path(spath, s);
    if (scale.name.empty()) out.push_back({sp + ".name", "scale name is empty"});
    if (!scale_names.insert(scale.name).second) out.push_back({sp + ".name", "duplicate scale name '" + scale.name + "'"});
    if (scale.items.empty()) out.push_back({sp + ".items", "scale has no items"});
    if (scale.score_range.min_value >= scale.score_range.max_value) {
      out.push_back({sp + ".score_range", "score_range min must be below max"});
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < scale.items.size(); ++i) {
      const auto& it = scale.items[i];
      const std::string ip = index_path(sp + ".items", i);
      if (!q.find_question(it.question_id)) {
        out.push_back({ip, "unknown question id '" + it.question_id + "'"});
      } else if (!seen.insert(it.question_id).second) {
        out.push_back({ip, "question '" + it.question_id + "' listed twice"});
      }
    }
  }
}

void validate_template(const std::optional<std::string>& tmpl, const std::string& path,
                       std::vector<Violation>& out) {
  if (!tmpl) return;
  static const std::set<std::string_view> known = {"persona", "instruction", "question", "options"};
  for (auto name : template_placeholders(*tmpl)) {
    if (!known.count(name)) out.push_back({path, "unknown placeholder {" + std::string(name) + "}"});
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view document, const ParseOptions& options) {
  const json j = parse_json_text(document, "");
  ExperimentConfig cfg = parse_config_json(j, options);
  if (options.strict) {
    auto violations = validate_config(cfg);
    if (!violations.empty()) throw ConfigError(std::move(violations));
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path, bool strict) {
  ParseOptions options;
  options.base_dir = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
  options.strict = strict;
  return parse_experiment_config(read_file(path, ""), options);
}

std::string serialize_experiment_config(const ExperimentConfig& cfg) {
  ordered_json j;
  j["name"] = cfg.name;
  j["seeds"] = cfg.seeds;
  j["repetitions"] = cfg.repetitions;
  if (cfg.repetition_mode) j["repetition_mode"] = to_string(*cfg.repetition_mode);
  ordered_json models = ordered_json::array();
  for (const auto& m : cfg.models) models.push_back(model_json(m));
  j["models"] = std::move(models);
  ordered_json prompt;
  prompt["variant"] = to_string(cfg.prompt.variant);
  prompt["option_style"] = to_string(cfg.prompt.option_style);
  if (cfg.prompt.system_template) prompt["system_template"] = *cfg.prompt.system_template;
  if (cfg.prompt.user_template) prompt["user_template"] = *cfg.prompt.user_template;
  j["prompt"] = std::move(prompt);
  j["personas"] = persona_spec_json(cfg.personas);
  j["questionnaire"] = questionnaire_json(cfg.questionnaire);
  ordered_json judge;
  judge["entropy_threshold"] = cfg.judge.entropy_threshold;
  judge["entropy_base"] = to_string(cfg.judge.entropy_base);
  if (cfg.judge.probability_provider) {
    ordered_json pp;
    pp["endpoint"] = cfg.judge.probability_provider->endpoint;
    if (!cfg.judge.probability_provider->auth_env.empty()) pp["auth_env"] = cfg.judge.probability_provider->auth_env;
    pp["timeout_ms"] = cfg.judge.probability_provider->timeout_ms;
    judge["probability_provider"] = std::move(pp);
  }
  if (!cfg.judge.refusal_phrases.empty()) judge["refusal_phrases"] = cfg.judge.refusal_phrases;
  j["judge"] = std::move(judge);
  ordered_json stats;
  stats["bootstrap_iterations"] = cfg.stats.bootstrap_iterations;
  stats["confidence_level"] = cfg.stats.confidence_level;
  stats["rng_seed"] = cfg.stats.rng_seed;
  j["stats"] = std::move(stats);
  return j.dump(2) + "\n";
}

Questionnaire parse_questionnaire(std::string_view document) {
  return parse_questionnaire_json(parse_json_text(document, ""), "");
}

Questionnaire load_questionnaire(const std::filesystem::path& path) {
  return parse_questionnaire(read_file(path, ""));
}

std::string serialize_questionnaire(const Questionnaire& q) {
  return questionnaire_json(q).dump(2, ' ', false) + "\n";
}

PersonaSpec load_persona_spec(const std::filesystem::path& path) {
  return parse_persona_spec_json(parse_json_text(read_file(path, ""), ""), "");
}

std::vector<Violation> validate_config(const ExperimentConfig& cfg) {
  std::vector<Violation> out;
  if (cfg.name.empty()) out.push_back({"name", "name is empty"});
  if (cfg.seeds.empty()) out.push_back({"seeds", "no seeds given"});
  if (std::set<std::int64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    out.push_back({"seeds", "seeds not distinct"});
  }
  if (cfg.repetitions < 1) out.push_back({"repetitions", "repetitions must be at least 1"});
  if (cfg.repetitions > 1 && !cfg.repetition_mode) {
    out.push_back({"repetition_mode", "repetitions > 1 requires repetition_mode (\"resample\" or \"derive-seed\")"});
  }
  if (cfg.repetitions > 1 && cfg.repetition_mode == RepetitionMode::kDeriveSeed) {
    std::set<std::int64_t> derived;
    for (auto s : cfg.seeds) {
      for (int r = 0; r < cfg.repetitions; ++r) derived.insert(s + r);
    }
    if (derived.size() != cfg.seeds.size() * static_cast<std::size_t>(cfg.repetitions)) {
      out.push_back({"repetition_mode", "derived per-repetition seeds collide across configured seeds"});
    }
  }

  if (cfg.models.empty()) out.push_back({"models", "no models given"});
  std::set<std::string> model_ids;
  for (std::size_t i = 0; i < cfg.models.size(); ++i) {
    const auto& m = cfg.models[i];
    const std::string mp = index_path("models", i);
    if (m.id.empty()) out.push_back({mp + ".id", "model id is empty"});
    if (!model_ids.insert(m.id).second) out.push_back({mp + ".id", "duplicate model id '" + m.id + "'"});
    if (m.kind == ModelKind::kRemoteChat && m.endpoint.empty()) {
      out.push_back({mp + ".endpoint", "remote-chat model requires an endpoint"});
    }
    if (m.kind == ModelKind::kMock && !m.endpoint.empty()) {
      out.push_back({mp + ".endpoint", "mock model must not have an endpoint"});
    }
    if (m.kind == ModelKind::kMock && !m.mock) out.push_back({mp + ".mock", "mock model requires a mock script"});
    if (m.params.max_new_tokens < 1) out.push_back({mp + ".params.max_new_tokens", "must be positive"});
    if (!(m.params.temperature >= 0.0)) out.push_back({mp + ".params.temperature", "must be non-negative"});
    if (m.params.top_k < 1) out.push_back({mp + ".params.top_k", "must be positive"});
    if (!(m.params.top_p > 0.0 && m.params.top_p <= 1.0)) out.push_back({mp + ".params.top_p", "must lie in (0, 1]"});
    if (m.retry.max_retries < 0) out.push_back({mp + ".retry.max_retries", "must be non-negative"});
    if (m.retry.initial_backoff_ms < 0 || m.retry.max_backoff_ms < 0 || m.retry.multiplier < 1.0) {
      out.push_back({mp + ".retry", "backoff must be non-negative with multiplier >= 1"});
    }
    if (m.timeout_ms < 1) out.push_back({mp + ".timeout_ms", "must be positive"});
    if (!(m.max_requests_per_second >= 0.0)) out.push_back({mp + ".max_requests_per_second", "must be non-negative"});
  }

  try {
    auto personas = expand_personas(cfg.personas);
    if (personas.empty()) out.push_back({"personas", "no personas given"});
    std::set<Persona> seen;
    for (std::size_t i = 0; i < personas.size(); ++i) {
      const auto& p = personas[i];
      if (p.title.empty() || p.surname.empty()) {
        out.push_back({index_path("personas", i), "persona needs a title and a surname"});
      }
      if (!seen.insert(p).second) out.push_back({index_path("personas", i), "duplicate persona '" + p.render() + "'"});
    }
  } catch (const ConfigError& e) {
    out.push_back({e.path(), e.what()});
  }

  validate_questionnaire(cfg.questionnaire, "questionnaire", out);
  validate_template(cfg.prompt.system_template, "prompt.system_template", out);
  validate_template(cfg.prompt.user_template, "prompt.user_template", out);

  if (!(cfg.judge.entropy_threshold >= 0.0)) out.push_back({"judge.entropy_threshold", "must be non-negative"});
  if (cfg.stats.bootstrap_iterations < 1) out.push_back({"stats.bootstrap_iterations", "must be positive"});
  if (!(cfg.stats.confidence_level > 0.0 && cfg.stats.confidence_level < 1.0)) {
    out.push_back({"stats.confidence_level", "must lie in (0, 1)"});
  }
  return out;
}

std::vector<RunTask> enumerate_run_plan(const ExperimentConfig& cfg) {
  const auto personas = expand_personas(cfg.personas);
  std::vector<RunTask> plan;
  plan.reserve(cfg.models.size() * personas.size() * cfg.questionnaire.questions.size() * cfg.seeds.size() *
               static_cast<std::size_t>(std::max(cfg.repetitions, 0)));
  for (const auto& model : cfg.models) {
    for (const auto& persona : personas) {
      for (const auto& item : cfg.questionnaire.questions) {
        for (auto seed : cfg.seeds) {
          for (int rep = 0; rep < cfg.repetitions; ++rep) {
            plan.push_back({model.id, persona, item.id, seed, rep, cfg.prompt.variant});
          }
        }
      }
    }
  }
  return plan;
}

}  // namespace psyrig
