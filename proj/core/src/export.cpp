#include "psyrig/export.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "psyrig/error.hpp"

namespace psyrig {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void put_task(ordered_json& j, const RunTask& t) {
  j["model_id"] = t.model_id;
  j["persona"] = ordered_json{{"title", t.persona.title}, {"surname", t.persona.surname}, {"group", t.persona.group}};
  j["question_id"] = t.question_id;
  j["seed"] = t.seed;
  j["repetition"] = t.repetition_index;
  j["prompt_variant"] = to_string(t.prompt_variant);
}

const json& field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

std::string str_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t int_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) throw DataError(std::string("field '") + key + "' must be an integer");
  return v.get<std::int64_t>();
}

json parse_line(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed JSON");
  if (!j.is_object()) throw DataError("record is not a JSON object");
  return j;
}

RunTask get_task(const json& j) {
  RunTask t;
  t.model_id = str_field(j, "model_id");
  const json& p = field(j, "persona");
  if (!p.is_object()) throw DataError("field 'persona' must be an object");
  t.persona = {str_field(p, "title"), str_field(p, "surname"), str_field(p, "group")};
  t.question_id = str_field(j, "question_id");
  t.seed = int_field(j, "seed");
  t.repetition_index = static_cast<int>(int_field(j, "repetition"));
  auto v = parse_prompt_variant(str_field(j, "prompt_variant"));
  if (!v) throw DataError("unknown prompt_variant");
  t.prompt_variant = *v;
  return t;
}

std::optional<Verdict> parse_verdict(std::string_view s) {
  for (auto v : {Verdict::kMatched, Verdict::kInconclusive, Verdict::kNotPresent}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

template <typename T>
Decoded<T> decode_file(const std::filesystem::path& path, T (*decode)(std::string_view)) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();

  Decoded<T> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < data.size()) {
    ++line_no;
    const std::size_t nl = data.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    std::string_view line(data.data() + pos, (terminated ? nl : data.size()) - pos);
    pos = terminated ? nl + 1 : data.size();
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    try {
      out.records.push_back(decode(line));
    } catch (const DataError& e) {
      if (!terminated) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": dropped interrupted trailing record");
        continue;
      }
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return out;
}

}  // namespace

std::string encode_raw_response(const RawResponse& r) {
  ordered_json j;
  put_task(j, r.task);
  j["text"] = r.text;
  j["error"] = r.error;
  j["error_kind"] = to_string(r.error_kind);
  j["retry_count"] = r.retry_count;
  j["latency_ms"] = r.latency_ms;
  j["endpoint_meta"] = r.endpoint_meta;
  j["generated_at_ms"] = r.generated_at_ms;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

RawResponse decode_raw_response(std::string_view line) {
  const json j = parse_line(line);
  RawResponse r;
  r.task = get_task(j);
  r.text = str_field(j, "text");
  r.error = str_field(j, "error");
  auto kind = parse_generation_error(str_field(j, "error_kind"));
  if (!kind) throw DataError("unknown error_kind");
  r.error_kind = *kind;
  r.retry_count = static_cast<int>(int_field(j, "retry_count"));
  r.latency_ms = int_field(j, "latency_ms");
  r.endpoint_meta = str_field(j, "endpoint_meta");
  r.generated_at_ms = int_field(j, "generated_at_ms");
  return r;
}

std::string encode_response_record(const ResponseRecord& r) {
  ordered_json j;
  put_task(j, r.task);
  j["raw_text"] = r.raw_text;
  j["cleaned_text"] = r.cleaned_text;
  j["extracted_answer"] = r.extracted_answer ? ordered_json(*r.extracted_answer) : ordered_json(nullptr);
  j["validity"] = ordered_json{{"status", r.validity.valid ? "valid" : "invalid"}, {"reason", r.validity.reason}};
  if (r.judgment) {
    ordered_json jd;
    jd["verdict"] = to_string(r.judgment->verdict);
    jd["label"] = r.judgment->label;
    jd["method"] = to_string(r.judgment->method);
    ordered_json scores = ordered_json::array();
    for (const auto& s : r.judgment->scores) scores.push_back(ordered_json{{"label", s.label}, {"value", s.value}});
    jd["scores"] = std::move(scores);
    j["judgment"] = std::move(jd);
  } else {
    j["judgment"] = nullptr;
  }
  j["generated_at_ms"] = r.generated_at_ms;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

ResponseRecord decode_response_record(std::string_view line) {
  const json j = parse_line(line);
  ResponseRecord r;
  r.task = get_task(j);
  r.raw_text = str_field(j, "raw_text");
  r.cleaned_text = str_field(j, "cleaned_text");
  const json& ex = field(j, "extracted_answer");
  if (ex.is_string()) {
    r.extracted_answer = ex.get<std::string>();
  } else if (!ex.is_null()) {
    throw DataError("field 'extracted_answer' must be a string or null");
  }
  const json& v = field(j, "validity");
  if (!v.is_object()) throw DataError("field 'validity' must be an object");
  const std::string status = str_field(v, "status");
  if (status != "valid" && status != "invalid") throw DataError("unknown validity status");
  r.validity = {status == "valid", str_field(v, "reason")};
  const json& jd = field(j, "judgment");
  if (jd.is_object()) {
    Judgment g;
    auto verdict = parse_verdict(str_field(jd, "verdict"));
    if (!verdict) throw DataError("unknown verdict");
    g.verdict = *verdict;
    g.label = str_field(jd, "label");
    const std::string method = str_field(jd, "method");
    if (method != "rule" && method != "model") throw DataError("unknown judge method");
    g.method = method == "rule" ? JudgeMethod::kRule : JudgeMethod::kModel;
    const json& scores = field(jd, "scores");
    if (!scores.is_array()) throw DataError("field 'scores' must be an array");
    for (const auto& s : scores) {
      const json& val = field(s, "value");
      if (!val.is_number()) throw DataError("score value must be a number");
      g.scores.push_back({str_field(s, "label"), val.get<double>()});
    }
    r.judgment = std::move(g);
  } else if (!jd.is_null()) {
    throw DataError("field 'judgment' must be an object or null");
  }
  r.generated_at_ms = int_field(j, "generated_at_ms");
  return r;
}

JsonlReadResult read_jsonl_lines(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  JsonlReadResult out;
  std::size_t pos = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) {
      std::string tail = data.substr(pos);
      if (json::accept(tail)) {
        out.lines.push_back(std::move(tail));
      } else {
        out.warnings.push_back("dropped interrupted trailing line");
      }
      break;
    }
    std::string line = data.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.lines.push_back(std::move(line));
    pos = nl + 1;
  }
  return out;
}

bool repair_jsonl_tail(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return false;
  const std::string data = read_text_file(path);
  if (data.empty() || data.back() == '\n') return false;
  const std::size_t nl = data.rfind('\n');
  const std::size_t keep = nl == std::string::npos ? 0 : nl + 1;
  if (json::accept(std::string_view(data).substr(keep))) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << '\n';
    return false;
  }
  std::filesystem::resize_file(path, keep);
  return true;
}

Decoded<ResponseRecord> read_response_records(const std::filesystem::path& path) {
  return decode_file<ResponseRecord>(path, &decode_response_record);
}

Decoded<RawResponse> read_raw_responses(const std::filesystem::path& path) {
  return decode_file<RawResponse>(path, &decode_raw_response);
}

void write_response_records(const std::filesystem::path& path, const std::vector<ResponseRecord>& records) {
  std::string text;
  for (const auto& r : records) {
    text += encode_response_record(r);
    text += '\n';
  }
  write_text_file(path, text);
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string to_csv(const CsvTable& table) {
  std::string out;
  auto row = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i > 0) out.push_back(',');
      out += csv_escape(fields[i]);
    }
    out.push_back('\n');
  };
  row(table.header);
  for (const auto& r : table.rows) row(r);
  return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_text_file(path, to_csv(table));
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool row_started = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      row_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      row_started = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      row_started = false;
    } else {
      field.push_back(c);
      row_started = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted CSV field");
  if (row_started) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  CsvTable table;
  if (rows.empty()) return table;
  table.header = std::move(rows.front());
  table.rows.assign(std::make_move_iterator(rows.begin() + 1), std::make_move_iterator(rows.end()));
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path));
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace psyrig
