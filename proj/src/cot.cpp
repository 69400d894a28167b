// SPDX-License-Identifier: Apache-2.0
#include "salrl/cot.hpp"

#include <json.hpp>

#include <cctype>
#include <stdexcept>

namespace salrl {

namespace {

constexpr const char* kSemanticToken = "[semantic]";

struct TagPair {
  std::vector<std::size_t> opens;
  std::vector<std::size_t> closes;
};

std::vector<std::size_t> find_all(const std::string& hay, const std::string& needle) {
  std::vector<std::size_t> out;
  for (std::size_t p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1))
    out.push_back(p);
  return out;
}

// Envelope accounting for one tag name over the whole string.
void check_pair(const std::string& name, const TagPair& t, std::vector<std::string>& diags) {
  if (t.opens.empty() && t.closes.empty()) {
    diags.push_back("missing " + name + " block");
    return;
  }
  if (t.opens.empty()) {
    diags.push_back(name + " closing tag without opening tag");
    return;
  }
  if (t.opens.size() > 1) {
    diags.push_back("duplicated " + name + " block");
    if (!t.closes.empty() && t.opens[1] < t.closes[0])
      diags.push_back("nested " + name + " block");
    return;
  }
  if (t.closes.empty()) {
    diags.push_back("unclosed " + name + " block");
    return;
  }
  if (t.closes.size() > 1) {
    diags.push_back("duplicated " + name + " closing tag");
    return;
  }
  if (t.closes[0] < t.opens[0]) diags.push_back(name + " closing tag before opening tag");
}

struct EnvelopeScan {
  bool structure_ok = false;
  // A single well-formed answer block, judged independently of think problems.
  bool lone_answer = false;
  std::size_t think_begin = 0, think_end = 0;    // body range when structure_ok
  std::size_t answer_begin = 0, answer_end = 0;  // body range when lone_answer
  std::vector<std::string> diagnostics;
};

EnvelopeScan scan_envelope(const std::string& raw) {
  EnvelopeScan out;
  TagPair think{find_all(raw, "<think>"), find_all(raw, "</think>")};
  TagPair answer{find_all(raw, "<answer>"), find_all(raw, "</answer>")};
  check_pair("think", think, out.diagnostics);
  check_pair("answer", answer, out.diagnostics);

  if (answer.opens.size() == 1 && answer.closes.size() == 1 &&
      answer.opens[0] < answer.closes[0]) {
    out.lone_answer = true;
    out.answer_begin = answer.opens[0] + 8;
    out.answer_end = answer.closes[0];
  }
  if (!out.diagnostics.empty()) return out;

  std::size_t to = think.opens[0], tc = think.closes[0];
  std::size_t ao = answer.opens[0], ac = answer.closes[0];
  if (ac < to) {
    out.diagnostics.push_back("answer block before think block");
    return out;
  }
  if (ao < tc) {
    // Any other ordering overlaps: answer opens inside think, or think opens
    // inside answer (ao < to was caught above only when fully before).
    out.diagnostics.push_back("think and answer blocks overlap");
    return out;
  }
  out.structure_ok = true;
  out.think_begin = to + 7;
  out.think_end = tc;
  return out;
}

bool is_tag_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// A tag token is '<' [/] [A-Za-z0-9_]+ '>'. Anything else starting with '<'
// is treated as plain text.
std::string tag_at(const std::string& s, std::size_t i) {
  if (s[i] != '<') return {};
  std::size_t j = i + 1;
  if (j < s.size() && s[j] == '/') ++j;
  std::size_t name_start = j;
  while (j < s.size() && is_tag_char(s[j])) ++j;
  if (j == name_start || j >= s.size() || s[j] != '>') return {};
  return s.substr(i, j - i + 1);
}

struct ContentScan {
  std::vector<ReferringExpression> expressions;
  bool ok = true;
  std::vector<std::string> diagnostics;
};

void flag(ContentScan& cs, std::string msg) {
  cs.ok = false;
  cs.diagnostics.push_back(std::move(msg));
}

// Region bodies may start with the literal "[semantic]" token plus at least
// one whitespace character; the prefix is stripped into the flag.
void push_expression(ContentScan& cs, ExprKind kind, const std::string& body) {
  std::string text = trim_copy(body);
  bool semantic = false;
  if (kind == ExprKind::region && text.rfind(kSemanticToken, 0) == 0) {
    std::string rest = text.substr(std::string(kSemanticToken).size());
    if (!rest.empty() && std::isspace(static_cast<unsigned char>(rest[0]))) {
      semantic = true;
      text = trim_copy(rest);
    }
  }
  if (text.empty()) {
    flag(cs, "empty expression text");
    return;
  }
  cs.expressions.push_back({kind, text, semantic});
}

ContentScan scan_answer_body(const std::string& body) {
  ContentScan cs;
  std::size_t i = 0;
  while (i < body.size()) {
    std::size_t lt = body.find('<', i);
    if (lt == std::string::npos) break;
    std::string tag = tag_at(body, lt);
    if (tag.empty()) {
      i = lt + 1;
      continue;
    }
    if (tag == "<rg>" || tag == "<ins>") {
      const bool region = tag == "<rg>";
      const std::string closer = region ? "</rg>" : "</ins>";
      std::size_t p = lt + tag.size();
      bool closed = false;
      while (p < body.size()) {
        std::size_t q = body.find('<', p);
        if (q == std::string::npos) break;
        std::string inner = tag_at(body, q);
        if (inner.empty()) {
          p = q + 1;
          continue;
        }
        if (inner == closer) {
          push_expression(cs, region ? ExprKind::region : ExprKind::instance,
                          body.substr(lt + tag.size(), q - lt - tag.size()));
          i = q + closer.size();
          closed = true;
        } else {
          flag(cs, "unexpected " + inner + " inside " + tag + " body");
          i = q;  // reprocess the offending tag at top level
          closed = true;
        }
        break;
      }
      if (!closed) {
        flag(cs, "unclosed " + tag + " tag");
        i = body.size();
      }
    } else if (tag == "</rg>" || tag == "</ins>") {
      flag(cs, "stray closing " + tag);
      i = lt + tag.size();
    } else {
      flag(cs, "unknown tag " + tag + " in answer");
      i = lt + tag.size();
    }
  }
  return cs;
}

}  // namespace

std::string trim_copy(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

TaskKind task_from_string(const std::string& name) {
  if (name == "sod") return TaskKind::sod;
  if (name == "sis") return TaskKind::sis;
  if (name == "cosod") return TaskKind::cosod;
  throw std::invalid_argument("unknown task: " + name);
}

const char* task_name(TaskKind task) {
  switch (task) {
    case TaskKind::sod: return "sod";
    case TaskKind::sis: return "sis";
    case TaskKind::cosod: return "cosod";
  }
  return "sod";
}

ParseOutcome parse_response(const std::string& raw) {
  ParseOutcome out;
  EnvelopeScan env = scan_envelope(raw);
  out.structure_ok = env.structure_ok;
  out.diagnostics = env.diagnostics;
  if (!env.structure_ok) return out;

  ContentScan cs =
      scan_answer_body(raw.substr(env.answer_begin, env.answer_end - env.answer_begin));
  out.content_ok = cs.ok;
  for (auto& d : cs.diagnostics) out.diagnostics.push_back(std::move(d));
  CotResponse resp;
  resp.think_text = trim_copy(raw.substr(env.think_begin, env.think_end - env.think_begin));
  resp.expressions = std::move(cs.expressions);
  resp.raw = raw;
  out.response = std::move(resp);
  return out;
}

bool validate_answer(const std::vector<ReferringExpression>& expressions, TaskKind task,
                     std::vector<std::string>* diagnostics) {
  std::vector<std::string> local;
  int regions = 0, instances = 0;
  bool first_region_semantic = false;
  for (const auto& e : expressions) {
    if (e.kind == ExprKind::region) {
      if (regions == 0) first_region_semantic = e.semantic;
      ++regions;
    } else {
      ++instances;
    }
  }
  switch (task) {
    case TaskKind::sod:
      if (instances > 0) local.push_back("incorrect tag type: <ins> not allowed under sod");
      if (regions == 0) local.push_back("sod requires at least one region expression");
      break;
    case TaskKind::sis:
      if (regions > 0) local.push_back("incorrect tag type: <rg> not allowed under sis");
      if (instances == 0) local.push_back("sis requires at least one instance expression");
      break;
    case TaskKind::cosod:
      if (instances > 0) local.push_back("incorrect tag type: <ins> not allowed under cosod");
      if (regions != 1)
        local.push_back("cosod requires exactly one region expression, got " +
                        std::to_string(regions));
      else if (!first_region_semantic)
        local.push_back("missing [semantic] prefix on cosod region");
      break;
  }
  bool ok = local.empty();
  if (diagnostics)
    for (auto& d : local) diagnostics->push_back(std::move(d));
  return ok;
}

FormatVerdict format_reward(const std::string& raw, TaskKind task) {
  FormatVerdict v;
  EnvelopeScan env = scan_envelope(raw);
  v.diagnostics = env.diagnostics;
  if (env.structure_ok) v.r_struct = 0.5;
  if (env.lone_answer) {
    ContentScan cs =
        scan_answer_body(raw.substr(env.answer_begin, env.answer_end - env.answer_begin));
    for (auto& d : cs.diagnostics) v.diagnostics.push_back(std::move(d));
    bool valid = validate_answer(cs.expressions, task, &v.diagnostics);
    if (cs.ok && valid) v.r_tag = 0.5;
  }
  return v;
}

std::string serialize_expressions(const CotResponse& resp, const std::string& id) {
  std::string out;
  for (std::size_t i = 0; i < resp.expressions.size(); ++i) {
    const auto& e = resp.expressions[i];
    nlohmann::ordered_json rec;
    rec["id"] = id;
    rec["kind"] = e.kind == ExprKind::region ? "region" : "instance";
    rec["text"] = e.text;
    rec["semantic"] = e.semantic;
    rec["index"] = i;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

std::string rebuild_answer(const std::vector<ReferringExpression>& expressions) {
  std::string out = "<answer>";
  for (const auto& e : expressions) {
    if (e.kind == ExprKind::region) {
      out += "<rg>";
      if (e.semantic) {
        out += kSemanticToken;
        out += ' ';
      }
      out += e.text;
      out += "</rg>";
    } else {
      out += "<ins>";
      out += e.text;
      out += "</ins>";
    }
  }
  out += "</answer>";
  return out;
}

}  // namespace salrl
