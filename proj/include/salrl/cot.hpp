// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <vector>

namespace salrl {

enum class TaskKind { sod, sis, cosod };

// Accepts "sod", "sis", "cosod"; throws std::invalid_argument otherwise.
TaskKind task_from_string(const std::string& name);
const char* task_name(TaskKind task);

enum class ExprKind { region, instance };

struct ReferringExpression {
  ExprKind kind = ExprKind::region;
  std::string text;       // trimmed, nonempty
  bool semantic = false;  // regions only: body began with "[semantic] "
};

struct CotResponse {
  std::string think_text;
  std::vector<ReferringExpression> expressions;  // appearance order
  std::string raw;
};

struct ParseOutcome {
  // Set iff the think/answer envelope held. Expressions inside are whatever
  // well-formed tags the answer body yielded, even if content_ok is false.
  std::optional<CotResponse> response;
  bool structure_ok = false;
  bool content_ok = false;  // answer body scanned without violations
  std::vector<std::string> diagnostics;
};

// Envelope rule: exactly one <think>...</think> followed by one disjoint
// <answer>...</answer>, scanning the whole string. Expression tags are read
// from the answer body only.
ParseOutcome parse_response(const std::string& raw);

bool validate_answer(const std::vector<ReferringExpression>& expressions, TaskKind task,
                     std::vector<std::string>* diagnostics = nullptr);

struct FormatVerdict {
  double r_struct = 0.0;  // 0 or 0.5
  double r_tag = 0.0;     // 0 or 0.5
  std::vector<std::string> diagnostics;
  double total() const { return r_struct + r_tag; }
};

// The two halves are independent: r_struct needs the envelope, r_tag needs a
// lone well-formed answer block whose expressions suit the task.
FormatVerdict format_reward(const std::string& raw, TaskKind task);

// One JSON object per line: {"id","kind","text","semantic","index"}.
std::string serialize_expressions(const CotResponse& resp, const std::string& id);

// Canonical answer block for an expression list, envelope included.
std::string rebuild_answer(const std::vector<ReferringExpression>& expressions);

std::string trim_copy(const std::string& s);

}  // namespace salrl
