// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <json.hpp>

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "salrl/cot.hpp"

using namespace salrl;

namespace {

const std::string kValidSod =
    "<think> the big shape on the left </think>\n"
    "<answer><rg> left blob </rg><rg>right blob</rg></answer>";

bool has_diag(const std::vector<std::string>& diags, const std::string& needle) {
  for (const auto& d : diags)
    if (d.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("task names round trip") {
  CHECK(task_from_string("sod") == TaskKind::sod);
  CHECK(task_from_string("sis") == TaskKind::sis);
  CHECK(task_from_string("cosod") == TaskKind::cosod);
  CHECK(task_name(TaskKind::cosod) == std::string("cosod"));
  CHECK_THROWS_AS(task_from_string("SOD"), std::invalid_argument);
  CHECK_THROWS_AS(task_from_string(""), std::invalid_argument);
}

TEST_CASE("well-formed response parses into trimmed expressions") {
  ParseOutcome out = parse_response(kValidSod);
  REQUIRE(out.structure_ok);
  REQUIRE(out.content_ok);
  REQUIRE(out.response.has_value());
  CHECK(out.response->think_text == "the big shape on the left");
  REQUIRE(out.response->expressions.size() == 2);
  CHECK(out.response->expressions[0].kind == ExprKind::region);
  CHECK(out.response->expressions[0].text == "left blob");
  CHECK(out.response->expressions[0].semantic == false);
  CHECK(out.response->expressions[1].text == "right blob");
}

TEST_CASE("semantic prefix is recognized on regions only") {
  ParseOutcome rg = parse_response(
      "<think>t</think><answer><rg>[semantic]   two apples </rg></answer>");
  REQUIRE(rg.content_ok);
  CHECK(rg.response->expressions[0].semantic);
  CHECK(rg.response->expressions[0].text == "two apples");

  // No whitespace after the token: not a prefix.
  ParseOutcome glued = parse_response("<think>t</think><answer><rg>[semantic]x</rg></answer>");
  REQUIRE(glued.content_ok);
  CHECK(glued.response->expressions[0].semantic == false);
  CHECK(glued.response->expressions[0].text == "[semantic]x");

  // Instance bodies take the text literally.
  ParseOutcome ins = parse_response("<think>t</think><answer><ins>[semantic] x</ins></answer>");
  REQUIRE(ins.content_ok);
  CHECK(ins.response->expressions[0].kind == ExprKind::instance);
  CHECK(ins.response->expressions[0].semantic == false);
  CHECK(ins.response->expressions[0].text == "[semantic] x");
}

TEST_CASE("structure violations carry distinct diagnostics") {
  auto diag_of = [](const std::string& raw) { return parse_response(raw).diagnostics; };
  CHECK(has_diag(diag_of("<answer><rg>a</rg></answer>"), "missing think"));
  CHECK(has_diag(diag_of("<think>a</think>"), "missing answer"));
  CHECK(has_diag(diag_of("<think>a</think><think>b</think><answer><rg>c</rg></answer>"),
                 "duplicated think"));
  CHECK(has_diag(diag_of("<think>a</think><answer>x</answer><answer>y</answer>"),
                 "duplicated answer"));
  CHECK(has_diag(diag_of("<think>a<answer><rg>b</rg></answer>"), "unclosed think"));
  CHECK(has_diag(diag_of("<think>a</think><answer><rg>b</rg>"), "unclosed answer"));
  CHECK(has_diag(diag_of("<answer><rg>b</rg></answer><think>a</think>"), "before"));
  CHECK(has_diag(diag_of("</think>a<think><answer>b</answer>"), "closing tag before opening"));
  for (const auto& raw :
       {"<answer><rg>a</rg></answer>", "<think>a</think>", "plain text", ""}) {
    ParseOutcome out = parse_response(raw);
    CHECK(!out.structure_ok);
    CHECK(!out.response.has_value());
  }
}

TEST_CASE("a think body containing an answer tag breaks the envelope") {
  ParseOutcome out = parse_response(
      "<think> see <answer> here </answer></think><answer><rg>a</rg></answer>");
  CHECK(!out.structure_ok);
  // And the answer count is no longer lone, so both halves fail.
  FormatVerdict v = format_reward(
      "<think> see <answer> here </answer></think><answer><rg>a</rg></answer>", TaskKind::sod);
  CHECK(v.total() == 0.0);
}

TEST_CASE("content violations are reported but structure stands") {
  ParseOutcome unknown =
      parse_response("<think>t</think><answer><foo>x</foo><rg>a</rg></answer>");
  CHECK(unknown.structure_ok);
  CHECK(!unknown.content_ok);
  CHECK(has_diag(unknown.diagnostics, "unknown tag"));
  REQUIRE(unknown.response.has_value());
  CHECK(unknown.response->expressions.size() == 1);  // the parseable subset survives

  ParseOutcome nested =
      parse_response("<think>t</think><answer><rg> a <rg> b </rg></rg></answer>");
  CHECK(nested.structure_ok);
  CHECK(!nested.content_ok);
  CHECK(has_diag(nested.diagnostics, "inside"));

  ParseOutcome unclosed = parse_response("<think>t</think><answer><rg> a </answer>");
  CHECK(!unclosed.content_ok);
  CHECK(has_diag(unclosed.diagnostics, "unclosed <rg>"));

  ParseOutcome stray = parse_response("<think>t</think><answer></rg> a</answer>");
  CHECK(!stray.content_ok);
  CHECK(has_diag(stray.diagnostics, "stray closing"));

  ParseOutcome empty = parse_response("<think>t</think><answer><rg>   </rg></answer>");
  CHECK(!empty.content_ok);
  CHECK(has_diag(empty.diagnostics, "empty expression text"));
}

TEST_CASE("bare angle brackets are plain text") {
  ParseOutcome out =
      parse_response("<think> a < b </think><answer><rg> x < y </rg></answer>");
  REQUIRE(out.structure_ok);
  CHECK(out.content_ok);
  CHECK(out.response->expressions[0].text == "x < y");
}

TEST_CASE("validate_answer enforces the per-task expression mix") {
  ReferringExpression rg{ExprKind::region, "a", false};
  ReferringExpression rg_sem{ExprKind::region, "a", true};
  ReferringExpression ins{ExprKind::instance, "b", false};

  CHECK(validate_answer({rg}, TaskKind::sod));
  CHECK(validate_answer({rg, rg}, TaskKind::sod));
  CHECK(!validate_answer({}, TaskKind::sod));
  CHECK(!validate_answer({rg, ins}, TaskKind::sod));

  CHECK(validate_answer({ins}, TaskKind::sis));
  CHECK(validate_answer({ins, ins, ins}, TaskKind::sis));
  CHECK(!validate_answer({}, TaskKind::sis));
  CHECK(!validate_answer({ins, rg}, TaskKind::sis));

  CHECK(validate_answer({rg_sem}, TaskKind::cosod));
  CHECK(!validate_answer({rg}, TaskKind::cosod));
  CHECK(!validate_answer({rg_sem, rg_sem}, TaskKind::cosod));
  CHECK(!validate_answer({ins}, TaskKind::cosod));

  std::vector<std::string> diags;
  validate_answer({ins}, TaskKind::sod, &diags);
  CHECK(has_diag(diags, "not allowed under sod"));
}

TEST_CASE("format reward composes the two independent halves") {
  CHECK(format_reward(kValidSod, TaskKind::sod).total() == 1.0);
  CHECK(format_reward("<think>t</think><answer><ins>a</ins><ins>b</ins></answer>",
                      TaskKind::sis)
            .total() == 1.0);
  CHECK(format_reward("<think>t</think><answer><rg>[semantic] cat</rg></answer>",
                      TaskKind::cosod)
            .total() == 1.0);

  // Valid lone answer without a think block: tag half only.
  FormatVerdict no_think = format_reward("<answer><rg> thing </rg></answer>", TaskKind::sod);
  CHECK(no_think.r_struct == 0.0);
  CHECK(no_think.r_tag == 0.5);

  // Sound envelope, wrong tag type for the task: structural half only.
  FormatVerdict wrong_tag =
      format_reward("<think>t</think><answer><ins>a</ins></answer>", TaskKind::sod);
  CHECK(wrong_tag.r_struct == 0.5);
  CHECK(wrong_tag.r_tag == 0.0);

  // Sound envelope, unclosed expression tag: structural half only.
  FormatVerdict unclosed =
      format_reward("<think>t</think><answer><rg>a</answer>", TaskKind::sod);
  CHECK(unclosed.r_struct == 0.5);
  CHECK(unclosed.r_tag == 0.0);

  CHECK(format_reward("who knows", TaskKind::sod).total() == 0.0);
  CHECK(format_reward("", TaskKind::cosod).total() == 0.0);
}

TEST_CASE("text outside the blocks is tolerated") {
  CHECK(format_reward("noise <think>a</think> mid <answer><rg>b</rg></answer> tail",
                      TaskKind::sod)
            .total() == 1.0);
}

TEST_CASE("expressions round trip through rebuild_answer") {
  const std::string raws[] = {
      kValidSod,
      "<think>t</think><answer><ins> one </ins><ins>two</ins></answer>",
      "<think>t</think><answer><rg>[semantic] shared things</rg></answer>",
  };
  for (const std::string& raw : raws) {
    ParseOutcome first = parse_response(raw);
    REQUIRE(first.content_ok);
    std::string rebuilt =
        "<think>" + first.response->think_text + "</think>" +
        rebuild_answer(first.response->expressions);
    ParseOutcome second = parse_response(rebuilt);
    REQUIRE(second.content_ok);
    REQUIRE(second.response->expressions.size() == first.response->expressions.size());
    for (std::size_t i = 0; i < first.response->expressions.size(); ++i) {
      CHECK(second.response->expressions[i].kind == first.response->expressions[i].kind);
      CHECK(second.response->expressions[i].text == first.response->expressions[i].text);
      CHECK(second.response->expressions[i].semantic == first.response->expressions[i].semantic);
    }
  }
}

TEST_CASE("serialize_expressions emits one json object per expression") {
  ParseOutcome out = parse_response(kValidSod);
  std::string lines = serialize_expressions(*out.response, "item-3");
  std::istringstream ss(lines);
  std::string line;
  int count = 0;
  while (std::getline(ss, line)) {
    nlohmann::json j = nlohmann::json::parse(line);
    CHECK(j.at("id") == "item-3");
    CHECK(j.at("kind") == "region");
    CHECK(j.at("index") == count);
    CHECK(j.at("semantic") == false);
    ++count;
  }
  CHECK(count == 2);
}

TEST_CASE("hostile inputs never throw and stay in the reward range") {
  std::mt19937_64 rng(12);
  const std::string pieces[] = {"<think>", "</think>", "<answer>", "</answer>", "<rg>",
                                "</rg>",   "<ins>",    "</ins>",   "[semantic]", "obj1",
                                " ",       "<",        ">",        "</",         "text"};
  for (int trial = 0; trial < 500; ++trial) {
    std::string raw;
    int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) raw += pieces[rng() % (sizeof(pieces) / sizeof(pieces[0]))];
    for (TaskKind task : {TaskKind::sod, TaskKind::sis, TaskKind::cosod}) {
      FormatVerdict v = format_reward(raw, task);
      double t = v.total();
      CHECK((t == 0.0 || t == 0.5 || t == 1.0));
    }
  }
}
