// Copyright 2026 The gramattn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gramattn/rules.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "gramattn/error.hpp"

namespace gramattn {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
  throw Error(ErrorCode::kParse,
              "rules line " + std::to_string(line_no) + ": " + msg);
}

bool parse_bool(std::string_view v, std::size_t line_no) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line_no, "expected true|false, got '" + std::string(v) + "'");
}

PosTag tag_at(std::string_view name, std::size_t line_no) {
  auto t = try_parse_tag(name);
  if (!t) fail(line_no, "unknown tag '" + std::string(name) + "'");
  return *t;
}

std::string format_alpha(double a) {
  std::ostringstream os;
  os.precision(17);
  os << a;
  return os.str();
}

}  // namespace

void RuleSet::add_hard(PosTag query, PosTag key) {
  hard_[tag_index(query)].set(tag_index(key));
}

void RuleSet::add_soft(PosTag query, PosTag key) {
  soft_[tag_index(query)].set(tag_index(key));
}

void RuleSet::set_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument,
                "alpha must be finite and >= 0, got " + format_alpha(alpha));
  }
  alpha_ = alpha;
}

std::vector<std::pair<PosTag, PosTag>> RuleSet::hard_pairs() const {
  std::vector<std::pair<PosTag, PosTag>> out;
  for (PosTag q : all_tags())
    for (PosTag k : all_tags())
      if (in_hard(q, k)) out.emplace_back(q, k);
  return out;
}

std::vector<std::pair<PosTag, PosTag>> RuleSet::soft_pairs() const {
  std::vector<std::pair<PosTag, PosTag>> out;
  for (PosTag q : all_tags())
    for (PosTag k : all_tags())
      if (in_soft(q, k)) out.emplace_back(q, k);
  return out;
}

bool operator==(const RuleSet& a, const RuleSet& b) noexcept {
  return a.hard_ == b.hard_ && a.soft_ == b.soft_ && a.alpha_ == b.alpha_ &&
         a.cls_attends_all_ == b.cls_attends_all_ &&
         a.self_always_allowed_ == b.self_always_allowed_;
}

RuleSet parse_ruleset(std::string_view text) {
  RuleSet rs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    auto words = split_ws(line);
    if (words.empty()) continue;

    const std::string_view head = words[0];
    if (head == "alpha") {
      if (words.size() != 2) fail(line_no, "alpha takes one value");
      double a = 0.0;
      try {
        std::size_t used = 0;
        a = std::stod(std::string(words[1]), &used);
        if (used != words[1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        fail(line_no, "bad alpha value '" + std::string(words[1]) + "'");
      }
      if (a < 0.0) fail(line_no, "alpha must be >= 0");
      rs.set_alpha(a);
    } else if (head == "cls_attends_all" || head == "self_always_allowed") {
      if (words.size() != 2) fail(line_no, std::string(head) + " takes one value");
      bool v = parse_bool(words[1], line_no);
      if (head == "cls_attends_all") {
        rs.set_cls_attends_all(v);
      } else {
        rs.set_self_always_allowed(v);
      }
    } else if (head == "hard" || head == "soft") {
      if (words.size() < 4 || words[2] != "->") {
        fail(line_no, "expected '" + std::string(head) + " <TAG> -> <TAG> [<TAG>...]'");
      }
      PosTag q = tag_at(words[1], line_no);
      for (std::size_t i = 3; i < words.size(); ++i) {
        PosTag k = tag_at(words[i], line_no);
        if (head == "hard") {
          rs.add_hard(q, k);
        } else {
          rs.add_soft(q, k);
        }
      }
    } else {
      fail(line_no, "unknown directive '" + std::string(head) + "'");
    }
    if (nl == text.size()) break;
  }
  return rs;
}

std::string serialize_ruleset(const RuleSet& rs) {
  std::ostringstream os;
  os << "alpha " << format_alpha(rs.alpha()) << '\n';
  os << "cls_attends_all " << (rs.cls_attends_all() ? "true" : "false") << '\n';
  os << "self_always_allowed " << (rs.self_always_allowed() ? "true" : "false") << '\n';
  for (const char* kind : {"hard", "soft"}) {
    const bool hard = kind[0] == 'h';
    for (PosTag q : all_tags()) {
      std::string keys;
      for (PosTag k : all_tags()) {
        if (hard ? rs.in_hard(q, k) : rs.in_soft(q, k)) {
          keys += ' ';
          keys += tag_name(k);
        }
      }
      if (!keys.empty()) os << kind << ' ' << tag_name(q) << " ->" << keys << '\n';
    }
  }
  return os.str();
}

RuleSet load_ruleset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open rules file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ruleset(ss.str());
}

RuleSet default_ruleset() {
  using enum PosTag;
  RuleSet rs;
  for (PosTag k : {NOUN, PROPN}) rs.add_hard(ADJ, k);
  for (PosTag k : {NOUN, PROPN}) rs.add_hard(DET, k);
  for (PosTag k : {NOUN, PROPN, PRON, ADV}) rs.add_hard(VERB, k);
  for (PosTag k : {NOUN, PROPN, PRON}) rs.add_hard(ADP, k);

  for (PosTag k : {VERB, ADJ, ADV}) rs.add_soft(ADV, k);
  for (PosTag q : {NOUN, PROPN, PRON}) rs.add_soft(q, VERB);
  for (PosTag q : {CCONJ, SCONJ})
    for (PosTag k : {NOUN, PROPN, PRON, VERB, ADJ, ADV}) rs.add_soft(q, k);
  return rs;
}

RuleSet all_pairs_ruleset() {
  RuleSet rs;
  for (PosTag q : all_tags())
    for (PosTag k : all_tags()) rs.add_hard(q, k);
  return rs;
}

std::vector<Diagnostic> validate_ruleset(const RuleSet& rs) {
  std::vector<Diagnostic> out;
  for (PosTag q : ud_tags()) {
    bool any = false;
    for (PosTag k : all_tags()) any = any || rs.in_hard(q, k);
    if (!any) {
      out.push_back({Diagnostic::Kind::kHardQueryAbsent,
                     std::string(tag_name(q)) +
                         " has no hard rules; its rows are self-only under hard masking",
                     q, q});
    }
  }
  for (PosTag q : all_tags()) {
    for (PosTag k : all_tags()) {
      if (rs.in_hard(q, k) && rs.in_soft(q, k)) {
        out.push_back({Diagnostic::Kind::kOverlap,
                       std::string(tag_name(q)) + " -> " + std::string(tag_name(k)) +
                           " is both hard and soft; treated as hard",
                       q, k});
      }
    }
  }
  if (rs.alpha() == 0.0 && !rs.soft_pairs().empty()) {
    out.push_back({Diagnostic::Kind::kZeroAlphaWithSoft,
                   "alpha is 0 but soft rules are declared; soft masking is a no-op",
                   PosTag::X, PosTag::X});
  }
  return out;
}

}  // namespace gramattn
