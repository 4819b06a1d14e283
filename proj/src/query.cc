// Copyright 2026 The vfdebug Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vfdebug/query.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "vfdebug/error.h"

namespace vfdebug::query {
namespace {

std::string Upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string FormatNumber(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shortest form that round-trips.
  for (int prec = 1; prec <= 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

const char* OpText(CompareOp op) {
  switch (op) {
    case CompareOp::kLt: return "<";
    case CompareOp::kGt: return ">";
    case CompareOp::kEq: return "=";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGe: return ">=";
    case CompareOp::kNe: return "!=";
  }
  return "?";
}

bool CompareNumbers(double a, CompareOp op, double b) {
  switch (op) {
    case CompareOp::kLt: return a < b;
    case CompareOp::kGt: return a > b;
    case CompareOp::kEq: return a == b;
    case CompareOp::kLe: return a <= b;
    case CompareOp::kGe: return a >= b;
    case CompareOp::kNe: return a != b;
  }
  return false;
}

// ---------------------------------------------------------------- lexer

struct Token {
  enum Kind { kIdent, kNumber, kString, kSymbol, kEnd } kind = kEnd;
  std::string text;
  double number = 0.0;
};

bool IsIdentChar(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '.' || c >= 0x80;
}

// ",ddd" not followed by another digit.
bool IsThousandsGroup(const std::string& s, size_t comma) {
  if (comma + 3 >= s.size()) return false;
  for (size_t k = 1; k <= 3; ++k) {
    if (!std::isdigit(static_cast<unsigned char>(s[comma + k]))) return false;
  }
  return comma + 4 >= s.size() ||
         !std::isdigit(static_cast<unsigned char>(s[comma + 4]));
}

std::vector<Token> Lex(const std::string& s) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    Token t;
    if (std::isdigit(c) || (c == '.' && i + 1 < s.size() &&
                            std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::string digits;
      size_t j = i;
      while (j < s.size()) {
        unsigned char d = static_cast<unsigned char>(s[j]);
        if (std::isdigit(d) || d == '.' || d == 'e' || d == 'E' ||
            ((d == '+' || d == '-') && (s[j - 1] == 'e' || s[j - 1] == 'E'))) {
          digits += s[j++];
        } else if (d == ',' && IsThousandsGroup(s, j)) {
          ++j;  // thousands separator
        } else {
          break;
        }
      }
      // A number immediately followed by identifier characters is a name.
      if (j < s.size() && IsIdentChar(static_cast<unsigned char>(s[j])) &&
          s[j] != '.') {
        while (j < s.size() && IsIdentChar(static_cast<unsigned char>(s[j]))) ++j;
        t.kind = Token::kIdent;
        t.text = s.substr(i, j - i);
      } else {
        t.kind = Token::kNumber;
        t.text = digits;
        char* end = nullptr;
        t.number = std::strtod(digits.c_str(), &end);
        if (end == digits.c_str() || *end != '\0') {
          throw QueryError("malformed number '" + digits + "'");
        }
      }
      i = j;
    } else if (IsIdentChar(c)) {
      size_t j = i;
      while (j < s.size() && IsIdentChar(static_cast<unsigned char>(s[j]))) ++j;
      t.kind = Token::kIdent;
      t.text = s.substr(i, j - i);
      i = j;
    } else if (c == '\'' || c == '"') {
      size_t j = s.find(static_cast<char>(c), i + 1);
      if (j == std::string::npos) throw QueryError("unterminated string");
      t.kind = Token::kString;
      t.text = s.substr(i + 1, j - i - 1);
      i = j + 1;
    } else {
      static const char* two[] = {"<=", ">=", "!=", "<>"};
      t.kind = Token::kSymbol;
      t.text = std::string(1, static_cast<char>(c));
      for (const char* op : two) {
        if (s.compare(i, 2, op) == 0) t.text = op;
      }
      if (std::string("<>=!/*(),-").find(static_cast<char>(c)) ==
          std::string::npos) {
        throw QueryError(std::string("unexpected character '") +
                         static_cast<char>(c) + "'");
      }
      i += t.text.size();
    }
    out.push_back(std::move(t));
  }
  out.push_back(Token{});
  return out;
}

// --------------------------------------------------------------- parser

class Parser {
 public:
  Parser(const std::string& text, const ParseOptions& options)
      : tokens_(Lex(text)), options_(options) {}

  QuerySpec Parse() {
    QuerySpec spec;
    ExpectKeyword("SELECT");
    ParseSelect(spec);
    ExpectKeyword("FROM");
    // The join clause is fixed; skip to WHERE / GROUP BY.
    while (!AtEnd() && !IsKeyword("WHERE") && !IsKeyword("GROUP")) Next();
    if (IsKeyword("WHERE")) {
      Next();
      spec.filters.push_back(ParsePredicate());
      while (IsKeyword("AND")) {
        Next();
        spec.filters.push_back(ParsePredicate());
      }
    }
    if (IsKeyword("GROUP")) {
      Next();
      ExpectKeyword("BY");
      spec.group_by.push_back(ColumnName(ExpectIdent()));
      while (IsSymbol(",")) {
        Next();
        spec.group_by.push_back(ColumnName(ExpectIdent()));
      }
    }
    if (IsSymbol(";")) Next();
    if (!AtEnd()) throw QueryError("unexpected token '" + Peek().text + "'");
    spec.Validate();
    return spec;
  }

 private:
  const Token& Peek() const { return tokens_[pos_]; }
  const Token& Next() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
  bool AtEnd() const { return Peek().kind == Token::kEnd; }
  bool IsKeyword(const char* kw) const {
    return Peek().kind == Token::kIdent && Upper(Peek().text) == kw;
  }
  bool IsSymbol(const char* sym) const {
    return Peek().kind == Token::kSymbol && Peek().text == sym;
  }
  void ExpectKeyword(const char* kw) {
    if (!IsKeyword(kw)) {
      throw QueryError(std::string("expected ") + kw + " near '" +
                       Peek().text + "'");
    }
    Next();
  }
  void ExpectSymbol(const char* sym) {
    if (!IsSymbol(sym)) {
      throw QueryError(std::string("expected '") + sym + "' near '" +
                       Peek().text + "'");
    }
    Next();
  }
  std::string ExpectIdent() {
    if (Peek().kind != Token::kIdent) {
      throw QueryError("expected a name near '" + Peek().text + "'");
    }
    return Next().text;
  }

  // Qualified names are stripped to the column, except the prediction
  // label which keeps its canonical name.
  static std::string ColumnName(const std::string& raw) {
    size_t dot = raw.rfind('.');
    if (dot == std::string::npos) return raw;
    std::string last = Upper(raw.substr(dot + 1));
    if (last == "LABEL" || last == "LABEL_PROB") return kLabelColumn;
    return raw.substr(dot + 1);
  }

  void ParseSelect(QuerySpec& spec) {
    std::string agg = Upper(ExpectIdent());
    if (agg == "COUNT") {
      spec.agg = Aggregate::kCount;
    } else if (agg == "SUM") {
      spec.agg = Aggregate::kSum;
    } else if (agg == "AVG") {
      spec.agg = Aggregate::kAvg;
    } else {
      throw QueryError("unsupported aggregate '" + agg + "'");
    }
    ExpectSymbol("(");
    if (IsSymbol("*")) {
      Next();
      spec.target = "*";
    } else {
      std::string name = ExpectIdent();
      spec.target = name == "·" ? "*" : ColumnName(name);
      if (IsSymbol("(")) {  // P.Label_prob()
        Next();
        ExpectSymbol(")");
      }
    }
    ExpectSymbol(")");
    if (spec.agg != Aggregate::kCount && spec.target == "*") {
      throw QueryError("SUM/AVG need a column");
    }
    if (IsSymbol("/")) {
      Next();
      if (Peek().kind == Token::kNumber) {
        spec.denominator.kind = Denominator::Kind::kConstant;
        spec.denominator.constant = Next().number;
        if (spec.denominator.constant == 0.0) {
          throw QueryError("division by zero");
        }
      } else if (Upper(ExpectIdent()) == "TOTAL_COUNT") {
        spec.denominator.kind = Denominator::Kind::kTotalCount;
      } else {
        throw QueryError("denominator must be Total_count or a number");
      }
    }
    if (IsKeyword("AS")) {
      Next();
      ExpectIdent();
    }
  }

  Predicate ParsePredicate() {
    Predicate p;
    p.column = ColumnName(ExpectIdent());
    if (Peek().kind != Token::kSymbol) {
      throw QueryError("expected a comparison near '" + Peek().text + "'");
    }
    std::string op = Next().text;
    if (op == "<") {
      p.op = CompareOp::kLt;
    } else if (op == ">") {
      p.op = CompareOp::kGt;
    } else if (op == "=") {
      p.op = CompareOp::kEq;
    } else if (op == "<=") {
      p.op = CompareOp::kLe;
    } else if (op == ">=") {
      p.op = CompareOp::kGe;
    } else if (op == "!=" || op == "<>") {
      p.op = CompareOp::kNe;
    } else {
      throw QueryError("unsupported comparison '" + op + "'");
    }
    bool negate = false;
    if (IsSymbol("-")) {
      Next();
      negate = true;
    }
    const Token& v = Next();
    if (negate && v.kind != Token::kNumber) {
      throw QueryError("expected a number after '-'");
    }
    if (v.kind == Token::kNumber) {
      p.value = negate ? -v.number : v.number;
    } else if (v.kind == Token::kString || v.kind == Token::kIdent) {
      p.value = v.text;
    } else {
      throw QueryError("expected a value near '" + v.text + "'");
    }
    if (p.column == kLabelColumn) NormalizeLabel(p);
    return p;
  }

  void NormalizeLabel(Predicate& p) const {
    if (p.op != CompareOp::kEq && p.op != CompareOp::kNe) {
      throw QueryError("P.Label supports only = and !=");
    }
    double label;
    if (const double* d = std::get_if<double>(&p.value)) {
      label = *d;
    } else {
      std::string s = Upper(std::get<std::string>(p.value));
      if (s == Upper(options_.positive_label) || s == "1" || s == "TRUE") {
        label = 1.0;
      } else if (s == Upper(options_.negative_label) || s == "0" ||
                 s == "FALSE") {
        label = 0.0;
      } else {
        throw QueryError("unknown label value '" +
                         std::get<std::string>(p.value) + "'");
      }
    }
    if (label != 0.0 && label != 1.0) throw QueryError("labels are 0 or 1");
    if (p.op == CompareOp::kNe) label = 1.0 - label;
    p.op = CompareOp::kEq;
    p.value = label;
  }

  std::vector<Token> tokens_;
  size_t pos_ = 0;
  ParseOptions options_;
};

// ----------------------------------------------------------- evaluation

constexpr char kKeySep = '|';

struct Layout {
  std::vector<size_t> ia_row;  // prediction row -> inference row
  std::vector<const DataTable::Column*> group_cols;  // null for P.Label
  int label_group_pos = -1;
  const Predicate* label_filter = nullptr;
  std::vector<std::pair<const Predicate*, const DataTable::Column*>> filters;
  const DataTable::Column* target = nullptr;
};

Layout Prepare(const QuerySpec& spec, const PredictionTable& p,
               const DataTable& ia) {
  spec.Validate();
  if (p.prob1.size() != static_cast<Eigen::Index>(p.ids.size()) ||
      p.hard_label.size() != p.ids.size()) {
    throw QueryError("prediction table columns disagree in length");
  }
  Layout l;
  std::unordered_map<int64_t, size_t> index;
  for (size_t i = 0; i < ia.rows(); ++i) index[ia.ids()[i]] = i;
  for (int64_t id : p.ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw QueryError("prediction id " + std::to_string(id) +
                       " missing from the inference table");
    }
    l.ia_row.push_back(it->second);
  }
  for (size_t g = 0; g < spec.group_by.size(); ++g) {
    if (spec.group_by[g] == kLabelColumn) {
      l.group_cols.push_back(nullptr);
      l.label_group_pos = static_cast<int>(g);
    } else {
      l.group_cols.push_back(&ia.Get(spec.group_by[g]));
    }
  }
  for (const Predicate& f : spec.filters) {
    if (f.column == kLabelColumn) {
      l.label_filter = &f;
    } else {
      const DataTable::Column& col = ia.Get(f.column);
      if (col.numeric && !std::holds_alternative<double>(f.value)) {
        throw QueryError("column '" + f.column + "' is numeric");
      }
      l.filters.emplace_back(&f, &col);
    }
  }
  if (spec.target != "*" && !spec.label_in_target()) {
    l.target = &ia.Get(spec.target);
    if (!l.target->numeric) {
      throw QueryError("cannot aggregate categorical column '" + spec.target +
                       "'");
    }
  }
  return l;
}

bool PassesFilters(const Layout& l, size_t row) {
  for (const auto& [pred, col] : l.filters) {
    if (col->numeric) {
      if (!CompareNumbers(col->numbers[row], pred->op,
                          std::get<double>(pred->value))) {
        return false;
      }
    } else {
      std::string rhs = std::holds_alternative<double>(pred->value)
                            ? FormatNumber(std::get<double>(pred->value))
                            : std::get<std::string>(pred->value);
      int cmp = col->labels[row].compare(rhs);
      bool ok = false;
      switch (pred->op) {
        case CompareOp::kEq: ok = cmp == 0; break;
        case CompareOp::kNe: ok = cmp != 0; break;
        case CompareOp::kLt: ok = cmp < 0; break;
        case CompareOp::kGt: ok = cmp > 0; break;
        case CompareOp::kLe: ok = cmp <= 0; break;
        case CompareOp::kGe: ok = cmp >= 0; break;
      }
      if (!ok) return false;
    }
  }
  return true;
}

// Group key with the label component (if any) filled by `label`.
std::string GroupKey(const Layout& l, const DataTable& ia, size_t row,
                     int label) {
  std::string key;
  for (size_t g = 0; g < l.group_cols.size(); ++g) {
    if (g) key += kKeySep;
    key += l.group_cols[g] ? ia.CellText(*l.group_cols[g], row)
                           : std::to_string(label);
  }
  return key;
}

std::string BaseKey(const Layout& l, const DataTable& ia, size_t row) {
  return GroupKey(l, ia, row, -1);
}

std::set<std::string> AllGroupKeys(const Layout& l, const DataTable& ia) {
  std::set<std::string> keys;
  for (size_t row = 0; row < ia.rows(); ++row) {
    if (l.label_group_pos >= 0) {
      keys.insert(GroupKey(l, ia, row, 0));
      keys.insert(GroupKey(l, ia, row, 1));
    } else {
      keys.insert(GroupKey(l, ia, row, 0));
    }
  }
  if (l.group_cols.empty()) keys.insert("");
  return keys;
}

struct Discrete {
  std::map<std::string, double> sums;
  std::map<std::string, int64_t> counts;
  std::map<std::string, int64_t> totals;  // by base key
  std::set<std::string> keys;
};

Discrete EvaluateDiscrete(const QuerySpec& spec, const Layout& l,
                          const PredictionTable& p, const DataTable& ia) {
  Discrete d;
  d.keys = AllGroupKeys(l, ia);
  for (size_t i = 0; i < p.ids.size(); ++i) {
    size_t row = l.ia_row[i];
    if (!PassesFilters(l, row)) continue;
    int label = p.hard_label[i];
    ++d.totals[BaseKey(l, ia, row)];
    if (l.label_filter && label != std::get<double>(l.label_filter->value)) {
      continue;
    }
    double v = 1.0;
    if (spec.label_in_target()) v = label;
    if (l.target) v = l.target->numbers[row];
    std::string key = GroupKey(l, ia, row, label);
    d.sums[key] += v;
    ++d.counts[key];
  }
  return d;
}

double GroupDenominator(const QuerySpec& spec, const Discrete& d,
                        const std::string& key, const std::string& base,
                        bool* empty) {
  *empty = false;
  if (spec.agg == Aggregate::kAvg) {
    auto it = d.counts.find(key);
    if (it == d.counts.end() || it->second == 0) {
      *empty = true;
      return 1.0;
    }
    return static_cast<double>(it->second);
  }
  switch (spec.denominator.kind) {
    case Denominator::Kind::kNone:
      return 1.0;
    case Denominator::Kind::kConstant:
      return spec.denominator.constant;
    case Denominator::Kind::kTotalCount: {
      auto it = d.totals.find(base);
      if (it == d.totals.end() || it->second == 0) {
        *empty = true;
        return 1.0;
      }
      return static_cast<double>(it->second);
    }
  }
  return 1.0;
}

// Base key of a full key: drop the label component.
std::string StripLabel(const Layout& l, const std::string& key) {
  if (l.label_group_pos < 0) return key;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : key) {
    if (c == kKeySep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  parts[static_cast<size_t>(l.label_group_pos)] = "-1";
  std::string out;
  for (size_t g = 0; g < parts.size(); ++g) {
    if (g) out += kKeySep;
    out += parts[g];
  }
  return out;
}

int LabelOfKey(const Layout& l, const std::string& key) {
  size_t pos = 0;
  for (int g = 0; g < l.label_group_pos; ++g) pos = key.find(kKeySep, pos) + 1;
  return key[pos] == '1' ? 1 : 0;
}

std::vector<std::string> SelectorTerms(const QuerySpec& spec) {
  const std::string& s = spec.target_selector;
  size_t dash = s.find(" - ");
  if (dash == std::string::npos) return {s};
  return {s.substr(0, dash), s.substr(dash + 3)};
}

}  // namespace

// ------------------------------------------------------------ DataTable

void DataTable::CheckLength(size_t n) const {
  if (n != ids_.size()) {
    throw QueryError("column length " + std::to_string(n) +
                     " differs from row count " + std::to_string(ids_.size()));
  }
}

void DataTable::AddNumeric(const std::string& name,
                           std::vector<double> values) {
  CheckLength(values.size());
  Column c;
  c.name = name;
  c.numeric = true;
  c.numbers = std::move(values);
  columns_.push_back(std::move(c));
}

void DataTable::AddCategorical(const std::string& name,
                               std::vector<std::string> values) {
  CheckLength(values.size());
  Column c;
  c.name = name;
  c.numeric = false;
  c.labels = std::move(values);
  columns_.push_back(std::move(c));
}

bool DataTable::Has(const std::string& name) const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [&](const Column& c) { return c.name == name; });
}

const DataTable::Column& DataTable::Get(const std::string& name) const {
  for (const Column& c : columns_) {
    if (c.name == name) return c;
  }
  throw QueryError("unknown column '" + name + "'");
}

std::string DataTable::CellText(const Column& column, size_t row) const {
  return column.numeric ? FormatNumber(column.numbers[row])
                        : column.labels[row];
}

// ------------------------------------------------------ PredictionTable

PredictionTable PredictionTable::FromProbabilities(std::vector<int64_t> ids,
                                                   const Vector& prob1,
                                                   double threshold) {
  PredictionTable t;
  t.ids = std::move(ids);
  t.prob1 = prob1;
  t.threshold = threshold;
  for (Eigen::Index i = 0; i < prob1.size(); ++i) {
    t.hard_label.push_back(prob1[i] >= threshold ? 1 : 0);
  }
  return t;
}

PredictionTable PredictionTable::FromScores(std::vector<int64_t> ids,
                                            const Vector& scores,
                                            double threshold) {
  PredictionTable t =
      FromProbabilities(std::move(ids), scores, threshold);
  t.prob1 = scores.cwiseMax(0.0).cwiseMin(1.0);
  return t;
}

// ------------------------------------------------------------ QuerySpec

void QuerySpec::Validate() const {
  int refs = label_in_target() ? 1 : 0;
  for (const Predicate& f : filters) refs += f.column == kLabelColumn;
  for (const std::string& g : group_by) refs += g == kLabelColumn;
  if (refs > 1) {
    throw QueryError("at most one reference to P.Label is supported");
  }
  if (agg == Aggregate::kAvg && denominator.kind != Denominator::Kind::kNone) {
    throw QueryError("AVG does not take a denominator");
  }
  if (agg != Aggregate::kCount && target == "*") {
    throw QueryError("SUM/AVG need a column");
  }
}

std::string QuerySpec::ToString() const {
  std::ostringstream out;
  out << "SELECT "
      << (agg == Aggregate::kCount ? "COUNT"
                                   : agg == Aggregate::kSum ? "SUM" : "AVG")
      << "(" << target << ")";
  if (denominator.kind == Denominator::Kind::kTotalCount) {
    out << " / Total_count";
  } else if (denominator.kind == Denominator::Kind::kConstant) {
    out << " / " << FormatNumber(denominator.constant);
  }
  out << " FROM P JOIN IA ON ID";
  for (size_t i = 0; i < filters.size(); ++i) {
    const Predicate& f = filters[i];
    out << (i ? " AND " : " WHERE ") << f.column << " " << OpText(f.op) << " ";
    if (const double* d = std::get_if<double>(&f.value)) {
      out << FormatNumber(*d);
    } else {
      out << "'" << std::get<std::string>(f.value) << "'";
    }
  }
  for (size_t i = 0; i < group_by.size(); ++i) {
    out << (i ? ", " : " GROUP BY ") << group_by[i];
  }
  return out.str();
}

QuerySpec ParseQuery(const std::string& text, const ParseOptions& options) {
  return Parser(text, options).Parse();
}

// ---------------------------------------------------------- evaluation

const GroupResult& QueryResult::Group(const std::string& key) const {
  for (const GroupResult& g : groups) {
    if (g.key == key) return g;
  }
  throw QueryError("no group named '" + key + "'");
}

QueryResult ExecuteQuery(const QuerySpec& spec, const PredictionTable& p,
                         const DataTable& ia) {
  Layout l = Prepare(spec, p, ia);
  Discrete d = EvaluateDiscrete(spec, l, p, ia);
  QueryResult out;
  for (const std::string& key : d.keys) {
    GroupResult g;
    g.key = key;
    auto c = d.counts.find(key);
    g.rows = c == d.counts.end() ? 0 : c->second;
    double den = GroupDenominator(spec, d, key, StripLabel(l, key), &g.empty);
    auto s = d.sums.find(key);
    double sum = s == d.sums.end() ? 0.0 : s->second;
    g.value = g.empty ? 0.0 : sum / den;
    if (g.empty && spec.agg != Aggregate::kAvg) g.empty = false;
    out.groups.push_back(std::move(g));
  }
  return out;
}

double SelectTarget(const QuerySpec& spec, const QueryResult& result) {
  std::vector<std::string> terms = SelectorTerms(spec);
  if (terms[0].empty() && result.groups.size() != 1) {
    throw QueryError("grouped query needs a target selector");
  }
  auto value = [&](const std::string& key) {
    const GroupResult& g =
        key.empty() && result.groups.size() == 1 ? result.groups[0]
                                                 : result.Group(key);
    if (g.empty) throw QueryError("group '" + key + "' has no rows");
    return g.value;
  };
  double v = value(terms[0]);
  if (terms.size() == 2) v -= value(terms[1]);
  return v;
}

RelaxedQuery RelaxQuery(const QuerySpec& spec, const PredictionTable& p,
                        const DataTable& ia) {
  Layout l = Prepare(spec, p, ia);
  Discrete d = EvaluateDiscrete(spec, l, p, ia);
  std::vector<std::string> terms = SelectorTerms(spec);
  if (terms[0].empty() && !l.group_cols.empty()) {
    throw QueryError("grouped query needs a target selector");
  }
  RelaxedQuery out;
  out.coeffs = Vector::Zero(static_cast<Eigen::Index>(p.ids.size()));
  for (size_t t = 0; t < terms.size(); ++t) {
    const std::string& key = terms[t];
    if (!d.keys.count(key)) throw QueryError("no group named '" + key + "'");
    double sign = t == 0 ? 1.0 : -1.0;
    std::string base = StripLabel(l, key);
    bool empty = false;
    double den = GroupDenominator(spec, d, key, base, &empty);
    if (empty) throw QueryError("group '" + key + "' has no rows");
    int key_label = l.label_group_pos >= 0 ? LabelOfKey(l, key) : -1;
    for (size_t i = 0; i < p.ids.size(); ++i) {
      size_t row = l.ia_row[i];
      if (!PassesFilters(l, row)) continue;
      if (BaseKey(l, ia, row) != base) continue;
      double p1 = p.prob1[static_cast<Eigen::Index>(i)];
      // Row contribution c(p1) = factor(p1) * v(p1), affine in p1.
      double factor = 1.0;
      double dfactor = 0.0;
      int label_ref = -1;
      if (l.label_filter) label_ref = static_cast<int>(
          std::get<double>(l.label_filter->value));
      if (key_label >= 0) label_ref = key_label;
      if (label_ref == 1) {
        factor = p1;
        dfactor = 1.0;
      } else if (label_ref == 0) {
        factor = 1.0 - p1;
        dfactor = -1.0;
      }
      double v = 1.0;
      double dv = 0.0;
      if (spec.label_in_target()) {
        v = p1;
        dv = 1.0;
      } else if (l.target) {
        v = l.target->numbers[row];
      }
      out.value += sign * factor * v / den;
      out.coeffs[static_cast<Eigen::Index>(i)] +=
          sign * (dfactor * v + factor * dv) / den;
    }
  }
  return out;
}

// ------------------------------------------------------------ complaint

bool Complaint::Satisfied(double result) const {
  double slack = tolerance * std::max(1.0, std::fabs(value));
  switch (op) {
    case Op::kEq: return std::fabs(result - value) <= slack;
    case Op::kLe: return result <= value + slack;
    case Op::kGe: return result >= value - slack;
  }
  return false;
}

int Complaint::Direction(double result) const {
  if (Satisfied(result)) return 0;
  return result > value ? 1 : -1;
}

std::string Complaint::ToString() const {
  return std::string("Q ") + ComplaintOpName(op) + " " + FormatNumber(value);
}

Complaint::Op ComplaintOpFromString(const std::string& op) {
  if (op == "=" || op == "==" || op == "eq") return Complaint::Op::kEq;
  if (op == "<=" || op == "≤" || op == "le") return Complaint::Op::kLe;
  if (op == ">=" || op == "≥" || op == "ge") return Complaint::Op::kGe;
  throw QueryError("unknown complaint operator '" + op + "'");
}

const char* ComplaintOpName(Complaint::Op op) {
  switch (op) {
    case Complaint::Op::kEq: return "=";
    case Complaint::Op::kLe: return "<=";
    case Complaint::Op::kGe: return ">=";
  }
  return "?";
}

Vector ComplaintWeights(const RelaxedQuery& relaxed, int direction) {
  return static_cast<double>(direction) * relaxed.coeffs;
}

linalg::SeparatedVector QueryGradLogistic(const Vector& weights,
                                          const model::ModelState& state,
                                          const model::Matrix& xa,
                                          const model::Matrix& xb) {
  if (weights.size() != xa.rows() || xa.rows() != xb.rows()) {
    throw InvalidArgumentError("query gradient: row counts disagree");
  }
  Vector z = xa * state.theta_a + xb * state.theta_b;
  Vector w(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    double h = model::Sigmoid(z[i]);
    w[i] = weights[i] * h * (1.0 - h);
  }
  return {xa.transpose() * w, xb.transpose() * w};
}

linalg::SeparatedVector QueryGradFrog(const Vector& weights,
                                      const model::ModelState& state,
                                      const model::Matrix& xa,
                                      const model::Matrix& xb) {
  if (weights.size() != xa.rows() || xa.rows() != xb.rows()) {
    throw InvalidArgumentError("query gradient: row counts disagree");
  }
  model::FrogScores s = model::FrogEvaluate(state, xa, xb);
  return {model::FrogScoreGradA(state, xa, s.f1).transpose() * weights,
          model::FrogScoreGradB(state, xb, s.f2).transpose() * weights};
}

}  // namespace vfdebug::query
