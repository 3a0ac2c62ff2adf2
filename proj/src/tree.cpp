#include "gpbeam/tree.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gpbeam {

Tree Tree::leaf(std::string token) {
  if (token.empty()) throw std::invalid_argument("leaf token must be nonempty");
  Tree t;
  t.word = std::move(token);
  return t;
}

Tree Tree::node(std::string label, std::vector<Tree> children) {
  if (label.empty()) throw std::invalid_argument("node label must be nonempty");
  if (children.empty())
    throw std::invalid_argument("internal node needs at least one child");
  Tree t;
  t.label = std::move(label);
  t.children = std::move(children);
  return t;
}

namespace {

struct Lexer {
  const std::string& text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    if (pos >= text.size()) throw std::runtime_error("unexpected end of bracketed input");
    return text[pos];
  }
  std::string symbol() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      ++pos;
    if (pos == start) throw std::runtime_error("empty label or token in bracketed input");
    return text.substr(start, pos - start);
  }
};

Tree parse_node(Lexer& lex) {
  if (lex.peek() != '(') throw std::runtime_error("expected '('");
  ++lex.pos;
  std::string label = lex.symbol();
  std::vector<Tree> children;
  for (;;) {
    char c = lex.peek();
    if (c == ')') {
      ++lex.pos;
      break;
    }
    if (c == '(') {
      children.push_back(parse_node(lex));
    } else {
      children.push_back(Tree::leaf(lex.symbol()));
    }
  }
  if (children.empty())
    throw std::runtime_error("internal node with zero children: (" + label + ")");
  return Tree::node(std::move(label), std::move(children));
}

void render(const Tree& t, std::string& out) {
  if (t.is_leaf()) {
    out += t.word;
    return;
  }
  out += '(';
  out += t.label;
  for (const Tree& c : t.children) {
    out += ' ';
    render(c, out);
  }
  out += ')';
}

void collect_yield(const Tree& t, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    out.push_back(t.word);
    return;
  }
  for (const Tree& c : t.children) collect_yield(c, out);
}

// Returns the width of the subtree; appends its brackets.
int collect_brackets(const Tree& t, int start, std::vector<Bracket>& out) {
  if (t.is_leaf()) return 1;
  int pos = start;
  for (const Tree& c : t.children) pos += collect_brackets(c, pos, out);
  out.emplace_back(t.label, start, pos);
  return pos - start;
}

}  // namespace

Tree parse_bracketed(const std::string& text) {
  Lexer lex{text};
  if (lex.done()) throw std::runtime_error("empty bracketed input");
  if (lex.peek() != '(')
    throw std::runtime_error("bracketed tree must start with '('");
  Tree t = parse_node(lex);
  if (!lex.done()) throw std::runtime_error("trailing input after bracketed tree");
  return t;
}

std::string render_bracketed(const Tree& t) {
  if (t.is_leaf())
    throw std::invalid_argument("root must be an internal node");
  std::string out;
  render(t, out);
  return out;
}

std::vector<std::string> yield_words(const Tree& t) {
  std::vector<std::string> out;
  collect_yield(t, out);
  return out;
}

int leaf_count(const Tree& t) {
  if (t.is_leaf()) return 1;
  int n = 0;
  for (const Tree& c : t.children) n += leaf_count(c);
  return n;
}

std::vector<Bracket> brackets(const Tree& t) {
  std::vector<Bracket> out;
  collect_brackets(t, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

F1Score labeled_f1(const Tree& gold, const Tree& pred) {
  if (yield_words(gold) != yield_words(pred))
    throw std::invalid_argument("labeled_f1: yield mismatch");
  std::vector<Bracket> g = brackets(gold);
  std::vector<Bracket> p = brackets(pred);
  std::vector<Bracket> common;
  std::set_intersection(g.begin(), g.end(), p.begin(), p.end(),
                        std::back_inserter(common));
  double match = static_cast<double>(common.size());
  F1Score s;
  s.precision = p.empty() ? 0.0 : match / static_cast<double>(p.size());
  s.recall = g.empty() ? 0.0 : match / static_cast<double>(g.size());
  s.f1 = (s.precision + s.recall) > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

Treebank read_treebank(std::istream& in, const std::string& source) {
  Treebank tb;
  tb.source = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    bool blank = line.find_first_not_of(" \t\r\n") == std::string::npos;
    if (blank) continue;
    try {
      tb.trees.push_back(parse_bracketed(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return tb;
}

Treebank load_treebank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open treebank: " + path);
  return read_treebank(in, path);
}

void save_treebank(const Treebank& tb, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write treebank: " + path);
  for (const Tree& t : tb.trees) out << render_bracketed(t) << '\n';
}

}  // namespace gpbeam
