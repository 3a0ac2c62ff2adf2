#ifndef GPBEAM_TREE_HPP
#define GPBEAM_TREE_HPP

#include <iosfwd>
#include <string>
#include <tuple>
#include <vector>

namespace gpbeam {

// Labeled constituency tree. Internal nodes carry a label and at least one
// child; leaves carry exactly one token.
struct Tree {
  std::string label;           // nonempty iff internal node
  std::string word;            // nonempty iff leaf
  std::vector<Tree> children;  // nonempty iff internal node

  bool is_leaf() const { return children.empty(); }

  static Tree leaf(std::string token);
  static Tree node(std::string label, std::vector<Tree> children);

  bool operator==(const Tree& other) const = default;
};

struct Treebank {
  std::vector<Tree> trees;
  std::string source;
};

// (label, start, end) span, 0-based, end exclusive.
using Bracket = std::tuple<std::string, int, int>;

struct F1Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Penn-style bracketed format: labels and tokens are whitespace-delimited,
// no escaping; tokens containing parentheses are rejected.
Tree parse_bracketed(const std::string& text);
std::string render_bracketed(const Tree& t);

std::vector<std::string> yield_words(const Tree& t);
int leaf_count(const Tree& t);

// Multiset of labeled spans over the yield, sorted. Unary nodes directly over
// a leaf count as width-1 brackets; the root bracket is included.
std::vector<Bracket> brackets(const Tree& t);

// Labeled bracket precision/recall/F1. Requires identical yields.
F1Score labeled_f1(const Tree& gold, const Tree& pred);

// One bracketed tree per line, UTF-8. Blank lines are skipped.
Treebank load_treebank(const std::string& path);
Treebank read_treebank(std::istream& in, const std::string& source);
void save_treebank(const Treebank& tb, const std::string& path);

}  // namespace gpbeam

#endif
