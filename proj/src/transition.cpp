#include "gpbeam/transition.hpp"

#include <stdexcept>

namespace gpbeam {

std::string to_string(const Action& a) {
  switch (a.kind) {
    case ActionKind::NT: return "NT(" + a.arg + ")";
    case ActionKind::Shift: return "SHIFT(" + a.arg + ")";
    case ActionKind::Reduce: return "REDUCE";
  }
  throw std::logic_error("bad action kind");
}

Action parse_action(const std::string& text) {
  if (text == "REDUCE") return Action::reduce();
  auto body = [&](const std::string& prefix) -> std::string {
    std::string arg = text.substr(prefix.size(), text.size() - prefix.size() - 1);
    if (arg.empty()) throw std::runtime_error("empty argument in action: " + text);
    return arg;
  };
  if (text.starts_with("NT(") && text.ends_with(")")) return Action::nt(body("NT("));
  if (text.starts_with("SHIFT(") && text.ends_with(")")) return Action::shift(body("SHIFT("));
  throw std::runtime_error("cannot parse action: " + text);
}

std::string to_string(StrategyId s) {
  return s == StrategyId::TopDown ? "top-down" : "left-corner";
}

StrategyId parse_strategy(const std::string& text) {
  if (text == "top-down" || text == "topdown") return StrategyId::TopDown;
  if (text == "left-corner" || text == "leftcorner" || text == "in-order")
    return StrategyId::LeftCorner;
  throw std::runtime_error("unknown strategy: " + text);
}

namespace {

bool entry_open(const StackEntry& e) { return std::holds_alternative<OpenNode>(e); }

// Index of the innermost (topmost) open entry, or -1.
int innermost_open(const ParserState& s) {
  for (int i = static_cast<int>(s.stack.size()) - 1; i >= 0; --i)
    if (entry_open(s.stack[i])) return i;
  return -1;
}

}  // namespace

bool is_terminal(const ParserState& s) {
  // A bare leaf is not a parse; the root must be a labeled constituent.
  return s.stack.size() == 1 && s.open_count == 0 &&
         std::holds_alternative<Tree>(s.stack[0]) &&
         !std::get<Tree>(s.stack[0]).is_leaf();
}

const Tree& terminal_tree(const ParserState& s) {
  if (!is_terminal(s)) throw std::invalid_argument("state is not terminal");
  return std::get<Tree>(s.stack[0]);
}

LegalKinds legal_action_kinds(const ParserState& s, StrategyId strategy,
                              const DerivationLimits& limits) {
  LegalKinds k;
  bool structural_ok = s.structural_since_word < limits.max_structural_actions_between_words;
  bool open_ok = s.open_count < limits.max_open_nonterminals;

  if (strategy == StrategyId::TopDown) {
    // Stack is a chain of open nodes, except the final completed root.
    bool top_open = !s.stack.empty() && entry_open(s.stack.back());
    if (is_terminal(s)) return k;
    k.nt = structural_ok && open_ok && (s.stack.empty() || top_open);
    k.shift = top_open;
    k.reduce = structural_ok && top_open &&
               !std::get<OpenNode>(s.stack.back()).children.empty();
    return k;
  }

  // Left-corner (in-order): SHIFT pushes a leaf, NT projects over the topmost
  // completed entry, REDUCE closes the innermost open node taking the
  // completed entries above it as its remaining children.
  bool top_completed = !s.stack.empty() && !entry_open(s.stack.back());
  // A SHIFT with no open node below would strand every entry under the leaf.
  k.shift = s.stack.empty() || s.open_count >= 1;
  k.nt = structural_ok && open_ok && top_completed;
  k.reduce = structural_ok && s.open_count >= 1;
  return k;
}

bool is_legal(const ParserState& s, const Action& a, StrategyId strategy,
              const DerivationLimits& limits) {
  LegalKinds k = legal_action_kinds(s, strategy, limits);
  switch (a.kind) {
    case ActionKind::NT: return k.nt;
    case ActionKind::Shift: return k.shift;
    case ActionKind::Reduce: return k.reduce;
  }
  return false;
}

ParserState apply(const ParserState& s, const Action& a, StrategyId strategy,
                  const DerivationLimits& limits) {
  if (!is_legal(s, a, strategy, limits))
    throw std::invalid_argument("illegal action " + to_string(a));
  ParserState n = s;

  if (strategy == StrategyId::TopDown) {
    switch (a.kind) {
      case ActionKind::NT:
        n.stack.emplace_back(OpenNode{a.arg, {}});
        ++n.open_count;
        ++n.structural_since_word;
        break;
      case ActionKind::Shift:
        std::get<OpenNode>(n.stack.back()).children.push_back(Tree::leaf(a.arg));
        ++n.words_generated;
        n.structural_since_word = 0;
        break;
      case ActionKind::Reduce: {
        OpenNode top = std::move(std::get<OpenNode>(n.stack.back()));
        n.stack.pop_back();
        Tree closed = Tree::node(std::move(top.label), std::move(top.children));
        if (n.stack.empty())
          n.stack.emplace_back(std::move(closed));
        else
          std::get<OpenNode>(n.stack.back()).children.push_back(std::move(closed));
        --n.open_count;
        ++n.structural_since_word;
        break;
      }
    }
    return n;
  }

  switch (a.kind) {
    case ActionKind::Shift:
      n.stack.emplace_back(Tree::leaf(a.arg));
      ++n.words_generated;
      n.structural_since_word = 0;
      break;
    case ActionKind::NT: {
      Tree first = std::move(std::get<Tree>(n.stack.back()));
      n.stack.back() = OpenNode{a.arg, {std::move(first)}};
      ++n.open_count;
      ++n.structural_since_word;
      break;
    }
    case ActionKind::Reduce: {
      int i = innermost_open(n);
      OpenNode open = std::move(std::get<OpenNode>(n.stack[i]));
      for (size_t j = i + 1; j < n.stack.size(); ++j)
        open.children.push_back(std::move(std::get<Tree>(n.stack[j])));
      n.stack.resize(i);
      n.stack.emplace_back(Tree::node(std::move(open.label), std::move(open.children)));
      --n.open_count;
      ++n.structural_since_word;
      break;
    }
  }
  return n;
}

namespace {

void topdown_oracle(const Tree& t, std::vector<Action>& out) {
  if (t.is_leaf()) {
    out.push_back(Action::shift(t.word));
    return;
  }
  out.push_back(Action::nt(t.label));
  for (const Tree& c : t.children) topdown_oracle(c, out);
  out.push_back(Action::reduce());
}

void leftcorner_oracle(const Tree& t, std::vector<Action>& out) {
  if (t.is_leaf()) {
    out.push_back(Action::shift(t.word));
    return;
  }
  leftcorner_oracle(t.children.front(), out);
  out.push_back(Action::nt(t.label));
  for (size_t i = 1; i < t.children.size(); ++i) leftcorner_oracle(t.children[i], out);
  out.push_back(Action::reduce());
}

}  // namespace

std::vector<Action> oracle(const Tree& t, StrategyId strategy) {
  if (t.is_leaf()) throw std::invalid_argument("oracle: root must be internal");
  std::vector<Action> out;
  if (strategy == StrategyId::TopDown)
    topdown_oracle(t, out);
  else
    leftcorner_oracle(t, out);
  return out;
}

ParserState replay(const std::vector<Action>& actions, StrategyId strategy,
                   const DerivationLimits& limits) {
  ParserState s;
  for (const Action& a : actions) s = apply(s, a, strategy, limits);
  return s;
}

std::string render_actions(const std::vector<Action>& actions) {
  std::string out;
  for (const Action& a : actions) {
    out += to_string(a);
    out += '\n';
  }
  return out;
}

std::vector<Action> parse_actions(const std::string& text) {
  std::vector<Action> out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(parse_action(line));
    pos = nl + 1;
  }
  return out;
}

}  // namespace gpbeam
