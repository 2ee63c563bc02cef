#include <putput/circuit_io.hpp>
#include <putput/errors.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace putput {
namespace {

constexpr std::string_view kPcHeader = "putput-pc v1";
constexpr std::string_view kLcHeader = "putput-lc v1";

std::string format_weight(double w) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), w);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view tok, std::size_t line, const char* what) {
  T value{};
  const auto* end = tok.data() + tok.size();
  const auto res = std::from_chars(tok.data(), end, value);
  if (res.ec != std::errc{} || res.ptr != end)
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok) + "'",
                     line);
  return value;
}

// Reads non-comment lines, checking the header. Calls on_line(tokens, lineno).
template <typename OnLine>
void scan(std::istream& is, std::string_view header, OnLine&& on_line) {
  std::string raw;
  std::size_t lineno = 0;
  bool seen_header = false;
  while (std::getline(is, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line = raw;
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    if (!seen_header) {
      if (line.substr(first) != header)
        throw ParseError("expected header '" + std::string(header) + "'", lineno);
      seen_header = true;
      continue;
    }
    on_line(split_ws(line), lineno);
  }
  if (!seen_header) throw ParseError("missing header '" + std::string(header) + "'");
}

struct Trailer {
  bool done = false;
  bool empty = false;
  NodeId root = 0;
};

// Handles the `root <id>` / `empty` lines. Returns true if consumed.
bool parse_trailer(const std::vector<std::string_view>& tok, std::size_t lineno,
                   std::size_t count, Trailer& trailer) {
  if (tok[0] != "root" && tok[0] != "empty") return false;
  if (trailer.done) throw ParseError("duplicate root line", lineno);
  trailer.done = true;
  if (tok[0] == "empty") {
    if (tok.size() != 1 || count != 0)
      throw ParseError("'empty' circuit must have no nodes", lineno);
    trailer.empty = true;
    return true;
  }
  if (tok.size() != 2) throw ParseError("expected 'root <id>'", lineno);
  trailer.root = parse_number<NodeId>(tok[1], lineno, "root id");
  if (trailer.root >= count)
    throw ParseError("root " + std::to_string(trailer.root) + " is not declared",
                     lineno);
  return true;
}

NodeId parse_id(std::string_view tok, std::size_t lineno, std::size_t expected) {
  const auto id = parse_number<NodeId>(tok, lineno, "node id");
  if (id != expected)
    throw ParseError("expected node id " + std::to_string(expected) + ", found " +
                         std::to_string(id),
                     lineno);
  return id;
}

NodeId parse_child(std::string_view tok, std::size_t lineno, NodeId parent) {
  const auto c = parse_number<NodeId>(tok, lineno, "child id");
  if (c >= parent)
    throw ParseError("child " + std::to_string(c) + " is not declared before node " +
                         std::to_string(parent),
                     lineno);
  return c;
}

Literal parse_literal(const std::vector<std::string_view>& tok, std::size_t lineno) {
  if (tok.size() != 4) throw ParseError("expected '<id> L <var> <0|1>'", lineno);
  const auto var = parse_number<VarId>(tok[2], lineno, "variable id");
  if (tok[3] != "0" && tok[3] != "1")
    throw ParseError("polarity must be 0 or 1", lineno);
  return Literal{var, tok[3] == "1"};
}

}  // namespace

void write_pc(std::ostream& os, const ProbCircuit& pc) {
  os << kPcHeader << '\n';
  if (pc.empty()) {
    os << "empty\n";
    return;
  }
  for (NodeId id = 0; id < pc.size(); ++id) {
    const auto& n = pc.node(id);
    os << id;
    switch (n.kind) {
      case PcKind::Input:
        os << " L " << n.literal.var << ' ' << (n.literal.positive ? 1 : 0);
        break;
      case PcKind::Product:
        os << " P";
        for (NodeId c : n.children) os << ' ' << c;
        break;
      case PcKind::Sum:
        os << " S";
        for (std::size_t i = 0; i < n.children.size(); ++i)
          os << ' ' << n.children[i] << ':' << format_weight(n.weights[i]);
        break;
    }
    os << '\n';
  }
  os << "root " << pc.root() << '\n';
}

std::string write_pc(const ProbCircuit& pc) {
  std::ostringstream os;
  write_pc(os, pc);
  return os.str();
}

void write_pc_file(const std::filesystem::path& path, const ProbCircuit& pc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_pc(os, pc);
}

ProbCircuit read_pc(std::istream& is, Smoothness smoothness) {
  std::vector<PcNode> nodes;
  Trailer trailer;
  scan(is, kPcHeader, [&](const std::vector<std::string_view>& tok, std::size_t ln) {
    if (parse_trailer(tok, ln, nodes.size(), trailer)) return;
    if (trailer.done) throw ParseError("node declared after root line", ln);
    if (tok.size() < 2) throw ParseError("expected '<id> <kind> ...'", ln);
    const NodeId id = parse_id(tok[0], ln, nodes.size());
    PcNode node;
    if (tok[1] == "L") {
      node.kind = PcKind::Input;
      node.literal = parse_literal(tok, ln);
    } else if (tok[1] == "P" || tok[1] == "S") {
      node.kind = tok[1] == "P" ? PcKind::Product : PcKind::Sum;
      if (tok.size() < 3) throw ParseError("inner node needs a child", ln);
      for (std::size_t i = 2; i < tok.size(); ++i) {
        if (node.kind == PcKind::Product) {
          node.children.push_back(parse_child(tok[i], ln, id));
          continue;
        }
        const auto colon = tok[i].find(':');
        if (colon == std::string_view::npos)
          throw ParseError("sum edge must be '<child>:<weight>'", ln);
        node.children.push_back(parse_child(tok[i].substr(0, colon), ln, id));
        const double w = parse_number<double>(tok[i].substr(colon + 1), ln, "weight");
        if (!(w >= 0.0) || !std::isfinite(w))
          throw ParseError("weight must be finite and nonnegative", ln);
        node.weights.push_back(w);
      }
    } else {
      throw ParseError("unknown node kind '" + std::string(tok[1]) + "'", ln);
    }
    nodes.push_back(std::move(node));
  });
  if (!trailer.done) throw ParseError("missing 'root <id>' line");
  if (trailer.empty) return {};
  ProbCircuit pc(std::move(nodes), trailer.root);
  require_valid(pc, smoothness);
  return pc;
}

ProbCircuit read_pc(const std::string& text, Smoothness smoothness) {
  std::istringstream is(text);
  return read_pc(is, smoothness);
}

ProbCircuit import_circuit(const std::filesystem::path& path, Smoothness smoothness) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  try {
    return read_pc(is, smoothness);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_lc(std::ostream& os, const LogicCircuit& lc) {
  os << kLcHeader << '\n';
  if (lc.empty()) {
    os << "empty\n";
    return;
  }
  for (NodeId id = 0; id < lc.size(); ++id) {
    const auto& u = lc.unit(id);
    os << id;
    switch (u.kind) {
      case LcKind::Input:
        os << " L " << u.literal.var << ' ' << (u.literal.positive ? 1 : 0);
        break;
      case LcKind::And: os << " A"; break;
      case LcKind::Or: os << " O"; break;
    }
    for (NodeId c : u.children) os << ' ' << c;
    os << '\n';
  }
  os << "root " << lc.root() << '\n';
}

std::string write_lc(const LogicCircuit& lc) {
  std::ostringstream os;
  write_lc(os, lc);
  return os.str();
}

void write_lc_file(const std::filesystem::path& path, const LogicCircuit& lc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write " + path.string());
  write_lc(os, lc);
}

LogicCircuit read_lc(std::istream& is) {
  std::vector<LcUnit> units;
  Trailer trailer;
  scan(is, kLcHeader, [&](const std::vector<std::string_view>& tok, std::size_t ln) {
    if (parse_trailer(tok, ln, units.size(), trailer)) return;
    if (trailer.done) throw ParseError("unit declared after root line", ln);
    if (tok.size() < 2) throw ParseError("expected '<id> <kind> ...'", ln);
    const NodeId id = parse_id(tok[0], ln, units.size());
    LcUnit unit;
    if (tok[1] == "L") {
      unit.kind = LcKind::Input;
      unit.literal = parse_literal(tok, ln);
    } else if (tok[1] == "A" || tok[1] == "O") {
      unit.kind = tok[1] == "A" ? LcKind::And : LcKind::Or;
      if (tok.size() < 3) throw ParseError("inner unit needs a child", ln);
      for (std::size_t i = 2; i < tok.size(); ++i)
        unit.children.push_back(parse_child(tok[i], ln, id));
    } else {
      throw ParseError("unknown unit kind '" + std::string(tok[1]) + "'", ln);
    }
    units.push_back(std::move(unit));
  });
  if (!trailer.done) throw ParseError("missing 'root <id>' line");
  if (trailer.empty) return {};
  return LogicCircuit(std::move(units), trailer.root);
}

LogicCircuit read_lc(const std::string& text) {
  std::istringstream is(text);
  return read_lc(is);
}

LogicCircuit read_lc_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open " + path.string());
  return read_lc(is);
}

}  // namespace putput
