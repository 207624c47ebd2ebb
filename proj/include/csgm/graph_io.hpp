#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "csgm/graph.hpp"

namespace csgm {

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      fields.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return fields;
}

inline std::uint64_t parse_u64(std::string_view text, std::size_t line_no, const char* what) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                     std::string(text) + "'");
  return value;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Iterates LF-terminated lines, tolerating a missing final newline and
// stripping a trailing CR.
template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t start = 0, line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    fn(++line_no, line);
    start = end + 1;
  }
}

}  // namespace detail

inline constexpr std::string_view kGraphCsvHeader = "src,dst,amount,cross";

// Loads the graph CSV (header `src,dst,amount,cross`). Duplicate (src,dst)
// rows are kept as multi-edges; run aggregate_edges before mining.
inline TransactionGraph load_graph(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::vector<Edge> edges;
  bool saw_header = false;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line_no == 1) {
      if (line != kGraphCsvHeader)
        throw ParseError("line 1: expected header '" + std::string(kGraphCsvHeader) + "'");
      saw_header = true;
      return;
    }
    if (line.empty()) return;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 4)
      throw ParseError("line " + std::to_string(line_no) + ": expected 4 fields, got " +
                       std::to_string(fields.size()));
    Edge e;
    e.src = detail::parse_u64(fields[0], line_no, "src");
    e.dst = detail::parse_u64(fields[1], line_no, "dst");
    try {
      e.amount = parse_amount(std::string(fields[2]));
    } catch (const ValidationError& err) {
      throw ValidationError("line " + std::to_string(line_no) + ": " + err.what());
    } catch (const ParseError& err) {
      throw ParseError("line " + std::to_string(line_no) + ": " + err.what());
    }
    if (fields[3] == "0")
      e.cross = false;
    else if (fields[3] == "1")
      e.cross = true;
    else
      throw ParseError("line " + std::to_string(line_no) + ": bad cross flag '" +
                       std::string(fields[3]) + "'");
    edges.push_back(e);
  });
  if (!saw_header) throw ParseError("line 1: expected header '" + std::string(kGraphCsvHeader) + "'");
  return TransactionGraph::from_edges(std::move(edges));
}

// Canonical text form: header, then edges sorted by (src, dst, amount, cross),
// amounts in minimal decimal form, LF endings.
inline std::string graph_to_csv(const TransactionGraph& g) {
  std::vector<Edge> sorted(g.edges());
  std::sort(sorted.begin(), sorted.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.src, a.dst, a.amount, a.cross) < std::tie(b.src, b.dst, b.amount, b.cross);
  });
  std::string out(kGraphCsvHeader);
  out += '\n';
  for (const Edge& e : sorted) {
    out += std::to_string(e.src);
    out += ',';
    out += std::to_string(e.dst);
    out += ',';
    out += format_amount(e.amount);
    out += ',';
    out += e.cross ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline void write_graph(const TransactionGraph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << graph_to_csv(g);
}

// Assignment CSV: header `account,party`, party in {A, B}.
inline std::unordered_map<AccountId, PartyId> load_assignment(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::unordered_map<AccountId, PartyId> assignment;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line_no == 1) {
      if (line != "account,party") throw ParseError("line 1: expected header 'account,party'");
      return;
    }
    if (line.empty()) return;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected 2 fields");
    const AccountId id = detail::parse_u64(fields[0], line_no, "account");
    if (fields[1] == "A")
      assignment[id] = PartyId::A;
    else if (fields[1] == "B")
      assignment[id] = PartyId::B;
    else
      throw ParseError("line " + std::to_string(line_no) + ": bad party '" +
                       std::string(fields[1]) + "'");
  });
  return assignment;
}

inline void write_assignment(const std::unordered_map<AccountId, PartyId>& assignment,
                             const std::string& path) {
  std::vector<AccountId> ids;
  ids.reserve(assignment.size());
  for (const auto& [id, _] : assignment) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "account,party\n";
  for (AccountId id : ids)
    out << id << ',' << party_letter(assignment.at(id)) << '\n';
}

struct LabelEntry {
  Label label = Label::licit;
  std::int64_t group_id = -1;  // -1 = not in any planted group
};

// Labels CSV: header `account,label,group_id`; label in {licit, illicit};
// group_id empty for accounts outside any group.
inline std::unordered_map<AccountId, LabelEntry> load_labels(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::unordered_map<AccountId, LabelEntry> labels;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (line_no == 1) {
      if (line != "account,label,group_id")
        throw ParseError("line 1: expected header 'account,label,group_id'");
      return;
    }
    if (line.empty()) return;
    const auto fields = detail::split_csv(line);
    if (fields.size() != 3)
      throw ParseError("line " + std::to_string(line_no) + ": expected 3 fields");
    const AccountId id = detail::parse_u64(fields[0], line_no, "account");
    LabelEntry entry;
    if (fields[1] == "licit")
      entry.label = Label::licit;
    else if (fields[1] == "illicit")
      entry.label = Label::illicit;
    else
      throw ParseError("line " + std::to_string(line_no) + ": bad label '" +
                       std::string(fields[1]) + "'");
    if (!fields[2].empty())
      entry.group_id = static_cast<std::int64_t>(detail::parse_u64(fields[2], line_no, "group_id"));
    labels[id] = entry;
  });
  return labels;
}

inline void write_labels(const std::unordered_map<AccountId, LabelEntry>& labels,
                         const std::string& path) {
  std::vector<AccountId> ids;
  ids.reserve(labels.size());
  for (const auto& [id, _] : labels) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << "account,label,group_id\n";
  for (AccountId id : ids) {
    const LabelEntry& entry = labels.at(id);
    out << id << ',' << (entry.label == Label::illicit ? "illicit" : "licit") << ',';
    if (entry.group_id >= 0) out << entry.group_id;
    out << '\n';
  }
}

}  // namespace csgm
