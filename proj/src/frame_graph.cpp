#include "rig/frame_graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "rig/error.hpp"

namespace rig {

const char* to_string(EdgeSource s) {
  switch (s) {
    case EdgeSource::Estimated: return "estimated";
    case EdgeSource::Manufacturer: return "manufacturer";
    case EdgeSource::Cad: return "cad";
  }
  return "?";
}

EdgeSource parse_edge_source(const std::string& s) {
  if (s == "estimated") return EdgeSource::Estimated;
  if (s == "manufacturer") return EdgeSource::Manufacturer;
  if (s == "cad") return EdgeSource::Cad;
  throw Error(Errc::ParseError, "unknown edge source '" + s + "'");
}

bool is_valid_frame_id(const std::string& name) {
  return !name.empty() && std::none_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isspace(c) != 0 || std::iscntrl(c) != 0;
  });
}

FrameGraph::FrameGraph(std::string root) { set_root(std::move(root)); }

void FrameGraph::set_root(std::string root) {
  if (!is_valid_frame_id(root)) throw Error(Errc::InvalidArgument, "invalid root frame '" + root + "'");
  frames_.insert(root);
  adjacency_[root];
  root_ = std::move(root);
}

FrameGraph::Pair FrameGraph::key(const std::string& a, const std::string& b) {
  return a < b ? Pair{a, b} : Pair{b, a};
}

void FrameGraph::add_edge(CalibEdge edge) {
  for (const auto* f : {&edge.parent, &edge.child}) {
    if (!is_valid_frame_id(*f)) throw Error(Errc::InvalidArgument, "invalid frame id '" + *f + "'");
  }
  if (edge.parent == edge.child) throw Error(Errc::SelfLoop, "edge " + edge.parent + " -> " + edge.child);
  if (edge.label.find_first_of("\r\n") != std::string::npos) {
    throw Error(Errc::InvalidArgument, "edge label must be a single line");
  }
  const auto lb = edge.label.find_first_not_of(" \t");
  edge.label = lb == std::string::npos ? std::string() : edge.label.substr(lb, edge.label.find_last_not_of(" \t") - lb + 1);
  const Pair k = key(edge.parent, edge.child);
  if (edges_.count(k) != 0) {
    const auto& old = edges_.at(k);
    throw Error(Errc::DuplicateEdge, "frames " + edge.parent + " and " + edge.child +
                                         " are already connected by " + old.parent + " -> " + old.child);
  }
  frames_.insert(edge.parent);
  frames_.insert(edge.child);
  auto insert_sorted = [](std::vector<std::string>& v, const std::string& s) {
    v.insert(std::upper_bound(v.begin(), v.end(), s), s);
  };
  insert_sorted(adjacency_[edge.parent], edge.child);
  insert_sorted(adjacency_[edge.child], edge.parent);
  edges_.emplace(k, std::move(edge));
}

std::vector<CalibEdge> FrameGraph::edges() const {
  std::vector<CalibEdge> out;
  out.reserve(edges_.size());
  for (const auto& [k, e] : edges_) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const CalibEdge& a, const CalibEdge& b) {
    return std::tie(a.parent, a.child) < std::tie(b.parent, b.child);
  });
  return out;
}

ValidationReport FrameGraph::validate() const {
  ValidationReport report;
  if (root_.empty()) {
    report.findings.push_back({Severity::Error, "missing_root", "", std::nullopt, "graph has no root frame"});
    return report;
  }

  // Cycle check with union-find over canonical edge order.
  std::map<std::string, std::string> parent_of;
  for (const auto& f : frames_) parent_of[f] = f;
  auto find = [&](std::string x) {
    while (parent_of[x] != x) {
      parent_of[x] = parent_of[parent_of[x]];
      x = parent_of[x];
    }
    return x;
  };
  for (const auto& e : edges()) {
    const auto ra = find(e.parent);
    const auto rb = find(e.child);
    if (ra == rb) {
      report.findings.push_back({Severity::Error, "cycle", e.parent + "->" + e.child, std::nullopt,
                                 "edge " + e.parent + " -> " + e.child + " closes a cycle"});
    } else {
      parent_of[ra] = rb;
    }
  }

  std::set<std::string> seen{root_};
  std::deque<std::string> queue{root_};
  while (!queue.empty()) {
    const auto f = queue.front();
    queue.pop_front();
    for (const auto& n : adjacency_.at(f)) {
      if (seen.insert(n).second) queue.push_back(n);
    }
  }
  for (const auto& f : frames_) {
    if (seen.count(f) == 0) {
      report.findings.push_back(
          {Severity::Error, "unreachable", f, std::nullopt, "frame " + f + " is not reachable from root " + root_});
    }
  }
  return report;
}

Transform FrameGraph::lookup(const std::string& from, const std::string& to) const {
  for (const auto* f : {&from, &to}) {
    if (!has_frame(*f)) throw Error(Errc::UnknownFrame, "frame '" + *f + "' is not in the graph");
  }
  if (from == to) return Transform::identity();

  std::map<std::string, std::string> came_from{{from, ""}};
  std::deque<std::string> queue{from};
  while (!queue.empty() && came_from.count(to) == 0) {
    const auto f = queue.front();
    queue.pop_front();
    for (const auto& n : adjacency_.at(f)) {
      if (came_from.emplace(n, f).second) queue.push_back(n);
    }
  }
  if (came_from.count(to) == 0) throw Error(Errc::Disconnected, "no path from " + from + " to " + to);

  std::vector<std::string> path{to};
  while (path.back() != from) path.push_back(came_from.at(path.back()));
  std::reverse(path.begin(), path.end());

  Transform acc = Transform::identity();
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& e = edges_.at(key(path[i], path[i + 1]));
    acc = compose(acc, e.parent == path[i] ? e.transform : invert(e.transform));
  }
  return acc;
}

std::vector<ExtrinsicDiff> diff_graphs(const FrameGraph& a, const FrameGraph& b,
                                       const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<ExtrinsicDiff> out;
  out.reserve(pairs.size());
  for (const auto& [from, to] : pairs) {
    const Transform ta = a.lookup(from, to);
    const Transform tb = b.lookup(from, to);
    out.push_back({from, to, translation_distance(ta.translation, tb.translation),
                   rotation_angle_between(ta.rotation, tb.rotation)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// text format

std::string format_calibration(const FrameGraph& g) {
  std::string out;
  out += "# rig calibration: edge transforms map child coordinates into the parent frame\n";
  out += "# edge <parent> <child> <tx> <ty> <tz> <qw> <qx> <qy> <qz> <source> [label]\n";
  out += fmt::format("format_version {}\n", kCalibFormatVersion);
  out += fmt::format("root {}\n", g.root());
  for (const auto& e : g.edges()) {
    const auto& t = e.transform.translation;
    const auto& q = e.transform.rotation;
    out += fmt::format("edge {} {} {} {} {} {} {} {} {} {}", e.parent, e.child, format_fixed(t.x(), 9),
                       format_fixed(t.y(), 9), format_fixed(t.z(), 9), format_fixed(q.w(), 12),
                       format_fixed(q.x(), 12), format_fixed(q.y(), 12), format_fixed(q.z(), 12),
                       to_string(e.source));
    if (!e.label.empty()) out += " " + e.label;
    out += '\n';
  }
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& token, const std::string& where) {
  double v = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw Error(Errc::ParseError, where + ": expected a number, got '" + token + "'");
  }
  return v;
}

}  // namespace

FrameGraph parse_calibration(const std::string& text, const std::string& origin) {
  FrameGraph g;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<CalibEdge> pending;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = fmt::format("{}:{}", origin, line_no);
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream ls(t);
    std::string keyword;
    ls >> keyword;
    if (keyword == "format_version") {
      int v = 0;
      if (!(ls >> v) || v != kCalibFormatVersion) {
        throw Error(Errc::ParseError, where + ": unsupported format_version");
      }
    } else if (keyword == "root") {
      std::string r;
      ls >> r;
      if (!is_valid_frame_id(r)) throw Error(Errc::ParseError, where + ": bad root frame");
      g.set_root(r);
    } else if (keyword == "edge") {
      std::vector<std::string> tok(10);
      for (auto& s : tok) {
        if (!(ls >> s)) throw Error(Errc::ParseError, where + ": edge record needs 10 fields");
      }
      std::string rest;
      std::getline(ls, rest);
      CalibEdge e;
      e.parent = tok[0];
      e.child = tok[1];
      const std::string name = "edge " + e.parent + " -> " + e.child;
      static constexpr const char* kFields[] = {"tx", "ty", "tz", "qw", "qx", "qy", "qz"};
      double v[7];
      for (int i = 0; i < 7; ++i) v[i] = parse_double(tok[static_cast<std::size_t>(i) + 2], where + " " + name + " field " + kFields[i]);
      const double norm = std::sqrt(v[3] * v[3] + v[4] * v[4] + v[5] * v[5] + v[6] * v[6]);
      if (std::abs(norm - 1.0) > 1e-6) {
        throw Error(Errc::ParseError, fmt::format("{}: {} has quaternion norm {:.6f} (expected 1)", where, name, norm));
      }
      e.transform.translation = {v[0], v[1], v[2]};
      e.transform.rotation = UnitQuaternion::from_serialized(v[3], v[4], v[5], v[6]);
      try {
        e.source = parse_edge_source(tok[9]);
      } catch (const Error&) {
        throw Error(Errc::ParseError, where + " " + name + ": unknown source '" + tok[9] + "'");
      }
      e.label = trim(rest);
      pending.push_back(std::move(e));
    } else {
      throw Error(Errc::ParseError, where + ": unknown record '" + keyword + "'");
    }
  }
  for (auto& e : pending) g.add_edge(std::move(e));
  return g;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void export_calibration(const FrameGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << format_calibration(g);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

FrameGraph import_calibration(const std::filesystem::path& path) {
  return parse_calibration(read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// JSON

FrameGraph parse_calibration_json(const std::string& text, const std::string& origin) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, origin + ": " + e.what());
  }
  static const std::set<std::string> kTop{"format_version", "root", "edges"};
  static const std::set<std::string> kEdge{"parent", "child", "translation", "rotation", "euler_deg",
                                           "euler_convention", "source", "label"};
  if (!doc.is_object()) throw Error(Errc::ParseError, origin + ": top level must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (kTop.count(k) == 0) throw Error(Errc::ParseError, origin + ": unknown key '" + k + "'");
  }
  if (doc.contains("format_version") && doc["format_version"] != kCalibFormatVersion) {
    throw Error(Errc::ParseError, origin + ": unsupported format_version");
  }
  FrameGraph g;
  try {
    if (doc.contains("root")) g.set_root(doc["root"].get<std::string>());
    if (!doc.contains("edges")) return g;
    std::size_t idx = 0;
    for (const auto& je : doc["edges"]) {
      const std::string where = fmt::format("{}: edges[{}]", origin, idx++);
      for (const auto& [k, v] : je.items()) {
        if (kEdge.count(k) == 0) throw Error(Errc::ParseError, where + ": unknown key '" + k + "'");
      }
      CalibEdge e;
      e.parent = je.at("parent").get<std::string>();
      e.child = je.at("child").get<std::string>();
      const auto tr = je.at("translation").get<std::vector<double>>();
      if (tr.size() != 3) throw Error(Errc::ParseError, where + ": translation needs 3 values");
      e.transform.translation = {tr[0], tr[1], tr[2]};
      if (je.contains("rotation") == je.contains("euler_deg")) {
        throw Error(Errc::ParseError, where + ": exactly one of rotation / euler_deg is required");
      }
      if (je.contains("rotation")) {
        const auto& r = je["rotation"];
        const double w = r.at("w"), x = r.at("x"), y = r.at("y"), z = r.at("z");
        const double norm = std::sqrt(w * w + x * x + y * y + z * z);
        if (std::abs(norm - 1.0) > 1e-6) {
          throw Error(Errc::ParseError, fmt::format("{}: edge {} -> {} has quaternion norm {:.6f}", where,
                                                    e.parent, e.child, norm));
        }
        e.transform.rotation = UnitQuaternion::from_serialized(w, x, y, z);
      } else {
        const auto eu = je["euler_deg"].get<std::vector<double>>();
        if (eu.size() != 3) throw Error(Errc::ParseError, where + ": euler_deg needs 3 values");
        const auto conv = parse_euler_convention(je.value("euler_convention", std::string("intrinsic_xyz")));
        e.transform.rotation = quat_from_euler({eu[0], eu[1], eu[2]}, conv);
      }
      e.source = parse_edge_source(je.value("source", std::string("estimated")));
      e.label = je.value("label", std::string());
      g.add_edge(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ParseError, origin + ": " + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == Errc::InvalidArgument) throw Error(Errc::ParseError, origin + ": " + ex.what());
    throw;
  }
  return g;
}

FrameGraph import_calibration_json(const std::filesystem::path& path) {
  return parse_calibration_json(read_file(path), path.string());
}

FrameGraph load_calibration_any(const std::filesystem::path& path) {
  return path.extension() == ".json" ? import_calibration_json(path) : import_calibration(path);
}

}  // namespace rig
