#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "rig/error.hpp"
#include "rig/point_cloud.hpp"

static_assert(std::endian::native == std::endian::little, "PLY codec assumes a little-endian host");

namespace rig {

void PointCloud::check() const {
  if (!colors.empty() && colors.size() != points.size()) {
    throw Error(Errc::InvalidArgument, "colors must be present for all points or none");
  }
  if (!camera_ids.empty() && camera_ids.size() != points.size()) {
    throw Error(Errc::InvalidArgument, "camera ids must be present for all points or none");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(Errc::InvalidArgument, "point cloud contains non-finite coordinates");
  }
}

std::vector<std::uint8_t> encode_ply(const PointCloud& cloud) {
  cloud.check();
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n";
  if (!cloud.frame.empty()) header << "comment frame " << cloud.frame << "\n";
  header << "element vertex " << cloud.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_colors()) header << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  header << "end_header\n";
  const std::string h = header.str();
  const std::size_t stride = 12 + (cloud.has_colors() ? 3 : 0);
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(h.size() + stride * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const auto f = static_cast<float>(cloud.points[i][k]);
      std::uint8_t b[4];
      std::memcpy(b, &f, 4);
      out.insert(out.end(), b, b + 4);
    }
    if (cloud.has_colors()) out.insert(out.end(), cloud.colors[i].begin(), cloud.colors[i].end());
  }
  return out;
}

namespace {

std::size_t type_size(const std::string& t) {
  static const std::map<std::string, std::size_t> kSizes{
      {"char", 1},   {"int8", 1},   {"uchar", 1},   {"uint8", 1},  {"short", 2},   {"int16", 2},
      {"ushort", 2}, {"uint16", 2}, {"int", 4},     {"int32", 4},  {"uint", 4},    {"uint32", 4},
      {"float", 4},  {"float32", 4}, {"double", 8}, {"float64", 8}};
  const auto it = kSizes.find(t);
  if (it == kSizes.end()) throw Error(Errc::ParseError, "ply: unsupported property type '" + t + "'");
  return it->second;
}

double read_scalar(const std::uint8_t* p, const std::string& t) {
  if (t == "float" || t == "float32") {
    float f;
    std::memcpy(&f, p, 4);
    return f;
  }
  if (t == "double" || t == "float64") {
    double d;
    std::memcpy(&d, p, 8);
    return d;
  }
  if (t == "uchar" || t == "uint8") return *p;
  throw Error(Errc::ParseError, "ply: unsupported type for this property: " + t);
}

}  // namespace

PointCloud decode_ply(const std::vector<std::uint8_t>& bytes) {
  static constexpr std::string_view kEnd = "end_header\n";
  const std::string_view all(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const auto end = all.find(kEnd);
  if (all.substr(0, 4) != "ply\n" || end == std::string_view::npos) throw Error(Errc::ParseError, "ply: bad header");
  std::istringstream header{std::string(all.substr(0, end))};

  struct Property {
    std::string name;
    std::string type;
    std::size_t offset;
  };
  PointCloud cloud;
  std::vector<Property> props;
  std::size_t stride = 0;
  std::size_t count = 0;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::string line;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "binary_little_endian") throw Error(Errc::ParseError, "ply: only binary_little_endian is supported");
    } else if (kw == "comment") {
      std::string what;
      ls >> what;
      if (what == "frame") ls >> cloud.frame;
    } else if (kw == "element") {
      std::string name;
      ls >> name >> count;
      if (seen_vertex) throw Error(Errc::ParseError, "ply: only a single vertex element is supported");
      if (name != "vertex") throw Error(Errc::ParseError, "ply: unsupported element '" + name + "'");
      in_vertex = seen_vertex = true;
    } else if (kw == "property") {
      if (!in_vertex) throw Error(Errc::ParseError, "ply: property outside vertex element");
      std::string type;
      std::string name;
      ls >> type >> name;
      if (type == "list") throw Error(Errc::ParseError, "ply: list properties are not supported");
      props.push_back({name, type, stride});
      stride += type_size(type);
    }
  }
  auto find = [&](const std::string& n) -> const Property* {
    for (const auto& p : props) {
      if (p.name == n) return &p;
    }
    return nullptr;
  };
  const Property* px = find("x");
  const Property* py = find("y");
  const Property* pz = find("z");
  if (!px || !py || !pz) throw Error(Errc::ParseError, "ply: missing x/y/z properties");
  const Property* pr = find("red");
  const Property* pg = find("green");
  const Property* pb = find("blue");
  const bool color = pr && pg && pb;

  const std::size_t body = end + kEnd.size();
  if (bytes.size() - body < stride * count) throw Error(Errc::ParseError, "ply: truncated vertex data");
  cloud.points.reserve(count);
  if (color) cloud.colors.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t* rec = bytes.data() + body + i * stride;
    cloud.points.emplace_back(read_scalar(rec + px->offset, px->type), read_scalar(rec + py->offset, py->type),
                              read_scalar(rec + pz->offset, pz->type));
    if (color) {
      cloud.colors.push_back({static_cast<std::uint8_t>(read_scalar(rec + pr->offset, pr->type)),
                              static_cast<std::uint8_t>(read_scalar(rec + pg->offset, pg->type)),
                              static_cast<std::uint8_t>(read_scalar(rec + pb->offset, pb->type))});
    }
  }
  return cloud;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  const auto bytes = encode_ply(cloud);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_ply(bytes);
}

}  // namespace rig
