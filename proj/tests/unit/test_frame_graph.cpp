#include <doctest.h>

#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "rig/error.hpp"
#include "rig/frame_graph.hpp"
#include "test_util.hpp"

using namespace rig;
using testutil::max_abs_diff;

namespace {

CalibEdge edge(const std::string& p, const std::string& c, const Transform& t = Transform::identity()) {
  CalibEdge e;
  e.parent = p;
  e.child = c;
  e.transform = t;
  return e;
}

Transform translation(double x, double y, double z) {
  Transform t;
  t.translation = {x, y, z};
  return t;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return Errc::IoError;
}

// Pose of every frame in the root frame, by walking parent links and
// multiplying 4x4 matrices; independent of FrameGraph::lookup.
std::map<std::string, Eigen::Matrix4d> root_poses(const std::string& root, const std::vector<CalibEdge>& edges) {
  std::map<std::string, Eigen::Matrix4d> pose{{root, Eigen::Matrix4d::Identity()}};
  bool grew = true;
  while (grew) {
    grew = false;
    for (const auto& e : edges) {
      const Eigen::Matrix4d m = testutil::homogeneous(e.transform.rotation.matrix(), e.transform.translation);
      if (pose.count(e.parent) && !pose.count(e.child)) {
        pose[e.child] = pose[e.parent] * m;
        grew = true;
      } else if (pose.count(e.child) && !pose.count(e.parent)) {
        pose[e.parent] = pose[e.child] * m.inverse();
        grew = true;
      }
    }
  }
  return pose;
}

FrameGraph smapper_from_parts() {
  FrameGraph g("base_link");
  for (const char* part : {"smapper/manufacturer.json", "smapper/cameras.json", "smapper/realsense.calib"}) {
    for (const auto& e : load_calibration_any(testutil::fixture(part)).edges()) g.add_edge(e);
  }
  return g;
}

}  // namespace

TEST_SUITE("frame_graph") {

TEST_CASE("add_edge creates frames and rejects a second edge on the same pair") {
  FrameGraph g("base_link");
  g.add_edge(edge("base_link", "os_sensor", translation(0, 0, 0.1)));
  CHECK(g.frames().size() == 2);
  CHECK(g.edge_count() == 1);
  CHECK(code_of([&] { g.add_edge(edge("os_sensor", "base_link")); }) == Errc::DuplicateEdge);
  CHECK(code_of([&] { g.add_edge(edge("base_link", "os_sensor")); }) == Errc::DuplicateEdge);
  CHECK(code_of([&] { g.add_edge(edge("a", "a")); }) == Errc::SelfLoop);
  CHECK(code_of([&] { g.add_edge(edge("bad name", "x")); }) == Errc::InvalidArgument);
  CHECK(g.edge_count() == 1);
}

TEST_CASE("frame names") {
  CHECK(is_valid_frame_id("cam_front_left"));
  CHECK(is_valid_frame_id("Cam-1.optical"));
  CHECK_FALSE(is_valid_frame_id(""));
  CHECK_FALSE(is_valid_frame_id("has space"));
  CHECK_FALSE(is_valid_frame_id("tab\there"));
}

TEST_CASE("validate") {
  SUBCASE("root only") {
    const auto rep = FrameGraph("base_link").validate();
    CHECK(rep.ok());
    CHECK(rep.findings.empty());
  }
  SUBCASE("disjoint edges leave frames unreachable") {
    FrameGraph g("a");
    g.add_edge(edge("a", "b"));
    g.add_edge(edge("c", "d"));
    const auto rep = g.validate();
    CHECK_FALSE(rep.ok());
    std::vector<std::string> unreachable;
    for (const auto& f : rep.findings) {
      if (f.code == "unreachable") unreachable.push_back(f.subject);
    }
    CHECK(unreachable == std::vector<std::string>{"c", "d"});
  }
  SUBCASE("missing root") {
    FrameGraph g;
    g.add_edge(edge("a", "b"));
    const auto rep = g.validate();
    CHECK_FALSE(rep.ok());
    CHECK(rep.findings.front().code == "missing_root");
  }
  SUBCASE("cycle") {
    FrameGraph g("a");
    g.add_edge(edge("a", "b"));
    g.add_edge(edge("b", "c"));
    g.add_edge(edge("c", "a"));
    bool cycle = false;
    for (const auto& f : g.validate().findings) cycle = cycle || f.code == "cycle";
    CHECK(cycle);
  }
  SUBCASE("SMapper tree") {
    const FrameGraph g = smapper_from_parts();
    CHECK(g.frames().size() == 9);
    CHECK(g.edge_count() == 8);
    CHECK(g.validate().findings.empty());
  }
}

TEST_CASE("lookup basics") {
  FrameGraph g("a");
  g.add_edge(edge("a", "b", translation(1, 0, 0)));
  g.add_edge(edge("b", "c", translation(1, 0, 0)));
  CHECK(max_abs_diff(g.lookup("a", "a").matrix(), Eigen::Matrix4d::Identity()) == 0.0);
  const Transform ac = g.lookup("a", "c");
  CHECK(ac.translation.x() == doctest::Approx(2.0));
  CHECK(ac.translation.y() == 0.0);
  CHECK(ac.translation.z() == 0.0);
  CHECK(code_of([&] { g.lookup("a", "zzz"); }) == Errc::UnknownFrame);
  g.add_edge(edge("x", "y"));
  CHECK(code_of([&] { g.lookup("a", "y"); }) == Errc::Disconnected);
}

TEST_CASE("lookup matches the matrix-chain oracle on random trees") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    // 7 frames, 6 edges: each new frame hangs off a random earlier one, with
    // the edge direction also random.
    std::vector<std::string> names{"f0", "f1", "f2", "f3", "f4", "f5", "f6"};
    std::vector<CalibEdge> edges;
    for (std::size_t i = 1; i < names.size(); ++i) {
      const auto& other = names[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)];
      const auto t = testutil::random_transform(rng);
      edges.push_back(rng() % 2 ? edge(other, names[i], t) : edge(names[i], other, t));
    }
    FrameGraph g("f0");
    for (const auto& e : edges) g.add_edge(e);
    REQUIRE(g.validate().ok());
    const auto pose = root_poses("f0", edges);
    for (const auto& a : names) {
      for (const auto& b : names) {
        const Eigen::Matrix4d expected = pose.at(a).inverse() * pose.at(b);
        CHECK(max_abs_diff(g.lookup(a, b).matrix(), expected) < 1e-9);
        CHECK(max_abs_diff(g.lookup(a, b).matrix(), invert(g.lookup(b, a)).matrix()) < 1e-9);
        for (const auto& c : names) {
          CHECK(max_abs_diff(compose(g.lookup(a, b), g.lookup(b, c)).matrix(), g.lookup(a, c).matrix()) < 1e-9);
        }
      }
    }
  }
}

TEST_CASE("diff_graphs") {
  const FrameGraph g = smapper_from_parts();
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& f : g.frames()) pairs.emplace_back("base_link", f);

  SUBCASE("identical graphs") {
    for (const auto& d : diff_graphs(g, g, pairs)) {
      CHECK(d.position_diff_m == 0.0);
      CHECK(d.angular_diff_deg == 0.0);
    }
  }

  SUBCASE("a 2 degree perturbation shows up only below the perturbed edge") {
    FrameGraph h("base_link");
    for (auto e : g.edges()) {
      if (e.parent == "os_imu" && e.child == "cam_side_left") {
        const auto delta = UnitQuaternion::from_axis_angle(Eigen::Vector3d(0.3, -1.0, 0.2), deg2rad(2.0));
        e.transform.rotation = e.transform.rotation * delta;
      }
      h.add_edge(e);
    }
    for (const auto& d : diff_graphs(g, h, pairs)) {
      if (d.to == "cam_side_left") {
        CHECK(std::abs(d.angular_diff_deg - 2.0) < 1e-6);
      } else {
        CHECK(d.angular_diff_deg < 1e-9);
      }
      CHECK(d.position_diff_m < 1e-12);
    }
  }

  SUBCASE("unknown frame") {
    CHECK(code_of([&] { diff_graphs(g, g, {{"base_link", "nowhere"}}); }) == Errc::UnknownFrame);
  }
}

TEST_CASE("CAD vs estimate position differences") {
  const FrameGraph cad = load_calibration_any(testutil::fixture("cad_vs_estimate/cad.json"));
  const FrameGraph est = load_calibration_any(testutil::fixture("cad_vs_estimate/estimate.json"));
  const auto rows = diff_graphs(cad, est,
                                {{"os_imu", "cam_front_left"},
                                 {"os_imu", "cam_front_right"},
                                 {"os_imu", "cam_side_left"},
                                 {"os_imu", "cam_side_right"}});
  const double published[] = {0.018, 0.013, 0.035, 0.025};
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(rows[i].position_diff_m - published[i]) <= 0.002);
}

TEST_CASE("text format round trip") {
  SUBCASE("rooted empty graph") {
    const FrameGraph g("base_link");
    const std::string text = format_calibration(g);
    CHECK(text.find("root base_link\n") != std::string::npos);
    CHECK(format_calibration(parse_calibration(text)) == text);
  }
  SUBCASE("random graph: bytes and lookups survive") {
    std::mt19937_64 rng(22);
    FrameGraph g("r");
    for (int i = 0; i < 8; ++i) {
      CalibEdge e = edge(i == 0 ? "r" : "n" + std::to_string(i - 1), "n" + std::to_string(i),
                         testutil::random_transform(rng));
      e.label = "label with  spaces";
      e.source = EdgeSource::Manufacturer;
      g.add_edge(e);
    }
    const std::string once = format_calibration(g);
    const FrameGraph back = parse_calibration(once);
    CHECK(format_calibration(back) == once);
    for (const auto& a : g.frames()) {
      for (const auto& b : g.frames()) {
        // Serialization rounds to 9 / 12 decimals.
        CHECK(max_abs_diff(g.lookup(a, b).matrix(), back.lookup(a, b).matrix()) < 1e-7);
      }
    }
    const FrameGraph again = parse_calibration(format_calibration(back));
    for (const auto& a : g.frames()) {
      for (const auto& b : g.frames()) CHECK(max_abs_diff(again.lookup(a, b).matrix(), back.lookup(a, b).matrix()) < 1e-12);
    }
    CHECK(back.edges().front().label == "label with  spaces");
  }
}

TEST_CASE("SMapper golden calibration file") {
  const auto golden_path = testutil::fixture("smapper/smapper_tree.calib");
  const std::string golden = slurp(golden_path);
  CHECK(format_calibration(smapper_from_parts()) == golden);
  CHECK(format_calibration(import_calibration(golden_path)) == golden);

  testutil::TempDir tmp("calib");
  export_calibration(import_calibration(golden_path), tmp / "copy.calib");
  CHECK(slurp(tmp / "copy.calib") == golden);
}

TEST_CASE("corrupted calibration files") {
  const std::string good = slurp(testutil::fixture("smapper/smapper_tree.calib"));

  SUBCASE("quaternion norm 0.5 names the edge and line") {
    std::string bad = good;
    const std::string row = "edge os_imu realsense_imu 0.090000000 0.017500000 -0.030000000 1.000000000000";
    const auto pos = bad.find(row);
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, row.size(), "edge os_imu realsense_imu 0.090000000 0.017500000 -0.030000000 0.500000000000");
    try {
      parse_calibration(bad, "bad.calib");
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ParseError);
      const std::string msg = e.what();
      CHECK(msg.find("os_imu -> realsense_imu") != std::string::npos);
      CHECK(msg.find("bad.calib:10") != std::string::npos);
    }
  }
  SUBCASE("other malformed records") {
    CHECK(code_of([] { parse_calibration("format_version 2\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_calibration("root a\nedge a b 0 0 0 1 0 0\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_calibration("root a\nedge a b 0 x 0 1 0 0 0 cad\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_calibration("root a\nedge a b 0 0 0 1 0 0 0 guess\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_calibration("frobnicate\n"); }) == Errc::ParseError);
    CHECK(code_of([] { parse_calibration("root a\nedge a b 0 0 0 1 0 0 0 cad\nedge b a 0 0 0 1 0 0 0 cad\n"); }) ==
          Errc::DuplicateEdge);
  }
  SUBCASE("JSON edge files") {
    CHECK(code_of([] { parse_calibration_json(R"({"root":"a","extra":1})"); }) == Errc::ParseError);
    CHECK(code_of([] {
      parse_calibration_json(
          R"({"edges":[{"parent":"a","child":"b","translation":[0,0,0],"euler_deg":[0,0,0],"rotation":{"w":1,"x":0,"y":0,"z":0}}]})");
    }) == Errc::ParseError);
    CHECK(code_of([] {
      parse_calibration_json(R"({"edges":[{"parent":"a","child":"b","translation":[0,0],"euler_deg":[0,0,0]}]})");
    }) == Errc::ParseError);
    CHECK(code_of([] { parse_calibration_json("{not json"); }) == Errc::ParseError);
  }
  SUBCASE("missing file") {
    CHECK(code_of([] { import_calibration("/nonexistent/x.calib"); }) == Errc::IoError);
  }
}

TEST_CASE("JSON Euler input honours the declared convention") {
  const std::string doc =
      R"({"root":"a","edges":[{"parent":"a","child":"b","translation":[0,0,0],"euler_deg":[10,20,30],"euler_convention":"extrinsic_xyz"}]})";
  const FrameGraph g = parse_calibration_json(doc);
  const Eigen::Matrix3d expected =
      testutil::rot_z(deg2rad(30)) * testutil::rot_y(deg2rad(20)) * testutil::rot_x(deg2rad(10));
  CHECK(max_abs_diff(g.lookup("a", "b").rotation.matrix(), expected) < 1e-12);
}

}  // TEST_SUITE
