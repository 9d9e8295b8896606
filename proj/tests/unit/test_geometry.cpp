#include <dpact/geometry.hpp>

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace dpact;
using doctest::Approx;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST_SUITE("geometry") {

TEST_CASE("voxel grid indexing is a bijection, x fastest") {
    const VoxelGrid grid(Vec3(-1.0, 2.0, 0.5), 0.25, 4, 3, 2);
    CHECK(grid.size() == 24);
    CHECK(grid.linear_index(1, 0, 0) == 1);
    CHECK(grid.linear_index(0, 1, 0) == 4);
    CHECK(grid.linear_index(0, 0, 1) == 12);
    for (Index n = 0; n < grid.size(); ++n) {
        const auto i = grid.node_index(n);
        CHECK(grid.linear_index(i[0], i[1], i[2]) == n);
    }
    const Vec3 r = grid.position(3, 2, 1);
    CHECK(r.x() == Approx(-1.0 + 0.75));
    CHECK(r.y() == Approx(2.5));
    CHECK(r.z() == Approx(0.75));
    CHECK_THROWS_AS((void)grid.linear_index(4, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(VoxelGrid(Vec3::Zero(), 0.0, 1, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(VoxelGrid(Vec3::Zero(), 1.0, 0, 1, 1), std::invalid_argument);
}

TEST_CASE("centered grid is symmetric about the origin") {
    const VoxelGrid grid = VoxelGrid::centered(20, 20, 3, 0.4e-3);
    CHECK(grid.center().norm() < 1e-15);
    CHECK((grid.position(0) + grid.position(grid.size() - 1)).norm() < 1e-15);
}

TEST_CASE("build_arc: 96 elements at 65 mm, central position on the radius") {
    const TransducerArc arc = build_arc(0.065, 96);
    CHECK(arc.element_count() == 96);
    CHECK(arc.polar_angles.front() == Approx(-pi / 4));
    CHECK(arc.polar_angles.back() == Approx(pi / 4));
    for (Index e = 0; e < 96; ++e) CHECK(arc.element_position(e).norm() == Approx(0.065).epsilon(1e-14));
    // Even count: the two middle elements straddle the horizontal plane symmetrically.
    CHECK(arc.polar_angles[47] == Approx(-arc.polar_angles[48]));
}

TEST_CASE("build_arc: single element sits at (R, 0, 0)") {
    const TransducerArc arc = build_arc(0.065, 1, 1.0);
    const Vec3 p = arc.element_position(0);
    CHECK(p.x() == 0.065);
    CHECK(p.y() == 0.0);
    CHECK(p.z() == 0.0);
}

TEST_CASE("build_arc: three elements over pi/2 match spherical coordinates") {
    const TransducerArc arc = build_arc(0.05, 3, pi / 2);
    REQUIRE(arc.polar_angles.size() == 3);
    CHECK(arc.polar_angles[0] == Approx(-pi / 4).epsilon(1e-15));
    CHECK(arc.polar_angles[1] == 0.0);
    CHECK(arc.polar_angles[2] == Approx(pi / 4).epsilon(1e-15));
    const double h = 0.05 * std::sqrt(0.5);
    const Vec3 lo = arc.element_position(0), hi = arc.element_position(2), mid = arc.element_position(1);
    CHECK(lo.x() == Approx(h).epsilon(1e-14));
    CHECK(lo.z() == Approx(-h).epsilon(1e-14));
    CHECK(hi.x() == Approx(h).epsilon(1e-14));
    CHECK(hi.z() == Approx(h).epsilon(1e-14));
    CHECK(std::abs(lo.y()) < 1e-18);
    CHECK(mid.x() == 0.05);
}

TEST_CASE("build_arc rejects invalid input") {
    CHECK_THROWS_AS(build_arc(0.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_arc(-1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_arc(0.065, 0), std::invalid_argument);
    CHECK_THROWS_AS(build_arc(0.065, 3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_arc(0.065, 3, pi + 0.1), std::invalid_argument);
}

TEST_CASE("view offsets for 1, 2 and 4 arcs") {
    CHECK(view_offsets(1) == std::vector<double>{0.0});
    CHECK(view_offsets(2) == std::vector<double>{0.0, pi / 2});
    CHECK(view_offsets(4) == std::vector<double>{0.0, pi / 4, pi / 2, 3 * pi / 4});
    CHECK_THROWS_AS(view_offsets(3), std::invalid_argument);
}

TEST_CASE("pose_for_frame rotates about z") {
    ScanParameters p;
    p.frame_count = 360;
    const ScanGeometry g = make_scan_geometry(p);
    const TransducerArc& arc = g.arcs.front();

    const FramePose first = pose_for_frame(g, 1);
    for (Index q = 0; q < g.channel_count(); ++q)
        CHECK((first.positions[static_cast<std::size_t>(q)] - arc.element_position(q)).norm() == 0.0);

    const FramePose quarter = pose_for_frame(g, 91);
    const Vec3 base = arc.element_position(0);
    const Vec3 r = quarter.positions[0];
    CHECK(r.x() == Approx(-base.y()).epsilon(1e-12));
    CHECK(r.y() == Approx(base.x()).epsilon(1e-12));
    CHECK(r.z() == base.z());

    CHECK_THROWS_AS(pose_for_frame(g, 0), std::invalid_argument);
    CHECK_THROWS_AS(pose_for_frame(g, 361), std::invalid_argument);
}

TEST_CASE("rotation preserves the cylindrical radius; a full turn is periodic") {
    ScanParameters p;
    p.views = 4;
    p.frame_count = 360;
    p.elements_per_arc = 16;
    const ScanGeometry g = make_scan_geometry(p);
    const FramePose base = pose_for_frame(g, 1);
    for (Index k : {2, 45, 180, 359}) {
        const FramePose pose = pose_for_frame(g, k);
        for (std::size_t q = 0; q < pose.positions.size(); ++q) {
            const double r0 = base.positions[q].head<2>().norm();
            CHECK(std::abs(pose.positions[q].head<2>().norm() - r0) <= 1e-12 * r0);
        }
        const FramePose wrapped = pose_at_rotation(g, static_cast<double>(k - 1 + 360) * g.angular_step);
        for (std::size_t q = 0; q < pose.positions.size(); ++q)
            CHECK((wrapped.positions[q] - pose.positions[q]).norm() <= 1e-12 * p.radius);
    }
}

TEST_CASE("channel ordering is arc-major then element") {
    ScanParameters p;
    p.views = 2;
    p.elements_per_arc = 5;
    p.frame_count = 4;
    const ScanGeometry g = make_scan_geometry(p);
    CHECK(g.channel_count() == 10);
    Index expected = 0;
    for (Index a = 0; a < 2; ++a)
        for (Index e = 0; e < 5; ++e) CHECK(channel_index(g, a, e) == expected++);
    const FramePose pose = pose_for_frame(g, 1);
    CHECK((pose.positions[static_cast<std::size_t>(channel_index(g, 1, 2))] - g.arcs[1].element_position(2)).norm() ==
          0.0);
    CHECK_THROWS_AS(channel_index(g, 2, 0), std::invalid_argument);
}

TEST_CASE("full scan metadata: 360 frames at 1 degree and 10 Hz is 10 deg/s over 36 s") {
    ScanParameters p;
    p.frame_count = 360;
    const ScanGeometry g = make_scan_geometry(p);
    CHECK(g.rotation_speed_deg_per_s() == Approx(10.0));
    CHECK(g.scan_duration() == Approx(36.0));
    CHECK(g.sample_count == 2048);
    CHECK(1.0 / g.sample_interval == Approx(31.25e6));
}

TEST_CASE("scan geometry validation") {
    ScanGeometry g;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);  // no arcs
    g.arcs.push_back(build_arc(0.065, 3));
    g.validate();
    g.sample_count = 1;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.sample_count = 16;
    g.arcs[0].polar_angles = {0.1, 0.0, 0.2};
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

}
