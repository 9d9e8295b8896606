#pragma once

#include <dpact/geometry.hpp>

#include <numbers>

namespace fixture {

// One arc of `channels` elements; defaults give the scanner's timing.
inline dpact::ScanGeometry arc_geometry(dpact::Index channels, dpact::Index frames = 1,
                                        dpact::Index samples = dpact::kDefaultSampleCount,
                                        double radius = dpact::kDefaultArcRadius,
                                        double sample_interval = 1.0 / dpact::kDefaultSamplingRate,
                                        double step_deg = 1.0) {
    dpact::ScanGeometry g;
    g.arcs.push_back(dpact::build_arc(radius, channels));
    g.frame_count = frames;
    g.sample_count = samples;
    g.sample_interval = sample_interval;
    g.angular_step = step_deg * std::numbers::pi / 180.0;
    g.validate();
    return g;
}

}  // namespace fixture
