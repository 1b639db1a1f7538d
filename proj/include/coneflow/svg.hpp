#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "coneflow/cone.hpp"
#include "coneflow/curve.hpp"
#include "coneflow/diagnostics.hpp"

namespace coneflow {

struct SvgOptions {
  int width = 640;
  int height = 480;
  double margin = 24.0;
  double reference_radius = 0.0;  // arc centred at the tip; 0 draws none
  int reference_samples = 256;
  bool panel = true;
};

/// Maps world coordinates to pixels (y flipped).
struct CanvasTransform {
  double scale = 1.0;
  double x0 = 0.0;
  double y0 = 0.0;

  Point2 apply(Point2 p) const { return {x0 + scale * p.x, y0 - scale * p.y}; }
};

// Uniform scale that fits every point in the canvas inside the margin, centred.
CanvasTransform fit_canvas(const std::vector<Point2>& points, const SvgOptions& options);

// Rays, curve, optional reference arc and diagnostics panel. Output depends only on the
// inputs.
std::string render_svg(const DiscreteCurve& curve, const Cone& cone, const SvgOptions& options,
                       const DiagnosticsFrame* frame = nullptr);

// Throws IoError.
void emit_svg(const DiscreteCurve& curve, const Cone& cone, const std::string& path,
              const SvgOptions& options, const DiagnosticsFrame* frame = nullptr);

// "frame_00042.svg"
std::string frame_filename(std::size_t index);

}  // namespace coneflow
