#include "coneflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "coneflow/io.hpp"

namespace coneflow {

namespace {

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

std::string polyline(const std::vector<Point2>& pts, const CanvasTransform& tf,
                     const char* cls, const char* style) {
  std::string out = std::string("  <polyline class=\"") + cls + "\" " + style + " points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Point2 q = tf.apply(pts[i]);
    if (i) out += ' ';
    out += fmt("%.3f", q.x) + "," + fmt("%.3f", q.y);
  }
  return out + "\"/>\n";
}

std::vector<Point2> arc_points(const Cone& cone, double r, int samples) {
  std::vector<Point2> pts;
  for (int i = 0; i <= samples; ++i) {
    const double th = cone.theta1() - cone.opening() * i / samples;
    pts.push_back({r * std::cos(th), r * std::sin(th)});
  }
  return pts;
}

}  // namespace

CanvasTransform fit_canvas(const std::vector<Point2>& points, const SvgOptions& o) {
  double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const double w = std::max(xmax - xmin, 1e-12);
  const double h = std::max(ymax - ymin, 1e-12);
  CanvasTransform tf;
  tf.scale = std::min((o.width - 2.0 * o.margin) / w, (o.height - 2.0 * o.margin) / h);
  tf.x0 = 0.5 * o.width - tf.scale * 0.5 * (xmin + xmax);
  tf.y0 = 0.5 * o.height + tf.scale * 0.5 * (ymin + ymax);
  return tf;
}

std::string render_svg(const DiscreteCurve& curve, const Cone& cone, const SvgOptions& o,
                       const DiagnosticsFrame* frame) {
  double reach = o.reference_radius;
  for (const auto& p : curve.nodes()) reach = std::max(reach, norm(p));
  reach *= 1.15;
  const std::vector<Point2> ray_minus{{0.0, 0.0}, reach * ray_unit(cone, Side::minus)};
  const std::vector<Point2> ray_plus{{0.0, 0.0}, reach * ray_unit(cone, Side::plus)};

  std::vector<Point2> extent = curve.nodes();
  extent.insert(extent.end(), {ray_minus[1], ray_plus[1], {0.0, 0.0}});
  std::vector<Point2> reference;
  if (o.reference_radius > 0.0) {
    reference = arc_points(cone, o.reference_radius, o.reference_samples);
    extent.insert(extent.end(), reference.begin(), reference.end());
  }
  const CanvasTransform tf = fit_canvas(extent, o);

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(o.width) + "\" height=\"" + std::to_string(o.height) +
                    "\" viewBox=\"0 0 " + std::to_string(o.width) + " " +
                    std::to_string(o.height) + "\">\n";
  out += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += polyline(ray_minus, tf, "ray", "fill=\"none\" stroke=\"#444\" stroke-width=\"1.5\"");
  out += polyline(ray_plus, tf, "ray", "fill=\"none\" stroke=\"#444\" stroke-width=\"1.5\"");
  if (!reference.empty())
    out += polyline(reference, tf, "reference",
                    "fill=\"none\" stroke=\"#d62728\" stroke-width=\"1\" stroke-dasharray=\"4 3\"");
  out += polyline(curve.nodes(), tf, "curve", "fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"");

  if (o.panel && frame) {
    const std::pair<const char*, double> rows[] = {
        {"t", frame->t},          {"L", frame->L},
        {"E_lambda", frame->E_lambda}, {"int ks^2", frame->ks2},
        {"omega", frame->omega_num}, {"|k-kbar|", frame->kmax_dev}};
    out += "  <g class=\"panel\" font-family=\"monospace\" font-size=\"11\" fill=\"#222\">\n";
    double y = o.margin;
    for (const auto& [name, v] : rows) {
      out += "    <text x=\"" + fmt("%.1f", o.margin) + "\" y=\"" + fmt("%.1f", y) + "\">" +
             name + " = " + fmt("%.6g", v) + "</text>\n";
      y += 14.0;
    }
    out += "  </g>\n";
  }
  return out + "</svg>\n";
}

void emit_svg(const DiscreteCurve& curve, const Cone& cone, const std::string& path,
              const SvgOptions& options, const DiagnosticsFrame* frame) {
  write_text(path, render_svg(curve, cone, options, frame));
}

std::string frame_filename(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.svg", index);
  return buf;
}

}  // namespace coneflow
