//! Plain-text SVG frames of a cloud and its viability region.

use std::fmt::Write;

use crate::geometry::{Bounds, Shape};
use crate::transport::ParticleCloud;
use crate::Point;

const WIDTH: f64 = 640.0;
const PARTICLE_RADIUS: f64 = 2.5;
const OBSTACLE_STYLE: &str = r##"fill="#c8c8c8" stroke="#404040" stroke-width="1""##;

struct View {
    bounds: Bounds,
    scale: f64,
    height: f64,
}

impl View {
    fn new(bounds: Bounds) -> Self {
        let scale = WIDTH / (bounds.max.x - bounds.min.x);
        let height = (bounds.max.y - bounds.min.y) * scale;
        View { bounds, scale, height }
    }

    fn px(&self, p: &Point) -> (f64, f64) {
        (
            (p.x - self.bounds.min.x) * self.scale,
            (self.bounds.max.y - p.y) * self.scale,
        )
    }
}

fn polygon(out: &mut String, view: &View, pts: &[Point]) {
    let coords: Vec<String> = pts
        .iter()
        .map(|p| {
            let (x, y) = view.px(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let _ = writeln!(out, r#"<polygon points="{}" {OBSTACLE_STYLE}/>"#, coords.join(" "));
}

/// Draws the complement of `shape` (the obstacle) clipped to the view.
fn draw_obstacle(out: &mut String, view: &View, shape: &Shape) {
    let b = &view.bounds;
    match shape {
        Shape::EllipseComplement {
            center,
            semi_axes,
            angle,
        } => {
            let (cx, cy) = view.px(center);
            let _ = writeln!(
                out,
                r#"<ellipse cx="{cx:.2}" cy="{cy:.2}" rx="{:.2}" ry="{:.2}" transform="rotate({:.4} {cx:.2} {cy:.2})" {OBSTACLE_STYLE}/>"#,
                semi_axes.x * view.scale,
                semi_axes.y * view.scale,
                -angle.to_degrees(),
            );
        }
        Shape::BallComplement { center, radius } => {
            let (cx, cy) = view.px(center);
            let _ = writeln!(
                out,
                r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" {OBSTACLE_STYLE}/>"#,
                radius * view.scale
            );
        }
        Shape::Ball { center, radius } => {
            let (cx, cy) = view.px(center);
            let _ = writeln!(
                out,
                r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#404040" stroke-width="1"/>"##,
                radius * view.scale
            );
        }
        Shape::HalfSpace { normal, offset } => {
            // clip the excluded half-plane {n.x > offset} against the view box
            let corners = [
                b.min,
                Point::new(b.max.x, b.min.y),
                b.max,
                Point::new(b.min.x, b.max.y),
            ];
            let mut pts = Vec::new();
            for k in 0..4 {
                let (p, q) = (corners[k], corners[(k + 1) % 4]);
                let (sp, sq) = (normal.dot(&p) - offset, normal.dot(&q) - offset);
                if sp > 0.0 {
                    pts.push(p);
                }
                if (sp > 0.0) != (sq > 0.0) {
                    pts.push(p + (q - p) * (sp / (sp - sq)));
                }
            }
            if pts.len() >= 3 {
                polygon(out, view, &pts);
            }
        }
        Shape::WallWithExit {
            x,
            exit_center,
            exit_half_width,
            thickness,
        } => {
            let top = Point::new(*x, exit_center + exit_half_width);
            let bottom = Point::new(*x, exit_center - exit_half_width);
            for (start, end) in [(top, Point::new(*x, b.max.y)), (bottom, Point::new(*x, b.min.y))] {
                let (x0, y0) = view.px(&start);
                let (_, y1) = view.px(&end);
                let w = thickness * view.scale;
                // the rounded jamb bulges toward the exit
                let sweep = if y1 < y0 { 0 } else { 1 };
                let _ = writeln!(
                    out,
                    r#"<path d="M {:.2} {y1:.2} L {:.2} {y0:.2} A {w:.2} {w:.2} 0 0 {sweep} {:.2} {y0:.2} L {:.2} {y1:.2} Z" {OBSTACLE_STYLE}/>"#,
                    x0 - w,
                    x0 - w,
                    x0 + w,
                    x0 + w,
                );
            }
        }
        Shape::Box { min, max } => {
            let (x0, y0) = view.px(&Point::new(min.x, max.y));
            let _ = writeln!(
                out,
                r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#404040" stroke-width="1"/>"##,
                (max.x - min.x) * view.scale,
                (max.y - min.y) * view.scale
            );
        }
        Shape::Intersection { parts } => {
            for p in parts {
                draw_obstacle(out, view, p);
            }
        }
    }
}

/// Renders `cloud` over the obstacles of `region` at time `t`.
pub fn render_frame(region: &Shape, cloud: &ParticleCloud, t: f64, bounds: &Bounds) -> String {
    let view = View::new(*bounds);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{:.0}" viewBox="0 0 {WIDTH:.0} {:.2}">"#,
        view.height.ceil(),
        view.height
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    draw_obstacle(&mut out, &view, region);
    for p in cloud.points() {
        let (x, y) = view.px(p);
        let _ = writeln!(
            out,
            r##"<circle cx="{x:.2}" cy="{y:.2}" r="{PARTICLE_RADIUS}" fill="#1f5fbf"/>"##
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="8" y="20" font-family="monospace" font-size="14">t = {t:.2}</text>"#
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_has_one_circle_per_particle() {
        let cloud = ParticleCloud::new(vec![Point::new(1.0, 0.0), Point::new(2.0, 1.0), Point::new(3.0, -1.0)]).unwrap();
        let region = Shape::Intersection {
            parts: vec![
                Shape::EllipseComplement {
                    center: Point::new(1.1, 0.0),
                    semi_axes: Point::new(0.9, 0.1),
                    angle: 0.3,
                },
                Shape::WallWithExit {
                    x: 0.0,
                    exit_center: 0.0,
                    exit_half_width: 0.6,
                    thickness: 0.1,
                },
            ],
        };
        let b = Bounds::new(Point::new(-8.0, -8.0), Point::new(8.0, 8.0));
        let svg = render_frame(&region, &cloud, 1.5, &b);
        assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\""));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches(r##"fill="#1f5fbf""##).count(), 3);
        assert_eq!(svg.matches("<ellipse").count(), 1);
        assert_eq!(svg.matches("<path").count(), 2);
        assert!(svg.contains("t = 1.50"));
        assert_eq!(svg, render_frame(&region, &cloud, 1.5, &b));
    }

    #[test]
    fn half_space_is_clipped_to_view() {
        let b = Bounds::new(Point::new(-1.0, -1.0), Point::new(1.0, 1.0));
        let mut out = String::new();
        draw_obstacle(&mut out, &View::new(b), &Shape::half_space(Point::new(1.0, 0.0), 0.0));
        // excluded part is the right half of the view
        assert!(out.contains("320.00,640.00"), "{out}");
        assert!(out.contains("640.00,0.00"));
    }
}
