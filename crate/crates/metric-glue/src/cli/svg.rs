//! Decorative planar layout of a glued structure.
//!
//! The drawing is schematic, not isometric: every block keeps its own
//! intrinsic scale (circles of circumference lambda_n, sticks of length
//! lambda_n), but the embedding angles are jittered cosmetics. The pixel
//! scale and jitter window are recorded in the SVG metadata so nobody
//! mistakes the picture for a metric embedding.

use std::fmt::Write as _;

use rand::Rng;

use crate::blocks::{BlockLaw, Coord};
use crate::error::{Error, Result};
use crate::glue::GluedStructure;
use crate::rng::{Channel, ReplicaStreams};

/// Units-to-pixels blowup. Chosen so a unit block is comfortably visible;
/// purely decorative.
const PX_PER_UNIT: f64 = 400.0;
/// Angular jitter half-window in radians.
const JITTER: f64 = 0.5;
const MAX_BLOCKS: usize = 10_000;

const TAU: f64 = std::f64::consts::TAU;

#[derive(Clone, Copy)]
enum Placed {
    /// cx, cy, radius, phase of coordinate zero.
    Ring(f64, f64, f64, f64),
    /// x0, y0, direction, length.
    Stick(f64, f64, f64, f64),
}

impl Placed {
    fn at(&self, t: f64) -> (f64, f64) {
        match *self {
            Placed::Ring(cx, cy, r, phase) => {
                let a = phase + TAU * t;
                (cx + r * a.cos(), cy + r * a.sin())
            }
            Placed::Stick(x, y, dir, len) => (x + t * len * dir.cos(), y + t * len * dir.sin()),
        }
    }

    /// Outward direction at parameter t, used to aim children away from
    /// the parent curve.
    fn outward(&self, t: f64) -> f64 {
        match *self {
            Placed::Ring(_, _, _, phase) => phase + TAU * t,
            Placed::Stick(_, _, dir, _) => dir + std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Renders the genealogy as nested circles and sticks. Only curve blocks
/// have a drawing; finite blocks are refused. Deterministic for a fixed
/// structure and stream bundle.
pub fn render_layout(g: &GluedStructure, streams: &ReplicaStreams) -> Result<String> {
    match g.law {
        BlockLaw::Segment | BlockLaw::Circle => {}
        _ => return Err(Error::unsupported("layout draws segment and circle blocks only")),
    }
    let n_blocks = g.n_blocks();
    if n_blocks > MAX_BLOCKS {
        return Err(Error::param(format!(
            "layout capped at {MAX_BLOCKS} blocks, structure has {n_blocks}"
        )));
    }

    let circle = matches!(g.law, BlockLaw::Circle);
    let mut placed: Vec<Placed> = Vec::with_capacity(n_blocks + 1);
    placed.push(Placed::Stick(0.0, 0.0, 0.0, 0.0));
    let mut bounds = Bounds::new();

    for n in 1..=n_blocks {
        let len = g.seq.lambda(n) * PX_PER_UNIT;
        let shape = if n == 1 {
            if circle {
                Placed::Ring(0.0, 0.0, len / TAU, 0.0)
            } else {
                Placed::Stick(0.0, 0.0, -std::f64::consts::FRAC_PI_2, len)
            }
        } else {
            let at = g.attach_point(n);
            let u = match at.coord {
                Coord::Param(u) => u,
                Coord::Atom(_) => return Err(Error::unsupported("atom coordinates have no layout")),
            };
            let host = placed[at.block];
            let (ax, ay) = host.at(u);
            let mut rng = streams.stream(n, Channel::Layout);
            let dir = host.outward(u) + JITTER * (2.0 * rng.random::<f64>() - 1.0);
            if circle {
                let r = len / TAU;
                // Tangent externally so the child's coordinate zero sits
                // exactly on the anchor.
                Placed::Ring(ax + r * dir.cos(), ay + r * dir.sin(), r, dir + std::f64::consts::PI)
            } else {
                Placed::Stick(ax, ay, dir, len)
            }
        };
        bounds.add_shape(&shape);
        placed.push(shape);
    }

    let (x0, y0, w, h) = bounds.with_margin(0.05);
    let stroke = (w.max(h) / 700.0).max(0.05);
    let mut out = String::with_capacity(128 * n_blocks + 512);
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\" width=\"900\" height=\"900\">\n",
        f4(x0),
        f4(y0),
        f4(w),
        f4(h)
    );
    let _ = write!(
        out,
        "<metadata>decorative layout: px_per_unit={PX_PER_UNIT} jitter_rad={JITTER} \
         circle_radius=lambda/(2*pi) stick_length=lambda; angles are cosmetic, \
         distances between blocks are not metric</metadata>\n"
    );
    let _ = write!(out, "<g fill=\"none\" stroke-width=\"{}\" stroke-linecap=\"round\">\n", f4(stroke));
    for (n, shape) in placed.iter().enumerate().skip(1) {
        let hue = (g.depth(n) as u64 * 67) % 360;
        match *shape {
            Placed::Ring(cx, cy, r, _) => {
                let _ = write!(
                    out,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" stroke=\"hsl({hue},55%,40%)\"/>\n",
                    f4(cx),
                    f4(cy),
                    f4(r)
                );
            }
            Placed::Stick(x, y, dir, len) => {
                let _ = write!(
                    out,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"hsl({hue},55%,40%)\"/>\n",
                    f4(x),
                    f4(y),
                    f4(x + len * dir.cos()),
                    f4(y + len * dir.sin())
                );
            }
        }
    }
    out.push_str("</g>\n</svg>\n");
    Ok(out)
}

fn f4(x: f64) -> String {
    format!("{x:.4}")
}

struct Bounds {
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
}

impl Bounds {
    fn new() -> Self {
        Bounds { min_x: f64::INFINITY, min_y: f64::INFINITY, max_x: f64::NEG_INFINITY, max_y: f64::NEG_INFINITY }
    }

    fn add(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }

    fn add_shape(&mut self, s: &Placed) {
        match *s {
            Placed::Ring(cx, cy, r, _) => {
                self.add(cx - r, cy - r);
                self.add(cx + r, cy + r);
            }
            Placed::Stick(x, y, dir, len) => {
                self.add(x, y);
                self.add(x + len * dir.cos(), y + len * dir.sin());
            }
        }
    }

    fn with_margin(&self, frac: f64) -> (f64, f64, f64, f64) {
        let w = (self.max_x - self.min_x).max(1e-9);
        let h = (self.max_y - self.min_y).max(1e-9);
        let m = frac * w.max(h);
        (self.min_x - m, self.min_y - m, w + 2.0 * m, h + 2.0 * m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glue::{grow, GrowthConfig};
    use crate::params::SequenceSpec;

    fn grown(law: BlockLaw, n_max: usize, seed: u64) -> (GluedStructure, ReplicaStreams) {
        let streams = ReplicaStreams::new(seed, 0);
        let cfg = GrowthConfig {
            law,
            spec: SequenceSpec::power(0.6, 1.5),
            n_max,
            coupled: false,
        };
        (grow(&cfg, &streams).unwrap().structure, streams)
    }

    #[test]
    fn single_circle_is_centered_unit_circumference() {
        let (g, streams) = grown(BlockLaw::Circle, 1, 7);
        let svg = render_layout(&g, &streams).unwrap();
        // One ring of radius 400 / (2 pi) at the origin.
        let r = 400.0 / TAU;
        assert!(svg.contains(&format!("<circle cx=\"0.0000\" cy=\"0.0000\" r=\"{r:.4}\"")));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn layout_is_deterministic() {
        let (g, streams) = grown(BlockLaw::Segment, 200, 11);
        let a = render_layout(&g, &streams).unwrap();
        let b = render_layout(&g, &streams).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.matches("<line").count(), 200);
    }

    #[test]
    fn finite_blocks_are_refused() {
        let (g, streams) = grown(BlockLaw::FiniteStar { k: 3 }, 5, 3);
        assert!(render_layout(&g, &streams).is_err());
    }

    #[test]
    fn children_touch_their_anchor() {
        let (g, streams) = grown(BlockLaw::Circle, 40, 5);
        let svg = render_layout(&g, &streams).unwrap();
        assert_eq!(svg.matches("<circle").count(), 40);
        assert!(svg.contains("viewBox"));
        assert!(svg.contains("decorative"));
    }
}
