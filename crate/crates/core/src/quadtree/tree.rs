use std::fmt::Write as _;

use rand::Rng;

use super::geometry::{split, Rect};
use crate::error::{check_unit, Error, Result};
use crate::rng::open01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub x: f64,
    pub y: f64,
    /// Arrival rank, 1-based.
    pub index: usize,
}

impl PointRecord {
    pub fn uniform_sequence<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<PointRecord> {
        (1..=n)
            .map(|index| PointRecord {
                x: open01(rng),
                y: open01(rng),
                index,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    x: f64,
    y: f64,
    /// Bottom-left, top-left, bottom-right, top-right.
    children: [u32; 4],
}

#[derive(Debug, Clone)]
struct Node {
    rect: Rect,
    split: Option<Split>,
}

/// Point quadtree over the unit square. Leaves form the covering.
#[derive(Debug, Clone)]
pub struct QuadTree {
    nodes: Vec<Node>,
    n_points: usize,
}

impl Default for QuadTree {
    fn default() -> Self {
        Self::new()
    }
}

impl QuadTree {
    pub fn new() -> Self {
        QuadTree {
            nodes: vec![Node {
                rect: Rect::UNIT,
                split: None,
            }],
            n_points: 0,
        }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.split.is_none()).count()
    }

    /// Splits the leaf containing `(x, y)` in its interior.
    pub fn insert(&mut self, x: f64, y: f64) -> Result<()> {
        if !Rect::UNIT.contains_interior(x, y) {
            return Err(Error::PointNotInterior {
                x,
                y,
                rect: Rect::UNIT.to_string(),
            });
        }
        let mut at = 0usize;
        while let Some(s) = self.nodes[at].split {
            if x == s.x || y == s.y {
                return Err(Error::OnSplitLine { x, y });
            }
            let quadrant = 2 * usize::from(x > s.x) + usize::from(y > s.y);
            at = s.children[quadrant] as usize;
        }
        let quads = split(&self.nodes[at].rect, x, y)?;
        let first = self.nodes.len() as u32;
        self.nodes
            .extend(quads.iter().map(|&rect| Node { rect, split: None }));
        self.nodes[at].split = Some(Split {
            x,
            y,
            children: [first, first + 1, first + 2, first + 3],
        });
        self.n_points += 1;
        Ok(())
    }

    /// Number of leaves meeting the closed segment {x} x [0, 1], minus one.
    /// Descends only through nodes that meet the segment; a query on a
    /// split abscissa follows both sides.
    pub fn partial_match_cost(&self, x: f64) -> Result<usize> {
        check_unit("x", x)?;
        let mut stack = vec![0u32];
        let mut hits = 0usize;
        while let Some(at) = stack.pop() {
            match self.nodes[at as usize].split {
                None => hits += 1,
                Some(s) => {
                    let [bl, tl, br, tr] = s.children;
                    if x <= s.x {
                        stack.extend([bl, tl]);
                    }
                    if x >= s.x {
                        stack.extend([br, tr]);
                    }
                }
            }
        }
        Ok(hits - 1)
    }

    pub fn cover(&self) -> QuadCover {
        QuadCover {
            rects: self
                .nodes
                .iter()
                .filter(|n| n.split.is_none())
                .map(|n| n.rect)
                .collect(),
            n_points: self.n_points,
        }
    }
}

/// Builds the quadtree of `points` in arrival order. Coordinates must be
/// pairwise distinct per axis and strictly inside the unit square.
pub fn build_quadtree(points: &[PointRecord]) -> Result<QuadTree> {
    for (axis, coord) in [('x', 0usize), ('y', 1)] {
        let mut vals: Vec<f64> = points
            .iter()
            .map(|p| if coord == 0 { p.x } else { p.y })
            .collect();
        vals.sort_by(f64::total_cmp);
        if let Some(w) = vals.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateCoordinate { axis, value: w[0] });
        }
    }
    let mut tree = QuadTree::new();
    for p in points {
        tree.insert(p.x, p.y)?;
    }
    Ok(tree)
}

/// Flat view of a quadtree covering.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadCover {
    pub rects: Vec<Rect>,
    pub n_points: usize,
}

impl QuadCover {
    /// Cost by scanning every rectangle.
    pub fn partial_match_cost_scan(&self, x: f64) -> usize {
        self.rects.iter().filter(|r| r.meets_vertical(x)).count() - 1
    }

    pub fn total_area(&self) -> f64 {
        self.rects.iter().map(Rect::area).sum()
    }

    /// Checks the 3n+1 count, total area, and (quadratic) pairwise interior
    /// disjointness.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.rects.len() != 3 * self.n_points + 1 {
            return Err(format!(
                "{} rectangles for {} points",
                self.rects.len(),
                self.n_points
            ));
        }
        let area = self.total_area();
        if (area - 1.0).abs() > 1e-12 {
            return Err(format!("total area {area}"));
        }
        for (i, a) in self.rects.iter().enumerate() {
            if let Some(b) = self.rects[i + 1..].iter().find(|b| a.interiors_overlap(b)) {
                return Err(format!("{a} overlaps {b}"));
            }
        }
        Ok(())
    }

    /// Line format: `n=<count>` followed by one `x_lo x_hi y_lo y_hi` line
    /// per rectangle, 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = format!("n={}\n", self.n_points);
        for r in &self.rects {
            let _ = writeln!(
                out,
                "{:.16e} {:.16e} {:.16e} {:.16e}",
                r.x_lo, r.x_hi, r.y_lo, r.y_hi
            );
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            reason: "empty input".into(),
        })?;
        let n_points = header
            .trim()
            .strip_prefix("n=")
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or(Error::Parse {
                line: 1,
                reason: format!("expected `n=<count>`, got `{header}`"),
            })?;
        let mut rects = Vec::with_capacity(3 * n_points + 1);
        for (i, line) in lines {
            let parse_err = |reason: String| Error::Parse {
                line: i + 1,
                reason,
            };
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| parse_err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let [x_lo, x_hi, y_lo, y_hi] = vals[..] else {
                return Err(parse_err(format!("expected 4 fields, got {}", vals.len())));
            };
            rects.push(Rect::new(x_lo, x_hi, y_lo, y_hi)?);
        }
        if rects.len() != 3 * n_points + 1 {
            return Err(Error::Parse {
                line: 1,
                reason: format!("{} rectangles for n={n_points}", rects.len()),
            });
        }
        Ok(QuadCover { rects, n_points })
    }
}
