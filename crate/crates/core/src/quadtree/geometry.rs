use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-parallel rectangle with nonempty interior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}] x [{}, {}]",
            self.x_lo, self.x_hi, self.y_lo, self.y_hi
        )
    }
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x_lo: 0.0,
        x_hi: 1.0,
        y_lo: 0.0,
        y_hi: 1.0,
    };

    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        let r = Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        };
        let in_unit = [x_lo, x_hi, y_lo, y_hi]
            .iter()
            .all(|c| (0.0..=1.0).contains(c));
        if in_unit && x_lo < x_hi && y_lo < y_hi {
            Ok(r)
        } else {
            Err(Error::InvalidRect {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
            })
        }
    }

    pub fn width(&self) -> f64 {
        self.x_hi - self.x_lo
    }

    pub fn height(&self) -> f64 {
        self.y_hi - self.y_lo
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains_interior(&self, x: f64, y: f64) -> bool {
        self.x_lo < x && x < self.x_hi && self.y_lo < y && y < self.y_hi
    }

    /// Closed intersection with the vertical segment {x} x [0, 1].
    pub fn meets_vertical(&self, x: f64) -> bool {
        self.x_lo <= x && x <= self.x_hi
    }

    pub fn interiors_overlap(&self, other: &Rect) -> bool {
        self.x_lo < other.x_hi
            && other.x_lo < self.x_hi
            && self.y_lo < other.y_hi
            && other.y_lo < self.y_hi
    }
}

/// The four closed quadrants of `r` at the interior point `(x, y)`, in the
/// order bottom-left, top-left, bottom-right, top-right.
pub fn split(r: &Rect, x: f64, y: f64) -> Result<[Rect; 4]> {
    if !r.contains_interior(x, y) {
        return Err(Error::PointNotInterior {
            x,
            y,
            rect: r.to_string(),
        });
    }
    Ok([
        Rect {
            x_hi: x,
            y_hi: y,
            ..*r
        },
        Rect {
            x_hi: x,
            y_lo: y,
            ..*r
        },
        Rect {
            x_lo: x,
            y_hi: y,
            ..*r
        },
        Rect {
            x_lo: x,
            y_lo: y,
            ..*r
        },
    ])
}

/// Orientation-preserving affine map `p -> scale * p + offset` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub scale_x: f64,
    pub offset_x: f64,
    pub scale_y: f64,
    pub offset_y: f64,
}

impl AffineMap {
    pub const IDENTITY: AffineMap = AffineMap {
        scale_x: 1.0,
        offset_x: 0.0,
        scale_y: 1.0,
        offset_y: 0.0,
    };

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.scale_x * x + self.offset_x,
            self.scale_y * y + self.offset_y,
        )
    }

    pub fn apply_rect(&self, r: &Rect) -> Rect {
        let (x_lo, y_lo) = self.apply(r.x_lo, r.y_lo);
        let (x_hi, y_hi) = self.apply(r.x_hi, r.y_hi);
        Rect {
            x_lo,
            x_hi,
            y_lo,
            y_hi,
        }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &AffineMap) -> AffineMap {
        AffineMap {
            scale_x: self.scale_x * first.scale_x,
            offset_x: self.scale_x * first.offset_x + self.offset_x,
            scale_y: self.scale_y * first.scale_y,
            offset_y: self.scale_y * first.offset_y + self.offset_y,
        }
    }
}

/// The affine map sending `r` onto the unit square, bottom-left corner to
/// the origin.
pub fn normalize_rect(r: &Rect) -> AffineMap {
    let (w, h) = (r.width(), r.height());
    AffineMap {
        scale_x: 1.0 / w,
        offset_x: -r.x_lo / w,
        scale_y: 1.0 / h,
        offset_y: -r.y_lo / h,
    }
}
