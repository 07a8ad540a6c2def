//! Declarative regions: finite unions of axis-aligned rectangles and disks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    /// Closed rectangle `[x0, x1] × [y0, y1]`.
    Rect { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Closed disk.
    Disk { cx: f64, cy: f64, r: f64 },
}

impl Primitive {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Primitive::Rect { x0, x1, y0, y1 } => (x0..=x1).contains(&x) && (y0..=y1).contains(&y),
            Primitive::Disk { cx, cy, r } => (x - cx).powi(2) + (y - cy).powi(2) <= r * r,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Primitive::Rect { x0, x1, y0, y1 } => [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 <= x1 && y0 <= y1,
            Primitive::Disk { cx, cy, r } => [cx, cy, r].iter().all(|v| v.is_finite()) && r >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("malformed primitive {self:?}")))
        }
    }
}

/// Union of primitives. The empty union is the empty set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region(pub Vec<Primitive>);

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.0.iter().any(|p| p.contains(x, y))
    }

    pub fn validate(&self) -> Result<()> {
        self.0.iter().try_for_each(Primitive::validate)
    }

    /// Node-sampled indicator.
    pub fn rasterize(&self, grid: Grid) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| if self.contains(x, y) { 1.0 } else { 0.0 })
    }
}
