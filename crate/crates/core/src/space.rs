//! Box- and ball-shaped parameter spaces with exact projections and the
//! shrunk projection used to keep perturbed query points feasible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// Axis-aligned box: center ± half_widths per axis.
    Box { half_widths: Vector },
    /// Euclidean ball of the given radius about the center.
    Ball { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    center: Vector,
    #[serde(flatten)]
    kind: SpaceKind,
}

impl ParamSpace {
    pub fn new_box(center: Vector, half_widths: Vector) -> Result<Self> {
        if half_widths.dim() != center.dim() {
            return Err(Error::DimensionMismatch {
                expected: center.dim(),
                got: half_widths.dim(),
            });
        }
        if half_widths.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidParameter("box half-widths must be positive".into()));
        }
        Ok(Self { center, kind: SpaceKind::Box { half_widths } })
    }

    pub fn new_ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter("ball radius must be positive".into()));
        }
        Ok(Self { center, kind: SpaceKind::Ball { radius } })
    }

    /// The box [lo, hi] in one dimension.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        let center = Vector::new(vec![(lo + hi) / 2.0])?;
        let half = Vector::new(vec![(hi - lo) / 2.0])?;
        Self::new_box(center, half)
    }

    /// Unit ball about the origin.
    pub fn unit_ball(dim: usize) -> Result<Self> {
        Self::new_ball(Vector::zeros(dim), 1.0)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Lower corner of the axis-aligned bounding box (exact boundary for
    /// boxes; the enclosing box for balls).
    pub fn lower(&self) -> Vector {
        match &self.kind {
            SpaceKind::Box { half_widths } => self.center.minus(half_widths),
            SpaceKind::Ball { radius } => {
                self.center.minus(&Vector::from_raw(vec![*radius; self.dim()]))
            }
        }
    }

    /// Upper corner of the axis-aligned bounding box.
    pub fn upper(&self) -> Vector {
        match &self.kind {
            SpaceKind::Box { half_widths } => self.center.plus(half_widths),
            SpaceKind::Ball { radius } => {
                self.center.plus(&Vector::from_raw(vec![*radius; self.dim()]))
            }
        }
    }

    /// Smallest half-extent across directions: the min half-width for boxes,
    /// the radius for balls. Perturbations of this magnitude fit inside the
    /// space from any point of the correspondingly shrunk copy.
    pub fn min_half_extent(&self) -> f64 {
        match &self.kind {
            SpaceKind::Box { half_widths } => {
                half_widths.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            SpaceKind::Ball { radius } => *radius,
        }
    }

    /// Euclidean distance from x to the space (0 if inside).
    pub fn distance_outside(&self, x: &Vector) -> f64 {
        debug_assert_eq!(x.dim(), self.dim());
        match &self.kind {
            SpaceKind::Box { half_widths } => {
                let mut sq = 0.0;
                for i in 0..x.dim() {
                    let excess = (x[i] - self.center[i]).abs() - half_widths[i];
                    if excess > 0.0 {
                        sq += excess * excess;
                    }
                }
                sq.sqrt()
            }
            SpaceKind::Ball { radius } => (x.minus(&self.center).norm() - radius).max(0.0),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.dim() == self.dim() && self.distance_outside(x) <= tol
    }

    /// Euclidean projection onto the space. Exact for boxes (per-axis clamp)
    /// and balls (radial scaling); idempotent bit-for-bit because points
    /// already within a relative 1e-12 of the boundary pass through unchanged.
    pub fn project(&self, x: &Vector) -> Vector {
        debug_assert_eq!(x.dim(), self.dim());
        match &self.kind {
            SpaceKind::Box { half_widths } => {
                let entries = (0..x.dim())
                    .map(|i| {
                        let lo = self.center[i] - half_widths[i];
                        let hi = self.center[i] + half_widths[i];
                        x[i].clamp(lo, hi)
                    })
                    .collect();
                Vector::from_raw(entries)
            }
            SpaceKind::Ball { radius } => {
                let offset = x.minus(&self.center);
                let dist = offset.norm();
                if dist <= radius * (1.0 + 1e-12) {
                    x.clone()
                } else {
                    self.center.plus_scaled(radius / dist, &offset)
                }
            }
        }
    }

    /// A copy of the space scaled about its center by `factor` in (0, 1].
    pub fn scaled_about_center(&self, factor: f64) -> Result<ParamSpace> {
        if !(factor > 0.0 && factor <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be in (0, 1], got {factor}"
            )));
        }
        let kind = match &self.kind {
            SpaceKind::Box { half_widths } => {
                SpaceKind::Box { half_widths: half_widths.scaled(factor) }
            }
            SpaceKind::Ball { radius } => SpaceKind::Ball { radius: radius * factor },
        };
        Ok(ParamSpace { center: self.center.clone(), kind })
    }

    /// Projection onto the copy of the space shrunk by (1 - delta) about its
    /// center. Any point of the shrunk copy, perturbed by up to
    /// delta * min_half_extent in an arbitrary direction, stays inside the
    /// original space.
    pub fn project_shrunk(&self, x: &Vector, delta: f64) -> Result<Vector> {
        if !(delta >= 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "shrink delta must be in [0, 1), got {delta}"
            )));
        }
        Ok(self.scaled_about_center(1.0 - delta)?.project(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{sample_unit_sphere, SeededRng};
    use proptest::prelude::*;

    fn vec2(a: f64, b: f64) -> Vector {
        Vector::new(vec![a, b]).unwrap()
    }

    #[test]
    fn box_projection_clamps_per_axis() {
        let space =
            ParamSpace::new_box(vec2(0.0, 1.0), Vector::new(vec![1.0, 0.5]).unwrap()).unwrap();
        assert_eq!(space.project(&vec2(2.0, 1.2)).as_slice(), &[1.0, 1.2]);
        assert_eq!(space.project(&vec2(-3.0, 2.0)).as_slice(), &[-1.0, 1.5]);
        assert_eq!(space.project(&vec2(0.3, 0.9)).as_slice(), &[0.3, 0.9]);
    }

    #[test]
    fn ball_projection_is_radial() {
        let space = ParamSpace::unit_ball(2).unwrap();
        let p = space.project(&vec2(3.0, 4.0));
        assert!((p[0] - 0.6).abs() < 1e-15);
        assert!((p[1] - 0.8).abs() < 1e-15);
        // Interior points pass through untouched.
        assert_eq!(space.project(&vec2(0.1, -0.2)).as_slice(), &[0.1, -0.2]);
    }

    #[test]
    fn shrunk_projection_scales_about_center() {
        // Interval [0, 1], center 0.5; delta = 0.2 shrinks to [0.1, 0.9].
        let space = ParamSpace::interval(0.0, 1.0).unwrap();
        let far = Vector::scalar(5.0).unwrap();
        let hi = space.project_shrunk(&far, 0.2).unwrap();
        assert!((hi[0] - 0.9).abs() < 1e-15);
        let low = Vector::scalar(-5.0).unwrap();
        let lo = space.project_shrunk(&low, 0.2).unwrap();
        assert!((lo[0] - 0.1).abs() < 1e-15);
        assert!(space.project_shrunk(&far, 1.0).is_err());
    }

    #[test]
    fn interval_helper_matches_box() {
        let space = ParamSpace::interval(0.4, 0.6).unwrap();
        assert_eq!(space.center().as_slice(), &[0.5]);
        assert!((space.min_half_extent() - 0.1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn projection_lands_inside_and_is_idempotent(
            cx in -3.0f64..3.0, cy in -3.0f64..3.0,
            wx in 0.1f64..2.0, wy in 0.1f64..2.0,
            px in -10.0f64..10.0, py in -10.0f64..10.0,
            ball in proptest::bool::ANY,
        ) {
            let center = vec2(cx, cy);
            let space = if ball {
                ParamSpace::new_ball(center, wx).unwrap()
            } else {
                ParamSpace::new_box(center, vec2(wx, wy)).unwrap()
            };
            let x = vec2(px, py);
            let p1 = space.project(&x);
            prop_assert!(space.contains(&p1, 1e-9));
            let p2 = space.project(&p1);
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn shrunk_point_plus_perturbation_stays_inside(
            delta in 0.01f64..0.9,
            px in -10.0f64..10.0, py in -10.0f64..10.0,
            dir_seed in 0u64..1000,
            ball in proptest::bool::ANY,
        ) {
            let center = vec2(0.25, -1.0);
            let space = if ball {
                ParamSpace::new_ball(center, 0.7).unwrap()
            } else {
                ParamSpace::new_box(center, vec2(0.7, 0.3)).unwrap()
            };
            let inner = space.project_shrunk(&vec2(px, py), delta).unwrap();
            let mut rng = SeededRng::new(dir_seed, 0);
            let scale = delta * space.min_half_extent();
            for _ in 0..8 {
                let u = sample_unit_sphere(2, &mut rng).unwrap();
                let q = inner.plus_scaled(scale, &u);
                prop_assert!(space.contains(&q, 1e-9),
                    "perturbed point {:?} escaped", q.as_slice());
            }
        }
    }
}
