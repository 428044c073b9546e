//! Dense finite-entry vectors with the small set of linear operations the
//! optimizers need. Entries are validated once at construction; arithmetic
//! on validated vectors cannot introduce NaN except through overflow, which
//! the projections downstream would surface immediately.

use std::fmt;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in R^d with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("vector must be non-empty".into()));
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "vector entries must be finite, got {bad}"
            )));
        }
        Ok(Self(entries))
    }

    pub fn scalar(x: f64) -> Result<Self> {
        Self::new(vec![x])
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// The single entry of a 1-d vector.
    pub fn as_scalar(&self) -> Result<f64> {
        if self.0.len() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: self.0.len() });
        }
        Ok(self.0[0])
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn plus(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn minus(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// self + factor * other, the only compound update the loops use.
    pub fn plus_scaled(&self, factor: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + factor * b).collect())
    }

    pub fn distance(&self, other: &Vector) -> f64 {
        self.minus(other).norm()
    }

    /// Mean of a non-empty set of equal-dimension vectors.
    pub fn mean(points: &[Vector]) -> Result<Vector> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidParameter("mean of empty set".into()))?;
        let mut acc = vec![0.0; first.dim()];
        for p in points {
            if p.dim() != first.dim() {
                return Err(Error::DimensionMismatch { expected: first.dim(), got: p.dim() });
            }
            for (a, v) in acc.iter_mut().zip(p.iter()) {
                *a += v;
            }
        }
        let n = points.len() as f64;
        for a in acc.iter_mut() {
            *a /= n;
        }
        Vector::new(acc)
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Vector {
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Vector(entries)
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Display for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}
