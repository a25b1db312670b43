//! Dense real vectors used for actions, gradients and oracle directions.

use std::fmt;
use std::ops::Index;

use crate::error::{Error, Result};

/// A dense vector with finite coordinates.
///
/// Constructors reject NaN and infinities. Arithmetic helpers keep the
/// invariant for finite inputs of sane magnitude; results are checked in
/// debug builds.
#[derive(Clone, PartialEq, Default)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()), "non-finite coordinate");
        Self(coords)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Standard basis vector `e_i` scaled by `scale`.
    pub fn basis(n: usize, i: usize, scale: f64) -> Self {
        let mut v = vec![0.0; n];
        v[i] = scale;
        Self::from_vec_unchecked(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.0.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.0.len(),
            });
        }
        Ok(())
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn scaled(&self, alpha: f64) -> Vector {
        Self::from_vec_unchecked(self.0.iter().map(|a| alpha * a).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec_unchecked(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec_unchecked(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Vector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    /// `(1 - sigma) * self + sigma * other`
    pub fn lerp(&self, other: &Vector, sigma: f64) -> Vector {
        debug_assert_eq!(self.len(), other.len());
        Self::from_vec_unchecked(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - sigma) * a + sigma * b)
                .collect(),
        )
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.0).finish()
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}
