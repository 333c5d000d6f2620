//! Small fixed-capacity points for dimensions 1 through 3.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 3;

/// A point (or vector) in `R^d`, `1 <= d <= 3`, stored inline.
#[derive(Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: usize,
}

impl Point {
    /// Builds a point from a coordinate slice.
    ///
    /// Panics when the slice length is outside `1..=3`; use [`Point::try_new`]
    /// for untrusted input.
    pub fn new(coords: &[f64]) -> Self {
        Self::try_new(coords).expect("point dimension must be 1, 2 or 3")
    }

    pub fn try_new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(Error::Input(format!(
                "dimension {} unsupported (1..=3)",
                coords.len()
            )));
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self { coords: c, dim: coords.len() })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1, 2 or 3");
        Self { coords: [0.0; MAX_DIM], dim }
    }

    /// One-dimensional point.
    pub fn scalar(x: f64) -> Self {
        Self::new(&[x])
    }

    /// The unit vector along axis `axis`.
    pub fn unit(dim: usize, axis: usize) -> Self {
        let mut p = Self::zeros(dim);
        p.coords[axis] = 1.0;
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_slice().to_vec()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim, other.dim);
        self.as_slice().iter().zip(other.as_slice()).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.is_finite())
    }

    /// Unit vector in the direction of `self`; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.as_slice()[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.coords[..self.dim][i]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] += rhs.coords[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(mut self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            self.coords[i] -= rhs.coords[i];
        }
        self
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(mut self, s: f64) -> Point {
        for c in &mut self.coords[..self.dim] {
            *c *= s;
        }
        self
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Point::try_new(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_respects_dimension() {
        let a = Point::new(&[1.0, 2.0]);
        let b = Point::new(&[0.5, -1.0]);
        assert_eq!((a + b).as_slice(), &[1.5, 1.0]);
        assert_eq!((a - b).as_slice(), &[0.5, 3.0]);
        assert!((a.norm() - 5f64.sqrt()).abs() < 1e-15);
        assert_eq!((-a).as_slice(), &[-1.0, -2.0]);
    }

    #[test]
    fn rejects_bad_dimension() {
        assert!(Point::try_new(&[]).is_err());
        assert!(Point::try_new(&[0.0; 4]).is_err());
    }

    #[test]
    fn serde_as_plain_array() {
        let p = Point::new(&[0.25, 3.0, -1.0]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.25,3.0,-1.0]");
        let q: Point = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }
}
