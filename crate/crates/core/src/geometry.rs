//! Per-axis integer arithmetic shared by every analysis stage.

use std::fmt;
use std::str::FromStr;

use serde::ser::SerializeTuple;
use serde::{Serialize, Serializer};

/// A `(height, width)` pair. Kernels, strides, dilations, resolutions and
/// receptive-field sizes are all carried per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Pair<T> {
    pub h: T,
    pub w: T,
}

impl<T> Pair<T> {
    pub const fn new(h: T, w: T) -> Self {
        Self { h, w }
    }
}

impl<T: Clone> Pair<T> {
    pub fn square(v: T) -> Self {
        Self { h: v.clone(), w: v }
    }
}

impl<T: Copy> Pair<T> {
    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> Pair<U> {
        Pair {
            h: f(self.h),
            w: f(self.w),
        }
    }

    pub fn zip<U: Copy, V>(self, other: Pair<U>, mut f: impl FnMut(T, U) -> V) -> Pair<V> {
        Pair {
            h: f(self.h, other.h),
            w: f(self.w, other.w),
        }
    }

    /// Value on the given axis.
    pub fn get(&self, axis: Axis) -> T {
        match axis {
            Axis::H => self.h,
            Axis::W => self.w,
        }
    }

    /// True when `pred` holds on both axes.
    pub fn all(self, mut pred: impl FnMut(T) -> bool) -> bool {
        pred(self.h) && pred(self.w)
    }

    /// True when `pred` holds on at least one axis.
    pub fn any(self, mut pred: impl FnMut(T) -> bool) -> bool {
        pred(self.h) || pred(self.w)
    }
}

impl<T: Copy + PartialEq> Pair<T> {
    pub fn is_square(&self) -> bool {
        self.h == self.w
    }
}

impl<T: Copy + Ord> Pair<T> {
    /// Component-wise maximum.
    pub fn max(self, other: Self) -> Self {
        self.zip(other, Ord::max)
    }

    /// Component-wise minimum.
    pub fn min(self, other: Self) -> Self {
        self.zip(other, Ord::min)
    }

    /// Strictly less on both axes.
    pub fn lt_all(self, other: Self) -> bool {
        self.h < other.h && self.w < other.w
    }

    /// Greater or equal on both axes.
    pub fn ge_all(self, other: Self) -> bool {
        self.h >= other.h && self.w >= other.w
    }

    /// Greater or equal on at least one axis.
    pub fn ge_any(self, other: Self) -> bool {
        self.h >= other.h || self.w >= other.w
    }

    /// Less or equal on both axes.
    pub fn le_all(self, other: Self) -> bool {
        self.h <= other.h && self.w <= other.w
    }
}

/// Spatial axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    H,
    W,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::H, Axis::W];
}

/// Integer pair in pixels (or a dimensionless count for strides and dilations).
pub type Dims = Pair<u64>;

impl fmt::Display for Pair<u64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.h, self.w)
    }
}

impl<T: Serialize> Serialize for Pair<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(2)?;
        t.serialize_element(&self.h)?;
        t.serialize_element(&self.w)?;
        t.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("expected <H>x<W> or a single positive integer, got {0:?}")]
pub struct ParseDimsError(pub String);

/// Parses `224x224`, `3x5` or the square shorthand `7`.
impl FromStr for Pair<u64> {
    type Err = ParseDimsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseDimsError(s.to_string());
        let parse = |part: &str| -> Result<u64, ParseDimsError> {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err());
            }
            part.parse().map_err(|_| err())
        };
        match s.split_once(['x', 'X']) {
            Some((h, w)) => Ok(Pair::new(parse(h)?, parse(w)?)),
            None => Ok(Pair::square(parse(s)?)),
        }
    }
}

/// Dilated kernel extent, `d·(k−1)+1` per axis.
pub fn effective_kernel(kernel: Dims, dilation: Dims) -> Dims {
    kernel.zip(dilation, |k, d| d * (k - 1) + 1)
}
