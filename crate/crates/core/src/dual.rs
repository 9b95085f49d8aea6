//! Forward-mode differentiation over the four box parameters.
//!
//! Every loss in this crate is written once against the [`Scalar`] trait and
//! evaluated either on plain `f64` or on [`Dual4`], which carries the partial
//! derivatives with respect to the predicted box's `(cx, cy, w, h)`.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of tangent directions: one per box parameter.
pub const TANGENTS: usize = 4;

/// Arithmetic needed by the loss functions.
///
/// `min_s`/`max_s` follow a fixed tie rule: when both operands have equal
/// value the result carries the mean of their derivatives. That is a valid
/// subgradient of `min`/`max` and makes `pred == gt` a stationary point of
/// every IoU-family loss.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    /// Same value, no derivative path.
    fn detach(self) -> Self;
    fn min_s(self, other: Self) -> Self;
    fn max_s(self, other: Self) -> Self;
    fn abs(self) -> Self;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn atan(self) -> Self;
    fn atan2(self, x: Self) -> Self;
    fn powf(self, p: f64) -> Self;

    fn square(self) -> Self {
        self * self
    }

    fn clamp_s(self, lo: f64, hi: f64) -> Self {
        self.max_s(Self::cst(lo)).min_s(Self::cst(hi))
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn detach(self) -> Self {
        self
    }
    #[inline]
    fn min_s(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
    #[inline]
    fn max_s(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn atan(self) -> Self {
        f64::atan(self)
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
}

/// A value together with its gradient with respect to the predicted box.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Dual4 {
    pub value: f64,
    pub partials: [f64; TANGENTS],
}

impl Dual4 {
    pub const fn constant(value: f64) -> Self {
        Dual4 {
            value,
            partials: [0.0; TANGENTS],
        }
    }

    /// The `i`-th independent variable.
    pub fn variable(value: f64, i: usize) -> Self {
        let mut partials = [0.0; TANGENTS];
        partials[i] = 1.0;
        Dual4 { value, partials }
    }

    /// Chain rule for a unary function with derivative `d` at `self.value`.
    #[inline]
    fn chain(self, value: f64, d: f64) -> Self {
        Dual4 {
            value,
            partials: self.partials.map(|p| p * d),
        }
    }

    #[inline]
    fn blend(self, other: Self) -> [f64; TANGENTS] {
        std::array::from_fn(|i| 0.5 * (self.partials[i] + other.partials[i]))
    }
}

impl fmt::Debug for Dual4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {:?}ε", self.value, self.partials)
    }
}

impl Add for Dual4 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Dual4 {
            value: self.value + rhs.value,
            partials: std::array::from_fn(|i| self.partials[i] + rhs.partials[i]),
        }
    }
}

impl Sub for Dual4 {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Dual4 {
            value: self.value - rhs.value,
            partials: std::array::from_fn(|i| self.partials[i] - rhs.partials[i]),
        }
    }
}

impl Mul for Dual4 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Dual4 {
            value: self.value * rhs.value,
            partials: std::array::from_fn(|i| {
                self.partials[i] * rhs.value + self.value * rhs.partials[i]
            }),
        }
    }
}

impl Div for Dual4 {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.value;
        let value = self.value * inv;
        Dual4 {
            value,
            partials: std::array::from_fn(|i| (self.partials[i] - value * rhs.partials[i]) * inv),
        }
    }
}

impl Neg for Dual4 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Dual4 {
            value: -self.value,
            partials: self.partials.map(|p| -p),
        }
    }
}

impl Scalar for Dual4 {
    #[inline]
    fn cst(v: f64) -> Self {
        Dual4::constant(v)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.value
    }
    #[inline]
    fn detach(self) -> Self {
        Dual4::constant(self.value)
    }
    #[inline]
    fn min_s(self, other: Self) -> Self {
        if self.value < other.value {
            self
        } else if other.value < self.value {
            other
        } else {
            Dual4 {
                value: self.value,
                partials: self.blend(other),
            }
        }
    }
    #[inline]
    fn max_s(self, other: Self) -> Self {
        if self.value > other.value {
            self
        } else if other.value > self.value {
            other
        } else {
            Dual4 {
                value: self.value,
                partials: self.blend(other),
            }
        }
    }
    #[inline]
    fn abs(self) -> Self {
        let s = if self.value > 0.0 {
            1.0
        } else if self.value < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(self.value.abs(), s)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e)
    }
    #[inline]
    fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r)
    }
    #[inline]
    fn sin(self) -> Self {
        self.chain(self.value.sin(), self.value.cos())
    }
    #[inline]
    fn atan(self) -> Self {
        self.chain(self.value.atan(), 1.0 / (1.0 + self.value * self.value))
    }
    #[inline]
    fn atan2(self, x: Self) -> Self {
        let y = self;
        let r2 = x.value * x.value + y.value * y.value;
        Dual4 {
            value: y.value.atan2(x.value),
            partials: std::array::from_fn(|i| {
                (x.value * y.partials[i] - y.value * x.partials[i]) / r2
            }),
        }
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        let v = self.value.powf(p);
        let d = if self.value == 0.0 {
            if p > 1.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            p * self.value.powf(p - 1.0)
        };
        self.chain(v, d)
    }
}
