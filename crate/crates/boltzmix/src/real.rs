//! Generic scalar abstraction for the numerical core.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::AddAssign;

/// Floating-point scalar the core math is generic over: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + num_traits::NumAssign
    + AddAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Shorthand for lossy conversion from `f64` literals.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal convertible to scalar")
    }

    /// Lossy conversion from usize counters.
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize convertible to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Three-component velocity/position vector.
pub type Vec3<T> = [T; 3];

pub fn dot<T: Real>(a: Vec3<T>, b: Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm_sq<T: Real>(a: Vec3<T>) -> T {
    dot(a, a)
}

pub fn norm<T: Real>(a: Vec3<T>) -> T {
    norm_sq(a).sqrt()
}

pub fn sub<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add<T: Real>(a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale<T: Real>(a: Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// Axis-aligned orthonormal completion: two unit vectors spanning the plane
/// perpendicular to `n` (`n` need not be unit). Deterministic choice.
pub fn plane_basis<T: Real>(n: Vec3<T>) -> (Vec3<T>, Vec3<T>) {
    let a = if n[0].abs() <= n[1].abs() && n[0].abs() <= n[2].abs() {
        [T::one(), T::zero(), T::zero()]
    } else if n[1].abs() <= n[2].abs() {
        [T::zero(), T::one(), T::zero()]
    } else {
        [T::zero(), T::zero(), T::one()]
    };
    // e1 = normalize(a - (a.n̂)n̂), e2 = n̂ × e1
    let nn = norm(n);
    let nh = scale(n, T::one() / nn);
    let proj = dot(a, nh);
    let mut e1 = sub(a, scale(nh, proj));
    let e1n = norm(e1);
    e1 = scale(e1, T::one() / e1n);
    let e2 = [
        nh[1] * e1[2] - nh[2] * e1[1],
        nh[2] * e1[0] - nh[0] * e1[2],
        nh[0] * e1[1] - nh[1] * e1[0],
    ];
    (e1, e2)
}

/// Fixed pairwise-tree reduction. The summation order depends only on the
/// slice length, so results are bit-reproducible for a fixed input layout.
pub fn tree_sum<T: Real>(xs: &[T]) -> T {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    tree_sum(&xs[..mid]) + tree_sum(&xs[mid..])
}
