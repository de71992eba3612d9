//! Per-species distribution fields on the velocity grid, with a frame tag.

use crate::error::{Error, Result};
use crate::grids::VelocityGrid;
use crate::real::{Real, Vec3};
use crate::species::Species;

/// Which normalization the stored node values carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Plain distribution values `F^α >= 0`.
    Raw,
    /// Fluctuations `f^α = F^α / sqrt(μ_δ^α)`.
    Fluctuation,
    /// Weighted remainder values `h^α = w F^α / sqrt(μ_M^α)`.
    Weighted,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Raw => "raw",
            Frame::Fluctuation => "fluctuation",
            Frame::Weighted => "weighted",
        }
    }
}

/// Node values for both species in one frame. Species-major layout: all A
/// nodes, then all B nodes, matching the operator-matrix indexing.
#[derive(Debug, Clone)]
pub struct DistributionField<T: Real> {
    frame: Frame,
    a: Vec<T>,
    b: Vec<T>,
}

impl<T: Real> DistributionField<T> {
    pub fn from_parts(frame: Frame, a: Vec<T>, b: Vec<T>) -> Self {
        assert_eq!(a.len(), b.len(), "species components must have equal length");
        Self { frame, a, b }
    }

    pub fn zeros(frame: Frame, nodes: usize) -> Self {
        Self { frame, a: vec![T::zero(); nodes], b: vec![T::zero(); nodes] }
    }

    /// Samples a species-resolved function on the grid.
    pub fn sample(
        frame: Frame,
        grid: &VelocityGrid<T>,
        f: impl Fn(Species, Vec3<T>) -> T + Sync,
    ) -> Self {
        let a = grid.sample(|v| f(Species::A, v));
        let b = grid.sample(|v| f(Species::B, v));
        Self::from_parts(frame, a, b)
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn nodes(&self) -> usize {
        self.a.len()
    }

    pub fn species(&self, s: Species) -> &[T] {
        match s {
            Species::A => &self.a,
            Species::B => &self.b,
        }
    }

    pub fn species_mut(&mut self, s: Species) -> &mut [T] {
        match s {
            Species::A => &mut self.a,
            Species::B => &mut self.b,
        }
    }

    pub fn expect_frame(&self, frame: Frame) -> Result<()> {
        if self.frame != frame {
            return Err(Error::Frame {
                expected: frame.name().into(),
                got: self.frame.name().into(),
            });
        }
        Ok(())
    }

    /// Validates the raw-frame invariant: finite values, nonnegative.
    pub fn validate_raw(&self) -> Result<()> {
        self.expect_frame(Frame::Raw)?;
        for s in Species::BOTH {
            for &x in self.species(s) {
                if !x.is_finite() {
                    return Err(Error::Domain("non-finite field value".into()));
                }
                if x < T::zero() {
                    return Err(Error::Domain("raw-frame field value is negative".into()));
                }
            }
        }
        Ok(())
    }

    /// Flat species-major copy `[A nodes..., B nodes...]`.
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(2 * self.a.len());
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.b);
        out
    }

    pub fn from_flat(frame: Frame, flat: &[T]) -> Self {
        assert!(flat.len() % 2 == 0);
        let n = flat.len() / 2;
        Self::from_parts(frame, flat[..n].to_vec(), flat[n..].to_vec())
    }

    /// Trilinear interpolation of one species component.
    pub fn interpolate(&self, s: Species, grid: &VelocityGrid<T>, p: Vec3<T>) -> T {
        grid.interpolate(self.species(s), p)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            frame: self.frame,
            a: self.a.iter().map(|&x| f(x)).collect(),
            b: self.b.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    /// In-place `self += other * scale` (frames must match).
    pub fn axpy(&mut self, scale: T, other: &Self) -> Result<()> {
        if other.frame != self.frame {
            return Err(Error::Frame {
                expected: self.frame.name().into(),
                got: other.frame.name().into(),
            });
        }
        if other.nodes() != self.nodes() {
            return Err(Error::Shape("field size mismatch".into()));
        }
        for s in Species::BOTH {
            let dst = self.species_mut(s) as *mut [T];
            // Split borrows: species_mut and species never alias across fields.
            let src = other.species(s);
            unsafe {
                for (d, &x) in (*dst).iter_mut().zip(src) {
                    *d += scale * x;
                }
            }
        }
        Ok(())
    }

    /// Maximum absolute node value over both species.
    pub fn sup_norm(&self) -> T {
        let mut m = T::zero();
        for s in Species::BOTH {
            for &x in self.species(s) {
                m = m.max(x.abs());
            }
        }
        m
    }
}
