//! Velocity and spatial discretizations, quadrature rules, and norms.
//!
//! All grid objects are immutable after construction and safe to share across
//! worker threads. Quadratures use a fixed pairwise-tree reduction order so
//! results are bit-reproducible for a fixed grid.

use crate::error::{Error, Result};
use crate::real::{tree_sum, Real, Vec3};

/// Uniform cell-centered cubic lattice covering `[-R, R]^3`.
///
/// Nodes sit at cell centers, so no node coincides with `v = 0` (or with any
/// other node under the collision map's typical reflections), which keeps
/// `|v - v_*|^gamma` with `gamma < 0` evaluable everywhere it is needed.
#[derive(Debug, Clone)]
pub struct VelocityGrid<T: Real> {
    extent: T,
    points_per_axis: usize,
    spacing: T,
}

impl<T: Real> VelocityGrid<T> {
    pub fn new(extent: T, points_per_axis: usize) -> Result<Self> {
        if extent <= T::zero() {
            return Err(Error::Domain("velocity grid extent must be positive".into()));
        }
        if points_per_axis < 4 || points_per_axis % 2 != 0 {
            return Err(Error::Domain(format!(
                "points per axis must be even and >= 4, got {points_per_axis}"
            )));
        }
        let spacing = (T::of(2.0) * extent) / T::of_usize(points_per_axis);
        Ok(Self { extent, points_per_axis, spacing })
    }

    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Total number of lattice nodes, `N^3`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight per node, `h^3`.
    pub fn node_weight(&self) -> T {
        self.spacing * self.spacing * self.spacing
    }

    /// Coordinate of the 1-D node `i`, `-R + (i + 1/2) h`.
    pub fn axis_coord(&self, i: usize) -> T {
        -self.extent + (T::of_usize(i) + T::of(0.5)) * self.spacing
    }

    /// Node coordinates from the flat index `(ix*N + iy)*N + iz`.
    pub fn node(&self, flat: usize) -> Vec3<T> {
        let n = self.points_per_axis;
        let iz = flat % n;
        let iy = (flat / n) % n;
        let ix = flat / (n * n);
        [self.axis_coord(ix), self.axis_coord(iy), self.axis_coord(iz)]
    }

    pub fn flat_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.points_per_axis + iy) * self.points_per_axis + iz
    }

    /// Iterator over all node coordinates in flat-index order.
    pub fn nodes(&self) -> impl Iterator<Item = Vec3<T>> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Evaluates a scalar function on every node, flat-index order.
    pub fn sample(&self, f: impl Fn(Vec3<T>) -> T + Sync) -> Vec<T> {
        (0..self.len()).map(|i| f(self.node(i))).collect()
    }

    /// Off-lattice evaluation of node values: tensor-product 4-point Lagrange
    /// cubic with zero extension outside the lattice. This is the scheme every
    /// collision-operator quadrature uses for post-collision points.
    #[inline]
    pub fn interpolate(&self, values: &[T], p: Vec3<T>) -> T {
        let n = self.points_per_axis as isize;
        let half = T::of(0.5);
        let sixth = T::of(1.0 / 6.0);
        let mut base = [0isize; 3];
        let mut weights = [[T::zero(); 4]; 3];
        for k in 0..3 {
            let s = (p[k] + self.extent) / self.spacing - half;
            let f = s.floor();
            base[k] = match f.to_isize() {
                Some(b) => b,
                None => return T::zero(),
            };
            let t = s - f;
            weights[k][0] = -t * (t - T::one()) * (t - T::of(2.0)) * sixth;
            weights[k][1] = (t + T::one()) * (t - T::one()) * (t - T::of(2.0)) * half;
            weights[k][2] = -(t + T::one()) * t * (t - T::of(2.0)) * half;
            weights[k][3] = (t + T::one()) * t * (t - T::one()) * sixth;
        }
        let interior = (0..3).all(|k| base[k] >= 1 && base[k] <= n - 3);
        if interior {
            // Branch-free gather over 16 contiguous z-runs of 4.
            let n = self.points_per_axis;
            let mut acc = T::zero();
            for dx in 0..4usize {
                let ix = (base[0] - 1) as usize + dx;
                let wx = weights[0][dx];
                for dy in 0..4usize {
                    let iy = (base[1] - 1) as usize + dy;
                    let wxy = wx * weights[1][dy];
                    let row = (ix * n + iy) * n + (base[2] - 1) as usize;
                    // Indices are in-range by the interior classification.
                    let vals = unsafe { values.get_unchecked(row..row + 4) };
                    acc += wxy
                        * (weights[2][0] * vals[0]
                            + weights[2][1] * vals[1]
                            + weights[2][2] * vals[2]
                            + weights[2][3] * vals[3]);
                }
            }
            return acc;
        }
        // Boundary: drop out-of-lattice stencil nodes (zero extension).
        let mut acc = T::zero();
        for dx in 0..4isize {
            let ix = base[0] + dx - 1;
            if ix < 0 || ix >= n {
                continue;
            }
            let wx = weights[0][dx as usize];
            for dy in 0..4isize {
                let iy = base[1] + dy - 1;
                if iy < 0 || iy >= n {
                    continue;
                }
                let wxy = wx * weights[1][dy as usize];
                for dz in 0..4isize {
                    let iz = base[2] + dz - 1;
                    if iz < 0 || iz >= n {
                        continue;
                    }
                    acc += wxy
                        * weights[2][dz as usize]
                        * values[self.flat_index(ix as usize, iy as usize, iz as usize)];
                }
            }
        }
        acc
    }

    /// The 64-node cubic stencil at `p`: `(flat index, weight)` pairs.
    /// Out-of-lattice stencil nodes are dropped (zero extension).
    pub fn stencil(&self, p: Vec3<T>, out: &mut [(usize, T); 64]) -> usize {
        let n = self.points_per_axis as isize;
        let half = T::of(0.5);
        let mut base = [0isize; 3];
        let mut weights = [[T::zero(); 4]; 3];
        for k in 0..3 {
            let s = (p[k] + self.extent) / self.spacing - half;
            let f = s.floor();
            base[k] = match f.to_isize() {
                Some(b) => b,
                None => return 0,
            };
            let t = s - f;
            // Lagrange weights for equispaced nodes at -1, 0, 1, 2.
            let sixth = T::of(1.0 / 6.0);
            weights[k][0] = -t * (t - T::one()) * (t - T::of(2.0)) * sixth;
            weights[k][1] = (t + T::one()) * (t - T::one()) * (t - T::of(2.0)) * half;
            weights[k][2] = -(t + T::one()) * t * (t - T::of(2.0)) * half;
            weights[k][3] = (t + T::one()) * t * (t - T::one()) * sixth;
        }
        let mut count = 0;
        for dx in 0..4isize {
            let ix = base[0] + dx - 1;
            if ix < 0 || ix >= n {
                continue;
            }
            let wx = weights[0][dx as usize];
            for dy in 0..4isize {
                let iy = base[1] + dy - 1;
                if iy < 0 || iy >= n {
                    continue;
                }
                let wxy = wx * weights[1][dy as usize];
                for dz in 0..4isize {
                    let iz = base[2] + dz - 1;
                    if iz < 0 || iz >= n {
                        continue;
                    }
                    out[count] = (
                        self.flat_index(ix as usize, iy as usize, iz as usize),
                        wxy * weights[2][dz as usize],
                    );
                    count += 1;
                }
            }
        }
        count
    }

    /// Trilinear variant of [`VelocityGrid::interpolate`], kept for
    /// comparisons and low-order probes.
    pub fn interpolate_trilinear(&self, values: &[T], p: Vec3<T>) -> T {
        debug_assert_eq!(values.len(), self.len());
        let n = self.points_per_axis as isize;
        let half = T::of(0.5);
        let mut base = [0isize; 3];
        let mut frac = [T::zero(); 3];
        for k in 0..3 {
            let s = (p[k] + self.extent) / self.spacing - half;
            let f = s.floor();
            base[k] = match f.to_isize() {
                Some(b) => b,
                None => return T::zero(),
            };
            frac[k] = s - f;
        }
        let mut acc = T::zero();
        for dx in 0..2isize {
            let ix = base[0] + dx;
            if ix < 0 || ix >= n {
                continue;
            }
            let wx = if dx == 0 { T::one() - frac[0] } else { frac[0] };
            for dy in 0..2isize {
                let iy = base[1] + dy;
                if iy < 0 || iy >= n {
                    continue;
                }
                let wy = if dy == 0 { T::one() - frac[1] } else { frac[1] };
                for dz in 0..2isize {
                    let iz = base[2] + dz;
                    if iz < 0 || iz >= n {
                        continue;
                    }
                    let wz = if dz == 0 { T::one() - frac[2] } else { frac[2] };
                    let idx = self.flat_index(ix as usize, iy as usize, iz as usize);
                    acc += wx * wy * wz * values[idx];
                }
            }
        }
        acc
    }

    /// The 8-node trilinear stencil at `p`: `(flat index, weight)` pairs.
    /// Out-of-lattice stencil nodes are dropped (zero extension).
    pub fn stencil_trilinear(&self, p: Vec3<T>, out: &mut [(usize, T); 8]) -> usize {
        let n = self.points_per_axis as isize;
        let half = T::of(0.5);
        let mut base = [0isize; 3];
        let mut frac = [T::zero(); 3];
        for k in 0..3 {
            let s = (p[k] + self.extent) / self.spacing - half;
            let f = s.floor();
            base[k] = match f.to_isize() {
                Some(b) => b,
                None => return 0,
            };
            frac[k] = s - f;
        }
        let mut count = 0;
        for dx in 0..2isize {
            let ix = base[0] + dx;
            if ix < 0 || ix >= n {
                continue;
            }
            let wx = if dx == 0 { T::one() - frac[0] } else { frac[0] };
            for dy in 0..2isize {
                let iy = base[1] + dy;
                if iy < 0 || iy >= n {
                    continue;
                }
                let wy = if dy == 0 { T::one() - frac[1] } else { frac[1] };
                for dz in 0..2isize {
                    let iz = base[2] + dz;
                    if iz < 0 || iz >= n {
                        continue;
                    }
                    let wz = if dz == 0 { T::one() - frac[2] } else { frac[2] };
                    out[count] = (
                        self.flat_index(ix as usize, iy as usize, iz as usize),
                        wx * wy * wz,
                    );
                    count += 1;
                }
            }
        }
        count
    }
}

/// Quadrature of node values: `h^3 * sum(values)` with fixed tree reduction.
pub fn quad_v<T: Real>(values: &[T], grid: &VelocityGrid<T>) -> Result<T> {
    if values.len() != grid.len() {
        return Err(Error::Shape(format!(
            "expected {} node values, got {}",
            grid.len(),
            values.len()
        )));
    }
    Ok(grid.node_weight() * tree_sum(values))
}

/// Discrete L2 inner product on the velocity grid.
pub fn inner_v<T: Real>(a: &[T], b: &[T], grid: &VelocityGrid<T>) -> Result<T> {
    if a.len() != b.len() || a.len() != grid.len() {
        return Err(Error::Shape("inner product length mismatch".into()));
    }
    let prods: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
    Ok(grid.node_weight() * tree_sum(&prods))
}

/// Periodic spatial grid on `[0, L)^d` with `M` cells per axis, `d` in {1, 3}.
#[derive(Debug, Clone)]
pub struct SpatialGrid<T: Real> {
    period: T,
    cells: usize,
    dimension: usize,
    spacing: T,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(period: T, cells: usize, dimension: usize) -> Result<Self> {
        if period <= T::zero() {
            return Err(Error::Domain("spatial period must be positive".into()));
        }
        if cells < 2 {
            return Err(Error::Domain("need at least 2 cells per axis".into()));
        }
        if dimension != 1 && dimension != 3 {
            return Err(Error::Domain(format!("dimension must be 1 or 3, got {dimension}")));
        }
        let spacing = period / T::of_usize(cells);
        Ok(Self { period, cells, dimension, spacing })
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Total number of cells (`M` for d=1, `M^3` for d=3).
    pub fn len(&self) -> usize {
        self.cells.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact periodic index arithmetic.
    pub fn wrap(&self, i: isize) -> usize {
        let m = self.cells as isize;
        (((i % m) + m) % m) as usize
    }

    /// Cell-center coordinate along one axis.
    pub fn axis_coord(&self, i: usize) -> T {
        (T::of_usize(i) + T::of(0.5)) * self.spacing
    }
}

/// Quadrature rule on the unit sphere: directions and weights summing to 4π.
#[derive(Debug, Clone)]
pub struct AngularRule<T: Real> {
    pub directions: Vec<Vec3<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> AngularRule<T> {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec3<T>, T)> + '_ {
        self.directions.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Product Gauss-Legendre (in cos θ) × trapezoid (in φ) rule of the given
/// order: `order` polar nodes and `2*order` azimuthal nodes.
pub fn lebedev_like_rule<T: Real>(order: usize) -> Result<AngularRule<T>> {
    if !(2..=48).contains(&order) {
        return Err(Error::Config(format!("unsupported angular order {order}; use 2..=48")));
    }
    let (nodes, weights) = gauss_legendre::<T>(order);
    let n_phi = 2 * order;
    let two_pi = T::of(2.0) * T::PI();
    let w_phi = two_pi / T::of_usize(n_phi);
    let mut dirs = Vec::with_capacity(order * n_phi);
    let mut ws = Vec::with_capacity(order * n_phi);
    for (ct, wt) in nodes.iter().zip(&weights) {
        let st = (T::one() - *ct * *ct).max(T::zero()).sqrt();
        for j in 0..n_phi {
            let phi = two_pi * T::of_usize(j) / T::of_usize(n_phi);
            dirs.push([st * phi.cos(), st * phi.sin(), *ct]);
            ws.push(*wt * w_phi);
        }
    }
    Ok(AngularRule { directions: dirs, weights: ws })
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::of_usize(n);
    for i in 0..n {
        // Chebyshev initial guess.
        let mut x = (T::PI() * (T::of_usize(i) + T::of(0.75)) / (nf + T::of(0.5))).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x = x - dx;
            if dx.abs() < T::of(1e-15) {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        nodes[i] = x;
        weights[i] = T::of(2.0) / ((T::one() - x * x) * dp * dp);
    }
    nodes.reverse();
    weights.reverse();
    (nodes, weights)
}

fn legendre_and_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::of_usize(k);
        let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = T::of_usize(n) * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on<T: Real>(n: usize, a: T, b: T) -> (Vec<T>, Vec<T>) {
    let (xs, ws) = gauss_legendre::<T>(n);
    let half = T::of(0.5);
    let mid = half * (a + b);
    let rad = half * (b - a);
    (
        xs.iter().map(|&x| mid + rad * x).collect(),
        ws.iter().map(|&w| w * rad).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_odd_or_tiny_n() {
        assert!(VelocityGrid::<f64>::new(4.0, 7).is_err());
        assert!(VelocityGrid::<f64>::new(4.0, 2).is_err());
        assert!(VelocityGrid::<f64>::new(-1.0, 8).is_err());
    }

    #[test]
    fn nodes_strictly_inside_box() {
        let g = VelocityGrid::<f64>::new(4.0, 8).unwrap();
        for v in g.nodes() {
            for c in v {
                assert!(c.abs() < 4.0);
            }
        }
    }

    #[test]
    fn quad_of_one_is_box_volume() {
        let g = VelocityGrid::<f64>::new(4.0, 8).unwrap();
        let ones = vec![1.0; g.len()];
        let q = quad_v(&ones, &g).unwrap();
        assert!((q - 512.0).abs() < 1e-12 * 512.0);
    }

    #[test]
    fn quad_of_odd_function_vanishes() {
        let g = VelocityGrid::<f64>::new(4.0, 8).unwrap();
        let vals = g.sample(|v| v[0] * (-(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp());
        let q = quad_v(&vals, &g).unwrap();
        assert!(q.abs() < 1e-14);
    }

    #[test]
    fn quad_shape_error() {
        let g = VelocityGrid::<f64>::new(4.0, 8).unwrap();
        assert!(matches!(quad_v(&[1.0, 2.0], &g), Err(Error::Shape(_))));
    }

    #[test]
    fn gaussian_unit_mass() {
        // (2π)^{-3/2} exp(-|v|²/2) integrates to 1; R=8, N=32.
        let g = VelocityGrid::<f64>::new(8.0, 32).unwrap();
        let c = (2.0 * std::f64::consts::PI).powf(-1.5);
        let vals = g.sample(|v| c * (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp());
        let q = quad_v(&vals, &g).unwrap();
        assert!((q - 1.0).abs() < 1e-6, "mass = {q}");
    }

    #[test]
    fn refinement_order_at_least_two_on_gaussian() {
        // Fixed smooth rapidly-decaying integrand, R = 6 standard deviations.
        let f = |v: [f64; 3]| (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp()
            * (1.0 + 0.3 * v[0] + 0.1 * v[1] * v[2]);
        let exact = (2.0 * std::f64::consts::PI).powf(1.5);
        let mut errs = Vec::new();
        for n in [8usize, 16, 32] {
            let g = VelocityGrid::<f64>::new(6.0, n).unwrap();
            let vals = g.sample(f);
            errs.push((quad_v(&vals, &g).unwrap() - exact).abs());
        }
        let order01 = (errs[0] / errs[1]).log2();
        assert!(order01 >= 2.0, "observed order {order01}, errors {errs:?}");
    }

    #[test]
    fn translation_symmetry_even_n() {
        let g = VelocityGrid::<f64>::new(4.0, 8).unwrap();
        let f = |v: [f64; 3]| (-(v[0] - 0.7).powi(2) - v[1] * v[1] - v[2] * v[2]).exp();
        let a = quad_v(&g.sample(f), &g).unwrap();
        let b = quad_v(&g.sample(|v| f([-v[0], -v[1], -v[2]])), &g).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn interpolation_reproduces_node_values_and_linears() {
        let g = VelocityGrid::<f64>::new(4.0, 8).unwrap();
        let vals = g.sample(|v| 1.0 + 2.0 * v[0] - v[1] + 0.5 * v[2]);
        for i in (0..g.len()).step_by(37) {
            let p = g.node(i);
            assert!((g.interpolate(&vals, p) - vals[i]).abs() < 1e-12);
        }
        // Linear functions are reproduced exactly off-lattice (inside the hull).
        let p = [0.31, -1.17, 2.4];
        let expect = 1.0 + 2.0 * p[0] - p[1] + 0.5 * p[2];
        assert!((g.interpolate(&vals, p) - expect).abs() < 1e-12);
    }

    #[test]
    fn angular_rule_invariants() {
        let rule = lebedev_like_rule::<f64>(6).unwrap();
        for d in &rule.directions {
            assert!((d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0).abs() < 1e-14);
        }
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        // ∫ ω₁ dω = 0, ∫ ω₁² dω = 4π/3, ∫ ω₁ω₂ dω = 0.
        let m1: f64 = rule.iter().map(|(d, w)| w * d[0]).sum();
        assert!(m1.abs() < 1e-12);
        let m2: f64 = rule.iter().map(|(d, w)| w * d[0] * d[0]).sum();
        assert!((m2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-10);
        let m12: f64 = rule.iter().map(|(d, w)| w * d[0] * d[1]).sum();
        assert!(m12.abs() < 1e-12);
    }

    #[test]
    fn angular_rule_rejects_unsupported_order() {
        assert!(lebedev_like_rule::<f64>(1).is_err());
        assert!(lebedev_like_rule::<f64>(100).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre::<f64>(8);
        let integral: f64 = xs.iter().zip(&ws).map(|(&x, &w)| w * x.powi(10)).sum();
        assert!((integral - 2.0 / 11.0).abs() < 1e-13);
    }

    #[test]
    fn spatial_grid_wraps_exactly() {
        let g = SpatialGrid::<f64>::new(2.0 * std::f64::consts::PI, 16, 1).unwrap();
        assert_eq!(g.wrap(-1), 15);
        assert_eq!(g.wrap(16), 0);
        assert_eq!(g.wrap(35), 3);
        assert!((g.spacing() - g.period() / 16.0).abs() < 1e-15);
    }
}
