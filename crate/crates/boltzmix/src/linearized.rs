//! Dense assembly of the linearized collision operator, collision frequency,
//! kernel basis, macro-micro projection, micro-subspace solves, and
//! coercivity measurement.
//!
//! The operator acts on fluctuation pairs `g = (g^A, g^B)` as
//! `(L g)^α = -(1/sqrt(ρ_w^α)) Σ_β [Q^{αβ}(μ_δ^α, sqrt(ρ_w^β) g^β)
//!                                 + Q^{αβ}(sqrt(ρ_w^α) g^α, μ_δ^β)]`,
//! where the weight Maxwellian `ρ_w` is the local `μ_δ` (frame `L_δ`) or the
//! global `μ_M` (frame `L_M`). Assembly scatters the quadrature of this
//! definition into a dense `2N³ × 2N³` matrix and then symmetrizes; the raw
//! asymmetry is kept as a discretization diagnostic.

use crate::error::{Error, Result};
use crate::field::{DistributionField, Frame};
use crate::grids::{inner_v, AngularRule, VelocityGrid};
use crate::real::{dot, norm_sq, sub, tree_sum, Real, Vec3};
use crate::species::{maxwellian, BiMaxwellParams, GlobalFrame, MaxwellParams, Species, SpeciesPair};
use rayon::prelude::*;

/// Which weight Maxwellian the operator carries.
#[derive(Debug, Clone, Copy)]
pub enum OperatorFrame<T: Real> {
    /// `L_δ` at one space-time point: weights from the local bi-Maxwellian.
    Local,
    /// `L_M`: weights from the global Maxwellian at temperature `θ_M`.
    Global(GlobalFrame<T>),
}

impl<T: Real> OperatorFrame<T> {
    fn name(&self) -> &'static str {
        match self {
            OperatorFrame::Local => "local",
            OperatorFrame::Global(_) => "global",
        }
    }

    fn weight_params(&self, state: &BiMaxwellParams<T>, s: Species) -> MaxwellParams<T> {
        match self {
            OperatorFrame::Local => state.params(s),
            OperatorFrame::Global(frame) => frame.global_params(),
        }
    }
}

/// Dense symmetric discretization of the linearized operator at one
/// space-time point. Rows and columns are species-major: all A nodes, then
/// all B nodes.
pub struct OperatorMatrix<T: Real> {
    data: Vec<T>,
    n_nodes: usize,
    pub frame_name: &'static str,
    pub state: BiMaxwellParams<T>,
    pub grid_extent: T,
    pub grid_points: usize,
    /// `‖L - Lᵀ‖_F / ‖L‖_F` of the raw (pre-symmetrization) assembly.
    pub raw_asymmetry: T,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn size(&self) -> usize {
        2 * self.n_nodes
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Post-symmetrization defect, reported for the matrix invariant.
    pub fn symmetry_defect(&self) -> T {
        let n = self.size();
        let mut num = T::zero();
        let mut den = T::zero();
        for i in 0..n {
            for j in 0..n {
                let a = self.data[i * n + j];
                let b = self.data[j * n + i];
                num += (a - b) * (a - b);
                den += a * a;
            }
        }
        (num / den.max(T::min_positive_value())).sqrt()
    }

    /// Matrix action on a fluctuation pair.
    pub fn apply(&self, g: &DistributionField<T>) -> Result<DistributionField<T>> {
        g.expect_frame(Frame::Fluctuation)?;
        if g.nodes() != self.n_nodes {
            return Err(Error::Shape("field size does not match operator".into()));
        }
        let x = g.to_flat();
        let y = self.apply_flat(&x);
        Ok(DistributionField::from_flat(Frame::Fluctuation, &y))
    }

    pub fn apply_flat(&self, x: &[T]) -> Vec<T> {
        let n = self.size();
        assert_eq!(x.len(), n);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let row = &self.data[i * n..(i + 1) * n];
                let mut acc = T::zero();
                for (a, b) in row.iter().zip(x) {
                    acc += *a * *b;
                }
                acc
            })
            .collect()
    }

    pub fn trace(&self) -> T {
        let n = self.size();
        (0..n).map(|i| self.data[i * n + i]).fold(T::zero(), |a, b| a + b)
    }
}

struct StateTables<T: Real> {
    /// `μ_δ^s` at nodes.
    mu_d: [Vec<T>; 2],
    /// `log μ_δ^s` coefficients for off-lattice evaluation.
    log_mu_d: [LogMaxwell<T>; 2],
    /// `log ρ_w^s` coefficients.
    log_rho_w: [LogMaxwell<T>; 2],
    /// `log ρ_w^s` at nodes.
    log_rho_w_nodes: [Vec<T>; 2],
}

#[derive(Clone, Copy)]
struct LogMaxwell<T: Real> {
    ln_norm: T,
    bulk: Vec3<T>,
    half_m_over_theta: T,
}

impl<T: Real> LogMaxwell<T> {
    fn new(p: &MaxwellParams<T>, mass: T) -> Self {
        let two_pi = T::of(2.0) * T::PI();
        Self {
            ln_norm: p.density.ln() + T::of(1.5) * (mass / (two_pi * p.temperature)).ln(),
            bulk: p.bulk_velocity,
            half_m_over_theta: mass / (T::of(2.0) * p.temperature),
        }
    }

    #[inline]
    fn eval(&self, v: Vec3<T>) -> T {
        self.ln_norm - self.half_m_over_theta * norm_sq(sub(v, self.bulk))
    }
}

fn state_tables<T: Real>(
    state: &BiMaxwellParams<T>,
    frame: &OperatorFrame<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> StateTables<T> {
    let make = |s: Species| {
        let m = species.mass(s);
        let local = state.params(s);
        let weight = frame.weight_params(state, s);
        let mu_d = grid.sample(|v| maxwellian(&local, m, v));
        let log_mu_d = LogMaxwell::new(&local, m);
        let log_rho_w = LogMaxwell::new(&weight, m);
        let log_rho_w_nodes = grid.sample(|v| log_rho_w.eval(v));
        (mu_d, log_mu_d, log_rho_w, log_rho_w_nodes)
    };
    let (mu_a, lma, lra, lrna) = make(Species::A);
    let (mu_b, lmb, lrb, lrnb) = make(Species::B);
    StateTables {
        mu_d: [mu_a, mu_b],
        log_mu_d: [lma, lmb],
        log_rho_w: [lra, lrb],
        log_rho_w_nodes: [lrna, lrnb],
    }
}

/// Collision frequency `ν^α(v) = Σ_β ∫∫ B^{αβ} μ^β(v_*) dω dv_*`.
///
/// The sphere integral of the angular factor is exact; the `v_*` integral is
/// the lattice sum with nodes closer than `h/2` replaced by an equal-volume
/// ball correction, which keeps soft potentials (`γ <= 0`) finite.
pub fn nu_alpha<T: Real>(
    v: Vec3<T>,
    alpha: Species,
    state: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> T {
    let s_b = species.angular_sphere_integral();
    let gamma = species.gamma;
    let h3 = grid.node_weight();
    let half_h = grid.spacing() * T::of(0.5);
    // Equal-volume ball radius for the near-singular cell.
    let r_eq = grid.spacing() * T::of((3.0 / (4.0 * std::f64::consts::PI)).cbrt());
    let four_pi = T::of(4.0) * T::PI();
    let mut total = T::zero();
    for beta in Species::BOTH {
        let m = species.mass(beta);
        let p = state.params(beta);
        let c = species.c_phi_of(alpha, beta);
        let mut terms = Vec::with_capacity(grid.len());
        let mut near = T::zero();
        for node in grid.nodes() {
            let r = norm_sq(sub(v, node)).sqrt();
            if r < half_h {
                near += T::one();
                terms.push(T::zero());
            } else {
                terms.push(r.powf(gamma) * maxwellian(&p, m, node));
            }
        }
        let lattice = h3 * tree_sum(&terms);
        let correction = near * four_pi * r_eq.powf(gamma + T::of(3.0))
            / (gamma + T::of(3.0))
            * maxwellian(&p, m, v);
        total += c * s_b * (lattice + correction);
    }
    total
}

/// Collision frequency sampled at all grid nodes, per species.
pub fn nu_field<T: Real>(
    state: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> [Vec<T>; 2] {
    let compute = |s: Species| -> Vec<T> {
        (0..grid.len())
            .into_par_iter()
            .map(|i| nu_alpha(grid.node(i), s, state, species, grid))
            .collect()
    };
    [compute(Species::A), compute(Species::B)]
}

struct SyncRows<T>(*mut T);
unsafe impl<T> Sync for SyncRows<T> {}

/// Assembles the dense linearized operator by scattering the quadrature of
/// the definition, then symmetrizing. Column indices carry the trilinear
/// stencil weights of the off-lattice post-collision evaluations.
pub fn assemble_l<T: Real>(
    state: &BiMaxwellParams<T>,
    frame: OperatorFrame<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
) -> Result<OperatorMatrix<T>> {
    let n = grid.len();
    let size = 2 * n;
    let tables = state_tables(state, &frame, species, grid);
    let nodes: Vec<Vec3<T>> = grid.nodes().collect();
    let h3 = grid.node_weight();
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let gamma = species.gamma;
    let masses = [species.m_a, species.m_b];
    let msum = species.mass_sum();
    let c_beta = [
        [T::one(), T::of(2.0) * masses[1] / msum],
        [T::of(2.0) * masses[0] / msum, T::one()],
    ];
    let c_alpha = [
        [T::one(), T::of(2.0) * masses[0] / msum],
        [T::of(2.0) * masses[1] / msum, T::one()],
    ];
    let c_phi = species.c_phi;
    // Terms with a combined exponent below this никогда matter at f64 scale.
    let exp_floor = T::of(-120.0);

    let mut data: Vec<T> = vec![T::zero(); size * size];
    let ptr = SyncRows(data.as_mut_ptr());
    let ptr_ref = &ptr;

    (0..n).into_par_iter().for_each(|i| {
        let v = nodes[i];
        // Disjoint rows (A, i) and (B, i); safe to write without locks.
        let (row_a, row_b) = unsafe {
            let base = ptr_ref.0;
            (
                std::slice::from_raw_parts_mut(base.add(i * size), size),
                std::slice::from_raw_parts_mut(base.add((n + i) * size), size),
            )
        };
        let inv_sqrt_rho = [
            (-T::of(0.5) * tables.log_rho_w_nodes[0][i]).exp(),
            (-T::of(0.5) * tables.log_rho_w_nodes[1][i]).exp(),
        ];
        let mut stencil_p = [(0usize, T::zero()); 64];
        let mut stencil_sp = [(0usize, T::zero()); 64];
        for (j, &v_star) in nodes.iter().enumerate() {
            if j == i {
                continue;
            }
            let u = sub(v, v_star);
            let r2 = norm_sq(u);
            if r2 > cutoff_sq {
                continue;
            }
            let r = r2.sqrt();
            let r_pow = r.powf(gamma);
            // ω-independent loss coefficients per (α, β).
            let mut loss_cross = [[T::zero(); 2]; 2];
            let mut loss_diag = [[T::zero(); 2]; 2];
            for ai in 0..2 {
                for bi in 0..2 {
                    let arg = tables.log_mu_d[ai].eval(v)
                        + T::of(0.5) * tables.log_rho_w_nodes[bi][j]
                        - T::of(0.5) * tables.log_rho_w_nodes[ai][i];
                    loss_cross[ai][bi] = if arg > exp_floor { arg.exp() } else { T::zero() };
                    loss_diag[ai][bi] = tables.mu_d[bi][j];
                }
            }
            let mut ang_total = T::zero();
            let mut gain_acc = |row: &mut [T], col: usize, val: T| {
                row[col] += val;
            };
            let _ = &mut gain_acc;
            for (omega, w) in angular.iter() {
                let proj = dot(u, omega);
                let cos_theta = proj / r;
                let b_ang = species.angular(cos_theta);
                if b_ang == T::zero() {
                    continue;
                }
                let kern = w * r_pow * b_ang;
                ang_total += kern;
                let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                for ai in 0..2 {
                    let row: &mut [T] = if ai == 0 {
                        unsafe { &mut *(row_a as *mut [T]) }
                    } else {
                        unsafe { &mut *(row_b as *mut [T]) }
                    };
                    for bi in 0..2 {
                        let cb = c_beta[ai][bi];
                        let ca = c_alpha[ai][bi];
                        let vp = [
                            v[0] - cb * proj_omega[0],
                            v[1] - cb * proj_omega[1],
                            v[2] - cb * proj_omega[2],
                        ];
                        let vsp = [
                            v_star[0] + ca * proj_omega[0],
                            v_star[1] + ca * proj_omega[1],
                            v_star[2] + ca * proj_omega[2],
                        ];
                        let scale = kern * c_phi[ai][bi] * h3;
                        // Gain 1: -μ_δ^α(v') sqrt(ρ_w^β(v_*'))/sqrt(ρ_w^α(v))
                        // applied to g^β(v_*').
                        let arg1 = tables.log_mu_d[ai].eval(vp)
                            + T::of(0.5) * tables.log_rho_w[bi].eval(vsp)
                            - T::of(0.5) * tables.log_rho_w_nodes[ai][i];
                        if arg1 > exp_floor {
                            let coef = scale * arg1.exp();
                            let cnt = grid.stencil(vsp, &mut stencil_sp);
                            for &(idx, wgt) in &stencil_sp[..cnt] {
                                row[bi * n + idx] -= coef * wgt;
                            }
                        }
                        // Gain 2: -sqrt(ρ_w^α(v')) μ_δ^β(v_*')/sqrt(ρ_w^α(v))
                        // applied to g^α(v').
                        let arg2 = T::of(0.5) * tables.log_rho_w[ai].eval(vp)
                            + tables.log_mu_d[bi].eval(vsp)
                            - T::of(0.5) * tables.log_rho_w_nodes[ai][i];
                        if arg2 > exp_floor {
                            let coef = scale * arg2.exp();
                            let cnt = grid.stencil(vp, &mut stencil_p);
                            for &(idx, wgt) in &stencil_p[..cnt] {
                                row[ai * n + idx] -= coef * wgt;
                            }
                        }
                        // Loss 1: +μ_δ^α(v) sqrt(ρ_w^β(v_*))/sqrt(ρ_w^α(v)) g^β(v_*).
                        row[bi * n + j] += scale * loss_cross[ai][bi];
                        // Loss 2 (collision frequency): +μ_δ^β(v_*) g^α(v).
                        row[ai * n + i] += scale * loss_diag[ai][bi];
                    }
                }
            }
            let _ = ang_total;
            let _ = inv_sqrt_rho;
        }
    });

    // Symmetrize, recording the raw asymmetry.
    let mut num = T::zero();
    let mut den = T::zero();
    for i in 0..size {
        for j in (i + 1)..size {
            let a = data[i * size + j];
            let b = data[j * size + i];
            let m = T::of(0.5) * (a + b);
            num += (a - b) * (a - b);
            den += a * a + b * b;
            data[i * size + j] = m;
            data[j * size + i] = m;
        }
        den += data[i * size + i] * data[i * size + i];
    }
    let raw_asymmetry = (T::of(2.0) * num / den.max(T::min_positive_value())).sqrt();

    Ok(OperatorMatrix {
        data,
        n_nodes: n,
        frame_name: frame.name(),
        state: *state,
        grid_extent: grid.extent(),
        grid_points: grid.points_per_axis(),
        raw_asymmetry,
    })
}

/// Matrix-free action of the linearized operator on a batch of fluctuation
/// pairs; used where the dense matrix would not fit (N = 24 checks).
pub fn apply_linearized_batch<T: Real>(
    state: &BiMaxwellParams<T>,
    frame: OperatorFrame<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    inputs: &[DistributionField<T>],
) -> Result<Vec<DistributionField<T>>> {
    for g in inputs {
        g.expect_frame(Frame::Fluctuation)?;
    }
    let n = grid.len();
    let nb = inputs.len();
    let tables = state_tables(state, &frame, species, grid);
    let nodes: Vec<Vec3<T>> = grid.nodes().collect();
    let h3 = grid.node_weight();
    let cutoff_sq = T::of(4.0) * grid.extent() * grid.extent();
    let gamma = species.gamma;
    let msum = species.mass_sum();
    let masses = [species.m_a, species.m_b];
    let c_beta = [
        [T::one(), T::of(2.0) * masses[1] / msum],
        [T::of(2.0) * masses[0] / msum, T::one()],
    ];
    let c_alpha = [
        [T::one(), T::of(2.0) * masses[0] / msum],
        [T::of(2.0) * masses[1] / msum, T::one()],
    ];
    let c_phi = species.c_phi;
    let exp_floor = T::of(-120.0);
    let ga: Vec<&[T]> = inputs.iter().map(|f| f.species(Species::A)).collect();
    let gb: Vec<&[T]> = inputs.iter().map(|f| f.species(Species::B)).collect();

    // rows[i] = per-batch [out_A(i), out_B(i)].
    let rows: Vec<Vec<[T; 2]>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v = nodes[i];
            let mut acc = vec![[T::zero(); 2]; nb];
            let mut stencil_p = [(0usize, T::zero()); 64];
            let mut stencil_sp = [(0usize, T::zero()); 64];
            for (j, &v_star) in nodes.iter().enumerate() {
                if j == i {
                    continue;
                }
                let u = sub(v, v_star);
                let r2 = norm_sq(u);
                if r2 > cutoff_sq {
                    continue;
                }
                let r = r2.sqrt();
                let r_pow = r.powf(gamma);
                let mut loss_cross = [[T::zero(); 2]; 2];
                for ai in 0..2 {
                    for bi in 0..2 {
                        let arg = tables.log_mu_d[ai].eval(v)
                            + T::of(0.5) * tables.log_rho_w_nodes[bi][j]
                            - T::of(0.5) * tables.log_rho_w_nodes[ai][i];
                        loss_cross[ai][bi] = if arg > exp_floor { arg.exp() } else { T::zero() };
                    }
                }
                for (omega, w) in angular.iter() {
                    let proj = dot(u, omega);
                    let cos_theta = proj / r;
                    let b_ang = species.angular(cos_theta);
                    if b_ang == T::zero() {
                        continue;
                    }
                    let kern = w * r_pow * b_ang;
                    let proj_omega = [proj * omega[0], proj * omega[1], proj * omega[2]];
                    for ai in 0..2 {
                        for bi in 0..2 {
                            let cb = c_beta[ai][bi];
                            let ca = c_alpha[ai][bi];
                            let vp = [
                                v[0] - cb * proj_omega[0],
                                v[1] - cb * proj_omega[1],
                                v[2] - cb * proj_omega[2],
                            ];
                            let vsp = [
                                v_star[0] + ca * proj_omega[0],
                                v_star[1] + ca * proj_omega[1],
                                v_star[2] + ca * proj_omega[2],
                            ];
                            let scale = kern * c_phi[ai][bi] * h3;
                            let arg1 = tables.log_mu_d[ai].eval(vp)
                                + T::of(0.5) * tables.log_rho_w[bi].eval(vsp)
                                - T::of(0.5) * tables.log_rho_w_nodes[ai][i];
                            if arg1 > exp_floor {
                                let coef = scale * arg1.exp();
                                let cnt = grid.stencil(vsp, &mut stencil_sp);
                                for k in 0..nb {
                                    let src = if bi == 0 { ga[k] } else { gb[k] };
                                    let mut interp = T::zero();
                                    for &(idx, wgt) in &stencil_sp[..cnt] {
                                        interp += wgt * src[idx];
                                    }
                                    acc[k][ai] -= coef * interp;
                                }
                            }
                            let arg2 = T::of(0.5) * tables.log_rho_w[ai].eval(vp)
                                + tables.log_mu_d[bi].eval(vsp)
                                - T::of(0.5) * tables.log_rho_w_nodes[ai][i];
                            if arg2 > exp_floor {
                                let coef = scale * arg2.exp();
                                let cnt = grid.stencil(vp, &mut stencil_p);
                                for k in 0..nb {
                                    let src = if ai == 0 { ga[k] } else { gb[k] };
                                    let mut interp = T::zero();
                                    for &(idx, wgt) in &stencil_p[..cnt] {
                                        interp += wgt * src[idx];
                                    }
                                    acc[k][ai] -= coef * interp;
                                }
                            }
                            for k in 0..nb {
                                let src_b = if bi == 0 { ga[k] } else { gb[k] };
                                let src_a = if ai == 0 { ga[k] } else { gb[k] };
                                acc[k][ai] += scale
                                    * (loss_cross[ai][bi] * src_b[j]
                                        + tables.mu_d[bi][j] * src_a[i]);
                            }
                        }
                    }
                }
            }
            acc
        })
        .collect();

    let mut outputs: Vec<DistributionField<T>> =
        (0..nb).map(|_| DistributionField::zeros(Frame::Fluctuation, n)).collect();
    for (i, row) in rows.iter().enumerate() {
        for (k, pair) in row.iter().enumerate() {
            outputs[k].species_mut(Species::A)[i] = pair[0];
            outputs[k].species_mut(Species::B)[i] = pair[1];
        }
    }
    Ok(outputs)
}

/// The six kernel-basis vector pairs and an internally orthonormalized frame
/// for projections.
pub struct KernelBasis<T: Real> {
    /// The stated vectors `X_0 ... X_5`, discretized.
    pub vectors: [DistributionField<T>; 6],
    /// Lattice-orthonormalized copies (modified Gram-Schmidt); projections
    /// use these so idempotence holds to roundoff.
    pub ortho: [DistributionField<T>; 6],
    /// Gram matrix of the stated vectors.
    pub gram: [[T; 6]; 6],
    pub state: BiMaxwellParams<T>,
}

/// Builds the kernel basis at the given state.
///
/// The momentum vectors are normalized by `sqrt(θ ρ)` with
/// `ρ = m^A n^A + m^B n^B`, which is what makes the stated family orthonormal
/// in `(L²_v)²`; the density and energy vectors carry `1/sqrt(n^α)` and
/// `1/sqrt(6n)` as stated.
pub fn kernel_basis<T: Real>(
    state: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    grid: &VelocityGrid<T>,
) -> Result<KernelBasis<T>> {
    let theta = state.temperature;
    let u = state.bulk_velocity;
    let n_tot = state.total_density();
    let rho = state.mass_density(species);
    let sqrt_mu = |s: Species, v: Vec3<T>| -> T {
        maxwellian(&state.params(s), species.mass(s), v).sqrt()
    };
    let mut vectors: Vec<DistributionField<T>> = Vec::with_capacity(6);
    // X0, X1: species densities.
    for s in Species::BOTH {
        let dens = state.params(s).density;
        let field = DistributionField::sample(Frame::Fluctuation, grid, |sp, v| {
            if sp == s {
                sqrt_mu(s, v) / dens.sqrt()
            } else {
                T::zero()
            }
        });
        vectors.push(field);
    }
    // X2..X4: momentum components, normalized with the mass density.
    for k in 0..3 {
        let norm = (theta * rho).sqrt();
        let field = DistributionField::sample(Frame::Fluctuation, grid, |sp, v| {
            species.mass(sp) * (v[k] - u[k]) / norm * sqrt_mu(sp, v)
        });
        vectors.push(field);
    }
    // X5: energy.
    let norm5 = (T::of(6.0) * n_tot).sqrt();
    vectors.push(DistributionField::sample(Frame::Fluctuation, grid, |sp, v| {
        let m = species.mass(sp);
        (m * norm_sq(sub(v, u)) / theta - T::of(3.0)) / norm5 * sqrt_mu(sp, v)
    }));

    let mut gram = [[T::zero(); 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            gram[i][j] = pair_inner(&vectors[i], &vectors[j], grid)?;
        }
    }

    // Modified Gram-Schmidt for the projection frame.
    let mut ortho: Vec<DistributionField<T>> = Vec::with_capacity(6);
    for i in 0..6 {
        let mut w = vectors[i].clone();
        for e in &ortho {
            let c = pair_inner(&w, e, grid)?;
            w.axpy(-c, e)?;
        }
        let nrm = pair_inner(&w, &w, grid)?.sqrt();
        if nrm <= T::zero() {
            return Err(Error::Numerical("kernel basis degenerated on this grid".into()));
        }
        ortho.push(w.scaled(T::one() / nrm));
    }

    let vectors: [DistributionField<T>; 6] = vectors.try_into().map_err(|_| Error::Shape("basis".into()))?;
    let ortho: [DistributionField<T>; 6] = ortho.try_into().map_err(|_| Error::Shape("basis".into()))?;
    Ok(KernelBasis { vectors, ortho, gram, state: *state })
}

/// Inner product of two fluctuation pairs: `Σ_s h³ Σ_i a^s_i b^s_i`.
pub fn pair_inner<T: Real>(
    a: &DistributionField<T>,
    b: &DistributionField<T>,
    grid: &VelocityGrid<T>,
) -> Result<T> {
    let mut total = T::zero();
    for s in Species::BOTH {
        total += inner_v(a.species(s), b.species(s), grid)?;
    }
    Ok(total)
}

pub fn pair_norm<T: Real>(a: &DistributionField<T>, grid: &VelocityGrid<T>) -> Result<T> {
    Ok(pair_inner(a, a, grid)?.sqrt())
}

/// Macroscopic projection `𝒫f = Σ_i <f, X_i> X_i` (orthonormal frame).
pub fn project_macro<T: Real>(
    f: &DistributionField<T>,
    basis: &KernelBasis<T>,
    grid: &VelocityGrid<T>,
) -> Result<DistributionField<T>> {
    f.expect_frame(Frame::Fluctuation)?;
    let mut out = DistributionField::zeros(Frame::Fluctuation, f.nodes());
    for e in &basis.ortho {
        let c = pair_inner(f, e, grid)?;
        out.axpy(c, e)?;
    }
    Ok(out)
}

/// Micro part `(I - 𝒫) f`.
pub fn project_micro<T: Real>(
    f: &DistributionField<T>,
    basis: &KernelBasis<T>,
    grid: &VelocityGrid<T>,
) -> Result<DistributionField<T>> {
    let macro_part = project_macro(f, basis, grid)?;
    let mut out = f.clone();
    out.axpy(-T::one(), &macro_part)?;
    Ok(out)
}

/// Result of a micro-subspace solve.
pub struct MicroSolve<T: Real> {
    pub solution: DistributionField<T>,
    pub iterations: usize,
    pub relative_residual: T,
    pub compat_defect: T,
}

/// Solves `L f = R` on the micro subspace: checks the compatibility
/// `<R, X_i> = 0` within `tol_compat * ‖R‖`, projects, and runs conjugate
/// gradients on the projected, ridge-regularized operator.
pub fn solve_micro<T: Real>(
    matrix: &OperatorMatrix<T>,
    rhs: &DistributionField<T>,
    basis: &KernelBasis<T>,
    grid: &VelocityGrid<T>,
    tol_compat: T,
) -> Result<MicroSolve<T>> {
    rhs.expect_frame(Frame::Fluctuation)?;
    let rhs_norm = pair_norm(rhs, grid)?;
    let mut compat_defect = T::zero();
    for e in &basis.ortho {
        compat_defect = compat_defect.max(pair_inner(rhs, e, grid)?.abs());
    }
    if rhs_norm == T::zero() {
        return Ok(MicroSolve {
            solution: DistributionField::zeros(Frame::Fluctuation, rhs.nodes()),
            iterations: 0,
            relative_residual: T::zero(),
            compat_defect,
        });
    }
    if compat_defect > tol_compat * rhs_norm {
        return Err(Error::Solvability {
            defect: compat_defect.to_f64_lossy(),
            tol: (tol_compat * rhs_norm).to_f64_lossy(),
        });
    }

    let projected = project_micro(rhs, basis, grid)?;
    let b = projected.to_flat();
    let size = matrix.size();
    let ridge = T::of(1e-12) * matrix.trace() / T::of_usize(size);

    let project_flat = |x: &[T]| -> Vec<T> {
        let f = DistributionField::from_flat(Frame::Fluctuation, x);
        let p = project_micro(&f, basis, grid).expect("projection");
        p.to_flat()
    };
    let op = |x: &[T]| -> Vec<T> {
        let px = project_flat(x);
        let lpx = matrix.apply_flat(&px);
        let plpx = project_flat(&lpx);
        plpx.iter().zip(x).map(|(&a, &xi)| a + ridge * xi).collect()
    };

    // Conjugate gradients on the SPD projected operator.
    let dot_flat = |a: &[T], b: &[T]| -> T {
        let prods: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
        tree_sum(&prods)
    };
    let mut x = vec![T::zero(); size];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rs = dot_flat(&r, &r);
    let b_norm = rs.sqrt();
    let tol = T::of(1e-12) * b_norm;
    let max_iter = 1000;
    let mut iterations = 0;
    while rs.sqrt() > tol && iterations < max_iter {
        let ap = op(&p);
        let denom = dot_flat(&p, &ap);
        if denom <= T::zero() {
            return Err(Error::Numerical(
                "micro solve lost positive-definiteness (grid too coarse?)".into(),
            ));
        }
        let alpha = rs / denom;
        for k in 0..size {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rs_new = dot_flat(&r, &r);
        let beta = rs_new / rs;
        for k in 0..size {
            p[k] = r[k] + beta * p[k];
        }
        rs = rs_new;
        iterations += 1;
    }
    if rs.sqrt() > T::of(1e-6) * b_norm {
        return Err(Error::Numerical(format!(
            "micro solve stagnated: residual {:e} after {iterations} iterations",
            (rs.sqrt() / b_norm).to_f64_lossy()
        )));
    }
    let solution = project_flat(&x);
    let sol = DistributionField::from_flat(Frame::Fluctuation, &solution);
    // Residual against the unprojected right-hand side's micro part.
    let lx = matrix.apply_flat(&sol.to_flat());
    let mut res = T::zero();
    for k in 0..size {
        let d = lx[k] - b[k];
        res += d * d;
    }
    let relative_residual = res.sqrt() / b_norm.max(T::min_positive_value());
    Ok(MicroSolve { solution: sol, iterations, relative_residual, compat_defect })
}

/// Coercivity estimate: the smallest generalized eigenvalue of
/// `<L f, f> / |f|_ν²` over the micro subspace, by inverse power iteration
/// with conjugate-gradient inner solves.
pub fn coercivity<T: Real>(
    matrix: &OperatorMatrix<T>,
    basis: &KernelBasis<T>,
    nu: &[Vec<T>; 2],
    grid: &VelocityGrid<T>,
) -> Result<T> {
    let n = grid.len();
    let size = 2 * n;
    let nu_flat: Vec<T> = nu[0].iter().chain(nu[1].iter()).copied().collect();
    if nu_flat.len() != size {
        return Err(Error::Shape("collision frequency field size mismatch".into()));
    }
    let project_flat = |x: &[T]| -> Vec<T> {
        let f = DistributionField::from_flat(Frame::Fluctuation, x);
        project_micro(&f, basis, grid).expect("projection").to_flat()
    };
    let dot_flat = |a: &[T], b: &[T]| -> T {
        let prods: Vec<T> = a.iter().zip(b).map(|(&x, &y)| x * y).collect();
        tree_sum(&prods)
    };
    let ridge = T::of(1e-10) * matrix.trace() / T::of_usize(size);
    let op = |x: &[T]| -> Vec<T> {
        let px = project_flat(x);
        let lpx = matrix.apply_flat(&px);
        let plpx = project_flat(&lpx);
        plpx.iter().zip(x).map(|(&a, &xi)| a + ridge * xi).collect()
    };
    let cg = |b: &[T]| -> Result<Vec<T>> {
        let mut x = vec![T::zero(); size];
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut rs = dot_flat(&r, &r);
        let tol = T::of(1e-10) * rs.sqrt();
        for _ in 0..600 {
            if rs.sqrt() <= tol {
                break;
            }
            let ap = op(&p);
            let denom = dot_flat(&p, &ap);
            if denom <= T::zero() {
                return Err(Error::Numerical("coercivity inner solve lost SPD".into()));
            }
            let alpha = rs / denom;
            for k in 0..size {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            let rs_new = dot_flat(&r, &r);
            let beta = rs_new / rs;
            for k in 0..size {
                p[k] = r[k] + beta * p[k];
            }
            rs = rs_new;
        }
        Ok(x)
    };

    // Deterministic start vector in the micro subspace.
    let mut x: Vec<T> = (0..size)
        .map(|k| {
            let t = T::of_usize(k % 97) / T::of(97.0);
            (T::of(2.0) * T::PI() * t).sin() + T::of(0.5)
        })
        .collect();
    x = project_flat(&x);
    let mut lambda_prev = T::max_value();
    let mut lambda = lambda_prev;
    for _ in 0..60 {
        let bx: Vec<T> = x.iter().zip(&nu_flat).map(|(&v, &w)| v * w).collect();
        let y = cg(&bx)?;
        let y = project_flat(&y);
        let ynorm = dot_flat(&y, &y).sqrt();
        if ynorm <= T::zero() {
            return Err(Error::Numerical("coercivity iteration collapsed".into()));
        }
        x = y.iter().map(|&v| v / ynorm).collect();
        let lx = matrix.apply_flat(&x);
        let num = dot_flat(&x, &lx);
        let den: T = {
            let prods: Vec<T> = x.iter().zip(&nu_flat).map(|(&v, &w)| v * v * w).collect();
            tree_sum(&prods)
        };
        lambda = num / den;
        if (lambda - lambda_prev).abs() <= T::of(1e-10) * lambda.abs() {
            break;
        }
        lambda_prev = lambda;
    }
    if lambda <= T::zero() {
        return Err(Error::Numerical(format!(
            "coercivity estimate nonpositive ({lambda:e}): grid too coarse"
        )));
    }
    Ok(lambda)
}

/// Rayleigh quotient `<L f, f> / |f|_ν²` for one fluctuation pair.
pub fn rayleigh_quotient<T: Real>(
    matrix: &OperatorMatrix<T>,
    f: &DistributionField<T>,
    nu: &[Vec<T>; 2],
) -> Result<T> {
    f.expect_frame(Frame::Fluctuation)?;
    let x = f.to_flat();
    let lx = matrix.apply_flat(&x);
    let mut num = T::zero();
    for (a, b) in x.iter().zip(&lx) {
        num += *a * *b;
    }
    let mut den = T::zero();
    let n = f.nodes();
    for s in 0..2 {
        for i in 0..n {
            den += nu[s][i] * x[s * n + i] * x[s * n + i];
        }
    }
    if den <= T::zero() {
        return Err(Error::DegenerateState("zero ν-norm".into()));
    }
    Ok(num / den)
}
