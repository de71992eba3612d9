//! Hilbert expansion assembly: the leading bi-Maxwellian term, the forcing
//! `R₀`, the first corrector `f₁` (macro + micro), weighted remainder frames,
//! and truncation residuals of the scaled kinetic system.

use crate::collision::vector_collision_term;
use crate::error::{Error, Result};
use crate::field::{DistributionField, Frame};
use crate::fluid::{
    d_axis, euler_rhs_inviscid, linear_euler_solve, linear_euler_sources,
    FluidState, FluidTrajectory, LinearEulerSources, SourceTable,
};
use crate::grids::{AngularRule, SpatialGrid, VelocityGrid};
use crate::linearized::{
    assemble_l, kernel_basis, pair_norm, project_macro, solve_micro, OperatorFrame,
};
use crate::real::{norm, norm_sq, sub, tree_sum, Real, Vec3};
use crate::species::{maxwellian, BiMaxwellParams, GlobalFrame, Species, SpeciesPair};

/// Leading expansion term: the local bi-Maxwellian sampled at every cell.
pub fn build_f0<T: Real>(
    state: &FluidState<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<Vec<DistributionField<T>>> {
    state.validate_positive()?;
    (0..state.grid.len())
        .map(|c| Ok(state.bi_maxwell_at(c)?.sample(species, vgrid)))
        .collect()
}

/// Spatial gradients of the fluid fields, centered differences per axis.
struct StateGradients<T: Real> {
    dn_a: Vec<Vec<T>>,
    dn_b: Vec<Vec<T>>,
    du: Vec<[Vec<T>; 3]>,
    dtheta: Vec<Vec<T>>,
    dim: usize,
}

fn state_gradients<T: Real>(state: &FluidState<T>) -> StateGradients<T> {
    let grid = &state.grid;
    let dim = grid.dimension();
    StateGradients {
        dn_a: (0..dim).map(|a| d_axis(&state.n_a, grid, a)).collect(),
        dn_b: (0..dim).map(|a| d_axis(&state.n_b, grid, a)).collect(),
        du: (0..dim)
            .map(|a| {
                [
                    d_axis(&state.u[0], grid, a),
                    d_axis(&state.u[1], grid, a),
                    d_axis(&state.u[2], grid, a),
                ]
            })
            .collect(),
        dtheta: (0..dim).map(|a| d_axis(&state.theta, grid, a)).collect(),
        dim,
    }
}

/// Forcing of the first-order equation:
/// `R₀^α = -(∂_t + v·∇_x) μ_δ^α / sqrt(μ_δ^α)`, with `∂_t` eliminated through
/// the supplied time-derivative fields (normally [`euler_rhs_inviscid`], so
/// the compatibility conditions hold to quadrature precision) and the
/// logarithmic derivative expanded analytically in `v`.
pub fn build_r0_with_rhs<T: Real>(
    state: &FluidState<T>,
    rhs: &FluidState<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<Vec<DistributionField<T>>> {
    state.validate_positive()?;
    let grads = state_gradients(state);
    let mut out = Vec::with_capacity(state.grid.len());
    for c in 0..state.grid.len() {
        let params = state.bi_maxwell_at(c)?;
        let theta = params.temperature;
        let u = params.bulk_velocity;
        let n = [params.n_a, params.n_b];
        let dt_n = [rhs.n_a[c], rhs.n_b[c]];
        let dt_u = [rhs.u[0][c], rhs.u[1][c], rhs.u[2][c]];
        let dt_th = rhs.theta[c];
        let field = DistributionField::sample(Frame::Fluctuation, vgrid, |s, v| {
            let si = s.index();
            let m = species.mass(s);
            // Material derivatives along the free-streaming direction v.
            let mut d_n = dt_n[si];
            let mut d_th = dt_th;
            let mut d_u = dt_u;
            for a in 0..grads.dim {
                let dn = if si == 0 { &grads.dn_a } else { &grads.dn_b };
                d_n += v[a] * dn[a][c];
                d_th += v[a] * grads.dtheta[a][c];
                for k in 0..3 {
                    d_u[k] += v[a] * grads.du[a][k][c];
                }
            }
            let w = sub(v, u);
            let mut log_deriv = d_n / n[si];
            for k in 0..3 {
                log_deriv += m * w[k] * d_u[k] / theta;
            }
            log_deriv += (m * norm_sq(w) / (T::of(2.0) * theta) - T::of(1.5)) * d_th / theta;
            let sqrt_mu = maxwellian(&params.params(s), m, v).sqrt();
            -sqrt_mu * log_deriv
        });
        out.push(field);
    }
    Ok(out)
}

/// `R₀` with the time derivative taken from the inviscid Euler right-hand
/// side of the state itself.
pub fn build_r0<T: Real>(
    state: &FluidState<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<Vec<DistributionField<T>>> {
    let rhs = euler_rhs_inviscid(state, species)?;
    build_r0_with_rhs(state, &rhs, species, vgrid)
}

/// The macroscopic part of a first-order corrector with coefficients
/// `(n₁^A, n₁^B, u₁, θ₁)` at one state:
/// `[n₁^α/n_δ^α + u₁·m^α(v-u_δ)/θ_δ + (θ₁/(6θ_δ))(m^α|v-u_δ|²/θ_δ - 3)] sqrt(μ_δ^α)`.
pub fn macro_fluctuation<T: Real>(
    params: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
    n1: [T; 2],
    u1: Vec3<T>,
    theta1: T,
) -> DistributionField<T> {
    let theta = params.temperature;
    let u = params.bulk_velocity;
    let n = [params.n_a, params.n_b];
    DistributionField::sample(Frame::Fluctuation, vgrid, |s, v| {
        let si = s.index();
        let m = species.mass(s);
        let w = sub(v, u);
        let mut coeff = n1[si] / n[si];
        for k in 0..3 {
            coeff += u1[k] * m * w[k] / theta;
        }
        coeff += theta1 / (T::of(6.0) * theta) * (m * norm_sq(w) / theta - T::of(3.0));
        coeff * maxwellian(&params.params(s), m, v).sqrt()
    })
}

/// Weighted remainder frame: `h^α = w(v) F^α / sqrt(μ_M^α)`.
pub fn weighted_remainder<T: Real>(
    f_raw: &DistributionField<T>,
    frame: &GlobalFrame<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<DistributionField<T>> {
    f_raw.expect_frame(Frame::Raw)?;
    let global = frame.global_params();
    let mut out = DistributionField::zeros(Frame::Weighted, vgrid.len());
    for s in Species::BOTH {
        let m = species.mass(s);
        let src = f_raw.species(s);
        let dst = out.species_mut(s);
        for (i, v) in vgrid.nodes().enumerate() {
            let w = frame.weight(v);
            let mu = maxwellian(&global, m, v);
            dst[i] = w * src[i] / mu.sqrt();
        }
    }
    Ok(out)
}

/// `sup_v (1+|v|)^p (μ^s_δ)^{-b} |f^α|` per species, the weighted-decay
/// functional of the corrector construction (`μ^s_δ` carries the lighter
/// mass).
pub fn weighted_decay_sup<T: Real>(
    f: &DistributionField<T>,
    params: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
    p: T,
    b: T,
) -> Result<[T; 2]> {
    let lo = species.max_mass() / (T::of(2.0) * species.mass_sum());
    if b <= lo || b >= T::of(0.5) {
        return Err(Error::Domain(format!(
            "decay exponent b must lie in (max m/(2Σm), 1/2) = ({lo}, 0.5)"
        )));
    }
    let m_s = species.min_mass();
    let light = if species.m_a <= species.m_b { Species::A } else { Species::B };
    let mut out = [T::zero(); 2];
    for s in Species::BOTH {
        let vals = f.species(s);
        let mut sup = T::zero();
        for (i, v) in vgrid.nodes().enumerate() {
            let mu_s = maxwellian(&params.params(light), m_s, v);
            let weight = (T::one() + norm(v)).powf(p) * mu_s.powf(-b);
            sup = sup.max(weight * vals[i].abs());
        }
        out[s.index()] = sup;
    }
    Ok(out)
}

/// Options for the first-order pipeline.
pub struct FirstOrderOptions<T: Real> {
    /// Relative compatibility tolerance passed to the micro solve.
    pub tol_compat: T,
    /// Build `∂_t F₁` by central differencing `f₁` at `t ± dt_fd`.
    pub with_time_derivative: bool,
    pub dt_fd: T,
    /// Number of time levels at which micro moments feed the macro sources
    /// (1 = frozen sources from the final time).
    pub macro_source_levels: usize,
    /// CFL number for the macro linear solve.
    pub cfl: T,
}

impl<T: Real> Default for FirstOrderOptions<T> {
    fn default() -> Self {
        Self {
            tol_compat: T::of(1e-3),
            with_time_derivative: false,
            dt_fd: T::of(1e-2),
            macro_source_levels: 1,
            cfl: T::of(0.4),
        }
    }
}

/// First-order macro initial data `(n₁^A, n₁^B, u₁, θ₁)` as closures of the
/// cell position.
pub type MacroInit<T> = dyn Fn(Vec3<T>) -> ([T; 2], Vec3<T>, T) + Sync;

/// Everything the rate studies need from the first-order construction at one
/// time, restricted to a strided subset of cells.
pub struct FirstOrderBuild<T: Real> {
    pub eval_cells: Vec<usize>,
    pub eval_grid: SpatialGrid<T>,
    pub state: FluidState<T>,
    /// Raw `F₀` pairs at the evaluation cells.
    pub f0: Vec<DistributionField<T>>,
    /// Fluctuation forcing `R₀` at the evaluation cells.
    pub r0: Vec<DistributionField<T>>,
    /// Fluctuation corrector `f₁` (macro + micro).
    pub f1: Vec<DistributionField<T>>,
    /// `F₁ = sqrt(μ_δ) f₁`, signed raw-frame values.
    pub f1_raw: Vec<DistributionField<T>>,
    /// `sqrt(μ_δ) (L_δ f₁)` — the linearized collision term of the residual.
    pub lin_term: Vec<DistributionField<T>>,
    /// `∂_t F₁` by central time differences (when requested).
    pub dt_f1_raw: Option<Vec<DistributionField<T>>>,
    pub compat_defects: Vec<T>,
    pub micro_iterations: Vec<usize>,
}

fn sqrt_mu_scale<T: Real>(
    f: &DistributionField<T>,
    params: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
    frame: Frame,
) -> DistributionField<T> {
    let mut out = DistributionField::zeros(frame, vgrid.len());
    for s in Species::BOTH {
        let m = species.mass(s);
        let p = params.params(s);
        let src = f.species(s);
        let dst = out.species_mut(s);
        for (i, v) in vgrid.nodes().enumerate() {
            dst[i] = src[i] * maxwellian(&p, m, v).sqrt();
        }
    }
    out
}

/// Micro correctors at a strided set of cells of one snapshot: assembles
/// `L_δ` per cell and solves on the micro subspace. Returns the solves plus
/// the per-cell operators when `keep_matrices` is set.
#[allow(clippy::type_complexity)]
fn micro_at_cells<T: Real>(
    state: &FluidState<T>,
    cells: &[usize],
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    tol_compat: T,
    keep_matrices: bool,
) -> Result<(
    Vec<DistributionField<T>>,
    Vec<T>,
    Vec<usize>,
    Vec<Option<crate::linearized::OperatorMatrix<T>>>,
)> {
    let r0 = build_r0(state, species, vgrid)?;
    let mut micro = Vec::with_capacity(cells.len());
    let mut defects = Vec::with_capacity(cells.len());
    let mut iters = Vec::with_capacity(cells.len());
    let mut mats = Vec::with_capacity(cells.len());
    for &c in cells {
        let params = state.bi_maxwell_at(c)?;
        let matrix = assemble_l(&params, OperatorFrame::Local, species, vgrid, angular)?;
        let basis = kernel_basis(&params, species, vgrid)?;
        let solve = solve_micro(&matrix, &r0[c], &basis, vgrid, tol_compat)?;
        micro.push(solve.solution);
        defects.push(solve.compat_defect);
        iters.push(solve.iterations);
        mats.push(if keep_matrices { Some(matrix) } else { None });
    }
    Ok((micro, defects, iters, mats))
}

/// Interpolates per-eval-cell Burnett moments onto the full fluid grid by
/// periodic linear interpolation (d = 1 pipelines).
fn upsample_sources<T: Real>(
    coarse: &LinearEulerSources<T>,
    eval_cells: &[usize],
    grid: &SpatialGrid<T>,
) -> LinearEulerSources<T>
where
    T: Real,
{
    let m = grid.cells_per_axis();
    let ne = eval_cells.len();
    let stride = m / ne;
    let mut out = LinearEulerSources::zeros(grid);
    for c in 0..m {
        let pos = c as f64 / stride as f64;
        let lo = pos.floor() as usize % ne;
        let hi = (lo + 1) % ne;
        let w = T::of(pos - pos.floor());
        for k in 0..3 {
            out.h[k][c] = coarse.h[k][lo] * (T::one() - w) + coarse.h[k][hi] * w;
        }
        out.g_hat[c] = coarse.g_hat[lo] * (T::one() - w) + coarse.g_hat[hi] * w;
    }
    out
}

/// Builds the first-order corrector along an Euler trajectory at time `t`.
///
/// The micro part solves `L_δ f = R₀` per cell; the macro coefficients start
/// from the supplied initial data (zero if `None`) and evolve by the
/// linearized Euler system with Burnett sources assembled from the micro
/// part at `macro_source_levels` time samples.
pub fn first_order_build<T: Real>(
    trajectory: &FluidTrajectory<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    t: T,
    eval_stride: usize,
    macro_init: Option<&MacroInit<T>>,
    opts: &FirstOrderOptions<T>,
) -> Result<FirstOrderBuild<T>> {
    let state = trajectory.at(t);
    let grid = state.grid.clone();
    if grid.dimension() != 1 {
        return Err(Error::Config("the first-order pipeline runs on slab (d = 1) states".into()));
    }
    let m_cells = grid.cells_per_axis();
    if eval_stride == 0 || m_cells % eval_stride != 0 {
        return Err(Error::Config(format!(
            "eval stride must divide the cell count {m_cells}"
        )));
    }
    let eval_cells: Vec<usize> = (0..m_cells).step_by(eval_stride).collect();
    let eval_grid = SpatialGrid::new(grid.period(), eval_cells.len(), 1)?;

    // Micro part at the final time, operators kept for the residual term.
    let (micro_t, defects, iters, mats) = micro_at_cells(
        &state,
        &eval_cells,
        species,
        vgrid,
        angular,
        opts.tol_compat,
        true,
    )?;

    // Macro coefficients at t (and the trajectory for time derivatives).
    let macro_traj: Option<FluidTrajectory<T>> = match macro_init {
        None => None,
        Some(init) => {
            let init_state = FluidState::sample(&grid, |x| {
                let (n1, u1, th1) = init(x);
                (n1[0], n1[1], u1, th1)
            });
            // Sources from micro moments at sampled levels.
            let mut level_times = Vec::new();
            let mut level_sources = Vec::new();
            let levels = opts.macro_source_levels.max(1);
            for li in 0..levels {
                let tl = if levels == 1 {
                    t
                } else {
                    t * T::of_usize(li) / T::of_usize(levels - 1)
                };
                let (micro_l, coarse_state) = if (tl - t).abs() <= T::of(1e-14) * t.max(T::one()) {
                    (micro_t.clone(), state.clone())
                } else {
                    let sl = trajectory.at(tl);
                    let (mm, _, _, _) = micro_at_cells(
                        &sl,
                        &eval_cells,
                        species,
                        vgrid,
                        angular,
                        opts.tol_compat,
                        false,
                    )?;
                    (mm, sl)
                };
                let coarse_bg = restrict_state(&coarse_state, &eval_cells, &eval_grid);
                let coarse = linear_euler_sources(&micro_l, &coarse_bg, species, vgrid)?;
                level_times.push(tl);
                level_sources.push(upsample_sources(&coarse, &eval_cells, &grid));
            }
            let table = SourceTable { times: level_times, sources: level_sources };
            Some(linear_euler_solve(&init_state, trajectory, &table, species, t.max(T::of(1e-9)), opts.cfl)?)
        }
    };

    let macro_coeffs_at = |tt: T, cell: usize| -> ([T; 2], Vec3<T>, T) {
        match &macro_traj {
            None => ([T::zero(); 2], [T::zero(); 3], T::zero()),
            Some(traj) => {
                let s = traj.at(tt);
                (
                    [s.n_a[cell], s.n_b[cell]],
                    [s.u[0][cell], s.u[1][cell], s.u[2][cell]],
                    s.theta[cell],
                )
            }
        }
    };

    // f₁ = macro + micro at the evaluation cells.
    let mut f1 = Vec::with_capacity(eval_cells.len());
    let mut f1_raw = Vec::with_capacity(eval_cells.len());
    let mut lin_term = Vec::with_capacity(eval_cells.len());
    let f0 = eval_cells
        .iter()
        .map(|&c| Ok(state.bi_maxwell_at(c)?.sample(species, vgrid)))
        .collect::<Result<Vec<_>>>()?;
    let r0_full = build_r0(&state, species, vgrid)?;
    let r0: Vec<DistributionField<T>> =
        eval_cells.iter().map(|&c| r0_full[c].clone()).collect();
    for (k, &c) in eval_cells.iter().enumerate() {
        let params = state.bi_maxwell_at(c)?;
        let (n1, u1, th1) = macro_coeffs_at(t, c);
        let mut f1_cell = macro_fluctuation(&params, species, vgrid, n1, u1, th1);
        f1_cell.axpy(T::one(), &micro_t[k])?;
        let matrix = mats[k].as_ref().expect("operator kept");
        let lf1 = matrix.apply(&f1_cell)?;
        lin_term.push(sqrt_mu_scale(&lf1, &params, species, vgrid, Frame::Raw));
        f1_raw.push(sqrt_mu_scale(&f1_cell, &params, species, vgrid, Frame::Raw));
        f1.push(f1_cell);
    }
    drop(mats);

    // ∂_t F₁ by central differences at t ± dt.
    let dt_f1_raw = if opts.with_time_derivative {
        let dt = opts.dt_fd;
        let mut sides = Vec::new();
        for sign in [-T::one(), T::one()] {
            let tt = t + sign * dt;
            let s_side = trajectory.at(tt);
            let (micro_side, _, _, _) = micro_at_cells(
                &s_side,
                &eval_cells,
                species,
                vgrid,
                angular,
                opts.tol_compat,
                false,
            )?;
            let mut raws = Vec::with_capacity(eval_cells.len());
            for (k, &c) in eval_cells.iter().enumerate() {
                let params = s_side.bi_maxwell_at(c)?;
                let (n1, u1, th1) = macro_coeffs_at(tt, c);
                let mut f1_cell = macro_fluctuation(&params, species, vgrid, n1, u1, th1);
                f1_cell.axpy(T::one(), &micro_side[k])?;
                raws.push(sqrt_mu_scale(&f1_cell, &params, species, vgrid, Frame::Raw));
            }
            sides.push(raws);
        }
        let scale = T::one() / (T::of(2.0) * dt);
        let mut out = Vec::with_capacity(eval_cells.len());
        for k in 0..eval_cells.len() {
            let mut d = sides[1][k].clone();
            d.axpy(-T::one(), &sides[0][k])?;
            out.push(d.scaled(scale));
        }
        Some(out)
    } else {
        None
    };

    Ok(FirstOrderBuild {
        eval_cells,
        eval_grid,
        state,
        f0,
        r0,
        f1,
        f1_raw,
        lin_term,
        dt_f1_raw,
        compat_defects: defects,
        micro_iterations: iters,
    })
}

/// Restriction of a fluid state to a strided cell subset.
pub fn restrict_state<T: Real>(
    state: &FluidState<T>,
    cells: &[usize],
    eval_grid: &SpatialGrid<T>,
) -> FluidState<T> {
    let take = |f: &[T]| -> Vec<T> { cells.iter().map(|&c| f[c]).collect() };
    FluidState {
        grid: eval_grid.clone(),
        n_a: take(&state.n_a),
        n_b: take(&state.n_b),
        u: [take(&state.u[0]), take(&state.u[1]), take(&state.u[2])],
        theta: take(&state.theta),
    }
}

/// The two ε-independent residual pieces of a truncated expansion.
///
/// With the equilibrium identity `Q(F₀, F₀) = 0` applied analytically, the
/// residual of `F = F₀ + ε F₁` in the scaled equation is
/// `piece₀ + ε piece₁` with
/// `piece₀ = (∂_t + v·∇)F₀ - Σ_β [Q(μ, F₁) + Q(F₁, μ)] = sqrt(μ)(L f₁ - R₀)`
/// and `piece₁ = (∂_t + v·∇)F₁ - Σ_β Q(F₁, F₁)`; at order zero `piece₀`
/// reduces to `-sqrt(μ) R₀` and `piece₁` is absent.
pub struct TruncationResidual<T: Real> {
    pub piece0: Vec<DistributionField<T>>,
    pub piece1: Option<Vec<DistributionField<T>>>,
    pub eval_grid: SpatialGrid<T>,
}

/// Assembles the residual pieces of the K = 0 or K = 1 truncation from a
/// first-order build.
pub fn truncation_residual<T: Real>(
    build: &FirstOrderBuild<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
    angular: &AngularRule<T>,
    order: usize,
) -> Result<TruncationResidual<T>> {
    if order > 1 {
        return Err(Error::Config("validated truncations stop at K = 1".into()));
    }
    let ne = build.eval_cells.len();
    let mut piece0 = Vec::with_capacity(ne);
    for k in 0..ne {
        let params = build.state.bi_maxwell_at(build.eval_cells[k])?;
        let neg_sqrt_mu_r0 =
            sqrt_mu_scale(&build.r0[k], &params, species, vgrid, Frame::Raw).scaled(-T::one());
        if order == 0 {
            piece0.push(neg_sqrt_mu_r0);
        } else {
            // sqrt(μ)(L f₁ - R₀).
            let mut p = build.lin_term[k].clone();
            p.axpy(T::one(), &neg_sqrt_mu_r0)?;
            piece0.push(p);
        }
    }
    let piece1 = if order == 1 {
        let dt_f1 = build
            .dt_f1_raw
            .as_ref()
            .ok_or_else(|| Error::Config("K = 1 residual needs the time derivative".into()))?;
        let dx = build.eval_grid.spacing();
        let mut out = Vec::with_capacity(ne);
        for k in 0..ne {
            // v·∇_x F₁ by centered differences on the evaluation ring.
            let prev = &build.f1_raw[(k + ne - 1) % ne];
            let next = &build.f1_raw[(k + 1) % ne];
            let mut transport = DistributionField::zeros(Frame::Raw, vgrid.len());
            for s in Species::BOTH {
                let p = prev.species(s);
                let nx = next.species(s);
                let dst = transport.species_mut(s);
                for (i, v) in vgrid.nodes().enumerate() {
                    dst[i] = v[0] * (nx[i] - p[i]) / (T::of(2.0) * dx);
                }
            }
            let quad = vector_collision_term(&build.f1_raw[k], species, vgrid, angular)?;
            let mut p = dt_f1[k].clone();
            p.axpy(T::one(), &transport)?;
            p.axpy(-T::one(), &quad)?;
            out.push(p);
        }
        Some(out)
    } else {
        None
    };
    Ok(TruncationResidual { piece0, piece1, eval_grid: build.eval_grid.clone() })
}

/// Residual norms at a given Knudsen number: `(L²_{x,v}, weighted sup)`.
pub fn residual_norms<T: Real>(
    residual: &TruncationResidual<T>,
    epsilon: T,
    frame: &GlobalFrame<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> (T, T) {
    let dx = residual.eval_grid.spacing();
    let global = frame.global_params();
    let mut l2_cells = Vec::new();
    let mut wsup = T::zero();
    for (k, p0) in residual.piece0.iter().enumerate() {
        let mut cell_sq = T::zero();
        for s in Species::BOTH {
            let m = species.mass(s);
            let a = p0.species(s);
            let b = residual.piece1.as_ref().map(|p1| p1[k].species(s));
            for (i, v) in vgrid.nodes().enumerate() {
                let mut r = a[i];
                if let Some(bb) = b {
                    r += epsilon * bb[i];
                }
                cell_sq += r * r;
                let h_weight = frame.weight(v) / maxwellian(&global, m, v).sqrt();
                wsup = wsup.max((h_weight * r).abs());
            }
        }
        l2_cells.push(cell_sq * vgrid.node_weight() * dx);
    }
    (tree_sum(&l2_cells).sqrt(), wsup)
}

/// Compatibility inner products `<R₀, X_i>` at every cell of a state, using
/// the local kernel basis; the hilbert-side view of the Euler solvability
/// conditions.
pub fn compatibility_defects<T: Real>(
    state: &FluidState<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<Vec<[T; 6]>> {
    let r0 = build_r0(state, species, vgrid)?;
    let mut out = Vec::with_capacity(state.grid.len());
    for c in 0..state.grid.len() {
        let params = state.bi_maxwell_at(c)?;
        let basis = kernel_basis(&params, species, vgrid)?;
        let mut defects = [T::zero(); 6];
        for (i, e) in basis.ortho.iter().enumerate() {
            defects[i] = crate::linearized::pair_inner(&r0[c], e, vgrid)?;
        }
        out.push(defects);
    }
    Ok(out)
}

/// Relative size of the micro part of a corrector: `‖(I-𝒫)f‖/‖f‖`.
pub fn micro_fraction<T: Real>(
    f: &DistributionField<T>,
    params: &BiMaxwellParams<T>,
    species: &SpeciesPair<T>,
    vgrid: &VelocityGrid<T>,
) -> Result<T> {
    let basis = kernel_basis(params, species, vgrid)?;
    let macro_part = project_macro(f, &basis, vgrid)?;
    let mut micro = f.clone();
    micro.axpy(-T::one(), &macro_part)?;
    Ok(pair_norm(&micro, vgrid)? / pair_norm(f, vgrid)?.max(T::min_positive_value()))
}
