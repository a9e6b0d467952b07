//! The semigroup `S(z) = exp(-z A)`: growth bounds, spectral splits, the
//! split surrogate of the essential growth bound, Lyapunov renormings and
//! scans along rays of a sector.
//!
//! Norms are operator norms in the `M_H` inner product unless stated
//! otherwise. At finite dimension every operator is compact, so the essential
//! norm is replaced by the norm on the range of `I - P` for a declared spectral
//! projector `P`; every result carries the `delta` that defines `P`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::association::AssociatedOperator;
use crate::coercivity::real_part_spectrum;
use crate::error::{Error, Result};
use crate::formmodel::classify;
use crate::numkernel::{
    c64, frobenius, general_eigs, identity, inverse, lyapunov_solve, matrix_exponential, numerical_rank,
    weighted_operator_norm, CMatrix, KernelError, C64,
};
use crate::sampling;

/// Minimum grid length for growth estimates.
pub const MIN_T_POINTS: usize = 8;
/// Eigenvalues closer than this to the split line are refused.
pub const SPLIT_TIE_TOL: f64 = 1e-10;
/// Relative tolerance for `P^2 = P` and `P A = A P`.
pub const SPLIT_INVARIANT_TOL: f64 = 1e-9;
/// Allowed gap between the fitted and the spectral essential growth.
pub const OMEGA_ESS_AGREEMENT: f64 = 1e-4;
/// Allowed gap between `r(S(1)(I - P))` and `exp(omega_ess)`.
pub const RADIUS_AGREEMENT: f64 = 1e-6;
/// Relative slack for norm bounds checked on a grid.
pub const NORM_SLACK: f64 = 1e-9;

/// `exp(-z A)`.
pub fn sample(op: &AssociatedOperator, z: C64) -> Result<CMatrix> {
    Ok(matrix_exponential(&(op.matrix() * (-z)))?)
}

/// Operator norm in the `M_H` inner product.
pub fn h_norm(op: &AssociatedOperator, m: &CMatrix) -> Result<f64> {
    Ok(weighted_operator_norm(m, op.h_gram())?)
}

/// `exp(-t A)` for every `t` in the grid. Uniform grids `t_k = k t_1` reuse
/// powers of `exp(-t_1 A)`.
pub fn semigroup_on_grid(a: &CMatrix, t_grid: &[f64]) -> Result<Vec<CMatrix>> {
    let Some(&t1) = t_grid.first() else { return Ok(Vec::new()) };
    let uniform = t1 > 0.0
        && t_grid.iter().enumerate().all(|(k, &t)| (t - (k + 1) as f64 * t1).abs() <= 1e-12 * t.abs().max(1.0));
    if !uniform {
        return t_grid.iter().map(|&t| Ok(matrix_exponential(&(a * c64(-t, 0.0)))?)).collect();
    }
    let step = matrix_exponential(&(a * c64(-t1, 0.0)))?;
    let mut out = Vec::with_capacity(t_grid.len());
    let mut current = step.clone();
    for _ in t_grid {
        out.push(current.clone());
        current = &current * &step;
    }
    Ok(out)
}

/// `count` equally spaced times from `start` to `stop`.
pub fn linear_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect()
}

/// `{0.1, 0.2, ..., 10}`.
pub fn default_t_grid() -> Vec<f64> {
    (1..=100).map(|k| k as f64 / 10.0).collect()
}

fn check_t_grid(t_grid: &[f64], min_points: usize) -> Result<()> {
    if t_grid.len() < min_points {
        return Err(Error::Input(format!("time grid needs at least {min_points} points, got {}", t_grid.len())));
    }
    if t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Input("time grid must be positive and strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub alpha: f64,
    pub embedding_constant: f64,
    /// `alpha / c_H^2`.
    pub epsilon: f64,
    /// `max_t |S(t)| e^{epsilon t}`; the certificate holds when this is `<= 1 + 1e-9`.
    pub worst_ratio: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    /// `max(-Re lambda)` over the spectrum of `A`.
    pub omega: f64,
    /// Smallest `w` with `|S(t)| <= e^{w t}` at every grid time.
    pub quasi_contraction_w: f64,
    pub t_grid: Vec<f64>,
    pub norms: Vec<f64>,
    pub eigen_residual: f64,
    /// Present when the source form is positive-coercive.
    pub decay_certificate: Option<DecayCertificate>,
}

pub fn growth_report(op: &AssociatedOperator, t_grid: &[f64]) -> Result<GrowthReport> {
    check_t_grid(t_grid, MIN_T_POINTS)?;
    let eig = general_eigs(op.matrix())?;
    let omega = eig.eigenvalues.iter().map(|l| -l.re).fold(f64::NEG_INFINITY, f64::max);
    let norms = semigroup_on_grid(op.matrix(), t_grid)?.iter().map(|s| h_norm(op, s)).collect::<Result<Vec<_>>>()?;
    let quasi_contraction_w = t_grid.iter().zip(&norms).map(|(t, n)| n.ln() / t).fold(f64::NEG_INFINITY, f64::max);
    let triple = op.triple();
    let alpha = real_part_spectrum(triple)?.min();
    let decay_certificate = if alpha > 0.0 {
        let c_h = triple.embedding_constant()?;
        let epsilon = alpha / (c_h * c_h);
        let worst_ratio = t_grid.iter().zip(&norms).map(|(t, n)| n * (epsilon * t).exp()).fold(0.0, f64::max);
        Some(DecayCertificate {
            alpha,
            embedding_constant: c_h,
            epsilon,
            worst_ratio,
            holds: worst_ratio <= 1.0 + NORM_SLACK,
        })
    } else {
        None
    };
    Ok(GrowthReport {
        omega,
        quasi_contraction_w,
        t_grid: t_grid.to_vec(),
        norms,
        eigen_residual: eig.residual,
        decay_certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSplit {
    pub delta: f64,
    #[serde(skip)]
    pub projector: CMatrix,
    pub dim_x1: usize,
    /// `max(-Re lambda)` over eigenvalues with `Re lambda > delta`; `None` if there are none.
    pub complement_growth: Option<f64>,
    /// Largest `-Re lambda` on the range of `P`; `None` if `P = 0`.
    pub x1_growth: Option<f64>,
    /// Eigenvalues in the range of `P`, as `[re, im]`.
    pub x1_eigenvalues: Vec<[f64; 2]>,
    pub idempotency_residual: f64,
    pub commutator_residual: f64,
}

/// Spectral projector onto the eigenvalues of `A` with `Re lambda <= delta`.
pub fn spectral_split(op: &AssociatedOperator, delta: f64) -> Result<SpectralSplit> {
    let a = op.matrix();
    let m = a.nrows();
    let eig = general_eigs(a)?;
    if let Some(l) = eig.eigenvalues.iter().find(|l| (l.re - delta).abs() < SPLIT_TIE_TOL) {
        return Err(Error::SplitTie { delta, eigenvalue: format!("{l}"), gap: (l.re - delta).abs() });
    }
    let selected: Vec<bool> = eig.eigenvalues.iter().map(|l| l.re <= delta).collect();
    let dim_x1 = selected.iter().filter(|&&s| s).count();
    let projector = if dim_x1 == 0 {
        CMatrix::zeros(m, m)
    } else if dim_x1 == m {
        identity(m)
    } else {
        let x = &eig.eigenvectors;
        let x_inv = inverse(x).map_err(|_| {
            Error::SplitInvariant("eigenvector matrix is singular; the operator is not diagonalisable".into())
        })?;
        let mut picked = x.clone();
        for (c, &s) in selected.iter().enumerate() {
            if !s {
                picked.column_mut(c).fill(c64(0.0, 0.0));
            }
        }
        picked * x_inv
    };
    let scale = frobenius(&projector).max(1.0);
    let idempotency_residual = frobenius(&(&projector * &projector - &projector)) / scale;
    let commutator_residual = frobenius(&(&projector * a - a * &projector)) / (scale * frobenius(a).max(1.0));
    if idempotency_residual > SPLIT_INVARIANT_TOL || commutator_residual > SPLIT_INVARIANT_TOL {
        return Err(Error::SplitInvariant(format!(
            "idempotency residual {idempotency_residual:.3e}, commutator residual {commutator_residual:.3e}"
        )));
    }
    if dim_x1 != 0 && dim_x1 != m && numerical_rank(&projector) != dim_x1 {
        return Err(Error::SplitInvariant("projector rank differs from the selected eigenvalue count".into()));
    }
    let growth = |keep: bool| {
        eig.eigenvalues.iter().zip(&selected).filter(|(_, &s)| s == keep).map(|(l, _)| -l.re).reduce(f64::max)
    };
    Ok(SpectralSplit {
        delta,
        dim_x1,
        complement_growth: growth(false),
        x1_growth: growth(true),
        x1_eigenvalues: eig.eigenvalues.iter().zip(&selected).filter(|(_, &s)| s).map(|(l, _)| [l.re, l.im]).collect(),
        projector,
        idempotency_residual,
        commutator_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialGrowth {
    pub delta: f64,
    pub dim_x1: usize,
    /// Least-squares slope of `log |S(t)(I - P)|` over the grid.
    pub omega_ess: f64,
    /// `-min{Re lambda : Re lambda > delta}`.
    pub omega_ess_spectral: f64,
    pub agreement: f64,
    pub agrees: bool,
    pub asymptotically_compact: bool,
    /// `r(S(1)(I - P))`, to be compared with `exp(omega_ess_spectral)`.
    pub spectral_radius_at_one: f64,
    pub radius_matches: bool,
    pub t_grid: Vec<f64>,
    pub complement_norms: Vec<f64>,
}

/// Asymptotically compact iff the essential growth is below this.
pub const COMPACTNESS_TOL: f64 = 1e-12;

pub fn essential_growth(op: &AssociatedOperator, split: &SpectralSplit, t_grid: &[f64]) -> Result<EssentialGrowth> {
    check_t_grid(t_grid, 3).map_err(|e| Error::Fit(e.to_string()))?;
    let Some(spectral) = split.complement_growth else {
        return Err(Error::Fit("the split leaves an empty complement".into()));
    };
    let m = op.dim();
    let complement = identity(m) - &split.projector;
    // S(t)(I - P) = exp(-t B)(I - P) for B = A(I - P) + lambda_c P; unlike
    // exp(-t A)(I - P) this does not amplify rounding in P by the growth on X_1
    let compressed = op.matrix() * &complement + &split.projector * c64(-spectral, 0.0);
    let mut norms = Vec::with_capacity(t_grid.len());
    for s in semigroup_on_grid(&compressed, t_grid)? {
        norms.push(h_norm(op, &(s * &complement))?);
    }
    if norms.iter().any(|&n| !(n > 0.0) || !n.is_finite()) {
        return Err(Error::Fit("complement norms underflow on this grid; use shorter times".into()));
    }
    let logs: Vec<f64> = norms.iter().map(|n| n.ln()).collect();
    let slope = least_squares_slope(t_grid, &logs);
    let s1 = matrix_exponential(&(-&compressed))? * &complement;
    let radius = general_eigs(&s1)?.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let expected = spectral.exp();
    let agreement = (slope - spectral).abs();
    Ok(EssentialGrowth {
        delta: split.delta,
        dim_x1: split.dim_x1,
        omega_ess: slope,
        omega_ess_spectral: spectral,
        agreement,
        agrees: agreement <= OMEGA_ESS_AGREEMENT,
        asymptotically_compact: slope < -COMPACTNESS_TOL,
        spectral_radius_at_one: radius,
        radius_matches: (radius - expected).abs() <= RADIUS_AGREEMENT * expected.max(1.0),
        t_grid: t_grid.to_vec(),
        complement_norms: norms,
    })
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemigroupAnalysis {
    pub omega: f64,
    pub quasi_contraction_w: f64,
    pub delta: f64,
    pub omega_ess: Option<f64>,
    pub asymptotically_compact: Option<bool>,
    /// `omega = max(growth on X_1, omega_ess)` within `1e-6`.
    pub omega_consistent: bool,
}

impl SemigroupAnalysis {
    pub fn assemble(growth: &GrowthReport, split: &SpectralSplit, essential: Option<&EssentialGrowth>) -> Self {
        let ess = essential.map(|e| e.omega_ess_spectral).or(split.complement_growth);
        let combined = match (split.x1_growth, ess) {
            (Some(a), Some(b)) => a.max(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => f64::NAN,
        };
        SemigroupAnalysis {
            omega: growth.omega,
            quasi_contraction_w: growth.quasi_contraction_w,
            delta: split.delta,
            omega_ess: essential.map(|e| e.omega_ess),
            asymptotically_compact: essential.map(|e| e.asymptotically_compact),
            omega_consistent: (combined - growth.omega).abs() <= 1e-6 * growth.omega.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationInvariance {
    pub delta: f64,
    pub perturbation_rank: usize,
    pub dim_x1_base: usize,
    pub dim_x1_perturbed: usize,
    pub omega_ess_base: Option<f64>,
    pub omega_ess_perturbed: Option<f64>,
    /// `min{Re lambda : Re lambda > delta}` for each operator.
    pub complement_abscissa_base: Option<f64>,
    pub complement_abscissa_perturbed: Option<f64>,
    /// Complement eigenvalues of one operator without a partner (relative
    /// distance `1e-6`) in the complement of the other.
    pub unmatched_base: Vec<[f64; 2]>,
    pub unmatched_perturbed: Vec<[f64; 2]>,
}

/// Relative distance within which two eigenvalues count as the same.
pub const EIGEN_MATCH_TOL: f64 = 1e-6;

/// Compares the split surrogates of `a` and `a + k` at the same `delta`.
pub fn perturbation_invariance_check(
    triple: &crate::formmodel::FormTriple,
    k_form: &CMatrix,
    delta: f64,
    t_grid: &[f64],
) -> Result<PerturbationInvariance> {
    let n = triple.dim_v();
    let rank = numerical_rank(k_form);
    if rank > n / 4 {
        return Err(Error::Precondition(format!("perturbation rank {rank} exceeds n/4 = {}", n / 4)));
    }
    let base = crate::association::associate(triple)?;
    let perturbed = crate::association::associate(&triple.perturbed(k_form)?)?;
    let analyse = |op: &AssociatedOperator| -> Result<(SpectralSplit, Option<f64>, Vec<C64>)> {
        let split = spectral_split(op, delta)?;
        let ess = match split.complement_growth {
            Some(_) => Some(essential_growth(op, &split, t_grid)?.omega_ess),
            None => None,
        };
        let complement = general_eigs(op.matrix())?.eigenvalues.into_iter().filter(|l| l.re > delta).collect();
        Ok((split, ess, complement))
    };
    let (split_b, ess_b, comp_b) = analyse(&base)?;
    let (split_p, ess_p, comp_p) = analyse(&perturbed)?;
    let (unmatched_base, unmatched_perturbed) = unmatched(&comp_b, &comp_p);
    Ok(PerturbationInvariance {
        delta,
        perturbation_rank: rank,
        dim_x1_base: split_b.dim_x1,
        dim_x1_perturbed: split_p.dim_x1,
        omega_ess_base: ess_b,
        omega_ess_perturbed: ess_p,
        complement_abscissa_base: split_b.complement_growth.map(|g| -g),
        complement_abscissa_perturbed: split_p.complement_growth.map(|g| -g),
        unmatched_base,
        unmatched_perturbed,
    })
}

/// Greedy multiset difference of two spectra.
fn unmatched(left: &[C64], right: &[C64]) -> (Vec<[f64; 2]>, Vec<[f64; 2]>) {
    let mut used = vec![false; right.len()];
    let mut only_left = Vec::new();
    for l in left {
        let partner = right
            .iter()
            .enumerate()
            .filter(|(i, r)| !used[*i] && (*r - l).norm() <= EIGEN_MATCH_TOL * l.norm().max(1.0))
            .min_by(|a, b| (a.1 - l).norm().total_cmp(&(b.1 - l).norm()))
            .map(|(i, _)| i);
        match partner {
            Some(i) => used[i] = true,
            None => only_left.push([l.re, l.im]),
        }
    }
    let only_right = right.iter().zip(&used).filter(|(_, &u)| !u).map(|(r, _)| [r.re, r.im]).collect();
    (only_left, only_right)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Renorming {
    /// `P` solving `A* P + P A = I`.
    #[serde(skip)]
    pub gram: CMatrix,
    pub min_real_eigenvalue: f64,
    /// `min Re(u* P A u) / (|u|^2 / 2)` over the samples; `1` up to rounding.
    pub sampled_ratio: f64,
    /// `max_t |S(t)|_P` over the grid.
    pub max_renormed_norm: f64,
    /// `max_t |S(t)|` in the Euclidean coordinate norm.
    pub max_euclidean_norm: f64,
    pub contractive: bool,
}

/// Inner product `[x, y] = y* P x` in which `exp(-t A)` is contractive.
pub fn contractive_renorming(
    op: &AssociatedOperator,
    epsilon: f64,
    t_grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Renorming> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition("the spectral margin epsilon must be positive".into()));
    }
    let a = op.matrix();
    let min_real = general_eigs(a)?.min_real();
    if min_real < epsilon {
        return Err(Error::Kernel(KernelError::SpectralMargin { min_real }));
    }
    let p = lyapunov_solve(a, &identity(a.nrows()))?;
    let mut rng = sampling::rng(seed);
    let pa = &p * a;
    let mut sampled_ratio = f64::INFINITY;
    for _ in 0..samples {
        let u = sampling::complex_normal_vector(&mut rng, a.nrows());
        let q = (u.adjoint() * &pa * &u)[(0, 0)].re;
        sampled_ratio = sampled_ratio.min(q / (0.5 * u.norm_squared()));
    }
    let mut max_renormed_norm = 0.0_f64;
    let mut max_euclidean_norm = 0.0_f64;
    for s in semigroup_on_grid(a, t_grid)? {
        max_renormed_norm = max_renormed_norm.max(weighted_operator_norm(&s, &p)?);
        max_euclidean_norm = max_euclidean_norm.max(crate::numkernel::spectral_norm(&s));
    }
    Ok(Renorming {
        gram: p,
        min_real_eigenvalue: min_real,
        sampled_ratio,
        max_renormed_norm,
        max_euclidean_norm,
        contractive: max_renormed_norm <= 1.0 + NORM_SLACK,
    })
}

/// Rays `z = t e^{i beta} e^{i rotation}` with `|beta| <= half_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorFrame {
    pub rotation: f64,
    pub half_angle: f64,
}

impl SectorFrame {
    pub fn new(rotation: f64, half_angle: f64) -> Self {
        SectorFrame { rotation, half_angle }
    }

    /// Frame from the form: rotate by the best coercive rotation (if any) and
    /// take the holomorphy angle `pi/2 - theta` of the rotated form's sector.
    pub fn from_operator(op: &AssociatedOperator) -> Result<Self> {
        let scan = crate::coercivity::rotation_scan(op.triple(), 0)?;
        let rotation = scan.best_angle.unwrap_or(0.0);
        let rotated = op.triple().rotated(rotation)?;
        let sector = classify(&rotated)?
            .sector
            .ok_or_else(|| Error::Precondition("the rotated form is not sectorial".into()))?;
        Ok(SectorFrame { rotation, half_angle: std::f64::consts::FRAC_PI_2 - sector.half_angle })
    }
}

impl AssociatedOperator {
    /// Operator of `e^{i phi} a`, which is `e^{i phi} A`.
    pub fn rotated(&self, phi: f64) -> Result<AssociatedOperator> {
        let factor = C64::from_polar(1.0, phi);
        Ok(self.with_matrix(self.matrix() * factor, self.triple().rotated(phi)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub t: f64,
    pub beta: f64,
    pub norm: f64,
    pub complement_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayVerdict {
    pub beta: f64,
    pub interior: bool,
    /// Interior rays: complement norms strictly decrease along the grid.
    pub decays: Option<bool>,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorScan {
    pub frame: SectorFrame,
    pub delta: f64,
    pub dim_x1: usize,
    pub rows: Vec<DecayRow>,
    pub rays: Vec<RayVerdict>,
}

/// Rays with `|beta|` this close to the half-angle count as boundary rays.
pub const BOUNDARY_RAY_TOL: f64 = 1e-12;

/// Norms of `S` and of `S (I - P)` along the rays of `frame`; `P` splits the
/// rotated operator at `delta`.
pub fn sector_scan(
    op: &AssociatedOperator,
    frame: SectorFrame,
    delta: f64,
    t_grid: &[f64],
    beta_grid: &[f64],
) -> Result<SectorScan> {
    check_t_grid(t_grid, 2)?;
    if let Some(b) = beta_grid.iter().find(|b| b.abs() > frame.half_angle + BOUNDARY_RAY_TOL) {
        return Err(Error::Input(format!("ray angle {b} lies outside the sector of half-angle {}", frame.half_angle)));
    }
    let rotated = op.rotated(frame.rotation)?;
    let split = spectral_split(&rotated, delta)?;
    let complement = identity(op.dim()) - &split.projector;
    let mut rows = Vec::with_capacity(t_grid.len() * beta_grid.len());
    let mut rays = Vec::with_capacity(beta_grid.len());
    for &beta in beta_grid {
        let direction = C64::from_polar(1.0, beta);
        let mut ray_norms = Vec::with_capacity(t_grid.len());
        for &t in t_grid {
            let s = sample(&rotated, direction * t)?;
            let norm = h_norm(op, &s)?;
            let complement_norm = h_norm(op, &(&s * &complement))?;
            rows.push(DecayRow { t, beta, norm, complement_norm });
            ray_norms.push((norm, complement_norm));
        }
        let interior = beta.abs() < frame.half_angle - BOUNDARY_RAY_TOL;
        let decays = interior.then(|| ray_norms.windows(2).all(|w| w[1].1 < w[0].1 || w[1].1 == 0.0));
        let sup_norm = ray_norms.iter().map(|r| r.0).fold(0.0, f64::max);
        rays.push(RayVerdict { beta, interior, decays, sup_norm });
    }
    Ok(SectorScan { frame, delta, dim_x1: split.dim_x1, rows, rays })
}

/// Comma-separated table `t,beta,norm,complement_norm`.
pub fn decay_csv(rows: &[DecayRow]) -> String {
    let mut out = String::from("t,beta,norm,complement_norm\n");
    for r in rows {
        writeln!(out, "{},{},{},{}", r.t, r.beta, r.norm, r.complement_norm).expect("writing to a String");
    }
    out
}
