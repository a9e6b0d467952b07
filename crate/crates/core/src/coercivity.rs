//! Coercivity constants, finite-dimensional defects and their compact
//! repairs, rotations, and refinement-family verdicts.
//!
//! Every "essential" notion is collapsed at fixed dimension, so verdicts about
//! essential coercivity are made on refinement families: the defect (the
//! number of `(Herm F, G_V)` eigenvalues at or below `alpha`) has to stay
//! constant over the finest levels at a uniform `alpha`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formmodel::{classify, FormTriple};
use crate::numkernel::{
    c64, hermitian_deviation, hermitian_part, hermitian_pencil_eigs, identity, numerical_rank, CMatrix, CVector,
    HermitianPencil, PencilEigen, ABS_TOL, HERMITIAN_TOL, RANK_TOL,
};
use crate::numrange::{range_boundary, refined_distance, wrap_angle, Normalization, DEFAULT_ANGLES};

/// Pencil eigenvalues within this distance of `alpha` count as defect.
pub const DEFECT_TIE_TOL: f64 = 1e-12;
/// Angles scanned by [`rotation_scan`].
pub const ROTATION_ANGLES: usize = 512;
/// Points of the geometric `alpha` grid used by [`family_verdict`].
pub const FAMILY_ALPHA_POINTS: usize = 64;
/// Levels over which the defect has to be constant.
pub const STABLE_LEVELS: usize = 3;

#[derive(Debug, Clone, Serialize)]
pub struct CoercivityReport {
    /// Smallest eigenvalue of `(Herm F, G_V)`: best `alpha` with `Re a(u,u) >= alpha |u|_V^2`.
    pub alpha_positive: f64,
    /// `min |Re a(u,u)|` over the `V`-unit sphere.
    pub alpha_real: f64,
    /// `dist(0, W(a, V))`.
    pub alpha_abs: f64,
    pub defect_dim: usize,
    #[serde(skip)]
    pub defect_basis: CMatrix,
    /// Pencil eigenvalues of the defect directions, ascending.
    pub defect_eigenvalues: Vec<f64>,
    pub threshold: Option<f64>,
    /// Set when a pencil eigenvalue sits within the tie tolerance of the threshold.
    pub threshold_tie: bool,
    pub rotation: Option<f64>,
}

fn real_part_pencil(triple: &FormTriple, form: &CMatrix) -> Result<PencilEigen> {
    let pencil = HermitianPencil::new(hermitian_part(form), triple.gram_v().clone())?;
    Ok(hermitian_pencil_eigs(&pencil)?)
}

/// Eigenvalues and `G_V`-orthonormal eigenvectors of `(Herm F, G_V)`.
pub fn real_part_spectrum(triple: &FormTriple) -> Result<PencilEigen> {
    real_part_pencil(triple, triple.form())
}

pub fn constants(triple: &FormTriple) -> Result<CoercivityReport> {
    let eig = real_part_spectrum(triple)?;
    let (lo, hi) = (eig.min(), eig.max());
    // the real projection of W(a, V) is exactly [lo, hi]
    let alpha_real = if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        -hi
    } else {
        0.0
    };
    let boundary = range_boundary(triple, DEFAULT_ANGLES, Normalization::VSphere)?;
    let alpha_abs = refined_distance(triple, &boundary, c64(0.0, 0.0))?;
    Ok(CoercivityReport {
        alpha_positive: lo,
        alpha_real,
        alpha_abs,
        defect_dim: 0,
        defect_basis: CMatrix::zeros(triple.dim_v(), 0),
        defect_eigenvalues: Vec::new(),
        threshold: None,
        threshold_tie: false,
        rotation: None,
    })
}

fn defect_count(values: &[f64], alpha: f64) -> usize {
    values.iter().filter(|&&v| v <= alpha + DEFECT_TIE_TOL).count()
}

fn has_tie(values: &[f64], alpha: f64) -> bool {
    values.iter().any(|&v| (v - alpha).abs() <= DEFECT_TIE_TOL)
}

pub fn essential_defect(triple: &FormTriple, alpha: f64) -> Result<CoercivityReport> {
    if !(alpha > 0.0) {
        return Err(Error::Precondition(format!("defect threshold must be positive, got {alpha}")));
    }
    let mut report = constants(triple)?;
    let eig = real_part_spectrum(triple)?;
    let k = defect_count(&eig.values, alpha);
    report.defect_dim = k;
    report.defect_basis = eig.vectors.columns(0, k).into_owned();
    report.defect_eigenvalues = eig.values[..k].to_vec();
    report.threshold = Some(alpha);
    report.threshold_tie = has_tie(&eig.values, alpha);
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationVariant {
    /// `Re(a(u,u) + <K u, u>) >= alpha |u|_V^2` with finite-rank `K: V -> V'`.
    Functional,
    /// `Re a(u,u) + |K u|_Y^2 >= alpha |u|_V^2` with finite-rank `K: V -> Y`.
    SquaredNorm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompactPerturbation {
    /// Form matrix of the perturbation; the repaired form is `F + k_matrix`.
    pub k_matrix: CMatrix,
    pub rank: usize,
    pub alpha: f64,
    pub variant: PerturbationVariant,
    /// `n x r` matrix `Y` with `|K u|_Y^2 = |Y* u|^2` (squared-norm variant only).
    pub y_factor: Option<CMatrix>,
    pub defect_dim: usize,
}

/// Finite-rank repair of the defect at `alpha`.
///
/// With `P` the `G_V`-orthogonal projector onto the defect span and
/// `Q = I - P`, the functional perturbation is `-(F - Q* F Q) + alpha G_V P`,
/// so that the repaired form is `Q* F Q + alpha G_V P`. The squared-norm
/// variant dominates the Hermitian part of that perturbation by
/// `lambda_max` times the projector onto its nonzero eigendirections.
pub fn compact_perturbation(
    triple: &FormTriple,
    alpha: f64,
    variant: PerturbationVariant,
) -> Result<CompactPerturbation> {
    let defect = essential_defect(triple, alpha)?;
    let n = triple.dim_v();
    let k = defect.defect_dim;
    let g = triple.gram_v();
    let functional = if k == 0 {
        CMatrix::zeros(n, n)
    } else {
        let d = &defect.defect_basis;
        let gd = g * d;
        let p = d * gd.adjoint();
        let q = identity(n) - &p;
        let f = triple.form();
        let b = f - q.adjoint() * f * &q;
        -b + &gd * gd.adjoint() * c64(alpha, 0.0)
    };
    match variant {
        PerturbationVariant::Functional => Ok(CompactPerturbation {
            rank: numerical_rank(&functional),
            k_matrix: functional,
            alpha,
            variant,
            y_factor: None,
            defect_dim: k,
        }),
        PerturbationVariant::SquaredNorm => {
            let zero = CompactPerturbation {
                k_matrix: CMatrix::zeros(n, n),
                rank: 0,
                alpha,
                variant,
                y_factor: Some(CMatrix::zeros(n, 0)),
                defect_dim: k,
            };
            if k == 0 {
                return Ok(zero);
            }
            let eig = real_part_pencil(triple, &functional)?;
            let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let kept: Vec<usize> = (0..n).filter(|&i| eig.values[i].abs() > RANK_TOL * scale).collect();
            let lambda = kept.iter().map(|&i| eig.values[i]).fold(f64::NEG_INFINITY, f64::max);
            if kept.is_empty() || lambda <= 0.0 {
                return Ok(zero);
            }
            let e = CMatrix::from_fn(n, kept.len(), |r, c| eig.vectors[(r, kept[c])]);
            let y = g * e * c64(lambda.sqrt(), 0.0);
            let k_matrix = &y * y.adjoint();
            Ok(CompactPerturbation { rank: kept.len(), k_matrix, alpha, variant, y_factor: Some(y), defect_dim: k })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dichotomy {
    pub alpha: f64,
    pub defect_plus: usize,
    pub defect_minus: usize,
    /// `+1` if `a` has the smaller defect, `-1` if `-a` has.
    pub selected: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotationScan {
    pub max_defect: usize,
    pub angles: Vec<f64>,
    /// `(max_defect + 1)`-th smallest eigenvalue of `(Herm(e^{i theta} F), G_V)` per angle.
    pub floors: Vec<f64>,
    pub best_angle: Option<f64>,
    pub best_floor: f64,
    pub dichotomy: Option<Dichotomy>,
}

pub fn rotation_angle_grid() -> Vec<f64> {
    (0..ROTATION_ANGLES).map(|k| wrap_angle(-PI + TAU * k as f64 / ROTATION_ANGLES as f64)).collect()
}

/// Rotation `e^{i theta} a` whose real part is coercive after discarding at
/// most `max_defect` directions, maximising the remaining floor.
pub fn rotation_scan(triple: &FormTriple, max_defect: usize) -> Result<RotationScan> {
    let n = triple.dim_v();
    if max_defect >= n {
        return Err(Error::Input(format!("max_defect {max_defect} leaves nothing of a {n}-dimensional space")));
    }
    let l = crate::numkernel::cholesky_factor(triple.gram_v())?;
    let f = triple.form();
    let re = crate::formmodel::reduce_congruence(&l, &hermitian_part(f))?;
    let im = crate::formmodel::reduce_congruence(&l, &((f - f.adjoint()) * c64(0.0, -0.5)))?;
    let angles = rotation_angle_grid();
    let half = angles.len() / 2;
    let mut floors = vec![0.0; angles.len()];
    for k in 0..half {
        // Herm(e^{i theta} F) = cos(theta) Re F - sin(theta) Im F; the antipodal
        // angle theta + pi negates it
        let theta = angles[k];
        let m = &re * c64(theta.cos(), 0.0) - &im * c64(theta.sin(), 0.0);
        let values = crate::numkernel::hermitian_eigenvalues(&m)?;
        floors[k] = values[max_defect];
        floors[k + half] = -values[n - 1 - max_defect];
    }
    let (best_idx, best_floor) =
        floors
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bf), (i, &v)| if v > bf { (i, v) } else { (bi, bf) });
    let tol = ABS_TOL * triple.continuity().max(1.0);
    let best_angle = (best_floor > tol).then(|| angles[best_idx]);
    let dichotomy = if hermitian_deviation(f) <= HERMITIAN_TOL && best_angle.is_some() {
        let alpha = best_floor / 2.0;
        let eig = real_part_spectrum(triple)?;
        let plus = defect_count(&eig.values, alpha);
        let negated: Vec<f64> = eig.values.iter().rev().map(|v| -v).collect();
        let minus = defect_count(&negated, alpha);
        Some(Dichotomy { alpha, defect_plus: plus, defect_minus: minus, selected: if plus <= minus { 1 } else { -1 } })
    } else {
        None
    };
    Ok(RotationScan { max_defect, angles, floors, best_angle, best_floor, dichotomy })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    EssentiallyPositiveCoercive,
    Not,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HEllipticity {
    pub w: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyVerdict {
    pub dims: Vec<usize>,
    pub defect_dims: Vec<usize>,
    /// The uniform threshold the defects were counted at, repeated per level.
    pub alphas: Vec<f64>,
    pub verdict: Verdict,
    pub alpha_floor: f64,
    pub alpha_grid: Vec<f64>,
    /// Defect eigenvalues per level (those at or below the threshold).
    pub defect_eigenvalues: Vec<Vec<f64>>,
    /// Smallest grid shift `w` with `Re a(u,u) + w |j u|^2 >= alpha |u|_V^2`, per level.
    pub h_ellipticity: Vec<Option<HEllipticity>>,
}

pub fn family_alpha_grid(scale: f64) -> Vec<f64> {
    let lo = 1e-6 * scale;
    let ratio = (scale / lo).powf(1.0 / (FAMILY_ALPHA_POINTS - 1) as f64);
    (0..FAMILY_ALPHA_POINTS).map(|i| lo * ratio.powi(i as i32)).collect()
}

fn h_ellipticity_shift_grid(scale: f64) -> Vec<f64> {
    let mut w = vec![0.0];
    w.extend((-10..=30).map(|k| scale * 2f64.powi(k)));
    w
}

/// Smallest grid `w` for which `(Herm F + w J* M_H J, G_V)` has minimum `>= alpha`.
pub fn h_ellipticity(triple: &FormTriple, alpha: f64) -> Result<Option<HEllipticity>> {
    let jgram = triple.pulled_back_h_gram();
    let grid = h_ellipticity_shift_grid(triple.continuity().max(1.0));
    // the floor is nondecreasing in w because J* M_H J is positive semidefinite
    let (mut lo, mut hi) = (0, grid.len());
    let mut found = None;
    while lo < hi {
        let mid = (lo + hi) / 2;
        let shifted = triple.form() + &jgram * c64(grid[mid], 0.0);
        let floor = real_part_pencil(triple, &shifted)?.min();
        if floor >= alpha {
            found = Some(HEllipticity { w: grid[mid], alpha: floor });
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(found)
}

pub fn family_verdict(family: &[FormTriple], alpha_floor: f64) -> Result<FamilyVerdict> {
    if family.len() < STABLE_LEVELS {
        return Err(Error::Input(format!("a family needs at least {STABLE_LEVELS} levels, got {}", family.len())));
    }
    let dims: Vec<usize> = family.iter().map(FormTriple::dim_v).collect();
    if dims.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Input(format!("family dimensions must increase, got {dims:?}")));
    }
    let spectra: Vec<Vec<f64>> =
        family.iter().map(|t| real_part_spectrum(t).map(|e| e.values)).collect::<Result<_>>()?;
    let scale = family.last().map(FormTriple::continuity).unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let alpha_grid = family_alpha_grid(scale);
    let tail = &spectra[spectra.len() - STABLE_LEVELS..];
    let stable = alpha_grid.iter().rev().copied().find(|&a| {
        let k0 = defect_count(&tail[0], a);
        tail.iter().all(|s| defect_count(s, a) == k0)
    });
    let (verdict, alpha) = match stable {
        Some(a) if a >= alpha_floor => (Verdict::EssentiallyPositiveCoercive, a),
        _ => {
            let a = alpha_floor.max(alpha_grid[0]);
            let counts: Vec<usize> = tail.iter().map(|s| defect_count(s, a)).collect();
            if counts.windows(2).all(|w| w[1] > w[0]) {
                (Verdict::Not, a)
            } else {
                (Verdict::Inconclusive, a)
            }
        }
    };
    let defect_dims: Vec<usize> = spectra.iter().map(|s| defect_count(s, alpha)).collect();
    let defect_eigenvalues = spectra.iter().zip(&defect_dims).map(|(s, &k)| s[..k].to_vec()).collect();
    let h_ellipticity = family.iter().map(|t| h_ellipticity(t, alpha)).collect::<Result<_>>()?;
    Ok(FamilyVerdict {
        alphas: vec![alpha; family.len()],
        dims,
        defect_dims,
        verdict,
        alpha_floor,
        alpha_grid,
        defect_eigenvalues,
        h_ellipticity,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyWitness {
    /// `G_V`-normalised eigenvector of the smallest `(Herm F, G_V)` eigenvalue.
    pub u: CVector,
    pub herm_residual: f64,
    pub full_residual: f64,
    /// Sector half-angle at shift zero, if the form is sectorial there.
    pub sector_angle: Option<f64>,
    /// `F u = 0` is guaranteed only for sector angles below `pi/2`.
    pub strictly_sectorial: bool,
    /// `strictly_sectorial` and `full_residual` within tolerance.
    pub certified: bool,
    /// Hermitian part degenerate while `F u` is not small: the finite-dimensional
    /// reading of "0 is an eigenvalue" fails for this witness.
    pub flagged: bool,
}

/// Smallest `(Herm F, G_V)` eigenvalue accepted as zero.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Base tolerance for `|F u|` in the strictly sectorial regime.
pub const WITNESS_TOL: f64 = 1e-7;

/// For an accretive form whose real part degenerates, the direction `u`
/// with `Re a(u,u) = 0`, and whether `a(u, .) = 0` follows.
pub fn accretive_degeneracy_witness(triple: &FormTriple) -> Result<Option<DegeneracyWitness>> {
    let class = classify(triple)?;
    if !class.accretive {
        return Err(Error::Precondition("the form is not accretive".into()));
    }
    let eig = real_part_spectrum(triple)?;
    if eig.min() > DEGENERACY_TOL {
        return Ok(None);
    }
    let u = eig.vectors.column(0).into_owned();
    let herm_residual = (hermitian_part(triple.form()) * &u).norm();
    let full_residual = (triple.form() * &u).norm();
    let sector_angle = class.sector.filter(|s| s.shift == 0.0).map(|s| s.half_angle);
    let strictly_sectorial = sector_angle.is_some_and(|t| t < FRAC_PI_2);
    let tol = sector_angle.map_or(f64::INFINITY, |t| WITNESS_TOL * (1.0 + t.tan()) * triple.continuity().max(1.0));
    let certified = strictly_sectorial && full_residual <= tol;
    let flagged = full_residual > WITNESS_TOL * triple.continuity().max(1.0);
    Ok(Some(DegeneracyWitness {
        u,
        herm_residual,
        full_residual,
        sector_angle,
        strictly_sectorial,
        certified,
        flagged,
    }))
}
