//! Numerical ranges `W(a, j) = {a(u, u) : |j(u)|_H = 1}` and
//! `W(a, V) = {a(u, u) : |u|_V = 1}` through their support functions.
//!
//! For a direction `theta` the support value is
//! `h(theta) = sup Re(e^{-i theta} a(u, u))` over the normalised set, which is
//! the top eigenvalue of a Hermitian pencil. When `j` has a kernel the
//! supremum runs over all of `V`: it is finite only if `Herm(e^{-i theta} F)`
//! is negative definite on `ker j`, and then equals the top eigenvalue of the
//! Schur complement of that block against `J* M_H J` on the row space.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::association::AssociatedOperator;
use crate::error::{Error, Result};
use crate::formmodel::{reduce_congruence, FormTriple};
use crate::numkernel::{
    c64, cholesky_factor, general_eigs, hermitian_eigenvalues, hermitian_part, identity, inverse, row_space_and_kernel,
    solve, top_hermitian_eigenpair, weighted_operator_norm, CMatrix, CVector, KernelError, ABS_TOL, C64,
};

/// Default number of support directions.
pub const DEFAULT_ANGLES: usize = 256;
/// Smallest accepted angle grid.
pub const MIN_ANGLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `|j(u)|_H = 1`
    JSphere,
    /// `|u|_V = 1`
    VSphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericalRangeBoundary {
    pub angles: Vec<f64>,
    /// `+inf` where the range is unbounded in direction `theta`.
    pub support_values: Vec<f64>,
    /// `None` where the support value is infinite.
    pub support_points: Vec<Option<C64>>,
    pub normalization: Normalization,
}

/// Precomputed blocks of `Re F` and `Im F` split along `V = R (+) N`.
struct SupportProblem {
    rows: CMatrix,
    kernel: CMatrix,
    weight_factor: CMatrix,
    re_rr: CMatrix,
    im_rr: CMatrix,
    re_nr: CMatrix,
    im_nr: CMatrix,
    re_nn: CMatrix,
    im_nn: CMatrix,
    /// Reduced `Re F` and `Im F` when `j` is injective, where the reduction is linear in the direction.
    reduced: Option<(CMatrix, CMatrix)>,
    tol: f64,
}

/// `F = P + i Q` with `P`, `Q` Hermitian.
fn real_imag_parts(f: &CMatrix) -> (CMatrix, CMatrix) {
    (hermitian_part(f), (f - f.adjoint()) * c64(0.0, -0.5))
}

impl SupportProblem {
    fn new(triple: &FormTriple, normalization: Normalization) -> Result<Self> {
        let n = triple.dim_v();
        let (rows, kernel, weight) = match normalization {
            Normalization::VSphere => (identity(n), CMatrix::zeros(n, 0), triple.gram_v().clone()),
            Normalization::JSphere if triple.j().is_injective() => {
                (identity(n), CMatrix::zeros(n, 0), triple.pulled_back_h_gram())
            }
            Normalization::JSphere => {
                let (rows, kernel) = row_space_and_kernel(triple.j_matrix())?;
                if rows.ncols() == 0 {
                    return Err(Error::DegenerateNormalization("all of V lies in ker j".into()));
                }
                let c = triple.j_matrix() * &rows;
                (rows, kernel, c.adjoint() * triple.gram_h() * c)
            }
        };
        let weight_factor = cholesky_factor(&hermitian_part(&weight))
            .map_err(|e| Error::DegenerateNormalization(format!("normalising Gram is not definite: {e}")))?;
        let (re, im) = real_imag_parts(triple.form());
        let block = |m: &CMatrix, a: &CMatrix, b: &CMatrix| a.adjoint() * m * b;
        let (re_rr, im_rr) = (block(&re, &rows, &rows), block(&im, &rows, &rows));
        let reduced = if kernel.ncols() == 0 {
            Some((reduce_congruence(&weight_factor, &re_rr)?, reduce_congruence(&weight_factor, &im_rr)?))
        } else {
            None
        };
        Ok(SupportProblem {
            re_rr,
            im_rr,
            re_nr: block(&re, &kernel, &rows),
            im_nr: block(&im, &kernel, &rows),
            re_nn: block(&re, &kernel, &kernel),
            im_nn: block(&im, &kernel, &kernel),
            rows,
            kernel,
            weight_factor,
            reduced,
            tol: ABS_TOL * triple.continuity().max(1.0),
        })
    }

    /// `(h(theta), maximiser u)`; `u` is normalised and `None` when `h = inf`.
    fn support(&self, theta: f64) -> Result<(f64, Option<CVector>)> {
        let (c, s) = (theta.cos(), theta.sin());
        // Herm(e^{-i theta} F) = cos(theta) Re F + sin(theta) Im F
        let mix = |re: &CMatrix, im: &CMatrix| re * c64(c, 0.0) + im * c64(s, 0.0);
        let (reduced, correction) = if let Some((re, im)) = &self.reduced {
            (mix(re, im), None)
        } else {
            let h_rr = mix(&self.re_rr, &self.im_rr);
            let h_nn = hermitian_part(&mix(&self.re_nn, &self.im_nn));
            if hermitian_eigenvalues(&h_nn)?.last().copied().unwrap_or(f64::NEG_INFINITY) >= -self.tol {
                return Ok((f64::INFINITY, None));
            }
            let h_nr = mix(&self.re_nr, &self.im_nr);
            let corr = solve(&h_nn, &h_nr)?;
            let schur = &h_rr - h_nr.adjoint() * &corr;
            (reduce_congruence(&self.weight_factor, &hermitian_part(&schur))?, Some(corr))
        };
        let (value, y) = top_hermitian_eigenpair(&reduced)?;
        let x = self.weight_factor.adjoint().solve_upper_triangular(&y).ok_or(KernelError::Singular)?;
        let mut u = &self.rows * &x;
        if let Some(corr) = correction {
            u -= &self.kernel * (corr * &x);
        }
        Ok((value, Some(u)))
    }
}

fn normalised_value(triple: &FormTriple, normalization: Normalization, u: &CVector) -> C64 {
    let value = (u.adjoint() * triple.form() * u)[(0, 0)];
    let norm = match normalization {
        Normalization::JSphere => triple.h_norm_sqr(u),
        Normalization::VSphere => triple.v_norm_sqr(u),
    };
    value / norm
}

pub fn angle_grid(n_angles: usize) -> Vec<f64> {
    (0..n_angles).map(|k| TAU * k as f64 / n_angles as f64).collect()
}

pub fn range_boundary(
    triple: &FormTriple,
    n_angles: usize,
    normalization: Normalization,
) -> Result<NumericalRangeBoundary> {
    if n_angles < MIN_ANGLES {
        return Err(Error::Input(format!("at least {MIN_ANGLES} angles are needed, got {n_angles}")));
    }
    let problem = SupportProblem::new(triple, normalization)?;
    let angles = angle_grid(n_angles);
    let mut support_values = Vec::with_capacity(n_angles);
    let mut support_points = Vec::with_capacity(n_angles);
    for &theta in &angles {
        let (h, u) = problem.support(theta)?;
        support_values.push(h);
        support_points.push(u.map(|u| normalised_value(triple, normalization, &u)));
    }
    Ok(NumericalRangeBoundary { angles, support_values, support_points, normalization })
}

/// Support value and point for a single direction.
pub fn support_at(triple: &FormTriple, normalization: Normalization, theta: f64) -> Result<(f64, Option<C64>)> {
    let problem = SupportProblem::new(triple, normalization)?;
    let (h, u) = problem.support(theta)?;
    Ok((h, u.map(|u| normalised_value(triple, normalization, &u))))
}

impl NumericalRangeBoundary {
    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn is_bounded(&self) -> bool {
        self.support_values.iter().all(|h| h.is_finite())
    }

    /// Support-function distance `max_theta (Re(e^{-i theta} mu) - h(theta))^+`.
    pub fn dist_to_range(&self, mu: C64) -> f64 {
        self.angles
            .iter()
            .zip(&self.support_values)
            .filter(|(_, h)| h.is_finite())
            .map(|(&theta, &h)| (C64::from_polar(1.0, -theta) * mu).re - h)
            .fold(0.0, f64::max)
    }

    /// Index of the direction attaining the distance, if `mu` is outside.
    fn best_angle(&self, mu: C64) -> Option<usize> {
        let mut best = None;
        let mut gap = 0.0;
        for (k, (&theta, &h)) in self.angles.iter().zip(&self.support_values).enumerate() {
            if !h.is_finite() {
                continue;
            }
            let g = (C64::from_polar(1.0, -theta) * mu).re - h;
            if g > gap {
                gap = g;
                best = Some(k);
            }
        }
        best
    }

    /// Finite support points, the vertices of the inner hull approximation.
    pub fn points(&self) -> Vec<C64> {
        self.support_points.iter().flatten().copied().collect()
    }

    /// Comma-separated table `theta,support_value,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,support_value,re,im\n");
        for ((theta, h), z) in self.angles.iter().zip(&self.support_values).zip(&self.support_points) {
            let (re, im) = z.map_or((f64::NAN, f64::NAN), |z| (z.re, z.im));
            writeln!(out, "{theta},{h},{re},{im}").expect("writing to a String");
        }
        out
    }
}

/// Grid distance refined by golden-section search on the support function
/// around the best grid direction. Never smaller than the grid value.
pub fn refined_distance(triple: &FormTriple, boundary: &NumericalRangeBoundary, mu: C64) -> Result<f64> {
    let grid = boundary.dist_to_range(mu);
    let Some(k) = boundary.best_angle(mu) else { return Ok(grid) };
    let problem = SupportProblem::new(triple, boundary.normalization)?;
    let step = TAU / boundary.len() as f64;
    let gap = |theta: f64| -> Result<f64> {
        let (h, _) = problem.support(theta)?;
        Ok(if h.is_finite() { (C64::from_polar(1.0, -theta) * mu).re - h } else { f64::NEG_INFINITY })
    };
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (boundary.angles[k] - step, boundary.angles[k] + step);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut g1, mut g2) = (gap(x1)?, gap(x2)?);
    for _ in 0..60 {
        if g1 > g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - ratio * (b - a);
            g1 = gap(x1)?;
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + ratio * (b - a);
            g2 = gap(x2)?;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    Ok(grid.max(g1).max(g2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventCheck {
    pub mu: C64,
    pub in_range: bool,
    pub dist: f64,
    /// `|(mu - A)^{-1}|` in the `M_H` norm; `inf` when `mu` is an eigenvalue.
    pub resolvent_norm: f64,
    /// `resolvent_norm <= 1/dist + 1e-6`; vacuous (true) inside the range.
    pub bound_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventCertificate {
    pub checks: Vec<ResolventCheck>,
    /// Largest support-function distance of an eigenvalue of `A` from the range.
    pub spectral_excess: f64,
    /// `spectral_excess <= 1e-7 * max(1, |a|)`.
    pub spectrum_included: bool,
}

pub const RESOLVENT_SLACK: f64 = 1e-6;
pub const INCLUSION_TOL: f64 = 1e-7;

pub fn resolvent_certificate(
    op: &AssociatedOperator,
    boundary: &NumericalRangeBoundary,
    mu_samples: &[C64],
) -> Result<ResolventCertificate> {
    if boundary.normalization != Normalization::JSphere {
        return Err(Error::Precondition("the resolvent bound needs the j-normalised range".into()));
    }
    let m = op.dim();
    let scale = op.triple().continuity().max(1.0);
    let mut checks = Vec::with_capacity(mu_samples.len());
    for &mu in mu_samples {
        let dist = boundary.dist_to_range(mu);
        let in_range = dist <= ABS_TOL * scale;
        let shifted = identity(m) * mu - op.matrix();
        let resolvent_norm = match inverse(&shifted) {
            Ok(r) => weighted_operator_norm(&r, op.h_gram())?,
            Err(KernelError::Singular) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        let bound_satisfied = in_range || resolvent_norm <= 1.0 / dist + RESOLVENT_SLACK;
        checks.push(ResolventCheck { mu, in_range, dist, resolvent_norm, bound_satisfied });
    }
    let spectrum = general_eigs(op.matrix())?;
    let spectral_excess = spectrum.eigenvalues.iter().map(|&l| boundary.dist_to_range(l)).fold(0.0, f64::max);
    Ok(ResolventCertificate { checks, spectral_excess, spectrum_included: spectral_excess <= INCLUSION_TOL * scale })
}

/// Normalise an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::associate;
    use crate::formmodel::build_triple;
    use crate::numkernel::{complex_diag, real_diag};

    fn diag_triple(values: &[C64]) -> FormTriple {
        let n = values.len();
        build_triple(identity(n), identity(n), identity(n), complex_diag(values)).unwrap()
    }

    #[test]
    fn identity_range_is_a_point() {
        let t = diag_triple(&[c64(1.0, 0.0); 3]);
        let b = range_boundary(&t, 16, Normalization::JSphere).unwrap();
        for z in b.points() {
            assert!((z - c64(1.0, 0.0)).norm() < 1e-14);
        }
        assert_eq!(b.dist_to_range(c64(1.0, 0.0)), 0.0);
        assert!((b.dist_to_range(c64(-1.0, 0.0)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn segment_between_diagonal_entries() {
        let t = diag_triple(&[c64(1.0, 0.0), c64(0.0, 1.0)]);
        let b = range_boundary(&t, 64, Normalization::JSphere).unwrap();
        for z in b.points() {
            // on the segment re + im = 1 with both parts in [0, 1]
            assert!((z.re + z.im - 1.0).abs() < 1e-12);
            assert!(z.re > -1e-12 && z.im > -1e-12);
        }
    }

    #[test]
    fn resolvent_for_indefinite_diagonal() {
        let t = build_triple(identity(2), identity(2), identity(2), real_diag(&[-1.0, 3.0])).unwrap();
        let b = range_boundary(&t, 256, Normalization::JSphere).unwrap();
        let op = associate(&t).unwrap();
        let cert = resolvent_certificate(&op, &b, &[c64(0.0, 1.0), c64(0.0, 0.0)]).unwrap();
        let outside = &cert.checks[0];
        assert!((outside.dist - 1.0).abs() < 1e-12);
        assert!(outside.resolvent_norm <= 1.0 + 1e-12);
        assert!(outside.bound_satisfied);
        assert!(cert.checks[1].in_range);
        assert!(cert.spectrum_included);
    }

    #[test]
    fn kernel_directions_with_indefinite_block_are_unbounded() {
        // j reads the first coordinate; a is -|u_2|^2 + |u_1|^2 with no coupling
        let j = CMatrix::from_row_slice(1, 2, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let t = build_triple(identity(2), identity(1), j, real_diag(&[1.0, -1.0])).unwrap();
        let b = range_boundary(&t, 8, Normalization::JSphere).unwrap();
        // direction 0: the kernel block is negative definite, support 1
        assert!((b.support_values[0] - 1.0).abs() < 1e-14);
        // direction pi: the kernel block is positive, unbounded
        assert!(b.support_values[4].is_infinite());
        assert!(b.support_points[4].is_none());
        assert!(b.to_csv().lines().nth(5).unwrap().ends_with("inf,NaN,NaN"));
    }

    #[test]
    fn refinement_never_lowers_the_grid_distance() {
        let t = diag_triple(&[c64(1.0, 1.0), c64(2.0, -1.0), c64(3.0, 0.5)]);
        let b = range_boundary(&t, 16, Normalization::VSphere).unwrap();
        let mu = c64(-1.0, 2.0);
        let refined = refined_distance(&t, &b, mu).unwrap();
        assert!(refined >= b.dist_to_range(mu));
        // the hull is a triangle; the nearest point is the vertex 1+i
        assert!((refined - (c64(1.0, 1.0) - mu).norm()).abs() < 1e-9);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-15);
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
