//! Form triples `(a, V, H, j)` in coordinates.
//!
//! `V` carries a basis `phi_1..phi_n` with Gram matrix `G_V`, `H` a basis with
//! Gram matrix `M_H`, and `j` is the `m x n` matrix whose column `l` holds the
//! `H`-coordinates of `j(phi_l)`. The form matrix is stored with the test
//! function as row index: `form[(k, l)] = a(phi_l, phi_k)`, hence
//! `a(u, v) = v* F u`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkernel::{
    c64, check_hpd, cholesky_factor, hermitian_deviation, hermitian_eigenvalues, hermitian_eigs, hermitian_part,
    numerical_rank, row_space_and_kernel, singular_values, spectral_norm, CMatrix, CVector, KernelError, ABS_TOL, C64,
    HERMITIAN_TOL, RANK_TOL,
};

/// Number of uniformly spaced half-angles in `[0, pi/2]` tried by the sector fit.
pub const SECTOR_ANGLES: usize = 256;
/// The sector fit tries `w = 0` and `w = 2^-k * |a|` for `k = SECTOR_SHIFT_OCTAVES..=0`.
pub const SECTOR_SHIFT_OCTAVES: i32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinSpace {
    gram: CMatrix,
    label: String,
}

impl GalerkinSpace {
    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotSpace {
    gram: CMatrix,
}

impl PivotSpace {
    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMatrix {
        &self.gram
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap {
    matrix: CMatrix,
    injective: bool,
}

impl EmbeddingMap {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_injective(&self) -> bool {
        self.injective
    }

    /// True when `j` is literally the identity matrix.
    pub fn is_identity(&self) -> bool {
        let j = &self.matrix;
        j.is_square()
            && (0..j.nrows())
                .all(|r| (0..j.ncols()).all(|c| j[(r, c)] == if r == c { c64(1.0, 0.0) } else { c64(0.0, 0.0) }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormTriple {
    space_v: GalerkinSpace,
    space_h: PivotSpace,
    j: EmbeddingMap,
    form: CMatrix,
    continuity: f64,
}

/// Validates the data and computes the continuity constant of the form.
pub fn build_triple(gram_v: CMatrix, gram_h: CMatrix, j_matrix: CMatrix, form: CMatrix) -> Result<FormTriple> {
    let n = gram_v.nrows();
    let m = gram_h.nrows();
    if !gram_v.is_square() || !gram_h.is_square() {
        return Err(Error::Dimension("Gram matrices must be square".into()));
    }
    if n == 0 || m == 0 {
        return Err(Error::Dimension("spaces must be nontrivial".into()));
    }
    if j_matrix.shape() != (m, n) {
        return Err(Error::Dimension(format!(
            "embedding is {}x{}, expected {m}x{n}",
            j_matrix.nrows(),
            j_matrix.ncols()
        )));
    }
    if form.shape() != (n, n) {
        return Err(Error::Dimension(format!("form is {}x{}, expected {n}x{n}", form.nrows(), form.ncols())));
    }
    if !crate::numkernel::all_finite(&form) || !crate::numkernel::all_finite(&j_matrix) {
        return Err(Error::Kernel(KernelError::NonFinite));
    }
    check_hpd(&gram_v).map_err(|source| Error::Definiteness { what: "V-Gram", source })?;
    check_hpd(&gram_h).map_err(|source| Error::Definiteness { what: "H-Gram", source })?;
    let rank = numerical_rank(&j_matrix);
    if rank < m {
        return Err(Error::DenseRange { rank, required: m });
    }
    let gram_v = hermitian_part(&gram_v);
    let gram_h = hermitian_part(&gram_h);
    let continuity = form_norm(&form, &gram_v)?;
    Ok(FormTriple {
        space_v: GalerkinSpace { gram: gram_v, label: String::new() },
        space_h: PivotSpace { gram: gram_h },
        j: EmbeddingMap { matrix: j_matrix, injective: rank == n },
        form,
        continuity,
    })
}

/// `sup |v* F u| / (|u|_G |v|_G) = |L^{-1} F L^{-*}|_2` for `G = L L*`.
fn form_norm(form: &CMatrix, gram: &CMatrix) -> Result<f64> {
    let l = cholesky_factor(gram)?;
    let reduced = reduce_congruence(&l, form)?;
    Ok(spectral_norm(&reduced))
}

/// `L^{-1} X L^{-*}`.
pub(crate) fn reduce_congruence(l: &CMatrix, x: &CMatrix) -> Result<CMatrix> {
    let left = l.solve_lower_triangular(x).ok_or(KernelError::Singular)?;
    Ok(l.solve_lower_triangular(&left.adjoint()).ok_or(KernelError::Singular)?.adjoint())
}

impl FormTriple {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.space_v.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.space_v.label
    }

    pub fn space_v(&self) -> &GalerkinSpace {
        &self.space_v
    }

    pub fn space_h(&self) -> &PivotSpace {
        &self.space_h
    }

    pub fn dim_v(&self) -> usize {
        self.space_v.dim()
    }

    pub fn dim_h(&self) -> usize {
        self.space_h.dim()
    }

    pub fn gram_v(&self) -> &CMatrix {
        &self.space_v.gram
    }

    pub fn gram_h(&self) -> &CMatrix {
        &self.space_h.gram
    }

    pub fn j(&self) -> &EmbeddingMap {
        &self.j
    }

    pub fn j_matrix(&self) -> &CMatrix {
        &self.j.matrix
    }

    pub fn form(&self) -> &CMatrix {
        &self.form
    }

    /// Bound `M` with `|a(u, v)| <= M |u|_V |v|_V`.
    pub fn continuity(&self) -> f64 {
        self.continuity
    }

    /// `J* M_H J`, the Gram matrix of `(u, v) -> <j u, j v>_H` on `V`.
    pub fn pulled_back_h_gram(&self) -> CMatrix {
        self.j.matrix.adjoint() * &self.space_h.gram * &self.j.matrix
    }

    /// `a(u, v) = v* F u`.
    pub fn eval(&self, u: &CVector, v: &CVector) -> C64 {
        (v.adjoint() * &self.form * u)[(0, 0)]
    }

    /// `|j(u)|_H^2`.
    pub fn h_norm_sqr(&self, u: &CVector) -> f64 {
        let ju = &self.j.matrix * u;
        (ju.adjoint() * &self.space_h.gram * &ju)[(0, 0)].re
    }

    pub fn v_norm_sqr(&self, u: &CVector) -> f64 {
        (u.adjoint() * &self.space_v.gram * u)[(0, 0)].re
    }

    /// Same spaces, different form matrix.
    pub fn with_form(&self, form: CMatrix) -> Result<FormTriple> {
        if form.shape() != self.form.shape() {
            return Err(Error::Dimension("replacement form has the wrong shape".into()));
        }
        let continuity = form_norm(&form, &self.space_v.gram)?;
        Ok(FormTriple { form, continuity, ..self.clone() })
    }

    /// The triple of `e^{i theta} a`.
    pub fn rotated(&self, theta: f64) -> Result<FormTriple> {
        self.with_form(&self.form * C64::from_polar(1.0, theta))
    }

    pub fn negated(&self) -> Result<FormTriple> {
        self.with_form(-&self.form)
    }

    /// The triple of `(u, v) -> a(u, v) + v* K u`.
    pub fn perturbed(&self, k_form: &CMatrix) -> Result<FormTriple> {
        if k_form.shape() != self.form.shape() {
            return Err(Error::Dimension("perturbation has the wrong shape".into()));
        }
        self.with_form(&self.form + k_form)
    }

    /// Smallest `c_H` with `|j(u)|_H <= c_H |u|_V`.
    pub fn embedding_constant(&self) -> Result<f64> {
        let l = cholesky_factor(&self.space_v.gram)?;
        let reduced = reduce_congruence(&l, &self.pulled_back_h_gram())?;
        let eig = hermitian_eigs(&reduced)?;
        Ok(eig.max().max(0.0).sqrt())
    }

    pub fn to_document(&self) -> TripleDocument {
        TripleDocument {
            label: self.label().to_string(),
            dim_v: self.dim_v(),
            dim_h: self.dim_h(),
            gram_v: matrix_to_rows(self.gram_v()),
            gram_h: matrix_to_rows(self.gram_h()),
            j: matrix_to_rows(self.j_matrix()),
            form: matrix_to_rows(self.form()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("triple documents always serialise")
    }

    pub fn from_json(text: &str) -> Result<FormTriple> {
        let doc: TripleDocument = serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        doc.into_triple()
    }
}

/// `a_lambda(u, v) = a(u, v) - lambda <j u, j v>_H`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedForm {
    base: FormTriple,
    lambda: C64,
    form: CMatrix,
}

pub fn shift_form(triple: &FormTriple, lambda: C64) -> ShiftedForm {
    let form =
        if lambda == c64(0.0, 0.0) { triple.form.clone() } else { &triple.form - triple.pulled_back_h_gram() * lambda };
    ShiftedForm { base: triple.clone(), lambda, form }
}

impl ShiftedForm {
    pub fn base(&self) -> &FormTriple {
        &self.base
    }

    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn form(&self) -> &CMatrix {
        &self.form
    }

    /// Shift further by `mu`; the result is `a_{lambda + mu}` built from the
    /// unshifted base, so shifting back by `-lambda` restores it bit for bit.
    pub fn shift(&self, mu: C64) -> ShiftedForm {
        shift_form(&self.base, self.lambda + mu)
    }

    pub fn triple(&self) -> Result<FormTriple> {
        self.base.with_form(self.form.clone())
    }
}

/// `a(u, u) + w |j u|^2` lies in the closed sector `|arg z| <= half_angle`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub shift: f64,
    pub half_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormClassification {
    pub symmetric: bool,
    pub accretive: bool,
    pub sector: Option<Sector>,
    pub kernel_condition: bool,
    /// Smallest eigenvalue of the pencil `(Herm F, G_V)`.
    pub min_real_part: f64,
    /// Smallest singular value of the form restricted to `ker j` (`None` if `j` is injective).
    pub kernel_sigma_min: Option<f64>,
}

/// Absolute slack, relative to `max(1, |a|)`, for sign decisions on pencil minima.
pub const SIGN_TOL: f64 = ABS_TOL;

pub fn classify(triple: &FormTriple) -> Result<FormClassification> {
    let symmetric = hermitian_deviation(triple.form()) <= HERMITIAN_TOL;
    let scale = triple.continuity().max(1.0);
    let tol = SIGN_TOL * scale;
    let l = cholesky_factor(triple.gram_v())?;
    let re_part = reduce_congruence(&l, &hermitian_part(triple.form()))?;
    let min_real_part = hermitian_eigenvalues(&re_part)?[0];
    let accretive = min_real_part >= -tol;
    let sector = fit_sector(triple, &l, tol)?;
    let kernel_sigma_min = kernel_sigma_min(triple)?;
    let kernel_condition = match kernel_sigma_min {
        None => true,
        Some(s) => s > RANK_TOL * spectral_norm(triple.form()).max(f64::MIN_POSITIVE),
    };
    Ok(FormClassification { symmetric, accretive, sector, kernel_condition, min_real_part, kernel_sigma_min })
}

/// Smallest singular value of `N* F N` for an orthonormal basis `N` of `ker j`.
pub fn kernel_sigma_min(triple: &FormTriple) -> Result<Option<f64>> {
    if triple.j().is_injective() {
        return Ok(None);
    }
    let (_, ker) = row_space_and_kernel(triple.j_matrix())?;
    if ker.ncols() == 0 {
        return Ok(None);
    }
    let block = ker.adjoint() * triple.form() * &ker;
    Ok(Some(singular_values(&block).last().copied().unwrap_or(0.0)))
}

/// Sector half-angles tried by the fit, ascending.
pub fn sector_angle_grid() -> Vec<f64> {
    (0..SECTOR_ANGLES).map(|k| FRAC_PI_2 * k as f64 / (SECTOR_ANGLES - 1) as f64).collect()
}

/// Shifts tried by the fit, ascending.
pub fn sector_shift_grid(scale: f64) -> Vec<f64> {
    let mut w = vec![0.0];
    w.extend((0..=SECTOR_SHIFT_OCTAVES).rev().map(|k| scale * 2f64.powi(-k)));
    w
}

fn fit_sector(triple: &FormTriple, l: &CMatrix, tol: f64) -> Result<Option<Sector>> {
    let angles = sector_angle_grid();
    let jgram = triple.pulled_back_h_gram();
    for w in sector_shift_grid(triple.continuity()) {
        let shifted = triple.form() + &jgram * c64(w, 0.0);
        let re = reduce_congruence(l, &hermitian_part(&shifted))?;
        if hermitian_eigenvalues(&re)?[0] < -tol {
            continue;
        }
        let im = reduce_congruence(l, &((&shifted - shifted.adjoint()) * c64(0.0, -0.5)))?;
        // Re(e^{+-i phi} z) >= 0 with phi = pi/2 - theta, i.e. cos(phi) Re z -+ sin(phi) Im z >= 0
        let feasible = |theta: f64| -> Result<bool> {
            let phi = FRAC_PI_2 - theta;
            let (c, s) = (phi.cos(), phi.sin());
            for sign in [1.0, -1.0] {
                let m = &re * c64(c, 0.0) - &im * c64(sign * s, 0.0);
                if hermitian_eigenvalues(&m)?[0] < -tol {
                    return Ok(false);
                }
            }
            Ok(true)
        };
        // feasibility is monotone in the half-angle; the last grid point is pi/2
        let (mut lo, mut hi) = (0usize, angles.len() - 1);
        if feasible(angles[0])? {
            return Ok(Some(Sector { shift: w, half_angle: angles[0] }));
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if feasible(angles[mid])? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok(Some(Sector { shift: w, half_angle: angles[hi] }));
    }
    Ok(None)
}

/// Serialised triple: dense matrices as rows of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDocument {
    #[serde(default)]
    pub label: String,
    pub dim_v: usize,
    pub dim_h: usize,
    pub gram_v: Vec<Vec<[f64; 2]>>,
    pub gram_h: Vec<Vec<[f64; 2]>>,
    pub j: Vec<Vec<[f64; 2]>>,
    pub form: Vec<Vec<[f64; 2]>>,
}

pub fn matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

pub fn rows_to_matrix(rows: &[Vec<[f64; 2]>], nrows: usize, ncols: usize, what: &str) -> Result<CMatrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Serialization(format!("{what}: expected {nrows}x{ncols} entries")));
    }
    Ok(CMatrix::from_fn(nrows, ncols, |r, c| c64(rows[r][c][0], rows[r][c][1])))
}

impl TripleDocument {
    pub fn into_triple(self) -> Result<FormTriple> {
        let (n, m) = (self.dim_v, self.dim_h);
        let gram_v = rows_to_matrix(&self.gram_v, n, n, "gram_v")?;
        let gram_h = rows_to_matrix(&self.gram_h, m, m, "gram_h")?;
        let j = rows_to_matrix(&self.j, m, n, "j")?;
        let form = rows_to_matrix(&self.form, n, n, "form")?;
        Ok(build_triple(gram_v, gram_h, j, form)?.with_label(self.label))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{complex_diag, identity, real_diag};

    fn identity_triple(n: usize) -> FormTriple {
        build_triple(identity(n), identity(n), identity(n), identity(n)).unwrap()
    }

    #[test]
    fn identity_triple_has_unit_continuity() {
        let t = identity_triple(3);
        assert!((t.continuity() - 1.0).abs() < 1e-14);
        assert!(t.j().is_injective());
        assert!(t.j().is_identity());
    }

    #[test]
    fn rank_deficient_embedding_is_rejected() {
        let j = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0)]);
        let err = build_triple(identity(2), identity(2), j, identity(2)).unwrap_err();
        assert_eq!(err, Error::DenseRange { rank: 1, required: 2 });
    }

    #[test]
    fn indefinite_gram_is_rejected() {
        let err = build_triple(real_diag(&[1.0, -1.0]), identity(2), identity(2), identity(2)).unwrap_err();
        assert!(matches!(err, Error::Definiteness { what: "V-Gram", .. }));
    }

    #[test]
    fn shifts() {
        let t = identity_triple(2);
        assert_eq!(shift_form(&t, c64(0.0, 0.0)).form(), t.form());
        let s = shift_form(&t, c64(0.0, 1.0));
        assert_eq!(s.form(), &(identity(2) - identity(2) * c64(0.0, 1.0)));

        let lambdas = [1.0, 2.0, 5.0];
        let f = complex_diag(&lambdas.map(|l| c64(0.0, l)));
        let diag = build_triple(real_diag(&lambdas), identity(3), identity(3), f).unwrap();
        let s = shift_form(&diag, c64(0.0, 1.0));
        let want = complex_diag(&lambdas.map(|l| c64(0.0, l - 1.0)));
        assert_eq!(s.form(), &want);
        assert_eq!(s.shift(c64(0.0, -1.0)).form(), diag.form());
    }

    #[test]
    fn classify_identity_and_skew() {
        let c = classify(&identity_triple(2)).unwrap();
        assert!(c.symmetric && c.accretive && c.kernel_condition);
        assert_eq!(c.sector, Some(Sector { shift: 0.0, half_angle: 0.0 }));

        let skew = CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0), c64(0.0, 0.0)]);
        let t = build_triple(identity(2), identity(2), identity(2), skew).unwrap();
        let c = classify(&t).unwrap();
        assert!(!c.symmetric && c.accretive);
        assert_eq!(c.sector, Some(Sector { shift: 0.0, half_angle: FRAC_PI_2 }));
    }

    #[test]
    fn document_round_trip() {
        let f = CMatrix::from_row_slice(2, 2, &[c64(1.0, 0.5), c64(0.0, 2.0), c64(-1.0, 0.0), c64(3.0, 0.0)]);
        let t = build_triple(real_diag(&[2.0, 3.0]), identity(2), identity(2), f).unwrap().with_label("x");
        let back = FormTriple::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn malformed_document_is_rejected() {
        let mut doc = identity_triple(2).to_document();
        doc.form.pop();
        assert!(matches!(doc.into_triple(), Err(Error::Serialization(_))));
    }
}
