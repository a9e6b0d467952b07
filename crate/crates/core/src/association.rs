//! The operator `A` on `H` associated with `(a, j)`.
//!
//! `f = A x` iff there is `u` with `j(u) = x` and `a(u, v) = <f, j(v)>_H` for
//! all `v`. In coordinates that means `F u = J* M_H f`, which is solvable for
//! `f` exactly when `F u` annihilates `ker J`. The constructions below build
//! a lifting matrix `L` (`J L = I`, `N* F L = 0` for a kernel basis `N`) and
//! read off `M_H A = L* F L`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formmodel::{build_triple, kernel_sigma_min, FormTriple};
use crate::numkernel::{
    c64, identity, inverse, max_abs, real_diag, row_space_and_kernel, solve, spectral_norm, CMatrix, KernelError,
    RANK_TOL,
};
use crate::sampling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssociationPath {
    IdentityEmbedding,
    Schur,
    DirectSolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssociatedOperator {
    matrix: CMatrix,
    triple: FormTriple,
    path: AssociationPath,
    lifting: CMatrix,
}

impl AssociatedOperator {
    /// `A` in `H`-coordinates.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn triple(&self) -> &FormTriple {
        &self.triple
    }

    pub fn path(&self) -> AssociationPath {
        self.path
    }

    /// `n x m` matrix taking `x` to the `u` with `j(u) = x` and `a(u, ker j) = 0`.
    pub fn lifting(&self) -> &CMatrix {
        &self.lifting
    }

    pub fn h_gram(&self) -> &CMatrix {
        self.triple.gram_h()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Same spaces, different matrix; used for rotated and perturbed copies.
    pub(crate) fn with_matrix(&self, matrix: CMatrix, triple: FormTriple) -> AssociatedOperator {
        AssociatedOperator { matrix, triple, ..self.clone() }
    }
}

/// Fails with the ill-posed error when `a` is singular on `ker j`.
fn require_kernel_condition(triple: &FormTriple) -> Result<()> {
    if let Some(sigma_min) = kernel_sigma_min(triple)? {
        if sigma_min <= RANK_TOL * spectral_norm(triple.form()).max(f64::MIN_POSITIVE) {
            return Err(Error::IllPosedAssociation { sigma_min });
        }
    }
    Ok(())
}

fn ill_posed(triple: &FormTriple) -> Error {
    let sigma_min = kernel_sigma_min(triple).ok().flatten().unwrap_or(0.0);
    Error::IllPosedAssociation { sigma_min }
}

fn finish(triple: &FormTriple, lifting: CMatrix, path: AssociationPath) -> Result<AssociatedOperator> {
    let mh_a = lifting.adjoint() * triple.form() * &lifting;
    let matrix = solve(triple.gram_h(), &mh_a)?;
    Ok(AssociatedOperator { matrix, triple: triple.clone(), path, lifting })
}

pub fn associate(triple: &FormTriple) -> Result<AssociatedOperator> {
    if triple.j().is_identity() {
        let matrix = solve(triple.gram_h(), triple.form())?;
        return Ok(AssociatedOperator {
            matrix,
            triple: triple.clone(),
            path: AssociationPath::IdentityEmbedding,
            lifting: identity(triple.dim_v()),
        });
    }
    if triple.j().is_injective() {
        let lifting = inverse(triple.j_matrix())?;
        return finish(triple, lifting, AssociationPath::Schur);
    }
    require_kernel_condition(triple)?;
    let (rows, ker) = row_space_and_kernel(triple.j_matrix())?;
    let f = triple.form();
    let c = triple.j_matrix() * &rows;
    let c_inv = inverse(&c)?;
    let kk = ker.adjoint() * f * &ker;
    let kr = ker.adjoint() * f * &rows;
    // u = R x' - N (N* F N)^{-1} N* F R x'  with  x' = C^{-1} x
    let correction = solve(&kk, &kr).map_err(|_| ill_posed(triple))?;
    let lifting = (&rows - &ker * correction) * c_inv;
    finish(triple, lifting, AssociationPath::Schur)
}

/// Association with a known coordinate split: `interior` lists the `V`
/// coordinates spanning `ker j` (their columns of `J` vanish) and the
/// remaining columns of `J` form an invertible block.
pub fn associate_with_split(triple: &FormTriple, interior: &[usize]) -> Result<AssociatedOperator> {
    let n = triple.dim_v();
    let m = triple.dim_h();
    let mut is_interior = vec![false; n];
    for &i in interior {
        if i >= n || is_interior[i] {
            return Err(Error::Precondition(format!("interior index {i} is out of range or repeated")));
        }
        is_interior[i] = true;
    }
    let boundary: Vec<usize> = (0..n).filter(|&i| !is_interior[i]).collect();
    if boundary.len() != m {
        return Err(Error::Precondition(format!(
            "{} boundary coordinates for a pivot space of dimension {m}",
            boundary.len()
        )));
    }
    let j = triple.j_matrix();
    let scale = max_abs(j);
    if interior.iter().any(|&i| j.column(i).iter().any(|z| z.norm() > RANK_TOL * scale)) {
        return Err(Error::Precondition("interior coordinates are not in ker j".into()));
    }
    let f = triple.form();
    let pick =
        |rs: &[usize], cs: &[usize], src: &CMatrix| CMatrix::from_fn(rs.len(), cs.len(), |r, c| src[(rs[r], cs[c])]);
    let all_h: Vec<usize> = (0..m).collect();
    let j_b = pick(&all_h, &boundary, j);
    let j_b_inv = inverse(&j_b)?;
    let mut lifting = CMatrix::zeros(n, m);
    if interior.is_empty() {
        for (r, &b) in boundary.iter().enumerate() {
            lifting.row_mut(b).copy_from(&j_b_inv.row(r));
        }
    } else {
        let f_ii = pick(interior, interior, f);
        let f_ib = pick(interior, &boundary, f);
        let u_i = -solve(&f_ii, &(f_ib * &j_b_inv)).map_err(|_| ill_posed(triple))?;
        for (r, &b) in boundary.iter().enumerate() {
            lifting.row_mut(b).copy_from(&j_b_inv.row(r));
        }
        for (r, &i) in interior.iter().enumerate() {
            lifting.row_mut(i).copy_from(&u_i.row(r));
        }
    }
    finish(triple, lifting, AssociationPath::Schur)
}

/// Lifting by one dense solve of `[N* F; J] u = [0; x]` per basis vector of `H`.
fn direct_lifting(triple: &FormTriple) -> Result<CMatrix> {
    let n = triple.dim_v();
    let m = triple.dim_h();
    let (_, ker) = row_space_and_kernel(triple.j_matrix())?;
    let k = ker.ncols();
    let mut system = CMatrix::zeros(n, n);
    system.rows_mut(0, k).copy_from(&(ker.adjoint() * triple.form()));
    system.rows_mut(k, m).copy_from(triple.j_matrix());
    let mut rhs = CMatrix::zeros(n, m);
    rhs.rows_mut(k, m).copy_from(&identity(m));
    solve(&system, &rhs).map_err(|e| match e {
        KernelError::Singular => ill_posed(triple),
        other => other.into(),
    })
}

/// Association computed column by column from the stacked system, without the
/// Schur complement; `M_H f = (J J*)^{-1} J F u`.
pub fn associate_direct(triple: &FormTriple) -> Result<AssociatedOperator> {
    require_kernel_condition(triple)?;
    let lifting = direct_lifting(triple)?;
    let j = triple.j_matrix();
    let mh_a = solve(&(j * j.adjoint()), &(j * triple.form() * &lifting))?;
    let matrix = solve(triple.gram_h(), &mh_a)?;
    Ok(AssociatedOperator { matrix, triple: triple.clone(), path: AssociationPath::DirectSolve, lifting })
}

/// Worst residual of the defining relation over the basis of `H` and
/// `samples` seeded random vectors. For each `x` the lifting `u` is rebuilt
/// from the stacked system and `a(u, phi_k) - <A x, j(phi_k)>_H` is checked for
/// every basis vector `phi_k` of `V`, together with `j(u) - x`. Residuals are
/// relative to `max(1, |F u|)`.
pub fn verify_graph(op: &AssociatedOperator, samples: usize) -> Result<f64> {
    let triple = op.triple();
    let m = triple.dim_h();
    let lifting = if op.path() == AssociationPath::IdentityEmbedding { identity(m) } else { direct_lifting(triple)? };
    let mut rng = sampling::rng(0x5eed_9a4f);
    let mut xs = identity(m);
    if samples > 0 {
        xs = CMatrix::from_fn(m, m + samples, |r, c| if c < m { xs[(r, c)] } else { c64(0.0, 0.0) });
        let random = sampling::complex_normal_matrix(&mut rng, m, samples);
        xs.columns_mut(m, samples).copy_from(&random);
    }
    let j = triple.j_matrix();
    let jt_m = j.adjoint() * triple.gram_h();
    let mut worst = 0.0_f64;
    for col in 0..xs.ncols() {
        let x = xs.column(col).into_owned();
        let u = &lifting * &x;
        let fu = triple.form() * &u;
        let scale = fu.camax().max(1.0);
        let graph = (&fu - &jt_m * (op.matrix() * &x)).camax() / scale;
        let trace = (j * &u - &x).camax() / x.camax().max(1.0);
        worst = worst.max(graph).max(trace);
    }
    Ok(worst)
}

/// Triple of the multiplication operator `m` on the discrete measure `mu`:
/// `V`-Gram `diag((1 + |m_k|) mu_k)`, `H`-Gram `diag(mu_k)`, `F = diag(m_k mu_k)`.
pub fn from_multiplication(m_values: &[f64], weights: &[f64]) -> Result<FormTriple> {
    if m_values.len() != weights.len() || m_values.is_empty() {
        return Err(Error::Dimension(format!(
            "{} multiplier values against {} weights",
            m_values.len(),
            weights.len()
        )));
    }
    if let Some(&bad) = weights.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::Definiteness {
            what: "measure weights",
            source: KernelError::NotPositiveDefinite { min_eigenvalue: bad },
        });
    }
    if m_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Kernel(KernelError::NonFinite));
    }
    let gram_h = real_diag(weights);
    let gram_v = real_diag(&m_values.iter().zip(weights).map(|(m, w)| (1.0 + m.abs()) * w).collect::<Vec<_>>());
    let form = real_diag(&m_values.iter().zip(weights).map(|(m, w)| m * w).collect::<Vec<_>>());
    Ok(build_triple(gram_v, gram_h, identity(m_values.len()), form)?.with_label("multiplication"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::{c64, max_abs};

    #[test]
    fn identity_triple_associates_to_identity() {
        let t = build_triple(identity(3), identity(3), identity(3), identity(3)).unwrap();
        let op = associate(&t).unwrap();
        assert_eq!(op.path(), AssociationPath::IdentityEmbedding);
        assert_eq!(op.matrix(), &identity(3));
        assert_eq!(verify_graph(&op, 4).unwrap(), 0.0);
    }

    #[test]
    fn multiplication_operator() {
        let t = from_multiplication(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).unwrap();
        let op = associate(&t).unwrap();
        assert!(max_abs(&(op.matrix() - real_diag(&[1.0, 2.0, 3.0]))) < 1e-15);

        let t = from_multiplication(&[0.0, 0.0], &[2.0, 0.5]).unwrap();
        assert_eq!(t.gram_v(), t.gram_h());
        assert!(max_abs(associate(&t).unwrap().matrix()) == 0.0);

        assert!(matches!(from_multiplication(&[1.0], &[0.0]), Err(Error::Definiteness { .. })));
    }

    #[test]
    fn singular_kernel_block_is_refused() {
        // V = C^2, j = first coordinate, a vanishes on the kernel direction
        let j = CMatrix::from_row_slice(1, 2, &[c64(1.0, 0.0), c64(0.0, 0.0)]);
        let f = real_diag(&[1.0, 0.0]);
        let t = build_triple(identity(2), identity(1), j, f).unwrap();
        assert!(matches!(associate(&t), Err(Error::IllPosedAssociation { .. })));
        assert!(matches!(associate_direct(&t), Err(Error::IllPosedAssociation { .. })));
        assert!(matches!(associate_with_split(&t, &[1]), Err(Error::IllPosedAssociation { .. })));
    }

    #[test]
    fn split_and_svd_paths_agree() {
        // harmonic extension on three nodes: stiffness of two unit elements
        let f = CMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0].map(|v| c64(v, 0.0)));
        let j = CMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0].map(|v| c64(v, 0.0)));
        let t = build_triple(identity(3), identity(2), j, f).unwrap();
        let a = associate(&t).unwrap();
        let b = associate_with_split(&t, &[1]).unwrap();
        let c = associate_direct(&t).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5].map(|v| c64(v, 0.0)));
        for op in [&a, &b, &c] {
            assert!(max_abs(&(op.matrix() - &want)) < 1e-13);
            assert!(verify_graph(op, 3).unwrap() < 1e-13);
        }
    }
}
