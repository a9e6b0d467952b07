//! Desk-scale example problems, each refinement-ready.
//!
//! All problems live on an interval `(0, L)` discretised by `n` piecewise
//! linear elements, except the Dirichlet-to-Neumann problem which also comes
//! on a tensor square. Coefficients are sampled at nodes and integrated with
//! the trapezoid rule; the pivot space is `L^2` with the consistent mass
//! matrix and `V` carries the `H^1` Gram matrix `K + M`.

pub mod fem;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::formmodel::{build_triple, FormTriple};
use crate::numkernel::{c64, complex_diag, hermitian_pencil_eigs, real_diag, CMatrix, HermitianPencil, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Neumann,
    Dirichlet,
}

/// Real coefficient `m(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PotentialSpec {
    Constant {
        value: f64,
    },
    /// `value` on `[from, to]`, zero elsewhere.
    Step {
        value: f64,
        from: f64,
        to: f64,
    },
    /// `amplitude exp(-((x - center) / width)^2)`.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// Nodal values, one per node `0..=n`.
    Nodal {
        values: Vec<f64>,
    },
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec::Constant { value: 0.0 }
    }
}

impl PotentialSpec {
    pub fn sample(&self, xs: &[f64]) -> Result<Vec<f64>> {
        Ok(match self {
            PotentialSpec::Constant { value } => vec![*value; xs.len()],
            PotentialSpec::Step { value, from, to } => {
                xs.iter().map(|&x| if x >= *from && x <= *to { *value } else { 0.0 }).collect()
            }
            PotentialSpec::Gaussian { amplitude, center, width } => {
                xs.iter().map(|&x| amplitude * (-((x - center) / width).powi(2)).exp()).collect()
            }
            PotentialSpec::Nodal { values } => {
                if values.len() != xs.len() {
                    return Err(Error::Input(format!("{} nodal values for {} nodes", values.len(), xs.len())));
                }
                values.clone()
            }
        })
    }
}

/// Complex coefficient `b(x)` or `c(x)` of a first-order term.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CoefficientSpec {
    #[default]
    Zero,
    /// `(re + i im) (1 - r^2)^2` for `r = |x - center| / radius < 1`, zero outside.
    Bump { re: f64, im: f64, center: f64, radius: f64 },
    /// Nodal values as `[re, im]` pairs.
    Nodal { values: Vec<[f64; 2]> },
    /// Complex conjugate of `b` (only for `c`).
    Conjugate,
}

impl CoefficientSpec {
    fn sample(&self, xs: &[f64], conjugate_of: Option<&[C64]>) -> Result<Vec<C64>> {
        Ok(match self {
            CoefficientSpec::Zero => vec![c64(0.0, 0.0); xs.len()],
            CoefficientSpec::Bump { re, im, center, radius } => xs
                .iter()
                .map(|&x| {
                    let r = (x - center).abs() / radius;
                    if r < 1.0 {
                        c64(*re, *im) * (1.0 - r * r).powi(2)
                    } else {
                        c64(0.0, 0.0)
                    }
                })
                .collect(),
            CoefficientSpec::Nodal { values } => {
                if values.len() != xs.len() {
                    return Err(Error::Input(format!("{} nodal coefficients for {} nodes", values.len(), xs.len())));
                }
                values.iter().map(|v| c64(v[0], v[1])).collect()
            }
            CoefficientSpec::Conjugate => match conjugate_of {
                Some(b) => b.iter().map(|z| z.conj()).collect(),
                None => return Err(Error::Input("the drift coefficient b cannot be a conjugate".into())),
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtnDomain {
    #[default]
    Interval,
    Square,
}

/// Problem description as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `int u' conj(v)' + (m + shift) u conj(v)`.
    Schrodinger1d {
        length: f64,
        n: usize,
        #[serde(default)]
        potential: PotentialSpec,
        #[serde(default)]
        shift: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    /// Form `int grad u grad conj(v) + m u conj(v)` with `j` the boundary trace.
    Dtn {
        #[serde(default)]
        domain: DtnDomain,
        length: f64,
        n: usize,
        #[serde(default)]
        potential: PotentialSpec,
    },
    /// `int u' conj(v)' + delta u conj(v) + b u conj(v)' + c conj(v) u'`.
    Drift {
        length: f64,
        n: usize,
        #[serde(default)]
        b: CoefficientSpec,
        #[serde(default)]
        c: CoefficientSpec,
        delta: f64,
        #[serde(default)]
        boundary: Boundary,
    },
    /// `int u' conj(v)` on `H^1_0(0, L)`.
    Shiftform { length: f64, n: usize },
    /// `sum i lambda_k u_k conj(v_k)` with `|u|_V^2 = sum lambda_k |u_k|^2`.
    Diagonal { lambdas: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Schrodinger1d,
    Dtn,
    Drift,
    Shiftform,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalleryProblem {
    pub kind: ProblemKind,
    pub spec: ProblemSpec,
    pub triple: FormTriple,
    /// `V` coordinates spanning `ker j`, when the split is known from the mesh.
    pub interior: Option<Vec<usize>>,
}

fn check_mesh(length: f64, n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::Input(format!("at least 4 elements are needed, got {n}")));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::Input(format!("interval length must be positive, got {length}")));
    }
    Ok(())
}

fn kept_nodes(n: usize, boundary: Boundary) -> Vec<usize> {
    match boundary {
        Boundary::Neumann => (0..=n).collect(),
        Boundary::Dirichlet => (1..n).collect(),
    }
}

/// Triple with `V`-Gram `K + M`, pivot Gram `M` and `j = I` on the kept nodes.
fn interval_triple(length: f64, n: usize, form: &CMatrix, boundary: Boundary, label: &str) -> Result<FormTriple> {
    let keep = kept_nodes(n, boundary);
    let k = fem::stiffness(length, n);
    let m = fem::mass(length, n);
    let gram_v = fem::restrict(&(&k + &m), &keep);
    let gram_h = fem::restrict(&m, &keep);
    let f = fem::restrict(form, &keep);
    let dim = keep.len();
    Ok(build_triple(gram_v, gram_h, crate::numkernel::identity(dim), f)?.with_label(label))
}

pub fn schrodinger1d(
    length: f64,
    n: usize,
    potential: &PotentialSpec,
    shift: f64,
    boundary: Boundary,
) -> Result<FormTriple> {
    check_mesh(length, n)?;
    let xs = fem::nodes(length, n);
    let m: Vec<f64> = potential.sample(&xs)?.iter().map(|v| v + shift).collect();
    let form = fem::stiffness(length, n) + fem::weighted_diagonal(&fem::lumped_weights(length, n), &m);
    interval_triple(length, n, &form, boundary, "schrodinger1d")
}

pub fn drift(
    length: f64,
    n: usize,
    b: &CoefficientSpec,
    c: &CoefficientSpec,
    delta: f64,
    boundary: Boundary,
) -> Result<FormTriple> {
    check_mesh(length, n)?;
    if !(delta > 0.0) {
        return Err(Error::Input(format!("the mass shift delta must be positive, got {delta}")));
    }
    let xs = fem::nodes(length, n);
    let b_values = b.sample(&xs, None)?;
    let c_values = c.sample(&xs, Some(&b_values))?;
    let mut form =
        fem::stiffness(length, n) + fem::weighted_diagonal(&fem::lumped_weights(length, n), &vec![delta; n + 1]);
    if b_values.iter().chain(&c_values).any(|z| *z != c64(0.0, 0.0)) {
        form += fem::drift(n, &b_values, &c_values);
    }
    interval_triple(length, n, &form, boundary, "drift")
}

pub fn shiftform(length: f64, n: usize) -> Result<FormTriple> {
    check_mesh(length, n)?;
    interval_triple(length, n, &fem::first_derivative(n), Boundary::Dirichlet, "shiftform")
}

pub fn diagonal(lambdas: &[f64]) -> Result<FormTriple> {
    if lambdas.is_empty() || !(lambdas[0] > 0.0) {
        return Err(Error::Input("diagonal entries must start with a positive value".into()));
    }
    if lambdas.windows(2).any(|w| w[1] < w[0]) || lambdas.iter().any(|l| !l.is_finite()) {
        return Err(Error::Input("diagonal entries must be finite and nondecreasing".into()));
    }
    let n = lambdas.len();
    let f: Vec<C64> = lambdas.iter().map(|&l| c64(0.0, l)).collect();
    Ok(build_triple(
        real_diag(lambdas),
        crate::numkernel::identity(n),
        crate::numkernel::identity(n),
        complex_diag(&f),
    )?
    .with_label("diagonal"))
}

/// Dirichlet-to-Neumann triple and the interior coordinates (`ker j`).
pub fn dtn(domain: DtnDomain, length: f64, n: usize, potential: &PotentialSpec) -> Result<(FormTriple, Vec<usize>)> {
    check_mesh(length, n)?;
    let (k, mass, form, boundary, boundary_mass, dim) = match domain {
        DtnDomain::Interval => {
            let xs = fem::nodes(length, n);
            let m = potential.sample(&xs)?;
            let k = fem::stiffness(length, n);
            let form = &k + fem::weighted_diagonal(&fem::lumped_weights(length, n), &m);
            (k, fem::mass(length, n), form, vec![0, n], crate::numkernel::identity(2), n + 1)
        }
        DtnDomain::Square => {
            let (k1, m1) = (fem::stiffness(length, n), fem::mass(length, n));
            let k = fem::kron(&k1, &m1) + fem::kron(&m1, &k1);
            let mass = fem::kron(&m1, &m1);
            let xs = fem::nodes(length, n);
            let w = fem::lumped_weights(length, n);
            let mut weights = Vec::with_capacity((n + 1) * (n + 1));
            let mut values = Vec::with_capacity((n + 1) * (n + 1));
            // potentials on the square depend on x only
            let row = potential.sample(&xs)?;
            for j in 0..=n {
                for i in 0..=n {
                    weights.push(w[i] * w[j]);
                    values.push(row[i]);
                }
            }
            let form = &k + fem::weighted_diagonal(&weights, &values);
            let boundary = fem::square_boundary(n);
            (k, mass, form, boundary, fem::square_boundary_mass(length, n), (n + 1) * (n + 1))
        }
    };
    let mut j = CMatrix::zeros(boundary.len(), dim);
    for (r, &node) in boundary.iter().enumerate() {
        j[(r, node)] = c64(1.0, 0.0);
    }
    let interior: Vec<usize> = (0..dim).filter(|i| boundary.binary_search(i).is_err()).collect();
    let triple = build_triple(&k + &mass, boundary_mass, j, form)?.with_label("dtn");
    Ok((triple, interior))
}

/// Constant potential that makes the interior Dirichlet block singular:
/// minus the smallest eigenvalue of (interior stiffness, interior lumped mass).
pub fn dtn_singular_potential(domain: DtnDomain, length: f64, n: usize) -> Result<f64> {
    let (_, interior) = dtn(domain, length, n, &PotentialSpec::default())?;
    let (k, weights) = match domain {
        DtnDomain::Interval => (fem::stiffness(length, n), fem::lumped_weights(length, n)),
        DtnDomain::Square => {
            let (k1, m1) = (fem::stiffness(length, n), fem::mass(length, n));
            let w = fem::lumped_weights(length, n);
            let weights =
                (0..=n).flat_map(|j| (0..=n).map(move |i| (i, j))).map(|(i, j)| w[i] * w[j]).collect::<Vec<_>>();
            (fem::kron(&k1, &m1) + fem::kron(&m1, &k1), weights)
        }
    };
    let k_ii = fem::restrict(&k, &interior);
    let m_ii = real_diag(&interior.iter().map(|&i| weights[i]).collect::<Vec<_>>());
    let eig = hermitian_pencil_eigs(&HermitianPencil::new(k_ii, m_ii)?)?;
    Ok(-eig.min())
}

impl ProblemSpec {
    pub fn kind(&self) -> ProblemKind {
        match self {
            ProblemSpec::Schrodinger1d { .. } => ProblemKind::Schrodinger1d,
            ProblemSpec::Dtn { .. } => ProblemKind::Dtn,
            ProblemSpec::Drift { .. } => ProblemKind::Drift,
            ProblemSpec::Shiftform { .. } => ProblemKind::Shiftform,
            ProblemSpec::Diagonal { .. } => ProblemKind::Diagonal,
        }
    }

    pub fn build(&self) -> Result<GalleryProblem> {
        let (triple, interior) = match self {
            ProblemSpec::Schrodinger1d { length, n, potential, shift, boundary } => {
                (schrodinger1d(*length, *n, potential, *shift, *boundary)?, None)
            }
            ProblemSpec::Dtn { domain, length, n, potential } => {
                let (t, interior) = dtn(*domain, *length, *n, potential)?;
                (t, Some(interior))
            }
            ProblemSpec::Drift { length, n, b, c, delta, boundary } => {
                (drift(*length, *n, b, c, *delta, *boundary)?, None)
            }
            ProblemSpec::Shiftform { length, n } => (shiftform(*length, *n)?, None),
            ProblemSpec::Diagonal { lambdas } => (diagonal(lambdas)?, None),
        };
        Ok(GalleryProblem { kind: self.kind(), spec: self.clone(), triple, interior })
    }

    /// Mesh size, if the problem has one.
    pub fn n(&self) -> Option<usize> {
        match self {
            ProblemSpec::Schrodinger1d { n, .. }
            | ProblemSpec::Dtn { n, .. }
            | ProblemSpec::Drift { n, .. }
            | ProblemSpec::Shiftform { n, .. } => Some(*n),
            ProblemSpec::Diagonal { .. } => None,
        }
    }

    /// The same problem on a mesh with `n` elements.
    pub fn with_n(&self, new_n: usize) -> Result<ProblemSpec> {
        let mut spec = self.clone();
        match &mut spec {
            ProblemSpec::Schrodinger1d { n, .. }
            | ProblemSpec::Dtn { n, .. }
            | ProblemSpec::Drift { n, .. }
            | ProblemSpec::Shiftform { n, .. } => *n = new_n,
            ProblemSpec::Diagonal { .. } => {
                return Err(Error::Input("the diagonal problem has no mesh to refine".into()));
            }
        }
        Ok(spec)
    }

    /// The same problem on `(0, new_length)`.
    pub fn with_length(&self, new_length: f64) -> Result<ProblemSpec> {
        let mut spec = self.clone();
        match &mut spec {
            ProblemSpec::Schrodinger1d { length, .. }
            | ProblemSpec::Dtn { length, .. }
            | ProblemSpec::Drift { length, .. }
            | ProblemSpec::Shiftform { length, .. } => *length = new_length,
            ProblemSpec::Diagonal { .. } => {
                return Err(Error::Input("the diagonal problem has no interval".into()));
            }
        }
        Ok(spec)
    }
}

/// One problem per mesh size.
pub fn refinement_family(spec: &ProblemSpec, ns: &[usize]) -> Result<Vec<GalleryProblem>> {
    ns.iter().map(|&n| spec.with_n(n)?.build()).collect()
}

/// One problem per interval length, with `elements_per_unit * L` elements.
pub fn length_family(spec: &ProblemSpec, lengths: &[f64], elements_per_unit: usize) -> Result<Vec<GalleryProblem>> {
    lengths
        .iter()
        .map(|&l| {
            let n = (elements_per_unit as f64 * l).round() as usize;
            spec.with_length(l)?.with_n(n)?.build()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpectrumRow {
    pub length: f64,
    pub n: usize,
    /// `max |Re lambda|` over the discrete spectrum; the half-line operator fills `Re >= 0`.
    pub max_abs_real: f64,
    pub min_imag: f64,
    pub max_imag: f64,
}

/// Discrete spectra of the shift form over a range of interval lengths.
pub fn shiftform_spectrum_table(lengths: &[f64], elements_per_unit: usize) -> Result<Vec<ShiftSpectrumRow>> {
    lengths
        .iter()
        .map(|&length| {
            let n = (elements_per_unit as f64 * length).round() as usize;
            let op = crate::association::associate(&shiftform(length, n)?)?;
            let eig = crate::numkernel::general_eigs(op.matrix())?;
            let max_abs_real = eig.eigenvalues.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            let min_imag = eig.eigenvalues.iter().map(|z| z.im).fold(f64::INFINITY, f64::min);
            let max_imag = eig.eigenvalues.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
            Ok(ShiftSpectrumRow { length, n, max_abs_real, min_imag, max_imag })
        })
        .collect()
}
