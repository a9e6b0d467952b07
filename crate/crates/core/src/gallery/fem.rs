//! Piecewise linear (1D) and bilinear (tensor square) assembly on uniform meshes.

use crate::numkernel::{c64, CMatrix, C64};

/// Node coordinates `x_i = i L / n`, `i = 0..=n`.
pub fn nodes(length: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| length * i as f64 / n as f64).collect()
}

pub fn stiffness(length: f64, n: usize) -> CMatrix {
    let h = length / n as f64;
    let mut k = CMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        let (a, b) = (e, e + 1);
        k[(a, a)] += c64(1.0 / h, 0.0);
        k[(b, b)] += c64(1.0 / h, 0.0);
        k[(a, b)] -= c64(1.0 / h, 0.0);
        k[(b, a)] -= c64(1.0 / h, 0.0);
    }
    k
}

/// Consistent mass `h/6 [2 1; 1 2]` per element.
pub fn mass(length: f64, n: usize) -> CMatrix {
    let h = length / n as f64;
    let mut m = CMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        let (a, b) = (e, e + 1);
        m[(a, a)] += c64(h / 3.0, 0.0);
        m[(b, b)] += c64(h / 3.0, 0.0);
        m[(a, b)] += c64(h / 6.0, 0.0);
        m[(b, a)] += c64(h / 6.0, 0.0);
    }
    m
}

/// Trapezoid weights: `h` inside, `h/2` at the ends.
pub fn lumped_weights(length: f64, n: usize) -> Vec<f64> {
    let h = length / n as f64;
    (0..=n).map(|i| if i == 0 || i == n { h / 2.0 } else { h }).collect()
}

/// `diag(w_i m_i)`: nodal quadrature of `int m u conj(v)`.
pub fn weighted_diagonal(weights: &[f64], values: &[f64]) -> CMatrix {
    let d: Vec<C64> = weights.iter().zip(values).map(|(w, m)| c64(w * m, 0.0)).collect();
    CMatrix::from_diagonal(&crate::CVector::from_vec(d))
}

/// First-order terms `int b u conj(v)' + c conj(v) u'` with nodal quadrature
/// on each element; `b`, `c` are nodal values.
pub fn drift(n: usize, b: &[C64], c: &[C64]) -> CMatrix {
    let mut f = CMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        let local = [(e, -1.0), (e + 1, 1.0)];
        for &(k, sk) in &local {
            for &(l, sl) in &local {
                f[(k, l)] += b[l] * (0.5 * sk) + c[k] * (0.5 * sl);
            }
        }
    }
    f
}

/// `int u' conj(v)` on P1 elements: `1/2` above and `-1/2` below the diagonal.
pub fn first_derivative(n: usize) -> CMatrix {
    let mut f = CMatrix::zeros(n + 1, n + 1);
    for e in 0..n {
        let (a, b) = (e, e + 1);
        f[(a, b)] += c64(0.5, 0.0);
        f[(b, a)] -= c64(0.5, 0.0);
        // diagonal contributions cancel exactly: int phi_a' phi_a = -1/2, int phi_b' phi_b = 1/2
    }
    f
}

/// Rows and columns `keep` of `m`.
pub fn restrict(m: &CMatrix, keep: &[usize]) -> CMatrix {
    CMatrix::from_fn(keep.len(), keep.len(), |r, c| m[(keep[r], keep[c])])
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Index of node `(i, j)` on an `(n+1) x (n+1)` grid, `i` fastest.
pub fn grid_index(n: usize, i: usize, j: usize) -> usize {
    j * (n + 1) + i
}

/// Boundary nodes of the tensor square, in increasing index order.
pub fn square_boundary(n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(4 * n);
    for j in 0..=n {
        for i in 0..=n {
            if i == 0 || j == 0 || i == n || j == n {
                out.push(grid_index(n, i, j));
            }
        }
    }
    out
}

/// P1 mass of the boundary loop of the square, indexed like [`square_boundary`].
pub fn square_boundary_mass(length: f64, n: usize) -> CMatrix {
    let h = length / n as f64;
    let boundary = square_boundary(n);
    let pos = |node: usize| boundary.binary_search(&node).expect("boundary node");
    let mut m = CMatrix::zeros(boundary.len(), boundary.len());
    let mut edge = |p: usize, q: usize| {
        let (a, b) = (pos(p), pos(q));
        m[(a, a)] += c64(h / 3.0, 0.0);
        m[(b, b)] += c64(h / 3.0, 0.0);
        m[(a, b)] += c64(h / 6.0, 0.0);
        m[(b, a)] += c64(h / 6.0, 0.0);
    };
    for s in 0..n {
        edge(grid_index(n, s, 0), grid_index(n, s + 1, 0));
        edge(grid_index(n, s, n), grid_index(n, s + 1, n));
        edge(grid_index(n, 0, s), grid_index(n, 0, s + 1));
        edge(grid_index(n, n, s), grid_index(n, n, s + 1));
    }
    m
}

/// Interpolation from the mesh with `n` elements to the one with `2n`.
pub fn prolongation(n: usize) -> CMatrix {
    let mut p = CMatrix::zeros(2 * n + 1, n + 1);
    for i in 0..=n {
        p[(2 * i, i)] = c64(1.0, 0.0);
    }
    for i in 0..n {
        p[(2 * i + 1, i)] = c64(0.5, 0.0);
        p[(2 * i + 1, i + 1)] = c64(0.5, 0.0);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stencils_match_closed_forms() {
        let (l, n) = (1.0, 10);
        let h = l / n as f64;
        let k = stiffness(l, n);
        let m = mass(l, n);
        for i in 1..n {
            assert!((k[(i, i)].re - 2.0 / h).abs() < 1e-12);
            assert!((k[(i, i + 1)].re + 1.0 / h).abs() < 1e-12);
            assert!((m[(i, i)].re - 2.0 * h / 3.0).abs() < 1e-15);
            assert!((m[(i, i + 1)].re - h / 6.0).abs() < 1e-15);
        }
        let total: f64 = m.iter().map(|z| z.re).sum();
        assert!((total - l).abs() < 1e-14);
    }

    #[test]
    fn derivative_form_is_skew() {
        let f = first_derivative(5);
        assert_eq!(f.clone() + f.adjoint(), CMatrix::zeros(6, 6));
    }

    #[test]
    fn boundary_loop_has_perimeter_mass() {
        let m = square_boundary_mass(2.0, 4);
        assert_eq!(m.nrows(), 16);
        let total: f64 = m.iter().map(|z| z.re).sum();
        assert!((total - 8.0).abs() < 1e-14);
    }
}
