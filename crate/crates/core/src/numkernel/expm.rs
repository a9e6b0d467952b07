//! Scaling and squaring with the degree-13 diagonal Pade approximant.

use super::{all_finite, c64, identity, solve, CMatrix, KernelError, Result};

/// Degree of the diagonal Pade approximant.
pub const PADE_ORDER: usize = 13;
/// 1-norm below which the degree-13 approximant needs no squaring.
pub const PADE_THETA: f64 = 5.371_920_351_148_152;

const PADE_COEFFS: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn matrix_exponential(m: &CMatrix) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(KernelError::Dimension(format!("exp of {}x{}", m.nrows(), m.ncols())));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(KernelError::Scale { norm });
    }
    let squarings = if norm > PADE_THETA { (norm / PADE_THETA).log2().ceil() as i32 } else { 0 };
    if squarings > 1000 {
        return Err(KernelError::Scale { norm });
    }
    let a = m * c64(2f64.powi(-squarings), 0.0);
    let b = &PADE_COEFFS;
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let r = |x: f64| c64(x, 0.0);
    let u_inner = &a6 * (&a6 * r(b[13]) + &a4 * r(b[11]) + &a2 * r(b[9]))
        + &a6 * r(b[7])
        + &a4 * r(b[5])
        + &a2 * r(b[3])
        + &id * r(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * r(b[12]) + &a4 * r(b[10]) + &a2 * r(b[8]))
        + &a6 * r(b[6])
        + &a4 * r(b[4])
        + &a2 * r(b[2])
        + &id * r(b[0]);
    let mut result = solve(&(&v - &u), &(&v + &u)).map_err(|_| KernelError::Scale { norm })?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if !all_finite(&result) {
        return Err(KernelError::Scale { norm });
    }
    Ok(result)
}
