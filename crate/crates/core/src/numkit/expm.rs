//! Matrix exponential: Padé-13 scaling and squaring.

use num_complex::Complex64;

use super::lu::Lu;
use super::matrix::CMatrix;
use crate::error::{Error, Result};

const THETA_13: f64 = 5.371920351148152;

const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    let n = m.require_square("expm")?;
    let norm = m.norm_one();
    if norm == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale(Complex64::new(0.5f64.powi(s), 0.0));
    let id = CMatrix::identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let r = |x: f64| Complex64::new(x, 0.0);

    let u_inner = &(&a6.scale(r(B[13])) + &a4.scale(r(B[11]))) + &a2.scale(r(B[9]));
    let u_tail = &(&(&a6.scale(r(B[7])) + &a4.scale(r(B[5]))) + &a2.scale(r(B[3]))) + &id.scale(r(B[1]));
    let u = &a * &(&(&a6 * &u_inner) + &u_tail);

    let v_inner = &(&a6.scale(r(B[12])) + &a4.scale(r(B[10]))) + &a2.scale(r(B[8]));
    let v_tail = &(&(&a6.scale(r(B[6])) + &a4.scale(r(B[4]))) + &a2.scale(r(B[2]))) + &id.scale(r(B[0]));
    let v = &(&a6 * &v_inner) + &v_tail;

    let p = &v + &u;
    let q = &v - &u;
    let lu = Lu::factor(&q, 0.0)?;
    if lu.min_pivot == 0.0 {
        return Err(Error::Range("singular Padé denominator in expm".into()));
    }
    let mut x = lu.solve_matrix(&p);
    for _ in 0..s {
        x = &x * &x;
        if !x.is_finite() {
            break;
        }
    }
    if !x.is_finite() {
        return Err(Error::Range("matrix exponential overflowed".into()));
    }
    Ok(x)
}
