//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (Higham 2005). The Padé degree is picked from the 1-norm;
//! norms above the degree-13 threshold are scaled by `2^-s` and the result
//! squared back `s` times.

use nalgebra::DMatrix;

const THETA: [(usize, f64); 4] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
];
const THETA_13: f64 = 5.371_920_351_148_152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17_297_280.0,
    8_648_640.0,
    1_995_840.0,
    277_200.0,
    25_200.0,
    1_512.0,
    56.0,
    1.0,
];
const B9: [f64; 10] = [
    17_643_225_600.0,
    8_821_612_800.0,
    2_075_673_600.0,
    302_702_400.0,
    30_270_240.0,
    2_162_160.0,
    110_880.0,
    3_960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
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

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(a)` for a square matrix. Returns `None` if the Padé denominator is
/// singular or the result is not finite.
pub fn expm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    assert!(a.is_square(), "matrix exponential of a non-square matrix");
    let n = a.nrows();
    if n == 0 {
        return Some(a.clone());
    }
    let norm = norm1(a);
    if !norm.is_finite() {
        return None;
    }
    let ident = DMatrix::<f64>::identity(n, n);

    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = low_order_terms(a, coeffs, &ident);
            return pade_solve(&u, &v);
        }
    }

    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a * 2f64.powi(-s);
    let mut r = pade13(&scaled, &ident)?;
    for _ in 0..s {
        r = &r * &r;
    }
    r.iter().all(|v| v.is_finite()).then_some(r)
}

fn low_order_terms(
    a: &DMatrix<f64>,
    b: &[f64],
    ident: &DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let a2 = a * a;
    let mut odd = ident * b[1];
    let mut even = ident * b[0];
    let mut power = ident.clone();
    for k in 1..b.len() / 2 {
        power = &power * &a2;
        odd += &power * b[2 * k + 1];
        even += &power * b[2 * k];
    }
    (a * odd, even)
}

fn pade13(a: &DMatrix<f64>, ident: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let b = &B13;
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let u = a * (&a6 * inner_u + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + ident * b[1]);
    let inner_v = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * inner_v + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + ident * b[0];
    pade_solve(&u, &v)
}

fn pade_solve(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let p = v + u;
    let q = v - u;
    let r = q.lu().solve(&p)?;
    r.iter().all(|x| x.is_finite()).then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(a: &DMatrix<f64>, terms: usize) -> DMatrix<f64> {
        let n = a.nrows();
        let mut sum = DMatrix::identity(n, n);
        let mut term = DMatrix::identity(n, n);
        for k in 1..terms {
            term = &term * a / k as f64;
            sum += &term;
        }
        sum
    }

    fn max_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let scale = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        (a - b).iter().map(|v| v.abs()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn rotation() {
        for &theta in &[1e-3, 0.1, 0.9, 2.0, 5.0, 30.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -theta, theta, 0.0]);
            let e = expm(&a).unwrap();
            let (s, c) = f64::sin_cos(theta);
            let expected = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            assert!(max_rel(&e, &expected) < 1e-13, "theta={theta}");
        }
    }

    #[test]
    fn diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, 0.5, 4.0, 10.0]));
        let e = expm(&a).unwrap();
        for (i, d) in [-3.0f64, 0.5, 4.0, 10.0].iter().enumerate() {
            assert!((e[(i, i)] - d.exp()).abs() < 1e-13 * d.exp());
        }
    }

    #[test]
    fn matches_taylor_across_degrees() {
        // norms chosen to hit every Padé degree and the scaled branch
        for &scale in &[0.005, 0.1, 0.5, 1.5, 4.0, 12.0] {
            let a = DMatrix::from_fn(5, 5, |i, j| {
                scale * (((i * 7 + j * 3) % 5) as f64 - 2.0) / 5.0
            });
            let e = expm(&a).unwrap();
            let t = taylor(&a, 120);
            // the Taylor oracle itself cancels badly once the norm is large
            let tol = if scale > 5.0 { 1e-11 } else { 1e-12 };
            assert!(max_rel(&e, &t) < tol, "scale={scale} err={}", max_rel(&e, &t));
        }
    }

    #[test]
    fn nilpotent() {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let e = expm(&a).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0]);
        assert!(max_rel(&e, &expected) < 1e-15);
    }

    #[test]
    fn inverse_pair() {
        let a = DMatrix::from_fn(6, 6, |i, j| ((i as f64 + 1.0) * 0.3 - j as f64 * 0.2).sin());
        let prod = expm(&a).unwrap() * expm(&(-&a)).unwrap();
        assert!(max_rel(&prod, &DMatrix::identity(6, 6)) < 1e-12);
    }

    #[test]
    fn empty_and_nan() {
        assert_eq!(expm(&DMatrix::<f64>::zeros(0, 0)).unwrap().nrows(), 0);
        let a = DMatrix::from_element(2, 2, f64::NAN);
        assert!(expm(&a).is_none());
    }
}
