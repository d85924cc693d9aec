//! Chebyshev expansion of an energy-window indicator and its application to
//! vector blocks through the three-term recurrence.

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::HermitianOp;

use super::DampingKernel;

/// Affine rescaling pushing `[lo, hi]` onto `[-1, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct AffineMap {
    pub center: f64,
    pub half_width: f64,
}

impl AffineMap {
    pub fn from_bounds(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::validation(format!(
                "bounds [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        Ok(AffineMap {
            center: 0.5 * (lo + hi),
            half_width: 0.5 * (hi - lo),
        })
    }

    #[inline]
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.center) / self.half_width
    }
}

/// Chebyshev coefficients `c_0..c_degree` of the indicator of `[t1, t2]`
/// inside `[-1, 1]`:
///
/// ```text
/// c_0 = (acos(t1) - acos(t2)) / pi
/// c_j = 2 (sin(j acos(t1)) - sin(j acos(t2))) / (j pi)
/// ```
pub fn window_coefficients(degree: usize, t1: f64, t2: f64) -> Result<Vec<f64>> {
    if !(-1.0..=1.0).contains(&t1) || !(-1.0..=1.0).contains(&t2) || t1 >= t2 {
        return Err(Error::validation(format!(
            "window [{t1}, {t2}] must satisfy -1 <= t1 < t2 <= 1"
        )));
    }
    let theta1 = t1.acos();
    let theta2 = t2.acos();
    let mut c = Vec::with_capacity(degree + 1);
    c.push((theta1 - theta2) / std::f64::consts::PI);
    for j in 1..=degree {
        let jf = j as f64;
        c.push(2.0 * ((jf * theta1).sin() - (jf * theta2).sin()) / (jf * std::f64::consts::PI));
    }
    Ok(c)
}

/// Scalar Clenshaw evaluation of `sum_j coeffs[j] T_j(x)`.
pub fn clenshaw(coeffs: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coeffs.iter().skip(1).rev() {
        let b = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b;
    }
    coeffs[0] + x * b1 - b2
}

/// Apply `p(H~)` to one column, where `H~` is the affinely mapped operator
/// and `p` the Chebyshev series with the given coefficients.
pub(crate) fn apply_series_column<Op>(
    op: &Op,
    map: AffineMap,
    coeffs: &[f64],
    x: &[Complex64],
) -> Vec<Complex64>
where
    Op: HermitianOp + ?Sized,
{
    let dim = x.len();
    let inv_half = 1.0 / map.half_width;
    // mapped matvec: y = (H x - center x) / half_width
    let mapped = |src: &[Complex64], dst: &mut Vec<Complex64>| {
        dst.resize(dim, Complex64::default());
        op.apply_to(src, dst);
        for (d, s) in dst.iter_mut().zip(src) {
            *d = (*d - map.center * s) * inv_half;
        }
    };

    let mut acc: Vec<Complex64> = x.iter().map(|&v| v * coeffs[0]).collect();
    if coeffs.len() == 1 {
        return acc;
    }
    let mut t_prev: Vec<Complex64> = x.to_vec();
    let mut t_cur = Vec::new();
    mapped(x, &mut t_cur);
    for (a, &t) in acc.iter_mut().zip(t_cur.iter()) {
        *a += t * coeffs[1];
    }
    let mut scratch = Vec::new();
    for &c in coeffs.iter().skip(2) {
        // t_next = 2 H~ t_cur - t_prev
        mapped(&t_cur, &mut scratch);
        for (s, &tp) in scratch.iter_mut().zip(t_prev.iter()) {
            *s = 2.0 * *s - tp;
        }
        std::mem::swap(&mut t_prev, &mut t_cur);
        std::mem::swap(&mut t_cur, &mut scratch);
        for (a, &t) in acc.iter_mut().zip(t_cur.iter()) {
            *a += t * c;
        }
    }
    acc
}

/// Apply the damped window filter polynomial of `op` to each column of
/// `block`. `bounds` must enclose the spectrum and `window` must sit inside
/// `bounds`. One matvec per degree per column; columns are independent.
pub fn chebyshev_filter_apply<Op>(
    op: &Op,
    bounds: (f64, f64),
    window: (f64, f64),
    degree: usize,
    damping: DampingKernel,
    block: &[Vec<Complex64>],
) -> Result<Vec<Vec<Complex64>>>
where
    Op: HermitianOp + ?Sized,
{
    let coeffs = damped_window_coefficients(bounds, window, degree, damping)?;
    let map = AffineMap::from_bounds(bounds.0, bounds.1)?;
    let dim = op.dim();
    for col in block {
        if col.len() != dim {
            return Err(Error::validation(format!(
                "block column length {} does not match operator dimension {dim}",
                col.len()
            )));
        }
    }
    let columns: Vec<&Vec<Complex64>> = block.iter().collect();
    let out: Vec<Vec<Complex64>> = crate::par_iter!(columns)
        .map(|col| apply_series_column(op, map, &coeffs, col))
        .collect();
    Ok(out)
}

/// Kernel-damped window indicator coefficients in mapped coordinates.
pub(crate) fn damped_window_coefficients(
    bounds: (f64, f64),
    window: (f64, f64),
    degree: usize,
    damping: DampingKernel,
) -> Result<Vec<f64>> {
    let (blo, bhi) = bounds;
    let (wlo, whi) = window;
    if wlo < blo || whi > bhi {
        return Err(Error::validation(format!(
            "window [{wlo}, {whi}] is outside the bounds [{blo}, {bhi}]"
        )));
    }
    if wlo >= whi {
        return Err(Error::validation("window must have lo < hi"));
    }
    let map = AffineMap::from_bounds(blo, bhi)?;
    let t1 = map.forward(wlo).clamp(-1.0, 1.0);
    let t2 = map.forward(whi).clamp(-1.0, 1.0);
    let mut coeffs = window_coefficients(degree, t1, t2)?;
    for (c, g) in coeffs.iter_mut().zip(damping.factors(degree)) {
        *c *= g;
    }
    Ok(coeffs)
}
