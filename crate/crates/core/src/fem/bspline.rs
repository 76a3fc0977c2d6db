//! Uniform cubic B-splines on an open knot vector.

use crate::error::{check_finite, Error, Result};

const DEGREE: usize = 3;

/// Open uniform knot vector for `r` cubic B-splines on `[a, b]`.
///
/// The boundary knots are repeated four times and the `r − 3` inner
/// intervals have equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid {
    a: f64,
    b: f64,
    r: usize,
    knots: Vec<f64>,
}

impl KnotGrid {
    pub fn new(domain: (f64, f64), r: usize) -> Result<Self> {
        let (a, b) = domain;
        check_finite("domain start", a)?;
        check_finite("domain end", b)?;
        if !(0.0 <= a && a < b) {
            return Err(Error::domain(format!(
                "domain must satisfy 0 <= a < b, got [{a}, {b}]"
            )));
        }
        if r < 4 {
            return Err(Error::domain(format!(
                "cubic splines need at least 4 functions, got r = {r}"
            )));
        }
        let m = r - DEGREE;
        let h = (b - a) / m as f64;
        let mut knots = vec![a; DEGREE + 1];
        knots.extend((1..m).map(|i| a + i as f64 * h));
        knots.extend(std::iter::repeat_n(b, DEGREE + 1));
        Ok(KnotGrid { a, b, r, knots })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Number of B-splines.
    pub fn r(&self) -> usize {
        self.r
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn intervals(&self) -> usize {
        self.r - DEGREE
    }

    /// Distance between distinct knots.
    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.intervals() as f64
    }

    /// Distinct knots `a = t₀ < … < t_m = b`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.knots[DEGREE..=self.r]
    }

    /// Support `[knots[i], knots[i + 4]]` of spline `i`.
    pub fn support(&self, i: usize) -> (f64, f64) {
        (self.knots[i], self.knots[i + DEGREE + 1])
    }

    /// Inner interval containing `x`; the right end belongs to the last one.
    pub(crate) fn interval_of(&self, x: f64) -> usize {
        let m = self.intervals();
        let j = ((x - self.a) / self.spacing()).floor();
        if j < 0.0 {
            0
        } else {
            (j as usize).min(m - 1)
        }
    }

    /// Value, first and second derivative of the four splines that can be
    /// nonzero at `x`; returns the index of the first of them.
    pub(crate) fn local_derivatives(&self, x: f64) -> (usize, [[f64; 3]; 4]) {
        let span = self.interval_of(x) + DEGREE;
        let ders = span_derivatives(&self.knots, span, x);
        let mut out = [[0.0; 3]; 4];
        for (j, o) in out.iter_mut().enumerate() {
            *o = [ders[0][j], ders[1][j], ders[2][j]];
        }
        (span - DEGREE, out)
    }
}

/// Derivatives up to order 2 of the nonzero splines on knot span `span`
/// (knots[span] <= x < knots[span+1]), by the triangular de Boor scheme.
fn span_derivatives(knots: &[f64], span: usize, x: f64) -> [[f64; 4]; 3] {
    const P: usize = DEGREE;
    const N: usize = 2;
    let mut ndu = [[0.0f64; P + 1]; P + 1];
    let mut left = [0.0f64; P + 1];
    let mut right = [0.0f64; P + 1];
    ndu[0][0] = 1.0;
    for j in 1..=P {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = [[0.0f64; P + 1]; N + 1];
    for j in 0..=P {
        ders[0][j] = ndu[j][P];
    }
    let mut a = [[0.0f64; P + 1]; 2];
    for r in 0..=P {
        let (mut s1, mut s2) = (0, 1);
        a[0][0] = 1.0;
        for k in 1..=N {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = P - k;
            if rk >= 0 {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2: usize = if r as isize - 1 <= pk as isize { k - 1 } else { P - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = P as f64;
    for (k, row) in ders.iter_mut().enumerate().skip(1) {
        for v in row.iter_mut() {
            *v *= factor;
        }
        factor *= (P - k) as f64;
    }
    ders
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knot_vector_layout() {
        let g = KnotGrid::new((0.0, 10.0), 7).unwrap();
        assert_eq!(g.knots(), &[0.0, 0.0, 0.0, 0.0, 2.5, 5.0, 7.5, 10.0, 10.0, 10.0, 10.0]);
        assert_eq!(g.breakpoints(), &[0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(g.support(0), (0.0, 2.5));
        assert_eq!(g.support(3), (0.0, 10.0));
        assert!(KnotGrid::new((0.0, 1.0), 3).is_err());
        assert!(KnotGrid::new((2.0, 1.0), 5).is_err());
        assert!(KnotGrid::new((-1.0, 1.0), 5).is_err());
    }

    #[test]
    fn interior_uniform_spline_values() {
        // Far from the boundary every spline is the cardinal cubic.
        let g = KnotGrid::new((0.0, 20.0), 23).unwrap();
        let (first, d) = g.local_derivatives(10.0);
        assert_eq!(first, 10);
        let expected = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0];
        for j in 0..4 {
            assert!((d[j][0] - expected[j]).abs() < 1e-15);
        }
        assert!((d[0][1] + 0.5).abs() < 1e-14 && (d[2][1] - 0.5).abs() < 1e-14);
        assert!((d[1][2] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn clamped_start() {
        let g = KnotGrid::new((0.0, 4.0), 7).unwrap();
        let (first, d) = g.local_derivatives(0.0);
        assert_eq!(first, 0);
        assert_eq!(d[0][0], 1.0);
        assert!((d[0][1] + 3.0).abs() < 1e-14 && (d[1][1] - 3.0).abs() < 1e-14);
        assert_eq!(d[2][1], 0.0);
    }
}
