//! Complex polynomials in ascending coefficient order (c₀ + c₁s + …).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Poly = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn constant(c: Complex64) -> Poly {
    vec![c]
}

/// s + a
pub fn linear(a: Complex64) -> Poly {
    vec![a, ONE]
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ZERO; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn add(a: &[Complex64], b: &[Complex64]) -> Poly {
    let mut out = vec![ZERO; a.len().max(b.len())];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] += y;
    }
    out
}

pub fn scale(a: &[Complex64], c: Complex64) -> Poly {
    a.iter().map(|x| x * c).collect()
}

pub fn product_of_linear(shifts: &[Complex64]) -> Poly {
    shifts
        .iter()
        .fold(vec![ONE], |acc, a| mul(&acc, &linear(*a)))
}

/// Degree ignoring exactly-zero leading coefficients (−1 encoded as None).
pub fn degree(a: &[Complex64]) -> Option<usize> {
    a.iter().rposition(|c| *c != ZERO)
}

pub fn eval(a: &[Complex64], s: Complex64) -> Complex64 {
    a.iter().rev().fold(ZERO, |acc, c| acc * s + c)
}

/// Value and first derivative.
fn eval_with_derivative(a: &[Complex64], s: Complex64) -> (Complex64, Complex64) {
    let mut p = ZERO;
    let mut dp = ZERO;
    for c in a.iter().rev() {
        dp = dp * s + p;
        p = p * s + c;
    }
    (p, dp)
}

/// First `m` Taylor coefficients of `a` about `s0` (repeated synthetic
/// division): a(s) = Σ_k t_k (s − s0)^k.
pub fn taylor(a: &[Complex64], s0: Complex64, m: usize) -> Vec<Complex64> {
    let mut work: Vec<Complex64> = a.to_vec();
    let mut out = Vec::with_capacity(m);
    for _ in 0..m {
        if work.is_empty() {
            out.push(ZERO);
            continue;
        }
        // divide by (s − s0): remainder is the value
        let n = work.len();
        let mut q = vec![ZERO; n.saturating_sub(1)];
        let mut acc = ZERO;
        for i in (0..n).rev() {
            acc = acc * s0 + work[i];
            if i > 0 {
                q[i - 1] = acc;
            }
        }
        out.push(acc);
        work = q;
    }
    out
}

/// Roots of a polynomial via the eigenvalues of its companion matrix,
/// polished by Newton iteration on the original coefficients.
pub fn roots(a: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = degree(a).ok_or_else(|| Error::RootFinding("zero polynomial".into()))?;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = a[deg];
    let monic: Vec<Complex64> = a[..=deg].iter().map(|c| c / lead).collect();
    if deg == 1 {
        return Ok(vec![-monic[0]]);
    }
    let mut c = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        c[(i, i - 1)] = ONE;
    }
    for i in 0..deg {
        c[(i, deg - 1)] = -monic[i];
    }
    let schur = c
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::RootFinding(format!("Schur iteration failed (degree {deg})")))?;
    let (_, t) = schur.unpack();
    let mut out: Vec<Complex64> = (0..deg).map(|i| t[(i, i)]).collect();
    for r in out.iter_mut() {
        *r = polish(&monic, *r);
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(Error::RootFinding(format!(
                "non-finite root (degree {deg})"
            )));
        }
    }
    Ok(out)
}

fn polish(a: &[Complex64], mut s: Complex64) -> Complex64 {
    let (mut p, _) = eval_with_derivative(a, s);
    for _ in 0..50 {
        let (v, dv) = eval_with_derivative(a, s);
        if dv.norm() == 0.0 {
            break;
        }
        let next = s - v / dv;
        let (pn, _) = eval_with_derivative(a, next);
        // only accept steps that reduce the residual (protects clustered roots)
        if !(pn.norm() < p.norm()) {
            break;
        }
        s = next;
        p = pn;
        if p.norm() == 0.0 {
            break;
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn roots_of_known_product() {
        let rs = [c(-0.1, 0.3), c(-0.02, -0.5), c(0.0, 0.0), c(-1.0, 0.05)];
        let p = product_of_linear(&rs.map(|r| -r));
        let mut found = roots(&p).unwrap();
        for r in rs {
            let (i, d) = found
                .iter()
                .enumerate()
                .map(|(i, f)| (i, (f - r).norm()))
                .fold((0, f64::MAX), |b, x| if x.1 < b.1 { x } else { b });
            assert!(d < 1e-12, "{r} off by {d}");
            found.remove(i);
        }
    }

    #[test]
    fn taylor_reconstructs_polynomial() {
        let p = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.3, -0.1), c(2.0, 0.0)];
        let s0 = c(0.4, -0.2);
        let t = taylor(&p, s0, 4);
        let s = c(-0.3, 0.7);
        let back: Complex64 = t
            .iter()
            .enumerate()
            .map(|(k, tk)| tk * (s - s0).powu(k as u32))
            .sum();
        assert!((back - eval(&p, s)).norm() < 1e-13);
    }

    #[test]
    fn double_root_is_found_twice() {
        let p = product_of_linear(&[c(0.1, 0.2), c(0.1, 0.2), c(1.0, 0.0)]);
        let r = roots(&p).unwrap();
        let near: Vec<_> = r
            .iter()
            .filter(|x| (*x - c(-0.1, -0.2)).norm() < 1e-6)
            .collect();
        assert_eq!(near.len(), 2);
    }
}
