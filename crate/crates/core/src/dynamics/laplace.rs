//! Laplace-domain solution of the memory equation for exponential kernels.
//!
//! With K(τ) = Σ_j A_j e^{−Δ_j τ}, Δ_j = B_j + i(Ω_j − ω_e), the excited
//! amplitude obeys
//!
//! ```text
//! Y(s) = [y₀ + S(s)] Π(s) / P₀(s),   Π = ∏_j (s + Δ_j),
//! P₀ = sΠ + Σ_j A_j Π/(s + Δ_j).
//! ```
//!
//! An initial-photon source −i Σ_k a_k e^{−β_k t} adds simple poles at −β_k;
//! a drive source −t·C_g0(0) Σ_k a_k e^{−β_k t} adds double poles. Everything
//! here is in natural units (eV, ħ/eV); [`ExponentialSum`] is stored in fs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::{self, Poly};
use crate::error::{Error, Result};
use crate::lorentzian::LorentzianSet;
use crate::units::HBAR_EV_FS;

/// Roots closer than this (1/fs) are treated as one repeated root.
pub const ROOT_CLUSTER_RADIUS_PER_FS: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// One fitted source product together with the way it enters the equation.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    /// √K(ω)·C_g1(ω,0): S(t) = −i Σ a_k e^{−β_k t}.
    InitialPhoton(LorentzianSet),
    /// √K(ω)·D(ω) with D in eV^{1/2}: S(t) = −t·c_g0 Σ a_k e^{−β_k t}.
    Drive { set: LorentzianSet, c_g0: Complex64 },
}

impl Source {
    pub fn set(&self) -> &LorentzianSet {
        match self {
            Source::InitialPhoton(s) => s,
            Source::Drive { set, .. } => set,
        }
    }

    /// S(t) for t in natural units.
    pub fn eval(&self, omega_e: f64, t: f64) -> Complex64 {
        match self {
            Source::InitialPhoton(s) => -I * s.time_kernel(omega_e, t),
            Source::Drive { set, c_g0 } => -t * c_g0 * set.time_kernel(omega_e, t),
        }
    }
}

/// Total source S(t) (natural units); zero when `sources` is empty.
pub fn source_term(sources: &[Source], omega_e: f64, t: f64) -> Complex64 {
    sources.iter().map(|s| s.eval(omega_e, t)).sum()
}

/// Y(s) = Q(s)/P(s) with P kept in factored form: P = P₀(s)·∏(s − r) over
/// the known source poles.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceRational {
    pub numerator: Poly,
    /// Monic kernel polynomial P₀.
    pub kernel_poly: Poly,
    /// Poles contributed by sources, with multiplicity.
    pub source_poles: Vec<Complex64>,
}

impl LaplaceRational {
    pub fn denominator(&self) -> Poly {
        let shifts: Vec<Complex64> = self.source_poles.iter().map(|r| -r).collect();
        poly::mul(&self.kernel_poly, &poly::product_of_linear(&shifts))
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly::eval(&self.numerator, s) / poly::eval(&self.denominator(), s)
    }
}

pub fn build_laplace_rational(
    kernel: &LorentzianSet,
    sources: &[Source],
    omega_e: f64,
    c_e0_init: Complex64,
) -> Result<LaplaceRational> {
    if kernel.is_empty() {
        return Err(Error::InvalidArgument("kernel has no terms".into()));
    }
    let deltas: Vec<Complex64> = kernel.terms().iter().map(|t| t.rate(omega_e)).collect();
    let pi = poly::product_of_linear(&deltas);
    let mut p0 = poly::mul(&pi, &[ZERO, ONE]);
    for (j, t) in kernel.terms().iter().enumerate() {
        let others: Vec<Complex64> = deltas
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != j)
            .map(|(_, d)| *d)
            .collect();
        let term = poly::scale(
            &poly::product_of_linear(&others),
            Complex64::new(t.area, 0.0),
        );
        p0 = poly::add(&p0, &term);
    }

    // Source poles −β and the bracket y₀ + S(s) over the common denominator E(s).
    struct Pole {
        beta: Complex64,
        coeff: Complex64,
        order: usize,
    }
    let mut poles = Vec::new();
    for src in sources {
        for t in src.set().terms() {
            let beta = t.rate(omega_e);
            match src {
                Source::InitialPhoton(_) => poles.push(Pole {
                    beta,
                    coeff: -I * t.area,
                    order: 1,
                }),
                Source::Drive { c_g0, .. } => poles.push(Pole {
                    beta,
                    coeff: -c_g0 * t.area,
                    order: 2,
                }),
            }
        }
    }
    let mut source_poles = Vec::new();
    let mut e_shifts = Vec::new();
    for p in &poles {
        for _ in 0..p.order {
            source_poles.push(-p.beta);
            e_shifts.push(p.beta);
        }
    }
    let e_all = poly::product_of_linear(&e_shifts);
    let mut bracket = poly::scale(&e_all, c_e0_init);
    for (idx, p) in poles.iter().enumerate() {
        // E(s)/(s+β)^order: all factors except this pole's own
        let mut shifts = Vec::new();
        for (jdx, q) in poles.iter().enumerate() {
            let keep = if jdx == idx { 0 } else { q.order };
            for _ in 0..keep {
                shifts.push(q.beta);
            }
        }
        let part = poly::scale(&poly::product_of_linear(&shifts), p.coeff);
        bracket = poly::add(&bracket, &part);
    }
    Ok(LaplaceRational {
        numerator: poly::mul(&pi, &bracket),
        kernel_poly: p0,
        source_poles,
    })
}

/// One term X·t^k·e^{−Y t} with t in fs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amplitude: Complex64,
    /// Complex rate Y (1/fs); Re Y ≥ 0 for decaying terms.
    pub rate: Complex64,
    pub power: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExponentialSum {
    terms: Vec<ExpTerm>,
}

impl ExponentialSum {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Value at t (fs).
    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|x| x.amplitude * t.powi(x.power as i32) * (-x.rate * t).exp())
            .sum()
    }

    /// Smallest Re Y (1/fs); negative values mean growth.
    pub fn min_decay_rate(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.rate.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// Terms in natural units: (X_nat, λ_nat, k) with value X·t^k·e^{λt},
    /// t in ħ/eV.
    pub fn natural_terms(&self) -> Vec<(Complex64, Complex64, u32)> {
        self.terms
            .iter()
            .map(|t| {
                (
                    t.amplitude * HBAR_EV_FS.powi(t.power as i32),
                    -t.rate * HBAR_EV_FS,
                    t.power,
                )
            })
            .collect()
    }
}

/// Groups roots within `radius` (single linkage) and returns cluster means
/// with multiplicities.
fn cluster_roots(mut roots: Vec<Complex64>, radius: f64) -> Vec<(Complex64, usize)> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (roots[i] - roots[j]).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Complex64, usize)> = Vec::new();
    for (i, &root) in roots.iter().enumerate().take(n) {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += root;
                g.2 += 1;
            }
            None => groups.push((r, root, 1)),
        }
    }
    roots.clear();
    groups
        .into_iter()
        .map(|(_, sum, m)| (sum / m as f64, m))
        .collect()
}

/// Truncated power-series division a/b (both Taylor coefficient vectors).
fn series_div(a: &[Complex64], b: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; m];
    for k in 0..m {
        let mut acc = a.get(k).copied().unwrap_or(ZERO);
        for j in 1..=k {
            acc -= b.get(j).copied().unwrap_or(ZERO) * c[k - j];
        }
        c[k] = acc / b[0];
    }
    c
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Partial-fraction inversion of Y(s) = Q/P into Σ X t^k e^{λt}.
pub fn invert_laplace(rational: &LaplaceRational) -> Result<ExponentialSum> {
    let dq = poly::degree(&rational.numerator);
    let dp0 = poly::degree(&rational.kernel_poly)
        .ok_or_else(|| Error::RootFinding("zero denominator".into()))?;
    let dp = dp0 + rational.source_poles.len();
    if let Some(dq) = dq {
        if dq >= dp {
            return Err(Error::InvalidArgument(format!(
                "improper rational function: deg Q = {dq} >= deg P = {dp}"
            )));
        }
    } else {
        return Ok(ExponentialSum::default());
    }
    let lead = rational.kernel_poly[dp0];
    let mut all = poly::roots(&rational.kernel_poly)?;
    all.extend(rational.source_poles.iter().copied());
    let radius = ROOT_CLUSTER_RADIUS_PER_FS * HBAR_EV_FS;
    let clusters = cluster_roots(all.clone(), radius);

    let mut terms = Vec::new();
    for (ci, &(lambda, m)) in clusters.iter().enumerate() {
        // Taylor series of H = P/(s−λ)^m about λ from the other clusters.
        let mut h = vec![ZERO; m];
        h[0] = lead;
        for (cj, &(mu, mj)) in clusters.iter().enumerate() {
            if cj == ci {
                continue;
            }
            for _ in 0..mj {
                // multiply by (λ − μ) + u
                let a0 = lambda - mu;
                for k in (0..m).rev() {
                    let prev = if k > 0 { h[k - 1] } else { ZERO };
                    h[k] = h[k] * a0 + prev;
                }
            }
        }
        let q = poly::taylor(&rational.numerator, lambda, m);
        let c = series_div(&q, &h, m);
        for l in 1..=m {
            let x = c[l - 1] / factorial(m - l);
            let power = (m - l) as u32;
            // natural → fs: X t_nat^k = X (t_fs/ħ)^k
            terms.push(ExpTerm {
                amplitude: x / HBAR_EV_FS.powi(power as i32),
                rate: -lambda / HBAR_EV_FS,
                power,
            });
        }
    }
    Ok(ExponentialSum::new(terms))
}

/// Single-Lorentzian closed form e^{−B̃t/2}[cos bt + (B̃/2b) sin bt] with
/// 2b = √(4A − B̃²); `t` in fs, `area` in eV², `btilde` in eV.
///
/// Both cos(bt) and sin(bt)/b are even in b, so the branch of the root does
/// not matter; b → 0 is handled by the sinc limit.
pub fn c_e0_closed_form_single(area: f64, btilde: Complex64, t: f64) -> Complex64 {
    let tn = t / HBAR_EV_FS;
    let b = (4.0 * area - btilde * btilde).sqrt() / 2.0;
    let x = b * tn;
    let sinc = if x.norm() < 1e-4 {
        ONE - x * x / 6.0
    } else {
        x.sin() / x
    };
    (-btilde * tn / 2.0).exp() * (x.cos() + btilde / 2.0 * tn * sinc)
}

/// Excited amplitude as an exponential sum for a kernel set, sources and an
/// initial excited amplitude.
///
/// Uses the pseudo-mode structure instead of expanded polynomials: with
/// f(s) = s + Σ_j A_j/(s + Δ_j), Y(s) = R(s)/f(s) where R(s) = y₀ + S(s).
/// The zeros of f are the eigenvalues of the (n+1)-dimensional pseudo-mode
/// generator, and Laurent coefficients at every pole come from Taylor
/// series of f and R, which stay well conditioned for many terms.
pub fn solve_c_e0(
    kernel: &LorentzianSet,
    sources: &[Source],
    omega_e: f64,
    c_e0_init: Complex64,
) -> Result<ExponentialSum> {
    if kernel.is_empty() {
        return Err(Error::InvalidArgument("kernel has no terms".into()));
    }
    let modes: Vec<(f64, Complex64)> = kernel
        .terms()
        .iter()
        .filter(|t| t.area != 0.0)
        .map(|t| (t.area, t.rate(omega_e)))
        .collect();
    let poles = source_poles(sources, omega_e);
    if c_e0_init == ZERO && poles.is_empty() {
        return Ok(ExponentialSum::default());
    }

    let mut zeros = pseudo_mode_eigenvalues(&modes)?;
    for z in zeros.iter_mut() {
        *z = polish_secular(&modes, *z);
    }
    // tag: None = zero of f, Some(k) = source pole index
    let mut points: Vec<(Complex64, Option<usize>)> = zeros.iter().map(|z| (*z, None)).collect();
    points.extend(poles.iter().enumerate().map(|(k, p)| (-p.beta, Some(k))));
    let radius = ROOT_CLUSTER_RADIUS_PER_FS * HBAR_EV_FS;
    let clusters = cluster_points(&points, radius);

    let mut terms = Vec::new();
    for members in clusters {
        let lambda = members.iter().map(|&i| points[i].0).sum::<Complex64>() / members.len() as f64;
        let m_f = members.iter().filter(|&&i| points[i].1.is_none()).count();
        let local: Vec<usize> = members.iter().filter_map(|&i| points[i].1).collect();
        let m_r = local.iter().map(|&k| poles[k].order).max().unwrap_or(0);
        let m = m_f + m_r;
        // R(s)(s−λ)^{m_r}
        let mut r = vec![ZERO; m];
        if m_r < m {
            r[m_r] += c_e0_init;
        }
        for (k, p) in poles.iter().enumerate() {
            if local.contains(&k) {
                // c/(s+β)^o with −β = λ: c (s−λ)^{m_r − o}
                let shift = m_r - p.order;
                if shift < m {
                    r[shift] += p.coeff;
                }
            } else {
                let w = lambda + p.beta;
                let mut binom = 1.0;
                for kk in 0..m.saturating_sub(m_r) {
                    if kk > 0 {
                        binom *= -((p.order + kk - 1) as f64) / kk as f64;
                    }
                    r[m_r + kk] += p.coeff * binom * w.powi(-(p.order as i32) - kk as i32);
                }
            }
        }
        // (s−λ)^{m_f}/f(s)
        let fser = secular_taylor(&modes, lambda, m_f + m);
        let inv = series_div(&[Complex64::new(1.0, 0.0)], &fser[m_f..], m);
        let c = series_mul(&r, &inv, m);
        for l in 1..=m {
            let x = c[l - 1] / factorial(m - l);
            if x == ZERO {
                continue;
            }
            let power = (m - l) as u32;
            terms.push(ExpTerm {
                amplitude: x / HBAR_EV_FS.powi(power as i32),
                rate: -lambda / HBAR_EV_FS,
                power,
            });
        }
    }
    Ok(ExponentialSum::new(terms))
}

struct SourcePole {
    beta: Complex64,
    coeff: Complex64,
    order: usize,
}

fn source_poles(sources: &[Source], omega_e: f64) -> Vec<SourcePole> {
    let mut out = Vec::new();
    for src in sources {
        for t in src.set().terms() {
            let beta = t.rate(omega_e);
            out.push(match src {
                Source::InitialPhoton(_) => SourcePole {
                    beta,
                    coeff: -I * t.area,
                    order: 1,
                },
                Source::Drive { c_g0, .. } => SourcePole {
                    beta,
                    coeff: -c_g0 * t.area,
                    order: 2,
                },
            });
        }
    }
    out
}

/// Eigenvalues of the generator of (C, √A_j M_j): the zeros of f.
fn pseudo_mode_eigenvalues(modes: &[(f64, Complex64)]) -> Result<Vec<Complex64>> {
    let n = modes.len() + 1;
    let mut l = nalgebra::DMatrix::<Complex64>::zeros(n, n);
    for (j, &(a, d)) in modes.iter().enumerate() {
        let g = Complex64::new(a.sqrt(), 0.0);
        l[(0, j + 1)] = -g;
        l[(j + 1, 0)] = g;
        l[(j + 1, j + 1)] = -d;
    }
    let schur = l
        .try_schur(f64::EPSILON, 10_000)
        .ok_or_else(|| Error::RootFinding(format!("Schur iteration failed ({n} modes)")))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

fn secular(modes: &[(f64, Complex64)], s: Complex64) -> (Complex64, Complex64) {
    let mut f = s;
    let mut df = Complex64::new(1.0, 0.0);
    for &(a, d) in modes {
        let inv = 1.0 / (s + d);
        f += a * inv;
        df -= a * inv * inv;
    }
    (f, df)
}

fn polish_secular(modes: &[(f64, Complex64)], mut s: Complex64) -> Complex64 {
    let (mut f, _) = secular(modes, s);
    for _ in 0..30 {
        let (_, df) = secular(modes, s);
        if df.norm() == 0.0 {
            break;
        }
        let next = s - f / df;
        let (fn_, _) = secular(modes, next);
        if !(fn_.norm() < f.norm()) {
            break;
        }
        s = next;
        f = fn_;
    }
    s
}

/// Taylor coefficients of f about λ: f₀ = λ + ΣA/(λ+Δ), f₁ = 1 − ΣA/(λ+Δ)²,
/// f_k = Σ A (−1)^k/(λ+Δ)^{k+1}.
fn secular_taylor(modes: &[(f64, Complex64)], lambda: Complex64, m: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; m];
    if m > 0 {
        out[0] = lambda;
    }
    if m > 1 {
        out[1] = Complex64::new(1.0, 0.0);
    }
    for &(a, d) in modes {
        let inv = 1.0 / (lambda + d);
        let mut p = a * inv;
        for (k, o) in out.iter_mut().enumerate() {
            *o += p;
            let _ = k;
            p *= -inv;
        }
    }
    out
}

fn series_mul(a: &[Complex64], b: &[Complex64], m: usize) -> Vec<Complex64> {
    let mut c = vec![ZERO; m];
    for (i, x) in a.iter().enumerate().take(m) {
        for (j, y) in b.iter().enumerate().take(m - i) {
            c[i + j] += x * y;
        }
    }
    c
}

fn cluster_points(points: &[(Complex64, Option<usize>)], radius: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (points[i].0 - points[j].0).norm() < radius {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => g.1.push(i),
            None => groups.push((r, vec![i])),
        }
    }
    groups.into_iter().map(|g| g.1).collect()
}

/// Companion-matrix inversion of the expanded rational function; kept as an
/// independent path for cross-checks.
pub fn solve_c_e0_polynomial(
    kernel: &LorentzianSet,
    sources: &[Source],
    omega_e: f64,
    c_e0_init: Complex64,
) -> Result<ExponentialSum> {
    let r = build_laplace_rational(kernel, sources, omega_e, c_e0_init)?;
    invert_laplace(&r)
}
