//! Riccati–Bessel functions in ratio/log form.
//!
//! Near-field Mie sums need orders up to ~200 at size parameters well below
//! one, where ψ_n underflows and ξ_n overflows `f64`. Everything here works
//! with consecutive-order ratios and complex logarithms instead; the
//! products that enter the Mie series are formed in log space.
//!
//! Conventions: ψ_n(x) = x j_n(x), ξ_n(x) = x h_n^{(1)}(x).

use num_complex::Complex64;

/// Logarithmic derivative D_n(z) = ψ_n'(z)/ψ_n(z) for n = 0..=n_max, by
/// downward recurrence (stable for complex arguments).
pub fn log_derivative(z: Complex64, n_max: usize) -> Vec<Complex64> {
    let n_start = n_max.max(z.norm().ceil() as usize) + 16;
    let mut d = Complex64::new(0.0, 0.0);
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for n in (1..=n_start).rev() {
        let nz = n as f64 / z;
        if n <= n_max {
            out[n] = d;
        }
        d = nz - 1.0 / (d + nz);
    }
    out[0] = d;
    out
}

/// Ratios ρ_n = ψ_n(x)/ψ_{n-1}(x) for n = 1..=n_max (index 0 unused), by
/// downward continued-fraction recurrence.
pub fn psi_ratios(x: f64, n_max: usize) -> Vec<f64> {
    let n_start = n_max.max(x.ceil() as usize) + 32;
    let mut rho = 0.0;
    let mut out = vec![0.0; n_max + 1];
    for n in (1..=n_start).rev() {
        rho = 1.0 / ((2 * n + 1) as f64 / x - rho);
        if n <= n_max {
            out[n] = rho;
        }
    }
    out
}

/// Ratios r_n = ξ_n(x)/ξ_{n-1}(x) for n = 1..=n_max, by upward recurrence
/// (ξ_n is the dominant solution, so this is stable).
pub fn xi_ratios(x: f64, n_max: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
    if n_max == 0 {
        return out;
    }
    out[1] = Complex64::new(1.0 / x, -1.0);
    for n in 1..n_max {
        out[n + 1] = (2 * n + 1) as f64 / x - 1.0 / out[n];
    }
    out
}

/// ln ψ_n(x) for n = 0..=n_max (complex log, so negative values are fine).
pub fn log_psi(x: f64, n_max: usize) -> Vec<Complex64> {
    let rho = psi_ratios(x, n_max);
    let mut out = Vec::with_capacity(n_max + 1);
    let mut acc = Complex64::new(x.sin(), 0.0).ln();
    out.push(acc);
    for r in rho.iter().skip(1) {
        acc += Complex64::new(*r, 0.0).ln();
        out.push(acc);
    }
    out
}

/// ln ξ_n(x) for n = 0..=n_max.
pub fn log_xi(x: f64, n_max: usize) -> Vec<Complex64> {
    let r = xi_ratios(x, n_max);
    // ξ_0 = -i e^{ix}
    let mut acc = Complex64::new(0.0, x - std::f64::consts::FRAC_PI_2);
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(acc);
    for ri in r.iter().skip(1) {
        acc += ri.ln();
        out.push(acc);
    }
    out
}

/// Spherical Bessel j_n(x), n = 0..=n_max, for moderate real x (Miller's
/// downward recurrence normalised to j_0).
pub fn spherical_j(x: f64, n_max: usize) -> Vec<f64> {
    if x == 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let rho = psi_ratios(x, n_max);
    let mut out = vec![0.0; n_max + 1];
    out[0] = x.sin() / x;
    for n in 1..=n_max {
        out[n] = out[n - 1] * rho[n];
    }
    out
}

/// Spherical Bessel y_n(x), n = 0..=n_max, by upward recurrence.
pub fn spherical_y(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    out[0] = -x.cos() / x;
    if n_max >= 1 {
        out[1] = -x.cos() / (x * x) - x.sin() / x;
    }
    for n in 1..n_max {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn double_factorial(n: i64) -> f64 {
        (1..=n).rev().step_by(2).map(|k| k as f64).product()
    }

    // Small-argument series: j_n(x) = x^n/(2n+1)!! [1 - x²/(2(2n+3)) + x⁴/(8(2n+3)(2n+5))]
    fn j_series(n: usize, x: f64) -> f64 {
        let n_ = n as f64;
        x.powi(n as i32) / double_factorial(2 * n as i64 + 1)
            * (1.0 - x * x / (2.0 * (2.0 * n_ + 3.0))
                + x.powi(4) / (8.0 * (2.0 * n_ + 3.0) * (2.0 * n_ + 5.0)))
    }

    // y_n(x) = -(2n-1)!!/x^{n+1} [1 + x²/(2(2n-1)) + ...]
    fn y_series(n: usize, x: f64) -> f64 {
        let n_ = n as f64;
        let df = if n == 0 {
            1.0
        } else {
            double_factorial(2 * n as i64 - 1)
        };
        let corr = if n == 0 {
            -x * x / 2.0
        } else {
            x * x / (2.0 * (2.0 * n_ - 1.0))
        };
        -df / x.powi(n as i32 + 1) * (1.0 + corr)
    }

    #[test]
    fn j_matches_series_at_small_argument() {
        let x = 0.01;
        let j = spherical_j(x, 20);
        for (n, &jn) in j.iter().enumerate().take(21) {
            let s = j_series(n, x);
            assert!(((jn - s) / s).abs() < 1e-9, "n={n} {jn} vs {s}");
        }
    }

    #[test]
    fn y_matches_series_at_small_argument() {
        let x = 1e-3;
        let y = spherical_y(x, 10);
        for (n, &yn) in y.iter().enumerate().take(11).skip(1) {
            let s = y_series(n, x);
            assert!(((yn - s) / s).abs() < 1e-5, "n={n}");
        }
    }

    #[test]
    fn closed_forms_at_unit_argument() {
        let x = 1.3f64;
        let j = spherical_j(x, 2);
        let y = spherical_y(x, 2);
        let (s, c) = (x.sin(), x.cos());
        assert!((j[1] - (s / (x * x) - c / x)).abs() < 1e-14);
        assert!((j[2] - ((3.0 / (x * x) - 1.0) * s / x - 3.0 * c / (x * x))).abs() < 1e-14);
        assert!((y[2] - (-(3.0 / (x * x) - 1.0) * c / x - 3.0 * s / (x * x))).abs() < 1e-13);
    }

    #[test]
    fn log_forms_agree_with_direct_values() {
        let x = 0.7;
        let lp = log_psi(x, 12);
        let lx = log_xi(x, 12);
        let j = spherical_j(x, 12);
        let y = spherical_y(x, 12);
        for n in 0..=12 {
            let psi = x * j[n];
            let xi = Complex64::new(x * j[n], x * y[n]);
            assert!(((lp[n].exp().re - psi) / psi).abs() < 1e-12, "psi n={n}");
            assert!(((lx[n].exp() - xi) / xi).norm() < 1e-12, "xi n={n}");
        }
    }

    #[test]
    fn log_derivative_of_real_argument() {
        // D_n = ψ_{n-1}/ψ_n - n/x
        let x = 0.9;
        let d = log_derivative(Complex64::new(x, 0.0), 15);
        let j = spherical_j(x, 15);
        for n in 1..=15 {
            let expect = j[n - 1] / j[n] - (n as f64 + 1.0) / x + 1.0 / x;
            assert!((d[n].re - expect).abs() < 1e-10 * expect.abs(), "n={n}");
        }
    }

    #[test]
    fn huge_orders_stay_finite_in_log_space() {
        let lp = log_psi(0.3, 200);
        let lx = log_xi(0.33, 200);
        assert!(lp[200].re < -700.0 && lp[200].re.is_finite());
        assert!(lx[200].re > 700.0 && lx[200].re.is_finite());
    }
}
