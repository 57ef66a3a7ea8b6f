//! Frequency–time photon maps: node-line extraction, beating periods and
//! the field intensity at the dipole.
//!
//! Interference in |C_g1(ω,t)|² ∝ |1 − h|², h = [cos bt − p sin bt]e^{iδt},
//! has minima along curves of constant phase. Near the Rabi branches
//! (δ ≈ ±b, where p ≈ ∓i) one component dominates and the minima follow
//! (δ ∓ b)t = const, i.e. local slope dδ/dt = −(δ₀ ∓ b)/t₀; far from them
//! both components mix and the minima drift towards δt = const. Minima are
//! located along t for every energy row, linked across neighbouring rows
//! into lines, and each line is split into short segments that are fitted
//! with straight lines.

use serde::{Deserialize, Serialize};

use crate::dynamics::PhotonField;
use crate::error::{Error, Result};
use crate::spectrum::TabulatedSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeOptions {
    /// Time window (fs) searched for minima.
    pub t_window: (f64, f64),
    /// Minimum depth 1 − d_min / min(neighbouring maxima).
    pub min_depth: f64,
    /// Minima whose neighbouring maxima are below this fraction of the map
    /// maximum are ignored (they sit in negligible density).
    pub min_node_weight: f64,
    /// Largest time jump between linked minima of adjacent energy rows, as
    /// a fraction of t (plus two samples).
    pub max_jump_rel: f64,
    /// Largest energy jump (eV, plus two grid spacings) between linked
    /// minima of adjacent time columns.
    pub max_energy_jump: f64,
    /// Lines with fewer points are discarded.
    pub min_points: usize,
    /// Points per fitted segment.
    pub segment_points: usize,
}

impl Default for NodeOptions {
    fn default() -> Self {
        Self {
            t_window: (5.0, 130.0),
            min_depth: 0.2,
            min_node_weight: 0.02,
            max_jump_rel: 0.08,
            max_energy_jump: 0.002,
            min_points: 8,
            segment_points: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodePoint {
    /// eV (absolute)
    pub energy: f64,
    /// fs
    pub t: f64,
    pub depth: f64,
    /// (neighbouring maximum − minimum) / map maximum.
    pub visibility: f64,
}

/// Straight-line fit δ = δ₀ + slope·(t − t₀).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    /// fs
    pub t0: f64,
    /// Detuning at t₀ (eV).
    pub delta0: f64,
    /// eV/fs
    pub slope: f64,
    pub r_squared: f64,
    /// Mean visibility of the fitted points.
    pub visibility: f64,
}

impl LineFit {
    /// Constant-phase slopes −(δ₀ + b)/t₀ and −(δ₀ − b)/t₀ (eV/fs).
    pub fn predicted_slopes(&self, b: f64) -> (f64, f64) {
        (-(self.delta0 + b) / self.t0, -(self.delta0 - b) / self.t0)
    }

    /// Relative deviation from the closer constant-phase slope.
    pub fn slope_error(&self, b: f64) -> f64 {
        let (p, m) = self.predicted_slopes(b);
        let e = |pred: f64| ((self.slope - pred) / pred).abs();
        e(p).min(e(m))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeLine {
    pub points: Vec<NodePoint>,
    pub segments: Vec<LineFit>,
}

impl NodeLine {
    pub fn t_range(&self) -> (f64, f64) {
        self.points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                (a.min(p.t), b.max(p.t))
            })
    }

    pub fn mean_depth(&self) -> f64 {
        self.points.iter().map(|p| p.depth).sum::<f64>() / self.points.len() as f64
    }

    pub fn mean_visibility(&self) -> f64 {
        self.points.iter().map(|p| p.visibility).sum::<f64>() / self.points.len() as f64
    }

    pub fn min_r_squared(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.r_squared)
            .fold(1.0, f64::min)
    }

    /// Median segment slope error against the closer constant-phase slope.
    pub fn slope_error(&self, b: f64) -> f64 {
        let mut errs: Vec<f64> = self.segments.iter().map(|g| g.slope_error(b)).collect();
        if errs.is_empty() {
            return f64::INFINITY;
        }
        errs.sort_by(f64::total_cmp);
        errs[errs.len() / 2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterferenceMap {
    pub omega_e: f64,
    pub lines: Vec<NodeLine>,
    /// Largest mean visibility of any node line (0 without lines).
    pub contrast: f64,
}

impl InterferenceMap {
    /// Lines whose segments all have R² above `min_r2` and whose median
    /// slope matches a constant-phase slope within `tol`.
    pub fn matching_lines(&self, b: f64, tol: f64, min_r2: f64) -> Vec<&NodeLine> {
        self.lines
            .iter()
            .filter(|l| l.min_r_squared() > min_r2 && l.slope_error(b) < tol)
            .collect()
    }

    /// Straight node-line pieces with R² above `min_r2` whose slope matches
    /// the local constant-phase slope within `tol`. Pieces found twice (once
    /// along t, once along energy) within 2 fs and 2 meV count once.
    pub fn matching_segments(&self, b: f64, tol: f64, min_r2: f64) -> Vec<LineFit> {
        let mut out: Vec<LineFit> = Vec::new();
        for g in self.lines.iter().flat_map(|l| l.segments.iter()) {
            if g.r_squared > min_r2
                && g.slope_error(b) < tol
                && !out
                    .iter()
                    .any(|o| (o.t0 - g.t0).abs() < 2.0 && (o.delta0 - g.delta0).abs() < 2e-3)
            {
                out.push(*g);
            }
        }
        out
    }

    /// Mean visibility of the matching pieces (0 when there are none).
    pub fn node_contrast(&self, b: f64, tol: f64, min_r2: f64) -> f64 {
        let m = self.matching_segments(b, tol, min_r2);
        if m.is_empty() {
            0.0
        } else {
            m.iter().map(|g| g.visibility).sum::<f64>() / m.len() as f64
        }
    }
}

/// Local minima of one profile on `lo..=hi` as (position, depth, top),
/// with depth relative to the lower of the two neighbouring maxima.
fn profile_minima(axis: &[f64], d: &[f64], lo: usize, hi: usize) -> Vec<(f64, f64, f64)> {
    let mut ext: Vec<usize> = vec![lo];
    for j in lo + 1..hi {
        let is_min = d[j] < d[j - 1] && d[j] <= d[j + 1];
        let is_max = d[j] > d[j - 1] && d[j] >= d[j + 1];
        if is_min || is_max {
            ext.push(j);
        }
    }
    ext.push(hi);
    let mut out = Vec::new();
    for k in 1..ext.len() - 1 {
        let j = ext[k];
        if !(d[j] < d[j - 1] && d[j] <= d[j + 1]) {
            continue;
        }
        let lmax = d[ext[k - 1]..=j].iter().copied().fold(0.0, f64::max);
        let rmax = d[j..=ext[k + 1]].iter().copied().fold(0.0, f64::max);
        let top = lmax.min(rmax);
        if !(top > 0.0) {
            continue;
        }
        let (a, b, c) = (d[j - 1], d[j], d[j + 1]);
        let den = a - 2.0 * b + c;
        let off = if den > 0.0 {
            (0.5 * (a - c) / den).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        out.push((
            axis[j] + off * (axis[j + 1] - axis[j]),
            1.0 - d[j] / top,
            top,
        ));
    }
    out
}

pub fn fit_line(pts: &[NodePoint], omega_e: f64) -> LineFit {
    let n = pts.len() as f64;
    let t0 = pts.iter().map(|p| p.t).sum::<f64>() / n;
    let d0 = pts.iter().map(|p| p.energy - omega_e).sum::<f64>() / n;
    let (mut stt, mut std, mut sdd) = (0.0, 0.0, 0.0);
    for p in pts {
        let (x, y) = (p.t - t0, p.energy - omega_e - d0);
        stt += x * x;
        std += x * y;
        sdd += y * y;
    }
    let slope = if stt > 0.0 { std / stt } else { f64::INFINITY };
    let r_squared = if stt > 0.0 && sdd > 0.0 {
        std * std / (stt * sdd)
    } else {
        0.0
    };
    LineFit {
        t0,
        delta0: d0,
        slope,
        r_squared,
        visibility: pts.iter().map(|p| p.visibility).sum::<f64>() / n,
    }
}

/// Minima of each profile (a row along t, or a column along energy) linked
/// to minima of the next profile by smallest jump. `profiles[v]` runs along
/// `u_axis`; `at(v, u)` builds the node point.
fn link_minima(
    profiles: &[Vec<f64>],
    u_axis: &[f64],
    (lo, hi): (usize, usize),
    gmax: f64,
    opts: &NodeOptions,
    max_jump: impl Fn(f64, f64) -> f64,
    at: impl Fn(usize, f64, f64, f64) -> NodePoint,
    pos: impl Fn(&NodePoint) -> f64,
) -> Vec<Vec<NodePoint>> {
    let mut finished: Vec<Vec<NodePoint>> = Vec::new();
    let mut active: Vec<Vec<NodePoint>> = Vec::new();
    for (v, prof) in profiles.iter().enumerate() {
        let minima: Vec<NodePoint> = profile_minima(u_axis, prof, lo, hi)
            .into_iter()
            .filter(|&(_, depth, top)| {
                depth >= opts.min_depth && top >= opts.min_node_weight * gmax
            })
            .map(|(u, depth, top)| at(v, u, depth, (top - top * (1.0 - depth)) / gmax))
            .collect();

        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for (a, seg) in active.iter().enumerate() {
            let last = pos(seg.last().expect("non-empty segment"));
            for (m, p) in minima.iter().enumerate() {
                let jump = (pos(p) - last).abs();
                if jump <= max_jump(last, pos(p)) {
                    pairs.push((jump, a, m));
                }
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut seg_used = vec![false; active.len()];
        let mut min_used = vec![false; minima.len()];
        for (_, a, m) in pairs {
            if seg_used[a] || min_used[m] {
                continue;
            }
            seg_used[a] = true;
            min_used[m] = true;
            active[a].push(minima[m]);
        }
        let mut next = Vec::new();
        for (a, seg) in active.into_iter().enumerate() {
            if seg_used[a] {
                next.push(seg);
            } else {
                finished.push(seg);
            }
        }
        next.extend(
            minima
                .into_iter()
                .enumerate()
                .filter(|(m, _)| !min_used[*m])
                .map(|(_, p)| vec![p]),
        );
        active = next;
    }
    finished.extend(active);
    finished
}

fn to_line(points: Vec<NodePoint>, omega_e: f64, seg: usize) -> NodeLine {
    let nseg = (points.len() / seg).max(1);
    let size = points.len() / nseg;
    let segments = (0..nseg)
        .map(|k| {
            let end = if k + 1 == nseg {
                points.len()
            } else {
                (k + 1) * size
            };
            fit_line(&points[k * size..end], omega_e)
        })
        .collect();
    NodeLine { points, segments }
}

/// Extracts node lines (minima tracked along t for each energy and along
/// energy for each t) and the node-line contrast.
pub fn interference_map(
    field: &PhotonField,
    omega_e: f64,
    opts: &NodeOptions,
) -> Result<InterferenceMap> {
    let times = &field.times;
    let energies = field.grid.values();
    if times.len() < 3 || energies.len() < 3 {
        return Err(Error::Analysis(
            "field needs at least 3 energies and 3 times".into(),
        ));
    }
    let lo = times.partition_point(|&t| t < opts.t_window.0).max(1);
    let hi = times
        .partition_point(|&t| t <= opts.t_window.1)
        .min(times.len() - 1);
    if hi < lo + 3 {
        return Err(Error::Analysis(format!(
            "time window {:?} fs holds too few samples",
            opts.t_window
        )));
    }
    let dt = times[1] - times[0];
    let de = field.grid.min_spacing();
    let rows: Vec<Vec<f64>> = (0..field.n_energies())
        .map(|i| field.density_row(i))
        .collect();
    let gmax = rows
        .iter()
        .flat_map(|r| r[lo..=hi].iter())
        .copied()
        .fold(0.0, f64::max);
    if !(gmax > 0.0) {
        return Ok(InterferenceMap {
            omega_e,
            lines: Vec::new(),
            contrast: 0.0,
        });
    }

    let along_t = link_minima(
        &rows,
        times,
        (lo, hi),
        gmax,
        opts,
        |a, b| opts.max_jump_rel * a.max(b) + 2.0 * dt,
        |i, t, depth, visibility| NodePoint {
            energy: energies[i],
            t,
            depth,
            visibility,
        },
        |p| p.t,
    );
    let cols: Vec<Vec<f64>> = (lo..=hi)
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let along_e = link_minima(
        &cols,
        energies,
        (0, energies.len() - 1),
        gmax,
        opts,
        |_, _| opts.max_energy_jump + 2.0 * de,
        |k, e, depth, visibility| NodePoint {
            energy: e,
            t: times[lo + k],
            depth,
            visibility,
        },
        |p| p.energy,
    );

    let seg = opts.segment_points.max(3);
    let lines: Vec<NodeLine> = along_t
        .into_iter()
        .chain(along_e)
        .filter(|l| l.len() >= opts.min_points)
        .map(|points| to_line(points, omega_e, seg))
        .collect();
    let contrast = lines
        .iter()
        .map(|l| l.mean_visibility())
        .fold(0.0, f64::max);
    Ok(InterferenceMap {
        omega_e,
        lines,
        contrast,
    })
}

/// Mean spacing of consecutive maxima of |C_g1(probe, t)|² for t < t_end
/// (fs). Maxima are refined by a parabola through three samples; side
/// maxima of the second harmonic (lower than the following maximum) are
/// skipped so that the fundamental beat is measured.
pub fn beating_period(field: &PhotonField, probe_energy: f64, t_end: f64) -> Result<f64> {
    if !field.grid.contains(probe_energy) {
        return Err(Error::Analysis(format!(
            "probe {probe_energy} eV outside the field grid"
        )));
    }
    let row = field.density_row(field.grid.nearest_index(probe_energy));
    let times = &field.times;
    let hi = times.partition_point(|&t| t < t_end).min(times.len() - 1);
    let mut maxima = Vec::new();
    for j in 1..hi {
        let (a, b, c) = (row[j - 1], row[j], row[j + 1]);
        if b > a && b >= c {
            let den = a - 2.0 * b + c;
            let off = if den < 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            maxima.push((times[j] + off * (times[j + 1] - times[j]), b));
        }
    }
    // a maximum lower than the next one is a harmonic side maximum of the
    // beat, not a beat; the last maximum cannot be classified
    let kept: Vec<f64> = (0..maxima.len().saturating_sub(1))
        .filter(|&k| maxima[k].1 >= maxima[k + 1].1)
        .map(|k| maxima[k].0)
        .collect();
    if kept.len() < 2 {
        return Err(Error::Analysis(format!(
            "fewer than two maxima at {probe_energy} eV before {t_end} fs"
        )));
    }
    Ok((kept[kept.len() - 1] - kept[0]) / (kept.len() - 1) as f64)
}

/// I(t) = ∫ K(ω)|C_g1(ω,t)|² dω (eV), the field intensity at the dipole up
/// to the constant ħ²/d². `kernel` must be tabulated on the field grid.
pub fn field_intensity_at_dipole(
    field: &PhotonField,
    kernel: &TabulatedSpectrum,
) -> Result<Vec<f64>> {
    let e = field.grid.values();
    let k = kernel.energies();
    if e.len() != k.len()
        || e.iter()
            .zip(k)
            .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs())
    {
        return Err(Error::Grid("kernel and field grids differ".into()));
    }
    let w: Vec<f64> = field
        .grid
        .trapezoid_weights()
        .iter()
        .zip(kernel.values())
        .map(|(w, k)| w * k)
        .collect();
    Ok((0..field.n_times())
        .map(|it| {
            (0..field.n_energies())
                .map(|iw| w[iw] * field.at(iw, it).norm_sqr())
                .sum()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{analytic_photon_single, PCoefficient};
    use crate::units::{make_grid, HBAR_EV_FS};
    use num_complex::Complex64;

    fn analytic_field(
        a: f64,
        bw: f64,
        we: f64,
        grid: &crate::units::EnergyGrid,
        times: &[f64],
    ) -> PhotonField {
        let amplitude = grid
            .values()
            .iter()
            .flat_map(|&w| {
                times
                    .iter()
                    .map(move |&t| analytic_photon_single(a, bw, w - we, t, PCoefficient::Exact))
            })
            .collect();
        PhotonField {
            grid: grid.clone(),
            times: times.to_vec(),
            amplitude,
        }
    }

    #[test]
    fn beating_period_resonant_probe() {
        let (a, bw, we): (f64, f64, f64) = (0.00299, 0.0325, 2.97);
        let b = 0.5 * (4.0 * a - bw * bw).sqrt();
        let grid = make_grid(2.9, 3.04, 141).unwrap();
        let times: Vec<f64> = (0..3001).map(|i| i as f64 * 0.1).collect();
        let f = analytic_field(a, bw, we, &grid, &times);
        // several beats: the last maximum in the window is discarded
        let tb = beating_period(&f, we, 300.0).unwrap();
        // On resonance the density oscillates once per 2π/b.
        let expect = 2.0 * std::f64::consts::PI * HBAR_EV_FS / b;
        assert!((tb / expect - 1.0).abs() < 0.2, "{tb} vs {expect}");
    }

    #[test]
    fn beating_period_errors_without_beats() {
        let grid = make_grid(2.9, 3.0, 11).unwrap();
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let amplitude = vec![Complex64::new(0.5, 0.0); 11 * 100];
        let f = PhotonField {
            grid,
            times,
            amplitude,
        };
        assert!(beating_period(&f, 2.95, 99.0).is_err());
        assert!(beating_period(&f, 3.5, 99.0).is_err());
    }

    #[test]
    fn vacuum_intensity_is_zero() {
        let grid = make_grid(2.9, 3.0, 11).unwrap();
        let k = TabulatedSpectrum::new(grid.clone(), vec![1.0; 11]).unwrap();
        let f = PhotonField {
            grid,
            times: vec![0.0, 1.0],
            amplitude: vec![Complex64::new(0.0, 0.0); 22],
        };
        assert!(field_intensity_at_dipole(&f, &k)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let other =
            TabulatedSpectrum::new(make_grid(2.0, 3.0, 11).unwrap(), vec![1.0; 11]).unwrap();
        assert!(field_intensity_at_dipole(&f, &other).is_err());
    }

    #[test]
    fn intensity_becomes_stationary() {
        let (a, bw, we): (f64, f64, f64) = (0.00299, 0.0325, 2.97);
        let grid = make_grid(2.47, 3.47, 2001).unwrap();
        let t_stat = 3.0 * 2.0 * std::f64::consts::PI * HBAR_EV_FS / bw;
        let times: Vec<f64> = (0..=40).map(|i| t_stat + 5.0 * i as f64).collect();
        let f = analytic_field(a, bw, we, &grid, &times);
        let set = crate::lorentzian::LorentzianSet::single(a, bw, we).unwrap();
        let k = crate::lorentzian::eval_lorentzians(&set, &grid);
        let i = field_intensity_at_dipole(&f, &k).unwrap();
        let (lo, hi) = i
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo - 1.0 < 0.01, "{lo} {hi}");
    }

    // |1 − e^{i(δ−b)t/ħ}|² vanishes on (δ − b)t = 2πħn, whose local slope
    // is −(δ − b)/t; a smooth envelope keeps the rows bright.
    fn hyperbola_field(b: f64, we: f64) -> PhotonField {
        let grid = make_grid(2.87, 3.07, 201).unwrap();
        let times: Vec<f64> = (0..=520).map(|i| i as f64 * 0.25).collect();
        let amplitude = grid
            .values()
            .iter()
            .flat_map(|&w| {
                let d = w - we - b;
                times.iter().map(move |&t| {
                    let env = (-(w - we).powi(2) / 0.02).exp();
                    env * (Complex64::new(1.0, 0.0)
                        - Complex64::from_polar(1.0, d * t / HBAR_EV_FS))
                })
            })
            .collect();
        PhotonField {
            grid,
            times,
            amplitude,
        }
    }

    #[test]
    fn hyperbolic_nodes_match_local_slope() {
        let (b, we) = (0.05, 2.97);
        let m = interference_map(&hyperbola_field(b, we), we, &NodeOptions::default()).unwrap();
        let good = m.matching_segments(b, 0.1, 0.95);
        assert!(
            good.len() >= 3,
            "{} lines, {} good",
            m.lines.len(),
            good.len()
        );
        assert!(m.node_contrast(b, 0.1, 0.95) > 0.1);
        // the same nodes are off by the full slope for an unrelated b
        assert!(m.matching_segments(0.2, 0.1, 0.95).len() < good.len());
    }

    #[test]
    fn featureless_map_has_no_nodes() {
        let grid = make_grid(2.87, 3.07, 101).unwrap();
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.5).collect();
        let amplitude = vec![Complex64::new(1.0, 0.0); grid.len() * times.len()];
        let f = PhotonField {
            grid,
            times,
            amplitude,
        };
        let m = interference_map(&f, 2.97, &NodeOptions::default()).unwrap();
        assert!(m.lines.is_empty());
        assert_eq!(m.node_contrast(0.05, 0.1, 0.95), 0.0);
    }

    #[test]
    fn line_fit_of_exact_line() {
        let p = |t: f64, e: f64| NodePoint {
            energy: e,
            t,
            depth: 1.0,
            visibility: 1.0,
        };
        let l = fit_line(&[p(10.0, 3.0), p(20.0, 2.99), p(30.0, 2.98)], 2.97);
        assert!((l.slope + 1e-3).abs() < 1e-12);
        assert!((l.r_squared - 1.0).abs() < 1e-12);
        assert!((l.t0 - 20.0).abs() < 1e-12 && (l.delta0 - 0.02).abs() < 1e-12);
        // −(δ₀ − b)/t₀ with b = 0.04 gives exactly +1e-3, the other −3e-3
        let (pp, pm) = l.predicted_slopes(0.04);
        assert!((pp + 3e-3).abs() < 1e-12 && (pm - 1e-3).abs() < 1e-12);
        assert!((l.slope_error(0.04) - 2.0 / 3.0).abs() < 1e-12);
    }
}
