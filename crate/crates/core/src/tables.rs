//! Published pseudo-mode parameter sets.
//!
//! Rows are (A in THz², B in eV, Ω in eV); areas use the ordinary-frequency
//! convention and are converted with [`UnitConventions`].

use crate::error::Result;
use crate::lorentzian::LorentzianSet;
use crate::units::UnitConventions;

/// Silver sphere (r = 20 nm), dipole 2 nm from the surface.
pub const SPHERE_H2_ROWS: [(f64, f64, f64); 3] = [
    (2.1204, 0.0243, 2.757),
    (102.307, 0.03615, 2.9498),
    (175.1694, 0.02507, 2.972),
];

/// Silver sphere (r = 20 nm), dipole 10 nm from the surface.
pub const SPHERE_H10_ROWS: [(f64, f64, f64); 3] = [
    (0.5759, 0.03212, 2.757),
    (0.47819, 0.02622, 2.8812),
    (0.9852, 0.03421, 2.932),
];

/// Nanoparticle-on-mirror cavity, ten pseudo-modes.
pub const NPOM_ROWS: [(f64, f64, f64); 10] = [
    (31.8917, 0.0303, 1.5478),
    (37.9805, 0.0304, 1.9101),
    (38.1770, 0.0304, 2.0936),
    (35.7083, 0.0300, 2.2003),
    (45.2399, 0.0348, 2.2700),
    (25.9778, 0.0272, 2.3110),
    (99.6008, 0.0306, 2.3500),
    (1196.2133, 0.0276, 2.4032),
    (304.6571, 0.0298, 2.4292),
    (67.2896, 0.0654, 2.5000),
];

pub fn sphere_h2() -> LorentzianSet {
    from_rows(&SPHERE_H2_ROWS)
}

pub fn sphere_h10() -> LorentzianSet {
    from_rows(&SPHERE_H10_ROWS)
}

pub fn npom() -> LorentzianSet {
    from_rows(&NPOM_ROWS)
}

fn from_rows(rows: &[(f64, f64, f64)]) -> LorentzianSet {
    try_from_rows(rows).expect("bundled tables are valid")
}

fn try_from_rows(rows: &[(f64, f64, f64)]) -> Result<LorentzianSet> {
    LorentzianSet::from_table_rows(rows, &UnitConventions::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sets_are_sorted_and_positive() {
        for s in [sphere_h2(), sphere_h10(), npom()] {
            let t = s.terms();
            assert!(t.windows(2).all(|w| w[0].center <= w[1].center));
            assert!(t.iter().all(|l| l.area > 0.0 && l.half_width > 0.0));
        }
    }

    #[test]
    fn dominant_npom_term() {
        let s = npom();
        let big = s
            .terms()
            .iter()
            .max_by(|a, b| a.area.partial_cmp(&b.area).unwrap())
            .unwrap();
        assert_eq!(big.center, 2.4032);
        assert!((big.area - 1196.2133 / 241.799_f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn bundled_files_match_constants() {
        let conv = UnitConventions::default();
        for (text, set) in [
            (include_str!("../data/sphere_h2.csv"), sphere_h2()),
            (include_str!("../data/sphere_h10.csv"), sphere_h10()),
            (include_str!("../data/npom.csv"), npom()),
        ] {
            let read = crate::io::read_lorentzians(text.as_bytes(), &conv).unwrap();
            assert_eq!(read, set);
        }
    }
}
