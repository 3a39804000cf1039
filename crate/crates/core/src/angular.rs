//! Angular-momentum matrix algebra.
//!
//! Conventions used throughout the crate:
//!
//! * Within one spin the basis is ordered by descending projection,
//!   `m = j, j-1, ..., -j`, so `Jz` is `diag(j, ..., -j)`.
//! * Product spaces are built nuclear ⊗ electronic with the Kronecker
//!   convention (left factor varies slowest): the uncoupled index of
//!   `|mI, mJ>` is `mI_index * dim(J) + mJ_index`.
//! * Clebsch–Gordan coefficients follow the Condon–Shortley phase.
//!
//! Magnetic quantum numbers are carried as doubled integers (`twice_m`) so
//! half-integer values stay exact.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex square matrix used for every operator in the crate.
pub type Operator = DMatrix<Complex64>;

/// A non-negative integer or half-integer spin, stored as `2j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const ZERO: Spin = Spin { twice: 0 };
    pub const HALF: Spin = Spin { twice: 1 };

    pub fn from_twice(twice: u32) -> Self {
        Spin { twice }
    }

    /// Parses a spin value such as `3.5`; rejects negatives and values that
    /// are not multiples of one half.
    pub fn new(j: f64) -> Result<Self> {
        let twice = 2.0 * j;
        if !j.is_finite() || j < 0.0 || (twice - twice.round()).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "spin {j} is not a non-negative multiple of 1/2"
            )));
        }
        Ok(Spin {
            twice: twice.round() as u32,
        })
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }

    /// j(j+1)
    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }

    /// Doubled projections in basis order: 2j, 2j-2, ..., -2j.
    pub fn twice_m_values(self) -> Vec<i32> {
        let tj = self.twice as i32;
        (0..self.dim() as i32).map(|k| tj - 2 * k).collect()
    }

    /// Basis index of the doubled projection `twice_m`, if it exists.
    pub fn index_of(self, twice_m: i32) -> Option<usize> {
        let tj = self.twice as i32;
        if twice_m.abs() > tj || (tj - twice_m) % 2 != 0 {
            return None;
        }
        Some(((tj - twice_m) / 2) as usize)
    }
}

impl TryFrom<f64> for Spin {
    type Error = Error;
    fn try_from(j: f64) -> Result<Self> {
        Spin::new(j)
    }
}

impl From<Spin> for f64 {
    fn from(s: Spin) -> f64 {
        s.value()
    }
}

impl std::fmt::Display for Spin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Cartesian spin operators for one spin.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub x: Operator,
    pub y: Operator,
    pub z: Operator,
}

impl SpinOperators {
    /// Jx² + Jy² + Jz²
    pub fn casimir(&self) -> Operator {
        &self.x * &self.x + &self.y * &self.y + &self.z * &self.z
    }
}

/// Raising operator J+ in the descending-m basis.
pub fn raising(j: Spin) -> Operator {
    let dim = j.dim();
    let jj = j.casimir();
    let ms = j.twice_m_values();
    let mut jp = Operator::zeros(dim, dim);
    // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>, and m+1 sits one index earlier.
    for k in 1..dim {
        let m = ms[k] as f64 / 2.0;
        jp[(k - 1, k)] = Complex64::new((jj - m * (m + 1.0)).sqrt(), 0.0);
    }
    jp
}

pub fn spin_operators(j: Spin) -> SpinOperators {
    let dim = j.dim();
    let jp = raising(j);
    let jm = jp.adjoint();
    let half = Complex64::new(0.5, 0.0);
    let minus_half_i = Complex64::new(0.0, -0.5);
    let z = Operator::from_fn(dim, dim, |r, c| {
        if r == c {
            Complex64::new(j.twice_m_values()[r] as f64 / 2.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    SpinOperators {
        x: (&jp + &jm) * half,
        y: (&jp - &jm) * minus_half_i,
        z,
    }
}

/// Kronecker product `a ⊗ b`, with `a` varying slowest.
pub fn tensor_product(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

/// Coupled-basis label |F, mF>.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoupledLabel {
    pub f: Spin,
    pub twice_mf: i32,
}

/// All |F, mF> labels for F = |I-J| ... I+J, each F with 2F+1 projections
/// in descending order.
pub fn coupled_basis_labels(i: Spin, j: Spin) -> Vec<CoupledLabel> {
    let lo = i.twice.abs_diff(j.twice);
    let hi = i.twice + j.twice;
    (lo..=hi)
        .step_by(2)
        .flat_map(|tf| {
            let f = Spin::from_twice(tf);
            f.twice_m_values()
                .into_iter()
                .map(move |twice_mf| CoupledLabel { f, twice_mf })
        })
        .collect()
}

fn factorial(n: i32) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Clebsch–Gordan coefficient <j1 m1; j2 m2 | j m> from the Racah formula.
///
/// All arguments are doubled. Returns zero for any combination that
/// violates the selection rules.
pub fn clebsch_gordan(tj1: i32, tm1: i32, tj2: i32, tm2: i32, tj: i32, tm: i32) -> f64 {
    if tm1 + tm2 != tm {
        return 0.0;
    }
    if tj1 < 0 || tj2 < 0 || tj < 0 {
        return 0.0;
    }
    if tm1.abs() > tj1 || tm2.abs() > tj2 || tm.abs() > tj {
        return 0.0;
    }
    if (tj1 + tm1) % 2 != 0 || (tj2 + tm2) % 2 != 0 || (tj + tm) % 2 != 0 {
        return 0.0;
    }
    if tj < (tj1 - tj2).abs() || tj > tj1 + tj2 || (tj1 + tj2 + tj) % 2 != 0 {
        return 0.0;
    }

    // Everything below is an integer once halved.
    let h = |x: i32| x / 2;
    let a = h(tj1 + tj2 - tj);
    let b = h(tj1 - tm1);
    let c = h(tj2 + tm2);
    let d = h(tj - tj2 + tm1);
    let e = h(tj - tj1 - tm2);

    let prefactor = ((tj + 1) as f64 * factorial(h(tj + tj1 - tj2)) * factorial(h(tj - tj1 + tj2))
        * factorial(a)
        / factorial(h(tj1 + tj2 + tj) + 1))
        .sqrt();
    let norm = (factorial(h(tj + tm))
        * factorial(h(tj - tm))
        * factorial(h(tj1 - tm1))
        * factorial(h(tj1 + tm1))
        * factorial(h(tj2 - tm2))
        * factorial(h(tj2 + tm2)))
    .sqrt();

    let k_min = 0.max(-d).max(-e);
    let k_max = a.min(b).min(c);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign
            / (factorial(k)
                * factorial(a - k)
                * factorial(b - k)
                * factorial(c - k)
                * factorial(d + k)
                * factorial(e + k));
    }
    prefactor * norm * sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_abs(m: &Operator) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn spin_parsing() {
        assert_eq!(Spin::new(3.5).unwrap().dim(), 8);
        assert!(Spin::new(-0.5).is_err());
        assert!(Spin::new(0.3).is_err());
        assert_eq!(Spin::new(1.5).unwrap().to_string(), "3/2");
        assert_eq!(Spin::new(2.0).unwrap().to_string(), "2");
    }

    #[test]
    fn spin_half_jz() {
        let ops = spin_operators(Spin::HALF);
        assert_eq!(ops.z[(0, 0)], c(0.5));
        assert_eq!(ops.z[(1, 1)], c(-0.5));
        assert_eq!(ops.z[(0, 1)], c(0.0));
    }

    #[test]
    fn ladder_coefficient_spin_one() {
        let one = Spin::new(1.0).unwrap();
        let jp = raising(one);
        // |1,-1> is index 2; J+ maps it to sqrt(2) |1,0> (index 1).
        let ket = nalgebra::DVector::from_vec(vec![c(0.0), c(0.0), c(1.0)]);
        let out = &jp * ket;
        assert_abs_diff_eq!(out[1].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].norm() + out[2].norm(), 0.0);
    }

    #[test]
    fn casimir_seven_halves() {
        let j = Spin::new(3.5).unwrap();
        let ops = spin_operators(j);
        let diff = ops.casimir() - identity(8) * c(63.0 / 4.0);
        assert!(max_abs(&diff) < 1e-12);
    }

    #[test]
    fn tensor_product_examples() {
        assert_eq!(tensor_product(&identity(2), &identity(3)), identity(6));
        let zdiag = Operator::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let out = tensor_product(&zdiag, &identity(2));
        let expected: Vec<f64> = vec![1.0, 1.0, -1.0, -1.0];
        for (k, e) in expected.iter().enumerate() {
            assert_eq!(out[(k, k)], c(*e));
        }
        assert!(max_abs(&(out.clone() - Operator::from_diagonal(&out.diagonal()))) == 0.0);
    }

    #[test]
    fn coupled_labels() {
        let i = Spin::new(3.5).unwrap();
        let labels = coupled_basis_labels(i, Spin::HALF);
        assert_eq!(labels.len(), 16);
        let fs: Vec<u32> = labels.iter().map(|l| l.f.twice()).collect();
        assert!(fs.iter().all(|&f| f == 6 || f == 8));

        let labels = coupled_basis_labels(i, Spin::new(1.5).unwrap());
        assert_eq!(labels.len(), 32);
        let mut fs: Vec<u32> = labels.iter().map(|l| l.f.twice()).collect();
        fs.dedup();
        assert_eq!(fs, vec![4, 6, 8, 10]);

        let labels = coupled_basis_labels(Spin::ZERO, Spin::HALF);
        assert_eq!(labels.len(), 2);
        assert!(labels.iter().all(|l| l.f == Spin::HALF));
    }

    #[test]
    fn clebsch_gordan_table_values() {
        // <1/2 1/2; 1 1 | 3/2 3/2> = 1 (stretched state)
        assert_abs_diff_eq!(clebsch_gordan(1, 1, 2, 2, 3, 3), 1.0, epsilon = 1e-15);
        // <1/2 -1/2; 1 1 | 3/2 1/2> = sqrt(1/3)
        assert_abs_diff_eq!(clebsch_gordan(1, -1, 2, 2, 3, 1), (1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        // <1/2 1/2; 1 0 | 3/2 1/2> = sqrt(2/3)
        assert_abs_diff_eq!(clebsch_gordan(1, 1, 2, 0, 3, 1), (2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        // <1/2 1/2; 1 0 | 1/2 1/2> = sqrt(1/3)
        assert_abs_diff_eq!(clebsch_gordan(1, 1, 2, 0, 1, 1), (1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        // <1/2 -1/2; 1 1 | 1/2 1/2> = -sqrt(2/3)
        assert_abs_diff_eq!(clebsch_gordan(1, -1, 2, 2, 1, 1), -(2.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        // order swap: <1 0; 1/2 1/2 | 1/2 1/2> = -sqrt(1/3)
        assert_abs_diff_eq!(clebsch_gordan(2, 0, 1, 1, 1, 1), -(1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        // <1 1; 1 -1 | 0 0> = sqrt(1/3)
        assert_abs_diff_eq!(clebsch_gordan(2, 2, 2, -2, 0, 0), (1.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        // selection rule
        assert_eq!(clebsch_gordan(1, 1, 2, 2, 3, 1), 0.0);
    }

    #[test]
    fn clebsch_gordan_orthonormality() {
        // sum over m1, m2 of <j1 m1; j2 m2|j m><j1 m1; j2 m2|j' m'> = delta
        let (tj1, tj2) = (7, 3);
        for tj in ((tj1 - tj2)..=(tj1 + tj2)).step_by(2) {
            for tjp in ((tj1 - tj2)..=(tj1 + tj2)).step_by(2) {
                for tm in (-tj.min(tjp)..=tj.min(tjp)).step_by(2) {
                    let mut s = 0.0;
                    for tm1 in (-tj1..=tj1).step_by(2) {
                        let tm2 = tm - tm1;
                        s += clebsch_gordan(tj1, tm1, tj2, tm2, tj, tm)
                            * clebsch_gordan(tj1, tm1, tj2, tm2, tjp, tm);
                    }
                    let expected = if tj == tjp { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(s, expected, epsilon = 1e-12);
                }
            }
        }
    }
}
