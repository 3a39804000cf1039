//! Hyperfine + Zeeman structure of a single fine-structure manifold.
//!
//! H = A (I·J) + (g_J μ_B J_z − g_I μ_N I_z) B, on the nuclear ⊗ electronic
//! product space, expressed as an angular frequency in rad/ns.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::{identity, spin_operators, tensor_product, Operator, Spin};
use crate::error::{Error, Result};
use crate::units::{joule_to_rad_per_ns, BOHR_MAGNETON, NUCLEAR_MAGNETON};

/// One fine-structure manifold of an atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    pub label: String,
    pub nuclear_spin: Spin,
    pub j: Spin,
    pub l: u32,
    pub s: Spin,
    /// Magnetic-dipole hyperfine constant A, rad/ns. The sign is physical.
    pub hyperfine_a: f64,
    /// Nuclear g-factor g_I (dimensionless).
    pub g_nuclear: f64,
    /// Unperturbed manifold centre, rad/ns.
    pub energy_offset: f64,
}

impl ManifoldSpec {
    pub fn validate(&self) -> Result<()> {
        let (tj, tl, ts) = (self.j.twice(), 2 * self.l, self.s.twice());
        if tj < tl.abs_diff(ts) || tj > tl + ts || (tj + tl + ts) % 2 != 0 {
            return Err(Error::invalid(format!(
                "manifold {}: J={} not reachable from L={} and S={}",
                self.label, self.j, self.l, self.s
            )));
        }
        if !self.hyperfine_a.is_finite() || !self.g_nuclear.is_finite() || !self.energy_offset.is_finite() {
            return Err(Error::invalid(format!("manifold {}: non-finite constant", self.label)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.nuclear_spin.dim() * self.j.dim()
    }

    pub fn lande_g(&self) -> Result<f64> {
        lande_g(self.j, self.l, self.s)
    }
}

/// Landé factor g_J = 1 + [J(J+1) + S(S+1) − L(L+1)] / [2J(J+1)].
pub fn lande_g(j: Spin, l: u32, s: Spin) -> Result<f64> {
    if j == Spin::ZERO {
        return Err(Error::invalid("g_J is undefined for J = 0"));
    }
    let (tj, tl, ts) = (j.twice(), 2 * l, s.twice());
    if tj < tl.abs_diff(ts) || tj > tl + ts {
        return Err(Error::invalid(format!("J={j} violates |L-S| <= J <= L+S for L={l}, S={s}")));
    }
    let ll = l as f64 * (l as f64 + 1.0);
    Ok(1.0 + (j.casimir() + s.casimir() - ll) / (2.0 * j.casimir()))
}

/// Hyperfine + Zeeman Hamiltonian at flux density `field` (tesla), in rad/ns.
pub fn build_hamiltonian(spec: &ManifoldSpec, field: f64) -> Result<Operator> {
    spec.validate()?;
    if !(field >= 0.0) || !field.is_finite() {
        return Err(Error::invalid(format!("magnetic field must be >= 0, got {field}")));
    }
    let g_j = spec.lande_g()?;
    let i_ops = spin_operators(spec.nuclear_spin);
    let j_ops = spin_operators(spec.j);
    let id_i = identity(spec.nuclear_spin.dim());
    let id_j = identity(spec.j.dim());

    let a = Complex64::new(spec.hyperfine_a, 0.0);
    let i_dot_j = tensor_product(&i_ops.x, &j_ops.x)
        + tensor_product(&i_ops.y, &j_ops.y)
        + tensor_product(&i_ops.z, &j_ops.z);

    let electron = Complex64::new(g_j * joule_to_rad_per_ns(BOHR_MAGNETON) * field, 0.0);
    let nucleus = Complex64::new(spec.g_nuclear * joule_to_rad_per_ns(NUCLEAR_MAGNETON) * field, 0.0);
    let zeeman = tensor_product(&id_i, &j_ops.z) * electron - tensor_product(&i_ops.z, &id_j) * nucleus;

    Ok(i_dot_j * a + zeeman)
}

/// Eigen-decomposition of a Hermitian operator with a fixed gauge.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors.
    pub vectors: Operator,
}

fn hermiticity_defect(h: &Operator) -> f64 {
    (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Diagonalizes a Hermitian matrix.
///
/// Eigenvalues come back ascending. Within a degenerate eigenspace the basis
/// is rebuilt by pivoted Gram–Schmidt on the projected unit vectors, taking
/// the largest remaining projection first and breaking ties by lower index.
/// Non-degenerate columns end up with their pivot component real and
/// positive. The result is therefore independent of the LAPACK-style
/// solver's arbitrary phases.
pub fn diagonalize(h: &Operator) -> Result<Eigensystem> {
    if !h.is_square() {
        return Err(Error::invalid("matrix is not square"));
    }
    let n = h.nrows();
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    if hermiticity_defect(h) > 1e-10 * scale {
        return Err(Error::invalid("matrix is not Hermitian to 1e-10"));
    }
    if n == 0 {
        return Ok(Eigensystem {
            values: vec![],
            vectors: Operator::zeros(0, 0),
        });
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let raw = Operator::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let degeneracy_tol = 1e-9 * scale;
    let mut vectors = Operator::zeros(n, n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= degeneracy_tol {
            end += 1;
        }
        let block = raw.columns(start, end - start).into_owned();
        let fixed = fix_gauge(&block);
        vectors.columns_mut(start, end - start).copy_from(&fixed);
        start = end;
    }

    Ok(Eigensystem { values, vectors })
}

fn fix_gauge(block: &Operator) -> Operator {
    let (n, k) = block.shape();
    let projector = block * block.adjoint();
    let mut chosen: Vec<DVector<Complex64>> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    while chosen.len() < k {
        let residuals: Vec<Option<DVector<Complex64>>> = (0..n)
            .map(|idx| {
                if used[idx] {
                    return None;
                }
                let mut v = projector.column(idx).into_owned();
                for q in &chosen {
                    let overlap = q.dotc(&v);
                    v -= q * overlap;
                }
                Some(v)
            })
            .collect();
        let best = residuals
            .iter()
            .map(|r| r.as_ref().map_or(0.0, |v| v.norm()))
            .fold(0.0, f64::max);
        let pivot = residuals
            .iter()
            .position(|r| r.as_ref().is_some_and(|v| v.norm() >= best * (1.0 - 1e-8)))
            .expect("projector has rank k");
        used[pivot] = true;
        let v = residuals[pivot].clone().unwrap();
        let norm = v.norm();
        chosen.push(v / Complex64::new(norm, 0.0));
    }
    let mut out = Operator::zeros(n, k);
    for (c, v) in chosen.iter().enumerate() {
        out.set_column(c, v);
    }
    out
}

/// Dressed levels of one manifold at a given field.
#[derive(Debug, Clone)]
pub struct DressedManifold {
    pub spec: ManifoldSpec,
    pub field: f64,
    /// Level energies relative to `spec.energy_offset`, rad/ns, ascending.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in the uncoupled (mI, mJ) basis.
    pub eigenvectors: Operator,
}

impl DressedManifold {
    pub fn compute(spec: &ManifoldSpec, field: f64) -> Result<Self> {
        let h = build_hamiltonian(spec, field)?;
        let eig = diagonalize(&h)?;
        Ok(DressedManifold {
            spec: spec.clone(),
            field,
            energies: eig.values,
            eigenvectors: eig.vectors,
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Expectation value of the total projection mI + mJ for level `n`.
    pub fn total_m(&self, n: usize) -> f64 {
        let dim_j = self.spec.j.dim();
        let mi = self.spec.nuclear_spin.twice_m_values();
        let mj = self.spec.j.twice_m_values();
        self.eigenvectors
            .column(n)
            .iter()
            .enumerate()
            .map(|(idx, amp)| amp.norm_sqr() * (mi[idx / dim_j] + mj[idx % dim_j]) as f64 / 2.0)
            .sum()
    }
}
