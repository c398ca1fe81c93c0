//! Von Neumann entropy of reduced states, the PPT test and the witness built
//! from the most negative eigenvector of a partial transpose.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, partial_trace, partial_transpose, ComplexMatrix};
use crate::state::DensityMatrix;

/// Eigenvalues closer than this to the minimum count as degenerate.
const DEGENERACY_TOL: f64 = 1e-9;

/// Entropies below this are reported as exactly zero.
const ENTROPY_FLOOR: f64 = 1e-12;

/// Entropy in bits of the reduced state on `keep`.
pub fn entanglement_entropy(rho: &DensityMatrix, keep: &[usize]) -> Result<f64> {
    let mut kept = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() || kept.len() >= rho.n {
        return Err(Error::InvalidSubsystem(format!(
            "entropy needs a proper nonempty subset of {} particles, got {keep:?}",
            rho.n
        )));
    }
    let reduced = partial_trace(&rho.matrix, &rho.dims(), &kept)?;
    let eig = eig_hermitian(&reduced)?;
    let entropy: f64 = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum();
    // eigenvalues of a pure reduced state carry ~1e-16 noise
    Ok(if entropy < ENTROPY_FLOOR { 0.0 } else { entropy })
}

/// Smallest eigenvalue of the partial transpose on `subsystem`, with its
/// eigenvector.
///
/// Within a degenerate minimum the vector with the lexicographically largest
/// modulus pattern wins; the global phase is then fixed so the first
/// non-negligible amplitude is real and positive.
pub fn ppt_min_eigenpair(rho: &DensityMatrix, subsystem: usize) -> Result<(f64, Vec<Complex64>)> {
    let pt = partial_transpose(&rho.matrix, &rho.dims(), subsystem)?;
    let eig = eig_hermitian(&pt)?;
    let lambda = eig.eigenvalues[0];
    let candidates = eig
        .eigenvalues
        .iter()
        .take_while(|&&l| l - lambda <= DEGENERACY_TOL)
        .count();
    let mut best = &eig.eigenvectors[0];
    for v in &eig.eigenvectors[1..candidates] {
        if modulus_pattern_cmp(v, best).is_gt() {
            best = v;
        }
    }
    Ok((lambda, fix_global_phase(best)))
}

fn modulus_pattern_cmp(a: &[Complex64], b: &[Complex64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.norm(), y.norm());
        if (x - y).abs() > DEGENERACY_TOL {
            return x.total_cmp(&y);
        }
    }
    std::cmp::Ordering::Equal
}

fn fix_global_phase(v: &[Complex64]) -> Vec<Complex64> {
    let lead = v
        .iter()
        .find(|z| z.norm() > 1e-12)
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = lead.conj() / lead.norm();
    v.iter().map(|z| z * phase).collect()
}

/// Where the witness eigenvector came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessSource {
    /// Rebuilt from the very state it is evaluated on.
    #[serde(rename = "self")]
    SelfState,
    /// Frozen at a reference decoherence rate and time.
    Fixed { gamma: f64, tau: f64 },
}

/// Partially transposed projector `(|l><l|)^T` onto the most negative
/// eigenvector of a partially transposed reference state.
#[derive(Debug, Clone)]
pub struct WitnessOperator {
    pub n: usize,
    pub d_levels: usize,
    pub matrix: ComplexMatrix,
    pub transposed_subsystem: usize,
    pub source: WitnessSource,
    /// Minimum partial-transpose eigenvalue of the reference state.
    pub reference_eigenvalue: f64,
}

impl WitnessOperator {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

pub fn build_witness(rho_ref: &DensityMatrix, subsystem: usize) -> Result<WitnessOperator> {
    build_witness_with_source(rho_ref, subsystem, WitnessSource::SelfState)
}

pub fn build_witness_with_source(
    rho_ref: &DensityMatrix,
    subsystem: usize,
    source: WitnessSource,
) -> Result<WitnessOperator> {
    let (lambda, v) = ppt_min_eigenpair(rho_ref, subsystem)?;
    let projector = ComplexMatrix::outer(&v);
    let matrix = partial_transpose(&projector, &rho_ref.dims(), subsystem)?;
    Ok(WitnessOperator {
        n: rho_ref.n,
        d_levels: rho_ref.d_levels,
        matrix,
        transposed_subsystem: subsystem,
        source,
        reference_eigenvalue: lambda,
    })
}

/// `Re Tr(W rho)`; negative values certify entanglement.
pub fn witness_expectation(w: &WitnessOperator, rho: &DensityMatrix) -> Result<f64> {
    if w.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: rho.dim(),
        });
    }
    let value = w.matrix.trace_product(&rho.matrix)?;
    if value.im.abs() >= 1e-10 {
        return Err(Error::InvalidState(format!(
            "witness expectation has imaginary part {:e}",
            value.im
        )));
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_setup, phase_table, PhysicalParams, SetupKind};
    use crate::state::{decohered_state, density_matrix, initial_state, DecoherenceSpec};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> DensityMatrix {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix::new(2, 2, ComplexMatrix::outer(&[c(h), c(0.0), c(0.0), c(h)])).unwrap()
    }

    fn qgem(kind: SetupKind, n: usize, gamma: f64, tau: f64) -> DensityMatrix {
        let p = PhysicalParams::default();
        let t = phase_table(&build_setup(kind, n, 2, &p).unwrap(), &p);
        decohered_state(&t, DecoherenceSpec { gamma, tau }).unwrap()
    }

    #[test]
    fn product_state_has_no_entropy() {
        let rho = density_matrix(&initial_state(3, 2).unwrap());
        assert!(entanglement_entropy(&rho, &[0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn bell_state_has_one_bit() {
        assert!((entanglement_entropy(&bell(), &[0]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_bad_subsets() {
        let rho = bell();
        assert!(entanglement_entropy(&rho, &[]).is_err());
        assert!(entanglement_entropy(&rho, &[0, 1]).is_err());
    }

    #[test]
    fn middle_particle_is_most_entangled() {
        for step in 1..=10 {
            let tau = 0.5 * step as f64;
            let rho = qgem(SetupKind::Parallel, 3, 0.0, tau);
            let s1 = entanglement_entropy(&rho, &[0]).unwrap();
            let s2 = entanglement_entropy(&rho, &[1]).unwrap();
            let s3 = entanglement_entropy(&rho, &[2]).unwrap();
            assert!(s2 > s1, "tau={tau}: S2={s2} S1={s1}");
            assert!((s1 - s3).abs() < 1e-10);
        }
    }

    #[test]
    fn separable_diagonal_state_is_ppt() {
        let rho = DensityMatrix::new(2, 2, ComplexMatrix::diagonal(&[0.4, 0.1, 0.3, 0.2])).unwrap();
        let (lambda, _) = ppt_min_eigenpair(&rho, 1).unwrap();
        assert!(lambda >= -1e-15);
    }

    #[test]
    fn bell_min_eigenpair() {
        let (lambda, v) = ppt_min_eigenpair(&bell(), 1).unwrap();
        assert!((lambda + 0.5).abs() < 1e-12);
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_particle_middle_transpose_value() {
        let (lambda, _) = ppt_min_eigenpair(&qgem(SetupKind::Parallel, 3, 0.0, 2.5), 1).unwrap();
        assert!((lambda + 0.202).abs() < 0.005, "{lambda}");
    }

    #[test]
    fn bell_witness() {
        let w = build_witness(&bell(), 1).unwrap();
        assert!((witness_expectation(&w, &bell()).unwrap() + 0.5).abs() < 1e-12);
        assert!((w.matrix.trace().re - 1.0).abs() < 1e-12);
        assert!(w.matrix.is_hermitian(1e-12));
    }

    #[test]
    fn pair_witness_value_without_decoherence() {
        let rho = qgem(SetupKind::Parallel, 2, 0.0, 2.5);
        let w = build_witness(&rho, 1).unwrap();
        let value = witness_expectation(&w, &rho).unwrap();
        assert!((value + 0.146).abs() < 0.005, "{value}");
    }

    #[test]
    fn self_witness_matches_min_eigenvalue() {
        for (kind, n, s, g) in [
            (SetupKind::Parallel, 3, 1, 0.05),
            (SetupKind::Linear, 3, 0, 0.1),
            (SetupKind::Star, 3, 2, 0.0),
            (SetupKind::Linear, 2, 0, 0.02),
        ] {
            let rho = qgem(kind, n, g, 2.5);
            let w = build_witness(&rho, s).unwrap();
            let value = witness_expectation(&w, &rho).unwrap();
            assert!((value - w.reference_eigenvalue).abs() < 1e-9);
            assert!((w.matrix.trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn degenerate_minimum_is_deterministic() {
        let rho = density_matrix(&initial_state(2, 2).unwrap());
        let (l1, v1) = ppt_min_eigenpair(&rho, 1).unwrap();
        let (l2, v2) = ppt_min_eigenpair(&rho, 1).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(v1, v2);
        let lead = v1.iter().find(|z| z.norm() > 1e-12).unwrap();
        assert!(lead.im.abs() < 1e-15 && lead.re > 0.0);
    }

    #[test]
    fn witness_dim_mismatch() {
        let w = build_witness(&bell(), 0).unwrap();
        let rho = density_matrix(&initial_state(3, 2).unwrap());
        assert!(witness_expectation(&w, &rho).is_err());
    }
}
