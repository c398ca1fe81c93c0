//! Branch-basis states: the uniform initial superposition, its evolution
//! under gravitational phases, and position-basis dephasing.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::BranchPhaseTable;
use crate::linalg::{eig_hermitian, ComplexMatrix, Radix, MAX_DIM};

/// Pure state of `n` particles with `d_levels` arms each.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub n: usize,
    pub d_levels: usize,
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Density matrix together with its particle structure.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub n: usize,
    pub d_levels: usize,
    pub matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(n: usize, d_levels: usize, matrix: ComplexMatrix) -> Result<Self> {
        let expected = d_levels
            .checked_pow(n as u32)
            .ok_or(Error::TooLarge { dim: usize::MAX, max: MAX_DIM })?;
        if matrix.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: matrix.dim(),
            });
        }
        Ok(Self { n, d_levels, matrix })
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.d_levels; self.n]
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn purity(&self) -> f64 {
        self.matrix
            .trace_product(&self.matrix)
            .map(|z| z.re)
            .unwrap_or(f64::NAN)
    }

    /// Smallest eigenvalue; a physical state has this at or above `-1e-10`.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(eig_hermitian(&self.matrix)?.eigenvalues[0])
    }

    /// Checks Hermiticity, unit trace and positivity.
    pub fn check_physical(&self) -> Result<()> {
        let dev = self.matrix.hermitian_deviation();
        if dev >= 1e-12 {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -1e-10 {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }
}

/// Decoherence rate (Hz) and exposure time (s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceSpec {
    pub gamma: f64,
    pub tau: f64,
}

impl DecoherenceSpec {
    pub fn new(gamma: f64, tau: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "decoherence rate must be finite and non-negative, got {gamma}"
            )));
        }
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "decoherence time must be finite and non-negative, got {tau}"
            )));
        }
        Ok(Self { gamma, tau })
    }
}

fn hilbert_dim(n: usize, d_levels: usize) -> Result<usize> {
    d_levels
        .checked_pow(n as u32)
        .filter(|&dim| dim <= MAX_DIM)
        .ok_or(Error::TooLarge {
            dim: d_levels.saturating_pow(n as u32),
            max: MAX_DIM,
        })
}

/// Equal-weight superposition over every branch.
pub fn initial_state(n: usize, d_levels: usize) -> Result<QuantumState> {
    if n == 0 || d_levels == 0 {
        return Err(Error::InvalidParameter(
            "need at least one particle with at least one arm".into(),
        ));
    }
    let dim = hilbert_dim(n, d_levels)?;
    let amp = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
    Ok(QuantumState {
        n,
        d_levels,
        amplitudes: vec![amp; dim],
    })
}

/// Multiplies each branch amplitude by `exp(i * rate * tau)`.
pub fn evolve(state: &QuantumState, table: &BranchPhaseTable, tau: f64) -> Result<QuantumState> {
    if table.n != state.n || table.d_levels != state.d_levels || table.len() != state.amplitudes.len()
    {
        return Err(Error::DimensionMismatch {
            expected: state.amplitudes.len(),
            found: table.len(),
        });
    }
    let amplitudes = state
        .amplitudes
        .iter()
        .zip(&table.rates)
        .map(|(a, &rate)| a * Complex64::from_polar(1.0, rate * tau))
        .collect();
    Ok(QuantumState {
        n: state.n,
        d_levels: state.d_levels,
        amplitudes,
    })
}

/// `|psi><psi|`
pub fn density_matrix(state: &QuantumState) -> DensityMatrix {
    DensityMatrix {
        n: state.n,
        d_levels: state.d_levels,
        matrix: ComplexMatrix::outer(&state.amplitudes),
    }
}

/// Number of particles whose branch index differs between two basis labels.
fn differing_particles(radix: &Radix, n: usize, a: usize, b: usize) -> usize {
    (0..n).filter(|&k| radix.digit(a, k) != radix.digit(b, k)).count()
}

/// Damps each off-diagonal entry by `exp(-delta * gamma * tau)`, where
/// `delta` counts the particles whose arm differs between row and column.
pub fn apply_decoherence(rho: &DensityMatrix, spec: DecoherenceSpec) -> Result<DensityMatrix> {
    let spec = DecoherenceSpec::new(spec.gamma, spec.tau)?;
    let radix = Radix::new(&rho.dims())?;
    let decay = (-spec.gamma * spec.tau).exp();
    let factors: Vec<f64> = (0..=rho.n).map(|delta| decay.powi(delta as i32)).collect();
    let matrix = ComplexMatrix::from_fn(rho.dim(), |r, c| {
        rho.matrix[(r, c)] * factors[differing_particles(&radix, rho.n, r, c)]
    });
    Ok(DensityMatrix {
        n: rho.n,
        d_levels: rho.d_levels,
        matrix,
    })
}

/// Evolved and dephased state built in closed form:
/// `rho[b][b'] = exp(i (phi_b - phi_b') tau) exp(-delta gamma tau) / D^n`.
pub fn decohered_state(table: &BranchPhaseTable, spec: DecoherenceSpec) -> Result<DensityMatrix> {
    let spec = DecoherenceSpec::new(spec.gamma, spec.tau)?;
    let n = table.n;
    let dl = table.d_levels;
    let dim = hilbert_dim(n, dl)?;
    if table.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: table.len(),
        });
    }
    let radix = Radix::new(&vec![dl; n])?;
    let weight = 1.0 / dim as f64;
    let decay = (-spec.gamma * spec.tau).exp();
    let factors: Vec<f64> = (0..=n).map(|delta| weight * decay.powi(delta as i32)).collect();
    let matrix = ComplexMatrix::from_fn(dim, |r, c| {
        let phase = (table.rates[r] - table.rates[c]) * spec.tau;
        Complex64::from_polar(factors[differing_particles(&radix, n, r, c)], phase)
    });
    Ok(DensityMatrix {
        n,
        d_levels: dl,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_setup, phase_table, PhysicalParams, SetupKind};

    fn table(kind: SetupKind, n: usize, d: usize) -> BranchPhaseTable {
        let p = PhysicalParams::default();
        phase_table(&build_setup(kind, n, d, &p).unwrap(), &p)
    }

    #[test]
    fn initial_amplitudes() {
        for (n, d, want) in [(2, 2, 0.5), (3, 2, 1.0 / (2.0 * 2f64.sqrt())), (2, 3, 1.0 / 3.0)] {
            let s = initial_state(n, d).unwrap();
            assert_eq!(s.amplitudes.len(), d.pow(n as u32));
            for a in &s.amplitudes {
                assert!((a.re - want).abs() < 1e-15 && a.im == 0.0);
            }
        }
    }

    #[test]
    fn zero_time_evolution_is_identity() {
        let s = initial_state(3, 2).unwrap();
        let out = evolve(&s, &table(SetupKind::Parallel, 3, 2), 0.0).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn equal_rates_give_a_global_phase() {
        let s = initial_state(2, 2).unwrap();
        let flat = BranchPhaseTable {
            n: 2,
            d_levels: 2,
            rates: vec![0.7; 4],
        };
        let out = evolve(&s, &flat, 2.5).unwrap();
        let ratio = out.amplitudes[0] / s.amplitudes[0];
        for (a, b) in out.amplitudes.iter().zip(&s.amplitudes) {
            assert!((a - b * ratio).norm() < 1e-15);
        }
    }

    #[test]
    fn relative_phase_of_parallel_pair() {
        let t = table(SetupKind::Parallel, 2, 2);
        let out = evolve(&initial_state(2, 2).unwrap(), &t, 2.5).unwrap();
        let arg = |z: Complex64| z.arg();
        let rel = arg(out.amplitudes[0]) + arg(out.amplitudes[3])
            - arg(out.amplitudes[1])
            - arg(out.amplitudes[2]);
        let rel = rel.rem_euclid(2.0 * std::f64::consts::PI);
        assert!((rel - 0.594).abs() < 1e-3, "relative phase {rel}");
    }

    #[test]
    fn evolve_rejects_wrong_table() {
        let s = initial_state(2, 2).unwrap();
        assert!(evolve(&s, &table(SetupKind::Parallel, 3, 2), 1.0).is_err());
    }

    #[test]
    fn pure_state_density_matrix() {
        let rho = density_matrix(&initial_state(2, 2).unwrap());
        for z in rho.matrix.entries() {
            assert!((z.re - 0.25).abs() < 1e-15 && z.im == 0.0);
        }
        let evolved = evolve(&initial_state(3, 2).unwrap(), &table(SetupKind::Star, 3, 2), 2.5).unwrap();
        let rho = density_matrix(&evolved);
        assert!((rho.purity() - 1.0).abs() < 1e-10);
        let eig = eig_hermitian(&rho.matrix).unwrap();
        assert!((eig.eigenvalues[7] - 1.0).abs() < 1e-12);
        for v in &eig.eigenvalues[..7] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_evolve_then_dephase() {
        let t = table(SetupKind::Parallel, 3, 2);
        let spec = DecoherenceSpec::new(0.1, 2.5).unwrap();
        let staged = apply_decoherence(
            &density_matrix(&evolve(&initial_state(3, 2).unwrap(), &t, 2.5).unwrap()),
            spec,
        )
        .unwrap();
        let fused = decohered_state(&t, spec).unwrap();
        assert!(staged.matrix.max_abs_diff(&fused.matrix).unwrap() < 1e-14);
    }

    #[test]
    fn no_decoherence_is_identity() {
        let rho = density_matrix(&evolve(&initial_state(2, 2).unwrap(), &table(SetupKind::Parallel, 2, 2), 1.0).unwrap());
        let out = apply_decoherence(&rho, DecoherenceSpec { gamma: 0.0, tau: 3.0 }).unwrap();
        assert_eq!(out, rho);
    }

    #[test]
    fn fully_flipped_coherence_decays_with_delta_three() {
        let rho = density_matrix(&initial_state(3, 2).unwrap());
        let (g, tau) = (0.05, 2.0);
        let out = apply_decoherence(&rho, DecoherenceSpec { gamma: g, tau }).unwrap();
        let want = rho.matrix[(0, 7)].re * (-3.0 * g * tau).exp();
        assert!((out.matrix[(0, 7)].re - want).abs() < 1e-16);
        assert_eq!(out.matrix[(5, 5)], rho.matrix[(5, 5)]);
    }

    #[test]
    fn long_exposure_is_maximally_mixed() {
        let rho = density_matrix(&evolve(&initial_state(2, 3).unwrap(), &table(SetupKind::Parallel, 2, 3), 2.5).unwrap());
        let out = apply_decoherence(&rho, DecoherenceSpec { gamma: 50.0, tau: 10.0 }).unwrap();
        let mixed = ComplexMatrix::identity(9).scale(Complex64::new(1.0 / 9.0, 0.0));
        assert!(out.matrix.max_abs_diff(&mixed).unwrap() < 1e-15);
    }

    #[test]
    fn negative_parameters_are_rejected() {
        let rho = density_matrix(&initial_state(2, 2).unwrap());
        assert!(apply_decoherence(&rho, DecoherenceSpec { gamma: -0.1, tau: 1.0 }).is_err());
        assert!(apply_decoherence(&rho, DecoherenceSpec { gamma: 0.1, tau: -1.0 }).is_err());
    }

    #[test]
    fn decohered_state_is_physical() {
        let t = table(SetupKind::Linear, 3, 2);
        for g in [0.0, 0.05, 0.2, 1.0] {
            let rho = decohered_state(&t, DecoherenceSpec { gamma: g, tau: 2.5 }).unwrap();
            rho.check_physical().unwrap();
        }
    }
}
