//! A configured interferometer plus the witness bookkeeping every higher
//! level computation needs.

use crate::entanglement::{
    build_witness_with_source, ppt_min_eigenpair, witness_expectation, WitnessOperator,
    WitnessSource,
};
use crate::error::{Error, Result};
use crate::geometry::{build_setup, phase_table, BranchPhaseTable, PhysicalParams, SetupGeometry, SetupKind};
use crate::pauli::{decompose, group_ldfc, PauliDecomposition, DEFAULT_ZERO_THRESHOLD};
use crate::state::{decohered_state, DecoherenceSpec, DensityMatrix};

#[derive(Debug, Clone)]
pub struct Scenario {
    pub setup: SetupGeometry,
    pub params: PhysicalParams,
    /// Zero-based index of the partially transposed particle.
    pub subsystem: usize,
    table: BranchPhaseTable,
}

impl Scenario {
    pub fn new(
        kind: SetupKind,
        n: usize,
        d_levels: usize,
        subsystem: usize,
        params: PhysicalParams,
    ) -> Result<Self> {
        params.validate()?;
        if subsystem >= n {
            return Err(Error::InvalidSubsystem(format!(
                "subsystem {} does not exist for n={n} (valid: 1..={n})",
                subsystem + 1
            )));
        }
        let setup = build_setup(kind, n, d_levels, &params)?;
        let table = phase_table(&setup, &params);
        Ok(Self {
            setup,
            params,
            subsystem,
            table,
        })
    }

    /// Qubit setup with default physical parameters.
    pub fn qubits(kind: SetupKind, n: usize, subsystem: usize) -> Result<Self> {
        Self::new(kind, n, 2, subsystem, PhysicalParams::default())
    }

    pub fn n(&self) -> usize {
        self.setup.n
    }

    pub fn d_levels(&self) -> usize {
        self.setup.d_levels
    }

    pub fn kind(&self) -> SetupKind {
        self.setup.kind
    }

    pub fn phase_table(&self) -> &BranchPhaseTable {
        &self.table
    }

    pub fn state(&self, gamma: f64, tau: f64) -> Result<DensityMatrix> {
        decohered_state(&self.table, DecoherenceSpec::new(gamma, tau)?)
    }

    /// Minimum eigenvalue of the partial transpose, which equals the
    /// expectation of the self-witness.
    pub fn self_witness_value(&self, gamma: f64, tau: f64) -> Result<f64> {
        Ok(ppt_min_eigenpair(&self.state(gamma, tau)?, self.subsystem)?.0)
    }

    /// Witness to evaluate at `(gamma, tau)`: rebuilt there for
    /// `SelfState`, or at the stored reference point for `Fixed`.
    pub fn witness(&self, source: WitnessSource, gamma: f64, tau: f64) -> Result<WitnessOperator> {
        let (g_ref, t_ref) = match source {
            WitnessSource::SelfState => (gamma, tau),
            WitnessSource::Fixed { gamma, tau } => (gamma, tau),
        };
        build_witness_with_source(&self.state(g_ref, t_ref)?, self.subsystem, source)
    }

    pub fn witness_value(&self, source: WitnessSource, gamma: f64, tau: f64) -> Result<f64> {
        match source {
            WitnessSource::SelfState => self.self_witness_value(gamma, tau),
            WitnessSource::Fixed { .. } => {
                witness_expectation(&self.witness(source, gamma, tau)?, &self.state(gamma, tau)?)
            }
        }
    }

    pub fn decomposition(
        &self,
        source: WitnessSource,
        gamma: f64,
        tau: f64,
    ) -> Result<PauliDecomposition> {
        if self.d_levels() != 2 {
            return Err(Error::Unsupported(format!(
                "Pauli decomposition needs qubits, got D={}",
                self.d_levels()
            )));
        }
        let w = self.witness(source, gamma, tau)?;
        decompose(&w.matrix, self.n(), DEFAULT_ZERO_THRESHOLD)
    }

    /// `(operators including identity, QWC groups)` of the self-witness.
    pub fn operator_counts(&self, gamma: f64, tau: f64) -> Result<(usize, usize)> {
        let d = self.decomposition(WitnessSource::SelfState, gamma, tau)?;
        Ok((d.terms.len(), group_ldfc(&d).num_groups()))
    }

    /// Decoherence rate in `[lo, hi]` where the self-witness at `tau` turns
    /// non-negative, located by bisection to `tol`. `None` without a sign
    /// change on the bracket.
    pub fn zero_crossing(&self, tau: f64, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>> {
        let (mut a, mut b) = (lo, hi);
        let fa = self.self_witness_value(a, tau)?;
        let fb = self.self_witness_value(b, tau)?;
        if !(fa < 0.0 && fb >= 0.0) {
            return Ok(None);
        }
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if self.self_witness_value(mid, tau)? < 0.0 {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Some(0.5 * (a + b)))
    }
}

/// Table-style counts for a qubit setup at default parameters.
pub fn operator_counts(
    kind: SetupKind,
    n: usize,
    subsystem: usize,
    gamma: f64,
    tau: f64,
) -> Result<(usize, usize)> {
    Scenario::qubits(kind, n, subsystem)?.operator_counts(gamma, tau)
}
