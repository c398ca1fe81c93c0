//! Finite-shot measurement of a Pauli-expanded witness, the one-sided
//! confidence that it is negative, and the smallest budget reaching a target
//! confidence.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::WitnessSource;
use crate::error::{Error, Result};
use crate::linalg::{tensor, ComplexMatrix};
use crate::pauli::{group_ldfc, MeasurementPlan, Pauli, PauliDecomposition, PauliString};
use crate::scenario::Scenario;
use crate::state::DensityMatrix;

pub const DEFAULT_TARGET_CONFIDENCE: f64 = 0.999;
pub const DEFAULT_SEED_COUNT: u64 = 11;
pub const DEFAULT_MAX_BUDGET: u64 = 1 << 36;

/// Tolerance on `|Tr(P rho)| <= 1` before the state is declared invalid.
const EXPECTATION_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    /// One shot measures one Pauli string.
    Ungrouped,
    /// One shot measures a whole qubit-wise commuting group.
    Grouped,
}

impl PlanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanMode::Ungrouped => "ungrouped",
            PlanMode::Grouped => "grouped",
        }
    }
}

impl fmt::Display for PlanMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ungrouped" => Ok(PlanMode::Ungrouped),
            "grouped" => Ok(PlanMode::Grouped),
            other => Err(Error::Parse(format!(
                "unknown mode {other:?} (expected grouped or ungrouped)"
            ))),
        }
    }
}

/// Outcome statistics of one Pauli string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermRecord {
    /// Index into the decomposition's term list.
    pub term_index: usize,
    pub pauli: PauliString,
    pub shots: u64,
    pub plus_count: u64,
    /// Sum of the +1/-1 outcomes.
    pub outcome_sum: i64,
    pub mean: f64,
    /// Unbiased sample variance of the outcomes (zero below two shots).
    pub variance: f64,
}

impl TermRecord {
    fn from_counts(term_index: usize, pauli: PauliString, shots: u64, plus_count: u64) -> Self {
        let outcome_sum = 2 * plus_count as i64 - shots as i64;
        let mean = if shots == 0 {
            0.0
        } else {
            outcome_sum as f64 / shots as f64
        };
        let variance = if shots < 2 {
            0.0
        } else {
            (shots as f64 / (shots - 1) as f64) * (1.0 - mean * mean).max(0.0)
        };
        Self {
            term_index,
            pauli,
            shots,
            plus_count,
            outcome_sum,
            mean,
            variance,
        }
    }
}

/// Joint outcomes of one jointly measured group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub group_index: usize,
    pub basis: PauliString,
    pub shots: u64,
    /// Counts per joint outcome bit string; bit 0 is eigenvalue +1.
    pub histogram: Vec<u64>,
    pub members: Vec<TermRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub rng_seed: u64,
    pub terms: Vec<TermRecord>,
    /// Present for grouped runs; lets covariances be estimated.
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    pub witness_mean: f64,
    pub stderr: f64,
    /// `|mean| / stderr`.
    pub t_value: f64,
    /// One-sided p-value of the null hypothesis "expectation >= 0".
    pub p_value: f64,
    /// `1 - p_value`.
    pub confidence: f64,
    pub total_shots: u64,
}

/// Whether same-group covariances enter the standard error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Covariance {
    #[default]
    Neglect,
    Include,
}

/// Probability of the +1 outcome when measuring `p` on `rho`.
pub fn plus_probability(rho: &DensityMatrix, p: &PauliString) -> Result<f64> {
    let expectation = p.trace_with(&rho.matrix)?.re;
    if expectation.abs() > 1.0 + EXPECTATION_SLACK {
        return Err(Error::InvalidState(format!(
            "Tr({p} rho) = {expectation} lies outside [-1, 1]"
        )));
    }
    Ok(((1.0 + expectation) / 2.0).clamp(0.0, 1.0))
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, shots: u64, p: f64) -> u64 {
    if shots == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return shots;
    }
    Binomial::new(shots, p).expect("p in (0, 1)").sample(rng)
}

fn multinomial<R: Rng + ?Sized>(rng: &mut R, shots: u64, probs: &[f64]) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = shots;
    let mut mass: f64 = probs.iter().sum();
    for (slot, &p) in counts.iter_mut().zip(probs) {
        if left == 0 || mass <= 0.0 {
            break;
        }
        let k = binomial(rng, left, (p / mass).min(1.0));
        *slot = k;
        left -= k;
        mass -= p;
    }
    if left > 0 {
        // rounding left mass for the last nonzero outcome
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        counts[last] += left;
    }
    counts
}

/// Single-string measurement with outcomes +1/-1.
pub fn sample_term<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    term_index: usize,
    p: &PauliString,
    shots: u64,
    rng: &mut R,
) -> Result<TermRecord> {
    check_qubits(rho, p.len())?;
    if p.is_identity() {
        return Err(Error::InvalidParameter("the identity string is not measured".into()));
    }
    let plus = binomial(rng, shots, plus_probability(rho, p)?);
    Ok(TermRecord::from_counts(term_index, p.clone(), shots, plus))
}

fn check_qubits(rho: &DensityMatrix, n: usize) -> Result<()> {
    if rho.d_levels != 2 || rho.n != n {
        return Err(Error::DimensionMismatch {
            expected: 1 << n,
            found: rho.dim(),
        });
    }
    Ok(())
}

/// Local unitary taking the eigenbasis of `p` to the computational basis.
fn basis_change(p: Pauli) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let entries = match p {
        Pauli::I | Pauli::Z => vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        Pauli::X => vec![c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)],
        // H S^dagger
        Pauli::Y => vec![c(h, 0.0), c(0.0, -h), c(h, 0.0), c(0.0, h)],
    };
    ComplexMatrix::from_row_major(2, entries).expect("2x2")
}

/// Joint outcome distribution when every particle is measured in the local
/// basis `basis`. Index bit `n-1-k` is particle `k`, 1 meaning eigenvalue -1.
pub fn joint_distribution(rho: &DensityMatrix, basis: &PauliString) -> Result<Vec<f64>> {
    check_qubits(rho, basis.len())?;
    let mut u = ComplexMatrix::identity(1);
    for &l in basis.letters() {
        u = tensor(&u, &basis_change(l))?;
    }
    let rotated = u.matmul(&rho.matrix)?.matmul(&u.adjoint())?;
    Ok((0..rotated.dim()).map(|i| rotated[(i, i)].re.max(0.0)).collect())
}

/// Outcome bit mask of the positions where `p` acts.
fn support_mask(p: &PauliString) -> usize {
    let n = p.len();
    p.letters()
        .iter()
        .enumerate()
        .filter(|(_, &l)| l != Pauli::I)
        .fold(0, |m, (k, _)| m | (1 << (n - 1 - k)))
}

fn members_from_histogram(plan: &MeasurementPlan, g: usize, histogram: &[u64], shots: u64) -> Vec<TermRecord> {
    plan.groups[g]
        .iter()
        .map(|&i| {
            let mask = support_mask(&plan.terms[i].pauli);
            let plus = histogram
                .iter()
                .enumerate()
                .filter(|(b, _)| (b & mask).count_ones() % 2 == 0)
                .map(|(_, &c)| c)
                .sum();
            TermRecord::from_counts(i, plan.terms[i].pauli.clone(), shots, plus)
        })
        .collect()
}

/// Jointly measures group `g` of `plan`; every shot yields one outcome for
/// every member.
pub fn sample_group<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    plan: &MeasurementPlan,
    g: usize,
    shots: u64,
    rng: &mut R,
) -> Result<GroupRecord> {
    let Some(members) = plan.groups.get(g) else {
        return Err(Error::InvalidParameter(format!("plan has no group {g}")));
    };
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            if !crate::pauli::qwc(&plan.terms[i].pauli, &plan.terms[j].pauli) {
                return Err(Error::InvalidParameter(format!(
                    "group {g} mixes non-commuting {} and {}",
                    plan.terms[i].pauli, plan.terms[j].pauli
                )));
            }
        }
    }
    let basis = plan.shared_bases[g].clone();
    let probs = joint_distribution(rho, &basis)?;
    let histogram = multinomial(rng, shots, &probs);
    let members = members_from_histogram(plan, g, &histogram, shots);
    Ok(GroupRecord {
        group_index: g,
        basis,
        shots,
        histogram,
        members,
    })
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Combines per-term statistics into the witness estimate and its one-sided
/// confidence of being negative.
pub fn estimate_witness(decomp: &PauliDecomposition, record: &MeasurementRecord) -> Result<ConfidenceReport> {
    estimate_witness_with(decomp, record, Covariance::Neglect)
}

pub fn estimate_witness_with(
    decomp: &PauliDecomposition,
    record: &MeasurementRecord,
    covariance: Covariance,
) -> Result<ConfidenceReport> {
    let mut by_index: Vec<Option<&TermRecord>> = vec![None; decomp.terms.len()];
    for t in &record.terms {
        match by_index.get_mut(t.term_index) {
            Some(slot) if decomp.terms[t.term_index].pauli == t.pauli => *slot = Some(t),
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "record entry {} ({}) does not match the decomposition",
                    t.term_index, t.pauli
                )))
            }
        }
    }
    let mut mean = decomp.identity_coefficient();
    let mut var = 0.0;
    for i in decomp.measured_indices() {
        let Some(t) = by_index[i] else {
            return Err(Error::InvalidParameter(format!(
                "term {} was never measured",
                decomp.terms[i].pauli
            )));
        };
        if t.shots < 2 {
            return Err(Error::InvalidParameter(format!(
                "term {} needs at least 2 shots, has {}",
                t.pauli, t.shots
            )));
        }
        let c = decomp.terms[i].coefficient;
        mean += c * t.mean;
        var += c * c * t.variance / t.shots as f64;
    }
    if covariance == Covariance::Include {
        for g in &record.groups {
            var += group_covariance(decomp, g);
        }
    }
    let stderr = var.max(0.0).sqrt();
    let shots = record.groups.iter().map(|g| g.shots).sum::<u64>()
        + record
            .terms
            .iter()
            .filter(|t| !record.groups.iter().any(|g| g.members.iter().any(|m| m.term_index == t.term_index)))
            .map(|t| t.shots)
            .sum::<u64>();
    Ok(report(mean, stderr, shots))
}

/// `2 sum_{i<j} c_i c_j cov(i, j) / shots` within one group.
fn group_covariance(decomp: &PauliDecomposition, g: &GroupRecord) -> f64 {
    if g.shots < 2 {
        return 0.0;
    }
    let shots = g.shots as f64;
    let mut acc = 0.0;
    for (a, ta) in g.members.iter().enumerate() {
        for tb in &g.members[a + 1..] {
            let (ma, mb) = (support_mask(&ta.pauli), support_mask(&tb.pauli));
            let joint: f64 = g
                .histogram
                .iter()
                .enumerate()
                .map(|(b, &c)| {
                    let sa = if (b & ma).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    let sb = if (b & mb).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    sa * sb * c as f64
                })
                .sum::<f64>()
                / shots;
            let cov = (joint - ta.mean * tb.mean) * shots / (shots - 1.0);
            let (ca, cb) = (
                decomp.terms[ta.term_index].coefficient,
                decomp.terms[tb.term_index].coefficient,
            );
            acc += 2.0 * ca * cb * cov / shots;
        }
    }
    acc
}

fn report(mean: f64, stderr: f64, total_shots: u64) -> ConfidenceReport {
    let (t_value, confidence) = if stderr > 0.0 {
        (mean.abs() / stderr, normal_cdf(-mean / stderr))
    } else if mean < 0.0 {
        (f64::INFINITY, 1.0)
    } else {
        (if mean == 0.0 { 0.0 } else { f64::INFINITY }, 0.0)
    };
    ConfidenceReport {
        witness_mean: mean,
        stderr,
        t_value,
        p_value: 1.0 - confidence,
        confidence,
        total_shots,
    }
}

/// Splits `budget` evenly over `units`, the remainder going to the first ones.
pub fn round_robin(budget: u64, units: usize) -> Vec<u64> {
    let k = units as u64;
    (0..k).map(|i| budget / k + u64::from(i < budget % k)).collect()
}

/// Outcome probabilities of a fixed state and plan, prepared once and
/// sampled at many budgets.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub decomposition: PauliDecomposition,
    pub plan: MeasurementPlan,
    pub mode: PlanMode,
    /// `Pr(+1)` per measured term, aligned with `decomposition.measured_indices()`.
    term_probs: Vec<(usize, f64)>,
    /// Joint distribution per group.
    group_probs: Vec<Vec<f64>>,
    /// Exact `Tr(W rho)`.
    pub exact_value: f64,
}

impl Sampler {
    pub fn new(decomposition: PauliDecomposition, rho: &DensityMatrix, mode: PlanMode) -> Result<Self> {
        let plan = group_ldfc(&decomposition);
        let mut exact_value = decomposition.identity_coefficient();
        let mut term_probs = Vec::new();
        for i in decomposition.measured_indices() {
            let t = &decomposition.terms[i];
            let p = plus_probability(rho, &t.pauli)?;
            exact_value += t.coefficient * t.pauli.trace_with(&rho.matrix)?.re;
            term_probs.push((i, p));
        }
        let group_probs = match mode {
            PlanMode::Ungrouped => Vec::new(),
            PlanMode::Grouped => plan
                .shared_bases
                .iter()
                .map(|b| joint_distribution(rho, b))
                .collect::<Result<_>>()?,
        };
        Ok(Self {
            decomposition,
            plan,
            mode,
            term_probs,
            group_probs,
            exact_value,
        })
    }

    /// Sampler for the witness of `scenario` evaluated on its state at
    /// `(gamma, tau)`.
    pub fn for_scenario(
        scenario: &Scenario,
        source: WitnessSource,
        gamma: f64,
        tau: f64,
        mode: PlanMode,
    ) -> Result<Self> {
        let decomposition = scenario.decomposition(source, gamma, tau)?;
        Self::new(decomposition, &scenario.state(gamma, tau)?, mode)
    }

    /// Number of independently budgeted measurement settings.
    pub fn units(&self) -> usize {
        match self.mode {
            PlanMode::Ungrouped => self.term_probs.len(),
            PlanMode::Grouped => self.plan.num_groups(),
        }
    }

    /// Smallest budget giving every setting at least two shots.
    pub fn min_budget(&self) -> u64 {
        2 * self.units() as u64
    }

    pub fn sample<R: Rng + ?Sized>(&self, budget: u64, rng_seed: u64, rng: &mut R) -> MeasurementRecord {
        let alloc = round_robin(budget, self.units());
        match self.mode {
            PlanMode::Ungrouped => {
                let terms = self
                    .term_probs
                    .iter()
                    .zip(&alloc)
                    .map(|(&(i, p), &shots)| {
                        let plus = binomial(rng, shots, p);
                        TermRecord::from_counts(i, self.decomposition.terms[i].pauli.clone(), shots, plus)
                    })
                    .collect();
                MeasurementRecord {
                    rng_seed,
                    terms,
                    groups: Vec::new(),
                }
            }
            PlanMode::Grouped => {
                let mut terms = Vec::new();
                let mut groups = Vec::new();
                for (g, (probs, &shots)) in self.group_probs.iter().zip(&alloc).enumerate() {
                    let histogram = multinomial(rng, shots, probs);
                    let members = members_from_histogram(&self.plan, g, &histogram, shots);
                    terms.extend(members.iter().cloned());
                    groups.push(GroupRecord {
                        group_index: g,
                        basis: self.plan.shared_bases[g].clone(),
                        shots,
                        histogram,
                        members,
                    });
                }
                MeasurementRecord {
                    rng_seed,
                    terms,
                    groups,
                }
            }
        }
    }

    /// Samples `budget` total shots and reports the confidence.
    pub fn report<R: Rng + ?Sized>(&self, budget: u64, rng_seed: u64, rng: &mut R) -> Result<ConfidenceReport> {
        if budget < self.min_budget() {
            return Err(Error::InvalidParameter(format!(
                "budget {budget} is below the minimum {} (two shots per setting)",
                self.min_budget()
            )));
        }
        estimate_witness(&self.decomposition, &self.sample(budget, rng_seed, rng))
    }

    /// Smallest budget reaching `target` for one seed: doubling from the
    /// minimum budget to bracket, then bisection to a single shot. Every
    /// probe draws from its own stream of the seed.
    pub fn min_shots_single(&self, target: f64, seed: u64, max_budget: u64) -> Result<u64> {
        if self.exact_value >= 0.0 {
            return Err(Error::NotCertifiable {
                witness: self.exact_value,
            });
        }
        let mut probe = 0u64;
        let mut passes = |budget: u64| -> Result<bool> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(probe);
            probe += 1;
            Ok(self.report(budget, seed, &mut rng)?.confidence >= target)
        };
        let mut hi = self.min_budget();
        if passes(hi)? {
            return Ok(hi);
        }
        let mut lo;
        loop {
            if hi >= max_budget {
                return Err(Error::BudgetExhausted { max_budget });
            }
            lo = hi;
            hi = hi.saturating_mul(2).min(max_budget);
            if passes(hi)? {
                break;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if passes(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinShotsOptions {
    pub target: f64,
    pub max_budget: u64,
    pub witness: WitnessSource,
}

impl Default for MinShotsOptions {
    fn default() -> Self {
        Self {
            target: DEFAULT_TARGET_CONFIDENCE,
            max_budget: DEFAULT_MAX_BUDGET,
            witness: WitnessSource::SelfState,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinShotsResult {
    pub median: u64,
    pub per_seed: Vec<(u64, u64)>,
    pub witness_value: f64,
    pub settings: usize,
}

/// Median over seeds of the smallest total budget whose confidence reaches
/// the target.
pub fn min_shots_for_confidence(
    scenario: &Scenario,
    gamma: f64,
    tau: f64,
    mode: PlanMode,
    seeds: &[u64],
    options: MinShotsOptions,
) -> Result<MinShotsResult> {
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("at least one seed is required".into()));
    }
    if !(options.target > 0.0 && options.target < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "target confidence {} must lie in (0, 1)",
            options.target
        )));
    }
    let sampler = Sampler::for_scenario(scenario, options.witness, gamma, tau, mode)?;
    if sampler.exact_value >= 0.0 {
        return Err(Error::NotCertifiable {
            witness: sampler.exact_value,
        });
    }
    let per_seed = seeds
        .par_iter()
        .map(|&s| Ok((s, sampler.min_shots_single(options.target, s, options.max_budget)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut values: Vec<u64> = per_seed.iter().map(|&(_, v)| v).collect();
    Ok(MinShotsResult {
        median: median(&mut values),
        per_seed,
        witness_value: sampler.exact_value,
        settings: sampler.units(),
    })
}

/// Middle value; the mean of the two middle values (rounded up) for even
/// lengths.
pub fn median(values: &mut [u64]) -> u64 {
    values.sort_unstable();
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        (values[m - 1] + values[m]).div_ceil(2)
    }
}

/// Seeds `0..count`.
pub fn default_seeds(count: u64) -> Vec<u64> {
    (0..count).collect()
}
