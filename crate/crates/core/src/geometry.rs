//! Arm positions for the parallel, linear and star arrangements and the
//! gravitational phase rate of every joint branch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::MAX_DIM;

/// Newton's constant, m^3 kg^-1 s^-2.
pub const G_NEWTON: f64 = 6.674e-11;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Masses, distances and times of the interferometer; SI units throughout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Mass of each particle (kg).
    pub mass: f64,
    /// Closest allowed approach between arms of different particles (m).
    pub d_min: f64,
    /// Superposition width (m).
    pub delta_x: f64,
    /// Interaction time (s).
    pub tau: f64,
    pub g: f64,
    pub hbar: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            mass: 1e-14,
            d_min: 200e-6,
            delta_x: 250e-6,
            tau: 2.5,
            g: G_NEWTON,
            hbar: HBAR,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mass", self.mass),
            ("d_min", self.d_min),
            ("delta_x", self.delta_x),
            ("tau", self.tau),
            ("G", self.g),
            ("hbar", self.hbar),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and strictly positive, got {value}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetupKind {
    /// Superpositions orthogonal to the line joining the particles.
    Parallel,
    /// Superpositions along the line joining the particles.
    Linear,
    /// Three particles on an equilateral triangle, arms pointing outward.
    Star,
}

impl SetupKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetupKind::Parallel => "parallel",
            SetupKind::Linear => "linear",
            SetupKind::Star => "star",
        }
    }
}

impl fmt::Display for SetupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SetupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parallel" | "par" => Ok(SetupKind::Parallel),
            "linear" | "lin" => Ok(SetupKind::Linear),
            "star" => Ok(SetupKind::Star),
            other => Err(Error::Parse(format!(
                "unknown setup '{other}' (expected parallel, linear or star)"
            ))),
        }
    }
}

/// Planar arm coordinates of every particle.
#[derive(Debug, Clone, PartialEq)]
pub struct SetupGeometry {
    pub kind: SetupKind,
    pub n: usize,
    pub d_levels: usize,
    /// `positions[particle][arm]` in meters.
    pub positions: Vec<Vec<[f64; 2]>>,
    /// Base separation between neighbouring arm-0 positions (m).
    pub d: f64,
}

impl SetupGeometry {
    pub fn hilbert_dim(&self) -> usize {
        self.d_levels.pow(self.n as u32)
    }

    pub fn dims(&self) -> Vec<usize> {
        vec![self.d_levels; self.n]
    }

    /// Smallest distance between arms belonging to different particles.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.n {
            for k in (i + 1)..self.n {
                for a in &self.positions[i] {
                    for b in &self.positions[k] {
                        best = best.min(dist(a, b));
                    }
                }
            }
        }
        best
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Lays out the arms of `n` particles with `d_levels` arms each.
///
/// Qudit arms (`d_levels > 2`) are equally spaced over the full width
/// `delta_x`. The star arrangement places the arm-0 positions on an
/// equilateral triangle of edge `d_min` and pushes arm 1 radially outward by
/// `delta_x`.
pub fn build_setup(
    kind: SetupKind,
    n: usize,
    d_levels: usize,
    params: &PhysicalParams,
) -> Result<SetupGeometry> {
    params.validate()?;
    if d_levels < 2 {
        return Err(Error::Unsupported(format!(
            "each particle needs at least 2 arms, got {d_levels}"
        )));
    }
    if !(2..=3).contains(&n) {
        return Err(Error::Unsupported(format!(
            "{kind} setup supports 2 or 3 particles, got {n}"
        )));
    }
    if d_levels.checked_pow(n as u32).is_none_or(|dim| dim > MAX_DIM) {
        return Err(Error::TooLarge {
            dim: d_levels.saturating_pow(n as u32),
            max: MAX_DIM,
        });
    }
    let spacing = params.delta_x / (d_levels - 1) as f64;
    let (positions, d) = match kind {
        SetupKind::Parallel => {
            let d = params.d_min;
            let pos = (0..n)
                .map(|i| {
                    (0..d_levels)
                        .map(|j| [i as f64 * d, j as f64 * spacing])
                        .collect()
                })
                .collect();
            (pos, d)
        }
        SetupKind::Linear => {
            let d = params.d_min + params.delta_x;
            let pos = (0..n)
                .map(|i| {
                    (0..d_levels)
                        .map(|j| [i as f64 * d + j as f64 * spacing, 0.0])
                        .collect()
                })
                .collect();
            (pos, d)
        }
        SetupKind::Star => {
            if n != 3 || d_levels != 2 {
                return Err(Error::Unsupported(format!(
                    "star setup requires n=3 and D=2, got n={n}, D={d_levels}"
                )));
            }
            let d = params.d_min;
            let radius = d / 3f64.sqrt();
            let pos = (0..3)
                .map(|i| {
                    let angle = std::f64::consts::FRAC_PI_2
                        + 2.0 * std::f64::consts::PI * i as f64 / 3.0;
                    let (s, c) = angle.sin_cos();
                    vec![
                        [radius * c, radius * s],
                        [(radius + params.delta_x) * c, (radius + params.delta_x) * s],
                    ]
                })
                .collect();
            (pos, d)
        }
    };
    Ok(SetupGeometry {
        kind,
        n,
        d_levels,
        positions,
        d,
    })
}

/// Distance between arm `arm_i` of particle `i` and arm `arm_k` of particle `k`.
pub fn branch_distance(
    setup: &SetupGeometry,
    i: usize,
    arm_i: usize,
    k: usize,
    arm_k: usize,
) -> Result<f64> {
    if i == k {
        return Err(Error::InvalidParameter(
            "branch distance needs two different particles".into(),
        ));
    }
    let lookup = |p: usize, a: usize| {
        setup
            .positions
            .get(p)
            .and_then(|arms| arms.get(a))
            .ok_or_else(|| Error::InvalidParameter(format!("no arm {a} on particle {p}")))
    };
    Ok(dist(lookup(i, arm_i)?, lookup(k, arm_k)?))
}

/// Phase rate (rad/s) of every joint branch, indexed most-significant-first.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPhaseTable {
    pub n: usize,
    pub d_levels: usize,
    pub rates: Vec<f64>,
}

impl BranchPhaseTable {
    pub fn rate(&self, arms: &[usize]) -> f64 {
        let idx = arms.iter().fold(0, |acc, &j| acc * self.d_levels + j);
        self.rates[idx]
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Sums `G m^2 / (hbar r)` over all particle pairs for every branch.
pub fn phase_table(setup: &SetupGeometry, params: &PhysicalParams) -> BranchPhaseTable {
    let n = setup.n;
    let dl = setup.d_levels;
    let coupling = params.g * params.mass * params.mass / params.hbar;
    let total = setup.hilbert_dim();
    let mut rates = Vec::with_capacity(total);
    let mut arms = vec![0usize; n];
    for idx in 0..total {
        let mut rest = idx;
        for slot in arms.iter_mut().rev() {
            *slot = rest % dl;
            rest /= dl;
        }
        let mut rate = 0.0;
        for i in 0..n {
            for k in (i + 1)..n {
                rate += coupling / dist(&setup.positions[i][arms[i]], &setup.positions[k][arms[k]]);
            }
        }
        rates.push(rate);
    }
    BranchPhaseTable {
        n,
        d_levels: dl,
        rates,
    }
}
