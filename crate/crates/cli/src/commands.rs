use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use qgem::config::{Command, RunConfig};
use qgem::decoherence::{gamma_total, EnvironmentParams};
use qgem::entanglement::{entanglement_entropy, witness_expectation, WitnessSource};
use qgem::experiment::{min_shots_for_confidence, MinShotsOptions, Sampler, DEFAULT_MAX_BUDGET};
use qgem::pauli::group_ldfc;
use qgem::scenario::Scenario;
use qgem::{Error, Result};

use crate::output::{num, write_csv, write_json};

/// Points on each confidence curve.
const CURVE_POINTS: usize = 40;

/// Streams at or above this offset feed curve sampling, keeping them apart
/// from the minimal-budget search probes.
const CURVE_STREAM_OFFSET: u64 = 1 << 32;

fn scenario(cfg: &RunConfig, subsystem: usize) -> Result<Scenario> {
    Scenario::new(cfg.setup, cfg.n, cfg.d_levels, subsystem, cfg.params)
}

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn entropy_sweep(cfg: &RunConfig) -> Result<()> {
    let gamma = cfg.gammas[0];
    let taus = cfg.tau_grid.values();
    let sc = scenario(cfg, 0)?;
    let points: Vec<(usize, f64)> = cfg
        .subsystems
        .iter()
        .flat_map(|&s| taus.iter().map(move |&t| (s, t)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(s, tau)| {
            let rho = sc.state(gamma, tau)?;
            let entropy = entanglement_entropy(&rho, &[s - 1])?;
            Ok(vec![
                cfg.setup.to_string(),
                cfg.n.to_string(),
                s.to_string(),
                num(tau),
                num(entropy),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv(
        Command::EntropySweep,
        cfg,
        &["setup", "n", "subsystem", "tau_s", "entropy_bits"],
        &rows,
    )
    .map_err(io)
}

pub fn witness_sweep(cfg: &RunConfig) -> Result<()> {
    let taus = cfg.tau_grid.values();
    let source = cfg.witness_source();
    let mut rows = Vec::new();
    for &s in &cfg.subsystems {
        let sc = scenario(cfg, s - 1)?;
        let fixed = match source {
            // the evaluation point is ignored for a fixed source
            WitnessSource::Fixed { .. } => Some(sc.witness(source, 0.0, 0.0)?),
            WitnessSource::SelfState => None,
        };
        let points: Vec<(f64, f64)> = cfg
            .gammas
            .iter()
            .flat_map(|&g| taus.iter().map(move |&t| (g, t)))
            .collect();
        let block = points
            .par_iter()
            .map(|&(gamma, tau)| {
                let value = match &fixed {
                    Some(w) => witness_expectation(w, &sc.state(gamma, tau)?)?,
                    None => sc.self_witness_value(gamma, tau)?,
                };
                Ok(vec![
                    cfg.setup.to_string(),
                    cfg.n.to_string(),
                    cfg.d_levels.to_string(),
                    s.to_string(),
                    num(gamma),
                    num(tau),
                    num(value),
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(block);
    }
    write_csv(
        Command::WitnessSweep,
        cfg,
        &["setup", "n", "D", "subsystem", "gamma_hz", "tau_s", "witness_value"],
        &rows,
    )
    .map_err(io)
}

/// Geometric budget grid from `lo` to `hi`, both included.
fn curve_budgets(lo: u64, hi: u64) -> Vec<u64> {
    let hi = hi.max(lo);
    let ratio = (hi as f64 / lo as f64).powf(1.0 / (CURVE_POINTS - 1) as f64);
    let mut budgets: Vec<u64> = (0..CURVE_POINTS)
        .map(|k| ((lo as f64) * ratio.powi(k as i32)).round() as u64)
        .map(|b| b.clamp(lo, hi))
        .collect();
    budgets.dedup();
    budgets
}

pub fn measure(cfg: &RunConfig) -> Result<()> {
    let sc = scenario(cfg, cfg.subsystems[0] - 1)?;
    let source = cfg.witness_source();
    let points: Vec<(f64, f64)> = cfg
        .gammas
        .iter()
        .flat_map(|&g| cfg.tau_grid.values().into_iter().map(move |t| (g, t)))
        .collect();
    for &(gamma, tau) in &points {
        let value = sc.witness_value(source, gamma, tau)?;
        if value >= 0.0 {
            return Err(Error::NotCertifiable { witness: value });
        }
    }
    let options = MinShotsOptions {
        target: cfg.target,
        max_budget: DEFAULT_MAX_BUDGET,
        witness: source,
    };
    let blocks = points
        .par_iter()
        .map(|&(gamma, tau)| {
            let summary = min_shots_for_confidence(&sc, gamma, tau, cfg.mode, &cfg.seeds, options)?;
            let sampler = Sampler::for_scenario(&sc, source, gamma, tau, cfg.mode)?;
            let top = cfg.shots.unwrap_or(4 * summary.median);
            let budgets = curve_budgets(sampler.min_budget(), top);
            let prefix = |total: u64| {
                vec![
                    cfg.n.to_string(),
                    cfg.d_levels.to_string(),
                    cfg.setup.to_string(),
                    num(gamma),
                    num(tau),
                    cfg.mode.to_string(),
                    total.to_string(),
                ]
            };
            let mut rows = Vec::new();
            for &seed in &cfg.seeds {
                for (k, &budget) in budgets.iter().enumerate() {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(CURVE_STREAM_OFFSET + k as u64);
                    let rep = sampler.report(budget, seed, &mut rng)?;
                    let mut row = prefix(rep.total_shots);
                    row.extend([
                        num(rep.witness_mean),
                        num(rep.stderr),
                        num(rep.t_value),
                        num(rep.confidence),
                        seed.to_string(),
                        "curve".into(),
                    ]);
                    rows.push(row);
                }
            }
            let mut row = prefix(summary.median);
            row.extend([
                num(summary.witness_value),
                String::new(),
                String::new(),
                num(cfg.target),
                "median".into(),
                "min_shots".into(),
            ]);
            rows.push(row);
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = blocks.into_iter().flatten().collect();
    write_csv(
        Command::Measure,
        cfg,
        &[
            "n",
            "D",
            "setup",
            "gamma_hz",
            "tau_s",
            "mode",
            "total_shots",
            "witness_mean",
            "stderr",
            "t",
            "confidence",
            "seed",
            "kind",
        ],
        &rows,
    )
    .map_err(io)
}

pub fn deco_estimate(cfg: &RunConfig) -> Result<()> {
    let temps = cfg.temp_grid.values();
    let results = temps
        .par_iter()
        .map(|&t| {
            gamma_total(&EnvironmentParams {
                delta_x: cfg.params.delta_x,
                ..EnvironmentParams::at_temperature(t)
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for b in &results {
        for w in &b.warnings {
            eprintln!("warning: T_e={} K: {w}", num(b.t_env));
        }
        rows.push(vec![
            num(b.t_env),
            num(b.lambda_air),
            num(b.gamma_air),
            num(b.blackbody.scattering),
            num(b.blackbody.emission),
            num(b.blackbody.absorption),
            num(b.gamma_blackbody),
            num(b.gamma_total),
        ]);
    }
    write_csv(
        Command::DecoEstimate,
        cfg,
        &[
            "T_e_K",
            "lambda_air",
            "gamma_air_hz",
            "lambda_s",
            "lambda_e",
            "lambda_a",
            "gamma_bb_hz",
            "gamma_total_hz",
        ],
        &rows,
    )
    .map_err(io)
}

pub fn group_ops(cfg: &RunConfig) -> Result<()> {
    let sc = scenario(cfg, cfg.subsystems[0] - 1)?;
    let decomp = sc.decomposition(cfg.witness_source(), cfg.gammas[0], cfg.tau_grid.start)?;
    let plan = group_ldfc(&decomp);
    let value = serde_json::json!({
        "config": cfg,
        "summary": {
            "operators": decomp.terms.len(),
            "groups": plan.num_groups(),
            "group_sizes": plan.groups.iter().map(Vec::len).collect::<Vec<_>>(),
        },
        "plan": plan,
    });
    write_json(cfg, &value).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::curve_budgets;

    #[test]
    fn budget_grid_spans_range() {
        let b = curve_budgets(6, 60_000);
        assert_eq!(b[0], 6);
        assert_eq!(*b.last().unwrap(), 60_000);
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(curve_budgets(10, 5), vec![10]);
    }
}
