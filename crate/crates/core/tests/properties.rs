use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use qgem::config::{parse_grid_list, Grid};
use qgem::entanglement::{entanglement_entropy, WitnessSource};
use qgem::experiment::{joint_distribution, median, round_robin};
use qgem::geometry::{PhysicalParams, SetupKind};
use qgem::linalg::{eig_hermitian, partial_trace, tensor, ComplexMatrix};
use qgem::pauli::{group_ldfc, MeasurementPlan, Pauli, PauliString};
use qgem::scenario::Scenario;
use qgem::state::{apply_decoherence, decohered_state, density_matrix, evolve, initial_state, DecoherenceSpec};

fn hermitian(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim * dim).prop_map(move |v| {
        let a = ComplexMatrix::from_fn(dim, |r, c| Complex64::new(v[r * dim + c].0, v[r * dim + c].1));
        a.add(&a.adjoint()).unwrap()
    })
}

/// Eigenvalues via the real symmetric embedding [[A, -B], [B, A]] of
/// H = A + iB, whose spectrum is that of H with every value doubled.
fn oracle_eigenvalues(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.dim();
    let m = DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h[(r % n, c % n)];
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.into_iter().step_by(2).collect()
}

fn qudit_scenario() -> impl Strategy<Value = Scenario> {
    (prop_oneof![Just(SetupKind::Parallel), Just(SetupKind::Linear)], 2..=3usize, 2..=4usize)
        .prop_filter("dimension cap", |&(_, n, d)| d.pow(n as u32) <= 64)
        .prop_map(|(kind, n, d)| Scenario::new(kind, n, d, 0, PhysicalParams::default()).unwrap())
}

fn pauli_string(n: usize) -> impl Strategy<Value = PauliString> {
    proptest::collection::vec(prop::sample::select(vec![Pauli::I, Pauli::X, Pauli::Y, Pauli::Z]), n)
        .prop_map(PauliString::new)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn jacobi_matches_independent_eigensolver(h in hermitian(8)) {
        let ours = eig_hermitian(&h).unwrap();
        let theirs = oracle_eigenvalues(&h);
        for (a, b) in ours.eigenvalues.iter().zip(&theirs) {
            prop_assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for (lambda, v) in ours.eigenvalues.iter().zip(&ours.eigenvectors) {
            let hv = h.mat_vec(v).unwrap();
            let residual = hv.iter().zip(v).map(|(x, y)| (x - y * lambda).norm()).fold(0.0, f64::max);
            prop_assert!(residual < 1e-8);
        }
    }

    #[test]
    fn partial_trace_of_product(a in hermitian(2), b in hermitian(3)) {
        let ab = tensor(&a, &b).unwrap();
        let left = partial_trace(&ab, &[2, 3], &[0]).unwrap();
        let right = partial_trace(&ab, &[2, 3], &[1]).unwrap();
        prop_assert!(left.max_abs_diff(&a.scale(b.trace())).unwrap() < 1e-12);
        prop_assert!(right.max_abs_diff(&b.scale(a.trace())).unwrap() < 1e-12);
    }

    #[test]
    fn closed_form_state_matches_evolution(sc in qudit_scenario(), gamma in 0.0..0.5f64, tau in 0.0..6.0f64) {
        let (n, d) = (sc.n(), sc.d_levels());
        let pure = density_matrix(&evolve(&initial_state(n, d).unwrap(), sc.phase_table(), tau).unwrap());
        let staged = apply_decoherence(&pure, DecoherenceSpec::new(gamma, tau).unwrap()).unwrap();
        let direct = decohered_state(sc.phase_table(), DecoherenceSpec::new(gamma, tau).unwrap()).unwrap();
        prop_assert!(direct.matrix.max_abs_diff(&staged.matrix).unwrap() < 1e-12);
        prop_assert!(direct.check_physical().is_ok());
    }

    #[test]
    fn reduced_entropy_bounded(sc in qudit_scenario(), gamma in 0.0..0.5f64, tau in 0.0..6.0f64, k in 0..3usize) {
        let k = k % sc.n();
        let rho = sc.state(gamma, tau).unwrap();
        let s = entanglement_entropy(&rho, &[k]).unwrap();
        prop_assert!(s >= 0.0);
        prop_assert!(s <= (sc.d_levels() as f64).log2() + 1e-10);
        let reduced = partial_trace(&rho.matrix, &rho.dims(), &[k]).unwrap();
        prop_assert!((reduced.trace() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn group_marginals_reproduce_expectations(
        kind in prop_oneof![Just(SetupKind::Parallel), Just(SetupKind::Linear)],
        gamma in 0.0..0.2f64,
        tau in 0.5..5.0f64,
    ) {
        let sc = Scenario::qubits(kind, 3, 1).unwrap();
        let rho = sc.state(gamma, tau).unwrap();
        let plan = group_ldfc(&sc.decomposition(WitnessSource::SelfState, gamma, tau).unwrap());
        for (g, basis) in plan.shared_bases.iter().enumerate() {
            let dist = joint_distribution(&rho, basis).unwrap();
            prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for p in plan.group_strings(g) {
                let mask = p.letters().iter().enumerate()
                    .filter(|(_, &l)| l != Pauli::I)
                    .fold(0usize, |m, (k, _)| m | 1 << (2 - k));
                let from_dist: f64 = dist.iter().enumerate()
                    .map(|(b, &q)| if (b & mask).count_ones() % 2 == 0 { q } else { -q })
                    .sum();
                let exact = p.trace_with(&rho.matrix).unwrap().re;
                prop_assert!((from_dist - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn plan_json_round_trip(
        kind in prop_oneof![Just(SetupKind::Parallel), Just(SetupKind::Linear), Just(SetupKind::Star)],
        n in 2..=3usize,
        gamma in 0.0..0.2f64,
        tau in 0.5..5.0f64,
    ) {
        prop_assume!(kind != SetupKind::Star || n == 3);
        let sc = Scenario::qubits(kind, n, n - 1).unwrap();
        let plan = group_ldfc(&sc.decomposition(WitnessSource::SelfState, gamma, tau).unwrap());
        let back = MeasurementPlan::from_json(&plan.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, plan);
    }

    #[test]
    fn pauli_string_round_trip(p in (1..=8usize).prop_flat_map(pauli_string)) {
        let back: PauliString = p.to_string().parse().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn grid_round_trip(start in -1e3..1e3f64, span in 0.0..1e3f64, steps in 1..500usize) {
        let g = Grid { start, stop: start + span, steps };
        let back: Grid = g.to_string().parse().unwrap();
        prop_assert_eq!(back, g);
        let v = g.values();
        prop_assert_eq!(v.len(), steps);
        prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(parse_grid_list(&g.to_string()).unwrap(), v);
    }

    #[test]
    fn round_robin_is_even(budget in 0..1_000_000u64, units in 1..64usize) {
        let split = round_robin(budget, units);
        prop_assert_eq!(split.iter().sum::<u64>(), budget);
        let (lo, hi) = (split.iter().min().unwrap(), split.iter().max().unwrap());
        prop_assert!(hi - lo <= 1);
    }

    #[test]
    fn median_lies_between_middle_values(mut v in proptest::collection::vec(0..1_000_000u64, 1..30)) {
        let m = median(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        let k = sorted.len();
        prop_assert!(m >= sorted[(k - 1) / 2] && m <= sorted[k / 2]);
    }
}
