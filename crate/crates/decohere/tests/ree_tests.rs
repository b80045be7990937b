//! REE solver: oracles with known optima, inner-step contracts, and
//! determinism.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use decohere::measures::von_neumann_entropy;
use decohere::ree::{
    ensemble_objective, factor_gradient, factor_step, ree, weight_step, ReeOptions,
    SeparableEnsemble,
};
use decohere::states::{
    density_from_pure, make_named_state, partial_trace, CVec, DensityMatrix, NamedState,
    PureState, QubitSet,
};

const LN2: f64 = std::f64::consts::LN_2;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pure_from_amps(n_qubits: usize, amps: &[(usize, f64)]) -> DensityMatrix {
    let dim = 1usize << n_qubits;
    let mut v = CVec::zeros(dim);
    for &(i, a) in amps {
        v[i] = c(a);
    }
    density_from_pure(&PureState::new(n_qubits, v).unwrap())
}

fn random_pure(n_qubits: usize, rng: &mut impl Rng) -> DensityMatrix {
    let dim = 1usize << n_qubits;
    let mut v = CVec::zeros(dim);
    let mut norm_sq = 0.0;
    for i in 0..dim {
        let re: f64 = rng.gen_range(-1.0..1.0);
        let im: f64 = rng.gen_range(-1.0..1.0);
        v[i] = Complex64::new(re, im);
        norm_sq += re * re + im * im;
    }
    let v = v / Complex64::new(norm_sq.sqrt(), 0.0);
    density_from_pure(&PureState::new(n_qubits, v).unwrap())
}

fn opts(seed: u64) -> ReeOptions {
    ReeOptions {
        restarts: 8,
        ..ReeOptions::with_seed(seed)
    }
}

// ------------------------------------------------------------ known optima

#[test]
fn pure_product_state_has_zero_ree() {
    // |+>|0>|1>
    let a = 1.0 / 2.0_f64.sqrt();
    let rho = pure_from_amps(3, &[(0b001, a), (0b101, a)]);
    let r = ree(&rho, &opts(1)).unwrap();
    assert!(r.value.abs() <= 1e-6, "E(product) = {}", r.value);
    assert!(r.value >= -1e-9);
}

#[test]
fn bell_pair_with_spectator_gives_ln2() {
    let a = 1.0 / 2.0_f64.sqrt();
    let rho = pure_from_amps(3, &[(0b000, a), (0b110, a)]);
    let r = ree(&rho, &opts(2)).unwrap();
    assert!((r.value - LN2).abs() < 1e-3, "E(Bell x |0>) = {}", r.value);
}

#[test]
fn ghz_gives_ln2() {
    let rho = density_from_pure(&make_named_state(NamedState::Ghz(3)).unwrap());
    let r = ree(&rho, &opts(3)).unwrap();
    assert!((r.value - LN2).abs() < 1e-3, "E(GHZ) = {}", r.value);
    assert!(r.converged);
}

#[test]
fn two_qubit_bell_gives_ln2() {
    let rho = density_from_pure(&make_named_state(NamedState::Ghz(2)).unwrap());
    let r = ree(&rho, &opts(4)).unwrap();
    assert!((r.value - LN2).abs() < 1e-3, "E(Bell) = {}", r.value);
}

#[test]
fn pure_two_qubit_ree_equals_reduced_entropy() {
    // for pure bipartite states the REE is the marginal entropy
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..3 {
        let rho = random_pure(2, &mut rng);
        let marginal = partial_trace(&rho, &QubitSet::single(0, 2).unwrap()).unwrap();
        let expected = von_neumann_entropy(&marginal).unwrap();
        let r = ree(&rho, &opts(30 + trial)).unwrap();
        assert!(
            (r.value - expected).abs() < 1e-3,
            "trial {trial}: E = {}, S(rho_A) = {expected}",
            r.value
        );
    }
}

#[test]
fn separable_mixtures_give_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for trial in 0..5 {
        let m = rng.gen_range(2..=8usize);
        let ens = SeparableEnsemble::random(3, m, &mut rng);
        let rho = DensityMatrix::new(ens.assemble()).unwrap();
        let r = ree(&rho, &opts(40 + trial as u64)).unwrap();
        assert!(
            r.value <= 1e-4,
            "trial {trial} (m = {m}): E = {}",
            r.value
        );
    }
}

#[test]
fn wwbar_value_is_below_total_coherence() {
    let rho = density_from_pure(&make_named_state(NamedState::WWbar).unwrap());
    let r = ree(&rho, &opts(5)).unwrap();
    assert!(r.value < 6.0_f64.ln(), "E = {} !< ln 6", r.value);
    assert!(r.value > 0.5, "WWbar is entangled, E = {}", r.value);
}

// ------------------------------------------------------------ result contract

#[test]
fn value_matches_witness_state() {
    use decohere::measures::relative_entropy;
    let rho = density_from_pure(&make_named_state(NamedState::Star).unwrap());
    let r = ree(&rho, &opts(6)).unwrap();
    let recomputed = relative_entropy(&rho, &r.sigma_star).unwrap();
    assert!(
        (r.value - recomputed).abs() < 1e-9,
        "value {} vs S(rho || sigma*) {recomputed}",
        r.value
    );
    assert_eq!(r.restarts_used, 8);
    assert!(r.spread >= 0.0);
}

#[test]
fn seed_determinism() {
    let rho = density_from_pure(&make_named_state(NamedState::Star).unwrap());
    let a = ree(&rho, &opts(7)).unwrap();
    let b = ree(&rho, &opts(7)).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.iterations, b.iterations);
    assert_eq!(a.spread.to_bits(), b.spread.to_bits());
    // a different seed may land elsewhere, but values stay close
    let cdif = ree(&rho, &opts(8)).unwrap();
    assert!((a.value - cdif.value).abs() < 1e-3);
}

#[test]
fn qubit_relabeling_is_exactly_invariant() {
    // swapping two qubits of the input produces a bit-identical value
    let a = 1.0 / 2.0_f64.sqrt();
    // asymmetric entangled state: Bell on qubits (0,1), spectator 2
    let rho01 = pure_from_amps(3, &[(0b000, a), (0b110, a)]);
    // same Bell on qubits (1,2), spectator 0
    let rho12 = pure_from_amps(3, &[(0b000, a), (0b011, a)]);
    let r01 = ree(&rho01, &opts(9)).unwrap();
    let r12 = ree(&rho12, &opts(9)).unwrap();
    assert_eq!(r01.value.to_bits(), r12.value.to_bits());
}

#[test]
fn unsupported_register_sizes_error() {
    let rho = pure_from_amps(1, &[(0, 1.0)]);
    assert!(ree(&rho, &opts(10)).is_err());
    let rho4 = density_from_pure(&make_named_state(NamedState::Ghz(4)).unwrap());
    assert!(ree(&rho4, &opts(10)).is_err());
}

// -------------------------------------------------------------- inner steps

#[test]
fn weight_step_merges_duplicates() {
    let member = vec![(1.0, 0.5), (2.0, 1.5), (0.7, 3.0)];
    let ens = SeparableEnsemble::new(3, vec![0.3, 0.7], vec![member.clone(), member]).unwrap();
    let rho = density_from_pure(&make_named_state(NamedState::WWbar).unwrap());
    let out = weight_step(&rho, &ens).unwrap();
    assert_eq!(out.len(), 1);
    assert!((out.weights()[0] - 1.0).abs() < 1e-12);
}

#[test]
fn weight_step_never_increases_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let rho = density_from_pure(&make_named_state(NamedState::Ghz(2)).unwrap());
    for _ in 0..5 {
        let ens = SeparableEnsemble::random(2, 8, &mut rng);
        let f0 = ensemble_objective(&rho, &ens).unwrap();
        let out = weight_step(&rho, &ens).unwrap();
        let f1 = ensemble_objective(&rho, &out).unwrap();
        assert!(f1 <= f0 + 1e-12, "objective rose: {f0} -> {f1}");
    }
}

#[test]
fn weight_step_strictly_decreases_from_random_start() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let rho = density_from_pure(&make_named_state(NamedState::Ghz(2)).unwrap());
    let ens = SeparableEnsemble::random(2, 8, &mut rng);
    let f0 = ensemble_objective(&rho, &ens).unwrap();
    let out = weight_step(&rho, &ens).unwrap();
    let f1 = ensemble_objective(&rho, &out).unwrap();
    assert!(f1 < f0, "expected strict decrease, got {f0} -> {f1}");
}

#[test]
fn factor_step_never_increases_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let rho = density_from_pure(&make_named_state(NamedState::Star).unwrap());
    let mut ens = SeparableEnsemble::random(3, 8, &mut rng);
    let mut step = 0.1;
    for _ in 0..10 {
        let f0 = ensemble_objective(&rho, &ens).unwrap();
        let (next, _accepted) = factor_step(&rho, &ens, &mut step).unwrap();
        let f1 = ensemble_objective(&rho, &next).unwrap();
        assert!(f1 <= f0 + 1e-10, "objective rose: {f0} -> {f1}");
        ens = next;
    }
}

#[test]
fn factor_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let rho = density_from_pure(&make_named_state(NamedState::WWbar).unwrap());
    let h = 1e-5;
    for _ in 0..3 {
        // interior angles so gauge canonicalization cannot wrap them;
        // enough members that sigma is generically full rank and the
        // objective is smooth at the finite-difference scale
        let m = 10;
        let angles: Vec<Vec<(f64, f64)>> = (0..m)
            .map(|_| {
                (0..3)
                    .map(|_| (rng.gen_range(0.3..2.8), rng.gen_range(0.3..6.0)))
                    .collect()
            })
            .collect();
        let weights = vec![1.0 / m as f64; m];
        let ens = SeparableEnsemble::new(3, weights.clone(), angles.clone()).unwrap();
        let grad = factor_gradient(&rho, &ens).unwrap();
        assert_eq!(grad.len(), m * 3 * 2);

        let mut idx = 0;
        let mut worst = 0.0f64;
        for j in 0..m {
            for q in 0..3 {
                for component in 0..2 {
                    let mut plus = angles.clone();
                    let mut minus = angles.clone();
                    if component == 0 {
                        plus[j][q].0 += h;
                        minus[j][q].0 -= h;
                    } else {
                        plus[j][q].1 += h;
                        minus[j][q].1 -= h;
                    }
                    let fp = ensemble_objective(
                        &rho,
                        &SeparableEnsemble::new(3, weights.clone(), plus).unwrap(),
                    )
                    .unwrap();
                    let fm = ensemble_objective(
                        &rho,
                        &SeparableEnsemble::new(3, weights.clone(), minus).unwrap(),
                    )
                    .unwrap();
                    let numeric = (fp - fm) / (2.0 * h);
                    worst = worst.max((grad[idx] - numeric).abs());
                    idx += 1;
                }
            }
        }
        assert!(worst <= 1e-6, "gradient vs finite differences: {worst}");
    }
}

#[test]
fn ensemble_validation() {
    // weights must sum to one
    assert!(SeparableEnsemble::new(2, vec![0.5, 0.6], vec![
        vec![(0.1, 0.2), (0.3, 0.4)],
        vec![(0.5, 0.6), (0.7, 0.8)],
    ])
    .is_err());
    // member arity must match qubit count
    assert!(SeparableEnsemble::new(2, vec![1.0], vec![vec![(0.1, 0.2)]]).is_err());
    // assembled sigma is a valid density matrix
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let ens = SeparableEnsemble::random(3, 6, &mut rng);
    assert!(DensityMatrix::new(ens.assemble()).is_ok());
}
