use killed_walk::oracle::{
    free_pmf, KilledWalkTable, OracleOptions, Pmf, TauStatistics,
};
use killed_walk::{ArithmeticMode, BarrierKind, IncrementDistribution, Scalar};
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

type Q = BigRational;

fn dists(mode: ArithmeticMode) -> Vec<IncrementDistribution> {
    vec![
        IncrementDistribution::from_strs(&[-1, 0, 1], &["0.3", "0.4", "0.3"], mode).unwrap(),
        IncrementDistribution::from_strs(&[-1, 0, 2], &["0.4", "0.4", "0.2"], mode).unwrap(),
        IncrementDistribution::from_strs(&[-2, 0, 1], &["0.2", "0.4", "0.4"], mode).unwrap(),
    ]
}

/// `P(S_n = y, τ > n)` by walking every path.
fn brute_force(d: &IncrementDistribution, n: usize, barrier: BarrierKind) -> Vec<(i64, Q)> {
    let mut out = std::collections::BTreeMap::<i64, Q>::new();
    let m = d.support().len();
    let total = m.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let mut pos = 0i64;
        let mut p = Q::one();
        let mut alive = true;
        for _ in 0..n {
            let i = c % m;
            c /= m;
            pos += d.support()[i];
            p *= &d.probs()[i];
            if pos < barrier.floor() {
                alive = false;
                break;
            }
        }
        if alive {
            *out.entry(pos).or_insert_with(Q::zero) += p;
        }
    }
    out.into_iter().collect()
}

fn nonzero(row: &Pmf<Q>) -> Vec<(i64, Q)> {
    row.iter()
        .filter(|(_, p)| !p.is_zero())
        .map(|(x, p)| (x, p.clone()))
        .collect()
}

#[test]
fn killed_table_matches_path_enumeration() {
    for d in dists(ArithmeticMode::Exact) {
        for barrier in [BarrierKind::Strict, BarrierKind::Weak] {
            let t = KilledWalkTable::<Q>::build(&d, 8, barrier, &OracleOptions::default()).unwrap();
            for n in 1..=8 {
                assert_eq!(nonzero(t.row(n).unwrap()), brute_force(&d, n, barrier), "n={n}");
            }
        }
    }
}

#[test]
fn mass_is_conserved_exactly() {
    for d in dists(ArithmeticMode::Exact) {
        for barrier in [BarrierKind::Strict, BarrierKind::Weak] {
            let t = KilledWalkTable::<Q>::build(&d, 20, barrier, &OracleOptions::default()).unwrap();
            let mut killed = Q::zero();
            for k in 1..=20 {
                killed += &t.p_tau()[k];
                assert_eq!(&t.survival()[k] + &killed, Q::one());
                assert!(t.survival()[k] <= t.survival()[k - 1]);
                assert_eq!(t.row(k).unwrap().total(), t.survival()[k]);
            }
            for n in [1, 7, 20] {
                assert_eq!(free_pmf::<Q>(&d, n, &OracleOptions::default()).unwrap().total(), Q::one());
            }
        }
    }
}

/// `P(S_k = y) = P(S_k = y, τ > k) + Σ_{j ≤ k} Σ_z P(S_j = z, τ = j) P(S_{k−j} = y − z)`.
#[test]
fn first_passage_decomposition_is_exact() {
    let opts = OracleOptions::default();
    for d in dists(ArithmeticMode::Exact) {
        for barrier in [BarrierKind::Strict, BarrierKind::Weak] {
            let n = 20;
            let t = KilledWalkTable::<Q>::build(&d, n, barrier, &opts).unwrap();
            let free: Vec<Pmf<Q>> = (0..=n).map(|k| free_pmf::<Q>(&d, k, &opts).unwrap()).collect();
            let k = n;
            let lo = free[k].offset;
            for y in lo..=free[k].last() {
                let mut rhs = t.entry(k, y);
                for j in 1..=k {
                    for (z, p) in t.killed_row(j).unwrap().iter() {
                        rhs += p * free[k - j].get(y - z);
                    }
                }
                assert_eq!(free[k].get(y), rhs, "y={y}");
            }
        }
    }
}

#[test]
fn float_agrees_with_rational_to_64_steps() {
    let opts = OracleOptions::default();
    for d in dists(ArithmeticMode::Exact) {
        for barrier in [BarrierKind::Strict, BarrierKind::Weak] {
            let exact = KilledWalkTable::<Q>::build(&d, 64, barrier, &opts).unwrap();
            let float = KilledWalkTable::<f64>::build(&d, 64, barrier, &opts).unwrap();
            let mut worst = 0.0f64;
            for k in 1..=64 {
                for (y, p) in exact.row(k).unwrap().iter() {
                    let e = p.to_f64();
                    if e > 0.0 {
                        worst = worst.max((float.entry(k, y) - e).abs() / e);
                    }
                }
            }
            assert!(worst <= 1e-10, "relative gap {worst:e}");
        }
    }
}

#[test]
fn weak_barrier_dominates() {
    for d in dists(ArithmeticMode::Float) {
        let s = KilledWalkTable::<f64>::build(&d, 400, BarrierKind::Strict, &OracleOptions::default()).unwrap();
        let w = KilledWalkTable::<f64>::build(&d, 400, BarrierKind::Weak, &OracleOptions::default()).unwrap();
        for k in 0..=400 {
            assert!(w.survival()[k] >= s.survival()[k]);
        }
    }
}

#[test]
fn tau_statistics_agree_with_table() {
    let opts = OracleOptions::default();
    for d in dists(ArithmeticMode::Exact) {
        for barrier in [BarrierKind::Strict, BarrierKind::Weak] {
            let t = KilledWalkTable::<Q>::build(&d, 30, barrier, &opts).unwrap();
            let s = TauStatistics::<Q>::compute(&d, 30, barrier, 3, &opts).unwrap();
            assert_eq!(t.p_tau(), &s.p_tau[..]);
            let total: Q = s.p_tau.iter().cloned().sum();
            assert!(total <= Q::one());
            for k in 1..=30 {
                let row = t.killed_row(k).unwrap();
                let mean: Q = row
                    .iter()
                    .map(|(z, p)| p * Q::from_integer((-z).into()))
                    .sum();
                assert_eq!(s.overshoot_mean()[k], mean);
            }
        }
    }
}

#[test]
fn float_sweep_is_reproducible() {
    let d = &dists(ArithmeticMode::Float)[1];
    let a = KilledWalkTable::<f64>::build(d, 300, BarrierKind::Strict, &OracleOptions::default()).unwrap();
    let b = KilledWalkTable::<f64>::build(d, 300, BarrierKind::Strict, &OracleOptions::default()).unwrap();
    for k in 1..=300 {
        let (ra, rb) = (a.row(k).unwrap(), b.row(k).unwrap());
        assert!(ra.probs.iter().zip(&rb.probs).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kill_plus_survival_is_one(
        neg in 1i64..4,
        pos in 1i64..4,
        w in proptest::collection::vec(1u32..9, 2),
    ) {
        // Three-point law on {−neg, 0, pos} with the mean fixed at zero.
        let (a, b) = (Q::from_integer(neg.into()), Q::from_integer(pos.into()));
        let zero_w = Q::from_integer(w[1].into());
        let left = Q::from_integer(w[0].into()) * &b;
        let right = Q::from_integer(w[0].into()) * &a;
        let total = &left + &right + &zero_w;
        let probs = [left / &total, zero_w / &total, right / &total];
        let Ok(d) = IncrementDistribution::validate(&[-neg, 0, pos], &probs, ArithmeticMode::Exact) else {
            return Ok(());
        };
        for barrier in [BarrierKind::Strict, BarrierKind::Weak] {
            let t = KilledWalkTable::<Q>::build(&d, 12, barrier, &OracleOptions::default()).unwrap();
            let killed: Q = t.p_tau().iter().cloned().sum();
            prop_assert_eq!(&t.survival()[12] + killed, Q::one());
        }
    }
}
