mod common;

use hkas_core::{JointDistribution, Rational, Value, VarId};
use proptest::prelude::*;

fn var(i: usize) -> VarId {
    VarId::aux(format!("x{i}"))
}

/// A joint distribution over up to three variables with arities up to three,
/// built from a weight per grid cell (zero weights drop the cell).
fn dist() -> impl Strategy<Value = JointDistribution> {
    prop::collection::vec(1u64..=3, 1..=3).prop_flat_map(|arity| {
        let cells: usize = arity.iter().product::<u64>() as usize;
        prop::collection::vec(0u64..5, cells)
            .prop_filter("some mass", |w| w.iter().any(|&x| x > 0))
            .prop_map(move |weights| build(&arity, &weights))
    })
}

fn build(arity: &[u64], weights: &[u64]) -> JointDistribution {
    let total: u64 = weights.iter().sum();
    let mut outcomes = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        if w == 0 {
            continue;
        }
        let mut rest = i as u64;
        let mut values = vec![Value::Int(0); arity.len()];
        for (k, &a) in arity.iter().enumerate().rev() {
            values[k] = Value::Int((rest % a) as i64);
            rest /= a;
        }
        outcomes.push((values, Rational::new(w, total)));
    }
    JointDistribution::new((0..arity.len()).map(var).collect(), outcomes).unwrap()
}

/// Product of two independent marginals given by weight tables.
fn product(a: &[u64], b: &[u64]) -> JointDistribution {
    let weights: Vec<u64> = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
    build(&[a.len() as u64, b.len() as u64], &weights)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn entropy_matches_oracle_and_bounds(d in dist()) {
        let vars = d.variables().to_vec();
        let hv = d.entropy(&vars).unwrap();
        prop_assert!((hv - common::h(&d, &vars)).abs() < 1e-9);
        prop_assert!(hv >= 0.0);
        prop_assert!(hv <= (d.support_size() as f64).log2() + 1e-9);
    }

    #[test]
    fn marginals_keep_total_mass(d in dist()) {
        let first = [d.variables()[0].clone()];
        let m = d.marginal(&first).unwrap();
        let mass: Rational = m.outcomes().map(|(_, p)| p.clone()).fold(Rational::zero(), |a, b| a + b);
        prop_assert!(mass.is_one());
        prop_assert_eq!(d.marginal(d.variables()).unwrap(), d.clone());
    }

    #[test]
    fn information_is_non_negative(d in dist()) {
        let vars = d.variables().to_vec();
        if vars.len() >= 2 {
            let (a, rest) = vars.split_at(1);
            let (b, c) = rest.split_at(1);
            let i = d.conditional_mutual_information(a, b, c).unwrap();
            prop_assert!(i >= -1e-9);
            let j = d.conditional_mutual_information(b, a, c).unwrap();
            prop_assert!((i - j).abs() < 1e-9);
            let mi = d.mutual_information(a, b).unwrap();
            prop_assert_eq!(mi.abs() < 1e-9, d.is_independent(a, b).unwrap());
            prop_assert_eq!(d.is_independent(a, b).unwrap(), common::independent(&d, a, b));
        }
    }

    #[test]
    fn determination_matches_oracle(d in dist()) {
        let vars = d.variables().to_vec();
        if vars.len() >= 2 {
            let (t, g) = vars.split_at(1);
            let det = d.is_functionally_determined(t, g).unwrap();
            prop_assert_eq!(det, common::determined(&d, t, g));
            prop_assert_eq!(det, d.conditional_entropy(t, g).unwrap() < 1e-9);
        }
        // every variable set determines itself
        prop_assert!(d.is_functionally_determined(&vars, &vars).unwrap());
    }

    #[test]
    fn products_are_independent(a in prop::collection::vec(1u64..6, 1..4), b in prop::collection::vec(1u64..6, 1..4)) {
        let d = product(&a, &b);
        let (x, y) = ([var(0)], [var(1)]);
        prop_assert!(d.is_independent(&x, &y).unwrap());
        prop_assert!(d.is_mutually_independent(&[x.to_vec(), y.to_vec()]).unwrap());
        let sum = d.entropy(&x).unwrap() + d.entropy(&y).unwrap();
        prop_assert!((d.entropy(&[var(0), var(1)]).unwrap() - sum).abs() < 1e-9);
    }
}

#[test]
fn copies_are_dependent_unless_constant() {
    // X uniform on {0, 1, 2}, Y = X
    let d = build(&[3, 3], &[1, 0, 0, 0, 1, 0, 0, 0, 1]);
    assert!(!d.is_independent(&[var(0)], &[var(1)]).unwrap());
    assert!(d.is_functionally_determined(&[var(1)], &[var(0)]).unwrap());
    assert!((d.mutual_information(&[var(0)], &[var(1)]).unwrap() - 3f64.log2()).abs() < 1e-12);
    // a constant is independent of everything
    let c = build(&[1, 2], &[1, 3]);
    assert!(c.is_independent(&[var(0)], &[var(1)]).unwrap());
    assert_eq!(c.entropy(&[var(0)]).unwrap(), 0.0);
}
