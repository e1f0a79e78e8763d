//! Property tests for the algebraic invariants of the engine.

use proptest::prelude::*;
use qmacv::fock::{self, Partition};
use qmacv::operators::build_d;
use qmacv::params::sampled;
use qmacv::qhyper::{phi_series, PhiSpec};
use qmacv::quasi::{det_by, pfaffian_by};
use qmacv::scalar::{qpoch, rat, rat_int, ParamScalar, Rat, Scalar, Var};
use qmacv::series::{basis, Exps, RatioSeries};
use qmacv::spectral::{residual, solve_eigen, weyl_action, WeylElement, ZetaPoly};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn small_rat() -> impl Strategy<Value = Rat> {
    (-9i64..=9, 1i64..=7).prop_map(|(a, b)| rat(a, b))
}

/// A nonzero rational away from the roots of unity that make q-Pochhammers vanish.
fn generic_rat() -> impl Strategy<Value = Rat> {
    (2i64..=13, 1i64..=11, any::<bool>()).prop_map(|(a, b, s)| {
        let r = rat(a, b);
        if s { r } else { -r }
    })
}

/// Sparse polynomial in `Q`, `T`, `S_1` with small coefficients.
fn poly() -> impl Strategy<Value = ParamScalar> {
    prop::collection::vec((-4i64..=4, 0u32..3, 0u32..3, 0u32..2), 1..4).prop_map(|terms| {
        let mut acc = ParamScalar::zero();
        for (c, a, b, s) in terms {
            let m = ParamScalar::var(Var::Q).pow_i(a as i64).unwrap().mul(&ParamScalar::var(Var::T).pow_i(b as i64).unwrap()).mul(&ParamScalar::var(Var::s(1)).pow_i(s as i64).unwrap());
            acc = acc.add(&m.scale(&rat_int(c)));
        }
        acc
    })
}

fn series(n: usize, cap: i32) -> impl Strategy<Value = RatioSeries<Rat>> {
    let b = basis(n, cap);
    let k = b.len();
    prop::collection::vec((0..k, small_rat()), 0..6).prop_map(move |terms| {
        let mut s = RatioSeries::zero(n, cap);
        for (i, c) in terms {
            s.add_term(b[i].clone(), c);
        }
        s
    })
}

fn partition() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1u32..5, 0..5).prop_map(Partition::new)
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn param_scalar_ring_laws(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        if !a.is_zero() {
            prop_assert!(a.mul(&a.inv().unwrap()).is_one());
        }
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in poly(), b in poly(), c in poly(), q in generic_rat(), t in generic_rat(), s in generic_rat()) {
        let at = |v: Var| match v {
            Var::Q => Some(q.clone()),
            Var::T => Some(t.clone()),
            _ => Some(s.clone()),
        };
        let (ea, eb, ec) = (a.eval(&at).unwrap(), b.eval(&at).unwrap(), c.eval(&at).unwrap());
        prop_assume!(!eb.is_zero());
        let f = a.div(&b).unwrap().add(&c);
        prop_assert_eq!(f.eval(&at).unwrap(), ea / eb + ec);
    }

    #[test]
    fn qpoch_cocycle(a in generic_rat(), q in generic_rat(), m in -2i64..=2, n in -2i64..=2) {
        let lhs = qpoch(&a, &q, m + n);
        let aqm = &a * q.pow_i(m).unwrap();
        let rhs = qpoch(&a, &q, m).and_then(|x| qpoch(&aqm, &q, n).map(|y| x * y));
        if let (Ok(l), Ok(r)) = (lhs, rhs) {
            prop_assert_eq!(l, r);
        }
    }

    #[test]
    fn series_ring_laws(f in series(3, 4), g in series(3, 4), h in series(3, 4)) {
        prop_assert_eq!(f.mul(&g).unwrap().mul(&h).unwrap(), f.mul(&g.mul(&h).unwrap()).unwrap());
        prop_assert_eq!(f.mul(&g).unwrap(), g.mul(&f).unwrap());
        prop_assert_eq!(f.mul(&g.add(&h).unwrap()).unwrap(), f.mul(&g).unwrap().add(&f.mul(&h).unwrap()).unwrap());
    }

    #[test]
    fn truncation_is_coherent(f in series(3, 5), g in series(3, 5), m in 0i32..5) {
        let big = f.mul(&g).unwrap().truncate(m);
        let small = f.truncate(m).mul(&g.truncate(m)).unwrap();
        prop_assert_eq!(big, small);
    }

    #[test]
    fn products_respect_the_grading(f in series(3, 5), g in series(3, 5), d1 in 0i32..4, d2 in 0i32..4) {
        let hf = f.filter(|e| e.degree() == d1);
        let hg = g.filter(|e| e.degree() == d2);
        let p = hf.mul(&hg).unwrap();
        prop_assert!(p.terms().keys().all(|e| e.degree() == d1 + d2));
    }

    #[test]
    fn phi_is_symmetric_in_numerator_parameters(a in generic_rat(), b in generic_rat(), c in generic_rat(), q in generic_rat(), z in small_rat()) {
        let e = Exps::from_slice(&[1]);
        let one = PhiSpec::new(vec![a.clone(), b.clone()], vec![c.clone()], q.clone());
        let two = PhiSpec::new(vec![b, a], vec![c], q);
        if let (Ok(x), Ok(y)) = (phi_series(2, &one, &e, &z, 6), phi_series(2, &two, &e, &z, 6)) {
            prop_assert_eq!(x, y);
        }
    }

    #[test]
    fn terminating_series_stop(m in 0i64..4, b in generic_rat(), c in generic_rat(), q in generic_rat()) {
        let qm = q.pow_i(-m).unwrap();
        let spec = PhiSpec::new(vec![qm, b], vec![c], q);
        if let Ok(cs) = spec.coeffs(8) {
            prop_assert!(cs[(m as usize + 1)..].iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn pfaffian_squares_to_determinant(entries in prop::collection::vec(-6i64..=6, 6)) {
        let add = |a: &Rat, b: &Rat| a + b;
        let mul = |a: &Rat, b: &Rat| a * b;
        let neg = |a: &Rat| -a;
        let (z, o) = (rat_int(0), rat_int(1));
        for dim in [2usize, 4] {
            let mut m = vec![vec![z.clone(); dim]; dim];
            let mut k = 0;
            for i in 0..dim {
                for j in i + 1..dim {
                    m[i][j] = rat_int(entries[k]);
                    m[j][i] = rat_int(-entries[k]);
                    k += 1;
                }
            }
            let pf = pfaffian_by(&m, &z, &o, &add, &mul, &neg).unwrap();
            prop_assert_eq!(&pf * &pf, det_by(&m, &z, &o, &add, &mul, &neg));
        }
    }

    #[test]
    fn partition_bookkeeping(l in partition(), m in partition(), k in 1u32..5) {
        prop_assert_eq!(l.union(&m).size(), l.size() + m.size());
        prop_assert_eq!(l.with(k).without(k), Some(l.clone()));
        prop_assert_eq!(l.with(k).multiplicity(k), l.multiplicity(k) + 1);
        prop_assert!(l.dominates(&l));
        prop_assert_eq!(Partition::parse(&l.text()).unwrap(), l.clone());
        prop_assert!(l.z() > rat_int(0));
    }

    #[test]
    fn exps_text_roundtrip(v in prop::collection::vec(-5i32..6, 1..4)) {
        let e = Exps::from_slice(&v);
        prop_assert_eq!(Exps::parse(&e.text()).unwrap(), e);
    }
}

proptest! {
    #![proptest_config(cfg(8))]

    #[test]
    fn d_is_triangular_and_degree_preserving(seed in 0u64..1000, n in 2usize..4) {
        let (p, _) = sampled(n, seed);
        let d = build_d(&p, 3).unwrap();
        for (k, e) in d.basis.iter().enumerate() {
            for r in d.cols[k].terms().keys() {
                prop_assert!(r.degree() >= e.degree(), "x^({}) maps to x^({})", e.text(), r.text());
                prop_assert!(r >= e);
            }
        }
    }

    #[test]
    fn eigenfunctions_solve_and_are_determined(seed in 0u64..1000, pick in 1usize..20) {
        let (p, _) = sampled(3, seed);
        let cap = 3;
        let rec = solve_eigen(&p, &Exps::zero(2), cap).unwrap();
        let d = build_d(&p, cap).unwrap();
        prop_assert!(residual(&d, &rec).unwrap().is_empty());
        // changing any non-leading coefficient breaks the equation
        let keys: Vec<Exps> = rec.series.terms().keys().filter(|e| e.degree() > 0).cloned().collect();
        prop_assume!(!keys.is_empty());
        let mut bad = rec.clone();
        bad.series.add_term(keys[pick % keys.len()].clone(), rat_int(1));
        prop_assert!(!residual(&d, &bad).unwrap().is_empty());
    }

    #[test]
    fn heisenberg_relations_hold(seed in 0u64..1000) {
        let (p, _) = sampled(2, seed);
        prop_assert!(fock::heisenberg_check(&p, 3).unwrap().passed());
    }
}

fn zeta_poly() -> impl Strategy<Value = ZetaPoly<ParamScalar>> {
    prop::collection::vec((prop::collection::vec(0i32..3, 3), -3i64..=3), 1..3).prop_map(|terms| {
        let mut z = ZetaPoly::zero(3);
        for (e, c) in terms {
            z.add_term(e, ParamScalar::int(c));
        }
        z
    })
}

proptest! {
    #![proptest_config(cfg(6))]

    #[test]
    fn weyl_action_is_a_representation(f in zeta_poly(), m in 1u32..4) {
        let act = |w: &[usize], f: &ZetaPoly<ParamScalar>| weyl_action(&WeylElement { word: w.to_vec(), m }, f).unwrap();
        for i in [1, 2] {
            prop_assert_eq!(act(&[i, i], &f).terms, f.terms.clone());
        }
        prop_assert_eq!(act(&[1, 2, 1], &f).terms, act(&[2, 1, 2], &f).terms);
    }
}
