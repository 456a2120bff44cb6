use proptest::prelude::*;

use sessionflow::generate::{Generator, Params};
use sessionflow::semantics::{normal_form, reduce_all, struct_congruent};
use sessionflow::surface::{parse_process, parse_type, print_process, print_type};
use sessionflow::{check, SecrecyLattice};

fn generator(seed: u64) -> Generator {
    Generator::new(SecrecyLattice::two_point(), seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dual_is_an_involution_preserving_weight(seed in any::<u64>(), depth in 0usize..4) {
        let a = generator(seed).session_type(depth);
        prop_assert_eq!(a.dual().dual(), a.clone());
        prop_assert_eq!(a.dual().weight(), a.weight());
    }

    #[test]
    fn types_round_trip(seed in any::<u64>(), depth in 0usize..4) {
        let a = generator(seed).session_type(depth);
        prop_assert_eq!(parse_type(&print_type(&a)).unwrap(), a);
    }

    #[test]
    fn processes_round_trip(seed in any::<u64>()) {
        let mut g = generator(seed);
        let p = g.judgment(&Params::default()).process;
        let q = parse_process(&print_process(&p)).unwrap();
        prop_assert_eq!(q, p);
    }

    #[test]
    fn normal_form_is_congruent(seed in any::<u64>()) {
        let mut g = generator(seed);
        let p = g.closed(&Params::default());
        prop_assert!(struct_congruent(&normal_form(&p).to_process(), &p));
    }

    #[test]
    fn rearrangement_preserves_typing_and_reducts(seed in any::<u64>(), steps in 1usize..30) {
        let mut g = generator(seed);
        let j = g.judgment(&Params::default());
        let q = g.rearrange(&j.process, steps);
        prop_assert!(struct_congruent(&j.process, &q));
        prop_assert!(check(g.lattice(), &q, &j.running, &j.context).is_ok());
        let (rp, rq) = (reduce_all(&j.process), reduce_all(&q));
        prop_assert_eq!(rp.len(), rq.len());
        for r in &rp {
            prop_assert!(rq.iter().any(|s| struct_congruent(r, s)));
        }
    }
}

