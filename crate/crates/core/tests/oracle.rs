mod common;

use common::{naive_sup_tail, random_instance, rat};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use suplab::tail::exact_sup_tail;

#[test]
fn singleton_instance_matches_enumeration() {
    let class = suplab::space::FunctionTable::from_indicators(4, &[vec![0], vec![1], vec![2], vec![3]]).unwrap();
    let space = suplab::space::FiniteSpace::uniform(4).unwrap();
    let naive = naive_sup_tail(&class, &space, 2, &rat(2, 1), false);
    assert_eq!(naive, rat(1, 4));
    let exact = exact_sup_tail(&class, &space, 2, &rat(2, 1), false).unwrap();
    assert_eq!(exact.exact_value(), Some(&naive));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_tail_equals_enumeration(
        seed in any::<u64>(),
        rows in 1usize..4,
        points in 1usize..5,
        n in 1u32..6,
        u_num in 0i64..20,
        strict in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (class, space) = random_instance(&mut rng, rows, points, 4);
        let u = rat(u_num, 4);
        let naive = naive_sup_tail(&class, &space, n, &u, strict);
        let exact = exact_sup_tail(&class, &space, n, &u, strict).unwrap();
        prop_assert_eq!(exact.exact_value(), Some(&naive));
    }
}
