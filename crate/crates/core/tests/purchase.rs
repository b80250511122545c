mod support;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use support::{min_cost_flow_purchase, random_instance, random_subset};
use tpp::purchase::optimal_purchase;
use tpp::{Offer, Point, TppInstance, Variant};

#[test]
fn flow_oracle_on_hand_cases() {
    let mut offers = BTreeMap::new();
    offers.insert((1, 0), Offer::new(2, 4));
    offers.insert((2, 0), Offer::new(3, 5));
    offers.insert((2, 1), Offer::new(1, 2));
    let inst = TppInstance::new(Point::new(0, 0), vec![Point::new(3, 0), Point::new(0, 4)], vec![7, 2], offers, Variant::Restricted, None);
    // 4 units at 2, 3 at 3, 2 at 1
    assert_eq!(min_cost_flow_purchase(&inst, &BTreeSet::from([1, 2])), Some(19));
    assert_eq!(min_cost_flow_purchase(&inst, &BTreeSet::from([1])), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn planner_matches_flow_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&mut rng, 1..=10, 1..=8);
        let visited = random_subset(&mut rng, &inst);
        let oracle = min_cost_flow_purchase(&inst, &visited);
        match optimal_purchase(&inst, &visited) {
            Ok((plan, cost)) => {
                prop_assert_eq!(Some(cost), oracle);
                plan.check(&inst, &visited).unwrap();
            }
            Err(_) => prop_assert_eq!(oracle, None),
        }
    }
}
