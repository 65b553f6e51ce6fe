#![allow(dead_code)]

use intersection_game::Scenario;
use proptest::prelude::*;

/// Small valid scenarios: tick 1, grid [0, upper], even crossing.
pub fn scenario() -> impl Strategy<Value = Scenario> {
    (6i64..=14, prop_oneof![Just(2i64), Just(4), Just(6)]).prop_flat_map(|(upper, dt)| {
        let profile = (0..=upper).prop_flat_map(move |e| (Just(e), e..=upper));
        (profile.clone(), profile)
            .prop_map(move |(a, b)| Scenario::from_units(1, (0, upper), dt, a, b).unwrap())
    })
}

/// Every scenario with tick 1 on `[0, upper]` for one crossing.
pub fn all_scenarios(upper: i64, dt: i64) -> Vec<Scenario> {
    let profiles: Vec<(i64, i64)> = (0..=upper)
        .flat_map(|e| (e..=upper).map(move |d| (e, d)))
        .collect();
    let mut out = Vec::with_capacity(profiles.len() * profiles.len());
    for &a in &profiles {
        for &b in &profiles {
            out.push(Scenario::from_units(1, (0, upper), dt, a, b).unwrap());
        }
    }
    out
}
