#![allow(dead_code)]

use bandopt::{GenParams, Instance, InteractionMatrix};

/// Sites on the x axis, no bonds.
pub fn line(xs: &[f64]) -> Instance {
    let sites = xs.iter().map(|&x| [x, 0.0]).collect();
    Instance::new("line", 0, GenParams::for_n(xs.len()), sites, vec![]).unwrap()
}

pub fn matrix(inst: &Instance) -> InteractionMatrix {
    inst.interaction_matrix().unwrap()
}

/// The fixed regression suite: n in 4..=9, ten seeds each.
pub fn regression_suite() -> Vec<Instance> {
    (4..=9)
        .flat_map(|n| (0..10).map(move |k| (n, 1000 * n as u64 + k)))
        .map(|(n, seed)| bandopt::generate(n, seed, GenParams::for_n(n)).unwrap())
        .collect()
}
