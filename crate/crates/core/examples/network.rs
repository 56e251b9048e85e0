//! Loads the bundled 33-bus feeder, partitions it under a double fault and
//! checks a few switch configurations for radiality.

use std::collections::BTreeSet;

use dgplan::netmodel::{check_radial, ieee33, structural_islands};

fn main() -> dgplan::Result<()> {
    let (net, profile) = ieee33();
    let peak: f64 = net.buses().iter().map(|b| b.peak_p * net.base_mva).sum();
    println!(
        "{} buses, {} lines ({} ties), peak load {peak:.2} MW, {} intervals",
        net.n_buses(),
        net.n_lines(),
        net.ties().count(),
        profile.horizon()
    );
    println!("DG candidates: {:?}", net.dg_candidates());

    let faults = BTreeSet::from([18, 19]);
    let islands = structural_islands(&net, &faults)?;
    for (i, c) in islands.components.iter().enumerate() {
        let tag = if i == islands.main_component {
            " (substation)"
        } else {
            ""
        };
        println!("component {i}{tag}: buses {c:?}");
    }

    let normal: BTreeSet<usize> = net.sectionalizing().map(|l| l.id).collect();
    println!("normal configuration radial: {}", check_radial(&net, &normal).radial);
    let mut meshed = normal.clone();
    meshed.insert(net.ties().next().unwrap().id);
    let r = check_radial(&net, &meshed);
    println!(
        "with one tie closed: radial {}, loop lines {:?}",
        r.radial, r.loop_lines
    );
    Ok(())
}
