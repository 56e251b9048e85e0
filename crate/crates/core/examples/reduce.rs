//! Computes no-DG unserved-energy features for a capped scenario set,
//! draws the WCSS curve and reduces the set at the elbow.

use dgplan::netmodel::ieee33;
use dgplan::reduce::{baseline_features, reduce, ReduceOptions};
use dgplan::scengen::{build_scenarios, ScenarioOptions};
use dgplan::solver::SolveOptions;

fn main() -> dgplan::Result<()> {
    let (net, profile) = ieee33();
    let profile = profile.window(2)?;
    let opts = ScenarioOptions {
        cap_3line: Some(200),
        ..ScenarioOptions::default()
    };
    let set = build_scenarios(&net, &profile, &opts)?;
    let features = baseline_features(&net, &profile, &set.scenarios, &SolveOptions::default(), true)?;
    let shedding = features.iter().filter(|f| f.de.iter().any(|&x| x > 0.0)).count();
    println!("{} scenarios, {shedding} shed load without DG", set.len());

    let r = reduce(
        &set,
        &features,
        &ReduceOptions {
            kmax: 15,
            ..ReduceOptions::default()
        },
    )?;
    for (k, w) in &r.curve {
        println!("k = {k:2}  wcss = {w:10.2}");
    }
    if let Some(e) = &r.elbow {
        println!("elbow at k = {}", e.k);
    }
    for s in &r.reduced.scenarios {
        println!("representative {:4}: lines {:?}, p = {:.4}", s.id, s.faults, s.prob);
    }
    Ok(())
}
