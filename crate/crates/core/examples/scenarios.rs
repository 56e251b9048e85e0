//! Enumerates double and triple line-fault scenarios and samples an
//! out-of-sample test set.

use dgplan::netmodel::ieee33;
use dgplan::scengen::{build_scenarios, sample_test_scenarios, ScenarioOptions};

fn main() -> dgplan::Result<()> {
    let (net, profile) = ieee33();
    let set = build_scenarios(&net, &profile, &ScenarioOptions::default())?;
    let doubles = set.scenarios.iter().filter(|s| s.faults.len() == 2).count();
    println!(
        "{} scenarios ({doubles} double, {} triple), total probability {:.12}",
        set.len(),
        set.len() - doubles,
        set.total_prob()
    );
    let likely = set.scenarios.iter().max_by(|a, b| a.prob.total_cmp(&b.prob)).unwrap();
    println!("most likely: lines {:?}, p = {:.3e}", likely.faults, likely.prob);

    let test = sample_test_scenarios(&set, 320, 7, net.n_buses())?;
    println!(
        "test set: {} scenarios, fingerprint {}",
        test.len(),
        &test.fingerprint()[..12]
    );
    Ok(())
}
