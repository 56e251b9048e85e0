//! Runs a small end-to-end study: scenario generation, reduction and the
//! equity sweep, writing artifacts to a directory (default `study-out`).

#![allow(clippy::field_reassign_with_default)]

use dgplan::evaluate::summary_csv;
use dgplan::study::{Study, StudyConfig};

fn main() -> dgplan::Result<()> {
    let mut cfg = StudyConfig::default();
    cfg.output = std::env::args().nth(1).unwrap_or_else(|| "study-out".into()).into();
    cfg.horizon = Some(1);
    cfg.scenarios.cap_3line = Some(100);
    cfg.reduction.kmax = 10;
    cfg.reduction.k = Some(6);
    cfg.test.n_test = 40;
    cfg.equity.sweep = vec![0.02, 0.1, f64::INFINITY];

    let study = Study::new(cfg)?;
    let (set, test) = study.gen()?;
    println!("{} training and {} test scenarios", set.len(), test.len());
    let r = study.reduce()?;
    println!("reduced to {} scenarios", r.reduced.len());
    print!("{}", summary_csv(&study.report()?));
    println!("artifacts in {}", study.config.output.display());
    Ok(())
}
