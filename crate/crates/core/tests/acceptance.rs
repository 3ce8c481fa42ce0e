//! One line per acceptance criterion. Runs every experiment at its shipped defaults and
//! exits nonzero if any criterion fails.

use shrinkdyn::config::Config;
use shrinkdyn::experiments::{self, suites, Lab};
use shrinkdyn::report::ExperimentReport;
use std::process::ExitCode;
use std::time::Instant;

struct Outcome {
    failed: Vec<String>,
    /// Failed assertions that belong to an experiment but not to the criterion.
    outside: Vec<String>,
    seconds: f64,
    error: Option<String>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { failed: vec![], outside: vec![], seconds: 0.0, error: None }
    }

    fn take(&mut self, rep: &ExperimentReport, prefix: Option<&str>) {
        self.take_except(rep, prefix, &[]);
    }

    fn take_except(&mut self, rep: &ExperimentReport, prefix: Option<&str>, skip: &[&str]) {
        for a in rep.assertions.iter().filter(|a| !a.passed) {
            let line = format!("{}.{} = {:.4e} ({} {:.4e})", rep.name, a.name, a.value, a.comparator, a.tolerance);
            if prefix.is_none_or(|p| a.name.starts_with(p)) && !skip.contains(&a.name.as_str()) {
                self.failed.push(line);
            } else {
                self.outside.push(line);
            }
        }
    }

    fn timed<T>(&mut self, f: impl FnOnce() -> shrinkdyn::Result<T>) -> Option<T> {
        let t = Instant::now();
        let r = f();
        self.seconds += t.elapsed().as_secs_f64();
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.error.get_or_insert(e.to_string());
                None
            }
        }
    }
}

fn experiment(lab: &Lab, names: &[&str]) -> Outcome {
    experiment_except(lab, names, &[])
}

fn experiment_except(lab: &Lab, names: &[&str], skip: &[&str]) -> Outcome {
    let mut o = Outcome::new();
    for name in names {
        if let Some(rep) = o.timed(|| experiments::run(lab, name)) {
            o.take_except(&rep, None, skip);
        }
    }
    o
}

fn main() -> ExitCode {
    let config = Config::defaults();
    let clock = Instant::now();
    let mut rows: Vec<(usize, &str, f64, Outcome)> = vec![];

    for (k, kind, budget) in [(1, "circle", 5.0), (2, "sphere", 10.0)] {
        let mut o = Outcome::new();
        if let Some(rep) = o.timed(|| suites::surface_spectrum(&config, kind, None, Some(256))) {
            o.take(&rep, None);
        }
        rows.push((k, if k == 1 { "circle spectrum" } else { "sphere spectrum" }, budget, o));
    }

    let mut o3 = Outcome::new();
    let lab = o3.timed(|| Lab::new(config.clone()));
    let Some(lab) = lab else {
        println!("criterion 3 FAIL torus shrinker: {}", o3.error.unwrap_or_default());
        return ExitCode::FAILURE;
    };
    if let Some(rep) = o3.timed(|| experiments::run(&lab, "spectrum")) {
        o3.take(&rep, Some("torus_"));
    }
    rows.push((3, "torus shrinker", 120.0, o3));

    rows.push((4, "flow correctness", 120.0, experiment(&lab, &["flow"])));
    rows.push((5, "linearization gap", 300.0, experiment(&lab, &["gap"])));
    rows.push((6, "harnack and li-yau", 600.0, experiment_except(&lab, &["harnack", "liyau"], &["ratio_bound"])));
    rows.push((7, "cone invariance", 600.0, experiment(&lab, &["cone"])));
    rows.push((8, "invariant manifolds", 900.0, experiment(&lab, &["manifolds"])));
    rows.push((9, "drift dichotomy", 600.0, experiment(&lab, &["drift"])));
    rows.push((10, "entropy", 600.0, experiment(&lab, &["entropy", "entropy_decrease"])));
    rows.push((11, "global pipeline", 1200.0, experiment(&lab, &["pipeline"])));
    rows.push((12, "ancient limit", 900.0, experiment(&lab, &["ancient"])));

    let mut all = true;
    for (k, label, budget, o) in &rows {
        let ok = o.error.is_none() && o.failed.is_empty() && o.seconds < *budget;
        all &= ok;
        let mut detail = vec![];
        if let Some(e) = &o.error {
            detail.push(format!("error: {e}"));
        }
        detail.extend(o.failed.iter().cloned());
        if o.seconds >= *budget {
            detail.push(format!("over budget {budget} s"));
        }
        let tail = if detail.is_empty() { String::new() } else { format!(": {}", detail.join("; ")) };
        println!("criterion {k:>2} {} {label} [{:.1} s]{tail}", if ok { "PASS" } else { "FAIL" }, o.seconds);
    }
    // the desk suite exits 0 only if every experiment assertion holds, including the ones no
    // criterion names; circle and sphere checks of the spectrum suite count under 1 and 2
    let total = clock.elapsed().as_secs_f64();
    let outside: Vec<&String> = rows.iter().skip(2).flat_map(|r| r.3.outside.iter().filter(|l| !l.starts_with("spectrum."))).collect();
    let criteria_ok = rows.iter().all(|r| r.3.error.is_none() && r.3.failed.is_empty());
    let suite_ok = total <= 3600.0 && outside.is_empty() && criteria_ok;
    all &= suite_ok;
    let tail = if outside.is_empty() { String::new() } else { format!(": {}", outside.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("; ")) };
    println!("desk suite {} [{total:.1} s, budget 3600 s]{tail}", if suite_ok { "PASS" } else { "FAIL" });
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
