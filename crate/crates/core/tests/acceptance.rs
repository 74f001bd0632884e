//! Acceptance criteria. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use circle_torsion::verify::{run_suite, CheckStatus, SuiteResult};
use circle_torsion::{MultiplierSchedule, RatioStream};

const SEED: u64 = 20_240_601;

struct Criterion {
    id: u32,
    title: &'static str,
    suites: &'static [&'static str],
    limit: Duration,
    extra: fn() -> Result<(), String>,
}

fn none() -> Result<(), String> {
    Ok(())
}

fn zeta_golden() -> Result<(), String> {
    let m = MultiplierSchedule::full(RatioStream::factorial());
    let terms = m.flat_terms(7).map_err(|e| e.to_string())?;
    let got: Vec<String> = terms.iter().map(ToString::to_string).collect();
    if got.join(",") == "1,2,4,6,12,18,24" {
        Ok(())
    } else {
        Err(format!("prefix {}", got.join(",")))
    }
}

fn injective_count(r: &SuiteResult) -> Result<(), String> {
    let check = r
        .checks
        .iter()
        .find(|c| c.name.starts_with("B^delta"))
        .ok_or("no injectivity check")?;
    if check.detail.contains("4096 at |delta| = 12") {
        Ok(())
    } else {
        Err(check.detail.clone())
    }
}

fn subset_family_extra() -> Result<(), String> {
    let r = run_suite("theorem32-witness", SEED, Some(1)).map_err(|e| e.to_string())?;
    injective_count(&r)
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "zeta prefix golden", suites: &["zeta-prefix"], limit: Duration::from_secs(1), extra: zeta_golden },
    Criterion { id: 2, title: "digit roundtrip and uniqueness", suites: &["digit-roundtrip"], limit: Duration::from_secs(5), extra: none },
    Criterion { id: 3, title: "digit recursion identity", suites: &["lemma22"], limit: Duration::from_secs(5), extra: none },
    Criterion {
        id: 4,
        title: "tail bound and norm identities",
        suites: &["norm-identities", "tailbound"],
        limit: Duration::from_secs(10),
        extra: none,
    },
    Criterion { id: 5, title: "Q/Z membership under the factorial schedule", suites: &["qz-membership"], limit: Duration::from_secs(10), extra: none },
    Criterion { id: 6, title: "inclusion chain monotonicity", suites: &["inclusion-chain"], limit: Duration::from_secs(30), extra: none },
    Criterion { id: 7, title: "bounded ratios give finite support", suites: &["eggleston"], limit: Duration::from_secs(30), extra: none },
    Criterion { id: 8, title: "folding witness pipeline", suites: &["theorem32-witness"], limit: Duration::from_secs(30), extra: subset_family_extra },
    Criterion { id: 9, title: "characterizing schedule for divisor chains", suites: &["theorem33-chain"], limit: Duration::from_secs(30), extra: none },
    Criterion { id: 10, title: "gap-third dichotomy evidence", suites: &["theorem41-dichotomy"], limit: Duration::from_secs(60), extra: none },
];

fn evaluate(c: &Criterion) -> (bool, String) {
    let started = Instant::now();
    let mut cases = 0;
    for suite in c.suites {
        let r = match run_suite(suite, SEED, None) {
            Ok(r) => r,
            Err(e) => return (false, format!("{suite}: {e}")),
        };
        cases += r.checks.iter().map(|k| k.cases).sum::<u64>();
        if let Some(bad) = r.checks.iter().find(|k| k.status != CheckStatus::Pass) {
            let repro = r.repro.unwrap_or_default();
            return (false, format!("{suite}: {:?} {}: {} ({repro})", bad.status, bad.name, bad.detail));
        }
    }
    if let Err(e) = (c.extra)() {
        return (false, e);
    }
    let elapsed = started.elapsed();
    if elapsed > c.limit {
        return (false, format!("took {elapsed:.2?}, limit {:?}", c.limit));
    }
    (true, format!("{cases} exact checks in {elapsed:.2?}"))
}

fn main() {
    let mut failed = 0;
    for c in &CRITERIA {
        let (ok, detail) = evaluate(c);
        failed += usize::from(!ok);
        println!("criterion {:>2} {} {}: {detail}", c.id, if ok { "PASS" } else { "FAIL" }, c.title);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
