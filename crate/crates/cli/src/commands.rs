use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use circle_torsion::circle::{fmt_rational, parse_rational};
use circle_torsion::constructions::{
    adversarial_multiplier, certificate, fold_witness, CertificateBound, CertificateCase, WitnessCase, WitnessRecipe,
};
use circle_torsion::digits::to_digits;
use circle_torsion::format::{parse_document, parse_set, render_digits, Document};
use circle_torsion::membership::{
    check_conditions, check_family, decide, sufficient_divergent, Certificate, ConditionReport, Sufficiency, Verdict,
    WindowConfig,
};
use circle_torsion::verify::{run_suite, CheckStatus, SuiteResult, SUITES};
use circle_torsion::{CirclePoint, DigitExpansion, DigitTail, MultiplierSchedule, QClass, Status};

use crate::{Command, Format, WindowArgs, FORMAT_VERSION};

pub struct Report {
    pub body: String,
    /// False when a verification check did not pass.
    pub ok: bool,
}

type Result<T> = std::result::Result<T, String>;

fn emit(format: Format, command: &str, json: Value, text: String, ok: bool) -> Report {
    let body = match format {
        Format::Text => text,
        Format::Json => {
            let mut doc = json!({ "format_version": FORMAT_VERSION, "command": command });
            if let (Value::Object(doc), Value::Object(extra)) = (&mut doc, json) {
                doc.extend(extra);
            }
            format!("{}\n", serde_json::to_string_pretty(&doc).expect("reports serialize"))
        }
    };
    Report { body, ok }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read_document(path: &Path) -> Result<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_document(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn schedule_of(doc: &Document, path: &Path) -> Result<MultiplierSchedule> {
    doc.schedule.clone().ok_or_else(|| format!("{}: no `ratios.tail` line", path.display()))
}

fn parse_point(x: &str) -> Result<CirclePoint> {
    let r = parse_rational(x).map_err(|e| format!("point `{x}`: {e}"))?;
    Ok(circle_torsion::circle::frac(&r))
}

fn window_config(w: &WindowArgs, default_horizon: u64) -> Result<WindowConfig> {
    let mut cfg = WindowConfig::new(w.horizon.unwrap_or(default_horizon));
    if let Some(start) = w.window {
        cfg = cfg.with_start(start);
    }
    if let Some(t) = &w.tolerance {
        cfg = cfg.with_tolerance(parse_rational(t).map_err(|e| format!("tolerance: {e}"))?);
    }
    Ok(cfg)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

pub fn run(command: &Command, format: Format) -> Result<Report> {
    match command {
        Command::Gen { spec, count } => gen(spec, *count, format),
        Command::Digits { x, spec, count } => digits(x, spec, *count, format),
        Command::Member { x, spec, horizon } => member(x, spec, *horizon, format),
        Command::Conditions { x, spec, set, window } => conditions(x.as_deref(), spec, set.as_deref(), window, format),
        Command::Witness { spec, window } => witness(spec, window, format),
        Command::Certificate { c, q, case } => cert(*c, *q, case.as_deref(), format),
        Command::Verify { suite, seed, scale } => verify(suite, *seed, *scale, format),
    }
}

fn gen(spec: &Path, count: u64, format: Format) -> Result<Report> {
    let doc = read_document(spec)?;
    let m = schedule_of(&doc, spec)?;
    let terms = m.flat_terms(count).map_err(|e| e.to_string())?;
    let strings: Vec<String> = terms.iter().map(ToString::to_string).collect();
    let text = strings.iter().map(|t| format!("{t}\n")).collect();
    Ok(emit(format, "gen", json!({ "count": count, "terms": strings }), text, true))
}

fn tail_text(d: &DigitExpansion) -> String {
    match d.tail() {
        DigitTail::Zero => "zero".into(),
        DigitTail::Periodic(v) => format!("periodic {}", join(v)),
        DigitTail::Prescribed(p) => format!("prescribed to {}", p.horizon),
        DigitTail::Unknown => "unknown".into(),
    }
}

fn digits(x: &str, spec: &Path, count: u64, format: Format) -> Result<Report> {
    let doc = read_document(spec)?;
    let m = schedule_of(&doc, spec)?;
    let x = parse_point(x)?;
    let d = to_digits(&x, m.base(), count.max(1));
    let h = d.window().len() as u64;
    let supp = d.supp(h).map_err(|e| e.to_string())?.members();
    let supp_q = d.supp_q(h).map_err(|e| e.to_string())?.members();
    let canonical = d.is_canonical(h + count.max(1)).map_err(|e| e.to_string())?;
    let mut text = String::new();
    let _ = writeln!(text, "x: {x}");
    let _ = writeln!(text, "digits: {}", join(d.window()));
    let _ = writeln!(text, "tail: {}", tail_text(&d));
    let _ = writeln!(text, "supp (to {h}): {}", join(&supp));
    let _ = writeln!(text, "supp^q (to {h}): {}", join(&supp_q));
    let _ = writeln!(text, "canonical: {canonical}");
    let json = json!({
        "input": { "x": x.to_string(), "count": count },
        "digits": d.window(),
        "tail": to_json(d.tail()),
        "supp": supp,
        "supp_q": supp_q,
        "canonical": canonical,
    });
    Ok(emit(format, "digits", json, text, true))
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::Member => "member",
        Verdict::NonMember => "non-member",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn member(x: &str, spec: &Path, horizon: u64, format: Format) -> Result<Report> {
    let doc = read_document(spec)?;
    let m = schedule_of(&doc, spec)?;
    let x = parse_point(x)?;
    let v = decide(&x, &m, horizon).map_err(|e| e.to_string())?;
    let mut text = String::new();
    let _ = writeln!(text, "x: {x}");
    let _ = writeln!(text, "verdict: {}", verdict_label(v.status));
    match &v.certificate {
        Some(Certificate::FiniteSupport { index }) => {
            let _ = writeln!(text, "certificate: finite support, a_{index} x is an integer");
        }
        Some(Certificate::PeriodicTailAllZero { cycle_start, cycle_len }) => {
            let _ = writeln!(text, "certificate: zero orbit on a cycle from block {cycle_start}, length {cycle_len}");
        }
        None => {}
    }
    if let Some(w) = &v.witness {
        let _ = writeln!(
            text,
            "witness: ||e_{} x|| = {} (block {}, r = {}), recurring every {} blocks from block {}",
            w.flat_index, w.norm, w.block, w.multiplier, w.cycle_len, w.cycle_start
        );
    }
    let _ = writeln!(text, "blocks scanned: {} of {}", v.blocks_scanned, v.horizon);
    let json = json!({ "input": { "x": x.to_string(), "horizon": horizon }, "verdict": to_json(&v) });
    Ok(emit(format, "member", json, text, true))
}

fn status_label(s: Option<Status>) -> &'static str {
    match s {
        None => "n/a",
        Some(Status::Satisfied) => "satisfied",
        Some(Status::Violated) => "violated",
        Some(Status::Inconclusive) => "inconclusive",
    }
}

fn class_label(c: &Option<QClass>) -> String {
    match c {
        None => "-".into(),
        Some(QClass::QBounded) => "q-bounded".into(),
        Some(QClass::QDivergent) => "q-divergent".into(),
        Some(QClass::Inconclusive { observed: None }) => "unclassified (no members)".into(),
        Some(QClass::Inconclusive { observed: Some((lo, hi)) }) => format!("unclassified (ratios {lo}..{hi})"),
    }
}

fn write_report(text: &mut String, r: &ConditionReport) {
    let _ = writeln!(text, "set: {}", r.set);
    if let Some(note) = &r.note {
        let _ = writeln!(text, "  note: {note}");
    }
    if r.finite_support {
        return;
    }
    let _ = writeln!(
        text,
        "  A: {}, {}; A+1: {}, {}",
        class_label(&r.class_a),
        r.relation_a.map_or_else(|| "-".to_string(), |x| format!("{x:?}").to_lowercase()),
        class_label(&r.class_a1),
        r.relation_a1.map_or_else(|| "-".to_string(), |x| format!("{x:?}").to_lowercase()),
    );
    for e in r.entries.iter().filter(|e| e.applicable) {
        let _ = writeln!(text, "  {:<5} {}", e.condition.label(), status_label(e.status));
        for c in &e.claims {
            let mut line = format!("        {}: {}", c.claim, status_label(Some(c.status)));
            if let (Some(w), Some(b)) = (&c.witness, &c.bound) {
                let _ = write!(line, ", stays >= {} (n = {}", fmt_rational(b), w.n);
                if let Some(r) = w.r {
                    let _ = write!(line, ", r = {r}");
                }
                line.push(')');
            } else if let Some(w) = &c.witness {
                let _ = write!(line, ", fails at n = {}", w.n);
            }
            if let Some(s) = &c.sup {
                let _ = write!(line, "; sup {} at n = {}", fmt_rational(&s.value), s.n);
            }
            let _ = writeln!(text, "{line}");
        }
    }
}

fn source_digits(x: Option<&str>, doc: &Document, m: &MultiplierSchedule, cfg: &WindowConfig) -> Result<DigitExpansion> {
    match x {
        Some(x) => Ok(to_digits(&parse_point(x)?, m.base(), cfg.end + 2)),
        None if doc.has_digits() => doc.digits(m.base()).map_err(|e| e.to_string()),
        None => Err("give a point or put `digits:`/`tail:` lines in the spec file".into()),
    }
}

fn conditions(x: Option<&str>, spec: &Path, set: Option<&str>, w: &WindowArgs, format: Format) -> Result<Report> {
    let doc = read_document(spec)?;
    let m = schedule_of(&doc, spec)?;
    let cfg = window_config(w, 200)?;
    let d = source_digits(x, &doc, &m, &cfg)?;
    let mut text = String::new();
    let _ = writeln!(text, "window: [{}, {}], tolerance {}", cfg.start, cfg.end, fmt_rational(&cfg.tolerance));
    let input = json!({
        "x": x,
        "set": set,
        "window": to_json(&cfg),
    });
    let json = match set {
        Some(s) => {
            let a = parse_set(s, cfg.end + 1).map_err(|e| format!("--set: {e}"))?;
            let r = check_conditions(&d, &m, &a, &cfg).map_err(|e| e.to_string())?;
            write_report(&mut text, &r);
            let _ = writeln!(text, "overall: {}", status_label(Some(r.overall())));
            json!({ "input": input, "report": to_json(&r) })
        }
        None => {
            let family = check_family(&d, &m, &cfg).map_err(|e| e.to_string())?;
            for f in &family {
                match (&f.report, &f.skipped) {
                    (Some(r), _) => {
                        let mut sub = String::new();
                        write_report(&mut sub, r);
                        let _ = write!(text, "[{}] {sub}", f.label);
                    }
                    (None, Some(why)) => {
                        let _ = writeln!(text, "[{}] skipped: {why}", f.label);
                    }
                    (None, None) => {}
                }
            }
            json!({ "input": input, "family": to_json(&family) })
        }
    };
    Ok(emit(format, "conditions", json, text, true))
}

fn sufficiency_label(s: Sufficiency) -> &'static str {
    match s {
        Sufficiency::Confirmed => "confirmed",
        Sufficiency::NotApplicable => "not applicable",
        Sufficiency::Refuted => "refuted",
    }
}

fn witness(spec: &Path, w: &WindowArgs, format: Format) -> Result<Report> {
    let doc = read_document(spec)?;
    let m = schedule_of(&doc, spec)?;
    let horizon = w.horizon.unwrap_or(300);
    let source = doc.digits(m.base()).map_err(|e| e.to_string())?;
    let case = doc.rule.ok_or_else(|| format!("{}: no `rule:` line", spec.display()))?;
    let mut recipe = match case {
        WitnessCase::NonCofinite => WitnessRecipe::non_cofinite(source, &m, horizon),
        WitnessCase::Cofinite => WitnessRecipe::cofinite(source, &m, horizon),
    }
    .map_err(|e| e.to_string())?;
    if !doc.epsilons.is_empty() {
        recipe = recipe.with_epsilons(doc.epsilons.clone());
    }
    let y = fold_witness(&recipe, horizon).map_err(|e| e.to_string())?;
    // the folded digits are known to the horizon, so test on [start, horizon - 1]
    let cfg = window_config(&WindowArgs { horizon: Some(horizon - 1), ..w.clone() }, horizon - 1)?;
    let suff = sufficient_divergent(&y, &m, &cfg).map_err(|e| e.to_string())?;
    let doc_text = render_digits(&y, None).map_err(|e| e.to_string())?;
    let support = y.supp(horizon).map_err(|e| e.to_string())?.members();
    let mut text = String::new();
    let _ = writeln!(text, "# folded witness, {} support points to {horizon}", support.len());
    text.push_str(&doc_text);
    let _ = write!(text, "# sufficient test on [{}, {}]: {}", cfg.start, cfg.end, sufficiency_label(suff.outcome));
    if let Some(reason) = &suff.reason {
        let _ = write!(text, " ({reason})");
    }
    if let Some(s) = &suff.sup {
        let _ = write!(text, ", sup {} at n = {}", fmt_rational(&s.value), s.n);
    }
    text.push('\n');
    let json = json!({
        "input": { "case": to_json(&case), "horizon": horizon },
        "recipe_support": to_json(&recipe)["support"].clone(),
        "support": support,
        "document": doc_text,
        "sufficiency": to_json(&suff),
    });
    Ok(emit(format, "witness", json, text, suff.outcome == Sufficiency::Confirmed))
}

fn cert_line(b: &CertificateBound) -> String {
    format!(
        "{:<4} c = {}, q = {}: t = {}, r = {}, attained {} >= {}\n",
        b.case.label(),
        b.c,
        b.q,
        b.t,
        b.r,
        fmt_rational(&b.attained),
        fmt_rational(&b.bound)
    )
}

fn cert(c: u64, q: u64, case: Option<&str>, format: Format) -> Result<Report> {
    let rows: Vec<CertificateBound> = match case {
        Some(label) => {
            let case = CertificateCase::ALL
                .into_iter()
                .find(|k| k.label() == label)
                .ok_or_else(|| format!("unknown case `{label}` (1a, 1b, 2a, 2b)"))?;
            vec![certificate(case, c, q).map_err(|e| e.to_string())?]
        }
        None => {
            let all: Vec<_> = CertificateCase::ALL.into_iter().filter_map(|k| certificate(k, c, q).ok()).collect();
            if all.is_empty() {
                // reports the out-of-window error
                vec![adversarial_multiplier(c, q).map_err(|e| e.to_string())?]
            } else {
                all
            }
        }
    };
    let text = rows.iter().map(cert_line).collect();
    let ok = rows.iter().all(CertificateBound::holds);
    Ok(emit(format, "certificate", json!({ "input": { "c": c, "q": q }, "certificates": to_json(&rows) }), text, ok))
}

fn check_label(s: CheckStatus) -> &'static str {
    match s {
        CheckStatus::Pass => "pass",
        CheckStatus::Fail => "FAIL",
        CheckStatus::Inconclusive => "inconclusive",
    }
}

fn write_suite(text: &mut String, r: &SuiteResult) {
    let verdict = if r.passed() { "pass" } else { "FAIL" };
    let _ = writeln!(text, "{}: {verdict} (seed {}, scale {})", r.suite, r.seed, r.scale);
    for c in &r.checks {
        let _ = writeln!(text, "  {:<12} {}: {}", check_label(c.status), c.name, c.detail);
    }
    if let Some(repro) = &r.repro {
        let _ = writeln!(text, "  reproduce: {repro}");
    }
}

fn verify(suite: &str, seed: u64, scale: Option<u64>, format: Format) -> Result<Report> {
    let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite] };
    if suite != "all" && !SUITES.contains(&suite) {
        return Err(format!("unknown suite `{suite}`; choose one of: all, {}", SUITES.join(", ")));
    }
    let mut results = Vec::new();
    for name in names {
        let r = run_suite(name, seed, scale).map_err(|e| e.to_string())?;
        eprintln!("{name}: {:.3?}", r.elapsed);
        results.push(r);
    }
    let mut text = String::new();
    for r in &results {
        write_suite(&mut text, r);
    }
    let ok = results.iter().all(SuiteResult::passed);
    let json = json!({ "input": { "suite": suite, "seed": seed, "scale": scale }, "suites": to_json(&results), "passed": ok });
    Ok(emit(format, "verify", json, text, ok))
}
