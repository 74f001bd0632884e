//! Text formats for schedules, digit lists and witness rules.
//!
//! One `key: value` per line; `#` starts a comment. Keys:
//!
//! ```text
//! ratios.prefix: 2, 3, 4            # optional, default empty
//! ratios.tail: constant 2           # or: periodic 2,3 | affine 1,1
//! multipliers: explicit             # or: full | base | gap-third
//! 1: 1                              # explicit blocks, `k: r1, r2, ...`
//! 2: 1, 2
//! otherwise: full                   # optional fallback past the last block
//!
//! digits: 1, 0, 1                   # c_1, c_2, ...
//! tail: zero                        # or: periodic 0,1 | unknown | prescribed H
//! layer: squares => constant 1      # prescribed layers, first match wins
//!
//! rule: cofinite                    # or: non-cofinite
//! epsilon.9: 1/3                    # optional per-index epsilon
//! ```
//!
//! Layer sets: `all`, `squares`, `powers b`, `residue m r`,
//! `explicit i, j, ...`. Layer digits: `constant c`, `below-top j`, `half`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;

use crate::circle::{fmt_rational, parse_rational};
use crate::constructions::WitnessCase;
use crate::digits::{DigitExpansion, DigitRule, DigitTail, Prescribed, PrescribedLayer};
use crate::sequences::{IndexKind, IndexSet, MultiplierRule, MultiplierSchedule, RatioStream, Tail};
use crate::{Error, Result};

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_list(line: usize, s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|_| err(line, format!("`{t}` is not a non-negative integer"))))
        .collect()
}

fn parse_u64(line: usize, s: &str) -> Result<u64> {
    s.trim().parse().map_err(|_| err(line, format!("`{}` is not a non-negative integer", s.trim())))
}

/// Everything a document may hold. Digits are interpreted against a base
/// with [`Document::digits`].
#[derive(Debug, Clone, Default)]
pub struct Document {
    pub schedule: Option<MultiplierSchedule>,
    digits: Option<(usize, Vec<u64>)>,
    tail: Option<(usize, TailSpec)>,
    layers: Vec<(usize, PrescribedLayer)>,
    pub rule: Option<WitnessCase>,
    pub epsilons: BTreeMap<u64, BigRational>,
}

#[derive(Debug, Clone)]
enum TailSpec {
    Zero,
    Periodic(Vec<u64>),
    Unknown,
    Prescribed(u64),
}

impl Document {
    pub fn has_digits(&self) -> bool {
        self.digits.is_some() || self.tail.is_some()
    }

    /// The digit expansion described by the `digits`/`tail`/`layer` keys.
    pub fn digits(&self, base: &RatioStream) -> Result<DigitExpansion> {
        let (dline, window) = self.digits.clone().unwrap_or((0, Vec::new()));
        let (tline, tail) = match &self.tail {
            Some((l, TailSpec::Zero)) => (*l, DigitTail::Zero),
            Some((l, TailSpec::Periodic(v))) => (*l, DigitTail::Periodic(v.clone())),
            Some((l, TailSpec::Unknown)) => (*l, DigitTail::Unknown),
            Some((l, TailSpec::Prescribed(h))) => {
                let layers = self
                    .layers
                    .iter()
                    .map(|(_, layer)| {
                        let mut layer = layer.clone();
                        layer.support = layer.support.with_horizon(*h);
                        layer
                    })
                    .collect();
                (*l, DigitTail::Prescribed(Prescribed { layers, horizon: *h }))
            }
            None => (dline, DigitTail::Zero),
        };
        if !self.layers.is_empty() && !matches!(tail, DigitTail::Prescribed(_)) {
            return Err(err(self.layers[0].0, "`layer` requires `tail: prescribed H`"));
        }
        DigitExpansion::new(base.clone(), window, tail).map_err(|e| match e {
            Error::DigitOutOfRange { index, .. } if index as usize <= self.digits.as_ref().map_or(0, |d| d.1.len()) => {
                err(dline, e.to_string())
            }
            other => err(tline, other.to_string()),
        })
    }
}

fn parse_tail(line: usize, v: &str) -> Result<Tail> {
    let (kind, rest) = v.split_once(char::is_whitespace).unwrap_or((v, ""));
    match kind {
        "constant" => Ok(Tail::Constant(parse_u64(line, rest)?)),
        "periodic" => Ok(Tail::Periodic(parse_list(line, rest)?)),
        "affine" => {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(err(line, "affine tail needs `a,b`"));
            }
            let slope = parse_u64(line, parts[0])?;
            let offset = parts[1].parse::<i64>().map_err(|_| err(line, format!("`{}` is not an integer", parts[1])))?;
            Ok(Tail::Affine { slope, offset })
        }
        _ => Err(err(line, format!("unknown ratio tail `{kind}`"))),
    }
}

fn parse_rule_name(line: usize, v: &str) -> Result<MultiplierRule> {
    match v {
        "full" => Ok(MultiplierRule::Full),
        "base" => Ok(MultiplierRule::BaseOnly),
        "gap-third" => Ok(MultiplierRule::GapThird),
        _ => Err(err(line, format!("unknown multiplier rule `{v}`"))),
    }
}

fn parse_layer(line: usize, v: &str) -> Result<PrescribedLayer> {
    let (set, rule) = v.split_once("=>").ok_or_else(|| err(line, "layer needs `SET => DIGIT`"))?;
    let support = set_at(line, set, 0)?;
    let rule = rule.trim();
    let (kind, rest) = rule.split_once(char::is_whitespace).unwrap_or((rule, ""));
    let rule = match kind {
        "constant" => DigitRule::Constant(parse_u64(line, rest)?),
        "below-top" => DigitRule::BelowTop(parse_u64(line, rest)?),
        "half" => DigitRule::Half,
        _ => return Err(err(line, format!("unknown layer digit `{kind}`"))),
    };
    Ok(PrescribedLayer { support, rule })
}

/// Parses an index set in layer syntax (`all`, `squares`, `powers b`,
/// `residue m r`, `explicit i, j, ...`) known up to `horizon`.
pub fn parse_set(text: &str, horizon: u64) -> Result<IndexSet> {
    set_at(1, text, horizon)
}

fn set_at(line: usize, set: &str, horizon: u64) -> Result<IndexSet> {
    let set = set.trim();
    let (kind, rest) = set.split_once(char::is_whitespace).unwrap_or((set, ""));
    Ok(match kind {
        "all" => IndexSet::all(horizon),
        "squares" => IndexSet::predicate("squares", |n| n.isqrt() * n.isqrt() == n, horizon),
        "powers" => {
            let b = parse_u64(line, rest)?;
            if b < 2 {
                return Err(err(line, "powers need a base of at least 2"));
            }
            IndexSet::predicate(format!("powers of {b}"), move |n| {
                let mut p = 1u64;
                while p < n {
                    p = p.saturating_mul(b);
                }
                p == n
            }, horizon)
        }
        "residue" => {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(err(line, "residue needs `m r`"));
            }
            IndexSet::residue(parse_u64(line, parts[0])?, parse_u64(line, parts[1])?, horizon)
        }
        "explicit" => IndexSet::explicit(parse_list(line, rest)?, horizon).map_err(|e| err(line, e.to_string()))?,
        _ => return Err(err(line, format!("unknown set `{kind}`"))),
    })
}

/// Parses a document. The schedule is present iff `ratios.tail` is given.
pub fn parse_document(text: &str) -> Result<Document> {
    let mut doc = Document::default();
    let mut prefix: Option<(usize, Vec<u64>)> = None;
    let mut tail: Option<(usize, Tail)> = None;
    let mut rule: Option<(usize, MultiplierRule)> = None;
    let mut explicit: BTreeMap<u64, (usize, Vec<u64>)> = BTreeMap::new();
    let mut otherwise: Option<(usize, MultiplierRule)> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once(':').ok_or_else(|| err(line, "expected `key: value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if let Ok(k) = key.parse::<u64>() {
            if !matches!(rule, Some((_, MultiplierRule::Explicit { .. }))) {
                return Err(err(line, "block lines need `multipliers: explicit` first"));
            }
            if k == 0 {
                return Err(err(line, "blocks start at 1"));
            }
            if explicit.insert(k, (line, parse_list(line, value)?)).is_some() {
                return Err(err(line, format!("block {k} given twice")));
            }
            continue;
        }
        let once = |seen: bool| if seen { Err(err(line, format!("`{key}` given twice"))) } else { Ok(()) };
        match key {
            "ratios.prefix" => {
                once(prefix.is_some())?;
                prefix = Some((line, parse_list(line, value)?));
            }
            "ratios.tail" => {
                once(tail.is_some())?;
                tail = Some((line, parse_tail(line, value)?));
            }
            "multipliers" => {
                once(rule.is_some())?;
                let r = if value == "explicit" {
                    MultiplierRule::Explicit { blocks: BTreeMap::new(), otherwise: None }
                } else {
                    parse_rule_name(line, value)?
                };
                rule = Some((line, r));
            }
            "otherwise" => {
                once(otherwise.is_some())?;
                otherwise = Some((line, parse_rule_name(line, value)?));
            }
            "digits" => {
                once(doc.digits.is_some())?;
                doc.digits = Some((line, parse_list(line, value)?));
            }
            "tail" => {
                once(doc.tail.is_some())?;
                let (kind, rest) = value.split_once(char::is_whitespace).unwrap_or((value, ""));
                let spec = match kind {
                    "zero" => TailSpec::Zero,
                    "unknown" => TailSpec::Unknown,
                    "periodic" => {
                        let v = parse_list(line, rest)?;
                        if v.is_empty() {
                            return Err(err(line, "empty period"));
                        }
                        TailSpec::Periodic(v)
                    }
                    "prescribed" => TailSpec::Prescribed(parse_u64(line, rest)?),
                    _ => return Err(err(line, format!("unknown digit tail `{kind}`"))),
                };
                doc.tail = Some((line, spec));
            }
            "layer" => doc.layers.push((line, parse_layer(line, value)?)),
            "rule" => {
                once(doc.rule.is_some())?;
                doc.rule = Some(match value {
                    "non-cofinite" => WitnessCase::NonCofinite,
                    "cofinite" => WitnessCase::Cofinite,
                    _ => return Err(err(line, format!("unknown witness rule `{value}`"))),
                });
            }
            _ if key.starts_with("epsilon.") => {
                let n = parse_u64(line, &key["epsilon.".len()..])?;
                let eps = parse_rational(value).map_err(|_| err(line, format!("`{value}` is not a rational")))?;
                doc.epsilons.insert(n, eps);
            }
            _ => return Err(err(line, format!("unknown key `{key}`"))),
        }
    }

    if let Some((otherwise_line, _)) = &otherwise {
        if !matches!(rule, Some((_, MultiplierRule::Explicit { .. }))) {
            return Err(err(*otherwise_line, "`otherwise` requires `multipliers: explicit`"));
        }
    }
    match (tail, rule) {
        (None, None) => {
            if let Some((l, _)) = prefix {
                return Err(err(l, "`ratios.prefix` without `ratios.tail`"));
            }
        }
        (None, Some((l, _))) => return Err(err(l, "`multipliers` without `ratios.tail`")),
        (Some((l, _)), None) => return Err(err(l, "`ratios.tail` without `multipliers`")),
        (Some((tline, tail)), Some((rline, rule))) => {
            let (pline, prefix) = prefix.unwrap_or((tline, Vec::new()));
            if let Some(i) = prefix.iter().position(|&q| q < 2) {
                return Err(err(pline, format!("ratio q_{} = {} is below 2", i + 1, prefix[i])));
            }
            let stream = RatioStream::new(prefix, tail).map_err(|e| err(tline, e.to_string()))?;
            let rule = match rule {
                MultiplierRule::Explicit { .. } => {
                    let mut blocks = BTreeMap::new();
                    for (k, (line, rs)) in explicit {
                        let q = stream.ratio(k)?;
                        if rs.first() != Some(&1) {
                            return Err(err(line, format!("block {k} must start with multiplier 1")));
                        }
                        if let Some(&r) = rs.iter().find(|&&r| r == 0 || r >= q) {
                            return Err(err(line, format!("multiplier {r} outside [1, {}] in block {k}", q - 1)));
                        }
                        if rs.windows(2).any(|w| w[0] >= w[1]) {
                            return Err(err(line, format!("block {k} multipliers must increase")));
                        }
                        blocks.insert(k, rs);
                    }
                    MultiplierRule::Explicit { blocks, otherwise: otherwise.map(|(_, r)| Box::new(r)) }
                }
                other => other,
            };
            doc.schedule = Some(MultiplierSchedule::new(stream, rule).map_err(|e| err(rline, e.to_string()))?);
        }
    }
    Ok(doc)
}

/// Parses a schedule document.
pub fn parse_schedule(text: &str) -> Result<MultiplierSchedule> {
    parse_document(text)?.schedule.ok_or_else(|| err(0, "no `ratios.tail` / `multipliers`"))
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(", ")
}

fn rule_name(rule: &MultiplierRule) -> &'static str {
    match rule {
        MultiplierRule::Full => "full",
        MultiplierRule::BaseOnly => "base",
        MultiplierRule::GapThird => "gap-third",
        MultiplierRule::Explicit { .. } => "explicit",
    }
}

/// Renders a schedule in the document format.
pub fn render_schedule(m: &MultiplierSchedule) -> String {
    let s = m.base();
    let mut out = String::new();
    if !s.prefix().is_empty() {
        let _ = writeln!(out, "ratios.prefix: {}", join(s.prefix()));
    }
    let _ = match s.tail() {
        Tail::Constant(c) => writeln!(out, "ratios.tail: constant {c}"),
        Tail::Periodic(v) => writeln!(out, "ratios.tail: periodic {}", join(v)),
        Tail::Affine { slope, offset } => writeln!(out, "ratios.tail: affine {slope},{offset}"),
    };
    let _ = writeln!(out, "multipliers: {}", rule_name(m.rule()));
    if let MultiplierRule::Explicit { blocks, otherwise } = m.rule() {
        for (k, rs) in blocks {
            let _ = writeln!(out, "{k}: {}", join(rs));
        }
        if let Some(o) = otherwise {
            let _ = writeln!(out, "otherwise: {}", rule_name(o));
        }
    }
    out
}

fn render_set(set: &IndexSet) -> Option<String> {
    match set.kind() {
        IndexKind::Explicit(v) => Some(format!("explicit {}", join(v))),
        IndexKind::BlockSparse(p) => match p.label() {
            "all" => Some("all".into()),
            "squares" => Some("squares".into()),
            l => {
                if let Some(b) = l.strip_prefix("powers of ") {
                    return Some(format!("powers {b}"));
                }
                let rest = l.strip_prefix("n = ")?;
                let (r, m) = rest.split_once(" mod ")?;
                Some(format!("residue {m} {r}"))
            }
        },
        IndexKind::Shifted(..) => None,
    }
}

/// Renders digits (and a witness rule) in the document format. Prescribed
/// layers whose support has no textual form, or whose digits are a table,
/// are written as an explicit window instead.
pub fn render_digits(d: &DigitExpansion, rule: Option<(WitnessCase, &BTreeMap<u64, BigRational>)>) -> Result<String> {
    let mut out = String::new();
    let prescribed_text = match d.tail() {
        DigitTail::Prescribed(p) => {
            let mut lines = Vec::new();
            for layer in &p.layers {
                let (Some(set), false) = (render_set(&layer.support), matches!(layer.rule, DigitRule::Table(_))) else {
                    lines.clear();
                    break;
                };
                let digit = match &layer.rule {
                    DigitRule::Constant(c) => format!("constant {c}"),
                    DigitRule::BelowTop(j) => format!("below-top {j}"),
                    DigitRule::Half => "half".into(),
                    DigitRule::Table(_) => unreachable!(),
                };
                lines.push(format!("layer: {set} => {digit}"));
            }
            (lines.len() == p.layers.len()).then_some((p.horizon, lines))
        }
        _ => None,
    };
    match (d.tail(), prescribed_text) {
        (DigitTail::Prescribed(_), Some((h, lines))) => {
            let _ = writeln!(out, "digits: {}", join(d.window()));
            let _ = writeln!(out, "tail: prescribed {h}");
            for l in lines {
                let _ = writeln!(out, "{l}");
            }
        }
        (DigitTail::Prescribed(p), None) => {
            let h = p.horizon.max(d.window().len() as u64);
            let _ = writeln!(out, "digits: {}", join(&d.digits_to(h)?));
            let _ = writeln!(out, "tail: unknown");
        }
        (tail, _) => {
            let _ = writeln!(out, "digits: {}", join(d.window()));
            let _ = match tail {
                DigitTail::Zero => writeln!(out, "tail: zero"),
                DigitTail::Periodic(v) => writeln!(out, "tail: periodic {}", join(v)),
                _ => writeln!(out, "tail: unknown"),
            };
        }
    }
    if let Some((case, eps)) = rule {
        let _ = writeln!(out, "rule: {}", match case {
            WitnessCase::NonCofinite => "non-cofinite",
            WitnessCase::Cofinite => "cofinite",
        });
        for (n, e) in eps {
            let _ = writeln!(out, "epsilon.{n}: {}", fmt_rational(e));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_presets() {
        let m = parse_schedule("ratios.tail: affine 1,1\nmultipliers: full\n").unwrap();
        let terms: Vec<String> = m.flat_terms(7).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(terms, ["1", "2", "4", "6", "12", "18", "24"]);
        let m = parse_schedule("# powers\nratios.tail: constant 2\nmultipliers: base\n").unwrap();
        assert_eq!(m.flat_terms(4).unwrap(), vec![1u32.into(), 2u32.into(), 4u32.into(), 8u32.into()]);
        let m = parse_schedule("ratios.tail: constant 6\nmultipliers: gap-third").unwrap();
        let terms: Vec<String> = m.flat_terms(5).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(terms, ["1", "3", "4", "5", "6"]);
    }

    #[test]
    fn parses_explicit() {
        let text = "ratios.prefix: 3, 5\nratios.tail: constant 2\nmultipliers: explicit\n1: 1, 2\n2: 1, 4\notherwise: base\n";
        let m = parse_schedule(text).unwrap();
        let terms: Vec<String> = m.flat_terms(6).unwrap().iter().map(|t| t.to_string()).collect();
        assert_eq!(terms, ["1", "2", "3", "12", "15", "30"]);
        assert_eq!(parse_schedule(&render_schedule(&m)).unwrap(), m);
    }

    #[test]
    fn line_numbered_errors() {
        let bad = "ratios.prefix: 3, 1\nratios.tail: constant 2\nmultipliers: full\n";
        assert!(matches!(parse_schedule(bad), Err(Error::Parse { line: 1, .. })));
        let bad = "ratios.tail: constant 1\nmultipliers: full\n";
        assert!(matches!(parse_schedule(bad), Err(Error::Parse { line: 1, .. })));
        let bad = "ratios.tail: constant 3\nmultipliers: explicit\n1: 1\n2: 1, 3\n";
        assert!(matches!(parse_schedule(bad), Err(Error::Parse { line: 4, .. })));
        let bad = "ratios.tail: constant 3\nmultipliers: explicit\n1: 2\n";
        assert!(matches!(parse_schedule(bad), Err(Error::Parse { line: 3, .. })));
        let bad = "ratios.tail: constant 3\nmultipliers: sometimes\n";
        assert!(matches!(parse_schedule(bad), Err(Error::Parse { line: 2, .. })));
        let bad = "ratios.tail: constant 3\n\nmultipliers full\n";
        assert!(matches!(parse_schedule(bad), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn parses_digits() {
        let s = RatioStream::constant(2).unwrap();
        let doc = parse_document("digits: 1, 0, 1\ntail: zero\n").unwrap();
        let d = doc.digits(&s).unwrap();
        assert_eq!(crate::digits::from_digits(&d).unwrap().to_string(), "5/8");
        let doc = parse_document("digits: 0\ntail: periodic 0, 1\n").unwrap();
        assert_eq!(doc.digits(&s).unwrap().digits_to(5).unwrap(), vec![0, 0, 1, 0, 1]);
        let doc = parse_document("digits: 2\n").unwrap();
        assert!(matches!(doc.digits(&s), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn prescribed_roundtrip() {
        let s = RatioStream::factorial();
        let text = "digits:\ntail: prescribed 50\nlayer: squares => below-top 1\nlayer: residue 7 3 => constant 2\nrule: cofinite\nepsilon.9: 1/3\n";
        let doc = parse_document(text).unwrap();
        let d = doc.digits(&s).unwrap();
        assert_eq!(d.digit(16).unwrap(), 16);
        assert_eq!(d.digit(10).unwrap(), 2);
        assert_eq!(d.digit(11).unwrap(), 0);
        assert_eq!(doc.rule, Some(WitnessCase::Cofinite));
        let again = render_digits(&d, Some((WitnessCase::Cofinite, &doc.epsilons))).unwrap();
        let d2 = parse_document(&again).unwrap().digits(&s).unwrap();
        assert_eq!(d.digits_to(50).unwrap(), d2.digits_to(50).unwrap());
        assert!(again.contains("epsilon.9: 1/3"));
    }
}
