use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::extract::ExtractionResult;
use super::items::{BenchmarkItem, Level, Subject};
use super::EvalError;

pub const DEFAULT_PASS_THRESHOLD: f64 = 40.0;
/// 1 x 2 Foundation + 2 x 6 Intermediate + 3 x 6 Final.
pub const MAX_WEIGHTED_SCORE: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Rounding {
    #[default]
    HalfUp,
    Truncate,
}

impl FromStr for Rounding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "half-up" | "halfup" | "round" => Ok(Rounding::HalfUp),
            "truncate" | "trunc" => Ok(Rounding::Truncate),
            other => Err(format!(
                "unknown rounding mode {other:?} (half-up|truncate)"
            )),
        }
    }
}

/// An exact ratio `num / den`, shown as a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Fraction { num, den })
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.num as f64 / self.den as f64
    }

    /// Percentage in hundredths of a percent, rounded per `mode`.
    pub fn basis_points(&self, mode: Rounding) -> u128 {
        let scaled = 10_000 * self.num as u128;
        let den = self.den as u128;
        match mode {
            Rounding::HalfUp => (2 * scaled + den) / (2 * den),
            Rounding::Truncate => scaled / den,
        }
    }

    /// Two-decimal percentage string, e.g. `"68.75"`.
    pub fn display(&self, mode: Rounding) -> String {
        let bp = self.basis_points(mode);
        format!("{}.{:02}", bp / 100, bp % 100)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display(Rounding::HalfUp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SubjectScore {
    pub n_items: u64,
    pub n_correct: u64,
    pub n_abstain: u64,
}

impl SubjectScore {
    pub fn accuracy(&self) -> Option<Fraction> {
        Fraction::new(self.n_correct, self.n_items)
    }
}

/// Tallies extractions per subject. Every item needs exactly one extraction
/// and every extraction must refer to a known item.
pub fn score(
    items: &[BenchmarkItem],
    extractions: &[ExtractionResult],
) -> Result<BTreeMap<Subject, SubjectScore>, EvalError> {
    let mut by_id: HashMap<&str, &ExtractionResult> = HashMap::with_capacity(extractions.len());
    for e in extractions {
        if by_id.insert(e.item_id.as_str(), e).is_some() {
            return Err(EvalError::Contract(format!(
                "more than one extraction for item {}",
                e.item_id
            )));
        }
    }
    let mut out: BTreeMap<Subject, SubjectScore> = BTreeMap::new();
    for item in items {
        let e = by_id.remove(item.item_id.as_str()).ok_or_else(|| {
            EvalError::Contract(format!("no extraction for item {}", item.item_id))
        })?;
        let s = out.entry(item.subject).or_default();
        s.n_items += 1;
        if e.is_correct() {
            s.n_correct += 1;
        }
        if e.correct.is_none() {
            s.n_abstain += 1;
        }
    }
    if let Some(id) = by_id.keys().next() {
        return Err(EvalError::Contract(format!(
            "extraction for unknown item {id}"
        )));
    }
    Ok(out)
}

/// Pooled accuracy per level: total correct over total items. Levels with no
/// items are absent.
pub fn level_accuracy(per_subject: &BTreeMap<Subject, SubjectScore>) -> BTreeMap<Level, Fraction> {
    let mut pooled: BTreeMap<Level, (u64, u64)> = BTreeMap::new();
    for (subject, s) in per_subject {
        let e = pooled.entry(subject.level()).or_default();
        e.0 += s.n_correct;
        e.1 += s.n_items;
    }
    pooled
        .into_iter()
        .filter_map(|(l, (c, n))| Fraction::new(c, n).map(|f| (l, f)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCounts {
    pub foundation: u32,
    pub intermediate: u32,
    pub final_: u32,
}

impl PassCounts {
    pub fn new(foundation: u32, intermediate: u32, final_: u32) -> Result<Self, EvalError> {
        let p = PassCounts {
            foundation,
            intermediate,
            final_,
        };
        for level in Level::ALL {
            if p.get(level) > level.subject_count() {
                return Err(EvalError::Contract(format!(
                    "{} passes {} exceed {} subjects",
                    level,
                    p.get(level),
                    level.subject_count()
                )));
            }
        }
        Ok(p)
    }

    pub fn get(&self, level: Level) -> u32 {
        match level {
            Level::Foundation => self.foundation,
            Level::Intermediate => self.intermediate,
            Level::Final => self.final_,
        }
    }
}

impl fmt::Display for PassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/2, {}/6, {}/6",
            self.foundation, self.intermediate, self.final_
        )
    }
}

impl FromStr for PassCounts {
    type Err = String;

    /// `"2,4,4"` or `"2/2,4/6,4/6"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [f, i, n] = parts.as_slice() else {
            return Err(format!("expected three comma-separated counts, got {s:?}"));
        };
        let num = |p: &str| {
            let head = p.split('/').next().unwrap_or(p).trim();
            head.parse::<u32>()
                .map_err(|e| format!("bad pass count {p:?}: {e}"))
        };
        PassCounts::new(num(f)?, num(i)?, num(n)?).map_err(|e| e.to_string())
    }
}

/// Counts subjects with accuracy `>= threshold`, grouped by level. All 14
/// subjects must be present.
pub fn pass_counts(
    accuracies: &BTreeMap<Subject, f64>,
    threshold: f64,
) -> Result<PassCounts, EvalError> {
    let mut counts = [0u32; 3];
    for subject in Subject::ALL {
        let acc = accuracies
            .get(&subject)
            .ok_or_else(|| EvalError::Contract(format!("no accuracy for subject {subject}")))?;
        if *acc >= threshold {
            counts[subject.level() as usize] += 1;
        }
    }
    PassCounts::new(counts[0], counts[1], counts[2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SrcScore {
    pub weighted_score: u32,
    pub max_score: u32,
}

impl SrcScore {
    pub fn fraction(&self) -> Fraction {
        Fraction {
            num: self.weighted_score as u64,
            den: self.max_score as u64,
        }
    }

    pub fn percent(&self) -> f64 {
        self.fraction().percent()
    }
}

/// Weighted pass score (Foundation 1, Intermediate 2, Final 3) out of 32.
pub fn src(passes: &PassCounts) -> SrcScore {
    let weighted_score = Level::ALL.iter().map(|&l| l.weight() * passes.get(l)).sum();
    SrcScore {
        weighted_score,
        max_score: MAX_WEIGHTED_SCORE,
    }
}

/// Subjects strictly below `threshold`, in subject order.
pub fn bottlenecks(accuracies: &BTreeMap<Subject, f64>, threshold: f64) -> Vec<Subject> {
    accuracies
        .iter()
        .filter(|(_, &a)| a < threshold)
        .map(|(&s, _)| s)
        .collect()
}
