use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::extract::ExtractionResult;
use super::items::{BenchmarkItem, Level, Subject};
use super::scoring::{self, Fraction, PassCounts, Rounding, SrcScore, SubjectScore};
use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_subject: BTreeMap<Subject, SubjectScore>,
    pub per_level: BTreeMap<Level, Fraction>,
    /// Absent unless all 14 subjects were evaluated.
    pub pass_counts: Option<PassCounts>,
    pub src: Option<SrcScore>,
    pub bottlenecks: Vec<Subject>,
    pub threshold: f64,
    pub rounding: Rounding,
}

pub fn build_report(
    items: &[BenchmarkItem],
    extractions: &[ExtractionResult],
    threshold: f64,
    rounding: Rounding,
) -> Result<EvalReport, EvalError> {
    let per_subject = scoring::score(items, extractions)?;
    let per_level = scoring::level_accuracy(&per_subject);
    let accuracies: BTreeMap<Subject, f64> = per_subject
        .iter()
        .filter_map(|(&s, score)| score.accuracy().map(|a| (s, a.percent())))
        .collect();
    let pass_counts = scoring::pass_counts(&accuracies, threshold).ok();
    Ok(EvalReport {
        src: pass_counts.as_ref().map(scoring::src),
        pass_counts,
        bottlenecks: scoring::bottlenecks(&accuracies, threshold),
        per_level,
        per_subject,
        threshold,
        rounding,
    })
}

impl EvalReport {
    fn pct(&self, f: &Fraction) -> String {
        f.display(self.rounding)
    }

    /// Sectioned CSV: `section,key,n_items,n_correct,value`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut row = |fields: [&str; 5]| w.write_record(fields).expect("write to Vec");
        row(["section", "key", "n_items", "n_correct", "value"]);
        for (subject, s) in &self.per_subject {
            let acc = s.accuracy().map(|a| self.pct(&a)).unwrap_or_default();
            row([
                "subject",
                subject.code(),
                &s.n_items.to_string(),
                &s.n_correct.to_string(),
                &acc,
            ]);
        }
        for (level, f) in &self.per_level {
            row([
                "level",
                level.name(),
                &f.den.to_string(),
                &f.num.to_string(),
                &self.pct(f),
            ]);
        }
        if let (Some(p), Some(src)) = (&self.pass_counts, &self.src) {
            for level in Level::ALL {
                let v = format!("{}/{}", p.get(level), level.subject_count());
                row(["passes", level.name(), "", "", &v]);
            }
            let ws = format!("{}/{}", src.weighted_score, src.max_score);
            row(["weighted_score", "", "", "", &ws]);
            row(["src", "", "", "", &self.pct(&src.fraction())]);
        }
        for subject in &self.bottlenecks {
            let acc = self.per_subject[subject]
                .accuracy()
                .map(|a| self.pct(&a))
                .unwrap_or_default();
            row(["bottleneck", subject.code(), "", "", &acc]);
        }
        let bytes = w.into_inner().expect("flush to Vec");
        String::from_utf8(bytes).expect("csv of UTF-8 fields")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<6} {:<26} {:>6} {:>8} {:>8} {:>9}",
            "code", "subject", "items", "correct", "abstain", "accuracy"
        );
        for (subject, s) in &self.per_subject {
            let acc = s.accuracy().map(|a| self.pct(&a)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:<6} {:<26} {:>6} {:>8} {:>8} {:>9}",
                subject.code(),
                subject.title(),
                s.n_items,
                s.n_correct,
                s.n_abstain,
                acc
            );
        }
        out.push('\n');
        for (level, f) in &self.per_level {
            let _ = writeln!(
                out,
                "{:<13} {:>3}/{:<4} {:>8}",
                level.name(),
                f.num,
                f.den,
                self.pct(f)
            );
        }
        out.push('\n');
        match (&self.pass_counts, &self.src) {
            (Some(p), Some(src)) => {
                let _ = writeln!(out, "passes (>= {}%): {}", self.threshold, p);
                let _ = writeln!(
                    out,
                    "weighted score:  {}/{}",
                    src.weighted_score, src.max_score
                );
                let _ = writeln!(out, "SRC:             {}", self.pct(&src.fraction()));
            }
            _ => {
                let _ = writeln!(out, "passes/SRC:      n/a (not all 14 subjects evaluated)");
            }
        }
        let codes: Vec<&str> = self.bottlenecks.iter().map(|s| s.code()).collect();
        let listed = if codes.is_empty() {
            "none".to_owned()
        } else {
            codes.join(", ")
        };
        let _ = writeln!(out, "bottlenecks (< {}%): {}", self.threshold, listed);
        out
    }
}
