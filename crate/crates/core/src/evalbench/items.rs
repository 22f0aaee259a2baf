use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    Foundation,
    Intermediate,
    Final,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Foundation, Level::Intermediate, Level::Final];

    /// Number of subjects examined at this level.
    pub fn subject_count(self) -> u32 {
        match self {
            Level::Foundation => 2,
            Level::Intermediate | Level::Final => 6,
        }
    }

    /// SRC weight of one pass at this level.
    pub fn weight(self) -> u32 {
        match self {
            Level::Foundation => 1,
            Level::Intermediate => 2,
            Level::Final => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Level::Foundation => "Foundation",
            Level::Intermediate => "Intermediate",
            Level::Final => "Final",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown level {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subject {
    F1,
    F2,
    I1,
    I2,
    I3,
    I4,
    I5,
    I6,
    FN1,
    FN2,
    FN3,
    FN4,
    FN5,
    FN6,
}

impl Subject {
    pub const ALL: [Subject; 14] = [
        Subject::F1,
        Subject::F2,
        Subject::I1,
        Subject::I2,
        Subject::I3,
        Subject::I4,
        Subject::I5,
        Subject::I6,
        Subject::FN1,
        Subject::FN2,
        Subject::FN3,
        Subject::FN4,
        Subject::FN5,
        Subject::FN6,
    ];

    pub fn level(self) -> Level {
        use Subject::*;
        match self {
            F1 | F2 => Level::Foundation,
            I1 | I2 | I3 | I4 | I5 | I6 => Level::Intermediate,
            FN1 | FN2 | FN3 | FN4 | FN5 | FN6 => Level::Final,
        }
    }

    pub fn code(self) -> &'static str {
        use Subject::*;
        match self {
            F1 => "F1",
            F2 => "F2",
            I1 => "I1",
            I2 => "I2",
            I3 => "I3",
            I4 => "I4",
            I5 => "I5",
            I6 => "I6",
            FN1 => "FN1",
            FN2 => "FN2",
            FN3 => "FN3",
            FN4 => "FN4",
            FN5 => "FN5",
            FN6 => "FN6",
        }
    }

    pub fn title(self) -> &'static str {
        use Subject::*;
        match self {
            F1 => "Business Math & Stats",
            F2 => "Business Econ & BCK",
            I1 => "Adv. Accounting",
            I2 => "Corp. Laws",
            I3 => "Taxation",
            I4 => "Cost & Mgmt. Acct.",
            I5 => "Auditing & Ethics",
            I6 => "Fin. & Strat. Mgmt.",
            FN1 => "Fin. Reporting",
            FN2 => "Adv. Fin. Mgmt.",
            FN3 => "Adv. Auditing",
            FN4 => "Direct Tax Laws",
            FN5 => "Indirect Tax Laws",
            FN6 => "Integrated Business Sol.",
        }
    }
}

impl fmt::Display for Subject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Subject {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Subject::ALL
            .into_iter()
            .find(|x| x.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown subject code {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Letter {
    A,
    B,
    C,
    D,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::B, Letter::C, Letter::D];

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'A' => Some(Letter::A),
            'B' => Some(Letter::B),
            'C' => Some(Letter::C),
            'D' => Some(Letter::D),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        (b'A' + self as u8) as char
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Letter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut chars = t.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Letter::from_char(c.to_ascii_uppercase()),
            _ => None,
        }
        .ok_or_else(|| format!("answer must be one of A-D, got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchmarkItem {
    pub item_id: String,
    pub level: Level,
    pub subject: Subject,
    pub question: String,
    pub options: [String; 4],
    pub gold: Letter,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemRecord {
    item_id: String,
    level: String,
    subject: String,
    question: String,
    option_a: String,
    option_b: String,
    option_c: String,
    option_d: String,
    gold: String,
}

impl TryFrom<ItemRecord> for BenchmarkItem {
    type Error = String;

    fn try_from(r: ItemRecord) -> Result<Self, String> {
        let level: Level = r.level.parse()?;
        let subject: Subject = r.subject.parse()?;
        if subject.level() != level {
            return Err(format!(
                "subject {subject} belongs to {}, not {level}",
                subject.level()
            ));
        }
        if r.item_id.trim().is_empty() {
            return Err("empty item_id".into());
        }
        Ok(BenchmarkItem {
            item_id: r.item_id,
            level,
            subject,
            question: r.question,
            options: [r.option_a, r.option_b, r.option_c, r.option_d],
            gold: r.gold.parse()?,
        })
    }
}

/// Parses the line-delimited benchmark format. Blank lines are skipped;
/// errors carry the 1-based line number.
pub fn parse_benchmark(input: &str, source_name: &str) -> Result<Vec<BenchmarkItem>, EvalError> {
    let malformed = |line: usize, message: String| EvalError::Malformed {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: ItemRecord =
            serde_json::from_str(line).map_err(|e| malformed(idx + 1, e.to_string()))?;
        let item = BenchmarkItem::try_from(record).map_err(|m| malformed(idx + 1, m))?;
        if !seen.insert(item.item_id.clone()) {
            return Err(malformed(
                idx + 1,
                format!("duplicate item_id {}", item.item_id),
            ));
        }
        items.push(item);
    }
    if items.is_empty() {
        return Err(EvalError::EmptyBenchmark(source_name.to_owned()));
    }
    Ok(items)
}

fn read_text(path: &Path) -> Result<String, EvalError> {
    fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_benchmark(path: &Path) -> Result<Vec<BenchmarkItem>, EvalError> {
    parse_benchmark(&read_text(path)?, &path.display().to_string())
}

const QUESTION_COLS: &[&str] = &["question", "questions", "stem"];
const OPTION_COLS: [&[&str]; 4] = [
    &["a", "option_a", "option a", "optiona"],
    &["b", "option_b", "option b", "optionb"],
    &["c", "option_c", "option c", "optionc"],
    &["d", "option_d", "option d", "optiond"],
];
const ANSWER_COLS: &[&str] = &[
    "answer",
    "gold",
    "correct",
    "correct answer",
    "correct_answer",
];

/// Loads a directory of per-subject CSV files named by subject code
/// (`F1.csv`, `I3.csv`, ...). Columns are matched by header name,
/// case-insensitively; item ids are `<code>-<row>`.
pub fn load_caben_dir(dir: &Path) -> Result<Vec<BenchmarkItem>, EvalError> {
    let io_err = |source| EvalError::Io {
        path: dir.display().to_string(),
        source,
    };
    let mut files: Vec<(Subject, std::path::PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let subject = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<Subject>().ok());
        if let (true, Some(subject)) = (is_csv, subject) {
            files.push((subject, path));
        }
    }
    files.sort();

    let mut items = Vec::new();
    for (subject, path) in files {
        let name = path.display().to_string();
        items.extend(parse_caben_csv(&read_text(&path)?, subject, &name)?);
    }
    if items.is_empty() {
        return Err(EvalError::EmptyBenchmark(dir.display().to_string()));
    }
    Ok(items)
}

/// Parses one per-subject CSV; see [`load_caben_dir`].
pub fn parse_caben_csv(
    input: &str,
    subject: Subject,
    source_name: &str,
) -> Result<Vec<BenchmarkItem>, EvalError> {
    let malformed = |line: usize, message: String| EvalError::Malformed {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(input.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| malformed(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase())
        .collect();
    let find = |names: &[&str]| headers.iter().position(|h| names.contains(&h.as_str()));
    let question = find(QUESTION_COLS).ok_or_else(|| malformed(1, "no question column".into()))?;
    let answer = find(ANSWER_COLS).ok_or_else(|| malformed(1, "no answer column".into()))?;
    let mut option_cols = [0; 4];
    for (slot, names) in option_cols.iter_mut().zip(OPTION_COLS) {
        *slot = find(names).ok_or_else(|| malformed(1, format!("no {} column", names[0])))?;
    }

    let mut items = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = record
            .as_ref()
            .ok()
            .and_then(|r| r.position())
            .map_or(row + 2, |p| p.line() as usize);
        let record = record.map_err(|e| malformed(line, e.to_string()))?;
        let field = |i: usize| {
            record
                .get(i)
                .map(str::to_owned)
                .ok_or_else(|| malformed(line, format!("missing column {}", i + 1)))
        };
        let gold: Letter = field(answer)?.parse().map_err(|m| malformed(line, m))?;
        items.push(BenchmarkItem {
            item_id: format!("{}-{}", subject.code(), row + 1),
            level: subject.level(),
            subject,
            question: field(question)?,
            options: [
                field(option_cols[0])?,
                field(option_cols[1])?,
                field(option_cols[2])?,
                field(option_cols[3])?,
            ],
            gold,
        });
    }
    Ok(items)
}

/// One archived model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub item_id: String,
    pub response: String,
}

/// Parses `{"item_id", "response"}` lines into a map. Duplicate ids are an
/// error.
pub fn parse_responses(
    input: &str,
    source_name: &str,
) -> Result<BTreeMap<String, String>, EvalError> {
    let mut out = BTreeMap::new();
    for (idx, line) in input.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| EvalError::Malformed {
            source_name: source_name.to_owned(),
            line: idx + 1,
            message,
        };
        let r: ResponseRecord = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        if out.insert(r.item_id.clone(), r.response).is_some() {
            return Err(malformed(format!("duplicate item_id {}", r.item_id)));
        }
    }
    Ok(out)
}

pub fn load_responses(path: &Path) -> Result<BTreeMap<String, String>, EvalError> {
    parse_responses(&read_text(path)?, &path.display().to_string())
}

pub fn write_responses<W: Write>(records: &[ResponseRecord], mut out: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
