use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{Dataset, Entry, GenConfig, Split};
use crate::automaton::{compile, CompileError};
use crate::ltl::{parse, Alphabet, Formula, FormulaStats, ParseError};
use crate::meta::{Meta, MetaError};

/// File names of the four standard splits, in generation order.
pub const SPLIT_FILES: [(&str, &str); 4] = [
    ("train", "train.ltl"),
    ("test_1_10", "test_1_10.ltl"),
    ("test_10_15", "test_10_15.ltl"),
    ("test_15_20", "test_15_20.ltl"),
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {source}")]
    Parse { path: String, line: usize, source: ParseError },
    #[error("{path}:{line}: {source}")]
    Compile { path: String, line: usize, source: CompileError },
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.display().to_string(), source }
}

/// Formulas of a `.ltl` file; blank and `#` lines are skipped.
pub fn read_formula_file(path: &Path, alphabet: &Alphabet) -> Result<Vec<Formula>, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f = parse(line, alphabet).map_err(|source| DatasetError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(f);
    }
    Ok(out)
}

pub fn write_formula_file(path: &Path, header: &str, texts: &[&str]) -> Result<(), DatasetError> {
    let mut out = String::new();
    for h in header.lines() {
        let _ = writeln!(out, "# {h}");
    }
    for t in texts {
        let _ = writeln!(out, "{t}");
    }
    std::fs::write(path, out).map_err(io_err(path))
}

impl Dataset {
    /// Writes the split files, `stats.tsv` and `config.meta` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), DatasetError> {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        for split in &self.splits {
            let spec = self.config.splits.iter().find(|s| s.name == split.name);
            let header = match spec {
                Some(s) => format!("{}: {} formulas, {}-{} elements", s.name, split.entries.len(), s.min_elements, s.max_elements),
                None => split.name.clone(),
            };
            let texts: Vec<&str> = split.entries.iter().map(|e| e.text.as_str()).collect();
            write_formula_file(&dir.join(format!("{}.ltl", split.name)), &header, &texts)?;
        }
        let stats = dir.join("stats.tsv");
        std::fs::write(&stats, stats_table(&dataset_stats(self))).map_err(io_err(&stats))?;
        let meta = dir.join("config.meta");
        self.config.to_meta().write(&meta).map_err(io_err(&meta))
    }

    /// Reads a directory written by [`Dataset::write`]. Missing split files are empty splits.
    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        let config = GenConfig::from_meta(&Meta::read(&dir.join("config.meta"))?)?;
        let alphabet = config.alphabet();
        let space = config.space();
        let mut splits = Vec::new();
        for spec in &config.splits {
            let path = dir.join(format!("{}.ltl", spec.name));
            if !path.exists() {
                splits.push(Split { name: spec.name.clone(), entries: vec![] });
                continue;
            }
            let mut entries = Vec::new();
            for (i, f) in read_formula_file(&path, &alphabet)?.into_iter().enumerate() {
                let dfa = compile(&f, space).map_err(|source| DatasetError::Compile {
                    path: path.display().to_string(),
                    line: i + 1,
                    source,
                })?;
                entries.push(Entry::new(f, dfa, &alphabet));
            }
            splits.push(Split { name: spec.name.clone(), entries });
        }
        Ok(Self { config, alphabet, splits })
    }
}

/// Sample mean and standard deviation of one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
}

impl ColumnStats {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub name: String,
    pub count: usize,
    pub symbols: ColumnStats,
    pub nodes: ColumnStats,
    pub depth: ColumnStats,
    pub states: ColumnStats,
}

impl SplitStats {
    pub fn of(name: &str, stats: &[FormulaStats]) -> Self {
        let col = |g: fn(&FormulaStats) -> usize| ColumnStats::of(&stats.iter().map(|s| g(s) as f64).collect::<Vec<_>>());
        Self {
            name: name.to_string(),
            count: stats.len(),
            symbols: col(|s| s.symbol_count),
            nodes: col(|s| s.node_count),
            depth: col(|s| s.depth),
            states: col(|s| s.automaton_states),
        }
    }
}

pub fn dataset_stats(ds: &Dataset) -> Vec<SplitStats> {
    ds.splits
        .iter()
        .map(|s| SplitStats::of(&s.name, &s.entries.iter().map(|e| e.stats).collect::<Vec<_>>()))
        .collect()
}

/// Tab-separated table, one row per split.
pub fn stats_table(rows: &[SplitStats]) -> String {
    let mut out = String::from(
        "split\tformulas\tsymbols_mean\tsymbols_std\tnodes_mean\tnodes_std\tdepth_mean\tdepth_std\tstates_mean\tstates_std\n",
    );
    for r in rows {
        let _ = write!(out, "{}\t{}", r.name, r.count);
        for c in [r.symbols, r.nodes, r.depth, r.states] {
            let _ = write!(out, "\t{:.2}\t{:.2}", c.mean, c.std);
        }
        out.push('\n');
    }
    out
}
