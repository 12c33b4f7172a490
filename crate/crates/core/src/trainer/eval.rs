use std::fmt::Write as _;

use rayon::prelude::*;

use super::rollout::{derived_rng, run_episode, Mode, Task, TaskSetting, PURPOSE_EVAL};
use crate::compnet::{AssembleError, Model};
use crate::envs::Outcome;
use crate::Scalar;

/// Outcome counts of one formula set.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitReport {
    pub name: String,
    pub formulas: usize,
    pub attempts_per_formula: usize,
    pub successes: usize,
    pub violations: usize,
    pub timeouts: usize,
    pub mean_length: f64,
}

impl SplitReport {
    pub fn attempts(&self) -> usize {
        self.formulas * self.attempts_per_formula
    }

    /// Perfect executions over attempts; `NaN` for an empty split.
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.attempts() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub model: String,
    pub splits: Vec<SplitReport>,
}

impl EvalReport {
    pub fn split(&self, name: &str) -> Option<&SplitReport> {
        self.splits.iter().find(|s| s.name == name)
    }

    /// One row per model, one success-rate column per split.
    pub fn table_tsv(reports: &[EvalReport]) -> String {
        let mut names: Vec<&str> = Vec::new();
        for r in reports {
            for s in &r.splits {
                if !names.contains(&s.name.as_str()) {
                    names.push(&s.name);
                }
            }
        }
        let mut out = format!("model\t{}\n", names.join("\t"));
        for r in reports {
            out.push_str(&r.model);
            for n in &names {
                match r.split(n) {
                    Some(s) => {
                        let _ = write!(out, "\t{:.4}", s.success_rate());
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn detail_tsv(&self) -> String {
        let mut out = String::from(
            "model\tsplit\tformulas\tattempts_per_formula\tsuccess_rate\tmean_length\tsuccess\tviolation\tfailed-timeout\n",
        );
        for s in &self.splits {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.4}\t{:.3}\t{}\t{}\t{}",
                self.model,
                s.name,
                s.formulas,
                s.attempts_per_formula,
                s.success_rate(),
                s.mean_length,
                s.successes,
                s.violations,
                s.timeouts
            );
        }
        out
    }
}

/// Deterministic evaluation: formula `i` is run `maps` times (Craft maps drawn from
/// stream `i * maps + j` of the evaluation seed; Symbol runs are identical, so once).
pub fn evaluate<S: Scalar>(
    model: &Model<S>,
    name: &str,
    tasks: &[Task],
    setting: &TaskSetting,
    maps: usize,
    seed: u64,
) -> Result<SplitReport, AssembleError> {
    let per = if setting.domain == crate::Domain::Craft { maps.max(1) } else { 1 };
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|i| (0..per).map(move |j| (i, j))).collect();
    let logs = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut rng = derived_rng(seed, PURPOSE_EVAL, (i * per + j) as u64);
            let env = setting.env(&mut rng);
            run_episode(model, &tasks[i], env, setting.spec, Mode::Eval, &mut rng).map(|t| t.log)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let count = |o: Outcome| logs.iter().filter(|l| l.outcome == o).count();
    let total_len: usize = logs.iter().map(|l| l.len()).sum();
    Ok(SplitReport {
        name: name.to_string(),
        formulas: tasks.len(),
        attempts_per_formula: per,
        successes: count(Outcome::Success),
        violations: count(Outcome::Violation),
        timeouts: count(Outcome::Timeout),
        mean_length: if logs.is_empty() { f64::NAN } else { total_len as f64 / logs.len() as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compnet::{Architecture, ModelConfig};
    use crate::ltl::parse;

    #[test]
    fn evaluation_is_pure_and_counts_add_up() {
        let setting = TaskSetting::symbol(3, 8);
        let alpha = setting.network_alphabet();
        let tasks: Vec<Task> = ["F a", "G b", "a U c", "X X b"]
            .iter()
            .map(|t| Task::new(&setting, &parse(t, &alpha).unwrap(), t).unwrap())
            .collect();
        let model = Model::<f64>::new(ModelConfig::symbol(Architecture::Full, 3, 3));
        let a = evaluate(&model, "probe", &tasks, &setting, 1, 0).unwrap();
        let b = evaluate(&model, "probe", &tasks, &setting, 1, 0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.successes + a.violations + a.timeouts, 4);
        let report = EvalReport { model: "full".into(), splits: vec![a] };
        assert!(EvalReport::table_tsv(&[report.clone()]).starts_with("model\tprobe\nfull\t"));
        assert_eq!(report.detail_tsv().lines().count(), 2);
    }
}
