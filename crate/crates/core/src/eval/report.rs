//! Per-mode comparison of finished runs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::girl::RunLog;

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub mode: String,
    pub runs: usize,
    pub mean_f1: f64,
    /// Sample standard deviation over seeds; 0 for a single run.
    pub std_f1: f64,
    pub mean_pseudo_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub preset: String,
    pub labeled_fraction: f64,
    pub unlabeled_fraction: f64,
    pub rows: Vec<ComparisonRow>,
    /// `mode,seed,segment,episode,...` rows for plotting.
    pub series_csv: String,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

/// Groups runs by mode (first-appearance order) and summarizes the final
/// test F1 of each group as mean ± sample standard deviation.
pub fn assemble_report(runs: &[RunLog]) -> Result<ComparisonTable> {
    let first = runs
        .first()
        .ok_or_else(|| Error::IncompatibleRuns("no runs to report".into()))?;
    let m0 = &first.meta;
    for r in runs {
        let m = &r.meta;
        if m.preset != m0.preset
            || m.labeled_fraction != m0.labeled_fraction
            || m.unlabeled_fraction != m0.unlabeled_fraction
        {
            return Err(Error::IncompatibleRuns(format!(
                "run `{}` seed {} uses preset {} with split {}/{}, expected {} with {}/{}",
                m.mode,
                m.seed,
                m.preset,
                m.labeled_fraction,
                m.unlabeled_fraction,
                m0.preset,
                m0.labeled_fraction,
                m0.unlabeled_fraction
            )));
        }
        if r.final_test.is_none() {
            return Err(Error::IncompatibleRuns(format!(
                "run `{}` seed {} has no test score",
                m.mode, m.seed
            )));
        }
    }

    let mut modes: Vec<&str> = Vec::new();
    for r in runs {
        if !modes.contains(&r.meta.mode.as_str()) {
            modes.push(&r.meta.mode);
        }
    }
    let rows = modes
        .into_iter()
        .map(|mode| {
            let group: Vec<&RunLog> = runs.iter().filter(|r| r.meta.mode == mode).collect();
            let f1: Vec<f64> = group
                .iter()
                .map(|r| r.final_test.expect("checked above").f1)
                .collect();
            let (mean_f1, std_f1) = mean_std(&f1);
            let pseudo: Vec<f64> = group
                .iter()
                .filter_map(|r| r.final_pseudo.map(|p| p.f1))
                .collect();
            ComparisonRow {
                mode: mode.to_string(),
                runs: group.len(),
                mean_f1,
                std_f1,
                mean_pseudo_f1: (!pseudo.is_empty()).then(|| mean_std(&pseudo).0),
            }
        })
        .collect();

    let mut series = String::from(
        "mode,seed,segment,episode,mean_reward,acceptance_rate,labeled_size,rl_loss,test_f1,pseudo_f1\n",
    );
    for r in runs {
        for e in &r.episodes {
            let _ = writeln!(
                series,
                "{},{},{},{},{:.6},{:.6},{},{:.6},{},{}",
                r.meta.mode,
                r.meta.seed,
                e.segment,
                e.episode,
                e.mean_reward,
                e.acceptance_rate,
                e.labeled_size,
                e.rl_loss,
                opt(e.test_f1),
                opt(e.pseudo_f1)
            );
        }
    }

    Ok(ComparisonTable {
        preset: m0.preset.clone(),
        labeled_fraction: m0.labeled_fraction,
        unlabeled_fraction: m0.unlabeled_fraction,
        rows,
        series_csv: series,
    })
}

impl ComparisonTable {
    /// Delimited table with a header row; F1 values are in percent.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("mode,preset,labeled,unlabeled,runs,f1_mean,f1_std,f1,pseudo_f1_mean\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:.2},{:.2},{:.2}±{:.2},{}",
                r.mode,
                self.preset,
                self.labeled_fraction,
                self.unlabeled_fraction,
                r.runs,
                100.0 * r.mean_f1,
                100.0 * r.std_f1,
                100.0 * r.mean_f1,
                100.0 * r.std_f1,
                r.mean_pseudo_f1
                    .map(|p| format!("{:.2}", 100.0 * p))
                    .unwrap_or_default()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::F1Report;
    use crate::girl::RunMeta;

    fn run(mode: &str, seed: u64, f1_counts: (usize, usize, usize)) -> RunLog {
        RunLog {
            meta: RunMeta {
                mode: mode.into(),
                preset: "semeval-like".into(),
                labeled_fraction: 0.05,
                unlabeled_fraction: 0.5,
                seed,
            },
            final_test: Some(F1Report::from_counts(f1_counts.0, f1_counts.1, f1_counts.2)),
            ..Default::default()
        }
    }

    #[test]
    fn single_run_has_zero_std() {
        let t = assemble_report(&[run("gradlre", 1, (3, 4, 5))]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].std_f1, 0.0);
    }

    #[test]
    fn identical_runs() {
        let runs: Vec<_> = (0..5).map(|s| run("self-train", s, (2, 4, 4))).collect();
        let t = assemble_report(&runs).unwrap();
        assert_eq!(t.rows[0].mean_f1, 0.5);
        assert_eq!(t.rows[0].std_f1, 0.0);
        assert_eq!(t.rows[0].runs, 5);
    }

    #[test]
    fn two_pass_oracle() {
        let runs = vec![
            run("a", 1, (1, 2, 2)),
            run("a", 2, (2, 2, 2)),
            run("a", 3, (1, 4, 2)),
            run("b", 1, (0, 1, 1)),
        ];
        let t = assemble_report(&runs).unwrap();
        let f: Vec<f64> = runs[..3].iter().map(|r| r.final_test.unwrap().f1).collect();
        // independent: naive sum then squared deviations
        let mut s = 0.0;
        for v in &f {
            s += v;
        }
        let m = s / 3.0;
        let mut ss = 0.0;
        for v in &f {
            ss += (v - m).powi(2);
        }
        assert!((t.rows[0].mean_f1 - m).abs() < 1e-15);
        assert!((t.rows[0].std_f1 - (ss / 2.0).sqrt()).abs() < 1e-15);
        assert_eq!(t.rows[1].mode, "b");
        let csv = t.to_csv();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn mismatched_runs_are_refused() {
        let mut other = run("b", 1, (1, 1, 1));
        other.meta.preset = "tacred-like".into();
        assert!(matches!(
            assemble_report(&[run("a", 1, (1, 1, 1)), other]),
            Err(Error::IncompatibleRuns(_))
        ));
        assert!(assemble_report(&[]).is_err());
        let mut unscored = run("a", 2, (1, 1, 1));
        unscored.final_test = None;
        assert!(assemble_report(&[unscored]).is_err());
    }
}
