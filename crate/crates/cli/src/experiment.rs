//! The `run` command: LPOCV over every requested setting and the result
//! tables.
//!
//! Files written to `output_dir`, each starting with the `# key = value`
//! config echo:
//!
//! * `metrics.csv`: one row per setting.
//! * `scores.csv`: held-out scores of every round. Row numbers are 0-based
//!   data rows of the input file.
//! * `sweep.csv`: `M_res` against AUC and accuracy.
//! * `timings.csv`: mean wall time per round in milliseconds. This is the
//!   only file that differs between identical runs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use finder::config::{Gamma, RunConfig};
use finder::evaluation::{self, CvReport, MaPolicy, PipelineConfig};
use finder::io::{self, fmt_sig};
use finder::subspace::Variant;
use finder::svm::KernelKind;
use finder::{impute, Dataset, FinderError, Result};

const DIGITS: usize = 6;
const GRID_COST: [f64; 3] = [0.1, 1.0, 10.0];
const GRID_GAMMA: [Gamma; 3] = [Gamma::AutoTimes(0.5), Gamma::Auto, Gamma::AutoTimes(2.0)];

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub variant: Variant,
    pub regime: evaluation::Regime,
    pub kernel: KernelKind,
    pub m_a: MaPolicy,
    /// Mean `M_A` over rounds; differs from `m_a` only under energy
    /// truncation.
    pub m_a_used: f64,
    pub m_res: usize,
    pub cost: f64,
    pub gamma: Gamma,
    pub auc: f64,
    pub accuracy: f64,
    pub pair_auc: f64,
    pub rounds: usize,
    pub mean_round_ms: f64,
}

impl MetricsRow {
    fn from_report(report: &CvReport) -> Self {
        let c = &report.config_echo;
        let m_a_used = report.per_round.iter().map(|r| r.m_a as f64).sum::<f64>()
            / report.per_round.len() as f64;
        Self {
            variant: c.variant,
            regime: c.regime,
            kernel: c.kernel,
            m_a: c.m_a,
            m_a_used,
            m_res: c.m_res,
            cost: c.cost,
            gamma: c.gamma,
            auc: report.auc,
            accuracy: report.accuracy,
            pair_auc: report.pair_auc(),
            rounds: report.per_round.len(),
            mean_round_ms: report.mean_round_ms(),
        }
    }

    pub fn summary_line(&self) -> String {
        format!(
            "{} {} {} M_A={} M_res={} cost={} gamma={} AUC={} accuracy={} mean_round_ms={}",
            self.variant,
            self.regime,
            self.kernel,
            self.m_a,
            self.m_res,
            fmt_sig(self.cost, DIGITS),
            self.gamma,
            fmt_sig(self.auc, DIGITS),
            fmt_sig(self.accuracy, DIGITS),
            fmt_sig(self.mean_round_ms, DIGITS),
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: Vec<MetricsRow>,
    pub reports: Vec<CvReport>,
    pub files: Vec<PathBuf>,
    /// Cells filled by imputation before the run.
    pub imputed_cells: usize,
}

impl RunSummary {
    pub fn best_auc(&self) -> Option<&MetricsRow> {
        self.rows.iter().max_by(|a, b| a.auc.total_cmp(&b.auc))
    }
}

/// Checks `M_res <= F - M_A` before any round runs.
pub fn check_dimensions(cfg: &RunConfig, f: usize) -> Result<()> {
    if cfg.variant == Variant::Raw {
        return Ok(());
    }
    if let MaPolicy::Fixed(m_a) = cfg.m_a {
        if m_a >= f {
            return Err(FinderError::InvalidParameter(format!(
                "M_A = {m_a} must be below F = {f}"
            )));
        }
        if let Some(&m) = cfg.m_res_list.iter().find(|&&m| m > f - m_a) {
            return Err(FinderError::InvalidParameter(format!(
                "M_res = {m} exceeds F - M_A = {} (F = {f}, M_A = {m_a})",
                f - m_a
            )));
        }
    }
    Ok(())
}

/// `(cost, gamma)` pairs to evaluate.
pub fn settings(cfg: &RunConfig) -> Vec<(f64, Gamma)> {
    if !cfg.grid {
        return vec![(cfg.cost, cfg.gamma)];
    }
    match cfg.kernel {
        KernelKind::Linear => GRID_COST.iter().map(|&c| (c, cfg.gamma)).collect(),
        KernelKind::Rbf => GRID_COST
            .iter()
            .flat_map(|&c| GRID_GAMMA.iter().map(move |&g| (c, g)))
            .collect(),
    }
}

/// Loads, imputes and labels the input as configured. Also returns the
/// input-file row of each dataset row.
pub fn load_input(cfg: &RunConfig) -> Result<(Dataset, Vec<usize>, usize)> {
    if !cfg.input_path.is_file() {
        return Err(FinderError::Format(format!(
            "input file {} not found",
            cfg.input_path.display()
        )));
    }
    let table = io::load_table(&cfg.input_path, &cfg.label_column)?;
    let mut data = table.to_dataset(&cfg.positive_label, cfg.negative_label.as_deref())?;
    let kept: Vec<usize> = (0..table.n_rows())
        .filter(|&i| {
            let l = &table.labels[i];
            *l == cfg.positive_label || cfg.negative_label.as_ref().is_none_or(|n| l == n)
        })
        .collect();
    let missing = data.missing_mask.iter().filter(|&&m| m).count();
    if missing > 0 {
        data = impute::knn_impute(&data, cfg.impute_k)?;
    }
    Ok((data, kept, missing))
}

/// Runs every `(M_res, cost, gamma)` setting and writes the result tables.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let (data, input_rows, imputed_cells) = load_input(cfg)?;
    check_dimensions(cfg, data.n_features())?;

    let mut reports = Vec::new();
    for &m_res in &cfg.m_res_list {
        for (cost, gamma) in settings(cfg) {
            let pipeline = PipelineConfig {
                cost,
                gamma,
                ..cfg.pipeline(m_res)
            };
            reports.push(evaluation::run_lpocv(&data, &pipeline)?);
        }
    }
    let rows: Vec<MetricsRow> = reports.iter().map(MetricsRow::from_report).collect();

    std::fs::create_dir_all(&cfg.output_dir)?;
    let echo = config_echo(cfg);
    let mut files = Vec::new();
    let mut emit = |name: &str, header: &str, body: String| -> Result<()> {
        let path = cfg.output_dir.join(name);
        write_file(&path, &format!("{echo}{header}\n{body}"))?;
        files.push(path);
        Ok(())
    };

    let mut metrics = String::new();
    let mut sweep = String::new();
    let mut timings = String::new();
    for r in &rows {
        let key = format!("{},{},{}", r.m_res, fmt_sig(r.cost, DIGITS), r.gamma);
        let _ = writeln!(
            metrics,
            "{},{},{},{},{},{key},{},{},{},{}",
            r.variant,
            r.regime,
            r.kernel,
            r.m_a,
            fmt_sig(r.m_a_used, DIGITS),
            fmt_sig(r.auc, DIGITS),
            fmt_sig(r.accuracy, DIGITS),
            fmt_sig(r.pair_auc, DIGITS),
            r.rounds,
        );
        let _ = writeln!(
            sweep,
            "{key},{},{}",
            fmt_sig(r.auc, DIGITS),
            fmt_sig(r.accuracy, DIGITS)
        );
        let _ = writeln!(
            timings,
            "{key},{},{}",
            r.rounds,
            fmt_sig(r.mean_round_ms, DIGITS)
        );
    }
    let mut scores = String::new();
    for report in &reports {
        let c = &report.config_echo;
        let (a_rows, b_rows) = evaluation::class_rows(&data, c)?;
        for round in &report.per_round {
            let _ = writeln!(
                scores,
                "{},{},{},{},{},{},{},{}",
                c.m_res,
                fmt_sig(c.cost, DIGITS),
                c.gamma,
                input_rows[a_rows[round.test_a]],
                input_rows[b_rows[round.test_b]],
                fmt_sig(round.score_a, DIGITS),
                fmt_sig(round.score_b, DIGITS),
                round.m_a,
            );
        }
    }
    emit(
        "metrics.csv",
        "variant,regime,kernel,m_a,m_a_used,m_res,cost,gamma,auc,accuracy,pair_auc,rounds",
        metrics,
    )?;
    emit(
        "scores.csv",
        "m_res,cost,gamma,row_a,row_b,score_a,score_b,m_a",
        scores,
    )?;
    emit("sweep.csv", "m_res,cost,gamma,auc,accuracy", sweep)?;
    emit(
        "timings.csv",
        "m_res,cost,gamma,rounds,mean_round_ms",
        timings,
    )?;

    Ok(RunSummary {
        rows,
        reports,
        files,
        imputed_cells,
    })
}

/// `# key = value` lines that [`RunConfig::from_echo`] reads back.
pub fn config_echo(cfg: &RunConfig) -> String {
    cfg.to_kv()
        .into_iter()
        .map(|(k, v)| format!("# {k} = {v}\n"))
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| FinderError::Format(format!("cannot write {}: {e}", path.display())))
}
