//! Leave-pair-out cross-validation.
//!
//! Every (class-A, class-B) pair is held out once, giving `N_A * N_B`
//! rounds. In each round the class-A training rows are split into a
//! covariance-estimation subset and an SVM-training subset according to the
//! regime:
//!
//! * **Balanced**: the first `N_B - 1` remaining class-A rows train the SVM,
//!   the other `N_A - N_B` estimate the class-A expansion.
//! * **Unbalanced**: all `N_A - 1` remaining class-A rows do both.
//!
//! All remaining class-B rows estimate the class-B covariance and train the
//! SVM in both regimes. Features are z-scored with training-row statistics
//! only.

use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::Gamma;
use crate::dataset::{ClassLabel, Dataset};
use crate::error::{FinderError, Result};
use crate::kle::{self, DEFAULT_RANK_TOL};
use crate::subspace::{self, AcaMode, FeatureTransform, Variant};
use crate::svm::{self, Kernel, KernelKind, SvmModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Balanced,
    Unbalanced,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Balanced => "balanced",
            Regime::Unbalanced => "unbalanced",
        })
    }
}

impl FromStr for Regime {
    type Err = FinderError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "balanced" => Ok(Regime::Balanced),
            "unbalanced" => Ok(Regime::Unbalanced),
            _ => Err(FinderError::InvalidParameter(format!(
                "unknown regime '{s}' (expected balanced or unbalanced)"
            ))),
        }
    }
}

/// How the class-A truncation `M_A` is chosen in each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaPolicy {
    Fixed(usize),
    /// Smallest `M_A` capturing this fraction of the class-A variance.
    Energy(f64),
}

impl fmt::Display for MaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaPolicy::Fixed(m) => write!(f, "{m}"),
            MaPolicy::Energy(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for MaPolicy {
    type Err = FinderError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Ok(m) = s.parse::<usize>() {
            return Ok(MaPolicy::Fixed(m));
        }
        match s.parse::<f64>() {
            Ok(x) if x > 0.0 && x <= 1.0 => Ok(MaPolicy::Energy(x)),
            _ => Err(FinderError::InvalidParameter(format!(
                "m_a must be a count or an energy fraction in (0, 1], got '{s}'"
            ))),
        }
    }
}

/// Settings for one LPOCV run.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub variant: Variant,
    pub m_a: MaPolicy,
    pub m_res: usize,
    pub kernel: KernelKind,
    pub cost: f64,
    pub gamma: Gamma,
    pub regime: Regime,
    pub seed: u64,
    pub shuffle: bool,
    pub tol: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            variant: Variant::AcaS,
            m_a: MaPolicy::Fixed(5),
            m_res: 5,
            kernel: KernelKind::Rbf,
            cost: svm::DEFAULT_COST,
            gamma: Gamma::Auto,
            regime: Regime::Unbalanced,
            seed: 0,
            shuffle: false,
            tol: svm::DEFAULT_TOL,
        }
    }
}

/// Row assignment for one round. Indices are positions within each class's
/// row list, not dataset rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassSplit {
    pub a_cov: Vec<usize>,
    pub a_svm: Vec<usize>,
    pub b_train: Vec<usize>,
    pub test_a: usize,
    pub test_b: usize,
    pub regime: Regime,
}

/// All `n_a * n_b` splits, test pairs in row-major `(test_a, test_b)` order.
pub fn make_splits(n_a: usize, n_b: usize, regime: Regime) -> Result<Vec<ClassSplit>> {
    if n_a < 2 {
        return Err(FinderError::InsufficientSamples {
            what: "leave-pair-out class A",
            needed: 2,
            found: n_a,
        });
    }
    if n_b < 2 {
        return Err(FinderError::InsufficientSamples {
            what: "leave-pair-out class B",
            needed: 2,
            found: n_b,
        });
    }
    if regime == Regime::Balanced && n_a < n_b + 1 {
        return Err(FinderError::InsufficientSamples {
            what: "balanced regime (N_A >= N_B + 1) class A",
            needed: n_b + 1,
            found: n_a,
        });
    }
    let mut out = Vec::with_capacity(n_a * n_b);
    for test_a in 0..n_a {
        let a_train: Vec<usize> = (0..n_a).filter(|&i| i != test_a).collect();
        let (a_svm, a_cov) = match regime {
            Regime::Balanced => {
                let (svm_part, cov_part) = a_train.split_at(n_b - 1);
                (svm_part.to_vec(), cov_part.to_vec())
            }
            Regime::Unbalanced => (a_train.clone(), a_train),
        };
        for test_b in 0..n_b {
            out.push(ClassSplit {
                a_cov: a_cov.clone(),
                a_svm: a_svm.clone(),
                b_train: (0..n_b).filter(|&i| i != test_b).collect(),
                test_a,
                test_b,
                regime,
            });
        }
    }
    Ok(out)
}

fn check_scores(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.is_empty() {
        return Err(FinderError::Empty(what));
    }
    if xs.iter().any(|x| x.is_nan()) {
        return Err(FinderError::InvalidParameter(format!("{what} contain NaN")));
    }
    Ok(())
}

/// Mann-Whitney AUC with class B as the positive class: the fraction of
/// `(a, b)` pairs with `b > a`, ties counting one half.
pub fn auc(scores_a: &[f64], scores_b: &[f64]) -> Result<f64> {
    check_scores(scores_a, "class A scores")?;
    check_scores(scores_b, "class B scores")?;
    let mut sorted = scores_a.to_vec();
    sorted.sort_by(f64::total_cmp);
    // twice the pair count, so ties stay integral
    let mut doubled: u128 = 0;
    for &b in scores_b {
        let below = sorted.partition_point(|&a| a < b);
        let not_above = sorted.partition_point(|&a| a <= b);
        doubled += 2 * below as u128 + (not_above - below) as u128;
    }
    Ok(doubled as f64 / (2 * scores_a.len() * scores_b.len()) as f64)
}

/// Fraction of correct decisions when `score > threshold` predicts class B.
pub fn accuracy(scores_a: &[f64], scores_b: &[f64], threshold: f64) -> Result<f64> {
    check_scores(scores_a, "class A scores")?;
    check_scores(scores_b, "class B scores")?;
    let correct = scores_a.iter().filter(|&&s| s <= threshold).count()
        + scores_b.iter().filter(|&&s| s > threshold).count();
    Ok(correct as f64 / (scores_a.len() + scores_b.len()) as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundResult {
    pub test_a: usize,
    pub test_b: usize,
    pub score_a: f64,
    pub score_b: f64,
    /// Transform construction plus SVM training.
    pub elapsed: Duration,
    /// `M_A` used in this round.
    pub m_a: usize,
    /// Hash of everything the round learned from its training rows.
    pub model_digest: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub per_round: Vec<RoundResult>,
    pub auc: f64,
    pub accuracy: f64,
    pub mean_round_time: Duration,
    pub config_echo: PipelineConfig,
}

impl CvReport {
    /// Aggregates rounds. The result does not depend on their order.
    pub fn from_rounds(per_round: Vec<RoundResult>, config: PipelineConfig) -> Result<Self> {
        let a: Vec<f64> = per_round.iter().map(|r| r.score_a).collect();
        let b: Vec<f64> = per_round.iter().map(|r| r.score_b).collect();
        let auc = auc(&a, &b)?;
        let accuracy = accuracy(&a, &b, 0.0)?;
        let total: Duration = per_round.iter().map(|r| r.elapsed).sum();
        let mean_round_time = total / per_round.len() as u32;
        Ok(Self {
            per_round,
            auc,
            accuracy,
            mean_round_time,
            config_echo: config,
        })
    }

    /// Fraction of rounds whose held-out B sample outscored its paired A
    /// sample, ties one half.
    pub fn pair_auc(&self) -> f64 {
        let doubled: usize = self
            .per_round
            .iter()
            .map(|r| match r.score_b.partial_cmp(&r.score_a) {
                Some(std::cmp::Ordering::Greater) => 2,
                Some(std::cmp::Ordering::Equal) => 1,
                _ => 0,
            })
            .sum();
        doubled as f64 / (2 * self.per_round.len()) as f64
    }

    pub fn mean_round_ms(&self) -> f64 {
        self.mean_round_time.as_secs_f64() * 1e3
    }
}

/// Dataset rows of each class, optionally shuffled with the config seed.
pub fn class_rows(data: &Dataset, config: &PipelineConfig) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut a = data.class_rows(ClassLabel::A)?;
    let mut b = data.class_rows(ClassLabel::B)?;
    if config.shuffle {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
    }
    Ok((a, b))
}

/// Per-feature z-score fitted on training rows; zero-variance features keep
/// a unit divisor.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Standardizer {
    pub fn fit(rows: &DMatrix<f64>) -> Result<Self> {
        let n = rows.nrows();
        let mean = kle::row_mean(rows)?;
        let scale = DVector::from_iterator(
            rows.ncols(),
            rows.column_iter().zip(mean.iter()).map(|(c, mu)| {
                let ss: f64 = c.iter().map(|x| (x - mu) * (x - mu)).sum();
                let sd = if n > 1 {
                    (ss / (n - 1) as f64).sqrt()
                } else {
                    0.0
                };
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            }),
        );
        Ok(Self { mean, scale })
    }

    pub fn apply(&self, rows: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = rows.clone();
        for mut row in out.row_iter_mut() {
            for j in 0..row.len() {
                row[j] = (row[j] - self.mean[j]) / self.scale[j];
            }
        }
        out
    }
}

/// Builds the residual feature map from standardized training rows.
///
/// Returns the transform and the `M_A` it used.
pub fn build_transform(
    a_cov: &DMatrix<f64>,
    b_train: &DMatrix<f64>,
    config: &PipelineConfig,
) -> Result<(FeatureTransform, usize)> {
    let mean_a = kle::row_mean(a_cov)?;
    if config.variant == Variant::Raw {
        return Ok((FeatureTransform::identity(mean_a), 0));
    }
    let eig_a = kle::estimate(a_cov, &mean_a, DEFAULT_RANK_TOL)?;
    let m_a = match config.m_a {
        MaPolicy::Fixed(m) => m,
        MaPolicy::Energy(x) => kle::energy_truncation(&eig_a, x)?,
    };
    let transform = match config.variant {
        Variant::Direct => subspace::direct_residual(&eig_a, m_a)?,
        Variant::Mls => subspace::mls_residual(&eig_a, m_a, config.m_res)?,
        Variant::AcaS | Variant::AcaL => {
            let mean_b = kle::row_mean(b_train)?;
            let cov_b = kle::row_covariance(b_train, &mean_b)?;
            let mode = if config.variant == Variant::AcaS {
                AcaMode::Smallest
            } else {
                AcaMode::Largest
            };
            subspace::aca_subspace(&eig_a, &cov_b, m_a, config.m_res, mode)?
        }
        Variant::Raw => unreachable!(),
    };
    Ok((transform, m_a))
}

fn digest(std: &Standardizer, t: &FeatureTransform, model: &SvmModel) -> u64 {
    let mut h = DefaultHasher::new();
    let mut feed = |xs: &mut dyn Iterator<Item = &f64>| {
        for x in xs {
            x.to_bits().hash(&mut h);
        }
    };
    feed(&mut std.mean.iter());
    feed(&mut std.scale.iter());
    feed(&mut t.class_a_mean.iter());
    feed(&mut t.basis.vectors.iter());
    feed(&mut model.support_vectors.iter());
    feed(&mut model.dual_coefficients.iter());
    feed(&mut std::iter::once(&model.bias));
    h.finish()
}

/// Trains on one split and scores its held-out pair.
///
/// `a_rows` and `b_rows` map class positions to dataset rows.
pub fn run_round(
    data: &Dataset,
    a_rows: &[usize],
    b_rows: &[usize],
    split: &ClassSplit,
    config: &PipelineConfig,
) -> Result<RoundResult> {
    let pick =
        |class: &[usize], idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| class[i]).collect() };
    let a_cov_rows = pick(a_rows, &split.a_cov);
    let a_svm_rows = pick(a_rows, &split.a_svm);
    let b_train_rows = pick(b_rows, &split.b_train);

    let mut train_rows: Vec<usize> = a_cov_rows.clone();
    if split.regime == Regime::Balanced {
        train_rows.extend_from_slice(&a_svm_rows);
    }
    train_rows.extend_from_slice(&b_train_rows);
    let standardizer = Standardizer::fit(&data.values.select_rows(&train_rows))?;
    let rows = |r: &[usize]| standardizer.apply(&data.values.select_rows(r));
    let a_cov = rows(&a_cov_rows);
    let a_svm = rows(&a_svm_rows);
    let b_train = rows(&b_train_rows);
    let test = rows(&[a_rows[split.test_a], b_rows[split.test_b]]);

    let start = Instant::now();
    let (transform, m_a) = build_transform(&a_cov, &b_train, config)?;
    let fa = transform.apply_rows(&a_svm)?;
    let fb = transform.apply_rows(&b_train)?;
    let mut features = DMatrix::zeros(fa.nrows() + fb.nrows(), transform.output_dim);
    features.rows_mut(0, fa.nrows()).copy_from(&fa);
    features.rows_mut(fa.nrows(), fb.nrows()).copy_from(&fb);
    let mut labels = vec![-1.0; fa.nrows()];
    labels.extend(std::iter::repeat_n(1.0, fb.nrows()));
    let kernel = match config.kernel {
        KernelKind::Linear => Kernel::Linear,
        KernelKind::Rbf => Kernel::Rbf {
            gamma: config.gamma.resolve(svm::default_gamma(&features)),
        },
    };
    let model = svm::svm_train(&features, &labels, kernel, config.cost, config.tol)?;
    let elapsed = start.elapsed();

    let scores = svm::svm_score(&model, &transform.apply_rows(&test)?)?;
    Ok(RoundResult {
        test_a: split.test_a,
        test_b: split.test_b,
        score_a: scores[0],
        score_b: scores[1],
        elapsed,
        m_a,
        model_digest: digest(&standardizer, &transform, &model),
    })
}

/// Full leave-pair-out cross-validation. Any failed round aborts the run
/// with that round's identity.
pub fn run_lpocv(data: &Dataset, config: &PipelineConfig) -> Result<CvReport> {
    if data.has_missing() {
        return Err(FinderError::InvalidParameter(
            "dataset has missing values; impute first".into(),
        ));
    }
    let (a_rows, b_rows) = class_rows(data, config)?;
    let splits = make_splits(a_rows.len(), b_rows.len(), config.regime)?;
    let run = |s: &ClassSplit| {
        run_round(data, &a_rows, &b_rows, s, config).map_err(|e| FinderError::Round {
            test_a: s.test_a,
            test_b: s.test_b,
            source: Box::new(e),
        })
    };
    #[cfg(feature = "parallel")]
    let results: Vec<Result<RoundResult>> = splits.par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<RoundResult>> = splits.iter().map(run).collect();
    let rounds = results.into_iter().collect::<Result<Vec<_>>>()?;
    CvReport::from_rounds(rounds, config.clone())
}
