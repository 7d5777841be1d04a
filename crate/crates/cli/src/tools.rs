//! The `synth`, `impute` and `bounds` commands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use finder::bounds;
use finder::config::{parse_kv, parse_list};
use finder::evaluation::{self, Standardizer};
use finder::io::{self, fmt_sig};
use finder::kle::{self, DEFAULT_RANK_TOL};
use finder::subspace::Variant;
use finder::synth::{self, CoefficientLaw, SynthSpec};
use finder::{impute, ClassLabel, FinderError, Result};
use nalgebra::{DMatrix, DVector};

use crate::experiment::{self, config_echo};
use crate::{read_text, ConfigArgs};

const DIGITS: usize = 6;

/// Either `--scenario`, or `--spec-a` with optional `--spec-b`.
#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Two-class scenario file (keys f, n_a, n_b, a_spectrum, b_spectrum,
    /// overlap_dims, law, seed, mean).
    #[arg(long, conflicts_with_all = ["spec_a", "spec_b"])]
    pub scenario: Option<PathBuf>,
    /// Spec file for class A (keys law, seed, mean, eigenvalues,
    /// eigenvector.N).
    #[arg(long, requires = "n_a")]
    pub spec_a: Option<PathBuf>,
    #[arg(long, requires_all = ["spec_a", "n_b"])]
    pub spec_b: Option<PathBuf>,
    #[arg(long)]
    pub n_a: Option<usize>,
    #[arg(long)]
    pub n_b: Option<usize>,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "label")]
    pub label_column: String,
    /// Also write the class spec files `class_a.spec` / `class_b.spec` here.
    #[arg(long)]
    pub write_specs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub f: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub mean: DVector<f64>,
    pub a_spectrum: Vec<f64>,
    pub b_spectrum: Vec<f64>,
    pub overlap_dims: usize,
    pub law: CoefficientLaw,
    pub seed: u64,
}

impl Scenario {
    /// Parses a scenario file. `mean` may be one value for every coordinate;
    /// it defaults to zero.
    pub fn from_config(text: &str) -> Result<Self> {
        let pairs = parse_kv(text)?;
        let get = |k: &str| {
            pairs
                .iter()
                .find(|(key, _)| key == k)
                .map(|(_, v)| v.as_str())
        };
        let need = |k: &str| {
            get(k).ok_or_else(|| FinderError::Format(format!("scenario: missing key '{k}'")))
        };
        let count = |k: &str| -> Result<usize> {
            need(k)?
                .parse()
                .map_err(|_| FinderError::Format(format!("scenario: '{k}' must be a count")))
        };
        for (k, _) in &pairs {
            const KNOWN: [&str; 9] = [
                "f",
                "n_a",
                "n_b",
                "mean",
                "a_spectrum",
                "b_spectrum",
                "overlap_dims",
                "law",
                "seed",
            ];
            if !KNOWN.contains(&k.as_str()) {
                return Err(FinderError::Format(format!("scenario: unknown key '{k}'")));
            }
        }
        let f = count("f")?;
        let mean = match get("mean") {
            None => DVector::zeros(f),
            Some(v) => {
                let xs: Vec<f64> = parse_list(v)?;
                match xs.len() {
                    1 => DVector::from_element(f, xs[0]),
                    _ => DVector::from_vec(xs),
                }
            }
        };
        Ok(Self {
            f,
            n_a: count("n_a")?,
            n_b: count("n_b")?,
            mean,
            a_spectrum: parse_list(need("a_spectrum")?)?,
            b_spectrum: parse_list(need("b_spectrum")?)?,
            overlap_dims: get("overlap_dims").map_or(Ok(0), |_| count("overlap_dims"))?,
            law: get("law").map_or(Ok(CoefficientLaw::StandardGaussian), str::parse)?,
            seed: get("seed").map_or(Ok(0), |v| {
                v.parse()
                    .map_err(|_| FinderError::Format("scenario: 'seed' must be an integer".into()))
            })?,
        })
    }

    pub fn specs(&self) -> Result<(SynthSpec, SynthSpec)> {
        let (mut a, mut b) = synth::two_class_scenario(
            self.f,
            &self.mean,
            &self.a_spectrum,
            &self.b_spectrum,
            self.overlap_dims,
            self.seed,
        )?;
        a.coefficient_law = self.law;
        b.coefficient_law = self.law;
        Ok((a, b))
    }
}

fn load_spec(path: &Path) -> Result<SynthSpec> {
    SynthSpec::from_config(&read_text(path)?)
}

pub fn synth(args: &SynthArgs) -> Result<()> {
    let (a, b, n_a, n_b) = if let Some(path) = &args.scenario {
        let sc = Scenario::from_config(&read_text(path)?)?;
        let (a, b) = sc.specs()?;
        (a, Some(b), sc.n_a, sc.n_b)
    } else if let Some(path) = &args.spec_a {
        let a = load_spec(path)?;
        let b = args.spec_b.as_deref().map(load_spec).transpose()?;
        (a, b, args.n_a.unwrap_or(0), args.n_b.unwrap_or(0))
    } else {
        return Err(FinderError::InvalidParameter(
            "synth needs --scenario or --spec-a".into(),
        ));
    };
    let data = match &b {
        Some(b) => synth::labeled_dataset(&a, b, n_a, n_b)?,
        None => {
            let values = synth::sample_matrix(&a, n_a)?;
            finder::Dataset::new(values, Some(vec![ClassLabel::A; n_a]))?
        }
    };
    io::write_csv(&args.output, &data, &args.label_column)?;
    println!(
        "wrote {} ({} rows, {} features)",
        args.output.display(),
        data.n_samples(),
        data.n_features()
    );
    if let Some(dir) = &args.write_specs {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("class_a.spec"), a.to_config())?;
        if let Some(b) = &b {
            std::fs::write(dir.join("class_b.spec"), b.to_config())?;
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[arg(long, alias = "input-path")]
    pub input: PathBuf,
    #[arg(long)]
    pub label_column: String,
    #[arg(long, default_value_t = impute::DEFAULT_K)]
    pub k: usize,
    #[arg(long)]
    pub output: PathBuf,
}

pub fn impute(args: &ImputeArgs) -> Result<()> {
    let table = io::load_table(&args.input, &args.label_column)?;
    let missing = table.missing_mask.iter().filter(|&&m| m).count();
    let values = impute::knn_impute_values(
        &table.values,
        &table.missing_mask,
        &table.feature_names,
        args.k,
    )?;
    let filled = table.with_values(values);
    let file = std::fs::File::create(&args.output)?;
    io::write_table(std::io::BufWriter::new(file), &filled)?;
    println!("imputed {missing} cells, wrote {}", args.output.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated radii.
    #[arg(long, default_value = "0.5,1,2,4")]
    pub epsilon: String,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub m_res: usize,
    pub class: ClassLabel,
    pub epsilon: f64,
    /// Mean squared norm of the projected, centered sample under the
    /// estimated eigen-system.
    pub expected_energy: f64,
    pub markov_bound: f64,
    /// `eps^-2` times the class-A eigenvalue tail beyond `M_A`; class A of
    /// residual variants only.
    pub tail_bound: Option<f64>,
    /// Fraction of the class's rows whose projection reaches `eps`.
    pub empirical: f64,
}

/// Bounds for each class, `M_res` and radius. Features are z-scored over
/// all rows and each class is centered on its own mean.
pub fn compute_bounds(args: &BoundsArgs) -> Result<(String, Vec<BoundRow>)> {
    let cfg = args.config.resolve()?;
    let epsilons: Vec<f64> = parse_list(&args.epsilon)?;
    if epsilons.is_empty() {
        return Err(FinderError::InvalidParameter(
            "epsilon list is empty".into(),
        ));
    }
    let (data, _, _) = experiment::load_input(&cfg)?;
    experiment::check_dimensions(&cfg, data.n_features())?;
    let standardizer = Standardizer::fit(&data.values)?;
    let class_matrix = |c: ClassLabel| -> Result<DMatrix<f64>> {
        Ok(standardizer.apply(&data.values.select_rows(&data.class_rows(c)?)))
    };
    let rows_a = class_matrix(ClassLabel::A)?;
    let rows_b = class_matrix(ClassLabel::B)?;

    let mut out = Vec::new();
    for &m_res in &cfg.m_res_list {
        let (transform, m_a) = evaluation::build_transform(&rows_a, &rows_b, &cfg.pipeline(m_res))?;
        let basis = &transform.basis;
        for (class, rows) in [(ClassLabel::A, &rows_a), (ClassLabel::B, &rows_b)] {
            let mean = kle::row_mean(rows)?;
            let eig = kle::estimate(rows, &mean, DEFAULT_RANK_TOL)?;
            let tail = match (class, cfg.variant) {
                (ClassLabel::A, v) if v != Variant::Raw => Some(bounds::tail_bound(&eig, m_a)?),
                _ => None,
            };
            let proj = kle::center_rows(rows, &mean)? * &basis.vectors;
            let norms: Vec<f64> = proj.row_iter().map(|r| r.norm_squared()).collect();
            for &eps in &epsilons {
                let mb = bounds::markov_rhs(&eig, basis, eps)?;
                let hits = norms.iter().filter(|&&n| n >= eps * eps).count();
                out.push(BoundRow {
                    m_res,
                    class,
                    epsilon: eps,
                    expected_energy: mb.expected_energy(),
                    markov_bound: mb.rhs,
                    tail_bound: tail.map(|t| t / (eps * eps)),
                    empirical: hits as f64 / norms.len() as f64,
                });
            }
        }
    }
    Ok((config_echo(&cfg), out))
}

pub fn bounds(args: &BoundsArgs) -> Result<()> {
    let (echo, rows) = compute_bounds(args)?;
    let mut text = echo;
    text.push_str("m_res,class,epsilon,expected_energy,markov_bound,tail_bound,empirical\n");
    for r in &rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{}",
            r.m_res,
            match r.class {
                ClassLabel::A => "A",
                ClassLabel::B => "B",
            },
            fmt_sig(r.epsilon, DIGITS),
            fmt_sig(r.expected_energy, DIGITS),
            fmt_sig(r.markov_bound, DIGITS),
            r.tail_bound.map(|t| fmt_sig(t, DIGITS)).unwrap_or_default(),
            fmt_sig(r.empirical, DIGITS),
        );
    }
    match &args.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
