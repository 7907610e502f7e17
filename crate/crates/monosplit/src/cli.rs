//! JSON-configured command-line front end: single runs or parameter sweeps,
//! per-iteration CSV traces, and an aligned summary table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::lifting::{
    lift, run_m_with_state, MBsfrbState, MBsrfbState, MOperatorProblem, MSfrdrState, MState,
};
use crate::operators::ConvexSet;
use crate::problems::{build_minkowski, oracle_solve, MinkowskiSpec, SyntheticSpec};
use crate::space::{Vector, Weights};
use crate::splitting::lyapunov::{Anchor, DrAnchor, SaddleAnchor};
use crate::splitting::run::{run_four_with_state, RunOptions, RunTrace, StoppingRule, Termination};
use crate::splitting::stepsize::{StepsizeMode, StepsizeRule, Variant};
use crate::splitting::{BsfrbState, BsrfbState, FourOperatorProblem, FourState, SfrdrState};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Scalar or sweep list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn list(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum AlgorithmChoice {
    #[serde(rename = "bsfrb")]
    Bsfrb,
    #[serde(rename = "bsrfb")]
    Bsrfb,
    #[serde(rename = "sfrdr")]
    Sfrdr,
    #[serde(rename = "m-bsfrb")]
    MBsfrb,
    #[serde(rename = "m-bsrfb")]
    MBsrfb,
    #[serde(rename = "m-sfrdr")]
    MSfrdr,
}

impl AlgorithmChoice {
    pub fn variant(self) -> Variant {
        match self {
            AlgorithmChoice::Bsfrb | AlgorithmChoice::MBsfrb => Variant::Bsfrb,
            AlgorithmChoice::Bsrfb | AlgorithmChoice::MBsrfb => Variant::Bsrfb,
            AlgorithmChoice::Sfrdr | AlgorithmChoice::MSfrdr => Variant::Sfrdr,
        }
    }

    pub fn is_product_space(self) -> bool {
        matches!(
            self,
            AlgorithmChoice::MBsfrb | AlgorithmChoice::MBsrfb | AlgorithmChoice::MSfrdr
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            AlgorithmChoice::Bsfrb => "bsfrb",
            AlgorithmChoice::Bsrfb => "bsrfb",
            AlgorithmChoice::Sfrdr => "sfrdr",
            AlgorithmChoice::MBsfrb => "m-bsfrb",
            AlgorithmChoice::MBsrfb => "m-bsrfb",
            AlgorithmChoice::MSfrdr => "m-sfrdr",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub f: Vector,
    #[serde(default)]
    pub target: Option<Vector>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Minkowski {
        sets: Vec<ConvexSet>,
        cases: Vec<CaseConfig>,
    },
    Synthetic {
        dim: usize,
        set1: ConvexSet,
        #[serde(default)]
        set2: Option<ConvexSet>,
        #[serde(default)]
        skew: bool,
        f: Vector,
        #[serde(default)]
        target: Option<Vector>,
    },
}

/// State initialization: zeros, seeded random fills, or three explicit state
/// vectors in algorithm order (`z0, y0, y-1` for the first two algorithms,
/// `x0, x-1, u0` for the third; product-space runs take block-concatenated
/// vectors of length `m * dim`).
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitConfig {
    #[default]
    Zeros,
    Random {
        scale: f64,
    },
    Vectors(Vec<Vector>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StopConfig {
    KnownSolution { epsilon: f64 },
    FixedPoint { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeConfig {
    Strict,
    Permissive,
}

impl From<ModeConfig> for StepsizeMode {
    fn from(m: ModeConfig) -> StepsizeMode {
        match m {
            ModeConfig::Strict => StepsizeMode::Strict,
            ModeConfig::Permissive => StepsizeMode::Permissive,
        }
    }
}

/// A full run configuration; see the repository README for the format.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub algorithm: AlgorithmChoice,
    pub gamma: OneOrMany,
    #[serde(default)]
    pub lambda: Option<OneOrMany>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub seed: u64,
    pub stop: StopConfig,
    pub max_iter: usize,
    #[serde(default)]
    pub mode: Option<ModeConfig>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Parses and semantically validates a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cfg: RunConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    validate_config(&cfg)?;
    Ok(cfg)
}

fn validate_config(cfg: &RunConfig) -> Result<()> {
    if cfg.max_iter < 1 {
        return Err(Error::Config("max_iter must be >= 1".into()));
    }
    if cfg.gamma.list().is_empty() {
        return Err(Error::Config("gamma sweep list is empty".into()));
    }
    for g in cfg.gamma.list() {
        if !(g > 0.0) {
            return Err(Error::Config(format!("gamma values must be positive, got {g}")));
        }
    }
    match (&cfg.lambda, cfg.algorithm.variant().needs_lambda()) {
        (None, true) => {
            return Err(Error::Config(
                "lambda required for sfrdr algorithms".into(),
            ))
        }
        (Some(l), true) => {
            if l.list().is_empty() {
                return Err(Error::Config("lambda sweep list is empty".into()));
            }
            for lm in l.list() {
                if !(lm > 0.0) {
                    return Err(Error::Config(format!(
                        "lambda values must be positive, got {lm}"
                    )));
                }
            }
        }
        (Some(_), false) => {
            return Err(Error::Config(format!(
                "lambda does not apply to {}",
                cfg.algorithm.label()
            )))
        }
        (None, false) => {}
    }
    let epsilon = match cfg.stop {
        StopConfig::KnownSolution { epsilon } | StopConfig::FixedPoint { epsilon } => epsilon,
    };
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!(
            "stopping epsilon must be positive, got {epsilon}"
        )));
    }
    match &cfg.problem {
        ProblemConfig::Minkowski { sets, cases } => {
            if sets.is_empty() {
                return Err(Error::Config("minkowski problem needs sets".into()));
            }
            if cases.is_empty() {
                return Err(Error::Config("minkowski problem needs cases".into()));
            }
            if let Some(w) = &cfg.weights {
                if w.len() != sets.len() {
                    return Err(Error::Config(format!(
                        "{} weights for {} sets",
                        w.len(),
                        sets.len()
                    )));
                }
            }
            if matches!(cfg.stop, StopConfig::KnownSolution { .. }) {
                for (i, c) in cases.iter().enumerate() {
                    if c.target.is_none() {
                        return Err(Error::Config(format!(
                            "known_solution stopping needs a target for case {i}"
                        )));
                    }
                }
            }
        }
        ProblemConfig::Synthetic { .. } => {
            if cfg.weights.is_some() {
                return Err(Error::Config(
                    "weights only apply to minkowski problems".into(),
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct CliOverrides {
    pub out_dir: Option<PathBuf>,
    pub mode: Option<StepsizeMode>,
    pub lyapunov: bool,
}

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub case_label: String,
    pub gamma: f64,
    pub lambda: Option<f64>,
    pub iterations: usize,
    pub time_s: f64,
    pub final_dist: Option<f64>,
    pub final_residual: f64,
    pub termination: Termination,
    pub csv_path: PathBuf,
}

#[derive(Debug)]
pub struct RunReport {
    pub rows: Vec<SummaryRow>,
    pub warnings: Vec<String>,
    pub all_converged: bool,
    pub out_dir: PathBuf,
}

impl RunReport {
    /// Summary formatted as an aligned text table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>8} {:>8} {:>10} {:>12} {:>11}",
            "f", "lambda", "gamma", "Iter", "Time(s)", "final", "status"
        );
        for r in &self.rows {
            let lambda = r
                .lambda
                .map(|l| format!("{l}"))
                .unwrap_or_else(|| "-".into());
            let final_col = r
                .final_dist
                .map(|d| format!("{d:.3e}"))
                .unwrap_or_else(|| format!("{:.3e}", r.final_residual));
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>8} {:>8} {:>10.3} {:>12} {:>11}",
                r.case_label,
                lambda,
                r.gamma,
                r.iterations,
                r.time_s,
                final_col,
                r.termination.label()
            );
        }
        out
    }
}

/// One solver backend instantiated for a sweep cell.
enum Backend {
    Four(FourOperatorProblem),
    Product(MOperatorProblem),
}

struct Cell {
    case_index: usize,
    case_label: String,
    target: Option<Vector>,
    gamma: f64,
    lambda: Option<f64>,
}

fn format_num_for_name(v: f64) -> String {
    format!("{v}").replace('.', "p").replace('-', "m")
}

fn csv_name(cell: &Cell) -> String {
    let mut name = format!(
        "run_c{}_g{}",
        cell.case_index,
        format_num_for_name(cell.gamma)
    );
    if let Some(l) = cell.lambda {
        name.push_str(&format!("_l{}", format_num_for_name(l)));
    }
    name.push_str(".csv");
    name
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn write_trace_csv(path: &Path, trace: &RunTrace) -> Result<()> {
    let mut text = String::from("n,residual,dist_to_solution,lyapunov\n");
    for r in &trace.records {
        let _ = writeln!(
            text,
            "{},{},{},{}",
            r.n,
            r.residual,
            fmt_opt(r.dist_to_solution),
            fmt_opt(r.lyapunov)
        );
    }
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vector {
    (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
}

fn explicit_triple(vectors: &[Vector], expected_dim: usize) -> Result<[Vector; 3]> {
    if vectors.len() != 3 {
        return Err(Error::Config(format!(
            "explicit init needs exactly 3 state vectors, got {}",
            vectors.len()
        )));
    }
    for v in vectors {
        if v.len() != expected_dim {
            return Err(Error::Config(format!(
                "explicit init vector has length {}, expected {expected_dim}",
                v.len()
            )));
        }
    }
    Ok([vectors[0].clone(), vectors[1].clone(), vectors[2].clone()])
}

fn four_init(
    p: &FourOperatorProblem,
    variant: Variant,
    init: &InitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<FourState> {
    match init {
        InitConfig::Zeros => FourState::zeros(p, variant),
        InitConfig::Vectors(vectors) => {
            let [v0, v1, v2] = explicit_triple(vectors, p.dim)?;
            Ok(match variant {
                Variant::Bsfrb => FourState::Bsfrb(BsfrbState::new(p, v0, v1, v2)?),
                Variant::Bsrfb => FourState::Bsrfb(BsrfbState::new(p, v0, v1, v2)?),
                Variant::Sfrdr => FourState::Sfrdr(SfrdrState::new(p, v0, v1, v2)?),
            })
        }
        InitConfig::Random { scale } => {
            let s = *scale;
            Ok(match variant {
                Variant::Bsfrb => FourState::Bsfrb(BsfrbState::new(
                    p,
                    random_vec(rng, p.dim, s),
                    random_vec(rng, p.dim, s),
                    random_vec(rng, p.dim, s),
                )?),
                Variant::Bsrfb => FourState::Bsrfb(BsrfbState::new(
                    p,
                    random_vec(rng, p.dim, s),
                    random_vec(rng, p.dim, s),
                    random_vec(rng, p.dim, s),
                )?),
                Variant::Sfrdr => FourState::Sfrdr(SfrdrState::new(
                    p,
                    random_vec(rng, p.dim, s),
                    random_vec(rng, p.dim, s),
                    random_vec(rng, p.dim, s),
                )?),
            })
        }
    }
}

fn m_init(
    mp: &MOperatorProblem,
    variant: Variant,
    init: &InitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<MState> {
    let blocks = |rng: &mut ChaCha8Rng, scale: f64| -> Vec<Vector> {
        (0..mp.m()).map(|_| random_vec(rng, mp.dim, scale)).collect()
    };
    match init {
        InitConfig::Zeros => MState::zeros(mp, variant),
        InitConfig::Vectors(vectors) => {
            // Product-space states take block-concatenated vectors, except
            // the third algorithm's primal pair which lives in the base
            // space.
            match variant {
                Variant::Bsfrb | Variant::Bsrfb => {
                    let [v0, v1, v2] = explicit_triple(vectors, mp.m() * mp.dim)?;
                    let split = |v: Vector| crate::lifting::split_blocks(&v, mp.m());
                    Ok(match variant {
                        Variant::Bsfrb => MState::Bsfrb(MBsfrbState::new(
                            mp,
                            split(v0)?,
                            split(v1)?,
                            split(v2)?,
                        )?),
                        _ => MState::Bsrfb(MBsrfbState::new(
                            mp,
                            split(v0)?,
                            split(v1)?,
                            split(v2)?,
                        )?),
                    })
                }
                Variant::Sfrdr => {
                    if vectors.len() != 3 {
                        return Err(Error::Config(format!(
                            "explicit init needs exactly 3 state vectors, got {}",
                            vectors.len()
                        )));
                    }
                    let x0 = vectors[0].clone();
                    let xm1 = vectors[1].clone();
                    if x0.len() != mp.dim || xm1.len() != mp.dim {
                        return Err(Error::Config(format!(
                            "explicit primal init vectors must have length {}",
                            mp.dim
                        )));
                    }
                    let u0 = crate::lifting::split_blocks(&vectors[2], mp.m())
                        .map_err(|_| {
                            Error::Config(format!(
                                "explicit dual init must have length {}",
                                mp.m() * mp.dim
                            ))
                        })?;
                    Ok(MState::Sfrdr(MSfrdrState::new(mp, x0, xm1, u0)?))
                }
            }
        }
        InitConfig::Random { scale } => {
            let s = *scale;
            Ok(match variant {
                Variant::Bsfrb => MState::Bsfrb(MBsfrbState::new(
                    mp,
                    blocks(rng, s),
                    blocks(rng, s),
                    blocks(rng, s),
                )?),
                Variant::Bsrfb => MState::Bsrfb(MBsrfbState::new(
                    mp,
                    blocks(rng, s),
                    blocks(rng, s),
                    blocks(rng, s),
                )?),
                Variant::Sfrdr => MState::Sfrdr(MSfrdrState::new(
                    mp,
                    random_vec(rng, mp.dim, s),
                    random_vec(rng, mp.dim, s),
                    blocks(rng, s),
                )?),
            })
        }
    }
}

/// Builds an anchor by pre-solving the cell's problem to a tight fixed point
/// with the same algorithm, then reading the anchor off the final state.
fn presolve_anchor(
    backend: &Backend,
    rule: &StepsizeRule,
    variant: Variant,
) -> Result<Anchor> {
    let opts = RunOptions::new(StoppingRule::FixedPoint { epsilon: 1e-10 }, 500_000);
    match backend {
        Backend::Four(p) => {
            let (trace, state) = run_four_with_state(p, rule, FourState::zeros(p, variant)?, &opts)?;
            if trace.termination != Termination::Converged {
                return Err(Error::OracleFailure(
                    "anchor pre-solve did not converge".into(),
                ));
            }
            Ok(match state {
                FourState::Bsfrb(s) => Anchor::Dr(DrAnchor {
                    x: p.a1.resolve(rule.gamma, &s.z)?,
                    z: s.z,
                }),
                FourState::Bsrfb(s) => Anchor::Dr(DrAnchor {
                    x: p.a1.resolve(rule.gamma, &s.z)?,
                    z: s.z,
                }),
                FourState::Sfrdr(s) => Anchor::Saddle(SaddleAnchor { x: s.x, u: s.u }),
            })
        }
        Backend::Product(mp) => {
            let (trace, state) = run_m_with_state(mp, rule, MState::zeros(mp, variant)?, &opts)?;
            if trace.termination != Termination::Converged {
                return Err(Error::OracleFailure(
                    "anchor pre-solve did not converge".into(),
                ));
            }
            Ok(match state {
                MState::Bsfrb(s) => {
                    let z = s.z.concat();
                    let lifted = mp.lifted_dr_problem();
                    Anchor::Dr(DrAnchor {
                        x: lifted.a1.resolve(rule.gamma, &z)?,
                        z,
                    })
                }
                MState::Bsrfb(s) => {
                    let z = s.z.concat();
                    let lifted = mp.lifted_dr_problem();
                    Anchor::Dr(DrAnchor {
                        x: lifted.a1.resolve(rule.gamma, &z)?,
                        z,
                    })
                }
                MState::Sfrdr(s) => Anchor::Saddle(SaddleAnchor {
                    x: lift(&s.x, mp.m()).concat(),
                    u: s.u.concat(),
                }),
            })
        }
    }
}

/// Executes every sweep cell of a parsed configuration, writes one CSV per
/// cell plus `summary.csv`, and returns the collected rows.
pub fn run_table(cfg: &RunConfig, overrides: &CliOverrides) -> Result<RunReport> {
    let variant = cfg.algorithm.variant();
    let mode = overrides
        .mode
        .or(cfg.mode.map(StepsizeMode::from))
        .unwrap_or_default();
    let out_dir = overrides
        .out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    let gammas = cfg.gamma.list();
    let lambdas: Vec<Option<f64>> = match &cfg.lambda {
        Some(l) => l.list().into_iter().map(Some).collect(),
        None => vec![None],
    };

    // Resolve per-case problem data.
    struct CaseData {
        label: String,
        target: Option<Vector>,
        minkowski_f: Option<Vector>,
        synthetic: Option<SyntheticSpec>,
    }
    let epsilon = match cfg.stop {
        StopConfig::KnownSolution { epsilon } | StopConfig::FixedPoint { epsilon } => epsilon,
    };
    let known_solution = matches!(cfg.stop, StopConfig::KnownSolution { .. });

    let cases: Vec<CaseData> = match &cfg.problem {
        ProblemConfig::Minkowski { cases, .. } => cases
            .iter()
            .map(|c| CaseData {
                label: format!("{:?}", c.f),
                target: c.target.clone(),
                minkowski_f: Some(c.f.clone()),
                synthetic: None,
            })
            .collect(),
        ProblemConfig::Synthetic {
            dim,
            set1,
            set2,
            skew,
            f,
            target,
        } => {
            let spec = SyntheticSpec {
                dim: *dim,
                set1: set1.clone(),
                set2: set2.clone(),
                skew: *skew,
                f: f.clone(),
            };
            spec.validate()?;
            let target = match (target, known_solution) {
                (Some(t), _) => Some(t.clone()),
                (None, true) => Some(oracle_solve(&spec)?),
                (None, false) => None,
            };
            vec![CaseData {
                label: format!("{f:?}"),
                target,
                minkowski_f: None,
                synthetic: Some(spec),
            }]
        }
    };

    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut all_converged = true;
    let mut cell_index = 0u64;

    for (case_index, case) in cases.iter().enumerate() {
        // One backend per case; operators are shared across the sweep.
        let backend = match &cfg.problem {
            ProblemConfig::Minkowski { sets, .. } => {
                let spec = MinkowskiSpec {
                    sets: sets.clone(),
                    f: case.minkowski_f.clone().expect("minkowski case"),
                };
                let weights = match &cfg.weights {
                    Some(w) => Weights::new(w.clone())?,
                    None => Weights::uniform(sets.len()),
                };
                let mk = build_minkowski(&spec, weights)?;
                if cfg.algorithm.is_product_space() {
                    Backend::Product(mk.problem)
                } else {
                    Backend::Four(match variant {
                        Variant::Sfrdr => mk.problem.lifted_saddle_problem(),
                        _ => mk.problem.lifted_dr_problem(),
                    })
                }
            }
            ProblemConfig::Synthetic { .. } => {
                let spec = case.synthetic.as_ref().expect("synthetic case");
                if cfg.algorithm.is_product_space() {
                    Backend::Product(spec.m_operator_problem()?)
                } else {
                    Backend::Four(spec.four_operator_problem()?)
                }
            }
        };

        for &lambda in &lambdas {
            for &gamma in &gammas {
                let cell = Cell {
                    case_index,
                    case_label: case.label.clone(),
                    target: case.target.clone(),
                    gamma,
                    lambda,
                };
                let rule = StepsizeRule::new(variant, gamma, lambda, mode);
                let stop = if known_solution {
                    StoppingRule::KnownSolution {
                        target: cell.target.clone().expect("validated target"),
                        epsilon,
                    }
                } else {
                    StoppingRule::FixedPoint { epsilon }
                };
                let mut opts = RunOptions::new(stop, cfg.max_iter);
                if overrides.lyapunov {
                    opts = opts.with_lyapunov(presolve_anchor(&backend, &rule, variant)?);
                }

                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(cell_index));
                cell_index += 1;

                let trace = match &backend {
                    Backend::Four(p) => {
                        let init = four_init(p, variant, &cfg.init, &mut rng)?;
                        run_four_with_state(p, &rule, init, &opts)?.0
                    }
                    Backend::Product(mp) => {
                        let init = m_init(mp, variant, &cfg.init, &mut rng)?;
                        run_m_with_state(mp, &rule, init, &opts)?.0
                    }
                };

                for w in &trace.warnings {
                    let tagged = format!("[{} {}] {w}", cell.case_label, gamma);
                    if !warnings.contains(&tagged) {
                        warnings.push(tagged);
                    }
                }
                if trace.termination != Termination::Converged {
                    all_converged = false;
                }

                let csv_path = out_dir.join(csv_name(&cell));
                write_trace_csv(&csv_path, &trace)?;

                let last = trace.records.last().expect("trace has records");
                rows.push(SummaryRow {
                    case_label: cell.case_label.clone(),
                    gamma,
                    lambda,
                    iterations: trace.iterations,
                    time_s: trace.wall_time.as_secs_f64(),
                    final_dist: last.dist_to_solution,
                    final_residual: last.residual,
                    termination: trace.termination,
                    csv_path,
                });
            }
        }
    }

    // Summary CSV, written by this single collector to keep output
    // deterministic.
    let mut summary = String::from(
        "case,gamma,lambda,iterations,time_s,final_dist,final_residual,termination\n",
    );
    for r in &rows {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{}",
            r.case_label.replace(',', ";"),
            r.gamma,
            fmt_opt(r.lambda),
            r.iterations,
            r.time_s,
            fmt_opt(r.final_dist),
            r.final_residual,
            r.termination.label()
        );
    }
    let summary_path = out_dir.join("summary.csv");
    fs::write(&summary_path, summary).map_err(|source| Error::Io {
        path: summary_path.display().to_string(),
        source,
    })?;

    Ok(RunReport {
        rows,
        warnings,
        all_converged,
        out_dir,
    })
}
