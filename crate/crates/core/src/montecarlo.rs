//! Replication harness for empirical rejection probabilities.
//!
//! The unit of work is one `(cell, replication)` pair: simulate a sample, fit,
//! draw `B` weight vectors, and evaluate every scheme of the cell on those
//! weights at every nominal level. Each pair reads only its own keyed streams,
//! so the table does not depend on how the pairs are scheduled.

use nalgebra::Vector2;

use crate::constrained_ls::{ConstraintSpec, HypothesisSpec};
use crate::dgp::{generate_sample, ErrorKind, RegressorKind, TrueValue};
use crate::par::{map_indexed, Threads};
use crate::rng::{Role, StreamKey};
use crate::wild_bootstrap::{BootstrapEngine, Scheme, WeightKind, WeightMatrix};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct CellSpec {
    /// Stream identifier; stays fixed when a plan is filtered.
    pub id: u64,
    pub errors: ErrorKind,
    pub regressor: RegressorKind,
    pub n: usize,
    pub truth: TrueValue,
    pub hypothesis: HypothesisSpec,
    pub constraint: ConstraintSpec,
    pub schemes: Vec<Scheme>,
    pub weights: WeightKind,
    pub levels: Vec<f64>,
}

impl CellSpec {
    pub fn validate(&self) -> Result<()> {
        self.errors.validate()?;
        self.regressor.validate()?;
        if self.n < 10 {
            return Err(Error::config(format!("n must be at least 10, got {}", self.n)));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("a cell needs at least one scheme"));
        }
        for s in &self.schemes {
            s.validate()?;
        }
        if self.levels.is_empty() || self.levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(Error::config("levels must be a non-empty subset of (0, 1)"));
        }
        self.hypothesis.validate(&self.constraint)?;
        let theta = self.truth.resolve(self.n);
        if self.constraint.value(&theta) < 0.0 {
            return Err(Error::config(format!("true value {} violates the constraint at n = {}", self.truth, self.n)));
        }
        Ok(())
    }
}

/// `standard` followed by `family(κ)` for every κ.
pub fn scheme_grid(family: &str, kappas: &[f64]) -> Result<Vec<Scheme>> {
    let mut out = vec![Scheme::Standard];
    for k in kappas {
        out.push(Scheme::from_family(family, Some(*k))?);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub name: String,
    pub cells: Vec<CellSpec>,
    pub reps: usize,
    pub b: usize,
    pub master_seed: u64,
    pub threads: Threads,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.b == 0 {
            return Err(Error::config("reps and B must be at least 1"));
        }
        if self.cells.is_empty() {
            return Err(Error::config("the plan has no cells"));
        }
        self.cells.iter().try_for_each(CellSpec::validate)
    }

    /// Keep only the matching cells; their streams are unchanged.
    pub fn retain(mut self, keep: impl Fn(&CellSpec) -> bool) -> Self {
        self.cells.retain(|c| keep(c));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Full,
    Desk,
}

impl std::str::FromStr for Scale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Scale::Full),
            "desk" => Ok(Scale::Desk),
            other => Err(Error::config(format!("unknown scale `{other}` (expected full or desk)"))),
        }
    }
}

pub const PRESETS: [&str; 6] = ["table1", "table2", "tableS1", "tableS2", "tableS3", "tableS4"];
pub const POWER_KAPPAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
pub const RATE_KAPPAS: [f64; 4] = [0.05, 0.1, 0.2, 0.4];
pub const DESK_REPS: usize = 2000;
pub const DESK_B: usize = 199;
pub const FULL_REPS: usize = 50_000;
pub const FULL_B: usize = 999;

const NULL_TRUTHS: [[f64; 2]; 3] = [[0.0, 0.0], [-0.75, 0.75], [-1.5, 1.5]];
const DRIFTS_ON_BOUNDARY: [[f64; 2]; 3] = [[-3.0, 0.0], [3.0, 0.0], [5.0, 0.0]];
const DRIFTS_INSIDE: [[f64; 2]; 3] = [[-3.0, 1.0], [2.0, 2.0], [3.0, 4.0]];

/// Simulation designs behind the published tables: unit-root regressor,
/// `g(θ) = θ₂`, `H₀: θ₁ + θ₂ = 0`, Gaussian weights, levels 5% and 10%.
pub fn preset(name: &str, scale: Scale) -> Result<ExperimentPlan> {
    let (truths, family): (Vec<TrueValue>, &str) = match name {
        "table1" | "tableS1" => (NULL_TRUTHS.iter().map(|t| TrueValue::Fixed(Vector2::from(*t))).collect(), if name == "table1" { "power" } else { "rate" }),
        "table2" | "tableS2" => (
            DRIFTS_ON_BOUNDARY.iter().map(|a| TrueValue::LocalDrift(Vector2::from(*a))).collect(),
            if name == "table2" { "power" } else { "rate" },
        ),
        "tableS3" | "tableS4" => (
            DRIFTS_INSIDE.iter().map(|a| TrueValue::LocalDrift(Vector2::from(*a))).collect(),
            if name == "tableS3" { "power" } else { "rate" },
        ),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    let kappas: &[f64] = if family == "power" { &POWER_KAPPAS } else { &RATE_KAPPAS };
    let schemes = scheme_grid(family, kappas)?;
    let (sizes, reps, b): (&[usize], usize, usize) = match scale {
        Scale::Full => (&[100, 400, 800], FULL_REPS, FULL_B),
        Scale::Desk => (&[100, 400], DESK_REPS, DESK_B),
    };
    let mut cells = Vec::new();
    for errors in [ErrorKind::IidNormal, ErrorKind::ARCH, ErrorKind::CORRELATED] {
        for &n in sizes {
            for truth in &truths {
                cells.push(CellSpec {
                    id: cells.len() as u64,
                    errors,
                    regressor: RegressorKind::UnitRoot,
                    n,
                    truth: *truth,
                    hypothesis: HypothesisSpec::intercept_plus_slope(),
                    constraint: ConstraintSpec::nonnegative_slope(),
                    schemes: schemes.clone(),
                    weights: WeightKind::Gaussian,
                    levels: vec![0.05, 0.10],
                });
            }
        }
    }
    Ok(ExperimentPlan {
        name: name.to_string(),
        cells,
        reps,
        b,
        master_seed: 0,
        threads: Threads::Auto,
    })
}

/// Coordinates of one table entry. `theta0` is `θ₀` for fixed and
/// local-to-boundary truths and `a₀` for local drifts.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpKey {
    pub dist: String,
    pub regressor: String,
    pub n: usize,
    pub theta0: [f64; 2],
    pub scheme: String,
    pub kappa: Option<f64>,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErpCell {
    pub key: ErpKey,
    pub erp: f64,
    pub mc_se: f64,
    pub reps_completed: usize,
    pub failures: usize,
}

impl ErpCell {
    /// Failures are tolerated below 0.1% of the attempted replications.
    pub fn is_valid(&self) -> bool {
        self.reps_completed > 0 && self.failures * 1000 < self.reps_completed + self.failures
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ErpTable {
    pub cells: Vec<ErpCell>,
}

impl ErpTable {
    pub fn find(&self, pred: impl Fn(&ErpKey) -> bool) -> Option<&ErpCell> {
        self.cells.iter().find(|c| pred(&c.key))
    }
}

pub fn truth_vector(truth: &TrueValue) -> [f64; 2] {
    match truth {
        TrueValue::Fixed(t) | TrueValue::LocalDrift(t) => [t[0], t[1]],
        TrueValue::LocalToBoundary { theta0, .. } => [theta0[0], theta0[1]],
    }
}

/// Rejection indicators of one replication, indexed `[scheme][level]`.
pub type Decisions = Vec<Vec<bool>>;

/// Drive the harness with an arbitrary per-replication decision rule.
/// `decide(cell, replication)` returns `Err` for a failed replication.
pub fn run_experiment_with<F>(plan: &ExperimentPlan, decide: F) -> Result<ErpTable>
where
    F: Fn(&CellSpec, usize) -> Result<Decisions> + Send + Sync,
{
    plan.validate()?;
    let reps = plan.reps;
    let outcomes = map_indexed(plan.cells.len() * reps, plan.threads, |i| {
        decide(&plan.cells[i / reps], i % reps).ok()
    });
    let mut table = ErpTable::default();
    for (c, cell) in plan.cells.iter().enumerate() {
        let block = &outcomes[c * reps..(c + 1) * reps];
        let done: Vec<&Decisions> = block.iter().flatten().collect();
        let completed = done.len();
        let failures = reps - completed;
        for (s, scheme) in cell.schemes.iter().enumerate() {
            for (l, level) in cell.levels.iter().enumerate() {
                let rejections = done.iter().filter(|d| d[s][l]).count();
                let erp = if completed == 0 { f64::NAN } else { rejections as f64 / completed as f64 };
                table.cells.push(ErpCell {
                    key: ErpKey {
                        dist: cell.errors.to_string(),
                        regressor: cell.regressor.to_string(),
                        n: cell.n,
                        theta0: truth_vector(&cell.truth),
                        scheme: scheme.family().to_string(),
                        kappa: scheme.tuning(),
                        level: *level,
                    },
                    erp,
                    mc_se: (erp * (1.0 - erp) / completed as f64).sqrt(),
                    reps_completed: completed,
                    failures,
                });
            }
        }
    }
    Ok(table)
}

/// One bootstrap replication of `cell`.
pub fn replicate(cell: &CellSpec, master_seed: u64, b: usize, replication: usize) -> Result<Decisions> {
    let key = StreamKey::new(master_seed, cell.id, replication as u64, Role::Data);
    let sample = generate_sample(cell.regressor, cell.errors, cell.truth, cell.n, &mut key.rng())?;
    let engine = BootstrapEngine::new(&sample, &cell.constraint, &cell.hypothesis)?;
    let weights = WeightMatrix::draw(cell.weights, cell.n, b, &mut key.with_role(Role::Weights).rng());
    let side = cell.hypothesis.side();
    Ok(engine
        .run(&cell.schemes, &weights)?
        .iter()
        .map(|run| cell.levels.iter().map(|q| run.rejects(side, *q)).collect())
        .collect())
}

pub fn run_experiment(plan: &ExperimentPlan) -> Result<ErpTable> {
    run_experiment_with(plan, |cell, r| replicate(cell, plan.master_seed, plan.b, r))
}

/// Harness self-test: every scheme replaced by a uniform p-value.
pub fn run_uniform_stub(plan: &ExperimentPlan) -> Result<ErpTable> {
    use rand::Rng;
    run_experiment_with(plan, |cell, r| {
        let mut rng = StreamKey::new(plan.master_seed, cell.id, r as u64, Role::Weights).rng();
        Ok(cell
            .schemes
            .iter()
            .map(|_| {
                let u: f64 = rng.gen();
                cell.levels.iter().map(|q| u <= *q).collect()
            })
            .collect())
    })
}
