//! Experiment files.
//!
//! ```text
//! # comments start with '#'
//! name = drift_check          # optional
//! master_seed = 42            # required
//! reps = 500
//! bootstrap = 199             # bootstrap repetitions B
//! threads = auto              # or a positive count
//!
//! [cell]                      # one section per cell
//! errors = arch               # iid | arch | arch(ω,α) | correlated | correlated(w)
//! regressor = unit_root       # unit_root | near_unit_root(c) | stationary | stationary(ρ)
//! n = 100
//! truth = local_drift(3,0)    # fixed(a,b) | local_drift(a,b) | local_to_boundary(a,b,c,d)
//! hypothesis = sum            # sum | boundary | simple(a,b) | linear(r1,r2,c)
//! constraint = slope          # slope | affine(a1,a2,b)
//! schemes = standard, power(0.5), numerical(0.2)
//! family = rate               # with `kappas`: appends family(κ) for each κ
//! kappas = 0.05, 0.1
//! weights = gaussian          # gaussian | rademacher
//! levels = 0.05, 0.10
//! ```
//!
//! Every cell key except `n` has a default: `iid`, `unit_root`, `fixed(0,0)`,
//! `sum`, `slope`, `standard`, `gaussian` and levels `0.05, 0.10`.

use nalgebra::Vector2;

use crate::constrained_ls::{ConstraintSpec, HypothesisSpec};
use crate::dgp::{split_call, ErrorKind, RegressorKind, TrueValue};
use crate::montecarlo::{CellSpec, ExperimentPlan};
use crate::par::Threads;
use crate::wild_bootstrap::{Scheme, WeightKind};
use crate::{Error, Result};

/// Split on commas that are not inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.into_iter().filter(|p| !p.is_empty()).collect()
}

fn parse_hypothesis(s: &str) -> Result<HypothesisSpec> {
    let (name, args) = split_call(s)?;
    match (name, args.as_slice()) {
        ("sum", []) => Ok(HypothesisSpec::intercept_plus_slope()),
        ("boundary", []) => Ok(HypothesisSpec::BoundaryNull),
        ("simple", [a, b]) => Ok(HypothesisSpec::SimpleNull(Vector2::new(*a, *b))),
        ("linear", [r1, r2, c]) => Ok(HypothesisSpec::linear(Vector2::new(*r1, *r2), *c)),
        _ => Err(Error::config(format!("unknown hypothesis `{s}`"))),
    }
}

fn parse_constraint(s: &str) -> Result<ConstraintSpec> {
    let (name, args) = split_call(s)?;
    match (name, args.as_slice()) {
        ("slope", []) => Ok(ConstraintSpec::nonnegative_slope()),
        ("affine", [a1, a2, b]) if *a1 != 0.0 || *a2 != 0.0 => Ok(ConstraintSpec::affine(Vector2::new(*a1, *a2), *b)),
        _ => Err(Error::config(format!("unknown constraint `{s}`"))),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    split_top_level(s)
        .into_iter()
        .map(|p| p.parse::<f64>().map_err(|_| Error::config(format!("`{p}` is not a number"))))
        .collect()
}

#[derive(Default)]
struct CellDraft {
    line: usize,
    errors: Option<ErrorKind>,
    regressor: Option<RegressorKind>,
    n: Option<usize>,
    truth: Option<TrueValue>,
    hypothesis: Option<HypothesisSpec>,
    constraint: Option<ConstraintSpec>,
    schemes: Option<Vec<Scheme>>,
    family: Option<String>,
    kappas: Option<Vec<f64>>,
    weights: Option<WeightKind>,
    levels: Option<Vec<f64>>,
}

impl CellDraft {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "errors" => self.errors = Some(value.parse()?),
            "regressor" => self.regressor = Some(value.parse()?),
            "n" => {
                self.n = Some(value.parse().map_err(|_| Error::config(format!("`{value}` is not a sample size")))?)
            }
            "truth" => self.truth = Some(value.parse()?),
            "hypothesis" => self.hypothesis = Some(parse_hypothesis(value)?),
            "constraint" => self.constraint = Some(parse_constraint(value)?),
            "schemes" => {
                self.schemes = Some(split_top_level(value).into_iter().map(str::parse).collect::<Result<_>>()?)
            }
            "family" => self.family = Some(value.to_string()),
            "kappas" => self.kappas = Some(parse_list(value)?),
            "weights" => self.weights = Some(value.parse()?),
            "levels" => {
                let levels = parse_list(value)?;
                if let Some(q) = levels.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
                    return Err(Error::config(format!("level {q} is outside (0, 1)")));
                }
                self.levels = Some(levels);
            }
            other => return Err(Error::config(format!("unknown cell key `{other}`"))),
        }
        Ok(())
    }

    fn finish(self, id: u64) -> Result<CellSpec> {
        let n = self.n.ok_or_else(|| Error::config("cell is missing `n`"))?;
        let mut schemes = self.schemes.unwrap_or_else(|| vec![Scheme::Standard]);
        match (self.family, self.kappas) {
            (Some(f), Some(ks)) => {
                for k in ks {
                    schemes.push(Scheme::from_family(&f, Some(k))?);
                }
            }
            (None, None) => {}
            _ => return Err(Error::config("`family` and `kappas` must be given together")),
        }
        let cell = CellSpec {
            id,
            errors: self.errors.unwrap_or(ErrorKind::IidNormal),
            regressor: self.regressor.unwrap_or(RegressorKind::UnitRoot),
            n,
            truth: self.truth.unwrap_or(TrueValue::Fixed(Vector2::zeros())),
            hypothesis: self.hypothesis.unwrap_or_else(HypothesisSpec::intercept_plus_slope),
            constraint: self.constraint.unwrap_or_else(ConstraintSpec::nonnegative_slope),
            schemes,
            weights: self.weights.unwrap_or_default(),
            levels: self.levels.unwrap_or_else(|| vec![0.05, 0.10]),
        };
        cell.validate()?;
        Ok(cell)
    }
}

/// Parse an experiment file. `path` only labels diagnostics.
pub fn parse_plan(text: &str, path: &str) -> Result<ExperimentPlan> {
    let at = |line: usize, e: Error| Error::Parse {
        path: path.to_string(),
        line,
        message: match e {
            Error::InvalidConfig(m) => m,
            other => other.to_string(),
        },
    };
    let mut name = String::from("custom");
    let mut seed = None;
    let mut reps = None;
    let mut b = None;
    let mut threads = Threads::Auto;
    let mut drafts: Vec<CellDraft> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            match content {
                "[cell]" => drafts.push(CellDraft {
                    line,
                    ..CellDraft::default()
                }),
                other => return Err(at(line, Error::config(format!("unknown section `{other}`")))),
            }
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| at(line, Error::config(format!("expected `key = value`, got `{content}`"))))?;
        if let Some(cell) = drafts.last_mut() {
            cell.set(key, value).map_err(|e| at(line, e))?;
            continue;
        }
        let count = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::config(format!("`{key}` must be a non-negative integer, got `{v}`")))
        };
        match key {
            "name" => name = value.to_string(),
            "master_seed" => {
                seed = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| at(line, Error::config(format!("`{value}` is not a 64-bit seed"))))?,
                )
            }
            "reps" => reps = Some(count(value).map_err(|e| at(line, e))?),
            "bootstrap" | "b" => b = Some(count(value).map_err(|e| at(line, e))?),
            "threads" => {
                threads = if value == "auto" {
                    Threads::Auto
                } else {
                    match count(value) {
                        Ok(t) if t > 0 => Threads::Fixed(t),
                        _ => return Err(at(line, Error::config("`threads` must be `auto` or a positive count"))),
                    }
                }
            }
            other => return Err(at(line, Error::config(format!("unknown key `{other}`")))),
        }
    }

    let master_seed = seed.ok_or_else(|| at(0, Error::config("`master_seed` is required")))?;
    let reps = reps.ok_or_else(|| at(0, Error::config("`reps` is required")))?;
    let b = b.unwrap_or(crate::montecarlo::FULL_B);
    if reps == 0 || b == 0 {
        return Err(at(0, Error::config("`reps` and `bootstrap` must be at least 1")));
    }
    if drafts.is_empty() {
        return Err(at(0, Error::config("no [cell] section")));
    }
    let cells = drafts
        .into_iter()
        .enumerate()
        .map(|(id, d)| {
            let line = d.line;
            d.finish(id as u64).map_err(|e| at(line, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentPlan {
        name,
        cells,
        reps,
        b,
        master_seed,
        threads,
    })
}
