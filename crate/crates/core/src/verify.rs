//! Self-check suites comparing the fast routes against direct oracles on
//! seeded random instances.

use crate::error::{arg_err, Error, Result};
use crate::kronecker::ImplicitKronecker;
use crate::leverage::{leverage_scores, ridge_scores, ridge_scores_pinv, RidgeBasis};
use crate::linalg::{compact_svd, DenseMatrix};
use crate::missing::{
    exact_scores_after_removal, kronecker_removal_coefficient, score_upper_bound_after_removal,
    sum_squared_cross_bound, RowRemovalContext,
};
use crate::rng::{derive_seed, rng_from_seed, SketchRng};
use crate::sampler::{build_augmented, conservative_beta_prime};
use crate::sketch::{sample_count, verify_structural_conditions, RowSketch};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Leverage,
    Kronecker,
    Missing,
    Structural,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Leverage, Suite::Kronecker, Suite::Missing, Suite::Structural];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Leverage => "leverage",
            Suite::Kronecker => "kronecker",
            Suite::Missing => "missing",
            Suite::Structural => "structural",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// Outcome of one property over all instances of a suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub instances: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub seconds: f64,
    pub checks: Vec<CheckResult>,
}

/// Running maximum of an error, compared against `tolerance` at the end.
struct Tracker {
    name: &'static str,
    tolerance: f64,
    worst: f64,
    instances: usize,
}

impl Tracker {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, worst: 0.0, instances: 0 }
    }

    fn record(&mut self, err: f64) {
        self.instances += 1;
        // NaN counts as a failure
        if err.is_nan() || err > self.worst {
            self.worst = if err.is_nan() { f64::INFINITY } else { err };
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            instances: self.instances,
            worst: self.worst,
            tolerance: self.tolerance,
            passed: self.worst <= self.tolerance,
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_matrix(rows: usize, cols: usize, rng: &mut SketchRng) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0)).expect("finite entries")
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let t0 = Instant::now();
    let mut rng = rng_from_seed(derive_seed(seed, suite as u64));
    let checks = match suite {
        Suite::Leverage => leverage_suite(&mut rng)?,
        Suite::Kronecker => kronecker_suite(&mut rng)?,
        Suite::Missing => missing_suite(&mut rng)?,
        Suite::Structural => structural_suite(&mut rng)?,
    };
    Ok(SuiteReport {
        suite,
        seed,
        passed: checks.iter().all(|c| c.passed),
        seconds: t0.elapsed().as_secs_f64(),
        checks,
    })
}

pub fn run_suites(names: &[Suite], seed: u64) -> Result<Vec<SuiteReport>> {
    names.iter().map(|&s| run_suite(s, seed)).collect()
}

const LAMBDAS: [f64; 4] = [0.0, 0.01, 0.5, 2.0];

fn leverage_suite(rng: &mut SketchRng) -> Result<Vec<CheckResult>> {
    let mut forms = Tracker::new("svd form equals pseudoinverse form", 1e-9);
    let mut deff = Tracker::new("effective dimension equals spectral sum", 1e-9);
    let mut aug = Tracker::new("ridge scores equal leverage of augmented rows", 1e-9);
    for t in 0..200 {
        let lambda = LAMBDAS[t % LAMBDAS.len()];
        let d = rng.random_range(1..=8);
        let n = rng.random_range(1..=50);
        let a = random_matrix(n, d, rng);
        let fast = ridge_scores(&a, lambda)?;
        forms.record(max_abs_diff(&fast.scores, &ridge_scores_pinv(&a, lambda)?.scores));

        let sigma = compact_svd(&a)?.singular_values;
        let spectral: f64 = sigma.iter().map(|s| s * s / (s * s + lambda)).sum();
        deff.record((fast.l1_norm() - spectral).abs());

        let a_bar = a.vstack(&DenseMatrix::identity(d).scaled(lambda.sqrt()))?;
        let lev = leverage_scores(&a_bar)?;
        aug.record(max_abs_diff(&fast.scores, &lev.scores[..n]));
    }
    Ok(vec![forms.finish(), deff.finish(), aug.finish()])
}

/// Random factor shapes with `Π I ≤ 500` rows and `Π R ≤ 36` columns.
fn random_factors(rng: &mut SketchRng) -> Vec<DenseMatrix> {
    let (order, max_rows, max_rank) = if rng.random_bool(0.5) { (2, 22, 6) } else { (3, 7, 3) };
    (0..order)
        .map(|_| {
            let i = rng.random_range(2..=max_rows);
            let r = rng.random_range(1..=max_rank.min(i));
            random_matrix(i, r, rng)
        })
        .collect()
}

fn kronecker_suite(rng: &mut SketchRng) -> Result<Vec<CheckResult>> {
    let mut classical = Tracker::new("factored leverage scores equal materialized", 1e-9);
    let mut cross = Tracker::new("factored ridge cross scores equal materialized", 1e-9);
    for t in 0..50 {
        let kron = ImplicitKronecker::new(random_factors(rng))?;
        let full = kron.materialize(500 * 36)?;
        let exact = leverage_scores(&full)?;
        let factored = (0..kron.nrows())
            .map(|i| kron.factored_leverage_score(&kron.split_index(i)))
            .collect::<Result<Vec<_>>>()?;
        classical.record(max_abs_diff(&factored, &exact.scores));

        let lambda = [0.01, 0.5, 2.0][t % 3];
        let basis = RidgeBasis::new(&full, lambda)?;
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let i = rng.random_range(0..kron.nrows());
            let j = if rng.random_bool(0.3) { i } else { rng.random_range(0..kron.nrows()) };
            let got = kron.ridge_cross_score(&kron.split_index(i), &kron.split_index(j), lambda)?;
            worst = worst.max((got - basis.cross(i, j)).abs());
        }
        cross.record(worst);
    }
    Ok(vec![classical.finish(), cross.finish()])
}

fn missing_suite(rng: &mut SketchRng) -> Result<Vec<CheckResult>> {
    let mut update = Tracker::new("updated scores equal recomputation", 1e-8);
    let mut bound = Tracker::new("bound minus updated score, negated", 1e-12);
    let mut monotone = Tracker::new("score decrease after removal", 1e-12);
    let mut squared = Tracker::new("sum of squared cross scores above score", 1e-12);
    let mut equality = Tracker::new("sum of squared cross scores at zero lambda", 1e-10);
    let mut coef = Tracker::new("inverse spectral gap above Kronecker coefficient", 1e-9);
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let n = rng.random_range(d + 2..=24);
        let lambda = 10f64.powf(rng.random_range(-2.0..0.5));
        let a = random_matrix(n, d, rng);
        let m = rng.random_range(1..n);
        let removed = rand::seq::index::sample(rng, n, m).into_vec();
        let ctx = RowRemovalContext::new(a.clone(), &removed, lambda)?;
        let exact = exact_scores_after_removal(&ctx)?;
        let direct = ridge_scores(&ctx.reduced_matrix()?, lambda)?;
        update.record(max_abs_diff(&exact.scores, &direct.scores));
        let ub = score_upper_bound_after_removal(&ctx)?;
        let shortfall = exact.scores.iter().zip(&ub.scores).map(|(e, b)| e - b).fold(0.0, f64::max);
        bound.record(shortfall);
        let drop = ctx.kept_scores().iter().zip(&exact.scores).map(|(o, e)| o - e).fold(0.0, f64::max);
        monotone.record(drop);

        let i = rng.random_range(0..n);
        let base = ridge_scores(&a, lambda)?.scores[i];
        squared.record((sum_squared_cross_bound(&a, lambda, i)? - base).max(0.0));
        let base0 = leverage_scores(&a)?.scores[i];
        equality.record((sum_squared_cross_bound(&a, 0.0, i)? - base0).abs());
    }
    for _ in 0..20 {
        let factors = vec![random_matrix(rng.random_range(2..=5), 2, rng), random_matrix(rng.random_range(2..=5), 2, rng)];
        let kron = ImplicitKronecker::new(factors)?;
        let lambda = 10f64.powf(rng.random_range(-1.5..0.5));
        let c = kronecker_removal_coefficient(&kron, lambda)?;
        let full = kron.materialize(1 << 16)?;
        let m = rng.random_range(1..full.rows());
        let removed = rand::seq::index::sample(rng, full.rows(), m).into_vec();
        let ctx = RowRemovalContext::new(full, &removed, lambda)?;
        let inv = 1.0 / (1.0 - ctx.removed_block_max_eigenvalue()?);
        coef.record(((inv - c) / c).max(0.0));
    }
    Ok(vec![
        update.finish(),
        bound.finish(),
        monotone.finish(),
        squared.finish(),
        equality.finish(),
        coef.finish(),
    ])
}

fn structural_suite(rng: &mut SketchRng) -> Result<Vec<CheckResult>> {
    let (n, d, lambda, epsilon, delta) = (30, 3, 0.1, 0.1, 0.1);
    let mut identity = Tracker::new("identity sketch deviation", 1e-9);
    let mut fraction = Tracker::new("fraction of sketches violating the first condition above delta", 0.0);
    let trials = 40;
    let mut failures = 0;
    for t in 0..trials {
        let a = random_matrix(n, d, rng);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if t < 5 {
            let c = verify_structural_conditions(&a, &b, &RowSketch::identity(n + d), lambda, epsilon)?;
            identity.record((c.cond1 - 1.0).abs().max(c.cond2));
        }
        let scores = leverage_scores(&a)?;
        let sampler = build_augmented(&scores.scores, n, d, 0.0)?;
        let s = sample_count(conservative_beta_prime(1.0, d, 0.0), d, epsilon, delta)?;
        let sketch = RowSketch::draw(&sampler, s, rng);
        let c = verify_structural_conditions(&a, &b, &sketch, lambda, epsilon)?;
        if c.cond1 < std::f64::consts::FRAC_1_SQRT_2 {
            failures += 1;
        }
    }
    fraction.record((failures as f64 / trials as f64 - delta).max(0.0));
    Ok(vec![identity.finish(), fraction.finish()])
}

/// Parses a comma-separated list of suite names, or `all`.
pub fn parse_suites(spec: &str) -> Result<Vec<Suite>> {
    if spec == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    let out = spec.split(',').map(|s| s.trim().parse()).collect::<Result<Vec<Suite>>>()?;
    if out.is_empty() {
        return arg_err("no suites selected");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!(parse_suites("all").unwrap().len(), 4);
        assert_eq!(parse_suites("missing,leverage").unwrap(), vec![Suite::Missing, Suite::Leverage]);
    }

    #[test]
    fn every_suite_passes() {
        for s in Suite::ALL {
            let report = run_suite(s, 7).unwrap();
            assert!(report.passed, "{report:?}");
        }
    }
}
