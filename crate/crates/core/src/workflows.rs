//! End-to-end experiments: the meteor-count detection table, the pulsed
//! laser divergence table and the measured-data decision procedure.

use serde::{Deserialize, Serialize};

use crate::channels::{jittered_pulse, ClassicalChannel};
use crate::distributions::{
    poisson_fold_point, poisson_truncated, ClassicalDistribution, SequenceSpace,
};
use crate::divergences::{kl, laser_example_kl, LaserParams};
use crate::error::{check_dim, domain, validation, Result};
use crate::hyptest::{check_epsilon, solve_classical};
use crate::numfmt::sig12;

/// Background meteor rates, type-I budgets and extra-meteor counts to sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeteorScenario {
    pub lambda_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub k_values: Vec<usize>,
    /// Poisson tail mass allowed beyond the fold point.
    pub fold_tol: f64,
}

impl Default for MeteorScenario {
    fn default() -> Self {
        Self {
            lambda_values: vec![3.0, 6.0],
            epsilon_values: vec![0.05, 0.01, 0.001],
            k_values: (0..=15).collect(),
            fold_tol: 1e-12,
        }
    }
}

impl MeteorScenario {
    pub fn validate(&self) -> Result<()> {
        if self
            .lambda_values
            .iter()
            .any(|l| !(l.is_finite() && *l >= 0.0))
        {
            return Err(domain("meteor rates must be finite and nonnegative"));
        }
        if self.epsilon_values.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(domain("epsilon values must lie in (0, 1)"));
        }
        if self.k_values.is_empty()
            || self.lambda_values.is_empty()
            || self.epsilon_values.is_empty()
        {
            return Err(validation(
                "scenario needs at least one rate, epsilon and k",
            ));
        }
        if !(self.fold_tol > 0.0 && self.fold_tol < 1.0) {
            return Err(domain("fold tolerance must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeteorRow {
    pub lambda: f64,
    pub epsilon: f64,
    pub k: usize,
    pub beta: f64,
}

/// Null: Poisson(λ) folded where its tail drops below `fold_tol`. Cutoff:
/// fold point plus the largest `k`, so every shifted count fits.
pub fn meteor_null(lambda: f64, fold_tol: f64, k_max: usize) -> Result<ClassicalDistribution> {
    let fold = poisson_fold_point(lambda, fold_tol)?;
    poisson_truncated(lambda, fold, fold + k_max)
}

/// `k` extra meteors on top of the natural count, folded back at the cutoff.
pub fn shift_counts(p0: &ClassicalDistribution, k: usize) -> Result<ClassicalDistribution> {
    let top = p0.dim() - 1;
    let mut mass = vec![0.0; p0.dim()];
    for (n, &m) in p0.mass().iter().enumerate() {
        mass[(n + k).min(top)] += m;
    }
    ClassicalDistribution::new(p0.space(), mass)
}

/// Rows in scenario order: λ outermost, then ε, then k.
pub fn meteor_experiment(s: &MeteorScenario) -> Result<Vec<MeteorRow>> {
    s.validate()?;
    let k_max = *s.k_values.iter().max().expect("validated nonempty");
    let mut rows = Vec::new();
    for &lambda in &s.lambda_values {
        let p0 = meteor_null(lambda, s.fold_tol, k_max)?;
        let shifted: Vec<ClassicalDistribution> = s
            .k_values
            .iter()
            .map(|&k| shift_counts(&p0, k))
            .collect::<Result<_>>()?;
        for &epsilon in &s.epsilon_values {
            for (&k, p1) in s.k_values.iter().zip(&shifted) {
                let beta = solve_classical(&p0, p1, epsilon)?.beta;
                rows.push(MeteorRow {
                    lambda,
                    epsilon,
                    k,
                    beta,
                });
            }
        }
    }
    Ok(rows)
}

pub fn meteor_csv(rows: &[MeteorRow]) -> String {
    let mut out = String::from("lambda,epsilon,k,beta\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            sig12(r.lambda),
            sig12(r.epsilon),
            r.k,
            sig12(r.beta)
        ));
    }
    out
}

/// Laser model settings shared by every power in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserSetup {
    pub g: usize,
    pub s: usize,
    pub c: usize,
    pub q: f64,
    pub delta: f64,
    pub n: usize,
}

impl LaserSetup {
    pub fn params(&self, power: usize) -> LaserParams {
        LaserParams {
            power,
            c: self.c,
            s: self.s,
            g: self.g,
            q: self.q,
            delta: self.delta,
            n: self.n,
        }
    }

    /// Loss, then background, then uniform mixing, all on `n`-slot sequences.
    pub fn channel(&self) -> Result<ClassicalChannel> {
        let dim = SequenceSpace::new(self.g + 1, self.n)?.dim();
        ClassicalChannel::chain(&[
            ClassicalChannel::loss_map(self.c, self.g).lift(self.n)?,
            ClassicalChannel::saturating_add_map(self.s, self.g)?.lift(self.n)?,
            ClassicalChannel::uniform_mix_map(self.delta, dim)?,
        ])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserRow {
    pub power: usize,
    pub kl_bits: f64,
    pub reference_bits: f64,
}

/// `D(P0‖P1)` with `P0` the received no-pulse sequence and `P1` the received
/// jittered pulse, next to the closed form.
pub fn laser_experiment(setup: &LaserSetup, powers: &[usize]) -> Result<Vec<LaserRow>> {
    for &p in powers {
        setup.params(p).validate()?;
    }
    let channel = setup.channel()?;
    let space = SequenceSpace::new(setup.g + 1, setup.n)?;
    let p0 = channel.apply(&ClassicalDistribution::point_mass(space, 0)?)?;
    powers
        .iter()
        .map(|&power| {
            let p1 = channel.apply(&jittered_pulse(power, setup.q, setup.n, setup.g)?)?;
            Ok(LaserRow {
                power,
                kl_bits: kl(&p0, &p1)?.bits(),
                reference_bits: laser_example_kl(&setup.params(power))?.bits(),
            })
        })
        .collect()
}

pub fn laser_csv(rows: &[LaserRow]) -> String {
    let mut out = String::from("power,kl_bits,reference_bits\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.power,
            sig12(r.kl_bits),
            sig12(r.reference_bits)
        ));
    }
    out
}

/// Observed outcome `d`, the null and candidate signal models over the same
/// outcome space.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasuredDataCase {
    observed: usize,
    null: ClassicalDistribution,
    models: Vec<ClassicalDistribution>,
    epsilon: f64,
}

impl MeasuredDataCase {
    /// Rejects models giving `d` zero probability.
    pub fn new(
        observed: usize,
        null: ClassicalDistribution,
        models: Vec<ClassicalDistribution>,
        epsilon: f64,
    ) -> Result<Self> {
        check_epsilon(epsilon)?;
        null.require_normalized("null distribution")?;
        if models.is_empty() {
            return Err(validation("at least one model is required"));
        }
        if observed >= null.dim() {
            return Err(validation(format!(
                "observed outcome {observed} outside 0..{}",
                null.dim()
            )));
        }
        for (i, q) in models.iter().enumerate() {
            check_dim(null.dim(), q.dim())?;
            if q.mass()[observed] <= 0.0 {
                return Err(validation(format!(
                    "model {i} gives the observed outcome probability zero"
                )));
            }
        }
        Ok(Self {
            observed,
            null,
            models,
            epsilon,
        })
    }

    pub fn observed(&self) -> usize {
        self.observed
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn models(&self) -> &[ClassicalDistribution] {
        &self.models
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `d` lies in the kernel of the optimal test.
    NotEvidence,
    /// The test accepted the null on `d`.
    AcceptNull,
    /// The test rejected the null on `d`.
    RejectNull,
    /// A fractional acceptance weight and no random value was supplied.
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelVerdict {
    pub model: usize,
    /// `⟨d|A|d⟩` for the optimal test against this model.
    pub acceptance: f64,
    pub kernel: bool,
    pub beta: f64,
    pub verdict: Verdict,
}

/// Solves the optimal test against each model and applies it to `d`. A
/// fractional weight `w` accepts the null iff `u < w`, with `u ∈ [0, 1)`
/// supplied by the caller.
pub fn analyze_measured_data(case: &MeasuredDataCase, u: Option<f64>) -> Result<Vec<ModelVerdict>> {
    if let Some(u) = u {
        if !(0.0..1.0).contains(&u) {
            return Err(domain(format!("random value must lie in [0, 1), got {u}")));
        }
    }
    case.models
        .iter()
        .enumerate()
        .map(|(model, q)| {
            let cert = solve_classical(&case.null, q, case.epsilon)?;
            let w = cert.decision.weights().expect("classical weights")[case.observed];
            let kernel = w.abs() <= 1e-12;
            let verdict = if kernel {
                Verdict::NotEvidence
            } else if w >= 1.0 {
                Verdict::AcceptNull
            } else {
                match u {
                    Some(u) if u < w => Verdict::AcceptNull,
                    Some(_) => Verdict::RejectNull,
                    None => Verdict::Undecided,
                }
            };
            Ok(ModelVerdict {
                model,
                acceptance: w,
                kernel,
                beta: cert.beta,
                verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scenario_shape() {
        let s = MeteorScenario {
            k_values: vec![0, 4],
            ..Default::default()
        };
        let rows = meteor_experiment(&s).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 2);
        assert_eq!((rows[0].lambda, rows[0].epsilon, rows[0].k), (3.0, 0.05, 0));
        assert_eq!((rows[1].lambda, rows[1].k), (3.0, 4));
        assert!((rows[0].beta - 0.95).abs() < 1e-9);
        assert!(meteor_csv(&rows).starts_with("lambda,epsilon,k,beta\n3,0.05,0,0.95"));
    }

    #[test]
    fn scenario_validation() {
        let bad = MeteorScenario {
            epsilon_values: vec![0.0],
            ..Default::default()
        };
        assert!(meteor_experiment(&bad).is_err());
        let bad = MeteorScenario {
            k_values: vec![],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shift_keeps_mass() {
        let p0 = meteor_null(3.0, 1e-12, 5).unwrap();
        let p1 = shift_counts(&p0, 5).unwrap();
        assert!((p1.total() - 1.0).abs() < 1e-12);
        assert_eq!(p1.mass()[..5], [0.0; 5]);
        assert_eq!(p1.mass()[5], p0.mass()[0]);
    }

    #[test]
    fn laser_rows_are_flat() {
        let setup = LaserSetup {
            g: 6,
            s: 1,
            c: 1,
            q: 0.2,
            delta: 0.1,
            n: 3,
        };
        let rows = laser_experiment(&setup, &[1, 2, 3, 4, 5]).unwrap();
        assert_eq!(rows[0].kl_bits, 0.0);
        for r in &rows[1..] {
            assert!((r.kl_bits - rows[1].kl_bits).abs() < 1e-12);
            assert!((r.kl_bits - r.reference_bits).abs() < 1e-10);
        }
        assert!(laser_experiment(&setup, &[6]).is_err());
        assert!(laser_csv(&rows).starts_with("power,kl_bits,reference_bits\n1,0,0\n"));
    }

    fn dist(v: &[f64]) -> ClassicalDistribution {
        ClassicalDistribution::from_vec(v.to_vec()).unwrap()
    }

    #[test]
    fn analysis_verdicts() {
        let null = dist(&[0.6, 0.3, 0.1]);
        // Model puts most mass on outcome 2, the highest likelihood ratio.
        let q = dist(&[0.05, 0.15, 0.8]);
        let case = MeasuredDataCase::new(2, null.clone(), vec![q, null.clone()], 0.1).unwrap();
        let v = analyze_measured_data(&case, Some(0.5)).unwrap();
        assert!(v[0].kernel);
        assert_eq!(v[0].verdict, Verdict::NotEvidence);
        // Against the null itself every outcome is accepted with weight 1 − ε.
        assert!((v[1].acceptance - 0.9).abs() < 1e-12);
        assert_eq!(v[1].verdict, Verdict::AcceptNull);
        let v = analyze_measured_data(&case, Some(0.95)).unwrap();
        assert_eq!(v[1].verdict, Verdict::RejectNull);
        assert_eq!(
            analyze_measured_data(&case, None).unwrap()[1].verdict,
            Verdict::Undecided
        );
    }

    #[test]
    fn full_weight_is_deterministic() {
        let null = dist(&[0.6, 0.3, 0.1]);
        let q = dist(&[0.05, 0.15, 0.8]);
        let case = MeasuredDataCase::new(0, null, vec![q], 0.1).unwrap();
        for u in [0.0, 0.5, 0.999] {
            let v = analyze_measured_data(&case, Some(u)).unwrap();
            assert_eq!(v[0].acceptance, 1.0);
            assert_eq!(v[0].verdict, Verdict::AcceptNull);
        }
    }

    #[test]
    fn zero_probability_model_rejected() {
        let null = dist(&[0.5, 0.5]);
        assert!(MeasuredDataCase::new(1, null, vec![dist(&[1.0, 0.0])], 0.1).is_err());
    }
}
