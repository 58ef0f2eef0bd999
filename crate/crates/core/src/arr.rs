//! Adaptive randomized rounding.
//!
//! Each trial perturbs the current seed, rounds it to a connected partition
//! and scores it with the conditional objective. Between trials the seed is
//! smoothed toward the best plan found so far at a rate that slows as the
//! seed approaches an integer point, and it is reset to the centroid with a
//! probability that grows while the same best plan keeps reappearing.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{conditional_objective, is_feasible, Plan, ProblemInstance, Score};
use crate::rounding::{round_to_plan, FractionalSeed};

/// How a seed entry `y` is randomized before rounding.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PerturbationMode {
    /// `y * U[0, 1]`, i.e. uniform on `[0, y]`.
    #[default]
    Down,
    /// `y + (1 - y) * U[0, 1]`, i.e. uniform on `[y, 1]`.
    Up,
}

impl FromStr for PerturbationMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "down" => Ok(Self::Down),
            "up" => Ok(Self::Up),
            other => Err(format!("unknown perturbation mode `{other}` (expected `down` or `up`)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArrConfig {
    pub max_trials: usize,
    pub mode: PerturbationMode,
    /// Run length at which the reset probability reaches the seed's RMSD.
    pub reset_run_divisor: usize,
    pub rng_seed: u64,
    /// Independent runs; restart `r` draws from stream `rng_seed + r`.
    pub restarts: usize,
    /// Count a relabelled copy of the best plan as "the same plan" when
    /// tracking stagnation.
    pub relabel_invariant_stagnation: bool,
}

impl Default for ArrConfig {
    fn default() -> Self {
        Self {
            max_trials: 1000,
            mode: PerturbationMode::Down,
            reset_run_divisor: 20,
            rng_seed: 0,
            restarts: 1,
            relabel_invariant_stagnation: false,
        }
    }
}

impl ArrConfig {
    fn validate(&self) -> Result<()> {
        let check = |name, value: usize| {
            if value == 0 {
                Err(Error::OutOfRange {
                    name,
                    value: value.to_string(),
                    range: ">= 1",
                })
            } else {
                Ok(())
            }
        };
        check("max_trials", self.max_trials)?;
        check("reset_run_divisor", self.reset_run_divisor)?;
        check("restarts", self.restarts)
    }
}

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct ArrState {
    pub seed: FractionalSeed,
    pub best_plan: Plan,
    pub best_score: Score,
    pub n_local: usize,
    pub trial_index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Objective of the plan rounded in this trial.
    pub score: Score,
    pub best_score: Score,
    /// RMSD of the (unperturbed) seed used in this trial, in millionths.
    pub rmsd_micros: u32,
    pub reset: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrialTrace {
    pub records: Vec<TrialRecord>,
    /// First trial whose rounded plan was feasible.
    pub first_feasible_trial: Option<usize>,
}

impl TrialTrace {
    /// Best score never increases and, once a feasible plan has been seen,
    /// the best score stays below `M`.
    pub fn is_monotone(&self, big_m: u64) -> bool {
        let m = Score::from(i128::from(big_m));
        let nonincreasing = self.records.windows(2).all(|w| w[1].best_score <= w[0].best_score);
        let dominated = match self.first_feasible_trial {
            Some(t) => self.records[t..].iter().all(|r| r.best_score < m),
            None => true,
        };
        nonincreasing && dominated
    }

    pub fn resets(&self) -> usize {
        self.records.iter().filter(|r| r.reset).count()
    }
}

/// Winner across restarts plus every restart's trace.
#[derive(Clone, Debug)]
pub struct ArrOutcome {
    pub plan: Plan,
    pub score: Score,
    pub feasible: bool,
    pub best_restart: usize,
    pub traces: Vec<TrialTrace>,
}

impl ArrOutcome {
    pub fn trace(&self) -> &TrialTrace {
        &self.traces[self.best_restart]
    }

    pub fn total_trials(&self) -> usize {
        self.traces.iter().map(|t| t.records.len()).sum()
    }
}

pub fn perturb<R: Rng>(seed: &FractionalSeed, rng: &mut R, mode: PerturbationMode) -> FractionalSeed {
    let mut out = seed.clone();
    perturb_into(seed, rng, mode, &mut out);
    out
}

fn perturb_into<R: Rng>(seed: &FractionalSeed, rng: &mut R, mode: PerturbationMode, out: &mut FractionalSeed) {
    let dst = out.values_mut();
    for (o, &y) in dst.iter_mut().zip(seed.values()) {
        let pi: f64 = rng.gen();
        *o = match mode {
            PerturbationMode::Down => y * pi,
            PerturbationMode::Up => y + (1.0 - y) * pi,
        };
    }
}

/// Root-mean-square deviation of the entries from 0.5.
pub fn rmsd(seed: &FractionalSeed) -> f64 {
    let values = seed.values();
    if values.is_empty() {
        return 0.0;
    }
    let sum: f64 = values.iter().map(|&y| (y - 0.5) * (y - 0.5)).sum();
    (sum / values.len() as f64).sqrt()
}

/// Smoothing rate `1 / (1 + e^{4 r})` for a seed at RMSD `r`.
pub fn decelerator(r: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&r) {
        return Err(Error::OutOfRange {
            name: "rmsd",
            value: r.to_string(),
            range: "[0, 0.5]",
        });
    }
    Ok(1.0 / (1.0 + (4.0 * r).exp()))
}

/// `(1 - alpha) * prev + alpha * indicator(best)`.
pub fn smooth_seed(prev: &FractionalSeed, best: &Plan, alpha: f64) -> Result<FractionalSeed> {
    let mut next = prev.clone();
    smooth_in_place(&mut next, best, alpha)?;
    Ok(next)
}

fn smooth_in_place(seed: &mut FractionalSeed, best: &Plan, alpha: f64) -> Result<()> {
    if seed.node_count() != best.node_count() || seed.k() != best.k() {
        return Err(Error::DimensionMismatch {
            expected: seed.node_count() * seed.k(),
            found: best.node_count() * best.k(),
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha.to_string(),
            range: "(0, 1)",
        });
    }
    let k = seed.k();
    for (i, y) in seed.values_mut().iter_mut().enumerate() {
        let target = if best.district_of(i / k) == i % k { 1.0 } else { 0.0 };
        *y = ((1.0 - alpha) * *y + alpha * target).clamp(0.0, 1.0);
    }
    Ok(())
}

/// `min(n_local / divisor, 1) * rmsd`.
pub fn reset_probability(n_local: usize, seed_rmsd: f64, divisor: usize) -> f64 {
    let ramp = (n_local as f64 / divisor.max(1) as f64).min(1.0);
    ramp * seed_rmsd
}

/// Runs `cfg.restarts` independent searches in parallel and keeps the best;
/// score ties go to the lower restart index.
pub fn run_arr(inst: &ProblemInstance, cfg: &ArrConfig) -> Result<ArrOutcome> {
    cfg.validate()?;
    let runs: Vec<(ArrState, TrialTrace)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_single(inst, cfg, cfg.rng_seed.wrapping_add(r as u64)))
        .collect::<Result<_>>()?;
    let best_restart = runs
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.0.best_score.cmp(&b.0.best_score).then(i.cmp(j)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let (state, _) = &runs[best_restart];
    let plan = state.best_plan.clone();
    let score = state.best_score;
    let feasible = is_feasible(inst, &plan);
    Ok(ArrOutcome {
        plan,
        score,
        feasible,
        best_restart,
        traces: runs.into_iter().map(|(_, t)| t).collect(),
    })
}

/// One sequential search from the centroid using the given stream seed.
pub fn run_single(inst: &ProblemInstance, cfg: &ArrConfig, stream: u64) -> Result<(ArrState, TrialTrace)> {
    cfg.validate()?;
    let g = inst.graph();
    let (n, k) = (inst.node_count(), inst.k());
    let mut rng = ChaCha8Rng::seed_from_u64(stream);
    let same = |a: &Plan, b: &Plan| {
        if cfg.relabel_invariant_stagnation {
            a.canonical() == b.canonical()
        } else {
            a == b
        }
    };

    let mut perturbed = FractionalSeed::centroid(n, k);
    let mut seed = FractionalSeed::centroid(n, k);
    perturb_into(&seed, &mut rng, cfg.mode, &mut perturbed);
    let first = round_to_plan(&perturbed, g, k)?;
    let first_score = conditional_objective(inst, &first);
    let mut trace = TrialTrace::default();
    if is_feasible(inst, &first) {
        trace.first_feasible_trial = Some(0);
    }
    trace.records.push(TrialRecord {
        trial: 0,
        score: first_score,
        best_score: first_score,
        rmsd_micros: 0,
        reset: false,
    });
    let mut state = ArrState {
        seed: FractionalSeed::centroid(n, k),
        best_plan: first,
        best_score: first_score,
        n_local: 0,
        trial_index: 0,
    };

    for t in 1..cfg.max_trials {
        let alpha = decelerator(rmsd(&seed).min(0.5))?;
        smooth_in_place(&mut seed, &state.best_plan, alpha)?;
        perturb_into(&seed, &mut rng, cfg.mode, &mut perturbed);
        let plan = round_to_plan(&perturbed, g, k)?;

        let score = if plan == state.best_plan {
            state.best_score
        } else {
            conditional_objective(inst, &plan)
        };
        if trace.first_feasible_trial.is_none() && is_feasible(inst, &plan) {
            trace.first_feasible_trial = Some(t);
        }
        if score < state.best_score {
            state.best_plan = plan;
            state.best_score = score;
            state.n_local = 0;
        } else if same(&plan, &state.best_plan) {
            state.n_local += 1;
        }

        let seed_rmsd = rmsd(&seed);
        let p_reset = reset_probability(state.n_local, seed_rmsd, cfg.reset_run_divisor);
        let reset = rng.gen::<f64>() < p_reset;
        if reset {
            seed = FractionalSeed::centroid(n, k);
            state.n_local = 0;
        }
        trace.records.push(TrialRecord {
            trial: t,
            score,
            best_score: state.best_score,
            rmsd_micros: (seed_rmsd * 1e6).round() as u32,
            reset,
        });
        state.trial_index = t;
    }
    state.seed = seed;
    Ok((state, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::AdjacencyGraph;
    use crate::model::{make_instance, total_score_phase2, Deviation};

    const E: f64 = std::f64::consts::E;

    #[test]
    fn perturbation_fixed_points() {
        let seed = FractionalSeed::new(1, 2, vec![0.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let down = perturb(&seed, &mut rng, PerturbationMode::Down);
            assert_eq!(down.get(0, 0), 0.0);
            let up = perturb(&seed, &mut rng, PerturbationMode::Up);
            assert_eq!(up.get(0, 1), 1.0);
            assert!(up.get(0, 0) >= 0.0 && up.get(0, 0) <= 1.0);
        }
    }

    #[test]
    fn down_mode_mean_of_half() {
        let seed = FractionalSeed::new(1, 1, vec![0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let draws = 1_000_000;
        let mean = (0..draws)
            .map(|_| perturb(&seed, &mut rng, PerturbationMode::Down).get(0, 0))
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 0.25).abs() < 0.002, "{mean}");
    }

    #[test]
    fn down_mode_is_uniform_below_entry() {
        // One-sample Kolmogorov-Smirnov against U[0, y] at significance 0.001.
        let y = 0.37;
        let seed = FractionalSeed::new(1, 1, vec![y]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n)
            .map(|_| perturb(&seed, &mut rng, PerturbationMode::Down).get(0, 0))
            .collect();
        draws.sort_by(f64::total_cmp);
        let stat = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let cdf = x / y;
                (cdf - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - cdf).abs())
            })
            .fold(0.0, f64::max);
        let critical = (-(0.001f64 / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt();
        assert!(stat < critical, "D = {stat}, critical {critical}");
        assert!(draws.iter().all(|&x| (0.0..=y).contains(&x)));
    }

    #[test]
    fn rmsd_values() {
        assert_eq!(rmsd(&FractionalSeed::centroid(5, 3)), 0.0);
        let plan = Plan::new(3, vec![0, 2, 1, 1]).unwrap();
        assert_eq!(rmsd(&FractionalSeed::indicator(&plan)), 0.5);
        let two = FractionalSeed::new(1, 2, vec![0.5, 1.0]).unwrap();
        // Squared deviations 0 and 0.25 over two entries.
        assert!((rmsd(&two) - 0.125f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn decelerator_values() {
        assert_eq!(decelerator(0.0).unwrap(), 0.5);
        assert!((decelerator(0.5).unwrap() - 1.0 / (1.0 + E * E)).abs() < 1e-12);
        assert!((decelerator(0.5).unwrap() - 0.119203).abs() < 1e-6);
        assert!((decelerator(0.25).unwrap() - 0.268941).abs() < 1e-6);
        assert!(decelerator(-0.01).is_err());
        assert!(decelerator(0.51).is_err());
    }

    #[test]
    fn smoothing() {
        let plan = Plan::new(2, vec![0, 1]).unwrap();
        let ind = FractionalSeed::indicator(&plan);
        assert_eq!(smooth_seed(&ind, &plan, 0.3).unwrap(), ind);

        let mut s = FractionalSeed::centroid(2, 2);
        let mut gap = 0.5;
        for _ in 0..6 {
            s = smooth_seed(&s, &plan, 0.5).unwrap();
            gap /= 2.0;
            assert_eq!(1.0 - s.get(0, 0), gap);
            assert_eq!(s.get(0, 1), gap);
        }
        let c = smooth_seed(&FractionalSeed::centroid(2, 2), &plan, 0.5).unwrap();
        assert_eq!(c.get(0, 0), 0.75);

        assert!(smooth_seed(&FractionalSeed::centroid(3, 2), &plan, 0.5).is_err());
        assert!(smooth_seed(&FractionalSeed::centroid(2, 2), &plan, 1.0).is_err());
        assert!(smooth_seed(&FractionalSeed::centroid(2, 2), &plan, 0.0).is_err());
    }

    #[test]
    fn smoothing_from_centroid_has_closed_form_rmsd() {
        let plan = Plan::new(3, vec![0, 1, 2, 2, 0]).unwrap();
        for alpha in [0.05, 0.119, 0.3, 0.5, 0.9] {
            let s = smooth_seed(&FractionalSeed::centroid(5, 3), &plan, alpha).unwrap();
            assert!((rmsd(&s) - alpha / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reset_probabilities() {
        assert_eq!(reset_probability(0, 0.4, 20), 0.0);
        assert!((reset_probability(20, 0.3, 20) - 0.3).abs() < 1e-15);
        assert!((reset_probability(35, 0.3, 20) - 0.3).abs() < 1e-15);
        assert!((reset_probability(10, 0.4, 20) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn single_district_run() {
        let g = AdjacencyGraph::new(vec![1, 2, 3, 4], [(0, 1), (1, 2), (2, 3)]).unwrap();
        let inst = make_instance(g, 1, Deviation::percent(5).unwrap()).unwrap();
        let cfg = ArrConfig {
            max_trials: 50,
            ..ArrConfig::default()
        };
        let out = run_arr(&inst, &cfg).unwrap();
        assert_eq!(out.plan.assignment(), &[0, 0, 0, 0]);
        assert!(out.feasible);
        assert_eq!(out.score, Score::from(i128::from(total_score_phase2(&inst, &out.plan).unwrap())));
        assert_eq!(out.score, Score::from(4));
        assert_eq!(out.trace().first_feasible_trial, Some(0));
        assert_eq!(out.trace().records.len(), 50);
    }

    #[test]
    fn path_finds_unique_feasible_cut() {
        let g = AdjacencyGraph::new(vec![10, 20, 30], [(0, 1), (1, 2)]).unwrap();
        let inst = make_instance(g, 2, Deviation::percent(5).unwrap()).unwrap();
        let cfg = ArrConfig {
            max_trials: 200,
            rng_seed: 42,
            ..ArrConfig::default()
        };
        let out = run_arr(&inst, &cfg).unwrap();
        assert_eq!(out.plan.canonical().assignment(), &[0, 0, 1]);
        assert_eq!(out.score, Score::from(1));
        assert!(out.trace().is_monotone(inst.big_m()));
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let mut edges = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                let u = r * 5 + c;
                if c < 4 {
                    edges.push((u, u + 1));
                }
                if r < 4 {
                    edges.push((u, u + 5));
                }
            }
        }
        let g = AdjacencyGraph::new(vec![1; 25], edges).unwrap();
        let inst = make_instance(g, 3, Deviation::percent(20).unwrap()).unwrap();
        let cfg = ArrConfig {
            max_trials: 300,
            rng_seed: 5,
            restarts: 3,
            ..ArrConfig::default()
        };
        let a = run_arr(&inst, &cfg).unwrap();
        let b = run_arr(&inst, &cfg).unwrap();
        assert_eq!(a.plan, b.plan);
        assert_eq!(a.traces, b.traces);
        assert_eq!(a.total_trials(), 900);
        for t in &a.traces {
            assert!(t.is_monotone(inst.big_m()));
        }
        let other = run_arr(&inst, &ArrConfig { rng_seed: 6, ..cfg }).unwrap();
        assert_ne!(a.traces, other.traces);
    }

    #[test]
    fn config_validation() {
        let g = AdjacencyGraph::new(vec![1, 1], [(0, 1)]).unwrap();
        let inst = make_instance(g, 1, Deviation::percent(5).unwrap()).unwrap();
        for cfg in [
            ArrConfig { max_trials: 0, ..ArrConfig::default() },
            ArrConfig { reset_run_divisor: 0, ..ArrConfig::default() },
            ArrConfig { restarts: 0, ..ArrConfig::default() },
        ] {
            assert!(run_arr(&inst, &cfg).is_err());
        }
        assert_eq!("down".parse::<PerturbationMode>(), Ok(PerturbationMode::Down));
        assert_eq!("up".parse::<PerturbationMode>(), Ok(PerturbationMode::Up));
        assert!("sideways".parse::<PerturbationMode>().is_err());
    }
}
