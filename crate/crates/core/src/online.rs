//! Online allocators and the round-by-round driver.
//!
//! Randomness comes from one ChaCha8 stream per `(seed, trial)`: the seed
//! picks the key and the trial number picks the stream, so trial `k` draws
//! the same numbers no matter which other trials run.

use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::AdaptiveStateMachine;
use crate::cisef::{compute_cisef, CisefOptions, CisefOutcome};
use crate::error::{Error, Result};
use crate::instance::{scale_values, IntegralAllocation, Lift, OfflineInstance, TypeDistribution};
use crate::market::{solve_eg, MarketSolution};
use crate::scalar::Scalar;

/// Point-mass detection threshold for the utilitarian allocator.
pub const POINT_MASS_TOL: f64 = 1e-12;
/// Allowed deviation of a precomputed column sum from 1.
pub const COLUMN_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    Utilitarian,
    Por,
    Pocr,
    Uniform,
    RoundRobin,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::Utilitarian,
        Policy::Por,
        Policy::Pocr,
        Policy::Uniform,
        Policy::RoundRobin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Utilitarian => "utilitarian",
            Policy::Por => "por",
            Policy::Pocr => "pocr",
            Policy::Uniform => "uniform",
            Policy::RoundRobin => "round_robin",
        }
    }

    /// Whether the policy needs an offline fractional allocation.
    pub fn needs_precompute(self) -> bool {
        matches!(self, Policy::Por | Policy::Pocr)
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Allocator(format!("unknown policy {s:?}")))
    }
}

/// Offline fractional allocation over all item types plus the cliques used
/// for rounding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Precomputed {
    /// `x[i][j]`: share of type `j` for agent `i`, over every type of the
    /// distribution. Types nobody values are split evenly.
    pub x: Vec<Vec<f64>>,
    pub cliques: Vec<Vec<usize>>,
}

impl Precomputed {
    pub fn new(x: Vec<Vec<f64>>, cliques: Vec<Vec<usize>>) -> Result<Self> {
        let p = Precomputed { x, cliques };
        p.validate()?;
        Ok(p)
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        let mut seen = vec![false; n];
        for c in &self.cliques {
            for &a in c {
                if a >= n || seen[a] {
                    return Err(Error::Allocator(format!(
                        "cliques do not partition the {n} agents"
                    )));
                }
                seen[a] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Allocator(format!(
                "cliques do not partition the {n} agents"
            )));
        }
        for j in 0..self.m() {
            let sum: f64 = self.x.iter().map(|row| row[j]).sum();
            if (sum - 1.0).abs() > COLUMN_TOL {
                return Err(Error::Allocator(format!(
                    "column {j} of the fractional allocation sums to {sum}"
                )));
            }
            if self.x.iter().any(|row| row[j] < 0.0) {
                return Err(Error::Allocator(format!("column {j} has a negative share")));
            }
        }
        Ok(())
    }

    /// Expands a solution over the kept items back to every type.
    pub fn from_solution<S: Scalar>(
        instance: &OfflineInstance<S>,
        solution: &MarketSolution<S>,
        cliques: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = instance.n();
        let mut x = vec![vec![1.0 / n as f64; instance.m_full()]; n];
        for (k, &ty) in instance.kept().iter().enumerate() {
            for (i, row) in x.iter_mut().enumerate() {
                row[ty] = solution.allocation.get(i, k).to_f64().clamp(0.0, 1.0);
            }
            // float rounding drift only; real violations still fail validation
            let sum: f64 = x.iter().map(|row| row[ty]).sum();
            if (sum - 1.0).abs() <= 1e-6 && sum > 0.0 {
                for row in x.iter_mut() {
                    row[ty] /= sum;
                }
            }
        }
        Precomputed::new(x, cliques)
    }

    /// Equal-budget market solution with singleton cliques (for `por`).
    pub fn product_maximizing<S: Scalar + Lift>(
        dist: &TypeDistribution,
        opts: &CisefOptions,
    ) -> Result<Self> {
        let inst = scale_values::<S>(dist, &vec![S::one(); dist.n()])?;
        let sol = solve_eg(&inst, opts.solver_tol, opts.max_iters)?;
        Precomputed::from_solution(&inst, &sol, (0..dist.n()).map(|i| vec![i]).collect())
    }

    /// CISEF refinement with its clique partition (for `pocr`).
    pub fn cisef<S: Scalar + Lift>(
        dist: &TypeDistribution,
        opts: &CisefOptions,
    ) -> Result<(Self, CisefOutcome<S>)> {
        let inst = scale_values::<S>(dist, &vec![S::one(); dist.n()])?;
        let out = compute_cisef(&inst, opts)?;
        let pre = Precomputed::from_solution(&inst, &out.solution, out.partition.cliques.clone())?;
        Ok((pre, out))
    }

    /// Probability that type `j` goes to each clique.
    pub fn clique_probs(&self, j: usize) -> Vec<f64> {
        self.cliques
            .iter()
            .map(|c| c.iter().map(|&i| self.x[i][j]).sum())
            .collect()
    }
}

/// Per-run allocator state: the policy, cumulative bundle values and the
/// round-robin pointer.
#[derive(Clone, Debug)]
pub struct AllocatorState {
    policy: Policy,
    n: usize,
    pre: Option<Precomputed>,
    /// `running[i][j] = v_i(A_j)` so far.
    running: Vec<Vec<f64>>,
    /// `max_item[i][j]`: largest value agent `i` has for a single item of `A_j`.
    max_item: Vec<Vec<f64>>,
    next_in_turn: usize,
    point_mass: bool,
}

impl AllocatorState {
    pub fn new(policy: Policy, n: usize, pre: Option<Precomputed>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Allocator("no agents".into()));
        }
        if policy.needs_precompute() {
            match &pre {
                None => {
                    return Err(Error::Allocator(format!(
                        "{policy} needs a precomputed fractional allocation"
                    )))
                }
                Some(p) if p.n() != n => {
                    return Err(Error::Dimension(format!(
                        "precomputed allocation has {} agents, not {n}",
                        p.n()
                    )))
                }
                Some(p) => p.validate()?,
            }
        }
        Ok(AllocatorState {
            policy,
            n,
            pre,
            running: vec![vec![0.0; n]; n],
            max_item: vec![vec![0.0; n]; n],
            next_in_turn: 0,
            point_mass: false,
        })
    }

    /// Switches the utilitarian allocator to plain rotation, as used when
    /// every item is worth the same to everybody.
    pub fn with_point_mass(mut self, point_mass: bool) -> Self {
        self.point_mass = point_mass;
        self
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn running(&self) -> &[Vec<f64>] {
        &self.running
    }

    pub fn max_item(&self) -> &[Vec<f64>] {
        &self.max_item
    }

    pub fn utilitarian_step<R: Rng>(&mut self, values: &[f64], rng: &mut R) -> usize {
        if self.point_mass {
            return self.round_robin_step();
        }
        let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> = (0..self.n).filter(|&i| values[i] == best).collect();
        if ties.len() == 1 {
            ties[0]
        } else {
            ties[rng.gen_range(0..ties.len())]
        }
    }

    pub fn por_step<R: Rng>(&mut self, ty: usize, rng: &mut R) -> Result<usize> {
        let pre = self
            .pre
            .as_ref()
            .ok_or_else(|| Error::Allocator("por needs a precomputed allocation".into()))?;
        let column: Vec<f64> = pre.x.iter().map(|row| row[ty]).collect();
        sample(&column, rng)
    }

    pub fn pocr_step<R: Rng>(&mut self, ty: usize, rng: &mut R) -> Result<usize> {
        let pre = self
            .pre
            .as_ref()
            .ok_or_else(|| Error::Allocator("pocr needs a precomputed allocation".into()))?;
        let c = sample(&pre.clique_probs(ty), rng)?;
        let clique = &pre.cliques[c];
        let judge = *clique.iter().min().expect("cliques are nonempty");
        let pick = clique
            .iter()
            .copied()
            .min_by(|&a, &b| {
                self.running[judge][a]
                    .total_cmp(&self.running[judge][b])
                    .then(a.cmp(&b))
            })
            .expect("cliques are nonempty");
        Ok(pick)
    }

    pub fn uniform_step<R: Rng>(&mut self, rng: &mut R) -> usize {
        rng.gen_range(0..self.n)
    }

    pub fn round_robin_step(&mut self) -> usize {
        let i = self.next_in_turn;
        self.next_in_turn = (i + 1) % self.n;
        i
    }

    /// Chooses a recipient. `ty` is the item type when items come from a
    /// distribution.
    pub fn choose<R: Rng>(
        &mut self,
        ty: Option<usize>,
        values: &[f64],
        rng: &mut R,
    ) -> Result<usize> {
        match self.policy {
            Policy::Utilitarian => Ok(self.utilitarian_step(values, rng)),
            Policy::Uniform => Ok(self.uniform_step(rng)),
            Policy::RoundRobin => Ok(self.round_robin_step()),
            Policy::Por | Policy::Pocr => {
                let ty = ty
                    .ok_or_else(|| Error::Allocator(format!("{} needs item types", self.policy)))?;
                if self.policy == Policy::Por {
                    self.por_step(ty, rng)
                } else {
                    self.pocr_step(ty, rng)
                }
            }
        }
    }

    /// Books the item on `agent`.
    pub fn record(&mut self, agent: usize, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.running[i][agent] += v;
            if *v > self.max_item[i][agent] {
                self.max_item[i][agent] = *v;
            }
        }
    }

    pub fn snapshot(&self, t: usize, peak_envy: f64) -> Snapshot {
        Snapshot {
            t,
            values: self.running.clone(),
            max_item: self.max_item.clone(),
            peak_envy,
        }
    }
}

/// Draws an index with the given weights, never one of weight zero.
fn sample<R: Rng>(weights: &[f64], rng: &mut R) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > COLUMN_TOL {
        return Err(Error::Allocator(format!("probabilities sum to {total}")));
    }
    let dist = WeightedIndex::new(weights).map_err(|e| Error::Allocator(e.to_string()))?;
    Ok(dist.sample(rng))
}

/// Bundle values at round `t`: `values[i][j] = v_i(A_j)` and the largest
/// single item of `A_j` for `i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: usize,
    pub values: Vec<Vec<f64>>,
    pub max_item: Vec<Vec<f64>>,
    /// Largest max-envy after any round up to `t`.
    pub peak_envy: f64,
}

impl Snapshot {
    pub fn envy(&self, i: usize, j: usize) -> f64 {
        (self.values[i][j] - self.values[i][i]).max(0.0)
    }

    pub fn max_envy(&self) -> f64 {
        let n = self.values.len();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.envy(i, j))
            .fold(0.0, f64::max)
    }
}

/// Record of one online run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnlineRun {
    pub policy: Policy,
    pub horizon: usize,
    pub seed: u64,
    pub trial: u64,
    /// Item type per round; for value-sequence adversaries the round index.
    pub arrivals: Vec<usize>,
    pub assignments: Vec<usize>,
    /// Snapshots at the requested checkpoints.
    pub envy_trace: Vec<Snapshot>,
    /// Largest max-envy seen after any round.
    pub peak_envy: f64,
}

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Shared round loop. `next` yields the item's type (if any) and values
/// given the previous recipient.
fn drive<F>(
    mut state: AllocatorState,
    horizon: usize,
    seed: u64,
    trial: u64,
    checkpoints: &[usize],
    mut next: F,
) -> Result<(IntegralAllocation, OnlineRun)>
where
    F: FnMut(&mut ChaCha8Rng, usize, Option<usize>) -> Result<(usize, Option<usize>, Vec<f64>)>,
{
    let mut rng = trial_rng(seed, trial);
    let n = state.n;
    let mut arrivals = Vec::with_capacity(horizon);
    let mut assignments = Vec::with_capacity(horizon);
    let mut item_values = Vec::with_capacity(horizon);
    let mut envy_trace = Vec::new();
    let mut peak = 0.0f64;
    let mut last = None;
    for t in 0..horizon {
        let (arrival, ty, values) = next(&mut rng, t, last)?;
        if values.len() != n {
            return Err(Error::Dimension(format!(
                "round {t} has {} values for {n} agents",
                values.len()
            )));
        }
        let agent = state.choose(ty, &values, &mut rng)?;
        state.record(agent, &values);
        // only envy toward the recipient can have grown
        for i in 0..n {
            peak = peak.max(state.running[i][agent] - state.running[i][i]);
        }
        arrivals.push(arrival);
        assignments.push(agent);
        item_values.push(values);
        last = Some(agent);
        if checkpoints.contains(&(t + 1)) {
            envy_trace.push(state.snapshot(t + 1, peak));
        }
    }
    if horizon == 0 && checkpoints.contains(&0) {
        envy_trace.push(state.snapshot(0, 0.0));
    }
    let alloc = IntegralAllocation::from_assignments(n, &assignments, item_values)?;
    let run = OnlineRun {
        policy: state.policy,
        horizon,
        seed,
        trial,
        arrivals,
        assignments,
        envy_trace,
        peak_envy: peak,
    };
    Ok((alloc, run))
}

/// Runs `policy` for `horizon` rounds on items drawn i.i.d. from `dist`.
pub fn run_online(
    dist: &TypeDistribution,
    policy: Policy,
    pre: Option<&Precomputed>,
    horizon: usize,
    seed: u64,
    trial: u64,
    checkpoints: &[usize],
) -> Result<(IntegralAllocation, OnlineRun)> {
    let state = AllocatorState::new(policy, dist.n(), pre.cloned())?
        .with_point_mass(dist.is_point_mass(POINT_MASS_TOL));
    if let Some(p) = pre {
        if p.m() != dist.m() {
            return Err(Error::Dimension(format!(
                "precomputed allocation covers {} types, not {}",
                p.m(),
                dist.m()
            )));
        }
    }
    let types =
        WeightedIndex::new(dist.probs()).map_err(|e| Error::InvalidDistribution(e.to_string()))?;
    drive(state, horizon, seed, trial, checkpoints, |rng, _, _| {
        let j = types.sample(rng);
        Ok((j, Some(j), dist.type_values(j)))
    })
}

/// Runs a type-free `policy` on a fixed value sequence (`values[t][i]`).
pub fn run_sequence(
    values: &[Vec<f64>],
    n: usize,
    policy: Policy,
    seed: u64,
    trial: u64,
    checkpoints: &[usize],
) -> Result<(IntegralAllocation, OnlineRun)> {
    if policy.needs_precompute() {
        return Err(Error::Allocator(format!(
            "{policy} needs a distribution-based adversary"
        )));
    }
    let state = AllocatorState::new(policy, n, None)?;
    drive(state, values.len(), seed, trial, checkpoints, |_, t, _| {
        Ok((t, None, values[t].clone()))
    })
}

/// Runs a type-free `policy` against the adaptive adversary, which sees
/// every decision before choosing the next item.
pub fn run_adaptive(
    machine: &mut AdaptiveStateMachine,
    n: usize,
    policy: Policy,
    horizon: usize,
    seed: u64,
    trial: u64,
    checkpoints: &[usize],
) -> Result<(IntegralAllocation, OnlineRun)> {
    if policy.needs_precompute() {
        return Err(Error::Allocator(format!(
            "{policy} cannot run against the adaptive adversary"
        )));
    }
    let state = AllocatorState::new(policy, n, None)?;
    drive(state, horizon, seed, trial, checkpoints, |_, t, last| {
        Ok((t, None, machine.next_values(last)?))
    })
}

/// Powers of two up to `horizon`, plus `horizon` itself.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |t| t.checked_mul(2))
        .take_while(|&t| t < horizon)
        .collect();
    out.push(horizon);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        trial_rng(7, 0)
    }

    #[test]
    fn utilitarian_unique_argmax() {
        let mut s = AllocatorState::new(Policy::Utilitarian, 3, None).unwrap();
        assert_eq!(s.utilitarian_step(&[0.3, 0.9, 0.1], &mut rng()), 1);
    }

    #[test]
    fn utilitarian_ties_are_fair() {
        let mut s = AllocatorState::new(Policy::Utilitarian, 2, None).unwrap();
        let mut r = rng();
        let zeros = (0..10_000)
            .filter(|_| s.utilitarian_step(&[0.5, 0.5], &mut r) == 0)
            .count();
        assert!((4700..=5300).contains(&zeros), "{zeros}");
    }

    #[test]
    fn point_mass_rotates() {
        let dist = TypeDistribution::new(vec![1.0], vec![vec![1.0]; 3]).unwrap();
        let (alloc, _) = run_online(&dist, Policy::Utilitarian, None, 7, 1, 0, &[]).unwrap();
        let sizes: Vec<usize> = alloc.bundles.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 2, 2]);
    }

    #[test]
    fn por_column_sampling() {
        let pre =
            Precomputed::new(vec![vec![1.0, 0.5], vec![0.0, 0.5]], vec![vec![0], vec![1]]).unwrap();
        let mut s = AllocatorState::new(Policy::Por, 2, Some(pre)).unwrap();
        let mut r = rng();
        assert!((0..100).all(|_| s.por_step(0, &mut r).unwrap() == 0));
        let zeros = (0..10_000)
            .filter(|_| s.por_step(1, &mut r).unwrap() == 0)
            .count();
        assert!((4700..=5300).contains(&zeros), "{zeros}");
    }

    #[test]
    fn bad_column_is_rejected() {
        assert!(Precomputed::new(vec![vec![0.7], vec![0.2]], vec![vec![0], vec![1]]).is_err());
        assert!(Precomputed::new(vec![vec![0.5], vec![0.5]], vec![vec![0]]).is_err());
    }

    #[test]
    fn pocr_balances_inside_a_clique() {
        let pre = Precomputed::new(vec![vec![0.5], vec![0.5]], vec![vec![0, 1]]).unwrap();
        let mut s = AllocatorState::new(Policy::Pocr, 2, Some(pre)).unwrap();
        let mut r = rng();
        for _ in 0..50 {
            let a = s.pocr_step(0, &mut r).unwrap();
            s.record(a, &[0.7, 0.7]);
            let gap = (s.running()[0][0] - s.running()[0][1]).abs();
            assert!(gap <= 0.7 + 1e-12);
        }
    }

    #[test]
    fn uniform_counts() {
        let mut s = AllocatorState::new(Policy::Uniform, 4, None).unwrap();
        let mut r = rng();
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[s.uniform_step(&mut r)] += 1;
        }
        assert!(
            counts.iter().all(|c| (9500..=10_500).contains(c)),
            "{counts:?}"
        );
        let mut one = AllocatorState::new(Policy::Uniform, 1, None).unwrap();
        assert!((0..20).all(|_| one.uniform_step(&mut r) == 0));
    }

    #[test]
    fn round_robin_cycles() {
        let mut s = AllocatorState::new(Policy::RoundRobin, 3, None).unwrap();
        let picks: Vec<usize> = (0..5).map(|_| s.round_robin_step()).collect();
        assert_eq!(picks, vec![0, 1, 2, 0, 1]);
    }

    #[test]
    fn empty_run() {
        let dist = TypeDistribution::new(vec![1.0], vec![vec![0.5]; 2]).unwrap();
        let (alloc, run) = run_online(&dist, Policy::Uniform, None, 0, 3, 0, &[0]).unwrap();
        assert_eq!(alloc.items(), 0);
        assert!(run.arrivals.is_empty());
        assert_eq!(run.envy_trace[0].max_envy(), 0.0);
    }

    #[test]
    fn runs_are_reproducible_and_streams_independent() {
        let dist =
            TypeDistribution::new(vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.2, 0.9]]).unwrap();
        let a = run_online(&dist, Policy::Uniform, None, 200, 11, 3, &[100])
            .unwrap()
            .1;
        let b = run_online(&dist, Policy::Uniform, None, 200, 11, 3, &[100])
            .unwrap()
            .1;
        assert_eq!(a, b);
        let c = run_online(&dist, Policy::Uniform, None, 200, 11, 4, &[100])
            .unwrap()
            .1;
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn policies_parse() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("greedy".parse::<Policy>().is_err());
    }

    #[test]
    fn checkpoint_defaults() {
        assert_eq!(default_checkpoints(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(default_checkpoints(8), vec![1, 2, 4, 8]);
        assert_eq!(default_checkpoints(0), vec![0]);
    }

    #[test]
    fn precompute_needs_matching_policy() {
        assert!(AllocatorState::new(Policy::Pocr, 2, None).is_err());
        let seq = vec![vec![1.0, 0.0]];
        assert!(run_sequence(&seq, 2, Policy::Por, 0, 0, &[]).is_err());
    }
}
