//! Item generators for the adversary models, from i.i.d. identical values up
//! to an adaptive state machine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{TypeDistribution, MAX_INPUT_DENOMINATOR};
use crate::scalar::{rational_from_f64, Rational, Scalar};

/// Default cap on the number of product types an expansion may create.
pub const DEFAULT_TYPE_CAP: usize = 100_000;

/// A finite distribution over single values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueDistribution {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl ValueDistribution {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = ValueDistribution { values, probs };
        d.validate()?;
        Ok(d)
    }

    pub fn point(value: f64) -> Self {
        ValueDistribution {
            values: vec![value],
            probs: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if self.values.len() != self.probs.len() {
            return Err(Error::Dimension("values vs probabilities".into()));
        }
        if let Some(p) = self.probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidDistribution(format!(
                "probability {p} outside (0, 1]"
            )));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "value {v} is negative or not finite"
            )));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(())
    }

    /// Sorted ascending with duplicate values merged.
    fn canonical(&self) -> ValueDistribution {
        let mut pairs: Vec<(f64, f64)> = self
            .values
            .iter()
            .copied()
            .zip(self.probs.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = ValueDistribution {
            values: Vec::new(),
            probs: Vec::new(),
        };
        for (v, p) in pairs {
            if out.values.last() == Some(&v) {
                *out.probs.last_mut().expect("nonempty") += p;
            } else {
                out.values.push(v);
                out.probs.push(p);
            }
        }
        out
    }
}

/// Product distribution of independent per-agent values.
///
/// Types are indexed in mixed radix with agent 0 as the most significant
/// digit: the digits `(d_0, ..., d_{n-1})`, where `d_i` indexes agent `i`'s
/// support sorted ascending, map to `sum_i d_i * prod_{k > i} |S_k|`. The
/// last agent's digit varies fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependentExpansion {
    marginals: Vec<ValueDistribution>,
    dist: TypeDistribution,
}

impl IndependentExpansion {
    pub fn n(&self) -> usize {
        self.marginals.len()
    }

    pub fn m(&self) -> usize {
        self.dist.m()
    }

    pub fn marginals(&self) -> &[ValueDistribution] {
        &self.marginals
    }

    /// Each agent's support, ascending.
    pub fn supports(&self) -> Vec<&[f64]> {
        self.marginals.iter().map(|d| d.values.as_slice()).collect()
    }

    pub fn distribution(&self) -> &TypeDistribution {
        &self.dist
    }

    pub fn into_distribution(self) -> TypeDistribution {
        self.dist
    }

    pub fn digits(&self, ty: usize) -> Vec<usize> {
        let mut digits = vec![0; self.n()];
        let mut rest = ty;
        for i in (0..self.n()).rev() {
            let base = self.marginals[i].values.len();
            digits[i] = rest % base;
            rest /= base;
        }
        digits
    }

    pub fn type_index(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.marginals)
            .fold(0, |acc, (d, m)| acc * m.values.len() + d)
    }
}

/// Cartesian product of per-agent value distributions; type
/// `(a_1, ..., a_n)` has probability `prod_i Pr[a_i]` and agent `i` values
/// it at `a_i`.
pub fn independent_expansion(
    marginals: &[ValueDistribution],
    cap: usize,
) -> Result<IndependentExpansion> {
    if marginals.is_empty() {
        return Err(Error::InvalidDistribution("no agents".into()));
    }
    for d in marginals {
        d.validate()?;
    }
    let marginals: Vec<ValueDistribution> =
        marginals.iter().map(ValueDistribution::canonical).collect();
    let size = marginals
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(d.values.len()));
    let m = match size {
        Some(m) if m <= cap => m,
        _ => {
            return Err(Error::InvalidDistribution(format!(
            "product support exceeds the cap of {cap} types; use smaller supports or fewer agents"
        )))
        }
    };
    let n = marginals.len();
    let exact: Option<Vec<(Vec<Rational>, Vec<Rational>)>> = marginals
        .iter()
        .map(|d| {
            let v = d
                .values
                .iter()
                .map(|x| rational_from_f64(*x, MAX_INPUT_DENOMINATOR))
                .collect::<Option<Vec<_>>>()?;
            let p = d
                .probs
                .iter()
                .map(|x| rational_from_f64(*x, MAX_INPUT_DENOMINATOR))
                .collect::<Option<Vec<_>>>()?;
            Some((v, p))
        })
        .collect();
    let exact = exact.filter(|parts| {
        parts
            .iter()
            .all(|(_, p)| p.iter().cloned().sum::<Rational>() == <Rational as Scalar>::one())
    });
    let mut probs = Vec::with_capacity(m);
    let mut values = vec![Vec::with_capacity(m); n];
    let mut exact_probs = Vec::new();
    let mut exact_values = vec![Vec::new(); n];
    let mut digits = vec![0usize; n];
    for _ in 0..m {
        probs.push(
            digits
                .iter()
                .zip(&marginals)
                .map(|(d, md)| md.probs[*d])
                .product(),
        );
        for i in 0..n {
            values[i].push(marginals[i].values[digits[i]]);
        }
        if let Some(parts) = &exact {
            exact_probs.push(
                digits
                    .iter()
                    .zip(parts)
                    .map(|(d, (_, p))| p[*d].clone())
                    .product::<Rational>(),
            );
            for i in 0..n {
                exact_values[i].push(parts[i].0[digits[i]].clone());
            }
        }
        for i in (0..n).rev() {
            digits[i] += 1;
            if digits[i] < marginals[i].values.len() {
                break;
            }
            digits[i] = 0;
        }
    }
    let dist = match exact {
        Some(_) => TypeDistribution::from_exact(exact_probs, exact_values)?,
        None => renormalized(probs, values)?,
    };
    Ok(IndependentExpansion { marginals, dist })
}

fn renormalized(mut probs: Vec<f64>, values: Vec<Vec<f64>>) -> Result<TypeDistribution> {
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    TypeDistribution::new(probs, values)
}

/// Every agent draws its value independently from the same distribution.
pub fn identical_iid(
    marginal: &ValueDistribution,
    n: usize,
    cap: usize,
) -> Result<TypeDistribution> {
    if n == 0 {
        return Err(Error::InvalidDistribution("no agents".into()));
    }
    Ok(independent_expansion(&vec![marginal.clone(); n], cap)?.into_distribution())
}

/// Explicit joint distribution; `values_per_type[j][i]` is agent `i`'s value
/// for type `j`.
pub fn correlated_iid(probs: Vec<f64>, values_per_type: Vec<Vec<f64>>) -> Result<TypeDistribution> {
    if values_per_type.len() != probs.len() {
        return Err(Error::Dimension(format!(
            "{} types but {} probabilities",
            values_per_type.len(),
            probs.len()
        )));
    }
    let n = values_per_type.first().map_or(0, Vec::len);
    if values_per_type.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(
            "types list different numbers of agents".into(),
        ));
    }
    let values = (0..n)
        .map(|i| values_per_type.iter().map(|row| row[i]).collect())
        .collect();
    TypeDistribution::new(probs, values)
}

/// Builds a distribution from exact parts, keeping them for exact solving.
pub fn correlated_iid_exact(
    probs: Vec<Rational>,
    values_per_type: Vec<Vec<Rational>>,
) -> Result<TypeDistribution> {
    let n = values_per_type.first().map_or(0, Vec::len);
    if values_per_type.iter().any(|row| row.len() != n) {
        return Err(Error::Dimension(
            "types list different numbers of agents".into(),
        ));
    }
    let values = (0..n)
        .map(|i| values_per_type.iter().map(|row| row[i].clone()).collect())
        .collect();
    TypeDistribution::from_exact(probs, values)
}

/// Segmented instance: in segment `i` (of `T/n` rounds) items are worth 1 to
/// agent `i` and `eps` to everyone else.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundInstance {
    pub n: usize,
    pub eps: f64,
    /// `values[t][i]`.
    pub values: Vec<Vec<f64>>,
}

impl LowerBoundInstance {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// The first `segments * T/n` items follow the instance, the rest are
    /// worth nothing to anybody.
    pub fn prefix_variant(&self, segments: usize) -> Vec<Vec<f64>> {
        let seg = self.horizon() / self.n;
        self.values
            .iter()
            .enumerate()
            .map(|(t, row)| {
                if t < seg * segments {
                    row.clone()
                } else {
                    vec![0.0; self.n]
                }
            })
            .collect()
    }

    /// Utility vector of the allocation giving segment `i` to agent `i`.
    pub fn social_optimum(&self) -> Vec<f64> {
        vec![(self.horizon() / self.n) as f64; self.n]
    }
}

pub fn lower_bound_instance(n: usize, horizon: usize, eps: f64) -> Result<LowerBoundInstance> {
    if n == 0 {
        return Err(Error::Adversary("no agents".into()));
    }
    if !horizon.is_multiple_of(n) {
        return Err(Error::Adversary(format!(
            "T = {horizon} is not divisible by n = {n}"
        )));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Adversary(format!("eps = {eps} outside (0, 1)")));
    }
    let seg = horizon / n;
    let values = (0..horizon)
        .map(|t| {
            (0..n)
                .map(|i| if t / seg == i { 1.0 } else { eps })
                .collect()
        })
        .collect();
    Ok(LowerBoundInstance { n, eps, values })
}

/// `nu_i = (i + 1)^r - i^r`.
pub fn nu(i: u64, r: f64) -> f64 {
    ((i + 1) as f64).powf(r) - (i as f64).powf(r)
}

/// Interactive adversary walking on states `..., L2, L1, 0, R1, R2, ...`.
///
/// State 0 emits values `(1, 1)` for agents 0 and 1, `L_i` emits
/// `(1, nu_i)` and `R_i` emits `(nu_i, 1)`; all other agents get 0. After
/// each round the walk moves one step right if the item went to agent 0,
/// one step left if it went to agent 1, and stays put if it went to anybody
/// else.
#[derive(Clone, Debug)]
pub struct AdaptiveStateMachine {
    n: usize,
    r: f64,
    horizon: usize,
    round: usize,
    /// Negative: `L_{-state}`, positive: `R_state`.
    state: i64,
}

impl AdaptiveStateMachine {
    pub fn new(n: usize, r: f64, horizon: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Adversary("needs at least two agents".into()));
        }
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::Adversary(format!("r = {r} outside (0, 1)")));
        }
        Ok(AdaptiveStateMachine {
            n,
            r,
            horizon,
            round: 0,
            state: 0,
        })
    }

    pub fn state(&self) -> i64 {
        self.state
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn values_at(&self, state: i64) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        let step = nu(state.unsigned_abs(), self.r);
        match state.cmp(&0) {
            std::cmp::Ordering::Equal => {
                v[0] = 1.0;
                v[1] = 1.0;
            }
            std::cmp::Ordering::Less => {
                v[0] = 1.0;
                v[1] = step;
            }
            std::cmp::Ordering::Greater => {
                v[0] = step;
                v[1] = 1.0;
            }
        }
        v
    }

    /// Values of the next item. `feedback` is the agent who received the
    /// previous item; it must be given from the second round on.
    pub fn next_values(&mut self, feedback: Option<usize>) -> Result<Vec<f64>> {
        if self.round >= self.horizon {
            return Err(Error::Adversary(format!(
                "horizon of {} rounds exhausted",
                self.horizon
            )));
        }
        if self.round > 0 {
            match feedback {
                None => {
                    return Err(Error::Adversary(format!(
                        "no allocation feedback before round {}",
                        self.round + 1
                    )))
                }
                Some(a) if a >= self.n => {
                    return Err(Error::Adversary(format!(
                        "feedback names agent {a} of {}",
                        self.n
                    )))
                }
                Some(0) => self.state += 1,
                Some(1) => self.state -= 1,
                Some(_) => {}
            }
        }
        self.round += 1;
        Ok(self.values_at(self.state))
    }
}

/// Serializable description of an adversary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryConfig {
    IdenticalIid {
        n: usize,
        marginal: ValueDistribution,
    },
    IndependentIid {
        marginals: Vec<ValueDistribution>,
    },
    CorrelatedIid {
        types: Vec<TypeSpec>,
    },
    NonadaptiveLb {
        n: usize,
        eps: f64,
    },
    AdaptiveSm {
        r: f64,
        /// Agents beyond the first two value every item at 0.
        #[serde(default = "two")]
        n: usize,
    },
}

fn two() -> usize {
    2
}

/// One item type: its probability and every agent's value. Numbers may be
/// given as JSON numbers or as strings like `"9/10"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeSpec {
    pub prob: crate::io::Num,
    pub values: Vec<crate::io::Num>,
}

impl AdversaryConfig {
    pub fn n(&self) -> usize {
        match self {
            AdversaryConfig::IdenticalIid { n, .. } | AdversaryConfig::NonadaptiveLb { n, .. } => {
                *n
            }
            AdversaryConfig::IndependentIid { marginals } => marginals.len(),
            AdversaryConfig::CorrelatedIid { types } => types.first().map_or(0, |t| t.values.len()),
            AdversaryConfig::AdaptiveSm { n, .. } => *n,
        }
    }

    /// Whether items are drawn i.i.d. from a distribution (as opposed to an
    /// instance fixed by the horizon or by feedback).
    pub fn is_distributional(&self) -> bool {
        matches!(
            self,
            AdversaryConfig::IdenticalIid { .. }
                | AdversaryConfig::IndependentIid { .. }
                | AdversaryConfig::CorrelatedIid { .. }
        )
    }

    /// The type distribution of a distributional adversary.
    pub fn distribution(&self) -> Result<TypeDistribution> {
        match self {
            AdversaryConfig::IdenticalIid { n, marginal } => {
                identical_iid(marginal, *n, DEFAULT_TYPE_CAP)
            }
            AdversaryConfig::IndependentIid { marginals } => {
                Ok(independent_expansion(marginals, DEFAULT_TYPE_CAP)?.into_distribution())
            }
            AdversaryConfig::CorrelatedIid { types } => crate::io::distribution_from_specs(types),
            _ => Err(Error::Adversary(
                "this adversary has no item distribution".into(),
            )),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AdversaryConfig::NonadaptiveLb { n, eps } => {
                if *n == 0 || !(*eps > 0.0 && *eps < 1.0) {
                    return Err(Error::Adversary(
                        "lower-bound instance needs n >= 1 and eps in (0, 1)".into(),
                    ));
                }
                Ok(())
            }
            AdversaryConfig::AdaptiveSm { r, n } => {
                AdaptiveStateMachine::new(*n, *r, 0).map(|_| ())
            }
            _ => self.distribution().map(|_| ()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn identical_point_mass() {
        let d = identical_iid(&ValueDistribution::point(1.0), 2, DEFAULT_TYPE_CAP).unwrap();
        assert_eq!(d.m(), 1);
        assert_eq!(d.type_values(0), vec![1.0, 1.0]);
        assert_eq!(d.prob(0), 1.0);
    }

    #[test]
    fn identical_binary_products() {
        let fair = ValueDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let d = identical_iid(&fair, 2, DEFAULT_TYPE_CAP).unwrap();
        assert_eq!(d.m(), 4);
        assert!(d.probs().iter().all(|p| (*p - 0.25).abs() < 1e-15));
        let skew = ValueDistribution::new(vec![0.0, 1.0], vec![0.1, 0.9]).unwrap();
        let d = identical_iid(&skew, 2, DEFAULT_TYPE_CAP).unwrap();
        // (1,1) is the last type
        assert!((d.prob(3) - 0.81).abs() < 1e-15);
        assert_eq!(d.type_values(3), vec![1.0, 1.0]);
    }

    #[test]
    fn table3_expansion() {
        let d12 = ValueDistribution::new(vec![0.0, 1.0], vec![0.1, 0.9]).unwrap();
        let d3 = ValueDistribution::new(vec![1.0, 2.0], vec![16.0 / 17.0, 1.0 / 17.0]).unwrap();
        let exp = independent_expansion(&[d12.clone(), d12, d3], DEFAULT_TYPE_CAP).unwrap();
        assert_eq!(exp.m(), 8);
        let dist = exp.distribution();
        let exact = dist.exact().expect("inputs are small rationals");
        // gamma_7 = (1, 1, 1): digits (1, 1, 0)
        let g7 = exp.type_index(&[1, 1, 0]);
        assert_eq!(g7, 6);
        assert_eq!(exact.probs[g7], q(1296, 1700));
        assert_eq!(exp.digits(4), vec![1, 0, 0]);
        assert_eq!(dist.type_values(4), vec![1.0, 0.0, 1.0]);
        assert_eq!(dist.type_values(1), vec![0.0, 0.0, 2.0]);
    }

    #[test]
    fn all_point_masses_give_one_type() {
        let exp = independent_expansion(
            &[ValueDistribution::point(0.3), ValueDistribution::point(0.7)],
            10,
        )
        .unwrap();
        assert_eq!(exp.m(), 1);
    }

    #[test]
    fn uniform_pair_probability() {
        let fair = ValueDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let exp = independent_expansion(&[fair.clone(), fair], 10).unwrap();
        assert_eq!(exp.distribution().prob(exp.type_index(&[1, 1])), 0.25);
    }

    #[test]
    fn expansion_cap() {
        let fair = ValueDistribution::new(vec![0.0, 1.0], vec![0.5, 0.5]).unwrap();
        let err = independent_expansion(&vec![fair; 5], 16).unwrap_err();
        assert!(err.to_string().contains("cap"));
    }

    #[test]
    fn correlated_validation() {
        assert!(correlated_iid(
            vec![0.5, 0.5],
            vec![vec![1.0, 0.5, 1.0], vec![1.0, 1.0, 0.5]]
        )
        .is_ok());
        assert!(correlated_iid(vec![1.0], vec![vec![0.2, 0.3]]).is_ok());
        assert!(correlated_iid(vec![0.5, 0.49], vec![vec![1.0], vec![1.0]]).is_err());
    }

    #[test]
    fn lower_bound_segments() {
        let lb = lower_bound_instance(2, 4, 0.1).unwrap();
        let agent = |i: usize| lb.values.iter().map(|r| r[i]).collect::<Vec<_>>();
        assert_eq!(agent(0), vec![1.0, 1.0, 0.1, 0.1]);
        assert_eq!(agent(1), vec![0.1, 0.1, 1.0, 1.0]);
        assert_eq!(lb.social_optimum(), vec![2.0, 2.0]);
        assert_eq!(lb.prefix_variant(1)[2], vec![0.0, 0.0]);
        let single = lower_bound_instance(1, 3, 0.5).unwrap();
        assert!(single.values.iter().all(|r| r[0] == 1.0));
        assert!(lower_bound_instance(3, 4, 0.1).is_err());
    }

    #[test]
    fn nu_values() {
        assert!((nu(1, 0.5) - (2f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((nu(3, 0.5) - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!((nu(1, 0.5) - 0.41421).abs() < 1e-5);
        assert!((nu(3, 0.5) - 0.26795).abs() < 1e-5);
    }

    #[test]
    fn state_machine_walk() {
        let mut sm = AdaptiveStateMachine::new(3, 0.5, 5).unwrap();
        assert_eq!(sm.next_values(None).unwrap(), vec![1.0, 1.0, 0.0]);
        assert!(sm.clone().next_values(None).is_err());
        let v = sm.next_values(Some(0)).unwrap();
        assert_eq!(sm.state(), 1);
        assert_eq!(v[1], 1.0);
        assert!((v[0] - nu(1, 0.5)).abs() < 1e-15);
        sm.next_values(Some(1)).unwrap();
        sm.next_values(Some(1)).unwrap();
        assert_eq!(sm.state(), -1);
        sm.next_values(Some(2)).unwrap();
        assert_eq!(sm.state(), -1);
        assert!(sm.next_values(Some(0)).is_err());
    }

    proptest! {
        #[test]
        fn marginals_are_recovered(
            raw in prop::collection::vec(prop::collection::vec(1u32..20, 2..=3), 1..=3),
        ) {
            let marginals: Vec<ValueDistribution> = raw.iter().map(|w| {
                let total: u32 = w.iter().sum();
                let probs: Vec<f64> = w.iter().map(|x| *x as f64 / total as f64).collect();
                let fix: f64 = probs.iter().sum();
                let probs = probs.iter().map(|p| p / fix).collect();
                ValueDistribution::new((0..w.len()).map(|k| k as f64 / 4.0).collect(), probs).unwrap()
            }).collect();
            let exp = independent_expansion(&marginals, DEFAULT_TYPE_CAP).unwrap();
            let dist = exp.distribution();
            for (i, md) in marginals.iter().enumerate() {
                for (d, p) in md.probs.iter().enumerate() {
                    let sum: f64 = (0..exp.m()).filter(|&t| exp.digits(t)[i] == d).map(|t| dist.prob(t)).sum();
                    prop_assert!((sum - p).abs() < 1e-12);
                }
            }
            for t in 0..exp.m() {
                prop_assert_eq!(exp.type_index(&exp.digits(t)), t);
            }
        }

        #[test]
        fn state_machine_values_in_unit_interval(r in 0.01f64..0.99, moves in prop::collection::vec(0usize..2, 1..200)) {
            let mut sm = AdaptiveStateMachine::new(2, r, moves.len() + 1).unwrap();
            let mut fb = None;
            for m in moves {
                let v = sm.next_values(fb).unwrap();
                prop_assert!(v.iter().all(|x| (0.0..=1.0).contains(x)));
                fb = Some(m);
            }
        }

        #[test]
        fn lower_bound_permutation_symmetry(n in 1usize..5, seg in 1usize..5) {
            let lb = lower_bound_instance(n, n * seg, 0.1).unwrap();
            // swapping agents a and b swaps their segments
            for a in 0..n {
                for b in 0..n {
                    for t in 0..lb.horizon() {
                        let seg_of = t / seg;
                        let mapped = if seg_of == a { b } else if seg_of == b { a } else { seg_of };
                        let t2 = mapped * seg + t % seg;
                        let swap = |i: usize| if i == a { b } else if i == b { a } else { i };
                        for i in 0..n {
                            prop_assert_eq!(lb.values[t][i], lb.values[t2][swap(i)]);
                        }
                    }
                }
            }
        }
    }
}
