//! JSON shapes for instances and solutions.
//!
//! Numbers are accepted either as JSON numbers or as strings holding an
//! exact rational such as `"3/2"`. Exact solutions are written with string
//! entries, float solutions with plain numbers.

use serde::{Deserialize, Serialize};

use crate::adversary::TypeSpec;
use crate::error::{Error, Result};
use crate::instance::{
    scale_values, FractionalAllocation, Lift, OfflineInstance, TypeDistribution,
};
use crate::market::MarketSolution;
use crate::scalar::{parse_rational, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Text(String),
}

impl Num {
    pub fn from_scalar<S: Scalar>(x: &S) -> Num {
        if S::EXACT {
            Num::Text(x.to_string())
        } else {
            Num::Float(x.to_f64())
        }
    }

    /// The exact value when the number was written as a string.
    pub fn exact(&self) -> Result<Option<Rational>> {
        match self {
            Num::Float(_) => Ok(None),
            Num::Text(t) => parse_rational(t)
                .map(Some)
                .ok_or_else(|| Error::Exact(format!("cannot parse {t:?} as a rational"))),
        }
    }

    pub fn to_f64(&self) -> Result<f64> {
        match self {
            Num::Float(x) => Ok(*x),
            Num::Text(_) => Ok(self.exact()?.expect("text is exact").to_f64()),
        }
    }

    pub fn lift<S: Scalar + Lift>(&self) -> Result<S> {
        S::lift(self.to_f64()?, self.exact()?.as_ref())
    }
}

impl From<f64> for Num {
    fn from(x: f64) -> Self {
        Num::Float(x)
    }
}

impl From<&str> for Num {
    fn from(t: &str) -> Self {
        Num::Text(t.to_string())
    }
}

/// Distribution from explicit types. When every number is a string the
/// exact values are kept.
pub fn distribution_from_specs(types: &[TypeSpec]) -> Result<TypeDistribution> {
    let n = types.first().map_or(0, |t| t.values.len());
    if types.iter().any(|t| t.values.len() != n) {
        return Err(Error::Dimension(
            "types list different numbers of agents".into(),
        ));
    }
    let all_text = types.iter().all(|t| {
        matches!(t.prob, Num::Text(_)) && t.values.iter().all(|v| matches!(v, Num::Text(_)))
    });
    if all_text {
        let probs = types
            .iter()
            .map(|t| Ok(t.prob.exact()?.expect("text")))
            .collect::<Result<Vec<_>>>()?;
        let values = (0..n)
            .map(|i| {
                types
                    .iter()
                    .map(|t| Ok(t.values[i].exact()?.expect("text")))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        return TypeDistribution::from_exact(probs, values);
    }
    let probs = types
        .iter()
        .map(|t| t.prob.to_f64())
        .collect::<Result<Vec<_>>>()?;
    let values = (0..n)
        .map(|i| {
            types
                .iter()
                .map(|t| t.values[i].to_f64())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    TypeDistribution::new(probs, values)
}

/// Instance file: `n` agents and a list of item types, each with its
/// probability and one value per agent. Budgets default to 1 for everyone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub types: Vec<TypeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<Num>>,
}

impl InstanceFile {
    pub fn distribution(&self) -> Result<TypeDistribution> {
        if let Some(t) = self.types.iter().position(|t| t.values.len() != self.n) {
            return Err(Error::Dimension(format!(
                "type {t} lists {} values for {} agents",
                self.types[t].values.len(),
                self.n
            )));
        }
        distribution_from_specs(&self.types)
    }

    pub fn budgets<S: Scalar + Lift>(&self) -> Result<Vec<S>> {
        match &self.budgets {
            None => Ok(vec![S::one(); self.n]),
            Some(b) if b.len() != self.n => Err(Error::Dimension(format!(
                "{} budgets for {} agents",
                b.len(),
                self.n
            ))),
            Some(b) => b.iter().map(Num::lift).collect(),
        }
    }

    /// The scaled offline instance `v_i(type) * prob(type)`.
    pub fn to_instance<S: Scalar + Lift>(&self) -> Result<OfflineInstance<S>> {
        scale_values(&self.distribution()?, &self.budgets::<S>()?)
    }

    pub fn from_distribution(dist: &TypeDistribution) -> Self {
        let exact = dist.exact();
        let types = (0..dist.m())
            .map(|j| match exact {
                Some(e) => TypeSpec {
                    prob: Num::Text(e.probs[j].to_string()),
                    values: (0..dist.n())
                        .map(|i| Num::Text(e.values[i][j].to_string()))
                        .collect(),
                },
                None => TypeSpec {
                    prob: Num::Float(dist.probs()[j]),
                    values: dist.type_values(j).into_iter().map(Num::Float).collect(),
                },
            })
            .collect();
        InstanceFile {
            n: dist.n(),
            types,
            budgets: None,
        }
    }
}

/// An offline divisible instance: `values[i][j]` is agent `i`'s value for
/// item `j`; budgets default to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceJson {
    pub values: Vec<Vec<Num>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budgets: Option<Vec<Num>>,
}

impl InstanceJson {
    pub fn to_instance<S: Scalar + Lift>(&self) -> Result<OfflineInstance<S>> {
        let values = self
            .values
            .iter()
            .map(|row| row.iter().map(Num::lift).collect::<Result<Vec<S>>>())
            .collect::<Result<Vec<_>>>()?;
        let budgets = match &self.budgets {
            Some(b) => b.iter().map(Num::lift).collect::<Result<Vec<S>>>()?,
            None => vec![S::one(); values.len()],
        };
        OfflineInstance::new(values, budgets)
    }
}

/// Allocation `x` (agents by items), prices `p` and budgets `e`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionJson {
    pub x: Vec<Vec<Num>>,
    pub p: Vec<Num>,
    pub e: Vec<Num>,
}

impl SolutionJson {
    pub fn from_solution<S: Scalar>(sol: &MarketSolution<S>) -> Self {
        SolutionJson {
            x: sol
                .allocation
                .shares
                .iter()
                .map(|row| row.iter().map(Num::from_scalar).collect())
                .collect(),
            p: sol.prices.iter().map(Num::from_scalar).collect(),
            e: sol.budgets.iter().map(Num::from_scalar).collect(),
        }
    }

    /// Reads the solution against `instance`, whose item set must match the
    /// columns of `x`.
    pub fn to_solution<S: Scalar + Lift>(
        &self,
        instance: &OfflineInstance<S>,
    ) -> Result<MarketSolution<S>> {
        let x = self
            .x
            .iter()
            .map(|row| row.iter().map(Num::lift).collect::<Result<Vec<S>>>())
            .collect::<Result<Vec<_>>>()?;
        let p = self.p.iter().map(Num::lift).collect::<Result<Vec<S>>>()?;
        let e = self.e.iter().map(Num::lift).collect::<Result<Vec<S>>>()?;
        if x.len() != instance.n() || p.len() != instance.m() || e.len() != instance.n() {
            return Err(Error::Dimension(format!(
                "solution is {}x{} with {} budgets, instance has {} agents and {} items",
                x.len(),
                p.len(),
                e.len(),
                instance.n(),
                instance.m()
            )));
        }
        let alloc = FractionalAllocation::new(x)?;
        MarketSolution::new(alloc, p, e, instance)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn from_json_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_and_strings() {
        let v: Vec<Num> = serde_json::from_str(r#"[0.5, "3/2", "0.25"]"#).unwrap();
        assert_eq!(v[0].to_f64().unwrap(), 0.5);
        assert_eq!(v[1].exact().unwrap(), Some(Rational::from_ratio(3, 2)));
        assert_eq!(v[2].lift::<Rational>().unwrap(), Rational::from_ratio(1, 4));
        let bad: Num = serde_json::from_str(r#""x/2""#).unwrap();
        assert!(bad.to_f64().is_err());
    }

    #[test]
    fn exact_solution_round_trip() {
        let inst = InstanceJson {
            values: vec![vec!["1".into(), "1".into()], vec!["1".into(), "1/2".into()]],
            budgets: None,
        }
        .to_instance::<Rational>()
        .unwrap();
        let sol = crate::market::solve_eg::<Rational>(&inst, 1e-9, 10_000).unwrap();
        let json = to_json_string(&SolutionJson::from_solution(&sol)).unwrap();
        assert!(
            json.contains("\"p\": [\n    \"1\",\n    \"1\"\n  ]"),
            "{json}"
        );
        let back: SolutionJson = from_json_str(&json).unwrap();
        assert_eq!(back.to_solution(&inst).unwrap(), sol);
    }

    #[test]
    fn instance_file_round_trip() {
        let text = r#"{"n": 2, "types": [{"prob": 0.5, "values": [1, 0.5]}, {"prob": 0.5, "values": [0.5, 1]}]}"#;
        let file: InstanceFile = from_json_str(text).unwrap();
        let inst = file.to_instance::<f64>().unwrap();
        assert_eq!(inst.value(0, 0), &0.5);
        assert_eq!(file.budgets::<f64>().unwrap(), vec![1.0, 1.0]);
        let again = InstanceFile::from_distribution(&file.distribution().unwrap());
        assert_eq!(again.distribution().unwrap(), file.distribution().unwrap());

        let short: InstanceFile =
            from_json_str(r#"{"n": 3, "types": [{"prob": 1, "values": [1, 1]}]}"#).unwrap();
        assert!(short.distribution().is_err());
    }

    #[test]
    fn string_types_stay_exact() {
        let specs: Vec<TypeSpec> = serde_json::from_str(
            r#"[{"prob": "1/3", "values": ["1", "0"]}, {"prob": "2/3", "values": ["1/2", "1"]}]"#,
        )
        .unwrap();
        let d = distribution_from_specs(&specs).unwrap();
        assert_eq!(d.exact().unwrap().probs[0], Rational::from_ratio(1, 3));
        assert_eq!(d.values()[0], vec![1.0, 0.5]);
    }
}
