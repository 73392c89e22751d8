//! JSON descriptors for groups and ψ.
//!
//! ```json
//! {"group": {"kind": "dihedral", "n": 3}, "psi": {"kind": "delta", "scale": 1.0}}
//! ```
//!
//! A flat shorthand is accepted as well, with one group key and one ψ key:
//!
//! ```json
//! {"cyclic": 2, "delta": 1}
//! {"hypercube": 3, "hamming": true}
//! {"table": [[0, 1], [1, 0]], "psi": [0, 1]}
//! ```

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::cocycle::{CndFunction, DEFAULT_CND_TOL};
use crate::error::{Error, Result};
use crate::group::{FiniteGroup, GroupKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GroupDescriptor {
    Cyclic { n: usize },
    Dihedral { n: usize },
    Hypercube { n: usize },
    Symmetric { n: usize },
    Table { mult: Vec<Vec<usize>> },
}

impl GroupDescriptor {
    pub fn build(&self) -> Result<Arc<FiniteGroup>> {
        let g = match self {
            Self::Cyclic { n } => FiniteGroup::cyclic(*n)?,
            Self::Dihedral { n } => FiniteGroup::dihedral(*n)?,
            Self::Hypercube { n } => FiniteGroup::hypercube(*n)?,
            Self::Symmetric { n } => FiniteGroup::symmetric(*n)?,
            Self::Table { mult } => FiniteGroup::from_table(mult.clone())?,
        };
        Ok(Arc::new(g))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PsiDescriptor {
    Table { values: Vec<f64> },
    Delta { scale: f64 },
    Hamming,
}

impl PsiDescriptor {
    /// Raw values of ψ on `group`, before any cnd certification.
    pub fn values(&self, group: &FiniteGroup) -> Result<Vec<f64>> {
        match self {
            Self::Table { values } => {
                if values.len() != group.order() {
                    return Err(Error::InvalidPsi(format!(
                        "psi table has {} values, group has order {}",
                        values.len(),
                        group.order()
                    )));
                }
                Ok(values.clone())
            }
            Self::Delta { scale } => {
                if scale.is_nan() || *scale <= 0.0 {
                    return Err(Error::InvalidPsi(format!(
                        "delta scale must be positive, got {scale}"
                    )));
                }
                Ok(group
                    .elements()
                    .map(|s| if s == group.identity() { 0.0 } else { *scale })
                    .collect())
            }
            Self::Hamming => match group.kind() {
                GroupKind::Hypercube(_) => {
                    Ok(group.elements().map(|s| s.count_ones() as f64).collect())
                }
                _ => Err(Error::InvalidPsi(format!(
                    "hamming psi needs a hypercube group, got {}",
                    group.name()
                ))),
            },
        }
    }

    pub fn build(&self, group: &Arc<FiniteGroup>) -> Result<CndFunction> {
        CndFunction::new(group, self.values(group)?, DEFAULT_CND_TOL)
    }
}

/// Contents of an input file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDescriptor {
    pub group: GroupDescriptor,
    pub psi: PsiDescriptor,
}

impl ProblemDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        match &value {
            Value::Object(map) if !map.contains_key("group") => Self::from_shorthand(map),
            _ => Ok(serde_json::from_value(value)?),
        }
    }

    fn from_shorthand(map: &Map<String, Value>) -> Result<Self> {
        let mut group = None;
        let mut psi = None;
        for (key, v) in map {
            let size = || {
                v.as_u64()
                    .map(|n| n as usize)
                    .ok_or_else(|| Error::Parse(format!("\"{key}\" expects a positive integer")))
            };
            let slot = match key.as_str() {
                "cyclic" => (&mut group, GroupDescriptor::Cyclic { n: size()? }.into()),
                "dihedral" => (&mut group, GroupDescriptor::Dihedral { n: size()? }.into()),
                "hypercube" => (&mut group, GroupDescriptor::Hypercube { n: size()? }.into()),
                "symmetric" => (&mut group, GroupDescriptor::Symmetric { n: size()? }.into()),
                "table" => (
                    &mut group,
                    GroupDescriptor::Table {
                        mult: serde_json::from_value(v.clone())?,
                    }
                    .into(),
                ),
                "delta" => {
                    let scale = v
                        .as_f64()
                        .ok_or_else(|| Error::Parse("\"delta\" expects a number".into()))?;
                    (&mut psi, Part::Psi(PsiDescriptor::Delta { scale }))
                }
                "hamming" => (&mut psi, Part::Psi(PsiDescriptor::Hamming)),
                "psi" => (
                    &mut psi,
                    Part::Psi(PsiDescriptor::Table {
                        values: serde_json::from_value(v.clone())?,
                    }),
                ),
                other => return Err(Error::Parse(format!("unknown key \"{other}\""))),
            };
            if slot.0.replace(slot.1).is_some() {
                return Err(Error::Parse(format!(
                    "\"{key}\" conflicts with an earlier key"
                )));
            }
        }
        match (group, psi) {
            (Some(Part::Group(group)), Some(Part::Psi(psi))) => Ok(Self { group, psi }),
            _ => Err(Error::Parse(
                "input needs one group key and one psi key".into(),
            )),
        }
    }
}

enum Part {
    Group(GroupDescriptor),
    Psi(PsiDescriptor),
}

impl From<GroupDescriptor> for Part {
    fn from(g: GroupDescriptor) -> Self {
        Part::Group(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_kinds() {
        let p = ProblemDescriptor::from_json(
            r#"{"group":{"kind":"hypercube","n":3},"psi":{"kind":"hamming"}}"#,
        )
        .unwrap();
        let g = p.group.build().unwrap();
        assert_eq!(g.order(), 8);
        assert_eq!(p.psi.build(&g).unwrap().value(7), 3.0);

        let p = ProblemDescriptor::from_json(
            r#"{"group":{"kind":"table","mult":[[0,1],[1,0]]},"psi":{"kind":"table","values":[0,2.5]}}"#,
        )
        .unwrap();
        let g = p.group.build().unwrap();
        assert_eq!(p.psi.build(&g).unwrap().values(), &[0.0, 2.5]);

        for kind in ["cyclic", "dihedral", "symmetric"] {
            let text = format!(
                r#"{{"group":{{"kind":"{kind}","n":3}},"psi":{{"kind":"delta","scale":1}}}}"#
            );
            let p = ProblemDescriptor::from_json(&text).unwrap();
            let g = p.group.build().unwrap();
            p.psi.build(&g).unwrap();
        }
    }

    #[test]
    fn shorthand() {
        let p = ProblemDescriptor::from_json(r#"{"cyclic":2, "delta":1}"#).unwrap();
        assert_eq!(p.group, GroupDescriptor::Cyclic { n: 2 });
        assert_eq!(p.psi, PsiDescriptor::Delta { scale: 1.0 });
        let p = ProblemDescriptor::from_json(r#"{"hypercube":3, "hamming":true}"#).unwrap();
        assert_eq!(p.psi, PsiDescriptor::Hamming);
        let p = ProblemDescriptor::from_json(r#"{"table":[[0,1],[1,0]], "psi":[0,1]}"#).unwrap();
        assert_eq!(
            p.psi,
            PsiDescriptor::Table {
                values: vec![0.0, 1.0]
            }
        );
        assert!(ProblemDescriptor::from_json(r#"{"cyclic":2}"#).is_err());
        assert!(ProblemDescriptor::from_json(r#"{"cyclic":2, "dihedral":3, "delta":1}"#).is_err());
        assert!(ProblemDescriptor::from_json(r#"{"cyclic":-2, "delta":1}"#).is_err());
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(ProblemDescriptor::from_json(r#"{"group":{"kind":"cyclic"}}"#).is_err());
        assert!(ProblemDescriptor::from_json(
            r#"{"group":{"kind":"torus","n":2},"psi":{"kind":"hamming"}}"#
        )
        .is_err());
        let p = ProblemDescriptor::from_json(
            r#"{"group":{"kind":"cyclic","n":4},"psi":{"kind":"hamming"}}"#,
        )
        .unwrap();
        assert!(p.psi.build(&p.group.build().unwrap()).is_err());
    }
}
