//! Rule-based baseline detector.
//!
//! Rules are conjunctions of threshold conditions over named features,
//! evaluated first-match with a default decision — the shape of alerting
//! logic hospitals actually deploy. The baseline flags an example when the
//! recorded decision differs from what the rules recommend.
//!
//! File format, one rule per line, evaluated top to bottom:
//!
//! ```text
//! IF on_heparin >= 1 AND plt_drop_from_first >= 0.5 THEN 1
//! IF on_heparin >= 1 AND plt_last < 100 AND heparin_hours >= 96 THEN 1
//! DEFAULT 0
//! ```
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::dataset::{Decision, Example, FeatureSchema, PatientState};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("rule parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("unknown feature {0:?} in rule")]
    UnknownFeature(String),
    #[error("rule has no conditions")]
    EmptyRule,
    #[error("rule file has no DEFAULT line")]
    MissingDefault,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Comparator {
    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "<" => Some(Comparator::Lt),
            "<=" => Some(Comparator::Le),
            ">" => Some(Comparator::Gt),
            ">=" => Some(Comparator::Ge),
            _ => None,
        }
    }

    pub fn holds(self, value: f64, constant: f64) -> bool {
        match self {
            Comparator::Lt => value < constant,
            Comparator::Le => value <= constant,
            Comparator::Gt => value > constant,
            Comparator::Ge => value >= constant,
        }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
        })
    }
}

/// One threshold condition over a named feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Condition {
    pub feature: String,
    pub comparator: Comparator,
    pub constant: f64,
}

/// A conjunction of conditions recommending a decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub decision: Decision,
}

/// An ordered rule list with a default, resolved against a schema at
/// construction time so evaluation never fails.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    default_decision: Decision,
    /// Per rule: (feature index, comparator, constant).
    resolved: Vec<Vec<(usize, Comparator, f64)>>,
    feature_count: usize,
}

impl RuleSet {
    pub fn new(
        rules: Vec<Rule>,
        default_decision: Decision,
        schema: &FeatureSchema,
    ) -> Result<Self, RuleError> {
        let mut resolved = Vec::with_capacity(rules.len());
        for rule in &rules {
            if rule.conditions.is_empty() {
                return Err(RuleError::EmptyRule);
            }
            let mut indices = Vec::with_capacity(rule.conditions.len());
            for cond in &rule.conditions {
                let index = schema
                    .index_of(&cond.feature)
                    .ok_or_else(|| RuleError::UnknownFeature(cond.feature.clone()))?;
                if !cond.constant.is_finite() {
                    return Err(RuleError::Parse {
                        line: 0,
                        detail: format!("non-finite constant in condition on {}", cond.feature),
                    });
                }
                indices.push((index, cond.comparator, cond.constant));
            }
            resolved.push(indices);
        }
        Ok(Self {
            rules,
            default_decision,
            resolved,
            feature_count: schema.count(),
        })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn default_decision(&self) -> Decision {
        self.default_decision
    }

    /// Parse the rule file format against a schema.
    pub fn parse(text: &str, schema: &FeatureSchema) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        let mut default_decision = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if default_decision.is_some() {
                return Err(RuleError::Parse {
                    line,
                    detail: "content after the DEFAULT line".into(),
                });
            }
            let tokens: Vec<&str> = trimmed.split_whitespace().collect();
            match tokens.as_slice() {
                ["DEFAULT", bit] => {
                    default_decision = Some(parse_decision(bit, line)?);
                }
                ["IF", rest @ ..] => {
                    rules.push(parse_rule(rest, line)?);
                }
                _ => {
                    return Err(RuleError::Parse {
                        line,
                        detail: format!("expected IF ... THEN ... or DEFAULT, found {trimmed:?}"),
                    })
                }
            }
        }
        let default_decision = default_decision.ok_or(RuleError::MissingDefault)?;
        // Surface unknown-feature errors with construction; parse errors
        // above already carry line numbers.
        Self::new(rules, default_decision, schema)
    }

    pub fn from_file(path: &Path, schema: &FeatureSchema) -> Result<Self, RuleError> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text, schema)
    }

    /// Serialize back to the rule file format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str("IF ");
            for (i, cond) in rule.conditions.iter().enumerate() {
                if i > 0 {
                    out.push_str(" AND ");
                }
                out.push_str(&format!("{} {} {}", cond.feature, cond.comparator, cond.constant));
            }
            out.push_str(&format!(" THEN {}\n", rule.decision));
        }
        out.push_str(&format!("DEFAULT {}\n", self.default_decision));
        out
    }
}

fn parse_decision(token: &str, line: usize) -> Result<Decision, RuleError> {
    match token {
        "0" => Ok(Decision::NoOrder),
        "1" => Ok(Decision::Order),
        _ => Err(RuleError::Parse {
            line,
            detail: format!("decision must be 0 or 1, found {token:?}"),
        }),
    }
}

/// Parse `<name> <op> <const> [AND ...] THEN <bit>` (the part after `IF`).
fn parse_rule(tokens: &[&str], line: usize) -> Result<Rule, RuleError> {
    let then_pos = tokens.iter().position(|t| *t == "THEN").ok_or_else(|| RuleError::Parse {
        line,
        detail: "missing THEN".into(),
    })?;
    let (cond_tokens, tail) = tokens.split_at(then_pos);
    let [_, bit] = tail else {
        return Err(RuleError::Parse {
            line,
            detail: "THEN must be followed by exactly one decision".into(),
        });
    };
    let decision = parse_decision(bit, line)?;

    let mut conditions = Vec::new();
    for (i, chunk) in cond_tokens.split(|t| *t == "AND").enumerate() {
        let [feature, op, constant] = chunk else {
            return Err(RuleError::Parse {
                line,
                detail: format!("condition {} must be <feature> <op> <value>", i + 1),
            });
        };
        let comparator = Comparator::parse(op).ok_or_else(|| RuleError::Parse {
            line,
            detail: format!("unknown comparator {op:?}"),
        })?;
        let constant: f64 = constant.parse().map_err(|e| RuleError::Parse {
            line,
            detail: format!("bad constant {constant:?}: {e}"),
        })?;
        if !constant.is_finite() {
            return Err(RuleError::Parse {
                line,
                detail: format!("constant must be finite, found {constant}"),
            });
        }
        conditions.push(Condition {
            feature: feature.to_string(),
            comparator,
            constant,
        });
    }
    if conditions.is_empty() {
        return Err(RuleError::Parse {
            line,
            detail: "rule has no conditions".into(),
        });
    }
    Ok(Rule { conditions, decision })
}

/// What the rules recommend for a state. The state must conform to the
/// schema the rule set was built against.
pub fn rule_decide(rules: &RuleSet, state: &PatientState) -> Decision {
    assert_eq!(
        state.features.len(),
        rules.feature_count,
        "state width does not match the rule set's schema"
    );
    for (rule, conds) in rules.rules.iter().zip(&rules.resolved) {
        if conds
            .iter()
            .all(|(idx, cmp, constant)| cmp.holds(state.features[*idx], *constant))
        {
            return rule.decision;
        }
    }
    rules.default_decision
}

/// The baseline's verdict on a recorded decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleVerdict {
    pub recommended: Decision,
    /// True when the recorded decision differs from the recommendation.
    pub is_anomaly: bool,
}

pub fn rule_detect(rules: &RuleSet, example: &Example) -> RuleVerdict {
    let recommended = rule_decide(rules, &example.state);
    RuleVerdict {
        recommended,
        is_anomaly: example.decision != recommended,
    }
}
