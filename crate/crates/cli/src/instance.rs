//! JSON instance files.

use adaptive_contracts::Setting;
use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub label: String,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub label: String,
    pub inspection_cost: f64,
    pub outcomes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub actions: Vec<ActionSpec>,
    pub signals: Vec<SignalSpec>,
    pub q0: Vec<Vec<f64>>,
    pub qk: Vec<Vec<Vec<f64>>>,
    /// `ℓ × max m_k`; `null` past each signal's outcome count.
    pub rewards: Vec<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pay_surcharge: Option<f64>,
}

impl InstanceFile {
    pub fn from_setting(s: &Setting) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            actions: s
                .action_labels()
                .iter()
                .zip(s.costs())
                .map(|(label, &cost)| ActionSpec {
                    label: label.clone(),
                    cost,
                })
                .collect(),
            signals: (0..s.n_signals())
                .map(|k| SignalSpec {
                    label: s.signal_labels()[k].clone(),
                    inspection_cost: s.inspection_costs()[k],
                    outcomes: s.n_outcomes(k),
                })
                .collect(),
            q0: s.signal_dist().to_vec(),
            qk: s.outcome_dists().to_vec(),
            rewards: s.rewards().to_vec(),
            pay_surcharge: (s.surcharge() != 0.0).then_some(s.surcharge()),
        }
    }

    /// Checks shapes against the declared counts and builds the setting.
    /// Probability and sign invariants are left to `Setting::validate`.
    pub fn to_setting(&self) -> Result<Setting> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        ensure!(
            self.qk.len() == self.signals.len(),
            "{} outcome matrices for {} signals",
            self.qk.len(),
            self.signals.len()
        );
        for (k, (mat, sig)) in self.qk.iter().zip(&self.signals).enumerate() {
            for (i, row) in mat.iter().enumerate() {
                if row.len() != sig.outcomes {
                    bail!(
                        "qk[{k}][{i}] has {} entries but signal '{}' declares {} outcomes",
                        row.len(),
                        sig.label,
                        sig.outcomes
                    );
                }
            }
        }
        let setting = Setting::new(
            self.actions.iter().map(|a| a.cost).collect(),
            self.signals.iter().map(|s| s.inspection_cost).collect(),
            self.q0.clone(),
            self.qk.clone(),
            self.rewards.clone(),
        )?
        .with_labels(
            self.actions.iter().map(|a| a.label.clone()).collect(),
            self.signals.iter().map(|s| s.label.clone()).collect(),
        )?
        .with_surcharge(self.pay_surcharge.unwrap_or(0.0));
        Ok(setting)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}
