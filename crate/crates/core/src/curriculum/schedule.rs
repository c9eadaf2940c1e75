use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::{Corruption, MaskingConfig, MaskingStrategy};

/// The four curriculum stages, in training order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseVersion {
    #[serde(rename = "0.1")]
    V01,
    #[serde(rename = "0.2")]
    V02,
    #[serde(rename = "0.3")]
    V03,
    #[serde(rename = "0.4")]
    V04,
}

impl PhaseVersion {
    pub const ALL: [PhaseVersion; 4] = [Self::V01, Self::V02, Self::V03, Self::V04];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::V01 => "0.1",
            Self::V02 => "0.2",
            Self::V03 => "0.3",
            Self::V04 => "0.4",
        }
    }
}

impl fmt::Display for PhaseVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PhaseVersion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownPhase(s.to_string()))
    }
}

/// Masking setup of each stage. Difficulty grows one axis at a time:
/// single tokens to whole words, then a higher rate, then no corruption.
pub fn phase_config(version: PhaseVersion) -> MaskingConfig {
    use Corruption::*;
    use MaskingStrategy::*;
    match version {
        PhaseVersion::V01 => MaskingConfig::new(Token, 0.15, EightyTenTen),
        PhaseVersion::V02 => MaskingConfig::new(WholeWord, 0.15, EightyTenTen),
        PhaseVersion::V03 => MaskingConfig::new(WholeWord, 0.2, EightyTenTen),
        PhaseVersion::V04 => MaskingConfig::new(WholeWord, 0.2, MaskOnly),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurriculumPhase {
    pub version: PhaseVersion,
    pub masking: MaskingConfig,
    pub steps: u64,
    pub peak_lr: f64,
}

/// Relative step budgets of the four phases. The only guidance is that each
/// phase trains longer than the previous one; the exact ratio is arbitrary.
pub const DEFAULT_BUDGET_RATIO: [f64; 4] = [1.0, 1.25, 1.5, 1.75];

/// Splits `total_steps` over the phases in proportion to `ratio`. Each
/// phase gets the floor of its share and the last one takes the remainder.
pub fn split_budget(total_steps: u64, ratio: &[f64; 4]) -> Result<[u64; 4]> {
    if ratio.iter().any(|r| !r.is_finite() || *r <= 0.0) {
        return Err(Error::InvalidArgument(
            "phase budget ratios must be positive".into(),
        ));
    }
    let sum: f64 = ratio.iter().sum();
    let mut out = [0u64; 4];
    let mut used = 0;
    for i in 0..3 {
        out[i] = (total_steps as f64 * ratio[i] / sum).floor() as u64;
        used += out[i];
    }
    out[3] = total_steps - used;
    Ok(out)
}

/// The four phases with the given step budgets.
pub fn default_phases(steps: [u64; 4], peak_lr: f64) -> Vec<CurriculumPhase> {
    PhaseVersion::ALL
        .iter()
        .zip(steps)
        .map(|(&version, steps)| CurriculumPhase {
            version,
            masking: phase_config(version),
            steps,
            peak_lr,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrPlan {
    pub peak_lr: f64,
    pub warmup_fraction: f64,
}

impl Default for LrPlan {
    fn default() -> Self {
        Self {
            peak_lr: 1e-4,
            warmup_fraction: 0.06,
        }
    }
}

impl LrPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr.is_finite() && self.peak_lr >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "peak_lr {} must be finite and non-negative",
                self.peak_lr
            )));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::InvalidArgument(format!(
                "warmup_fraction {} outside [0, 1)",
                self.warmup_fraction
            )));
        }
        Ok(())
    }

    /// Number of warmup steps out of `total`, rounded and kept below `total`.
    pub fn warmup_steps(&self, total: u64) -> u64 {
        ((self.warmup_fraction * total as f64).round() as u64).min(total.saturating_sub(1))
    }
}

/// Cumulative end step of each phase; the last entry is the total.
pub fn phase_boundaries(phases: &[CurriculumPhase]) -> Vec<u64> {
    phases
        .iter()
        .scan(0u64, |acc, p| {
            *acc += p.steps;
            Some(*acc)
        })
        .collect()
}

/// Learning rate at `step` of the whole curriculum.
///
/// One schedule spans every phase: linear warmup from 0 to the peak, then
/// linear decay to 0 at the last step. Starting a new phase does not warm
/// up again, so each restart resumes at a lower rate.
pub fn lr_at(step: u64, plan: &LrPlan, boundaries: &[u64]) -> Result<f64> {
    plan.validate()?;
    let total = boundaries.last().copied().unwrap_or(0);
    if boundaries.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "phase boundaries must be non-decreasing".into(),
        ));
    }
    if total == 0 || step > total {
        return Err(Error::StepOutOfRange { step, total });
    }
    let warmup = plan.warmup_steps(total);
    let lr = if step < warmup {
        plan.peak_lr * (step as f64 / warmup as f64)
    } else {
        plan.peak_lr * ((total - step) as f64 / (total - warmup) as f64)
    };
    Ok(lr.max(0.0))
}

/// One row of the schedule manifest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleRow {
    pub step: u64,
    pub phase: PhaseVersion,
    pub masking: MaskingConfig,
    pub lr: f64,
}

/// Per-step plan for steps `0..total`: the phase a step belongs to, its
/// masking setup and its learning rate.
pub fn schedule_rows(phases: &[CurriculumPhase], plan: &LrPlan) -> Result<Vec<ScheduleRow>> {
    if phases.is_empty() {
        return Err(Error::InvalidArgument("no curriculum phases".into()));
    }
    for w in phases.windows(2) {
        if w[1].version <= w[0].version {
            return Err(Error::InvalidArgument(
                "phases must appear in curriculum order".into(),
            ));
        }
    }
    let boundaries = phase_boundaries(phases);
    let total = *boundaries.last().unwrap();
    let mut rows = Vec::with_capacity(total as usize);
    let mut phase = 0;
    for step in 0..total {
        while step >= boundaries[phase] {
            phase += 1;
        }
        let p = &phases[phase];
        rows.push(ScheduleRow {
            step,
            phase: p.version,
            masking: p.masking,
            lr: lr_at(step, plan, &boundaries)?,
        });
    }
    Ok(rows)
}

/// Writes the CSV manifest `step,phase,strategy,rate,corruption,lr`.
pub fn emit_schedule(
    phases: &[CurriculumPhase],
    plan: &LrPlan,
    path: impl AsRef<Path>,
) -> Result<Vec<ScheduleRow>> {
    let path = path.as_ref();
    let rows = schedule_rows(phases, plan)?;
    let mut out = Vec::with_capacity(rows.len() * 48);
    writeln!(out, "step,phase,strategy,rate,corruption,lr").unwrap();
    for r in &rows {
        writeln!(
            out,
            "{},{},{},{},{},{:e}",
            r.step, r.phase, r.masking.strategy, r.masking.rate, r.masking.corruption, r.lr
        )
        .unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    Ok(rows)
}
