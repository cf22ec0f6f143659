//! JSON run configuration. Every section and field is optional; command-line
//! flags override file values. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use sawkit::afm::DEFAULT_LINE_ORDER;
use sawkit::spectra::ElementLine;
use sawkit::walkoff::DEFAULT_TANGENCY_THRESHOLD_DEG;
use sawkit::xps::{BandModel, ShirleyOptions};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub resonance: ResonanceConfig,
    pub powersweep: PowerSweepConfig,
    pub xps: XpsConfig,
    pub afm: AfmConfig,
    pub walkoff: WalkoffConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    #[default]
    Lorentzian,
    #[value(alias = "dark-mode")]
    #[serde(alias = "dark_mode")]
    Dark,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceConfig {
    pub model: ModelChoice,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSweepConfig {
    /// Pins β; absent means the span-dependent default.
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct XpsConfig {
    /// Relative sensitivity factor per line, e.g. `{"Nb3d": 8.21}`.
    pub sensitivity: Option<BTreeMap<ElementLine, f64>>,
    pub windows: BTreeMap<ElementLine, (f64, f64)>,
    pub bands: BTreeMap<ElementLine, BandModel>,
    pub nb3d52_measured_ev: Option<f64>,
    pub skip_charge_shift: bool,
    pub shirley: Option<ShirleyOptions>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AfmConfig {
    /// Row polynomial degree 0, 1 or 2; `null` disables line flattening.
    pub line_order: Option<usize>,
    /// Three `[x, y]` pixels for plane leveling, applied before flattening.
    pub level_points: Option<[[usize; 2]; 3]>,
}

impl Default for AfmConfig {
    fn default() -> Self {
        AfmConfig {
            line_order: Some(DEFAULT_LINE_ORDER),
            level_points: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkoffConfig {
    /// Moving-average half width in samples; 0 searches the raw curve.
    pub half_width: usize,
    pub tangency_threshold_deg: f64,
}

impl Default for WalkoffConfig {
    fn default() -> Self {
        WalkoffConfig {
            half_width: 0,
            tangency_threshold_deg: DEFAULT_TANGENCY_THRESHOLD_DEG,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", p.display()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(b) = self.powersweep.beta {
            if !(b > 0.0 && b <= 2.0) {
                bail!("powersweep.beta {b} outside (0, 2]");
            }
        }
        if let Some(o) = self.afm.line_order {
            if o > 2 {
                bail!("afm.line_order {o} outside 0..=2");
            }
        }
        if !(self.walkoff.tangency_threshold_deg >= 0.0) {
            bail!("walkoff.tangency_threshold_deg must be >= 0");
        }
        if let Some(s) = &self.xps.shirley {
            if !(s.tol > 0.0) || s.max_iter == 0 {
                bail!("xps.shirley needs tol > 0 and max_iter >= 1");
            }
        }
        for model in self.xps.bands.values() {
            model.validate()?;
        }
        Ok(())
    }
}
