//! JSON run configuration. The schema is versioned and unknown keys are
//! rejected so a typo cannot silently change attack parameters.

use serde::{Deserialize, Serialize};

use maskfault_core::campaign::{CampaignConfig, StopRule};
use maskfault_core::fault::{BitPattern, FaultKind, FaultProfile, ProfileEntry};
use maskfault_core::params::{Scheme, SchemeParams};
use maskfault_core::solver::{LikelihoodMode, SolverConfig};
use maskfault_core::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub scheme: String,
    pub seed: u64,
    pub order: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2b_width: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<CampaignSection>,
    #[serde(default)]
    pub solver: SolverSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignSection {
    pub beta: u32,
    pub filter_pool: u32,
    pub rejection_rate: f64,
    pub stop: StopSection,
    pub fault: FaultSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ciphertexts: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inequalities: Option<u64>,
}

/// Wire form of a fault profile:
/// `{"mix":[{"p":0.1,"bits":[11]},{"p":0.9,"bits":"random-subset-1-8"}],
///   "kind":"stuck1","share":0,"coeff":0}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSection {
    pub mix: Vec<MixEntry>,
    pub kind: String,
    pub share: usize,
    pub coeff: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixEntry {
    pub p: f64,
    pub bits: BitsSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BitsSpec {
    Positions(Vec<u8>),
    Pattern(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub max_iterations: u32,
    pub convergence_threshold: f64,
    pub damping: f64,
    pub variance_floor: f64,
    pub mode: LikelihoodMode,
    pub sweep: Vec<u64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let base = SolverConfig::default();
        SolverSection {
            max_iterations: base.max_iterations,
            convergence_threshold: base.convergence_threshold,
            damping: base.damping,
            variance_floor: base.variance_floor,
            mode: base.mode,
            sweep: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| Error::config(format!("config: {e}")))?;
        if cfg.version != CONFIG_VERSION {
            return Err(Error::config(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn scheme(&self) -> Result<Scheme> {
        Scheme::from_name(&self.scheme)
    }

    pub fn params(&self) -> Result<SchemeParams> {
        Ok(self.scheme()?.params())
    }

    /// Materializes the campaign section; errors when absent.
    pub fn campaign_config(&self, params: &SchemeParams) -> Result<CampaignConfig> {
        let section = self
            .campaign
            .as_ref()
            .ok_or_else(|| Error::config("config has no campaign section"))?;
        let stop = match (section.stop.ciphertexts, section.stop.inequalities) {
            (Some(n), None) => StopRule::Ciphertexts(n),
            (None, Some(n)) => StopRule::Inequalities(n),
            _ => {
                return Err(Error::config(
                    "stop must set exactly one of ciphertexts / inequalities",
                ))
            }
        };
        let cfg = CampaignConfig {
            order: self.order,
            a2b_width: self.a2b_width,
            coeff_index: section.fault.coeff,
            beta: section.beta,
            filter_pool: section.filter_pool,
            rejection_rate: section.rejection_rate,
            stop,
            profile: parse_profile(&section.fault)?,
            seed: self.seed,
        };
        cfg.validate(params)?;
        Ok(cfg)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            max_iterations: self.solver.max_iterations,
            convergence_threshold: self.solver.convergence_threshold,
            damping: self.solver.damping,
            variance_floor: self.solver.variance_floor,
            mode: self.solver.mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_kind(kind: &str) -> Result<FaultKind> {
    match kind {
        "stuck1" => Ok(FaultKind::StuckAt1),
        "stuck0" => Ok(FaultKind::StuckAt0),
        "flip" => Ok(FaultKind::BitFlip),
        other => Err(Error::config(format!(
            "unknown fault kind {other:?} (expected stuck1, stuck0 or flip)"
        ))),
    }
}

fn parse_bits(bits: &BitsSpec) -> Result<BitPattern> {
    match bits {
        BitsSpec::Positions(list) => Ok(BitPattern::Fixed(list.clone())),
        BitsSpec::Pattern(text) => {
            let rest = text.strip_prefix("random-subset-").ok_or_else(|| {
                Error::config(format!("unknown bit pattern {text:?}"))
            })?;
            let (lo, hi) = rest.split_once('-').ok_or_else(|| {
                Error::config(format!("bit pattern {text:?} needs the form random-subset-LO-HI"))
            })?;
            let lo: u8 = lo
                .parse()
                .map_err(|_| Error::config(format!("bad bit range in {text:?}")))?;
            let hi: u8 = hi
                .parse()
                .map_err(|_| Error::config(format!("bad bit range in {text:?}")))?;
            Ok(BitPattern::RandomSubset { lo, hi })
        }
    }
}

pub fn parse_profile(fault: &FaultSection) -> Result<FaultProfile> {
    let kind = parse_kind(&fault.kind)?;
    let entries = fault
        .mix
        .iter()
        .map(|entry| {
            Ok(ProfileEntry {
                probability: entry.p,
                kind,
                share_index: fault.share,
                bits: parse_bits(&entry.bits)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let profile = FaultProfile { entries };
    profile.validate()?;
    Ok(profile)
}
