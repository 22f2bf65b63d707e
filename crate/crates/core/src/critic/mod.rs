//! Quality gates for candidate masks and generated paths.
//!
//! Two families implement the [`MaskCritic`] / [`PathCritic`] traits:
//! heuristic critics that score against a known ground-truth mask, and a
//! remote critic that ships the rubric prompts plus rendered images to an
//! external model endpoint. Every error is fail-closed: callers reject the
//! sample.

mod audit;
mod heuristic;
mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, PathAnnotation, RasterMap, TraversabilityMask};
use crate::render::RenderError;
use crate::segment::CandidateMask;

pub use audit::{audit, read_audit_csv, AuditKind, AuditRecord, AuditSummary, Decision};
pub use heuristic::{heuristic_mask_critic, heuristic_path_critic, HeuristicMaskCritic, HeuristicPathCritic};
pub use remote::{
    judge_batch, parse_mask_verdict, parse_path_verdict, remote_critic, CriticKind, CriticRequest, CriticResponse,
    CriticTransport, HttpTransport, Judgment, RemoteCritic,
};

pub const MASK_CRITIC_PROMPT: &str = include_str!("../../assets/mask_critic_prompt.txt");
pub const PATH_CRITIC_PROMPT: &str = include_str!("../../assets/path_critic_prompt.txt");

/// Precision above which a mask is `Good`.
pub const GOOD_THRESHOLD: f64 = 0.60;
/// Precision below which a mask is `Poor`.
pub const POOR_THRESHOLD: f64 = 0.40;

#[derive(Debug, Error)]
pub enum CriticError {
    #[error("heuristic critic needs a ground-truth reference mask")]
    MissingReference,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("critic transport: {0}")]
    Transport(String),
    #[error("critic protocol: {0}")]
    Protocol(String),
    #[error("audit needs at least one record")]
    EmptyAudit,
    #[error("reading audit table: {0}")]
    AuditRead(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskVerdict {
    Good,
    Fair,
    Poor,
}

impl MaskVerdict {
    pub fn from_fraction(target_fraction: f64) -> Self {
        if target_fraction > GOOD_THRESHOLD {
            MaskVerdict::Good
        } else if target_fraction < POOR_THRESHOLD {
            MaskVerdict::Poor
        } else {
            MaskVerdict::Fair
        }
    }

    /// Whether a mask with this verdict is merged.
    pub fn accepted(self, admit_fair: bool) -> bool {
        match self {
            MaskVerdict::Good => true,
            MaskVerdict::Fair => admit_fair,
            MaskVerdict::Poor => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskJudgment {
    pub verdict: MaskVerdict,
    /// Fraction of the mask's area on target regions; `None` when the critic
    /// only returned a verdict.
    pub target_fraction: Option<f64>,
    pub notes: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PathVerdict {
    Good,
    Bad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathIssue {
    None,
    BoundaryViolation,
    TraversabilityViolation,
    /// A remote critic answered BAD without a machine-readable reason.
    Unspecified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathJudgment {
    verdict: PathVerdict,
    reason: PathIssue,
}

impl PathJudgment {
    pub fn good() -> Self {
        Self { verdict: PathVerdict::Good, reason: PathIssue::None }
    }

    pub fn bad(reason: PathIssue) -> Self {
        debug_assert!(reason != PathIssue::None);
        let reason = if reason == PathIssue::None { PathIssue::Unspecified } else { reason };
        Self { verdict: PathVerdict::Bad, reason }
    }

    pub fn verdict(&self) -> PathVerdict {
        self.verdict
    }

    pub fn reason(&self) -> PathIssue {
        self.reason
    }

    pub fn is_good(&self) -> bool {
        self.verdict == PathVerdict::Good
    }
}

pub trait MaskCritic: Sync {
    fn judge_mask(
        &self,
        map: &RasterMap,
        candidate: &CandidateMask,
        reference: Option<&TraversabilityMask>,
    ) -> Result<MaskJudgment, CriticError>;
}

pub trait PathCritic: Sync {
    fn judge_path(
        &self,
        map: &RasterMap,
        path: &PathAnnotation,
        reference: Option<&TraversabilityMask>,
    ) -> Result<PathJudgment, CriticError>;
}
