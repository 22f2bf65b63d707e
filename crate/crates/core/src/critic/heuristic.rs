use super::{CriticError, MaskCritic, MaskJudgment, MaskVerdict, PathCritic, PathIssue, PathJudgment};
use crate::model::{PathAnnotation, RasterMap, TraversabilityMask};
use crate::raster::bresenham_polyline;
use crate::segment::CandidateMask;

/// Judge a candidate by its precision against the ground truth:
/// `|candidate ∧ reference| / |candidate|`.
pub fn heuristic_mask_critic(
    candidate: &CandidateMask,
    reference: &TraversabilityMask,
) -> Result<MaskJudgment, CriticError> {
    reference.ensure_same_dims(candidate.mask.dims())?;
    let mut set = 0usize;
    let mut hit = 0usize;
    for (c, r) in candidate.mask.bits().iter().zip(reference.bits()) {
        if *c {
            set += 1;
            hit += usize::from(*r);
        }
    }
    let fraction = if set == 0 { 0.0 } else { hit as f64 / set as f64 };
    let verdict = MaskVerdict::from_fraction(fraction);
    Ok(MaskJudgment {
        verdict,
        target_fraction: Some(fraction),
        notes: format!("{hit} of {set} mask pixels on target"),
    })
}

/// Rasterize the path as drawn (thin Bresenham polyline). Any pixel outside
/// the image is a boundary violation; any pixel outside the reference
/// dilated by `margin` is a traversability violation.
pub fn heuristic_path_critic(
    path: &PathAnnotation,
    map: &RasterMap,
    reference: &TraversabilityMask,
    margin: u32,
) -> Result<PathJudgment, CriticError> {
    reference.ensure_same_dims(map.dims())?;
    let pixels = bresenham_polyline(&path.points);
    let (w, h) = map.dims();
    if pixels.iter().any(|p| !p.in_bounds(w, h)) {
        return Ok(PathJudgment::bad(PathIssue::BoundaryViolation));
    }
    let allowed = reference.dilate(margin);
    if pixels.iter().any(|p| !allowed.get(*p)) {
        return Ok(PathJudgment::bad(PathIssue::TraversabilityViolation));
    }
    Ok(PathJudgment::good())
}

#[derive(Clone, Copy, Debug, Default)]
pub struct HeuristicMaskCritic;

impl MaskCritic for HeuristicMaskCritic {
    fn judge_mask(
        &self,
        _map: &RasterMap,
        candidate: &CandidateMask,
        reference: Option<&TraversabilityMask>,
    ) -> Result<MaskJudgment, CriticError> {
        heuristic_mask_critic(candidate, reference.ok_or(CriticError::MissingReference)?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct HeuristicPathCritic {
    pub margin: u32,
}

impl PathCritic for HeuristicPathCritic {
    fn judge_path(
        &self,
        map: &RasterMap,
        path: &PathAnnotation,
        reference: Option<&TraversabilityMask>,
    ) -> Result<PathJudgment, CriticError> {
        heuristic_path_critic(path, map, reference.ok_or(CriticError::MissingReference)?, self.margin)
    }
}
