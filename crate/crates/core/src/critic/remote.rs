//! Wire client for an external model acting as critic.
//!
//! One endpoint accepts a JSON request `{id, kind, prompt, image, overlay}`
//! (images are base64 PNG) and answers `{id, text}`. The verdict is read
//! from the last non-empty line of `text`; anything unrecognizable is a
//! protocol error.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{
    CriticError, MaskCritic, MaskJudgment, MaskVerdict, PathCritic, PathIssue, PathJudgment, PathVerdict,
    MASK_CRITIC_PROMPT, PATH_CRITIC_PROMPT,
};
use crate::model::{PathAnnotation, RasterMap, TraversabilityMask};
use crate::render::{map_to_image, mask_to_image, path_overlay, png_bytes};
use crate::segment::CandidateMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticKind {
    Mask,
    Path,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticRequest {
    pub id: String,
    pub kind: CriticKind,
    pub prompt: String,
    pub image: String,
    pub overlay: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticResponse {
    pub id: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Judgment {
    Mask(MaskJudgment),
    Path(PathJudgment),
}

pub trait CriticTransport: Sync {
    fn send(&self, request: &CriticRequest) -> Result<CriticResponse, CriticError>;
}

/// JSON over HTTP POST.
pub struct HttpTransport {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder().timeout_global(Some(timeout)).build();
        Self { endpoint: endpoint.into(), agent: ureq::Agent::new_with_config(config) }
    }
}

impl CriticTransport for HttpTransport {
    fn send(&self, request: &CriticRequest) -> Result<CriticResponse, CriticError> {
        let mut resp =
            self.agent.post(&self.endpoint).send_json(request).map_err(|e| CriticError::Transport(e.to_string()))?;
        resp.body_mut()
            .read_json::<CriticResponse>()
            .map_err(|e| CriticError::Protocol(format!("malformed response body: {e}")))
    }
}

fn last_line(text: &str) -> Option<&str> {
    text.lines().map(str::trim).rfind(|l| !l.is_empty())
}

/// The single verdict word on the last line, matched case-insensitively
/// against `vocab`. Zero or conflicting matches are protocol errors.
fn final_token<T: Copy + PartialEq>(text: &str, vocab: &[(&str, T)]) -> Result<T, CriticError> {
    let line = last_line(text).ok_or_else(|| CriticError::Protocol("empty response".into()))?;
    let mut found: Option<T> = None;
    for word in line.split(|c: char| !c.is_ascii_alphabetic()).filter(|w| !w.is_empty()) {
        if let Some((_, v)) = vocab.iter().find(|(k, _)| k.eq_ignore_ascii_case(word)) {
            match found {
                Some(prev) if prev != *v => {
                    return Err(CriticError::Protocol(format!("conflicting verdicts in `{line}`")));
                }
                _ => found = Some(*v),
            }
        }
    }
    found.ok_or_else(|| CriticError::Protocol(format!("no verdict in final line `{line}`")))
}

pub fn parse_mask_verdict(text: &str) -> Result<MaskVerdict, CriticError> {
    final_token(text, &[("good", MaskVerdict::Good), ("fair", MaskVerdict::Fair), ("poor", MaskVerdict::Poor)])
}

pub fn parse_path_verdict(text: &str) -> Result<PathVerdict, CriticError> {
    final_token(text, &[("good", PathVerdict::Good), ("bad", PathVerdict::Bad)])
}

fn interpret(request: &CriticRequest, response: CriticResponse) -> Result<Judgment, CriticError> {
    if response.id != request.id {
        return Err(CriticError::Protocol(format!(
            "response id `{}` does not match request `{}`",
            response.id, request.id
        )));
    }
    Ok(match request.kind {
        CriticKind::Mask => Judgment::Mask(MaskJudgment {
            verdict: parse_mask_verdict(&response.text)?,
            target_fraction: None,
            notes: response.text,
        }),
        CriticKind::Path => Judgment::Path(match parse_path_verdict(&response.text)? {
            PathVerdict::Good => PathJudgment::good(),
            PathVerdict::Bad => PathJudgment::bad(PathIssue::Unspecified),
        }),
    })
}

/// Send one request over HTTP to `endpoint` and parse the verdict.
pub fn remote_critic(request: &CriticRequest, endpoint: &str) -> Result<Judgment, CriticError> {
    let transport = HttpTransport::new(endpoint, Duration::from_secs(120));
    interpret(request, transport.send(request)?)
}

/// Judge many requests with at most `max_in_flight` outstanding calls.
/// Results are returned in request order.
pub fn judge_batch<T: CriticTransport>(
    transport: &T,
    requests: &[CriticRequest],
    max_in_flight: usize,
) -> Vec<Result<Judgment, CriticError>> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<Judgment, CriticError>>>> =
        Mutex::new((0..requests.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..max_in_flight.max(1).min(requests.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(req) = requests.get(i) else { break };
                let r = transport.send(req).and_then(|resp| interpret(req, resp));
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every index is visited")).collect()
}

/// Adapts a transport to the critic traits, rendering the images it needs.
pub struct RemoteCritic<T> {
    transport: T,
}

impl<T: CriticTransport> RemoteCritic<T> {
    pub fn new(transport: T) -> Self {
        Self { transport }
    }

    pub fn mask_request(map: &RasterMap, candidate: &CandidateMask) -> Result<CriticRequest, CriticError> {
        Ok(CriticRequest {
            id: format!("{}/mask/{}", map.map_id(), candidate.cluster.index),
            kind: CriticKind::Mask,
            prompt: MASK_CRITIC_PROMPT.to_string(),
            image: BASE64.encode(png_bytes(&map_to_image(map))?),
            overlay: BASE64.encode(png_bytes(&mask_to_image(&candidate.mask))?),
        })
    }

    pub fn path_request(map: &RasterMap, path: &PathAnnotation) -> Result<CriticRequest, CriticError> {
        let q = path.query;
        Ok(CriticRequest {
            id: format!("{}/path/{},{}-{},{}", map.map_id(), q.start.x, q.start.y, q.end.x, q.end.y),
            kind: CriticKind::Path,
            prompt: PATH_CRITIC_PROMPT.to_string(),
            image: BASE64.encode(png_bytes(&map_to_image(map))?),
            overlay: BASE64.encode(png_bytes(&path_overlay(map, &path.points))?),
        })
    }
}

impl<T: CriticTransport> MaskCritic for RemoteCritic<T> {
    fn judge_mask(
        &self,
        map: &RasterMap,
        candidate: &CandidateMask,
        _reference: Option<&TraversabilityMask>,
    ) -> Result<MaskJudgment, CriticError> {
        let req = Self::mask_request(map, candidate)?;
        match interpret(&req, self.transport.send(&req)?)? {
            Judgment::Mask(j) => Ok(j),
            Judgment::Path(_) => unreachable!("mask request yields a mask judgment"),
        }
    }
}

impl<T: CriticTransport> PathCritic for RemoteCritic<T> {
    fn judge_path(
        &self,
        map: &RasterMap,
        path: &PathAnnotation,
        _reference: Option<&TraversabilityMask>,
    ) -> Result<PathJudgment, CriticError> {
        let req = Self::path_request(map, path)?;
        match interpret(&req, self.transport.send(&req)?)? {
            Judgment::Path(j) => Ok(j),
            Judgment::Mask(_) => unreachable!("path request yields a path judgment"),
        }
    }
}
