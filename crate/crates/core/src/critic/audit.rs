//! Agreement between critic verdicts and human review.

use std::io::Read;

use serde::{Deserialize, Serialize};

use super::CriticError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditKind {
    Mask,
    Path,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub item_id: String,
    pub kind: AuditKind,
    pub critic_verdict: Decision,
    pub human_verdict: Decision,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditSummary {
    pub total: usize,
    pub matches: usize,
    pub accuracy: f64,
    /// Critic accepted what a human rejected.
    pub false_positives: usize,
    pub human_rejections: usize,
    /// `None` when no item was rejected by a human.
    pub false_positive_rate: Option<f64>,
}

impl AuditSummary {
    pub fn accuracy_percent(&self) -> u32 {
        (self.accuracy * 100.0).round() as u32
    }

    pub fn false_positive_percent(&self) -> Option<u32> {
        self.false_positive_rate.map(|r| (r * 100.0).round() as u32)
    }

    /// Whole-percent rendering, e.g. `accuracy 76%, FPR 8%`.
    pub fn display(&self) -> String {
        let fpr = match self.false_positive_percent() {
            Some(p) => format!("{p}%"),
            None => "n/a".to_string(),
        };
        format!("items {}, accuracy {}%, FPR {fpr}", self.total, self.accuracy_percent())
    }
}

pub fn audit(records: &[AuditRecord]) -> Result<AuditSummary, CriticError> {
    if records.is_empty() {
        return Err(CriticError::EmptyAudit);
    }
    let matches = records.iter().filter(|r| r.critic_verdict == r.human_verdict).count();
    let human_rejections = records.iter().filter(|r| r.human_verdict == Decision::Reject).count();
    let false_positives =
        records.iter().filter(|r| r.human_verdict == Decision::Reject && r.critic_verdict == Decision::Accept).count();
    Ok(AuditSummary {
        total: records.len(),
        matches,
        accuracy: matches as f64 / records.len() as f64,
        false_positives,
        human_rejections,
        false_positive_rate: (human_rejections > 0).then(|| false_positives as f64 / human_rejections as f64),
    })
}

/// Read `item_id,kind,critic_verdict,human_verdict` rows.
pub fn read_audit_csv<R: Read>(reader: R) -> Result<Vec<AuditRecord>, CriticError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CriticError::AuditRead(e.to_string()))?.clone();
    let expected = ["item_id", "kind", "critic_verdict", "human_verdict"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(CriticError::AuditRead(format!("expected header `{}`", expected.join(","))));
    }
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| CriticError::AuditRead(format!("row {}: {e}", i + 2))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(i: usize, critic: Decision, human: Decision) -> AuditRecord {
        AuditRecord { item_id: format!("i{i}"), kind: AuditKind::Path, critic_verdict: critic, human_verdict: human }
    }

    #[test]
    fn all_agree_without_rejections() {
        let rs: Vec<_> = (0..10).map(|i| rec(i, Decision::Accept, Decision::Accept)).collect();
        let s = audit(&rs).unwrap();
        assert_eq!(s.accuracy_percent(), 100);
        assert_eq!(s.false_positive_rate, None);
        assert_eq!(s.display(), "items 10, accuracy 100%, FPR n/a");
        assert!(matches!(audit(&[]), Err(CriticError::EmptyAudit)));
    }

    #[test]
    fn random_sets_match_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let n = rng.random_range(1..80);
            let d = |b: bool| if b { Decision::Accept } else { Decision::Reject };
            let rs: Vec<_> = (0..n).map(|i| rec(i, d(rng.random()), d(rng.random()))).collect();
            let (mut m, mut hr, mut fp) = (0, 0, 0);
            for r in &rs {
                if r.critic_verdict == r.human_verdict {
                    m += 1;
                }
                if r.human_verdict == Decision::Reject {
                    hr += 1;
                    if r.critic_verdict == Decision::Accept {
                        fp += 1;
                    }
                }
            }
            let s = audit(&rs).unwrap();
            assert_eq!((s.matches, s.human_rejections, s.false_positives), (m, hr, fp));
            assert_eq!(s.accuracy, m as f64 / n as f64);
            assert!((0.0..=1.0).contains(&s.accuracy));
            if hr > 0 {
                assert_eq!(s.false_positive_rate, Some(fp as f64 / hr as f64));
            }
        }
    }

    #[test]
    fn csv_reading() {
        let text = "item_id,kind,critic_verdict,human_verdict\na,mask,accept,reject\nb, path ,reject,reject\n";
        let rs = read_audit_csv(text.as_bytes()).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[1].kind, AuditKind::Path);
        let bad = "item_id,kind,critic_verdict,human_verdict\na,mask,maybe,reject\n";
        let err = read_audit_csv(bad.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("row 2"), "{err}");
        assert!(read_audit_csv("id,kind\n".as_bytes()).is_err());
    }
}
