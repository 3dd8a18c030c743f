use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::attacker::{Attacker, Embedding};
use crate::error::{Error, Result};
use crate::signal::GazeSignal;

/// Enrollment templates keyed by subject id.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Templates(BTreeMap<u32, Embedding>);

impl Templates {
    /// Builds one template per subject as the unit-normalized mean of its
    /// embeddings.
    pub fn from_embeddings<I: IntoIterator<Item = (u32, Embedding)>>(items: I) -> Result<Self> {
        let mut groups: BTreeMap<u32, Vec<Embedding>> = BTreeMap::new();
        for (s, e) in items {
            groups.entry(s).or_default().push(e);
        }
        if groups.is_empty() {
            return Err(Error::domain("empty enrollment"));
        }
        let mut out = BTreeMap::new();
        for (s, es) in groups {
            out.insert(s, Embedding::mean(&es)?);
        }
        Ok(Self(out))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, subject: u32) -> Option<&Embedding> {
        self.0.get(&subject)
    }

    /// Templates in ascending subject order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &Embedding)> {
        self.0.iter().map(|(s, e)| (*s, e))
    }
}

/// Builds templates from enrollment recordings, pooling every feature vector
/// of a subject's recordings.
pub fn enroll(attacker: &Attacker, recordings: &[(u32, &GazeSignal)]) -> Result<Templates> {
    use rayon::prelude::*;
    let per: Vec<(u32, Vec<Embedding>)> = recordings
        .par_iter()
        .map(|(s, sig)| {
            let embs = super::extract_features(sig)
                .iter()
                .map(|f| attacker.embed(f))
                .collect::<Result<Vec<_>>>()?;
            Ok((*s, embs))
        })
        .collect::<Result<_>>()?;
    let mut pooled: BTreeMap<u32, Vec<Embedding>> = BTreeMap::new();
    for (s, embs) in per {
        pooled.entry(s).or_default().extend(embs);
    }
    if let Some((s, _)) = pooled.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::domain(format!("empty enrollment for subject {s}: no feature vectors")));
    }
    Templates::from_embeddings(pooled.into_iter().flat_map(|(s, v)| v.into_iter().map(move |e| (s, e))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Genuine,
    Imposter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub kind: ScoreKind,
    pub template_subject: u32,
    pub probe_subject: u32,
    pub score: f64,
}

/// Genuine and imposter similarity scores.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreSet {
    pub scores: Vec<Score>,
}

impl ScoreSet {
    /// Unlabeled score lists, mostly for tests and metric experiments.
    pub fn from_values(genuine: &[f64], imposter: &[f64]) -> Self {
        let mk = |kind, score| Score {
            kind,
            template_subject: 0,
            probe_subject: 0,
            score,
        };
        let scores = genuine
            .iter()
            .map(|&s| mk(ScoreKind::Genuine, s))
            .chain(imposter.iter().map(|&s| mk(ScoreKind::Imposter, s)))
            .collect();
        Self { scores }
    }

    pub fn genuine(&self) -> Vec<f64> {
        self.of(ScoreKind::Genuine)
    }

    pub fn imposter(&self) -> Vec<f64> {
        self.of(ScoreKind::Imposter)
    }

    fn of(&self, kind: ScoreKind) -> Vec<f64> {
        self.scores.iter().filter(|s| s.kind == kind).map(|s| s.score).collect()
    }
}

/// Scores every (template, probe) pair. Probes of subjects without a
/// template are skipped with a warning.
pub fn score_embeddings(templates: &Templates, probes: &[(u32, Embedding)]) -> ScoreSet {
    let mut scores = Vec::new();
    for (p_subject, p) in probes {
        if templates.get(*p_subject).is_none() {
            log::warn!("probe of subject {p_subject} has no enrollment template; skipped");
            continue;
        }
        for (t_subject, t) in templates.iter() {
            scores.push(Score {
                kind: if t_subject == *p_subject {
                    ScoreKind::Genuine
                } else {
                    ScoreKind::Imposter
                },
                template_subject: t_subject,
                probe_subject: *p_subject,
                score: t.cosine(p),
            });
        }
    }
    ScoreSet { scores }
}

/// Embeds probe recordings and scores them against the templates.
pub fn score(attacker: &Attacker, templates: &Templates, probes: &[(u32, &GazeSignal)]) -> Result<ScoreSet> {
    Ok(score_embeddings(templates, &embedded_probes(attacker, probes)?))
}

/// Probe embeddings, dropping recordings that yield no feature vector.
pub fn embedded_probes(attacker: &Attacker, probes: &[(u32, &GazeSignal)]) -> Result<Vec<(u32, Embedding)>> {
    Ok(attacker
        .embed_recordings(probes)?
        .into_iter()
        .filter_map(|(s, e)| {
            if e.is_none() {
                log::warn!("probe recording of subject {s} yields no feature vector; skipped");
            }
            e.map(|e| (s, e))
        })
        .collect())
}

/// Rank-1 identification rate over probes with a matching template.
///
/// A probe is correct when its most similar template is its own subject's;
/// ties go to the lowest subject id.
pub fn rank1_from_embeddings(templates: &Templates, probes: &[(u32, Embedding)]) -> Result<f64> {
    if templates.len() < 2 {
        return Err(Error::domain(format!("rank-1 needs at least 2 templates, got {}", templates.len())));
    }
    let mut total = 0usize;
    let mut correct = 0usize;
    for (subject, p) in probes {
        if templates.get(*subject).is_none() {
            log::warn!("probe of subject {subject} has no enrollment template; skipped");
            continue;
        }
        let mut best: Option<(u32, f64)> = None;
        for (t_subject, t) in templates.iter() {
            let s = t.cosine(p);
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((t_subject, s));
            }
        }
        total += 1;
        if best.map(|b| b.0) == Some(*subject) {
            correct += 1;
        }
    }
    if total == 0 {
        return Err(Error::domain("rank-1 needs at least one probe with a template"));
    }
    Ok(correct as f64 / total as f64)
}

pub fn compute_rank1(attacker: &Attacker, templates: &Templates, probes: &[(u32, &GazeSignal)]) -> Result<f64> {
    rank1_from_embeddings(templates, &embedded_probes(attacker, probes)?)
}

/// Equal error rate and the interpolated threshold at which it occurs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eer {
    pub eer: f64,
    pub threshold: f64,
}

struct Sweep {
    genuine: Vec<f64>,
    imposter: Vec<f64>,
    thresholds: Vec<f64>,
}

impl Sweep {
    fn new(scores: &ScoreSet) -> Result<Self> {
        let mut genuine = scores.genuine();
        let mut imposter = scores.imposter();
        if genuine.is_empty() || imposter.is_empty() {
            return Err(Error::domain(format!(
                "metric needs genuine and imposter scores, got {} and {}",
                genuine.len(),
                imposter.len()
            )));
        }
        if genuine.iter().chain(&imposter).any(|s| s.is_nan()) {
            return Err(Error::domain("NaN similarity score"));
        }
        genuine.sort_by(f64::total_cmp);
        imposter.sort_by(f64::total_cmp);
        let mut thresholds: Vec<f64> = genuine.iter().chain(&imposter).copied().collect();
        thresholds.sort_by(f64::total_cmp);
        thresholds.dedup();
        Ok(Self {
            genuine,
            imposter,
            thresholds,
        })
    }

    /// Fraction of imposter scores at or above `t`.
    fn far(&self, t: f64) -> f64 {
        let below = self.imposter.partition_point(|s| *s < t);
        (self.imposter.len() - below) as f64 / self.imposter.len() as f64
    }

    /// Fraction of genuine scores strictly below `t`.
    fn frr(&self, t: f64) -> f64 {
        self.genuine.partition_point(|s| *s < t) as f64 / self.genuine.len() as f64
    }
}

/// Sweeps every distinct score as a threshold and interpolates the crossing
/// of FAR and FRR between the two bracketing thresholds.
///
/// Above the largest score FAR is 0 and FRR is 1, which closes the sweep
/// when the crossing lies beyond it.
pub fn compute_eer(scores: &ScoreSet) -> Result<Eer> {
    let sw = Sweep::new(scores)?;
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &sw.thresholds {
        let (far, frr) = (sw.far(t), sw.frr(t));
        if far - frr <= 0.0 {
            return Ok(match prev {
                None => Eer {
                    eer: (far + frr) / 2.0,
                    threshold: t,
                },
                Some(p) => crossing(p, (t, far, frr)),
            });
        }
        prev = Some((t, far, frr));
    }
    let last = prev.expect("at least two scores");
    Ok(crossing(last, (last.0, 0.0, 1.0)))
}

fn crossing(a: (f64, f64, f64), b: (f64, f64, f64)) -> Eer {
    let da = a.1 - a.2;
    let db = b.1 - b.2;
    let w = if da == db { 0.0 } else { da / (da - db) };
    Eer {
        eer: a.1 + w * (b.1 - a.1),
        threshold: a.0 + w * (b.0 - a.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub far: f64,
    pub tar: f64,
    /// `None` for the origin, which lies above every score.
    pub threshold: Option<f64>,
}

/// One (FAR, TAR) point per distinct threshold in ascending FAR order,
/// starting at the origin and ending at (1, 1).
pub fn roc_points(scores: &ScoreSet) -> Result<Vec<RocPoint>> {
    let sw = Sweep::new(scores)?;
    let mut out = Vec::with_capacity(sw.thresholds.len() + 1);
    out.push(RocPoint {
        far: 0.0,
        tar: 0.0,
        threshold: None,
    });
    for &t in sw.thresholds.iter().rev() {
        out.push(RocPoint {
            far: sw.far(t),
            tar: 1.0 - sw.frr(t),
            threshold: Some(t),
        });
    }
    Ok(out)
}
