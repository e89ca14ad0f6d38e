use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::backend::PldaScorer;
use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Target,
    Nontarget,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Target => "target",
            Label::Nontarget => "nontarget",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "target" => Ok(Label::Target),
            "nontarget" => Ok(Label::Nontarget),
            other => Err(Error::Parse(format!("trial label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub enroll: String,
    pub test: String,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
    pub condition: String,
}

impl TrialSet {
    pub fn new(trials: Vec<Trial>, condition: impl Into<String>) -> Result<Self> {
        let mut seen = HashSet::new();
        for t in &trials {
            if !seen.insert((t.enroll.as_str(), t.test.as_str())) {
                return Err(Error::DuplicateTrial(t.enroll.clone(), t.test.clone()));
            }
        }
        Ok(Self {
            trials,
            condition: condition.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.trials.iter().map(|t| t.label == Label::Target).collect()
    }

    /// All unordered pairs of distinct utterances, in corpus order.
    pub fn all_pairs(corpus: &Corpus, condition: impl Into<String>) -> Self {
        let u = &corpus.utterances;
        let mut trials = Vec::new();
        for i in 0..u.len() {
            for j in i + 1..u.len() {
                trials.push(Trial {
                    enroll: u[i].id.clone(),
                    test: u[j].id.clone(),
                    label: if u[i].speaker == u[j].speaker {
                        Label::Target
                    } else {
                        Label::Nontarget
                    },
                });
            }
        }
        Self {
            trials,
            condition: condition.into(),
        }
    }

    pub fn to_text(&self) -> String {
        self.trials
            .iter()
            .map(|t| format!("{} {} {}\n", t.enroll, t.test, t.label))
            .collect()
    }

    pub fn parse(text: &str, condition: impl Into<String>) -> Result<Self> {
        let trials = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|line| {
                let t: Vec<&str> = line.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(Error::Parse(format!("trial line: {line}")));
                }
                Ok(Trial {
                    enroll: t[0].into(),
                    test: t[1].into(),
                    label: t[2].parse()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(trials, condition)
    }
}

/// Scores aligned with a trial set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
}

impl ScoreSet {
    /// `enroll test label score` per line.
    pub fn to_text(&self, trials: &TrialSet) -> String {
        trials
            .trials
            .iter()
            .zip(&self.scores)
            .map(|(t, s)| format!("{} {} {} {s:?}\n", t.enroll, t.test, t.label))
            .collect()
    }

    pub fn parse(text: &str, condition: impl Into<String>) -> Result<(TrialSet, ScoreSet)> {
        let mut trials = Vec::new();
        let mut scores = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.len() != 4 {
                return Err(Error::Parse(format!("score line: {line}")));
            }
            let s: f64 = t[3].parse().map_err(|_| Error::Parse(format!("score value in: {line}")))?;
            if !s.is_finite() {
                return Err(Error::Parse(format!("non-finite score in: {line}")));
            }
            trials.push(Trial {
                enroll: t[0].into(),
                test: t[1].into(),
                label: t[2].parse()?,
            });
            scores.push(s);
        }
        Ok((TrialSet::new(trials, condition)?, ScoreSet { scores }))
    }
}

pub fn score_trials(trials: &TrialSet, store: &HashMap<String, DVector<f64>>, scorer: &PldaScorer) -> Result<ScoreSet> {
    let lookup = |id: &str| store.get(id).ok_or_else(|| Error::MissingId(id.to_string()));
    let scores = trials
        .trials
        .iter()
        .map(|t| Ok(scorer.score(lookup(&t.enroll)?, lookup(&t.test)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreSet { scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn trial(e: &str, t: &str, label: Label) -> Trial {
        Trial {
            enroll: e.into(),
            test: t.into(),
            label,
        }
    }

    #[test]
    fn duplicates_rejected() {
        let t = vec![trial("a", "b", Label::Target), trial("a", "b", Label::Nontarget)];
        assert!(matches!(TrialSet::new(t, "x"), Err(Error::DuplicateTrial(..))));
    }

    #[test]
    fn text_round_trip() {
        let ts = TrialSet::new(vec![trial("a", "b", Label::Target), trial("a", "c", Label::Nontarget)], "c").unwrap();
        assert_eq!(TrialSet::parse(&ts.to_text(), "c").unwrap(), ts);
        let sc = ScoreSet { scores: vec![0.1, -2.5e-3] };
        let (t2, s2) = ScoreSet::parse(&sc.to_text(&ts), "c").unwrap();
        assert_eq!((t2, s2), (ts, sc));
    }

    #[test]
    fn scoring_empty_and_missing() {
        let scorer = PldaScorer {
            mean: DVector::zeros(1),
            q: DMatrix::zeros(1, 1),
            p: DMatrix::identity(1, 1),
            k: 0.0,
        };
        let store: HashMap<String, DVector<f64>> = [("a".to_string(), DVector::from_element(1, 2.0))].into();
        assert!(score_trials(&TrialSet::default(), &store, &scorer).unwrap().scores.is_empty());
        let ts = TrialSet::new(vec![trial("a", "z", Label::Target)], "c").unwrap();
        assert!(matches!(score_trials(&ts, &store, &scorer), Err(Error::MissingId(_))));
    }
}
