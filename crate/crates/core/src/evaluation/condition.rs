use rayon::prelude::*;

use crate::corpus::{Corpus, Utterance};
use crate::corruption::{apply_recipe, draw_recipe, PoolSet, Recipe, ReverbSource, Split};
use crate::error::{Error, Result};
use crate::util::rng_for;
use crate::vad::VadConfig;

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ConditionSpec {
    pub name: String,
    pub reverb: ReverbSource,
    pub snr_range_db: Option<(f64, f64)>,
    pub seed: u64,
}

pub const SNR_RANGES: [(f64, f64); 3] = [(0.0, 7.0), (7.0, 14.0), (14.0, 21.0)];

impl ConditionSpec {
    pub fn new(name: impl Into<String>, reverb: ReverbSource, snr_range_db: Option<(f64, f64)>, seed: u64) -> Self {
        Self {
            name: name.into(),
            reverb,
            snr_range_db,
            seed,
        }
    }

    /// `clean`, `rev`, `noi-{lo}-{hi}` and `rev-noi-{lo}-{hi}` for the three SNR ranges.
    pub fn standard_suite(reverb: ReverbSource, seed: u64) -> Vec<ConditionSpec> {
        let mut out = vec![
            Self::new("clean", ReverbSource::None, None, seed),
            Self::new("rev", reverb, None, seed),
        ];
        for r in SNR_RANGES {
            out.push(Self::new(format!("noi-{}-{}", r.0, r.1), ReverbSource::None, Some(r), seed));
        }
        for r in SNR_RANGES {
            out.push(Self::new(format!("rev-noi-{}-{}", r.0, r.1), reverb, Some(r), seed));
        }
        out
    }
}

/// Corrupts every utterance of `clean` with draws from the test pools; returns the
/// corrupted corpus (ids unchanged) and one recipe per utterance.
pub fn build_condition(clean: &Corpus, spec: &ConditionSpec, pools: &PoolSet, vad: &VadConfig) -> Result<(Corpus, Vec<Recipe>)> {
    let recipes = clean
        .utterances
        .iter()
        .map(|u| {
            let mut rng = rng_for(spec.seed, &format!("{}/{}", spec.name, u.id));
            draw_recipe(&u.id, &u.id, pools, Split::Test, spec.reverb, spec.snr_range_db, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let corpus = rebuild_condition(clean, &recipes, pools, vad)?;
    Ok((corpus, recipes))
}

/// Re-executes recipes against their clean sources.
pub fn rebuild_condition(clean: &Corpus, recipes: &[Recipe], pools: &PoolSet, vad: &VadConfig) -> Result<Corpus> {
    let utterances = recipes
        .par_iter()
        .map(|r| {
            let src = clean
                .get(&r.source_id)
                .ok_or_else(|| Error::MissingId(format!("source utterance {}", r.source_id)))?;
            Ok(Utterance {
                id: r.utt_id.clone(),
                speaker: src.speaker.clone(),
                signal: apply_recipe(&src.signal, r, pools, vad)?.signal,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { utterances })
}
