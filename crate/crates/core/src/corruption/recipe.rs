use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::pipeline::{corrupt, Corrupted, CorruptionPlan};
use super::pools::{PoolSet, ReverbSource};
use super::noise::Split;
use crate::error::{Error, Result};
use crate::signal::AudioSignal;
use crate::vad::VadConfig;

/// Exact description of how one corrupted utterance was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub utt_id: String,
    pub source_id: String,
    pub noise_id: Option<String>,
    pub room_id: Option<String>,
    pub snr_db: Option<f64>,
    pub seed: u64,
}

fn opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), |x| x.to_string())
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // {:?} on f64 prints the shortest exact round-trip representation
        let snr = self.snr_db.map_or_else(|| "-".to_string(), |v| format!("{v:?}"));
        write!(
            f,
            "utt_id={} source_id={} noise_id={} room_id={} snr_db={} seed={}",
            self.utt_id,
            self.source_id,
            opt(&self.noise_id),
            opt(&self.room_id),
            snr,
            self.seed
        )
    }
}

impl FromStr for Recipe {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for tok in line.split_whitespace() {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("recipe token without '=': {tok}")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Parse(format!("recipe missing {k}: {line}")))
        };
        let optional = |k: &str| -> Result<Option<String>> {
            let v = get(k)?;
            Ok((v != "-").then(|| v.to_string()))
        };
        let snr = match get("snr_db")? {
            "-" => None,
            v => Some(v.parse().map_err(|_| Error::Parse(format!("bad snr_db {v}")))?),
        };
        Ok(Recipe {
            utt_id: get("utt_id")?.to_string(),
            source_id: get("source_id")?.to_string(),
            noise_id: optional("noise_id")?,
            room_id: optional("room_id")?,
            snr_db: snr,
            seed: get("seed")?
                .parse()
                .map_err(|_| Error::Parse(format!("bad seed in {line}")))?,
        })
    }
}

pub fn write_recipes(recipes: &[Recipe]) -> String {
    let mut out = String::new();
    for r in recipes {
        out.push_str(&r.to_string());
        out.push('\n');
    }
    out
}

pub fn parse_recipes(text: &str) -> Result<Vec<Recipe>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Draws a recipe for `utt_id`: a uniform room from `reverb`'s `split` pool, a uniform noise
/// from the `split` noise pool and an SNR uniform in `[lo, hi)`.
pub fn draw_recipe(
    utt_id: &str,
    source_id: &str,
    pools: &PoolSet,
    split: Split,
    reverb: ReverbSource,
    snr_range: Option<(f64, f64)>,
    rng: &mut impl Rng,
) -> Result<Recipe> {
    let room_id = match reverb {
        ReverbSource::None => None,
        source => {
            let rooms = pools.rooms(source, split);
            if rooms.is_empty() {
                return Err(Error::EmptyData(format!("no {split} rooms in the {source:?} pool")));
            }
            Some(rooms[rng.random_range(0..rooms.len())].room_id.clone())
        }
    };
    let (noise_id, snr_db) = match snr_range {
        None => (None, None),
        Some((lo, hi)) => {
            let noises = pools.noise.split(split);
            if noises.is_empty() {
                return Err(Error::EmptyData(format!("no {split} noises")));
            }
            let id = noises[rng.random_range(0..noises.len())].id.clone();
            let snr = if hi > lo { rng.random_range(lo..hi) } else { lo };
            (Some(id), Some(snr))
        }
    };
    Ok(Recipe {
        utt_id: utt_id.to_string(),
        source_id: source_id.to_string(),
        noise_id,
        room_id,
        snr_db,
        seed: rng.random(),
    })
}

/// Executes a recipe against the clean source signal.
pub fn apply_recipe(speech: &AudioSignal, recipe: &Recipe, pools: &PoolSet, vad: &VadConfig) -> Result<Corrupted> {
    let rir = match &recipe.room_id {
        Some(id) => Some(pools.room(id).ok_or_else(|| Error::MissingId(format!("room {id}")))?),
        None => None,
    };
    let noise = match &recipe.noise_id {
        Some(id) => Some(&pools.noise(id).ok_or_else(|| Error::MissingId(format!("noise {id}")))?.signal),
        None => None,
    };
    let plan = CorruptionPlan {
        rir,
        noise,
        snr_db: recipe.snr_db,
        seed: recipe.seed,
    };
    corrupt(speech, &plan, vad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = Recipe {
            utt_id: "u1".into(),
            source_id: "s1".into(),
            noise_id: Some("n3".into()),
            room_id: None,
            snr_db: Some(7.123456789012345),
            seed: 99,
        };
        let back: Recipe = r.to_string().parse().unwrap();
        assert_eq!(back, r);
        assert!("utt_id=x".parse::<Recipe>().is_err());
    }
}
