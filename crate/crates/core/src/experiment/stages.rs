use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use super::{Mix, Stage, StageCtx};
use crate::backend::{
    bw_stats, length_normalize, load_backend, save_backend, save_extractor, train_lda, train_plda,
    train_tmatrix, train_ubm, vectors_from_archive, vectors_to_archive, Backend, BwStats, VectorNormalizer,
};
use crate::corpus::{
    synth_corpus, synth_noise_pool, synth_real_pool, synth_rooms, write_list, Corpus, ListEntry, Utterance,
    BUNDLE_AUDIO, BUNDLE_SPEAKERS,
};
use crate::corruption::{
    corrupt, draw_recipe, parse_recipes, telephone_filter, write_recipes, CorruptionPlan, NoisePool, PoolSet, Recipe,
    ReverbSource, RirPool, RoomSpec, Split,
};
use crate::enhancement::{enhance_signal, load_model, save_model, train_mlp, SpectralPairs, TrainConfig};
use crate::error::{Error, Result};
use crate::evaluation::{build_condition, compute_eer, score_trials, ConditionSpec, EerTable, ScoreSet, TrialSet};
use crate::features::{read_archive, write_archive, FeaturePipeline, MatrixArchive};
use crate::signal::stft;
use crate::util::{derive_seed, rng_for};
use crate::vad::energy_vad;

pub(super) fn run(ctx: &StageCtx<'_>, stage: Stage) -> Result<()> {
    match stage {
        Stage::SynthData => synth_data(ctx),
        Stage::Corrupt => corrupt_stage(ctx),
        Stage::TrainAe => train_ae(ctx),
        Stage::Enhance => enhance(ctx),
        Stage::Features => features(ctx),
        Stage::TrainBackend => train_backend(ctx),
        Stage::Ivectors => ivectors(ctx),
        Stage::Score => score(ctx),
        Stage::Eer => eer(ctx),
    }
}

const CORPORA: [&str; 3] = ["backend", "eval", "autoencoder"];
const SPLITS: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

impl StageCtx<'_> {
    fn rate(&self) -> u32 {
        self.exp.config.general.sample_rate
    }

    fn seed(&self) -> u64 {
        self.exp.config.general.seed
    }

    fn save_corpus(&self, rel: &str, corpus: &Corpus) -> Result<()> {
        corpus.save_bundle(&self.output(&format!("{rel}/{BUNDLE_AUDIO}"))?.with_file_name(""))
    }

    fn load_corpus(&self, rel: &str) -> Result<Corpus> {
        self.input(&format!("{rel}/{BUNDLE_AUDIO}"))?;
        self.input(&format!("{rel}/{BUNDLE_SPEAKERS}"))?;
        Corpus::load_bundle(&self.work().join(rel), self.rate())
    }

    fn load_recipes(&self, rel: &str) -> Result<Vec<Recipe>> {
        parse_recipes(&read_text(&self.input(&format!("{rel}/recipes.txt"))?)?)
    }

    fn load_pools(&self) -> Result<PoolSet> {
        let fs = self.rate();
        let noise_dir = "data/pools/noise";
        for f in crate::experiment::manifest::walk_files(&self.work().join(noise_dir))? {
            let rel = f.strip_prefix(self.work()).unwrap_or(&f).to_string_lossy().replace('\\', "/");
            self.input(&rel)?;
        }
        let noise = NoisePool::load(&self.work().join(noise_dir), fs)?;
        let real_dir = "data/pools/real";
        for f in crate::experiment::manifest::walk_files(&self.work().join(real_dir))? {
            let rel = f.strip_prefix(self.work()).unwrap_or(&f).to_string_lossy().replace('\\', "/");
            self.input(&rel)?;
        }
        let real = RirPool::load(&self.work().join(real_dir), fs)?;
        let mut rooms = Vec::new();
        for split in SPLITS {
            let text = read_text(&self.input(&format!("data/pools/artificial/{split}.txt"))?)?;
            rooms.extend(RoomSpec::parse_manifest(&text)?.into_iter().map(|r| (r, split)));
        }
        let pools = PoolSet {
            noise,
            real,
            artificial: RirPool::from_rooms(&rooms, fs)?,
        };
        pools.check_disjoint()?;
        Ok(pools)
    }

    fn ae_mixes(&self) -> BTreeSet<Mix> {
        self.exp.systems.iter().filter_map(|s| s.ae()).collect()
    }

    fn mc_mixes(&self) -> BTreeSet<Mix> {
        self.exp.systems.iter().filter_map(|s| s.mc()).collect()
    }

    fn conditions(&self) -> Vec<ConditionSpec> {
        let c = &self.exp.config;
        ConditionSpec::standard_suite(c.corruption.eval_reverb, derive_seed(c.general.seed, "eval"))
    }

    /// Multi-condition mixes whose copies are needed in `view`.
    fn mc_for_view(&self, view: &str) -> BTreeSet<Mix> {
        self.exp
            .systems
            .iter()
            .filter(|s| s.view() == view)
            .filter_map(|s| s.mc())
            .collect()
    }

    fn views(&self) -> BTreeSet<String> {
        self.exp.systems.iter().map(|s| s.view()).collect()
    }
}

fn synth_data(ctx: &StageCtx<'_>) -> Result<()> {
    let cfg = &ctx.exp.config;
    let (seed, fs) = (ctx.seed(), ctx.rate());
    let specs = [&cfg.corpus.backend, &cfg.corpus.eval, &cfg.corpus.autoencoder];
    for (name, spec) in CORPORA.iter().zip(specs) {
        let raw = synth_corpus(spec, seed, fs);
        // recorded speech is telephone speech before any corruption
        let utterances = raw
            .utterances
            .into_par_iter()
            .map(|u| {
                Ok(Utterance {
                    signal: telephone_filter(&u.signal)?,
                    ..u
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ctx.save_corpus(&format!("data/corpora/{name}"), &Corpus { utterances })?;
    }
    let pool_seed = derive_seed(seed, "pools");
    let noise = match &cfg.pools.noise_dir {
        Some(dir) => NoisePool::load(dir, fs)?,
        None => synth_noise_pool(&cfg.pools.spec, pool_seed, fs)?,
    };
    noise.check_disjoint()?;
    noise.save(&ctx.output("data/pools/noise/x")?.with_file_name(""))?;
    let real = match &cfg.pools.real_rir_dir {
        Some(dir) => RirPool::load(dir, fs)?,
        None => synth_real_pool(&cfg.pools.spec, pool_seed, fs)?,
    };
    real.save(&ctx.output("data/pools/real/x")?.with_file_name(""))?;
    for split in SPLITS {
        let text = match &cfg.pools.artificial_rooms {
            Some(dir) => read_text(&dir.join(format!("{split}.txt")))?,
            None => synth_rooms("air", &cfg.pools.spec, pool_seed)
                .into_iter()
                .filter(|(_, s)| *s == split)
                .map(|(r, _)| format!("{r}\n"))
                .collect(),
        };
        write_text(&ctx.output(&format!("data/pools/artificial/{split}.txt"))?, &text)?;
    }
    // validates the written pools as later stages will see them
    let _ = ctx.load_pools_unrecorded()?;
    Ok(())
}

impl StageCtx<'_> {
    fn load_pools_unrecorded(&self) -> Result<PoolSet> {
        let fs = self.rate();
        let w = self.work();
        let mut rooms = Vec::new();
        for split in SPLITS {
            let text = read_text(&w.join(format!("data/pools/artificial/{split}.txt")))?;
            rooms.extend(RoomSpec::parse_manifest(&text)?.into_iter().map(|r| (r, split)));
        }
        let pools = PoolSet {
            noise: NoisePool::load(&w.join("data/pools/noise"), fs)?,
            real: RirPool::load(&w.join("data/pools/real"), fs)?,
            artificial: RirPool::from_rooms(&rooms, fs)?,
        };
        pools.check_disjoint()?;
        Ok(pools)
    }
}

/// Training-side recipe for a mix; combined mixes pick noise only, reverberation only or both.
fn training_recipe(
    id: &str,
    source: &str,
    mix: Mix,
    snr: (f64, f64),
    pools: &PoolSet,
    rng: &mut impl Rng,
) -> Result<Recipe> {
    let (noise, reverb) = match (mix.has_noise(), mix.reverb()) {
        (true, ReverbSource::None) => (true, ReverbSource::None),
        (false, r) => (false, r),
        (true, r) => match rng.random_range(0..3) {
            0 => (true, ReverbSource::None),
            1 => (false, r),
            _ => (true, r),
        },
    };
    draw_recipe(id, source, pools, Split::Train, reverb, noise.then_some(snr), rng)
}

fn apply_all(clean: &Corpus, recipes: &[Recipe], pools: &PoolSet, ctx: &StageCtx<'_>) -> Result<Corpus> {
    crate::evaluation::rebuild_condition(clean, recipes, pools, &ctx.exp.config.corruption.vad)
}

fn corrupt_stage(ctx: &StageCtx<'_>) -> Result<()> {
    let cfg = &ctx.exp.config.corruption;
    let seed = ctx.seed();
    let pools = ctx.load_pools()?;
    let ae_mixes = ctx.ae_mixes();
    if !ae_mixes.is_empty() {
        let ae = ctx.load_corpus("data/corpora/autoencoder")?;
        for mix in ae_mixes {
            let mut recipes = Vec::new();
            for u in &ae.utterances {
                for k in 0..cfg.ae_copies {
                    let id = format!("{}~{}", u.id, k);
                    let mut rng = rng_for(seed, &format!("ae/{mix}/{id}"));
                    recipes.push(training_recipe(&id, &u.id, mix, cfg.training_snr_db, &pools, &mut rng)?);
                }
            }
            let rel = format!("corrupt/ae-{}", mix.slug());
            ctx.save_corpus(&rel, &apply_all(&ae, &recipes, &pools, ctx)?)?;
            write_text(&ctx.output(&format!("{rel}/recipes.txt"))?, &write_recipes(&recipes))?;
        }
    }
    let mc_mixes = ctx.mc_mixes();
    if !mc_mixes.is_empty() {
        let backend = ctx.load_corpus("data/corpora/backend")?;
        let count = (cfg.mc_fraction * backend.len() as f64).round() as usize;
        for mix in mc_mixes {
            let mut order: Vec<(u64, usize)> = backend
                .utterances
                .iter()
                .enumerate()
                .map(|(i, u)| (derive_seed(seed, &format!("mc/{mix}/pick/{}", u.id)), i))
                .collect();
            order.sort_unstable();
            let mut picked: Vec<usize> = order.into_iter().take(count).map(|(_, i)| i).collect();
            picked.sort_unstable();
            let recipes = picked
                .into_iter()
                .map(|i| {
                    let u = &backend.utterances[i];
                    let id = format!("{}~mc", u.id);
                    let mut rng = rng_for(seed, &format!("mc/{mix}/{id}"));
                    training_recipe(&id, &u.id, mix, cfg.training_snr_db, &pools, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            let rel = format!("corrupt/mc-{}", mix.slug());
            ctx.save_corpus(&rel, &apply_all(&backend, &recipes, &pools, ctx)?)?;
            write_text(&ctx.output(&format!("{rel}/recipes.txt"))?, &write_recipes(&recipes))?;
        }
    }
    let eval = ctx.load_corpus("data/corpora/eval")?;
    for spec in ctx.conditions() {
        let (corpus, recipes) = build_condition(&eval, &spec, &pools, &cfg.vad)?;
        let rel = format!("corrupt/eval/{}", spec.name);
        ctx.save_corpus(&rel, &corpus)?;
        write_text(&ctx.output(&format!("{rel}/recipes.txt"))?, &write_recipes(&recipes))?;
    }
    let trials = TrialSet::all_pairs(&eval, "all");
    write_text(&ctx.output("corrupt/trials.txt")?, &trials.to_text())
}

fn train_ae(ctx: &StageCtx<'_>) -> Result<()> {
    let cfg = &ctx.exp.config.autoencoder;
    let vad = &ctx.exp.config.corruption.vad;
    let mixes = ctx.ae_mixes();
    if mixes.is_empty() {
        return Ok(());
    }
    let clean = ctx.load_corpus("data/corpora/autoencoder")?;
    let by_id: HashMap<&str, &Utterance> = clean.utterances.iter().map(|u| (u.id.as_str(), u)).collect();
    let g = cfg.geometry;
    let clean_specs = clean
        .utterances
        .par_iter()
        .map(|u| stft(&u.signal, g))
        .collect::<Result<Vec<_>>>()?;
    let spec_of: HashMap<&str, usize> = clean.utterances.iter().enumerate().map(|(i, u)| (u.id.as_str(), i)).collect();
    for mix in mixes {
        let rel = format!("corrupt/ae-{}", mix.slug());
        let corrupted = ctx.load_corpus(&rel)?;
        let recipes = ctx.load_recipes(&rel)?;
        let mut data = SpectralPairs::new(cfg.context);
        let inputs = corrupted
            .utterances
            .par_iter()
            .map(|u| stft(&u.signal, g))
            .collect::<Result<Vec<_>>>()?;
        for (spec, r) in inputs.into_iter().zip(&recipes) {
            let i = *spec_of
                .get(r.source_id.as_str())
                .ok_or_else(|| Error::MissingId(r.source_id.clone()))?;
            data.push(spec, clean_specs[i].clone())?;
        }
        // clean-to-clean pairs through the identity path of the corruption chain
        let seed = derive_seed(ctx.seed(), &format!("ae/{mix}"));
        let n_clean = (cfg.clean_fraction * clean.len() as f64).round() as usize;
        let mut order: Vec<(u64, &str)> = by_id
            .keys()
            .map(|id| (derive_seed(seed, &format!("clean/{id}")), *id))
            .collect();
        order.sort_unstable();
        let mut chosen: Vec<&str> = order.into_iter().take(n_clean).map(|(_, id)| id).collect();
        chosen.sort_unstable_by_key(|id| spec_of[id]);
        let identity = chosen
            .par_iter()
            .map(|id| stft(&corrupt(&by_id[id].signal, &CorruptionPlan::default(), vad)?.signal, g))
            .collect::<Result<Vec<_>>>()?;
        for (spec, id) in identity.into_iter().zip(&chosen) {
            data.push(spec, clean_specs[spec_of[id]].clone())?;
        }
        let train = TrainConfig {
            seed,
            ..cfg.train.clone()
        };
        let outcome = train_mlp(&data, cfg.context, &train)?;
        save_model(&ctx.output(&format!("ae/{}.mlp", mix.slug()))?, &outcome.model)?;
        let trace: String = outcome.loss_trace.iter().map(|l| format!("{l:?}\n")).collect();
        write_text(&ctx.output(&format!("ae/{}.loss.txt", mix.slug()))?, &trace)?;
    }
    Ok(())
}

/// Corpus sources per feature view: `(set name, corpus path)`.
fn view_sets(ctx: &StageCtx<'_>, view: &str) -> Vec<(String, String)> {
    let root = if view == "raw" { String::new() } else { format!("enhance/{}/", &view[3..]) };
    let mut sets = vec![(
        "backend".to_string(),
        if view == "raw" { "data/corpora/backend".to_string() } else { format!("{root}backend") },
    )];
    for m in ctx.mc_for_view(view) {
        let name = format!("mc-{}", m.slug());
        let path = if view == "raw" { format!("corrupt/{name}") } else { format!("{root}{name}") };
        sets.push((name, path));
    }
    for c in ctx.conditions() {
        let path = if view == "raw" {
            format!("corrupt/eval/{}", c.name)
        } else {
            format!("{root}eval/{}", c.name)
        };
        sets.push((format!("eval-{}", c.name), path));
    }
    sets
}

fn enhance(ctx: &StageCtx<'_>) -> Result<()> {
    let g = ctx.exp.config.autoencoder.geometry;
    for mix in ctx.ae_mixes() {
        let model = load_model(&ctx.input(&format!("ae/{}.mlp", mix.slug()))?)?;
        let view = format!("ae-{}", mix.slug());
        let mut sources = vec![("backend".to_string(), "data/corpora/backend".to_string())];
        for m in ctx.mc_for_view(&view) {
            sources.push((format!("mc-{}", m.slug()), format!("corrupt/mc-{}", m.slug())));
        }
        for c in ctx.conditions() {
            sources.push((format!("eval/{}", c.name), format!("corrupt/eval/{}", c.name)));
        }
        for (name, src) in sources {
            let corpus = ctx.load_corpus(&src)?;
            // clean backend audio takes the identity corruption path first, like every AE input
            let identity = name == "backend";
            let utterances = corpus
                .utterances
                .into_par_iter()
                .map(|u| {
                    let input = if identity { telephone_filter(&u.signal)? } else { u.signal };
                    Ok(Utterance {
                        signal: enhance_signal(&model, &input, g)?,
                        ..u
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ctx.save_corpus(&format!("enhance/{}/{name}", mix.slug()), &Corpus { utterances })?;
        }
    }
    Ok(())
}

/// Clean utterance a (possibly corrupted or enhanced) copy derives from: `u`, `u~k`, `u~mc` all map to `u`.
fn source_id(id: &str) -> &str {
    id.split('~').next().unwrap_or(id)
}

fn features(ctx: &StageCtx<'_>) -> Result<()> {
    let cfg = &ctx.exp.config;
    let mut pipeline = FeaturePipeline::new(cfg.features.mfcc.clone(), cfg.corruption.vad.clone(), ctx.rate())?;
    pipeline.stmvn_window_s = cfg.features.stmvn_window_s;
    // frames are dropped by the clean source's mask, the one that also gated the SNR
    let mut masks = HashMap::new();
    for name in ["backend", "eval"] {
        let clean = ctx.load_corpus(&format!("data/corpora/{name}"))?;
        let computed = clean
            .utterances
            .par_iter()
            .map(|u| Ok((u.id.clone(), energy_vad(&u.signal, &cfg.corruption.vad)?)))
            .collect::<Result<Vec<_>>>()?;
        masks.extend(computed);
    }
    for view in ctx.views() {
        for (set, path) in view_sets(ctx, &view) {
            let corpus = ctx.load_corpus(&path)?;
            let records = corpus
                .utterances
                .par_iter()
                .map(|u| {
                    let mask = masks
                        .get(source_id(&u.id))
                        .ok_or_else(|| Error::MissingId(format!("clean source of {}", u.id)))?;
                    Ok((u.id.clone(), pipeline.extract_masked(&u.signal, mask, &u.id)?))
                })
                .collect::<Result<Vec<_>>>()?;
            write_archive(&ctx.output(&format!("features/{view}/{set}.ark"))?, &MatrixArchive { records })?;
        }
    }
    Ok(())
}

fn pooled_frames(archive: &MatrixArchive) -> Result<DMatrix<f64>> {
    let dim = archive.records.first().map(|(_, m)| m.ncols()).unwrap_or(0);
    let rows: usize = archive.records.iter().map(|(_, m)| m.nrows()).sum();
    let mut out = DMatrix::zeros(rows, dim);
    let mut r = 0;
    for (id, m) in &archive.records {
        if m.ncols() != dim {
            return Err(Error::Dimension(format!("{id}: {} columns, expected {dim}", m.ncols())));
        }
        out.view_mut((r, 0), (m.nrows(), dim)).copy_from(m);
        r += m.nrows();
    }
    Ok(out)
}

fn speaker_map(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once(' '))
        .map(|(u, s)| (u.to_string(), s.trim().to_string()))
        .collect()
}

fn train_backend(ctx: &StageCtx<'_>) -> Result<()> {
    let cfg = &ctx.exp.config.backend;
    let seed = ctx.seed();
    let mut speakers = speaker_map(&read_text(&ctx.input(&format!("data/corpora/backend/{BUNDLE_SPEAKERS}"))?)?);
    for m in ctx.mc_mixes() {
        let text = read_text(&ctx.input(&format!("corrupt/mc-{}/{BUNDLE_SPEAKERS}", m.slug()))?)?;
        speakers.extend(speaker_map(&text));
    }
    for view in ctx.views() {
        let clean = read_archive(&ctx.input(&format!("features/{view}/backend.ark"))?)?;
        let frames = pooled_frames(&clean)?;
        let (ubm, trace) = train_ubm(&frames, cfg.ubm_components, cfg.ubm_iters, derive_seed(seed, &format!("ubm/{view}")))?;
        drop(frames);
        let text: String = trace.loglik.iter().map(|l| format!("{l:?}\n")).collect();
        write_text(&ctx.output(&format!("backend/{view}.ubm-trace.txt"))?, &text)?;
        let stats = clean
            .records
            .par_iter()
            .map(|(_, m)| bw_stats(m, &ubm))
            .collect::<Result<Vec<BwStats>>>()?;
        let extractor = train_tmatrix(&stats, &ubm, cfg.ivector_dim, cfg.tv_iters, derive_seed(seed, &format!("tv/{view}")))?;
        save_extractor(&ctx.output(&format!("backend/{view}.extractor.ark"))?, &extractor)?;
        let clean_ivs = extractor.extract_all(&stats)?;

        for system in ctx.exp.systems.iter().filter(|s| s.view() == view) {
            let mut ids: Vec<(String, String)> = clean.records.iter().map(|(id, _)| (id.clone(), "clean".to_string())).collect();
            let mut raw: Vec<DVector<f64>> = clean_ivs.clone();
            if let Some(m) = system.mc() {
                let tag = format!("mc-{}", m.slug());
                let extra = read_archive(&ctx.input(&format!("features/{view}/{tag}.ark"))?)?;
                let st = extra
                    .records
                    .par_iter()
                    .map(|(_, f)| bw_stats(f, &ubm))
                    .collect::<Result<Vec<BwStats>>>()?;
                raw.extend(extractor.extract_all(&st)?);
                ids.extend(extra.records.iter().map(|(id, _)| (id.clone(), tag.clone())));
            }
            let labels = ids
                .iter()
                .map(|(id, _)| speakers.get(id).cloned().ok_or_else(|| Error::MissingId(format!("speaker of {id}"))))
                .collect::<Result<Vec<_>>>()?;
            let unit = raw.iter().map(length_normalize).collect::<Result<Vec<_>>>()?;
            let lda = train_lda(&unit, &labels, cfg.lda_dim)?;
            let projected: Vec<DVector<f64>> = unit.iter().map(|v| lda.apply(v)).collect();
            let normalizer = VectorNormalizer::fit(&projected)?;
            let normed = projected.iter().map(|v| normalizer.apply(v)).collect::<Result<Vec<_>>>()?;
            let (plda, ptrace) = train_plda(&normed, &labels, cfg.plda_iters)?;
            let slug = system.slug();
            let backend = Backend {
                extractor: extractor.clone(),
                lda,
                normalizer,
                plda,
            };
            save_backend(&ctx.output(&format!("backend/{slug}.ark"))?, &backend)?;
            let list: Vec<ListEntry> = ids
                .into_iter()
                .zip(labels)
                .map(|((utt, condition), speaker)| ListEntry { utt, speaker, condition })
                .collect();
            write_text(&ctx.output(&format!("backend/{slug}.list.txt"))?, &write_list(&list))?;
            let text: String = ptrace.loglik.iter().map(|l| format!("{l:?}\n")).collect();
            write_text(&ctx.output(&format!("backend/{slug}.plda-trace.txt"))?, &text)?;
        }
    }
    Ok(())
}

fn ivectors(ctx: &StageCtx<'_>) -> Result<()> {
    for system in &ctx.exp.systems {
        let slug = system.slug();
        let backend = load_backend(&ctx.input(&format!("backend/{slug}.ark"))?)?;
        for c in ctx.conditions() {
            let feats = read_archive(&ctx.input(&format!("features/{}/eval-{}.ark", system.view(), c.name))?)?;
            let items = feats
                .records
                .par_iter()
                .map(|(id, f)| Ok((id.clone(), backend.embed(f)?)))
                .collect::<Result<Vec<_>>>()?;
            write_archive(&ctx.output(&format!("ivectors/{slug}/{}.ark", c.name))?, &vectors_to_archive(&items))?;
        }
    }
    Ok(())
}

fn score(ctx: &StageCtx<'_>) -> Result<()> {
    let trials = TrialSet::parse(&read_text(&ctx.input("corrupt/trials.txt")?)?, "all")?;
    for system in &ctx.exp.systems {
        let slug = system.slug();
        let scorer = load_backend(&ctx.input(&format!("backend/{slug}.ark"))?)?.plda.scorer()?;
        for c in ctx.conditions() {
            let ar = read_archive(&ctx.input(&format!("ivectors/{slug}/{}.ark", c.name))?)?;
            let store: HashMap<String, DVector<f64>> = vectors_from_archive(&ar)?.into_iter().collect();
            let trials = TrialSet {
                condition: c.name.clone(),
                ..trials.clone()
            };
            let scores = score_trials(&trials, &store, &scorer)?;
            write_text(&ctx.output(&format!("scores/{slug}/{}.txt", c.name))?, &scores.to_text(&trials))?;
        }
    }
    Ok(())
}

fn eer(ctx: &StageCtx<'_>) -> Result<()> {
    let conditions = ctx.conditions();
    let mut table = EerTable::new(
        conditions.iter().map(|c| c.name.clone()).collect(),
        ctx.exp.systems.iter().map(|s| s.to_string()).collect(),
    );
    for system in &ctx.exp.systems {
        for c in &conditions {
            let text = read_text(&ctx.input(&format!("scores/{}/{}.txt", system.slug(), c.name))?)?;
            let (trials, scores): (TrialSet, ScoreSet) = ScoreSet::parse(&text, c.name.clone())?;
            let r = compute_eer(&scores.scores, &trials.labels())?;
            table.set(&c.name, &system.to_string(), r.eer);
        }
    }
    write_text(&ctx.output(super::REPORT_FILE)?, &table.render())
}
