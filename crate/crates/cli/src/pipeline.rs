//! The `morph` and `regions` subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use glyphmorph_core::geometry::WordLayout;
use glyphmorph_core::losses::LossWeights;
use glyphmorph_core::optimizer::{run, RunConfig};
use glyphmorph_core::prompt::{ConceptExpansion, ExpansionMode, OfflineTable, PromptEngine, PromptSet, DEFAULT_SUFFIX};
use glyphmorph_core::raster::render;
use glyphmorph_core::region::{combine_scores, enumerate_regions, score_regions, select_region, write_report, RegionCandidate, RegionConfig};
use glyphmorph_core::scorer::Scorer;
use glyphmorph_core::svg::export_svg;

use crate::args::{MorphArgs, PromptArgs, RegionArgs, RegionsArgs, RunArgs};
use crate::error::{at, CliError};
use crate::setup::{self, ChosenFont};

fn run_config(args: &RunArgs, output_dir: Option<PathBuf>, stem: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig {
        iterations: args.iterations,
        base_lr: args.learning_rate,
        seed: args.seed,
        canvas: args.canvas,
        guidance_size: args.guidance_size,
        checkpoint_interval: args.checkpoint_interval,
        output_dir,
        output_stem: stem.to_string(),
        ..RunConfig::default()
    };
    if args.no_augmentation {
        cfg.augmentation = None;
    }
    if args.light_iterations == 0 {
        return Err(CliError::usage("--light-iterations must be at least 1"));
    }
    cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(cfg)
}

/// Default weights for a region of `letters` letters, with command-line overrides.
fn weights(args: &RunArgs, letters: usize) -> Result<LossWeights, CliError> {
    let mut w = LossWeights::for_region(letters);
    if let Some(v) = args.weight_sds {
        w.sds = v;
    }
    if let Some(v) = args.weight_ocr {
        w.ocr = v;
    }
    if let Some(v) = args.weight_acap {
        w.acap = v;
    }
    w.validate().map_err(|e| CliError::usage(e.to_string()))?;
    Ok(w)
}

fn check_region_args(args: &RegionArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.lambda) {
        return Err(CliError::usage(format!("--lambda must lie in [0, 1], got {}", args.lambda)));
    }
    if args.max_region_len == Some(0) {
        return Err(CliError::usage("--max-region-len must be at least 1"));
    }
    Ok(())
}

fn concept(args: &PromptArgs) -> Result<String, CliError> {
    match args.concept.as_deref().map(str::trim) {
        Some(c) if !c.is_empty() => Ok(c.to_string()),
        _ => Err(CliError::usage("--concept is required")),
    }
}

fn expand(args: &PromptArgs, concept: &str, scorer: &dyn Scorer) -> Result<(ConceptExpansion, PromptSet), CliError> {
    let table = match &args.concept_table {
        Some(path) => OfflineTable::load(path).map_err(at("prompts"))?,
        None => OfflineTable::bundled(),
    };
    let engine = PromptEngine::new(table, DEFAULT_SUFFIX);
    let mode = if args.offline_prompts {
        ExpansionMode::Offline
    } else {
        ExpansionMode::Remote(scorer)
    };
    let expansion = engine.expand_concept(concept, mode).map_err(at("prompts"))?;
    let prompts = engine.build_prompts(&expansion);
    Ok((expansion, prompts))
}

/// Score all candidates. Weight overrides are merged with the default of
/// each candidate's length, so candidates are scored in groups of equal length.
fn scored_regions(
    word: &WordLayout,
    prompt: &str,
    scorer: &dyn Scorer,
    region: &RegionArgs,
    run_args: &RunArgs,
    base: &RunConfig,
) -> Result<Vec<RegionCandidate>, CliError> {
    let candidates = enumerate_regions(word.len(), region.max_region_len).map_err(at("region"))?;
    let overridden = run_args.weight_sds.is_some() || run_args.weight_ocr.is_some() || run_args.weight_acap.is_some();
    let mut config = RegionConfig {
        lambda: region.lambda,
        standardize: !region.no_standardize,
        run: base.light(run_args.light_iterations),
    };
    if !overridden {
        return score_regions(word, &candidates, prompt, scorer, &config).map_err(at("region"));
    }
    let mut all = Vec::with_capacity(candidates.len());
    let longest = candidates.iter().map(RegionCandidate::len).max().unwrap_or(0);
    for len in 1..=longest {
        let group: Vec<RegionCandidate> = candidates.iter().filter(|c| c.len() == len).cloned().collect();
        config.run.weights = Some(weights(run_args, len)?);
        all.extend(score_regions(word, &group, prompt, scorer, &config).map_err(at("region"))?);
    }
    all.sort_by_key(|c| (c.start, c.end));
    combine_scores(&mut all, region.lambda, !region.no_standardize);
    Ok(all)
}

fn report_text(word: &str, scored: &[RegionCandidate]) -> String {
    let mut buf = Vec::new();
    write_report(word, scored, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("utf-8")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Stage {
        stage: "output",
        message: format!("{}: {e}", path.display()),
    })
}

/// Index of the morph prompt the original render matches best.
fn arbitrate(word: &WordLayout, prompts: &PromptSet, scorer: &dyn Scorer, size: usize) -> Result<(usize, Vec<f64>), CliError> {
    let image = render(word, size);
    let scores = prompts
        .morph_prompts
        .iter()
        .map(|p| scorer.clip_score(&image, p))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(at("prompts"))?;
    let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    Ok((best, scores))
}

fn prompts_text(expansion: &ConceptExpansion, prompts: &PromptSet, chosen: usize, scores: Option<&[f64]>) -> String {
    let mut s = String::new();
    writeln!(s, "concept\t{}", expansion.concept).unwrap();
    for (i, (object, prompt)) in expansion.objects.iter().zip(&prompts.morph_prompts).enumerate() {
        writeln!(s, "object\t{}\t{object}", i + 1).unwrap();
        writeln!(s, "morph_prompt\t{}\t{prompt}", i + 1).unwrap();
        if let Some(scores) = scores {
            writeln!(s, "clip_score\t{}\t{}", i + 1, scores[i]).unwrap();
        }
    }
    writeln!(s, "font_attributes\t{}", expansion.font_attributes.join(", ")).unwrap();
    writeln!(s, "font_prompt\t{}", prompts.font_prompt).unwrap();
    writeln!(s, "chosen_object\t{}", chosen + 1).unwrap();
    s
}

fn font_text(font: &ChosenFont) -> String {
    let mut s = format!("id\t{}\npath\t{}\n", font.id, font.path.display());
    if let Some(sim) = font.similarity {
        writeln!(s, "similarity\t{sim}").unwrap();
    }
    s
}

fn words(args: &MorphArgs) -> Result<Vec<String>, CliError> {
    let mut words = args.word.clone();
    if let Some(path) = &args.wordlist {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read word list {}: {e}", path.display())))?;
        words.extend(text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(String::from));
    }
    if words.is_empty() {
        return Err(CliError::usage("no word given: pass --word or --wordlist"));
    }
    if words.iter().any(|w| w.trim().is_empty()) {
        return Err(CliError::usage("--word must not be empty"));
    }
    Ok(words)
}

fn fixed_region(word: &WordLayout, text: &str, region: &RegionCandidate) -> Result<(), CliError> {
    let range = region
        .glyph_range(word.len())
        .map_err(|e| CliError::usage(format!("--fixed-region for {text:?}: {e}")))?;
    if let Some(g) = word.glyphs[range].iter().find(|g| !g.morphable) {
        return Err(CliError::usage(format!(
            "--fixed-region for {text:?} includes letter {}, which has no outline",
            g.letter_index + 1
        )));
    }
    Ok(())
}

pub fn morph(args: &MorphArgs) -> Result<(), CliError> {
    check_region_args(&args.region)?;
    let words = words(args)?;
    let fixed = args
        .fixed_region
        .as_deref()
        .map(str::parse::<RegionCandidate>)
        .transpose()
        .map_err(|e| CliError::usage(e.to_string()))?;
    let concept = concept(&args.prompts)?;
    run_config(&args.run, None, "check")?;
    let scorer = setup::scorer(&args.scorer, args.run.guidance_size)?;
    let scorer = scorer.as_ref();
    std::fs::create_dir_all(&args.output_dir).map_err(|e| CliError::Stage {
        stage: "output",
        message: format!("{}: {e}", args.output_dir.display()),
    })?;

    let (expansion, prompts) = expand(&args.prompts, &concept, scorer)?;
    log::info!("objects: {}", expansion.objects.join(", "));
    let font = setup::choose_font(&args.fonts, &prompts.font_prompt, scorer)?;
    log::info!("font: {} ({})", font.id, font.path.display());

    for text in &words {
        let stem = setup::file_stem(text);
        let out = |ext: &str| args.output_dir.join(format!("{stem}.{ext}"));
        let word = setup::layout(&font.path, text, args.fonts.shaping)?;
        let base = run_config(&args.run, Some(args.output_dir.clone()), &stem)?;

        let region = match &fixed {
            Some(r) => {
                fixed_region(&word, text, r)?;
                r.clone()
            }
            None => {
                let scored = scored_regions(&word, &prompts.morph_prompts[0], scorer, &args.region, &args.run, &base)?;
                write_file(&out("regions.tsv"), &report_text(text, &scored))?;
                select_region(&scored).map_err(at("region"))?
            }
        };

        let (chosen, scores) = match args.prompts.object {
            Some(k) => (k as usize - 1, None),
            None => {
                let (best, scores) = arbitrate(&word, &prompts, scorer, args.run.guidance_size)?;
                (best, Some(scores))
            }
        };
        write_file(&out("prompts.txt"), &prompts_text(&expansion, &prompts, chosen, scores.as_deref()))?;
        write_file(&out("font.txt"), &font_text(&font))?;

        let cfg = RunConfig {
            weights: Some(weights(&args.run, region.len())?),
            ..base
        };
        let prompt = &prompts.morph_prompts[chosen];
        let outcome = run(&word, &region, prompt, &cfg, scorer).map_err(at("morph"))?;

        let svg = out("svg");
        export_svg(&outcome.word, &svg).map_err(at("export"))?;
        render(&outcome.word, args.run.canvas)
            .write_png(out("png"))
            .map_err(at("export"))?;
        let first = outcome.trace.records.first().map_or(f64::NAN, |r| r.total);
        println!(
            "{text}: font {}, region {}, prompt {:?}, loss {first:.5} -> {:.5}, wrote {}",
            font.id,
            region.label(),
            expansion.objects[chosen],
            outcome.final_terms.total,
            svg.display()
        );
    }
    Ok(())
}

pub fn regions(args: &RegionsArgs) -> Result<(), CliError> {
    check_region_args(&args.region)?;
    let concept = concept(&args.prompts)?;
    let base = run_config(&args.run, None, "regions")?;
    let scorer = setup::scorer(&args.scorer, args.run.guidance_size)?;
    let scorer = scorer.as_ref();
    let (_, prompts) = expand(&args.prompts, &concept, scorer)?;
    let font = setup::choose_font(&args.fonts, &prompts.font_prompt, scorer)?;
    let word = setup::layout(&font.path, &args.word, args.fonts.shaping)?;
    let k = args.prompts.object.map_or(0, |k| k as usize - 1);
    let scored = scored_regions(&word, &prompts.morph_prompts[k], scorer, &args.region, &args.run, &base)?;
    let report = report_text(&args.word, &scored);
    match &args.output_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(at("output"))?;
            let path = dir.join(format!("{}.regions.tsv", setup::file_stem(&args.word)));
            write_file(&path, &report)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{report}"),
    }
    let best = select_region(&scored).map_err(at("region"))?;
    eprintln!("selected region {}", best.label());
    Ok(())
}
