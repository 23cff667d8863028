use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Morph the letters of a word into an illustration of a concept.
#[derive(Debug, Parser)]
#[command(name = "glyphmorph", version, args_override_self = true)]
pub struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline: prompts, font, region, optimization, export.
    Morph(MorphArgs),
    /// Build or inspect a font embedding database.
    #[command(subcommand)]
    Fontdb(FontDbCommand),
    /// Score every candidate region of a word and write the report.
    Regions(RegionsArgs),
    /// Rasterize an SVG or a word to PNG.
    Render(RenderArgs),
}

#[derive(Debug, Subcommand)]
pub enum FontDbCommand {
    /// Embed every font in a directory and write a FONTDB1 file.
    Build(FontDbBuildArgs),
    /// Print the entries of a FONTDB1 file.
    List(FontDbListArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Shaping {
    /// One glyph per character through the font's character map.
    Simple,
    /// The word is a list of glyph ids in left-to-right order.
    LtrIds,
    /// The word is a list of glyph ids in right-to-left order.
    RtlIds,
}

#[derive(Debug, Clone, Args)]
pub struct ScorerArgs {
    /// Guidance scorer: an http(s) URL, `mock:<target.png>` or `builtin`.
    /// Falls back to $KHATTAT_SCORER_URL.
    #[arg(long)]
    pub scorer: Option<String>,

    /// Seconds to wait for one scorer reply.
    #[arg(long, default_value_t = 120.0)]
    pub timeout: f64,

    /// Extra attempts after a timeout or transport failure.
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
}

#[derive(Debug, Clone, Args)]
pub struct FontArgs {
    /// Use this font file and skip font selection.
    #[arg(long, value_name = "FILE")]
    pub font: Option<PathBuf>,

    /// FONTDB1 file to select a font from. Built from --fonts-dir when missing.
    #[arg(long, value_name = "FILE")]
    pub font_db: Option<PathBuf>,

    /// Directory of .ttf/.otf files to embed when no database is available.
    #[arg(long, value_name = "DIR")]
    pub fonts_dir: Option<PathBuf>,

    /// Take the first font of the database instead of matching the font prompt.
    #[arg(long)]
    pub skip_font_selection: bool,

    /// How the word is turned into glyphs.
    #[arg(long, value_enum, default_value_t = Shaping::Simple)]
    pub shaping: Shaping,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Seed for every random choice of the run.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Optimization steps of the final run.
    #[arg(long, default_value_t = glyphmorph_core::optimizer::DEFAULT_ITERATIONS)]
    pub iterations: usize,

    /// Optimization steps of each region-scoring run.
    #[arg(long, default_value_t = glyphmorph_core::region::LIGHT_ITERATIONS)]
    pub light_iterations: usize,

    /// Peak learning rate, in canvas units.
    #[arg(long, default_value_t = 1.0)]
    pub learning_rate: f64,

    /// Render size of the readability branch, in pixels.
    #[arg(long, default_value_t = 600)]
    pub canvas: usize,

    /// Render size sent to the scorer, in pixels.
    #[arg(long, default_value_t = glyphmorph_core::optimizer::DEFAULT_GUIDANCE_SIZE)]
    pub guidance_size: usize,

    /// Disable crop and perspective augmentation of the guidance render.
    #[arg(long)]
    pub no_augmentation: bool,

    /// Steps between checkpoints.
    #[arg(long, default_value_t = glyphmorph_core::optimizer::DEFAULT_CHECKPOINT_INTERVAL)]
    pub checkpoint_interval: usize,

    /// Guidance weight (default 1).
    #[arg(long)]
    pub weight_sds: Option<f64>,

    /// Readability weight (default 0.5 per region letter).
    #[arg(long)]
    pub weight_ocr: Option<f64>,

    /// Conformal weight (default 0.5).
    #[arg(long)]
    pub weight_acap: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct PromptArgs {
    /// Concept to illustrate, e.g. `bird` or `freedom`.
    #[arg(long)]
    pub concept: Option<String>,

    /// Expand the concept from the bundled table instead of the scorer's language model.
    #[arg(long)]
    pub offline_prompts: bool,

    /// Concept table with lines `concept = obj1, obj2, obj3 | attr1, attr2, attr3`.
    #[arg(long, value_name = "FILE")]
    pub concept_table: Option<PathBuf>,

    /// Use object 1, 2 or 3 instead of letting the clip score choose.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub object: Option<u8>,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    /// Blend between readability (1) and semantic score (0) when ranking regions.
    #[arg(long, default_value_t = glyphmorph_core::region::DEFAULT_LAMBDA)]
    pub lambda: f64,

    /// Blend raw scores instead of z-scores.
    #[arg(long)]
    pub no_standardize: bool,

    /// Longest candidate region, in letters.
    #[arg(long)]
    pub max_region_len: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct MorphArgs {
    /// Word to morph. Repeat for several words.
    #[arg(long)]
    pub word: Vec<String>,

    /// File with one word per line.
    #[arg(long, value_name = "FILE")]
    pub wordlist: Option<PathBuf>,

    /// Morph these letters (1-based, inclusive) instead of selecting a region.
    #[arg(long, value_name = "I..J")]
    pub fixed_region: Option<String>,

    /// Directory for every output file.
    #[arg(long, default_value = "out")]
    pub output_dir: PathBuf,

    /// Flat key=value file of defaults for these flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub prompts: PromptArgs,
    #[command(flatten)]
    pub fonts: FontArgs,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[command(flatten)]
    pub region: RegionArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RegionsArgs {
    #[arg(long)]
    pub word: String,

    /// Directory for the report. Printed to stdout when absent.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,

    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub prompts: PromptArgs,
    #[command(flatten)]
    pub fonts: FontArgs,
    #[command(flatten)]
    pub scorer: ScorerArgs,
    #[command(flatten)]
    pub region: RegionArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FontDbBuildArgs {
    #[arg(long, value_name = "DIR")]
    pub fonts_dir: PathBuf,

    /// Where to write the database.
    #[arg(long, short, value_name = "FILE")]
    pub output: PathBuf,

    /// Text rendered to embed each font.
    #[arg(long, default_value = glyphmorph_core::fontdb::DEFAULT_PROBE_TEXT)]
    pub probe_text: String,

    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub scorer: ScorerArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FontDbListArgs {
    #[arg(long, value_name = "FILE")]
    pub font_db: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    /// SVG written by this tool (or any SVG of plain paths).
    #[arg(long, value_name = "FILE", conflicts_with = "word")]
    pub svg: Option<PathBuf>,

    /// Word to lay out with --font.
    #[arg(long, requires = "font")]
    pub word: Option<String>,

    #[arg(long, value_name = "FILE")]
    pub font: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = Shaping::Simple)]
    pub shaping: Shaping,

    /// Output side length in pixels.
    #[arg(long, default_value_t = 600)]
    pub size: usize,

    #[arg(long, short, value_name = "FILE")]
    pub output: PathBuf,

    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
}
