//! The `fontdb` and `render` subcommands.

use glyphmorph_core::fontdb::FontEmbeddingDB;
use glyphmorph_core::raster::render;
use glyphmorph_core::svg::import_svg;

use crate::args::{FontDbBuildArgs, FontDbListArgs, RenderArgs};
use crate::error::{at, CliError};
use crate::setup;

pub fn fontdb_build(args: &FontDbBuildArgs) -> Result<(), CliError> {
    if args.probe_text.trim().is_empty() {
        return Err(CliError::usage("--probe-text must not be empty"));
    }
    let scorer = setup::scorer(&args.scorer, glyphmorph_core::fontdb::PROBE_SIZE)?;
    let db = setup::embed_fonts(&args.fonts_dir, scorer.as_ref(), &args.probe_text)?;
    db.save(&args.output).map_err(at("font"))?;
    println!(
        "embedded {} fonts (dimension {}) into {}",
        db.len(),
        db.dim().unwrap_or(0),
        args.output.display()
    );
    Ok(())
}

pub fn fontdb_list(args: &FontDbListArgs) -> Result<(), CliError> {
    if !args.font_db.exists() {
        return Err(CliError::usage(format!("font database {} does not exist", args.font_db.display())));
    }
    let db = FontEmbeddingDB::load(&args.font_db).map_err(at("font"))?;
    println!("id\tdim\tpath");
    for e in db.entries() {
        println!("{}\t{}\t{}", e.id, e.embedding.len(), e.path.display());
    }
    Ok(())
}

pub fn render_command(args: &RenderArgs) -> Result<(), CliError> {
    if args.size == 0 {
        return Err(CliError::usage("--size must be at least 1"));
    }
    let word = match (&args.svg, &args.word, &args.font) {
        (Some(svg), _, _) => import_svg(svg).map_err(at("layout"))?,
        (None, Some(word), Some(font)) => setup::layout(font, word, args.shaping)?,
        _ => return Err(CliError::usage("pass --svg, or --word with --font")),
    };
    render(&word, args.size).write_png(&args.output).map_err(at("export"))?;
    println!("wrote {}", args.output.display());
    Ok(())
}
