//! Image IO, file formats, evaluation drivers and overlays around the
//! `asj-core` detector and matcher.

pub mod config;
pub mod eval;
pub mod io;
pub mod scene_file;
pub mod schema;
pub mod svg;
